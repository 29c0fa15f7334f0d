use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FreeProductEngine, GroupElement, MarkedGroup, Syllable};
use crate::word::{Letter, Word};

/// `(x_i, a, x_i^-1)`: the factor of `x_i` and the base element `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Core {
    x_factor: usize,
    a: GroupElement,
}

/// `P = G * <x_1> * ... * <x_n> * <y_a> ... * <z_a> ...` with
/// `T = { y_a x_i a x_i^-1 z_a }`, or a planted replacement for `T`.
#[derive(Clone, Debug)]
pub struct FreeBasisInstance {
    base: MarkedGroup,
    a_set: Vec<GroupElement>,
    n: usize,
    product: MarkedGroup,
    t: Vec<Word>,
    t_names: Vec<String>,
    cores: Vec<Option<Core>>,
}

fn cyclic_factor(name: String) -> MarkedGroup {
    MarkedGroup::free_named(vec![name.clone()]).with_name(format!("<{name}>"))
}

impl FreeBasisInstance {
    pub fn new(base: &MarkedGroup, a_set: Vec<GroupElement>, n: usize) -> Result<Self> {
        let product = Self::product(base, a_set.len(), n)?;
        let r = base.rank();
        let mut t = Vec::new();
        for (k, a) in a_set.iter().enumerate() {
            let aw = base.word_of(a).expect("exact engines provide words");
            for i in 0..n {
                let x = Word::gen((r + i) as u16);
                let y = Word::gen((r + n + k) as u16);
                let z = Word::gen((r + n + a_set.len() + k) as u16);
                t.push(y.concat(&x).concat(&aw).concat(&x.inverse()).concat(&z));
            }
        }
        Self::assemble(base, a_set, n, product, t)
    }

    /// Replaces `T` by arbitrary words in `P`, e.g. a planted dependent set.
    pub fn with_words(base: &MarkedGroup, a_set: Vec<GroupElement>, n: usize, t: Vec<Word>) -> Result<Self> {
        let product = Self::product(base, a_set.len(), n)?;
        for w in &t {
            product.check_word(w)?;
        }
        Self::assemble(base, a_set, n, product, t)
    }

    /// `{t_1, t_1^2}` built from the first element of the standard `T`.
    pub fn planted_square(base: &MarkedGroup, a_set: Vec<GroupElement>, n: usize) -> Result<Self> {
        let std = Self::new(base, a_set.clone(), n)?;
        let t1 = std.t[0].clone();
        Self::with_words(base, a_set, n, vec![t1.clone(), t1.pow(2)])
    }

    fn product(base: &MarkedGroup, a_len: usize, n: usize) -> Result<MarkedGroup> {
        if n == 0 || a_len == 0 {
            return Err(Error::InvalidInput("need n >= 1 and a nonempty A".into()));
        }
        let mut factors = vec![base.clone()];
        factors.extend((1..=n).map(|i| cyclic_factor(format!("x{i}"))));
        factors.extend((1..=a_len).map(|k| cyclic_factor(format!("y{k}"))));
        factors.extend((1..=a_len).map(|k| cyclic_factor(format!("z{k}"))));
        if base.generators().iter().any(|g| {
            g.starts_with('x') || g.starts_with('y') || g.starts_with('z')
        }) {
            return Err(Error::InvalidInput("base generator names clash with x, y, z".into()));
        }
        FreeProductEngine::marked(&format!("{} * F(X) * F(Y) * F(Z)", base.name()), factors)
    }

    fn assemble(base: &MarkedGroup, a_set: Vec<GroupElement>, n: usize, product: MarkedGroup, t: Vec<Word>) -> Result<Self> {
        for (i, a) in a_set.iter().enumerate() {
            if a.is_identity() || a_set[..i].contains(a) {
                return Err(Error::InvalidInput("A must consist of distinct nontrivial elements".into()));
            }
        }
        let mut inst = FreeBasisInstance {
            base: base.clone(),
            a_set,
            n,
            product,
            t_names: (1..=t.len()).map(|i| format!("t{i}")).collect(),
            cores: Vec::new(),
            t,
        };
        inst.cores = inst.t.iter().map(|w| inst.core_of(&inst.normal_form(w))).collect();
        Ok(inst)
    }

    pub fn product_group(&self) -> &MarkedGroup {
        &self.product
    }

    pub fn base(&self) -> &MarkedGroup {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.t.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_set(&self) -> &[GroupElement] {
        &self.a_set
    }

    pub fn t_words(&self) -> &[Word] {
        &self.t
    }

    pub fn t_names(&self) -> &[String] {
        &self.t_names
    }

    fn engine(&self) -> &FreeProductEngine {
        self.product.downcast().expect("free product engine")
    }

    pub fn normal_form(&self, w: &Word) -> Vec<Syllable> {
        FreeProductEngine::decode(&self.product.evaluate_word(w))
    }

    fn x_factor(&self, f: usize) -> bool {
        (1..=self.n).contains(&f)
    }

    fn is_letter(&self, s: &Syllable, inverse: bool) -> bool {
        s.element == self.engine().factors()[s.factor].letter(Letter::new(0, inverse))
    }

    /// The core of a 5-entry normal form `(y, x_i, a, x_i^-1, z)`.
    fn core_of(&self, nf: &[Syllable]) -> Option<Core> {
        let k = self.a_set.len();
        let y = |f: usize| f > self.n && f <= self.n + k;
        let z = |f: usize| f > self.n + k;
        match nf {
            [sy, sx, sa, sx2, sz]
                if y(sy.factor)
                    && self.x_factor(sx.factor)
                    && sa.factor == 0
                    && sx2.factor == sx.factor
                    && self.is_letter(sx, false)
                    && self.is_letter(sx2, true)
                    && z(sz.factor) =>
            {
                Some(Core {
                    x_factor: sx.factor,
                    a: sa.element.clone(),
                })
            }
            _ => None,
        }
    }

    /// The letter of `T^{±1}` whose core is `(x, g, x^-1)`.
    fn letter_of_core(&self, x_factor: usize, g: &GroupElement) -> Option<Letter> {
        let inv = self.base.inverse(g);
        self.cores.iter().enumerate().find_map(|(i, c)| {
            let c = c.as_ref()?;
            if c.x_factor != x_factor {
                None
            } else if c.a == *g {
                Some(Letter::pos(i as u16))
            } else if c.a == inv {
                Some(Letter::neg(i as u16))
            } else {
                None
            }
        })
    }

    /// Core patterns `(x_i, g, x_i^-1)` matching some core of `T^{±1}`: (start, letter).
    fn core_patterns(&self, nf: &[Syllable]) -> Vec<(usize, Letter)> {
        (0..nf.len().saturating_sub(2))
            .filter_map(|i| {
                let (a, b, c) = (&nf[i], &nf[i + 1], &nf[i + 2]);
                if self.x_factor(a.factor) && b.factor == 0 && c.factor == a.factor && self.is_letter(a, false) && self.is_letter(c, true) {
                    self.letter_of_core(a.factor, &b.element).map(|l| (i, l))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Every core determines its letter of `T^{±1}`: no two cores coincide up to
    /// inverting `a` (fails when `A` has involutions or inverse pairs).
    pub fn cores_unambiguous(&self) -> bool {
        let Some(cores) = self.cores.iter().map(Option::as_ref).collect::<Option<Vec<_>>>() else {
            return false;
        };
        cores.iter().enumerate().all(|(i, c)| {
            let inv = self.base.inverse(&c.a);
            cores[i..].iter().enumerate().all(|(j, d)| {
                d.x_factor != c.x_factor || (d.a != inv && (j == 0 || d.a != c.a))
            })
        })
    }

    /// Expands a word over `T` into a word over the generators of `P`.
    pub fn expand(&self, w: &Word) -> Word {
        let mut out = Word::empty();
        for l in w.letters() {
            let t = &self.t[l.index()];
            out = out.concat(&if l.inverse { t.inverse() } else { t.clone() });
        }
        out
    }

    /// Reads a `T`-word off the core patterns of `p`; `Some` exactly when it
    /// evaluates back to `p`.
    pub fn membership_certificate(&self, p: &GroupElement) -> Option<Word> {
        let nf = FreeProductEngine::decode(p);
        let w = Word(self.core_patterns(&nf).into_iter().map(|(_, l)| l).collect());
        (self.product.evaluate_word(&self.expand(&w)) == *p).then_some(w)
    }

    pub fn format_t_word(&self, w: &Word) -> String {
        w.display_with(&self.t_names).to_string()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisCertificate {
    pub rank: usize,
    pub max_length: usize,
    /// Reduced `T`-words checked, per length `1..=max_length`.
    pub words_by_length: Vec<usize>,
    /// Normal-form length of each element of `T`.
    pub entries: Vec<usize>,
    /// Surviving cores located in the normal forms.
    pub cores_checked: usize,
    pub malnormal_samples: usize,
    pub malnormal_skipped: usize,
}

/// A normal-form entry tagged with the `(letter position, entry index)` it came
/// from while it is untouched by cancellation and consolidation.
struct Tracked {
    syl: Syllable,
    origin: Option<(usize, usize)>,
}

fn fail(reason: impl Into<String>, witness: String) -> Error {
    Error::CertificationFailed {
        reason: reason.into(),
        witness,
    }
}

/// Reduced words over `rank` letters of length exactly `len`, in shortlex order.
fn reduced_words(rank: usize, len: usize, mut visit: impl FnMut(&Word) -> Result<()>) -> Result<()> {
    fn rec(rank: usize, len: usize, cur: &mut Vec<Letter>, visit: &mut dyn FnMut(&Word) -> Result<()>) -> Result<()> {
        if cur.len() == len {
            return visit(&Word(cur.clone()));
        }
        for l in Letter::alphabet(rank) {
            if cur.last() == Some(&l.inv()) {
                continue;
            }
            cur.push(l);
            rec(rank, len, cur, visit)?;
            cur.pop();
        }
        Ok(())
    }
    rec(rank, len, &mut Vec::with_capacity(len), &mut visit)
}

fn check_word(inst: &FreeBasisInstance, w: &Word, letter_nfs: &[[Vec<Syllable>; 2]]) -> Result<usize> {
    let e = inst.engine();
    let mut stack: Vec<Tracked> = Vec::new();
    for (pos, l) in w.letters().iter().enumerate() {
        for (idx, syl) in letter_nfs[l.index()][l.inverse as usize].iter().enumerate() {
            match stack.last_mut() {
                Some(top) if top.syl.factor == syl.factor => {
                    let p = e.factors()[syl.factor].multiply(&top.syl.element, &syl.element);
                    if p.is_identity() {
                        stack.pop();
                    } else {
                        top.syl.element = p;
                        top.origin = None;
                    }
                }
                _ => stack.push(Tracked {
                    syl: syl.clone(),
                    origin: Some((pos, idx)),
                }),
            }
        }
    }
    let witness = || inst.format_t_word(w);
    let nf: Vec<Syllable> = stack.iter().map(|t| t.syl.clone()).collect();
    // the tracked reduction must agree with the engine
    if nf != inst.normal_form(&inst.expand(w)) {
        return Err(Error::invariant(format!("tracked reduction disagrees with the engine on {}", witness())));
    }
    if nf.is_empty() {
        return Err(fail("T-word evaluates to the identity", witness()));
    }
    // cores are only defined when every element of T has the 5-entry shape
    if !inst.cores.iter().all(Option::is_some) {
        return Ok(0);
    }
    let mut cores = 0;
    let mut traces = Vec::new();
    for pos in 0..w.len() {
        let at = stack.iter().position(|t| t.origin == Some((pos, 1)));
        let survives = at.is_some_and(|i| {
            i + 2 < stack.len() && stack[i + 1].origin == Some((pos, 2)) && stack[i + 2].origin == Some((pos, 3))
        });
        if !survives {
            return Err(fail(format!("core of letter {} does not survive", pos + 1), witness()));
        }
        traces.push(at.unwrap());
        cores += 1;
    }
    // every core pattern in the result is the trace of a letter with that core
    let patterns: Vec<usize> = inst.core_patterns(&nf).into_iter().map(|(i, _)| i).collect();
    if patterns != traces {
        return Err(fail("normal form has a core pattern that is not a trace", witness()));
    }
    Ok(cores)
}

fn random_element(inst: &FreeBasisInstance, rng: &mut ChaCha8Rng, max_entries: usize) -> GroupElement {
    let e = inst.engine();
    let nfactors = e.factors().len();
    let entries = rng.gen_range(1..=max_entries);
    let mut nf: Vec<Syllable> = Vec::new();
    while nf.len() < entries {
        let f = rng.gen_range(0..nfactors);
        if nf.last().is_some_and(|s| s.factor == f) {
            continue;
        }
        let g = &e.factors()[f];
        let len = rng.gen_range(1..=2);
        let w = Word((0..len).map(|_| Letter::from_code(rng.gen_range(0..2 * g.rank()))).collect());
        let el = g.evaluate_word(&w);
        if !el.is_identity() {
            nf.push(Syllable { factor: f, element: el });
        }
    }
    FreeProductEngine::encode(&nf)
}

pub fn free_basis_certify(inst: &FreeBasisInstance, max_length: usize) -> Result<BasisCertificate> {
    free_basis_certify_with(inst, max_length, 200, 0)
}

/// Freeness and core survival for every reduced `T`-word of length `<= max_length`,
/// then `samples` seeded malnormality spot checks.
pub fn free_basis_certify_with(
    inst: &FreeBasisInstance,
    max_length: usize,
    samples: usize,
    seed: u64,
) -> Result<BasisCertificate> {
    let letter_nfs: Vec<[Vec<Syllable>; 2]> = inst
        .t
        .iter()
        .map(|w| [inst.normal_form(w), inst.normal_form(&w.inverse())])
        .collect();
    let mut words_by_length = Vec::new();
    let mut cores_checked = 0;
    for len in 1..=max_length {
        let mut count = 0;
        reduced_words(inst.rank(), len, |w| {
            cores_checked += check_word(inst, w, &letter_nfs)?;
            count += 1;
            Ok(())
        })?;
        words_by_length.push(count);
    }
    let (mut done, mut skipped) = (0, 0);
    if inst.cores_unambiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while done < samples {
            let p = random_element(inst, &mut rng, 6);
            if inst.membership_certificate(&p).is_some() {
                skipped += 1;
                continue;
            }
            let pinv = inst.product.inverse(&p);
            for (i, t) in inst.t.iter().enumerate() {
                let q = inst.product.multiply(&inst.product.multiply(&p, &inst.product.evaluate_word(t)), &pinv);
                if let Some(w) = inst.membership_certificate(&q) {
                    return Err(fail(
                        format!("p t{} p^-1 = {} lies in <T> for p outside <T>", i + 1, inst.format_t_word(&w)),
                        inst.product.describe(&p),
                    ));
                }
            }
            done += 1;
        }
    }
    Ok(BasisCertificate {
        rank: inst.rank(),
        max_length,
        words_by_length,
        entries: letter_nfs.iter().map(|n| n[0].len()).collect(),
        cores_checked,
        malnormal_samples: done,
        malnormal_skipped: skipped,
    })
}
