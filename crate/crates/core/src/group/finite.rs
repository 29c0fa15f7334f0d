//! Finite groups: coset enumeration and complete multiplication tables.

use std::collections::VecDeque;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::{EngineKind, GroupElement, GroupEngine, MarkedGroup};
use crate::error::{Error, Result};
use crate::word::{reduce_word, Letter, Word};

pub const DEFAULT_COSET_CAP: usize = 1_000_000;

/// Above this order no full multiplication table is stored.
const FULL_TABLE_MAX: usize = 2048;

/// `<generators | relators>` with nonempty reduced relators.
#[derive(Clone, Debug)]
pub struct FinitePresentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
}

impl FinitePresentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("presentation without generators".into()));
        }
        let mut rels = Vec::with_capacity(relators.len());
        for r in relators {
            if let Some(g) = r.max_generator() {
                if g as usize >= generators.len() {
                    return Err(Error::InvalidInput(format!("relator uses generator {g}")));
                }
            }
            let r = reduce_word(&r);
            if r.is_empty() {
                return Err(Error::InvalidInput("relator reduces to the empty word".into()));
            }
            if !rels.contains(&r) {
                rels.push(r);
            }
        }
        Ok(FinitePresentation {
            generators,
            relators: rels,
        })
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }
}

const UNDEF: u32 = u32::MAX;

/// HLT coset enumeration over the trivial subgroup, with coincidence handling.
struct Enumerator<'a> {
    cols: usize,
    table: Vec<u32>,
    parent: Vec<u32>,
    rels: &'a [Vec<usize>],
    cap: usize,
    queue: Vec<u32>,
}

impl<'a> Enumerator<'a> {
    fn new(cols: usize, rels: &'a [Vec<usize>], cap: usize) -> Self {
        Enumerator {
            cols,
            table: vec![UNDEF; cols],
            parent: vec![0],
            rels,
            cap,
            queue: Vec::new(),
        }
    }

    fn count(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    fn get(&self, c: u32, x: usize) -> u32 {
        self.table[c as usize * self.cols + x]
    }

    #[inline]
    fn set(&mut self, c: u32, x: usize, v: u32) {
        self.table[c as usize * self.cols + x] = v;
    }

    fn define(&mut self, c: u32, x: usize) -> Result<()> {
        if self.count() >= self.cap {
            return Err(Error::resource(
                "coset table did not close (group possibly infinite or bound too small)",
                self.cap,
            ));
        }
        let b = self.count() as u32;
        self.parent.push(b);
        self.table.extend(std::iter::repeat_n(UNDEF, self.cols));
        self.set(c, x, b);
        self.set(b, x ^ 1, c);
        Ok(())
    }

    fn rep(&mut self, c: u32) -> u32 {
        let mut r = c;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut k = c;
        while self.parent[k as usize] != r {
            let next = self.parent[k as usize];
            self.parent[k as usize] = r;
            k = next;
        }
        r
    }

    fn merge(&mut self, k: u32, l: u32) {
        let (a, b) = (self.rep(k), self.rep(l));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            self.parent[hi as usize] = lo;
            self.queue.push(hi);
        }
    }

    fn coincidence(&mut self, a: u32, b: u32) {
        self.queue.clear();
        self.merge(a, b);
        let mut i = 0;
        while i < self.queue.len() {
            let g = self.queue[i];
            i += 1;
            for x in 0..self.cols {
                let d = self.get(g, x);
                if d == UNDEF {
                    continue;
                }
                self.set(d, x ^ 1, UNDEF);
                let mu = self.rep(g);
                let nu = self.rep(d);
                if self.get(mu, x) != UNDEF {
                    let t = self.get(mu, x);
                    self.merge(nu, t);
                } else if self.get(nu, x ^ 1) != UNDEF {
                    let t = self.get(nu, x ^ 1);
                    self.merge(mu, t);
                } else {
                    self.set(mu, x, nu);
                    self.set(nu, x ^ 1, mu);
                }
            }
        }
    }

    fn scan_and_fill(&mut self, alpha: u32, w: &[usize]) -> Result<()> {
        let mut f = alpha;
        let mut b = alpha;
        let mut i = 0usize;
        let mut j = w.len();
        loop {
            while i < j && self.get(f, w[i]) != UNDEF {
                f = self.get(f, w[i]);
                i += 1;
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j > i && self.get(b, w[j - 1] ^ 1) != UNDEF {
                b = self.get(b, w[j - 1] ^ 1);
                j -= 1;
            }
            if j == i {
                self.coincidence(f, b);
                return Ok(());
            } else if j == i + 1 {
                self.set(f, w[i], b);
                self.set(b, w[i] ^ 1, f);
                return Ok(());
            } else {
                self.define(f, w[i])?;
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        let mut alpha = 0u32;
        while (alpha as usize) < self.count() {
            if self.parent[alpha as usize] == alpha {
                for r in 0..self.rels.len() {
                    let rel = self.rels[r].clone();
                    self.scan_and_fill(alpha, &rel)?;
                    if self.parent[alpha as usize] != alpha {
                        break;
                    }
                }
                if self.parent[alpha as usize] == alpha {
                    for x in 0..self.cols {
                        if self.get(alpha, x) == UNDEF {
                            self.define(alpha, x)?;
                        }
                    }
                }
            }
            alpha += 1;
        }
        Ok(())
    }
}

/// Complete finite group: right action of every letter on element indices.
///
/// Element `0` is the identity; element `i` is represented by the shortlex-least
/// word `reps[i]` (letters ordered `x1, x1^-1, x2, ...`).
#[derive(Clone, Debug)]
pub struct FiniteTable {
    rank: usize,
    action: Vec<u32>,
    reps: Vec<Word>,
    inverse: Vec<u32>,
    full: Option<Vec<u32>>,
    relators: Option<Vec<Word>>,
}

impl FiniteTable {
    /// Builds the standardized table from a closed right action on `n` points
    /// with base point `0`.
    fn from_action(rank: usize, n: usize, act: impl Fn(usize, usize) -> usize, relators: Option<Vec<Word>>) -> Self {
        let cols = 2 * rank;
        let mut order = vec![u32::MAX; n];
        let mut reps: Vec<Word> = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        order[0] = 0;
        reps.push(Word::empty());
        queue.push_back(0usize);
        let mut by_new: Vec<usize> = vec![0];
        while let Some(c) = queue.pop_front() {
            let rep = reps[order[c] as usize].clone();
            for x in 0..cols {
                let d = act(c, x);
                if order[d] == u32::MAX {
                    order[d] = reps.len() as u32;
                    let mut w = rep.clone();
                    w.0.push(Letter::from_code(x));
                    reps.push(w);
                    by_new.push(d);
                    queue.push_back(d);
                }
            }
        }
        let size = reps.len();
        let mut action = vec![0u32; size * cols];
        for (new, &old) in by_new.iter().enumerate() {
            for x in 0..cols {
                action[new * cols + x] = order[act(old, x)];
            }
        }
        let mut t = FiniteTable {
            rank,
            action,
            reps,
            inverse: Vec::new(),
            full: None,
            relators,
        };
        t.inverse = (0..size)
            .map(|i| t.apply(0, &t.reps[i].inverse()))
            .collect();
        if size <= FULL_TABLE_MAX {
            let mut full = vec![0u32; size * size];
            for a in 0..size {
                for b in 0..size {
                    full[a * size + b] = t.apply(a as u32, &t.reps[b]);
                }
            }
            t.full = Some(full);
        }
        t
    }

    /// Tabulates any engine that is finite within `cap` elements.
    pub fn from_marked(g: &MarkedGroup, cap: usize) -> Result<Self> {
        let m = g.rank();
        let mut index: FxHashMap<GroupElement, usize> = FxHashMap::default();
        let mut elems = vec![GroupElement::identity()];
        index.insert(GroupElement::identity(), 0);
        let mut act: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < elems.len() {
            for l in Letter::alphabet(m) {
                let h = g.engine().mul_letter(&elems[i], l);
                let j = match index.get(&h) {
                    Some(&j) => j,
                    None => {
                        if elems.len() >= cap {
                            return Err(Error::resource("finite tabulation", cap));
                        }
                        index.insert(h.clone(), elems.len());
                        elems.push(h);
                        elems.len() - 1
                    }
                };
                act.push(j);
            }
            i += 1;
        }
        let cols = 2 * m;
        Ok(Self::from_action(
            m,
            elems.len(),
            |c, x| act[c * cols + x],
            g.engine().defining_relators(),
        ))
    }

    pub fn order(&self) -> usize {
        self.reps.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn act(&self, c: u32, l: Letter) -> u32 {
        self.action[c as usize * 2 * self.rank + l.code()]
    }

    pub fn apply(&self, c: u32, w: &Word) -> u32 {
        w.letters().iter().fold(c, |acc, &l| self.act(acc, l))
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match &self.full {
            Some(t) => t[a as usize * self.order() + b as usize],
            None => self.apply(a, &self.reps[b as usize]),
        }
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    pub fn rep(&self, a: u32) -> &Word {
        &self.reps[a as usize]
    }

    pub fn element_index(g: &GroupElement) -> u32 {
        let b = g.as_bytes();
        if b.is_empty() {
            0
        } else {
            u32::from_le_bytes(b.try_into().expect("finite element encoding"))
        }
    }

    pub fn element(i: u32) -> GroupElement {
        if i == 0 {
            GroupElement::identity()
        } else {
            GroupElement::from_bytes(i.to_le_bytes().to_vec())
        }
    }

    /// Smallest `k >= 1` with `a^k = 1`.
    pub fn element_order(&self, a: u32) -> usize {
        let mut k = 1;
        let mut p = a;
        while p != 0 {
            p = self.mul(p, a);
            k += 1;
        }
        k
    }

    /// Checks every relator acts trivially at every point and the action is a permutation.
    pub fn verify(&self, relators: &[Word]) -> Result<()> {
        let n = self.order() as u32;
        for c in 0..n {
            for l in Letter::alphabet(self.rank) {
                if self.act(self.act(c, l), l.inv()) != c {
                    return Err(Error::invariant("coset table is not a permutation action"));
                }
            }
            for r in relators {
                if self.apply(c, r) != c {
                    return Err(Error::invariant("relator acts nontrivially on the coset table"));
                }
            }
        }
        Ok(())
    }
}

impl GroupEngine for FiniteTable {
    fn kind(&self) -> EngineKind {
        EngineKind::CosetTable
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        Self::element(self.act(Self::element_index(g), letter))
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        Self::element(self.mul(Self::element_index(a), Self::element_index(b)))
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        Self::element(self.inv(Self::element_index(g)))
    }

    fn order(&self) -> Option<usize> {
        Some(self.reps.len())
    }

    fn defining_relators(&self) -> Option<Vec<Word>> {
        self.relators.clone()
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        Some(self.reps[Self::element_index(g) as usize].clone())
    }
}

/// Enumerates cosets of the trivial subgroup. Fails with `ResourceExceeded`
/// when more than `bound` cosets are defined before the table closes.
pub fn coset_enumerate(p: &FinitePresentation, bound: usize) -> Result<FiniteTable> {
    if bound == 0 {
        return Err(Error::InvalidInput("coset bound must be at least 1".into()));
    }
    let cols = 2 * p.rank();
    let rels: Vec<Vec<usize>> = p
        .relators
        .iter()
        .map(|r| r.letters().iter().map(|l| l.code()).collect())
        .collect();
    let mut e = Enumerator::new(cols, &rels, bound);
    e.run()?;
    let live: Vec<u32> = (0..e.count() as u32)
        .filter(|&c| e.parent[c as usize] == c)
        .collect();
    let mut pos = vec![u32::MAX; e.count()];
    for (i, &c) in live.iter().enumerate() {
        pos[c as usize] = i as u32;
    }
    let mut act = vec![0usize; live.len() * cols];
    for (i, &c) in live.iter().enumerate() {
        for x in 0..cols {
            let d = e.get(c, x);
            if d == UNDEF {
                return Err(Error::invariant("coset table closed with undefined entries"));
            }
            let d = e.rep(d);
            act[i * cols + x] = pos[d as usize] as usize;
        }
    }
    let t = FiniteTable::from_action(
        p.rank(),
        live.len(),
        |c, x| act[c * cols + x],
        Some(p.relators.clone()),
    );
    t.verify(&p.relators)?;
    Ok(t)
}

/// Marked coset-table group from a presentation.
pub fn finite_group(name: &str, p: &FinitePresentation, bound: usize) -> Result<MarkedGroup> {
    let t = coset_enumerate(p, bound)?;
    MarkedGroup::new(name, p.generators.clone(), Arc::new(t))
}

/// Outcome of the self-validating exponent-law enumeration.
#[derive(Clone, Debug)]
pub struct BurnsideReport {
    pub order: usize,
    pub relators: usize,
    pub augmentations: usize,
}

/// Finite quotient of `F_rank` by `w^exponent` for all words of length
/// `<= word_length`, re-enumerated with extra relators until every element
/// satisfies `g^exponent = 1`.
pub fn burnside_group(
    rank: usize,
    exponent: u32,
    word_length: usize,
    bound: usize,
) -> Result<(MarkedGroup, BurnsideReport)> {
    if exponent < 2 {
        return Err(Error::InvalidInput("exponent must be at least 2".into()));
    }
    let names: Vec<String> = if rank <= 3 {
        ["a", "b", "c"][..rank].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=rank).map(|i| format!("x{i}")).collect()
    };
    let mut relators: Vec<Word> = Vec::new();
    let mut frontier = vec![Word::empty()];
    for _ in 0..word_length {
        let mut next = Vec::new();
        for w in &frontier {
            for l in Letter::alphabet(rank) {
                if w.letters().last() == Some(&l.inv()) {
                    continue;
                }
                let mut v = w.clone();
                v.0.push(l);
                let r = reduce_word(&v.pow(exponent as i64));
                if !r.is_empty() && !relators.contains(&r) && !relators.contains(&r.inverse()) {
                    relators.push(r);
                }
                next.push(v);
            }
        }
        frontier = next;
    }
    let mut augmentations = 0;
    loop {
        let p = FinitePresentation::new(names.clone(), relators.clone())?;
        let t = coset_enumerate(&p, bound)?;
        let offending = (0..t.order() as u32).find(|&g| {
            let mut p = 0u32;
            for _ in 0..exponent {
                p = t.mul(p, g);
            }
            p != 0
        });
        match offending {
            None => {
                let report = BurnsideReport {
                    order: t.order(),
                    relators: relators.len(),
                    augmentations,
                };
                let name = format!("B({rank},{exponent})");
                return Ok((MarkedGroup::new(name, names, Arc::new(t))?, report));
            }
            Some(g) => {
                relators.push(reduce_word(&t.rep(g).pow(exponent as i64)));
                augmentations += 1;
                if augmentations > 64 {
                    return Err(Error::resource("exponent-law augmentation rounds", 64));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pres(gens: &[&str], rels: &str) -> FinitePresentation {
        let g: Vec<String> = gens.iter().map(|s| s.to_string()).collect();
        let r = crate::syntax::parse_relators(rels, &g).unwrap();
        FinitePresentation::new(g, r).unwrap()
    }

    #[test]
    fn cyclic_of_order_three() {
        let t = coset_enumerate(&pres(&["x"], "x^3"), 100).unwrap();
        assert_eq!(t.order(), 3);
    }

    #[test]
    fn symmetric_group_s3() {
        let t = coset_enumerate(&pres(&["a", "b"], "a^2 b^2 (a b)^3"), 100).unwrap();
        assert_eq!(t.order(), 6);
        // S3 has exactly 3 involutions and 2 elements of order 3
        let orders: Vec<usize> = (0..6).map(|g| t.element_order(g)).collect();
        assert_eq!(orders.iter().filter(|&&o| o == 2).count(), 3);
        assert_eq!(orders.iter().filter(|&&o| o == 3).count(), 2);
        // nonabelian
        let a = t.act(0, Letter::pos(0));
        let b = t.act(0, Letter::pos(1));
        assert_ne!(t.mul(a, b), t.mul(b, a));
    }

    #[test]
    fn larger_presentations_close() {
        // A5 as the (2,3,5) triangle group
        let t = coset_enumerate(&pres(&["a", "b"], "a^2 b^3 (a b)^5"), 10_000).unwrap();
        assert_eq!(t.order(), 60);
        // Klein four
        let t = coset_enumerate(&pres(&["a", "b"], "a^2, b^2, a b a^-1 b^-1"), 100).unwrap();
        assert_eq!(t.order(), 4);
        // quaternion group
        let t = coset_enumerate(&pres(&["i", "j"], "i^4, i^2 j^-2, j^-1 i j i"), 100).unwrap();
        assert_eq!(t.order(), 8);
    }

    #[test]
    fn burnside_exponent_three() {
        let (g, report) = burnside_group(2, 3, 2, DEFAULT_COSET_CAP).unwrap();
        assert_eq!(report.order, 27);
        assert_eq!(g.order(), Some(27));
        let t = FiniteTable::from_marked(&g, 100).unwrap();
        for e in 0..27u32 {
            assert_eq!(t.mul(e, t.mul(e, e)), 0);
        }
    }

    #[test]
    fn infinite_group_hits_bound() {
        let r = coset_enumerate(&pres(&["a", "b"], "[a, b]"), 500);
        assert!(matches!(r, Err(Error::ResourceExceeded { .. })));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let p = pres(&["a", "b"], "a^2 b^3 (a b)^5");
        let t1 = coset_enumerate(&p, 10_000).unwrap();
        let t2 = coset_enumerate(&p, 10_000).unwrap();
        assert_eq!(t1.action, t2.action);
        assert_eq!(t1.reps, t2.reps);
    }

    #[test]
    fn tabulating_another_engine() {
        let k4 = MarkedGroup::abelian(&[2, 2]);
        let t = FiniteTable::from_marked(&k4, 10).unwrap();
        assert_eq!(t.order(), 4);
        assert!(FiniteTable::from_marked(&MarkedGroup::free(1), 10).is_err());
    }

    #[test]
    fn rejects_trivial_relators() {
        let g = vec!["a".to_string()];
        assert!(FinitePresentation::new(g, vec![Word(vec![Letter::pos(0), Letter::neg(0)])]).is_err());
    }
}
