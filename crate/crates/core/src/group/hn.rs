//! The HNN extensions `H_n = <t, a_-n..a_n | t^-1 a_k t = a_(k+1), a_i^2, [a_i, a_j]>`.
//!
//! The base is `A = Z_2^(2n+1)`, stored as a bitmask with bit `j + n` for `a_j`.
//! Conjugation by `t` maps `K = <a_-n..a_(n-1)>` onto `K' = <a_(-n+1)..a_n>`
//! by shifting every bit up by one.

use std::sync::Arc;

use super::{EngineKind, GroupElement, GroupEngine, MarkedGroup};
use crate::error::{Error, Result};
use crate::word::{Letter, Word};

/// Largest supported `n` (the base must fit in a `u64`).
pub const HN_MAX_RANK: usize = 31;

/// Normal form `h0 t^e1 r1 ... t^ek rk` with `r_i` in the fixed transversal
/// `{1, a_-n}` after `t` and `{1, a_n}` after `t^-1`.
///
/// Bytes: `h0` as `u64` le, then one byte per syllable (bit 0: `e = -1`,
/// bit 1: `r` nontrivial). The identity is empty.
#[derive(Debug, Clone)]
pub struct HnEngine {
    n: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Normal {
    h0: u64,
    syl: Vec<(bool, bool)>, // (inverse t, r nontrivial)
}

impl HnEngine {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > HN_MAX_RANK {
            return Err(Error::InvalidInput(format!("hn rank must be in 1..={HN_MAX_RANK}")));
        }
        Ok(HnEngine { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `t, a_-n, ..., a_n`.
    pub fn generator_names(n: usize) -> Vec<String> {
        let mut v = vec!["t".to_string()];
        for j in -(n as i64)..=n as i64 {
            v.push(format!("a_{j}"));
        }
        v
    }

    pub fn marked(n: usize) -> Result<MarkedGroup> {
        MarkedGroup::new(format!("H_{n}"), Self::generator_names(n), Arc::new(Self::new(n)?))
    }

    /// Generator index of `a_j`.
    pub fn a(&self, j: i64) -> u16 {
        assert!(j.unsigned_abs() as usize <= self.n);
        (1 + j + self.n as i64) as u16
    }

    pub fn t(&self) -> u16 {
        0
    }

    /// The defining relators, exactly as in the presentation.
    pub fn relators(&self) -> Vec<Word> {
        let n = self.n as i64;
        let t = Word::gen(self.t());
        let mut rels = Vec::new();
        for k in -n..n {
            let lhs = t.inverse().concat(&Word::gen(self.a(k))).concat(&t);
            rels.push(lhs.concat(&Word::gen(self.a(k + 1)).inverse()));
        }
        for i in -n..=n {
            rels.push(Word::gen(self.a(i)).pow(2));
        }
        for i in -n..=n {
            for j in i + 1..=n {
                rels.push(Word::commutator(&Word::gen(self.a(i)), &Word::gen(self.a(j))));
            }
        }
        rels
    }

    fn top(&self) -> u64 {
        1 << (2 * self.n)
    }

    fn bit(&self, generator: u16) -> u64 {
        1 << (generator - 1)
    }

    fn decode(&self, g: &GroupElement) -> Normal {
        let b = g.as_bytes();
        if b.is_empty() {
            return Normal { h0: 0, syl: Vec::new() };
        }
        Normal {
            h0: u64::from_le_bytes(b[..8].try_into().unwrap()),
            syl: b[8..].iter().map(|&x| (x & 1 == 1, x & 2 == 2)).collect(),
        }
    }

    fn encode(&self, nf: &Normal) -> GroupElement {
        if nf.h0 == 0 && nf.syl.is_empty() {
            return GroupElement::identity();
        }
        let mut v = nf.h0.to_le_bytes().to_vec();
        v.extend(nf.syl.iter().map(|&(inv, r)| inv as u8 | (r as u8) << 1));
        GroupElement::from_bytes(v)
    }

    /// Transversal bit after `t^e`.
    fn rep_bit(&self, inverse: bool) -> u64 {
        if inverse {
            self.top()
        } else {
            1
        }
    }

    /// Right-multiplies by the base element `x`, pushing the associated-subgroup
    /// part leftward through the t-syllables.
    fn mul_base(&self, nf: &mut Normal, mut x: u64) {
        for i in (0..nf.syl.len()).rev() {
            if x == 0 {
                return;
            }
            let (inv, r) = nf.syl[i];
            let rb = self.rep_bit(inv);
            let full = if r { rb } else { 0 } ^ x;
            nf.syl[i].1 = full & rb != 0;
            let rest = full & !rb;
            // t u' = u t with u' in K'; t^-1 u = u' t^-1 with u in K
            x = if inv { rest << 1 } else { rest >> 1 };
        }
        nf.h0 ^= x;
    }

    fn mul_t(&self, nf: &mut Normal, inverse: bool) {
        if let Some(&(last_inv, r)) = nf.syl.last() {
            if !r && last_inv != inverse {
                nf.syl.pop();
                return;
            }
        }
        nf.syl.push((inverse, false));
    }

    fn apply(&self, nf: &mut Normal, l: Letter) {
        if l.generator == 0 {
            self.mul_t(nf, l.inverse);
        } else {
            self.mul_base(nf, self.bit(l.generator));
        }
    }

    fn base_word(&self, mut x: u64) -> Vec<Letter> {
        let mut v = Vec::new();
        while x != 0 {
            let b = x.trailing_zeros() as u16;
            v.push(Letter::pos(b + 1));
            x &= x - 1;
        }
        v
    }

    fn word_of_normal(&self, nf: &Normal) -> Word {
        let mut w = self.base_word(nf.h0);
        for &(inv, r) in &nf.syl {
            w.push(Letter::new(0, inv));
            if r {
                w.extend(self.base_word(self.rep_bit(inv)));
            }
        }
        Word(w)
    }

    /// Number of `t^{+-1}` letters in the normal form of `g`.
    pub fn t_length(&self, g: &GroupElement) -> usize {
        self.decode(g).syl.len()
    }
}

impl GroupEngine for HnEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Hn
    }

    fn rank(&self) -> usize {
        2 * self.n + 2
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        let mut nf = self.decode(g);
        self.apply(&mut nf, letter);
        self.encode(&nf)
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut nf = self.decode(a);
        for &l in self.word_of_normal(&self.decode(b)).letters() {
            self.apply(&mut nf, l);
        }
        self.encode(&nf)
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        let mut nf = Normal { h0: 0, syl: Vec::new() };
        for &l in self.word_of_normal(&self.decode(g)).inverse().letters() {
            self.apply(&mut nf, l);
        }
        self.encode(&nf)
    }

    fn defining_relators(&self) -> Option<Vec<Word>> {
        Some(self.relators())
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        Some(self.word_of_normal(&self.decode(g)))
    }
}

/// Britton-reduced form: base blocks `b0 t^e1 b1 ... t^ek bk` with no pinch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrittonForm {
    /// Base-group blocks as bitmasks; always one more than `exponents`.
    pub blocks: Vec<u64>,
    /// `+1` or `-1` per t-syllable.
    pub exponents: Vec<i8>,
}

impl BrittonForm {
    pub fn t_syllables(&self) -> usize {
        self.exponents.len()
    }

    pub fn t_exponent_sum(&self) -> i64 {
        self.exponents.iter().map(|&e| e as i64).sum()
    }

    /// Britton's lemma: trivial iff no t-syllables survive and the base part is trivial.
    pub fn is_identity(&self) -> bool {
        self.exponents.is_empty() && self.blocks[0] == 0
    }

    /// Whether the element lies in the base group `A_n`.
    pub fn in_base(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn to_word(&self) -> Word {
        let mut w = Vec::new();
        for (i, &b) in self.blocks.iter().enumerate() {
            if i > 0 {
                w.push(Letter::new(0, self.exponents[i - 1] < 0));
            }
            let mut x = b;
            while x != 0 {
                w.push(Letter::pos(x.trailing_zeros() as u16 + 1));
                x &= x - 1;
            }
        }
        Word(w)
    }
}

/// Stack-based pinch elimination. Works on the word directly and shares no
/// code with the engine's normal form.
pub fn britton_reduce(h: &HnEngine, w: &Word) -> BrittonForm {
    let n = h.n;
    let top = 1u64 << (2 * n);
    let mut blocks = vec![0u64];
    let mut exps: Vec<i8> = Vec::new();
    for &l in w.letters() {
        if l.generator != 0 {
            *blocks.last_mut().unwrap() ^= 1 << (l.generator - 1);
            continue;
        }
        let e: i8 = if l.inverse { -1 } else { 1 };
        let u = *blocks.last().unwrap();
        let pinch = match exps.last() {
            // t^-1 u t with u in K
            Some(-1) if e == 1 && u & top == 0 => Some(u << 1),
            // t u t^-1 with u in K'
            Some(1) if e == -1 && u & 1 == 0 => Some(u >> 1),
            _ => None,
        };
        match pinch {
            Some(v) => {
                blocks.pop();
                exps.pop();
                *blocks.last_mut().unwrap() ^= v;
            }
            None => {
                exps.push(e);
                blocks.push(0);
            }
        }
    }
    BrittonForm {
        blocks,
        exponents: exps,
    }
}

/// Equality in `H_n` decided by Britton reduction of `u v^-1`.
pub fn britton_equal(h: &HnEngine, u: &Word, v: &Word) -> bool {
    britton_reduce(h, &u.concat(&v.inverse())).is_identity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::{arb_word, check_engine_laws};
    use proptest::prelude::*;

    #[test]
    fn conjugation_shifts_index() {
        let g = HnEngine::marked(1).unwrap();
        let h = g.downcast::<HnEngine>().unwrap();
        let w = g.parse_word("t^-1 a_-1 t").unwrap();
        assert_eq!(g.evaluate_word(&w), g.parse_element("a_0").unwrap());
        let bf = britton_reduce(h, &w);
        assert_eq!(bf.to_word(), g.parse_word("a_0").unwrap());
        let w = g.parse_word("t^-1 a_1 t").unwrap();
        let bf = britton_reduce(h, &w);
        assert_eq!(bf.t_syllables(), 2);
        assert!(!bf.is_identity());
        assert!(!g.is_identity_word(&w));
    }

    #[test]
    fn relators_are_trivial() {
        for n in 1..=3 {
            let g = HnEngine::marked(n).unwrap();
            let h = g.downcast::<HnEngine>().unwrap();
            assert_eq!(h.relators().len(), 2 * n + (2 * n + 1) + n * (2 * n + 1));
            for r in h.relators() {
                assert!(g.is_identity_word(&r), "{}", g.format_word(&r));
                assert!(britton_reduce(h, &r).is_identity());
            }
        }
    }

    #[test]
    fn far_conjugates_leave_the_base() {
        let g = HnEngine::marked(1).unwrap();
        let h = g.downcast::<HnEngine>().unwrap();
        for j in -1..=1 {
            let w = Word::gen(0)
                .pow(-3)
                .concat(&Word::gen(h.a(j)))
                .concat(&Word::gen(0).pow(3));
            let bf = britton_reduce(h, &w);
            assert!(bf.t_syllables() > 0);
            assert!(h.t_length(&g.evaluate_word(&w)) > 0);
        }
    }

    proptest! {
        #[test]
        fn engine_laws(u in arb_word(4, 16), v in arb_word(4, 16)) {
            check_engine_laws(&HnEngine::marked(1).unwrap(), &u, &v);
        }

        #[test]
        fn britton_agrees_with_engine(u in arb_word(6, 18), v in arb_word(6, 18)) {
            let g = HnEngine::marked(2).unwrap();
            let h = g.downcast::<HnEngine>().unwrap();
            let same = g.evaluate_word(&u) == g.evaluate_word(&v);
            prop_assert_eq!(same, britton_equal(h, &u, &v));
            let bf = britton_reduce(h, &u);
            prop_assert_eq!(bf.t_exponent_sum(), u.exponent_sum(0));
            prop_assert_eq!(g.evaluate_word(&bf.to_word()), g.evaluate_word(&u));
        }
    }
}
