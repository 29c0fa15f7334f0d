//! Letters and words over a generating tuple `X` and its inverses.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A generator or the inverse of a generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub generator: u16,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(generator: u16, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub const fn pos(generator: u16) -> Self {
        Letter::new(generator, false)
    }

    pub const fn neg(generator: u16) -> Self {
        Letter::new(generator, true)
    }

    pub fn inv(self) -> Self {
        Letter::new(self.generator, !self.inverse)
    }

    pub fn index(self) -> usize {
        self.generator as usize
    }

    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    /// Dense code `2 * generator + inverse`, used to index per-letter tables.
    pub fn code(self) -> usize {
        2 * self.generator as usize + self.inverse as usize
    }

    pub fn from_code(code: usize) -> Self {
        Letter::new((code / 2) as u16, code % 2 == 1)
    }

    /// All `2m` letters of a rank-`m` alphabet in code order.
    pub fn alphabet(rank: usize) -> impl Iterator<Item = Letter> {
        (0..2 * rank).map(Letter::from_code)
    }
}

/// A finite sequence of letters. Not necessarily freely reduced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(letter: Letter) -> Self {
        Word(vec![letter])
    }

    pub fn gen(generator: u16) -> Self {
        Word::letter(Letter::pos(generator))
    }

    pub fn from_signed(exponents: &[(u16, i64)]) -> Self {
        let mut out = Vec::new();
        for &(g, e) in exponents {
            let l = Letter::new(g, e < 0);
            out.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
        }
        Word(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v)
    }

    /// `u v u^-1 v^-1`.
    pub fn commutator(u: &Word, v: &Word) -> Word {
        u.concat(v).concat(&u.inverse()).concat(&v.inverse())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inv())
    }

    /// Free reduction.
    pub fn reduced(&self) -> Word {
        reduce_word(self)
    }

    /// Sum of exponents of letters with the given generator.
    pub fn exponent_sum(&self, generator: u16) -> i64 {
        self.0
            .iter()
            .filter(|l| l.generator == generator)
            .map(|l| l.sign())
            .sum()
    }

    pub fn max_generator(&self) -> Option<u16> {
        self.0.iter().map(|l| l.generator).max()
    }

    /// Renders with the given generator names, e.g. `a b^-1 a^2`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> DisplayWord<'a> {
        DisplayWord { word: self, names }
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

/// Stack-based free reduction. Idempotent; never increases length.
pub fn reduce_word(w: &Word) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in &w.0 {
        if out.last() == Some(&l.inv()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Word(out)
}

pub struct DisplayWord<'a> {
    word: &'a Word,
    names: &'a [String],
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return f.write_str("1");
        }
        // group runs of equal letters into powers
        let letters = self.word.letters();
        let mut i = 0;
        let mut first = true;
        while i < letters.len() {
            let l = letters[i];
            let mut j = i;
            while j < letters.len() && letters[j] == l {
                j += 1;
            }
            let run = (j - i) as i64 * l.sign();
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let name = self
                .names
                .get(l.index())
                .map(String::as_str)
                .unwrap_or("?");
            if run == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{run}")?;
            }
            i = j;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Letter {
        Letter::pos(0)
    }
    fn a() -> Letter {
        Letter::pos(0)
    }
    fn b() -> Letter {
        Letter::pos(1)
    }

    #[test]
    fn cancellation() {
        let w = Word(vec![x(), x().inv()]);
        assert!(reduce_word(&w).is_empty());
    }

    #[test]
    fn inner_cancellation() {
        let w = Word(vec![a(), b(), b().inv(), a()]);
        assert_eq!(reduce_word(&w), Word(vec![a(), a()]));
    }

    #[test]
    fn reduced_word_is_fixed() {
        let w = Word(vec![a(), b(), a().inv(), b().inv()]);
        assert!(w.is_reduced());
        assert_eq!(reduce_word(&w), w);
    }

    #[test]
    fn display_groups_powers() {
        let names = vec!["a".to_string(), "b".to_string()];
        let w = Word(vec![a(), a(), b().inv(), a()]);
        assert_eq!(w.display_with(&names).to_string(), "a^2 b^-1 a");
        assert_eq!(Word::empty().display_with(&names).to_string(), "1");
    }

    #[test]
    fn commutator_shape() {
        let u = Word::gen(0).pow(2);
        let v = Word::gen(1).pow(2);
        let c = Word::commutator(&u, &v);
        assert_eq!(c.len(), 8);
        assert_eq!(c.exponent_sum(0), 0);
        assert!(c.is_reduced());
    }

    use proptest::prelude::*;

    fn arb_word(rank: u16, max_len: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec((0..rank, any::<bool>()), 0..max_len)
            .prop_map(|v| Word(v.into_iter().map(|(g, i)| Letter::new(g, i)).collect()))
    }

    proptest! {
        #[test]
        fn reduction_is_idempotent_and_shrinking(w in arb_word(3, 24)) {
            let r = reduce_word(&w);
            prop_assert!(r.len() <= w.len());
            prop_assert!(r.is_reduced());
            prop_assert_eq!(reduce_word(&r), r.clone());
            for g in 0..3 {
                prop_assert_eq!(r.exponent_sum(g), w.exponent_sum(g));
            }
        }

        #[test]
        fn inverse_cancels(w in arb_word(3, 16)) {
            prop_assert!(reduce_word(&w.concat(&w.inverse())).is_empty());
        }
    }
}
