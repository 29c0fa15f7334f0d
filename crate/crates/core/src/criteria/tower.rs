use std::collections::BTreeSet;

use serde::Serialize;

use crate::cogrowth::girth;
use crate::error::{Error, Result};
use crate::group::{metabelian_is_trivial, MarkedGroup, MetabelianEngine};
use crate::word::{Letter, Word};

/// One step of the tower `F/N -> F/[N,N]` for a finite `F/N`, with the kernel of
/// the second marking found three ways up to `max_length`.
#[derive(Clone, Debug, Serialize)]
pub struct GirthTower {
    pub base: String,
    pub max_length: usize,
    pub girth_base: Option<usize>,
    /// Fox-calculus test on every reduced word.
    pub girth_fox: Option<usize>,
    /// Bounded search through products of conjugates of commutators.
    pub girth_closure: Option<usize>,
    /// Cogrowth dynamic program over the Magnus engine.
    pub girth_engine: Option<usize>,
    /// Kernel words of each length `0..=max_length`, by the Fox test and by the search.
    pub kernel_fox: Vec<usize>,
    pub kernel_closure: Vec<usize>,
    pub agree: bool,
    /// `girth(F/[N,N]) >= girth(F/N)`.
    pub monotone: bool,
}

fn all_reduced(rank: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for l in Letter::alphabet(rank) {
                if w.letters().last() != Some(&l.inv()) {
                    let mut v = w.clone();
                    v.0.push(l);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Reduced words of length `<= max_length` in `[N, N]`, `N` the kernel of the
/// marking of `base`, by closing the commutators of short kernel words under
/// inversion, conjugation by letters and products, keeping words of length
/// `<= bound`. Uses only free reduction and the word problem of `base`.
pub fn kernel_words_by_closure(base: &MarkedGroup, max_length: usize, bound: usize) -> Result<BTreeSet<Word>> {
    if bound < max_length {
        return Err(Error::InvalidInput("search bound must be at least the length cap".into()));
    }
    let m = base.rank();
    let n_words: Vec<Word> = all_reduced(m, bound / 4)
        .into_iter()
        .filter(|w| !w.is_empty() && base.is_identity_word(w))
        .collect();
    let mut set: BTreeSet<Word> = BTreeSet::new();
    for u in &n_words {
        for v in &n_words {
            let c = Word::commutator(u, v).reduced();
            if !c.is_empty() && c.len() <= bound {
                set.insert(c);
            }
        }
    }
    loop {
        let before = set.len();
        let items: Vec<Word> = set.iter().cloned().collect();
        let mut fresh = Vec::new();
        for w in &items {
            fresh.push(w.inverse());
            for l in Letter::alphabet(m) {
                fresh.push(Word(vec![l]).concat(w).concat(&Word(vec![l.inv()])).reduced());
            }
            for v in &items {
                fresh.push(w.concat(v).reduced());
            }
        }
        set.extend(fresh.into_iter().filter(|w| !w.is_empty() && w.len() <= bound));
        if set.len() == before {
            break;
        }
    }
    Ok(set.into_iter().filter(|w| w.len() <= max_length).collect())
}

fn first_length(counts: &[usize]) -> Option<usize> {
    (1..counts.len()).find(|&k| counts[k] > 0)
}

pub fn metabelian_girth_tower(base: &MarkedGroup, max_length: usize, bound: usize) -> Result<GirthTower> {
    let meta = MetabelianEngine::marked(base, 1 << 16)?;
    let mut kernel_fox = vec![0; max_length + 1];
    let mut fox_set = BTreeSet::new();
    for w in all_reduced(base.rank(), max_length).into_iter().skip(1) {
        if metabelian_is_trivial(&meta, &w)? {
            kernel_fox[w.len()] += 1;
            fox_set.insert(w);
        }
    }
    let closure = kernel_words_by_closure(base, max_length, bound)?;
    let mut kernel_closure = vec![0; max_length + 1];
    for w in &closure {
        kernel_closure[w.len()] += 1;
    }
    let girth_base = girth(base, max_length)?;
    let girth_engine = girth(&meta, max_length)?;
    let girth_fox = first_length(&kernel_fox);
    let agree = fox_set == closure && girth_engine == girth_fox;
    let monotone = match (girth_fox, girth_base) {
        (Some(a), Some(b)) => a >= b,
        (None, _) => true,
        (Some(_), None) => false,
    };
    Ok(GirthTower {
        base: base.name().to_string(),
        max_length,
        girth_base,
        girth_fox,
        girth_closure: first_length(&kernel_closure),
        girth_engine,
        kernel_fox,
        kernel_closure,
        agree,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_base() {
        // N = <x^2> in F_1 is cyclic, so [N, N] = 1
        let t = metabelian_girth_tower(&MarkedGroup::cyclic(2), 8, 8).unwrap();
        assert_eq!(t.girth_base, Some(2));
        assert_eq!(t.girth_fox, None);
        assert!(t.agree && t.monotone);
    }

    #[test]
    fn closure_words_are_kernel_words() {
        let k4 = MarkedGroup::abelian(&[2, 2]);
        let meta = MetabelianEngine::marked(&k4, 1 << 16).unwrap();
        for w in kernel_words_by_closure(&k4, 8, 8).unwrap() {
            assert!(metabelian_is_trivial(&meta, &w).unwrap());
        }
    }
}
