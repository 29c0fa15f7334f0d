use std::sync::Arc;

use super::{EngineKind, GroupElement, GroupEngine, MarkedGroup};
use crate::error::{Error, Result};
use crate::word::{Letter, Word};

/// One entry `p_i` of a free-product normal form: a nontrivial element of one factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syllable {
    pub factor: usize,
    pub element: GroupElement,
}

/// `G_1 * ... * G_k`. Generators are the factor generators in order.
/// Canonical form: the syllable sequence, each encoded as
/// `[factor: u8][len: u16 le][factor bytes]`.
#[derive(Debug)]
pub struct FreeProductEngine {
    factors: Vec<MarkedGroup>,
    // generator index -> (factor, local generator)
    local: Vec<(usize, u16)>,
    offsets: Vec<usize>,
}

impl FreeProductEngine {
    pub fn new(factors: Vec<MarkedGroup>) -> Result<Self> {
        if factors.is_empty() || factors.len() > 255 {
            return Err(Error::InvalidInput("free product needs 1..=255 factors".into()));
        }
        let mut local = Vec::new();
        let mut offsets = Vec::new();
        for (f, g) in factors.iter().enumerate() {
            offsets.push(local.len());
            for j in 0..g.rank() {
                local.push((f, j as u16));
            }
        }
        Ok(FreeProductEngine {
            factors,
            local,
            offsets,
        })
    }

    /// Marked free product with generator names taken from the factors.
    pub fn marked(name: &str, factors: Vec<MarkedGroup>) -> Result<MarkedGroup> {
        let names: Vec<String> = factors
            .iter()
            .flat_map(|g| g.generators().iter().cloned())
            .collect();
        MarkedGroup::new(name, names, Arc::new(Self::new(factors)?))
    }

    pub fn factors(&self) -> &[MarkedGroup] {
        &self.factors
    }

    /// Factor and local letter of a product letter.
    pub fn localize(&self, l: Letter) -> (usize, Letter) {
        let (f, j) = self.local[l.index()];
        (f, Letter::new(j, l.inverse))
    }

    /// Product letter of a factor letter.
    pub fn globalize(&self, factor: usize, l: Letter) -> Letter {
        Letter::new((self.offsets[factor] + l.index()) as u16, l.inverse)
    }

    pub fn decode(g: &GroupElement) -> Vec<Syllable> {
        let b = g.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        while i < b.len() {
            let factor = b[i] as usize;
            let len = u16::from_le_bytes([b[i + 1], b[i + 2]]) as usize;
            out.push(Syllable {
                factor,
                element: GroupElement::from_bytes(b[i + 3..i + 3 + len].to_vec()),
            });
            i += 3 + len;
        }
        out
    }

    pub fn encode(s: &[Syllable]) -> GroupElement {
        let mut v = Vec::new();
        for syl in s {
            let b = syl.element.as_bytes();
            assert!(b.len() <= u16::MAX as usize, "factor element too large to encode");
            v.push(syl.factor as u8);
            v.extend_from_slice(&(b.len() as u16).to_le_bytes());
            v.extend_from_slice(b);
        }
        GroupElement::from_bytes(v)
    }

    /// Appends `s` to a normal form, consolidating and cancelling at the seam.
    pub fn push_syllable(&self, nf: &mut Vec<Syllable>, s: Syllable) {
        if s.element.is_identity() {
            return;
        }
        match nf.last_mut() {
            Some(last) if last.factor == s.factor => {
                let p = self.factors[s.factor].multiply(&last.element, &s.element);
                if p.is_identity() {
                    nf.pop();
                } else {
                    last.element = p;
                }
            }
            _ => nf.push(s),
        }
    }

    pub fn syllable_word(&self, s: &Syllable) -> Word {
        let w = self.factors[s.factor]
            .word_of(&s.element)
            .expect("factor engines provide words");
        Word(w.letters().iter().map(|&l| self.globalize(s.factor, l)).collect())
    }
}

impl GroupEngine for FreeProductEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::FreeProduct
    }

    fn rank(&self) -> usize {
        self.local.len()
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        let (f, l) = self.localize(letter);
        let mut nf = Self::decode(g);
        self.push_syllable(
            &mut nf,
            Syllable {
                factor: f,
                element: self.factors[f].letter(l),
            },
        );
        Self::encode(&nf)
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut nf = Self::decode(a);
        let rest = Self::decode(b);
        let mut it = rest.into_iter();
        for s in it.by_ref() {
            let before = nf.len();
            let same = nf.last().map(|l| l.factor) == Some(s.factor);
            self.push_syllable(&mut nf, s);
            // cancellation continues only while whole syllables vanish
            if !same || nf.len() == before {
                break;
            }
        }
        nf.extend(it);
        Self::encode(&nf)
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        let nf: Vec<Syllable> = Self::decode(g)
            .into_iter()
            .rev()
            .map(|s| Syllable {
                element: self.factors[s.factor].inverse(&s.element),
                factor: s.factor,
            })
            .collect();
        Self::encode(&nf)
    }

    fn order(&self) -> Option<usize> {
        match self.factors.len() {
            1 => self.factors[0].order(),
            _ if self.factors.iter().all(|g| g.order() == Some(1)) => Some(1),
            _ => None,
        }
    }

    fn defining_relators(&self) -> Option<Vec<Word>> {
        let mut rels = Vec::new();
        for (f, g) in self.factors.iter().enumerate() {
            for r in g.engine().defining_relators()? {
                rels.push(Word(r.letters().iter().map(|&l| self.globalize(f, l)).collect()));
            }
        }
        Some(rels)
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        let mut w = Word::empty();
        for s in Self::decode(g) {
            w.0.extend(self.syllable_word(&s).0);
        }
        Some(w)
    }

    fn describe(&self, g: &GroupElement, _names: &[String]) -> Option<String> {
        let nf = Self::decode(g);
        if nf.is_empty() {
            return Some("1".into());
        }
        Some(
            nf.iter()
                .map(|s| format!("({})", self.factors[s.factor].describe(&s.element)))
                .collect::<Vec<_>>()
                .join(" "),
        )
    }
}

/// Normal form `(p_1, ..., p_m)` of the image of `w`: consecutive entries lie in
/// different factors and none is trivial.
pub fn free_product_normal_form(p: &MarkedGroup, w: &Word) -> Result<Vec<Syllable>> {
    let engine = p
        .downcast::<FreeProductEngine>()
        .ok_or_else(|| Error::NotApplicable(format!("{} is not a free product", p.name())))?;
    p.check_word(w)?;
    let mut nf = Vec::new();
    for &l in w.letters() {
        let (f, local) = engine.localize(l);
        engine.push_syllable(
            &mut nf,
            Syllable {
                factor: f,
                element: engine.factors[f].letter(local),
            },
        );
    }
    Ok(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::{arb_word, check_engine_laws};
    use proptest::prelude::*;

    fn z3_free() -> MarkedGroup {
        let z3 = MarkedGroup::new("Z3", vec!["a".into()], MarkedGroup::cyclic(3).engine_arc()).unwrap();
        FreeProductEngine::marked("Z3*F1", vec![z3, MarkedGroup::free(1)]).unwrap()
    }

    #[test]
    fn normal_form_examples() {
        let p = z3_free();
        let nf = free_product_normal_form(&p, &p.parse_word("a x a^-1 a x^-1").unwrap()).unwrap();
        assert_eq!(nf.len(), 1);
        assert_eq!(nf[0].factor, 0);
        let nf = free_product_normal_form(&p, &p.parse_word("x a a^2 x^-1").unwrap()).unwrap();
        assert!(nf.is_empty());
        let nf = free_product_normal_form(&p, &p.parse_word("a x a").unwrap()).unwrap();
        assert_eq!(nf.iter().map(|s| s.factor).collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!(p.describe(&p.parse_element("a x a").unwrap()), "(a) (x) (a)");
    }

    #[test]
    fn normal_form_matches_engine() {
        let p = z3_free();
        let w = p.parse_word("a^2 x^3 a x^-1 a^-1").unwrap();
        let nf = free_product_normal_form(&p, &w).unwrap();
        assert_eq!(FreeProductEngine::encode(&nf), p.evaluate_word(&w));
    }

    proptest! {
        #[test]
        fn engine_laws(u in arb_word(2, 14), v in arb_word(2, 14)) {
            check_engine_laws(&z3_free(), &u, &v);
        }
    }
}
