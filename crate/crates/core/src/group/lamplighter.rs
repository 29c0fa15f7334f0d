use std::collections::BTreeSet;
use std::sync::Arc;

use super::{EngineKind, GroupElement, GroupEngine, MarkedGroup};
use crate::error::{Error, Result};
use crate::word::{Letter, Word};

/// `Z_2 wr Z` element `(prod_{k in lamps} a_k) t^shift`, with `t^-1 a_k t = a_(k+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LampElement {
    pub lamps: BTreeSet<i64>,
    pub shift: i64,
}

impl LampElement {
    pub fn identity() -> Self {
        LampElement {
            lamps: BTreeSet::new(),
            shift: 0,
        }
    }

    /// `(L1, s1)(L2, s2) = (L1 xor (L2 - s1), s1 + s2)`.
    pub fn mul(&self, other: &LampElement) -> LampElement {
        let mut lamps = self.lamps.clone();
        for &k in &other.lamps {
            let k = k - self.shift;
            if !lamps.remove(&k) {
                lamps.insert(k);
            }
        }
        LampElement {
            lamps,
            shift: self.shift + other.shift,
        }
    }

    pub fn inverse(&self) -> LampElement {
        LampElement {
            lamps: self.lamps.iter().map(|&k| k + self.shift).collect(),
            shift: -self.shift,
        }
    }

    pub fn decode(g: &GroupElement) -> Self {
        let b = g.as_bytes();
        if b.is_empty() {
            return Self::identity();
        }
        let mut it = b.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap()));
        let shift = it.next().unwrap();
        LampElement {
            shift,
            lamps: it.collect(),
        }
    }

    pub fn encode(&self) -> GroupElement {
        if self.shift == 0 && self.lamps.is_empty() {
            return GroupElement::identity();
        }
        let mut v = self.shift.to_le_bytes().to_vec();
        for &k in &self.lamps {
            v.extend_from_slice(&k.to_le_bytes());
        }
        GroupElement::from_bytes(v)
    }
}

/// Lamplighter group marked by `t` and lamp generators `a_k` at chosen positions.
/// Generator 0 is `t`; generator `i >= 1` is `a_{positions[i-1]}`.
#[derive(Debug, Clone)]
pub struct LamplighterEngine {
    positions: Vec<i64>,
}

impl LamplighterEngine {
    pub fn new(positions: Vec<i64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidInput("lamplighter marking needs a lamp generator".into()));
        }
        Ok(LamplighterEngine { positions })
    }

    /// Reads the marking from generator names: `t` first, then `a_k` names.
    pub fn from_names(names: &[String]) -> Result<Self> {
        if names.first().map(String::as_str) != Some("t") {
            return Err(Error::InvalidInput("lamplighter generators must start with `t`".into()));
        }
        let positions = names[1..]
            .iter()
            .map(|s| {
                s.strip_prefix("a_")
                    .and_then(|k| k.parse::<i64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("lamplighter generator `{s}` is not of the form a_k"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions)
    }

    /// The image marking of `H_n`: `t, a_-n, ..., a_n`.
    pub fn hn_marking(n: usize) -> MarkedGroup {
        let names = super::hn::HnEngine::generator_names(n);
        let e = Self::from_names(&names).expect("valid names");
        MarkedGroup::new("Z2 wr Z", names, Arc::new(e)).expect("valid marking")
    }

    /// `t, a_0`.
    pub fn standard() -> MarkedGroup {
        Self::marked(vec!["t".into(), "a_0".into()]).expect("valid marking")
    }

    pub fn marked(names: Vec<String>) -> Result<MarkedGroup> {
        let e = Self::from_names(&names)?;
        MarkedGroup::new("Z2 wr Z", names, Arc::new(e))
    }

    fn letter_element(&self, l: Letter) -> LampElement {
        if l.generator == 0 {
            LampElement {
                lamps: BTreeSet::new(),
                shift: l.sign(),
            }
        } else {
            LampElement {
                lamps: [self.positions[l.index() - 1]].into(),
                shift: 0,
            }
        }
    }

    fn lamp_generator(&self, k: i64) -> Option<u16> {
        self.positions.iter().position(|&p| p == k).map(|i| i as u16 + 1)
    }
}

impl GroupEngine for LamplighterEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Lamplighter
    }

    fn rank(&self) -> usize {
        self.positions.len() + 1
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        LampElement::decode(g).mul(&self.letter_element(letter)).encode()
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        LampElement::decode(a).mul(&LampElement::decode(b)).encode()
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        LampElement::decode(g).inverse().encode()
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        // a_k = t^(p-k) a_p t^(k-p) for the first marked lamp position p
        let e = LampElement::decode(g);
        let p = self.positions[0];
        let mut w = Vec::new();
        for &k in &e.lamps {
            match self.lamp_generator(k) {
                Some(gen) => w.push(Letter::pos(gen)),
                None => {
                    let d = p - k;
                    w.extend(Word::gen(0).pow(d).0);
                    w.push(Letter::pos(1));
                    w.extend(Word::gen(0).pow(-d).0);
                }
            }
        }
        w.extend(Word::gen(0).pow(e.shift).0);
        Some(Word(w).reduced())
    }

    fn describe(&self, g: &GroupElement, _names: &[String]) -> Option<String> {
        let e = LampElement::decode(g);
        let lamps: Vec<String> = e.lamps.iter().map(|k| k.to_string()).collect();
        Some(format!("lamps {{{}}}, shift {}", lamps.join(", "), e.shift))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::{arb_word, check_engine_laws};
    use crate::group::HnEngine;
    use proptest::prelude::*;

    #[test]
    fn lamps_follow_the_convention() {
        let l = LamplighterEngine::standard();
        let g = l.parse_element("a_0 t a_0 t^-1").unwrap();
        let e = LampElement::decode(&g);
        assert_eq!(e.lamps, [-1, 0].into());
        assert_eq!(e.shift, 0);
        assert_eq!(l.describe(&g), "lamps {-1, 0}, shift 0");
        // t^-1 a_0 t = a_1
        let g = l.parse_element("t^-1 a_0 t").unwrap();
        assert_eq!(LampElement::decode(&g).lamps, [1].into());
    }

    #[test]
    fn hn_relators_hold() {
        for n in 1..=3 {
            let h = HnEngine::new(n).unwrap();
            let l = LamplighterEngine::hn_marking(n);
            for r in h.relators() {
                assert!(l.is_identity_word(&r));
            }
        }
    }

    proptest! {
        #[test]
        fn engine_laws(u in arb_word(2, 16), v in arb_word(2, 16)) {
            check_engine_laws(&LamplighterEngine::standard(), &u, &v);
            check_engine_laws(&LamplighterEngine::hn_marking(1), &u, &v);
        }
    }
}
