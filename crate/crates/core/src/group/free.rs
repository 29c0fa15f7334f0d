use super::{EngineKind, GroupElement, GroupEngine};
use crate::word::{Letter, Word};

/// Free group: the canonical form is the freely reduced word, one byte per
/// letter (`2 * generator + inverse`).
#[derive(Debug, Clone)]
pub struct FreeEngine {
    rank: usize,
}

impl FreeEngine {
    pub fn new(rank: usize) -> Self {
        assert!((1..=127).contains(&rank), "free rank must be in 1..=127");
        FreeEngine { rank }
    }

    pub(crate) fn decode(g: &GroupElement) -> Word {
        Word(g.as_bytes().iter().map(|&b| Letter::from_code(b as usize)).collect())
    }
}

impl GroupEngine for FreeEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Free
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        let code = letter.code() as u8;
        let b = g.as_bytes();
        if b.last() == Some(&(code ^ 1)) {
            GroupElement::from_bytes(b[..b.len() - 1].to_vec())
        } else {
            let mut v = Vec::with_capacity(b.len() + 1);
            v.extend_from_slice(b);
            v.push(code);
            GroupElement::from_bytes(v)
        }
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let (x, y) = (a.as_bytes(), b.as_bytes());
        let mut k = 0;
        while k < x.len() && k < y.len() && x[x.len() - 1 - k] == y[k] ^ 1 {
            k += 1;
        }
        let mut v = Vec::with_capacity(x.len() + y.len() - 2 * k);
        v.extend_from_slice(&x[..x.len() - k]);
        v.extend_from_slice(&y[k..]);
        GroupElement::from_bytes(v)
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        GroupElement::from_bytes(g.as_bytes().iter().rev().map(|b| b ^ 1).collect())
    }

    fn defining_relators(&self) -> Option<Vec<Word>> {
        Some(Vec::new())
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        Some(Self::decode(g))
    }
}

#[cfg(test)]
mod tests {
    use crate::group::MarkedGroup;

    #[test]
    fn canonical_form_is_reduced_word() {
        let f = MarkedGroup::free_named(vec!["x".into(), "y".into()]);
        let w = f.parse_word("x y y^-1").unwrap();
        assert_eq!(f.evaluate_word(&w), f.parse_element("x").unwrap());
        let g = f.parse_element("x y x^-1").unwrap();
        assert_eq!(f.describe(&g), "x y x^-1");
        assert_eq!(f.describe(&f.multiply(&g, &f.inverse(&g))), "1");
    }
}
