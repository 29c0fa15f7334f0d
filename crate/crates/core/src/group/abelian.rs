use super::{EngineKind, GroupElement, GroupEngine};
use crate::word::{Letter, Word};

/// Direct product of cyclic groups, one per generator. Order `0` is `Z`.
#[derive(Debug, Clone)]
pub struct AbelianEngine {
    orders: Vec<u64>,
}

impl AbelianEngine {
    pub fn new(orders: Vec<u64>) -> Self {
        assert!(!orders.is_empty());
        AbelianEngine { orders }
    }

    fn decode(&self, g: &GroupElement) -> Vec<i64> {
        let b = g.as_bytes();
        if b.is_empty() {
            return vec![0; self.orders.len()];
        }
        b.chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }

    fn encode(&self, v: &[i64]) -> GroupElement {
        if v.iter().all(|&x| x == 0) {
            return GroupElement::identity();
        }
        GroupElement::from_bytes(v.iter().flat_map(|x| x.to_le_bytes()).collect())
    }

    fn normalize(&self, v: &mut [i64]) {
        for (x, &o) in v.iter_mut().zip(&self.orders) {
            if o > 0 {
                *x = x.rem_euclid(o as i64);
            }
        }
    }
}

impl GroupEngine for AbelianEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Abelian
    }

    fn rank(&self) -> usize {
        self.orders.len()
    }

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement {
        let mut v = self.decode(g);
        v[letter.index()] += letter.sign();
        self.normalize(&mut v);
        self.encode(&v)
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut v = self.decode(a);
        for (x, y) in v.iter_mut().zip(self.decode(b)) {
            *x += y;
        }
        self.normalize(&mut v);
        self.encode(&v)
    }

    fn inverse(&self, g: &GroupElement) -> GroupElement {
        let mut v: Vec<i64> = self.decode(g).into_iter().map(|x| -x).collect();
        self.normalize(&mut v);
        self.encode(&v)
    }

    fn order(&self) -> Option<usize> {
        if self.orders.contains(&0) {
            None
        } else {
            self.orders.iter().try_fold(1usize, |acc, &o| acc.checked_mul(o as usize))
        }
    }

    fn defining_relators(&self) -> Option<Vec<Word>> {
        let m = self.orders.len() as u16;
        let mut rels = Vec::new();
        for (i, &o) in self.orders.iter().enumerate() {
            if o > 0 {
                rels.push(Word::from_signed(&[(i as u16, o as i64)]));
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                rels.push(Word::commutator(&Word::gen(i), &Word::gen(j)));
            }
        }
        Some(rels)
    }

    fn word_of(&self, g: &GroupElement) -> Option<Word> {
        let v = self.decode(g);
        let pairs: Vec<(u16, i64)> = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let o = self.orders[i] as i64;
                // shortest signed representative
                let x = if o > 0 && x > o / 2 { x - o } else { x };
                (i as u16, x)
            })
            .collect();
        Some(Word::from_signed(&pairs))
    }
}

#[cfg(test)]
mod tests {
    use crate::group::MarkedGroup;

    #[test]
    fn cyclic_wraps() {
        let z3 = MarkedGroup::cyclic(3);
        assert!(z3.is_identity_word(&z3.parse_word("x^3").unwrap()));
        assert_eq!(z3.parse_element("x^4").unwrap(), z3.parse_element("x").unwrap());
        assert_eq!(z3.describe(&z3.parse_element("x^2").unwrap()), "x^-1");
        assert_eq!(z3.order(), Some(3));
        assert_eq!(MarkedGroup::free_abelian(2).order(), None);
    }

    #[test]
    fn commutators_vanish() {
        let z2 = MarkedGroup::free_abelian(2);
        assert!(z2.is_identity_word(&z2.parse_word("[a, b]").unwrap()));
        assert!(!z2.is_identity_word(&z2.parse_word("a b").unwrap()));
    }
}
