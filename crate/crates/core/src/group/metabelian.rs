//! `F(X)/[N, N]` for a finite quotient `G = F(X)/N`, via the Magnus embedding
//! `w -> (w mod N, (dw/dx_j)_j in (ZG)^m)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rustc_hash::FxHashMap;

use super::{EngineKind, FiniteTable, GroupElement, GroupEngine, MarkedGroup};
use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::word::{Letter, Word};

#[derive(Debug)]
pub struct MetabelianEngine {
    base: MarkedGroup,
    table: FiniteTable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Magnus {
    g: u32,
    // sorted (j * |G| + h, coefficient), no zeros
    d: Vec<(u32, i64)>,
}

impl MetabelianEngine {
    /// Tabulates the finite base (at most `cap` elements) and builds the engine.
    pub fn new(base: MarkedGroup, cap: usize) -> Result<Self> {
        let table = FiniteTable::from_marked(&base, cap).map_err(|e| match e {
            Error::ResourceExceeded { .. } => Error::NotApplicable(format!(
                "metabelianized engine needs a finite base; {} has more than {cap} elements",
                base.name()
            )),
            e => e,
        })?;
        Ok(MetabelianEngine { base, table })
    }

    pub fn marked(base: &MarkedGroup, cap: usize) -> Result<MarkedGroup> {
        let e = Self::new(base.clone(), cap)?;
        MarkedGroup::new(
            format!("metabelianized {}", base.name()),
            base.generators().to_vec(),
            Arc::new(e),
        )
    }

    pub fn base(&self) -> &MarkedGroup {
        &self.base
    }

    pub fn table(&self) -> &FiniteTable {
        &self.table
    }

    fn n(&self) -> u32 {
        self.table.order() as u32
    }

    fn decode(&self, x: &GroupElement) -> Magnus {
        let b = x.as_bytes();
        if b.is_empty() {
            return Magnus { g: 0, d: Vec::new() };
        }
        let g = u32::from_le_bytes(b[..4].try_into().unwrap());
        let d = b[4..]
            .chunks_exact(12)
            .map(|c| {
                (
                    u32::from_le_bytes(c[..4].try_into().unwrap()),
                    i64::from_le_bytes(c[4..].try_into().unwrap()),
                )
            })
            .collect();
        Magnus { g, d }
    }

    fn encode(&self, m: &Magnus) -> GroupElement {
        if m.g == 0 && m.d.is_empty() {
            return GroupElement::identity();
        }
        let mut v = m.g.to_le_bytes().to_vec();
        for &(i, c) in &m.d {
            v.extend_from_slice(&i.to_le_bytes());
            v.extend_from_slice(&c.to_le_bytes());
        }
        GroupElement::from_bytes(v)
    }

    fn add_into(d: &mut Vec<(u32, i64)>, extra: impl IntoIterator<Item = (u32, i64)>) {
        let mut map: FxHashMap<u32, i64> = d.iter().copied().collect();
        for (i, c) in extra {
            *map.entry(i).or_default() += c;
        }
        let mut v: Vec<(u32, i64)> = map.into_iter().filter(|&(_, c)| c != 0).collect();
        v.sort_unstable();
        *d = v;
    }

    /// Left translation of the module coordinates by `g`.
    fn translate(&self, g: u32, d: &[(u32, i64)]) -> Vec<(u32, i64)> {
        let n = self.n();
        d.iter()
            .map(|&(i, c)| {
                let (j, h) = (i / n, i % n);
                (j * n + self.table.mul(g, h), c)
            })
            .collect()
    }

    /// Whether `w` maps to the identity of `G`.
    pub fn in_kernel(&self, w: &Word) -> bool {
        self.table.apply(0, w) == 0
    }

    /// Whether `w` is trivial in `F/[N, N]`: in `N` with all Fox derivatives zero in `ZG`.
    pub fn is_trivial(&self, w: &Word) -> bool {
        if !self.in_kernel(w) {
            return false;
        }
        (0..self.base.rank() as u16).all(|j| {
            fox_derivative(&self.base, w, j)
                .map(|a| a.is_zero())
                .unwrap_or(false)
        })
    }
}

impl GroupEngine for MetabelianEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Metabelianized
    }

    fn rank(&self) -> usize {
        self.base.rank()
    }

    fn mul_letter(&self, x: &GroupElement, l: Letter) -> GroupElement {
        let mut m = self.decode(x);
        let n = self.n();
        let j = l.generator as u32;
        let next = self.table.act(m.g, l);
        let (h, c) = if l.inverse { (next, -1) } else { (m.g, 1) };
        Self::add_into(&mut m.d, [(j * n + h, c)]);
        m.g = next;
        self.encode(&m)
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let (x, y) = (self.decode(a), self.decode(b));
        let mut d = x.d.clone();
        Self::add_into(&mut d, self.translate(x.g, &y.d));
        self.encode(&Magnus {
            g: self.table.mul(x.g, y.g),
            d,
        })
    }

    fn inverse(&self, a: &GroupElement) -> GroupElement {
        let x = self.decode(a);
        let gi = self.table.inv(x.g);
        let mut d: Vec<(u32, i64)> = self
            .translate(gi, &x.d)
            .into_iter()
            .map(|(i, c)| (i, -c))
            .collect();
        d.sort_unstable();
        self.encode(&Magnus { g: gi, d })
    }

    fn word_of(&self, _g: &GroupElement) -> Option<Word> {
        None
    }

    fn describe(&self, x: &GroupElement, names: &[String]) -> Option<String> {
        let m = self.decode(x);
        let g = self.table.rep(m.g).display_with(names).to_string();
        Some(format!("({g}; {} module terms)", m.d.len()))
    }
}

/// Free Fox derivative `dw/dx` mapped into `ZG` for the group of `g`.
pub fn fox_derivative(g: &MarkedGroup, w: &Word, x: u16) -> Result<AlgebraElement> {
    g.check_word(w)?;
    if x as usize >= g.rank() {
        return Err(Error::InvalidInput(format!("generator index {x} out of range")));
    }
    let mut acc: FxHashMap<GroupElement, BigInt> = FxHashMap::default();
    let mut prefix = g.identity();
    for &l in w.letters() {
        let next = g.engine().mul_letter(&prefix, l);
        if l.generator == x {
            if l.inverse {
                *acc.entry(next.clone()).or_default() -= 1;
            } else {
                *acc.entry(prefix.clone()).or_default() += 1;
            }
        }
        prefix = next;
    }
    Ok(AlgebraElement::from_terms(
        g,
        acc.into_iter().map(|(e, c)| (e, BigRational::from_integer(c))),
    ))
}

/// Exact word problem of `F/[N, N]`; `m` must be a metabelianized group.
pub fn metabelian_is_trivial(m: &MarkedGroup, w: &Word) -> Result<bool> {
    let e = m
        .downcast::<MetabelianEngine>()
        .ok_or_else(|| Error::NotApplicable(format!("{} is not metabelianized", m.name())))?;
    m.check_word(w)?;
    Ok(e.is_trivial(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::{arb_word, check_engine_laws};
    use proptest::prelude::*;

    fn klein() -> MarkedGroup {
        MarkedGroup::abelian(&[2, 2])
    }

    #[test]
    fn fox_base_rules() {
        let g = klein();
        let d = fox_derivative(&g, &g.parse_word("a").unwrap(), 0).unwrap();
        assert!(d.is_one());
        let d = fox_derivative(&g, &g.parse_word("a^-1").unwrap(), 0).unwrap();
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.coefficient(&g.parse_element("a^-1").unwrap()), BigRational::from_integer((-1).into()));
        // 1 + a + a^2 + a^3 = 2 + 2a
        let d = fox_derivative(&g, &g.parse_word("a^4").unwrap(), 0).unwrap();
        assert_eq!(d.coefficient(&g.identity()), BigRational::from_integer(2.into()));
        assert_eq!(d.coefficient(&g.parse_element("a").unwrap()), BigRational::from_integer(2.into()));
    }

    #[test]
    fn klein_examples() {
        let m = MetabelianEngine::marked(&klein(), 100).unwrap();
        assert!(metabelian_is_trivial(&m, &m.parse_word("[a^2, b^2]").unwrap()).unwrap());
        assert!(!metabelian_is_trivial(&m, &m.parse_word("a^4").unwrap()).unwrap());
        assert!(!metabelian_is_trivial(&m, &m.parse_word("a").unwrap()).unwrap());
        assert!(m.is_identity_word(&m.parse_word("[a^2, b^2]").unwrap()));
        assert!(!m.is_identity_word(&m.parse_word("a^4").unwrap()));
        assert!(!m.is_identity_word(&m.parse_word("a^2").unwrap()));
    }

    #[test]
    fn infinite_base_is_rejected() {
        assert!(MetabelianEngine::marked(&MarkedGroup::free(2), 100).is_err());
    }

    proptest! {
        #[test]
        fn engine_laws(u in arb_word(2, 14), v in arb_word(2, 14)) {
            let m = MetabelianEngine::marked(&klein(), 100).unwrap();
            check_engine_laws(&m, &u, &v);
        }

        #[test]
        fn fox_route_matches_magnus_route(u in arb_word(2, 14), v in arb_word(2, 14)) {
            let m = MetabelianEngine::marked(&klein(), 100).unwrap();
            let w = u.concat(&v);
            prop_assert_eq!(metabelian_is_trivial(&m, &w).unwrap(), m.is_identity_word(&w));
        }

        #[test]
        fn triviality_is_a_congruence(u in arb_word(2, 6), v in arb_word(2, 6), g in arb_word(2, 6)) {
            let m = MetabelianEngine::marked(&klein(), 100).unwrap();
            let e = m.downcast::<MetabelianEngine>().unwrap();
            // squares lie in N; commutators of elements of N lie in [N, N]
            let p = Word::commutator(&u.pow(2), &v.pow(2));
            let q = Word::commutator(&v.pow(2), &g.pow(2));
            prop_assert!(e.is_trivial(&p) && e.is_trivial(&q));
            prop_assert!(e.is_trivial(&p.concat(&q)));
            prop_assert!(e.is_trivial(&g.concat(&p).concat(&g.inverse())));
        }
    }
}
