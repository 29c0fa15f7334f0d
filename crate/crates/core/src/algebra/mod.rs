//! Exact rational group algebra `QG` with the canonical trace.

mod trace;

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::syntax;
use crate::word::{Letter, Word};

pub use trace::{power_trace_sequence, free_tree_traces, TraceMethod, TracePowerSequence};

/// Default cap on the support of a convolution product.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

/// Finitely supported `a = sum_g a_g g` with rational coefficients.
///
/// Stored as integer numerators over one positive common denominator, with the
/// support sorted by canonical form and no zero numerators.
#[derive(Clone)]
pub struct AlgebraElement {
    group: MarkedGroup,
    denom: BigInt,
    terms: Vec<(GroupElement, BigInt)>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.group.is_same_group(&other.group) && self.denom == other.denom && self.terms == other.terms
    }
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgebraElement({})", self)
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (g, c)) in self.terms.iter().enumerate() {
            let q = BigRational::new(c.clone(), self.denom.clone());
            let (neg, q) = (q.is_negative(), q.abs());
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let name = self.group.describe(g);
            if g.is_identity() {
                write!(f, "{q}")?;
            } else if q.is_one() {
                write!(f, "({name})")?;
            } else {
                write!(f, "{q}*({name})")?;
            }
        }
        Ok(())
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}

impl AlgebraElement {
    fn normalized(group: &MarkedGroup, denom: BigInt, mut terms: Vec<(GroupElement, BigInt)>) -> Self {
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut g = denom.clone();
        for (_, c) in &terms {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        let (denom, terms) = if g.is_one() || terms.is_empty() {
            (if terms.is_empty() { BigInt::one() } else { denom }, terms)
        } else {
            (
                &denom / &g,
                terms.into_iter().map(|(e, c)| (e, c / &g)).collect(),
            )
        };
        AlgebraElement {
            group: group.clone(),
            denom,
            terms,
        }
    }

    pub fn zero(group: &MarkedGroup) -> Self {
        AlgebraElement {
            group: group.clone(),
            denom: BigInt::one(),
            terms: Vec::new(),
        }
    }

    pub fn one(group: &MarkedGroup) -> Self {
        Self::from_element(group, GroupElement::identity(), BigRational::one())
    }

    pub fn from_element(group: &MarkedGroup, g: GroupElement, coef: BigRational) -> Self {
        Self::from_terms(group, [(g, coef)])
    }

    /// Sums coefficients of equal elements and drops zeros.
    pub fn from_terms(group: &MarkedGroup, terms: impl IntoIterator<Item = (GroupElement, BigRational)>) -> Self {
        let terms: Vec<(GroupElement, BigRational)> = terms.into_iter().collect();
        let denom = terms
            .iter()
            .fold(BigInt::one(), |acc, (_, q)| lcm(&acc, q.denom()));
        let mut acc: FxHashMap<GroupElement, BigInt> = FxHashMap::default();
        for (g, q) in terms {
            let c = q.numer() * (&denom / q.denom());
            *acc.entry(g).or_default() += c;
        }
        Self::normalized(group, denom, acc.into_iter().collect())
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_identity() && self.terms[0].1 == self.denom
    }

    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.iter().map(|(g, _)| g)
    }

    pub fn coefficient(&self, g: &GroupElement) -> BigRational {
        match self.terms.binary_search_by(|(e, _)| e.cmp(g)) {
            Ok(i) => BigRational::new(self.terms[i].1.clone(), self.denom.clone()),
            Err(_) => BigRational::zero(),
        }
    }

    /// `(element, coefficient)` in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, BigRational)> + '_ {
        self.terms
            .iter()
            .map(|(g, c)| (g, BigRational::new(c.clone(), self.denom.clone())))
    }

    /// Integer numerators over `common_denominator()`.
    pub fn numerators(&self) -> &[(GroupElement, BigInt)] {
        &self.terms
    }

    pub fn common_denominator(&self) -> &BigInt {
        &self.denom
    }

    fn check_same(&self, other: &AlgebraElement) -> Result<()> {
        if self.group.is_same_group(&other.group) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "algebra elements over different groups ({} and {})",
                self.group.name(),
                other.group.name()
            )))
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_same(other)?;
        Ok(Self::from_terms(&self.group, self.terms().map(|(g, c)| (g.clone(), c)).chain(other.terms().map(|(g, c)| (g.clone(), c)))))
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, q: &BigRational) -> AlgebraElement {
        if q.is_zero() {
            return Self::zero(&self.group);
        }
        let mut denom = &self.denom * q.denom();
        let mut terms: Vec<_> = self.terms.iter().map(|(g, c)| (g.clone(), c * q.numer())).collect();
        if denom.is_negative() {
            denom = -denom;
            for t in &mut terms {
                t.1 = -t.1.clone();
            }
        }
        Self::normalized(&self.group, denom, terms)
    }

    /// `a*`: coefficient of `g` is the coefficient of `g^-1` in `a`.
    pub fn involute(&self) -> AlgebraElement {
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| (self.group.inverse(g), c.clone()))
            .collect();
        Self::normalized(&self.group, self.denom.clone(), terms)
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.involute() == *self
    }

    /// Canonical trace: the coefficient at the identity.
    pub fn trace(&self) -> BigRational {
        self.coefficient(&GroupElement::identity())
    }

    /// `sum |a_g|`.
    pub fn norm_l1(&self) -> BigRational {
        let s: BigInt = self.terms.iter().map(|(_, c)| c.abs()).sum();
        BigRational::new(s, self.denom.clone())
    }

    /// `sum a_g^2 = tau(a* a)`.
    pub fn norm_l2_squared(&self) -> BigRational {
        let s: BigInt = self.terms.iter().map(|(_, c)| c * c).sum();
        BigRational::new(s, &self.denom * &self.denom)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.iter().all(|(_, c)| !c.is_negative())
    }

    /// Coefficientwise `0 <= self <= other`.
    pub fn dominated_by(&self, other: &AlgebraElement) -> bool {
        self.is_nonnegative() && self.terms().all(|(g, c)| other.coefficient(g) >= c)
    }

    /// `sum_h a(h) b(h^-1 g)` with the default support cap.
    pub fn convolve(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.convolve_capped(other, DEFAULT_SUPPORT_CAP)
    }

    pub fn convolve_capped(&self, other: &AlgebraElement, cap: usize) -> Result<AlgebraElement> {
        self.check_same(other)?;
        let denom = &self.denom * &other.denom;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.group));
        }
        let terms = if fits_i128(&self.terms, &other.terms) {
            convolve_i128(&self.group, &self.terms, &other.terms, cap)?
        } else {
            convolve_big(&self.group, &self.terms, &other.terms, cap)?
        };
        Ok(Self::normalized(&self.group, denom, terms))
    }

    /// `tau(a b) = sum_g a(g) b(g^-1)` without forming the product.
    pub fn trace_of_product(&self, other: &AlgebraElement) -> Result<BigRational> {
        self.check_same(other)?;
        let mut s = BigInt::zero();
        for (g, c) in &self.terms {
            let gi = self.group.inverse(g);
            if let Ok(i) = other.terms.binary_search_by(|(e, _)| e.cmp(&gi)) {
                s += c * &other.terms[i].1;
            }
        }
        Ok(BigRational::new(s, &self.denom * &other.denom))
    }

    /// Image under a map of group elements into another group (a homomorphism
    /// when `f` is one).
    pub fn map(&self, target: &MarkedGroup, f: impl Fn(&GroupElement) -> GroupElement) -> AlgebraElement {
        Self::from_terms(target, self.terms().map(|(g, c)| (f(g), c)))
    }

    /// Dense coefficients as `f64`, for reporting only.
    pub fn to_f64_terms(&self) -> Vec<(String, f64)> {
        self.terms()
            .map(|(g, c)| (self.group.describe(g), c.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

fn max_bits(t: &[(GroupElement, BigInt)]) -> u64 {
    t.iter().map(|(_, c)| c.bits()).max().unwrap_or(0)
}

fn fits_i128(a: &[(GroupElement, BigInt)], b: &[(GroupElement, BigInt)]) -> bool {
    let n = a.len().min(b.len()).max(1) as u64;
    let log_n = 64 - n.leading_zeros() as u64;
    max_bits(a) + max_bits(b) + log_n < 126
}

fn to_i128(c: &BigInt) -> i128 {
    c.to_i128().expect("bit bound checked")
}

fn chunked<T: Send, F>(len: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(std::ops::Range<usize>) -> Result<T> + Sync + Send,
{
    const CHUNK: usize = 256;
    let ranges: Vec<std::ops::Range<usize>> = (0..len)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(len))
        .collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if ranges.len() > 1 {
            return ranges.into_par_iter().map(f).collect();
        }
    }
    ranges.into_iter().map(f).collect()
}

fn convolve_i128(
    g: &MarkedGroup,
    a: &[(GroupElement, BigInt)],
    b: &[(GroupElement, BigInt)],
    cap: usize,
) -> Result<Vec<(GroupElement, BigInt)>> {
    let bi: Vec<(GroupElement, i128)> = b.iter().map(|(e, c)| (e.clone(), to_i128(c))).collect();
    let parts = chunked(a.len(), |r| {
        let mut acc: FxHashMap<GroupElement, i128> = FxHashMap::default();
        for (x, c) in &a[r] {
            let c = to_i128(c);
            for (y, d) in &bi {
                *acc.entry(g.multiply(x, y)).or_default() += c * d;
            }
            if acc.len() > cap {
                return Err(Error::resource("convolution support", cap));
            }
        }
        Ok(acc)
    })?;
    let mut total: FxHashMap<GroupElement, i128> = FxHashMap::default();
    for p in parts {
        for (e, c) in p {
            *total.entry(e).or_default() += c;
        }
        if total.len() > cap {
            return Err(Error::resource("convolution support", cap));
        }
    }
    Ok(total.into_iter().map(|(e, c)| (e, BigInt::from(c))).collect())
}

fn convolve_big(
    g: &MarkedGroup,
    a: &[(GroupElement, BigInt)],
    b: &[(GroupElement, BigInt)],
    cap: usize,
) -> Result<Vec<(GroupElement, BigInt)>> {
    let parts = chunked(a.len(), |r| {
        let mut acc: FxHashMap<GroupElement, BigInt> = FxHashMap::default();
        for (x, c) in &a[r] {
            for (y, d) in b {
                *acc.entry(g.multiply(x, y)).or_default() += c * d;
            }
            if acc.len() > cap {
                return Err(Error::resource("convolution support", cap));
            }
        }
        Ok(acc)
    })?;
    let mut total: FxHashMap<GroupElement, BigInt> = FxHashMap::default();
    for p in parts {
        for (e, c) in p {
            *total.entry(e).or_default() += c;
        }
        if total.len() > cap {
            return Err(Error::resource("convolution support", cap));
        }
    }
    Ok(total.into_iter().collect())
}

/// Sums the coefficients of words evaluating to the same element.
pub fn build_element(group: &MarkedGroup, terms: &[(Word, BigRational)]) -> Result<AlgebraElement> {
    for (w, _) in terms {
        group.check_word(w)?;
    }
    Ok(AlgebraElement::from_terms(
        group,
        terms.iter().map(|(w, q)| (group.evaluate_word(w), q.clone())),
    ))
}

/// Parses an expression such as `1 + 2*(x y^-1) - 1/2 x`.
pub fn parse_element_expression(group: &MarkedGroup, text: &str) -> Result<AlgebraElement> {
    build_element(group, &syntax::parse_expression(text, group.generators())?)
}

/// `A_X = (1/|X|) sum x`, or `(A_X + A_{X^-1})/2` when symmetrized.
pub fn averaging_operator(group: &MarkedGroup, symmetrized: bool) -> AlgebraElement {
    let m = group.rank() as i64;
    let terms: Vec<(GroupElement, BigRational)> = if symmetrized {
        Letter::alphabet(group.rank())
            .map(|l| (group.letter(l), BigRational::new(1.into(), (2 * m).into())))
            .collect()
    } else {
        (0..group.rank())
            .map(|i| (group.generator(i), BigRational::new(1.into(), m.into())))
            .collect()
    };
    AlgebraElement::from_terms(group, terms)
}

/// `log` of a positive big rational, accurate far beyond `f64` range.
pub fn ln_rational(q: &BigRational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.sign() == Sign::Plus, "logarithm of a non-positive number");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::arb_word;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn building_sums_equal_elements() {
        let z = MarkedGroup::free_abelian(1);
        let a = parse_element_expression(&z, "x - x^-1 x x").unwrap();
        assert!(a.is_zero());
        let f2 = MarkedGroup::free(2);
        assert_eq!(parse_element_expression(&f2, "x1 + x2").unwrap().support_size(), 2);
        let z3 = MarkedGroup::cyclic(3);
        let a = parse_element_expression(&z3, "x + 2 x^4").unwrap();
        assert_eq!(a.support_size(), 1);
        assert_eq!(a.coefficient(&z3.parse_element("x").unwrap()), q(3, 1));
    }

    #[test]
    fn convolution_examples() {
        let z = MarkedGroup::free_abelian(1);
        let a = parse_element_expression(&z, "1 + x").unwrap();
        let one = AlgebraElement::one(&z);
        assert_eq!(a.convolve(&one).unwrap(), a);
        let p = a.convolve(&a.involute()).unwrap();
        assert_eq!(p, parse_element_expression(&z, "2 + x + x^-1").unwrap());
        assert_eq!(p.trace(), q(2, 1));
        assert_eq!(p.trace(), a.norm_l2_squared());
        let z2 = MarkedGroup::cyclic(2);
        let a = parse_element_expression(&z2, "1 + x").unwrap();
        assert_eq!(a.convolve(&a).unwrap(), parse_element_expression(&z2, "2 + 2 x").unwrap());
    }

    #[test]
    fn involution_and_trace() {
        let z = MarkedGroup::free_abelian(1);
        let x = parse_element_expression(&z, "x").unwrap();
        assert_eq!(x.involute(), parse_element_expression(&z, "x^-1").unwrap());
        let s = parse_element_expression(&z, "2 + x + x^-1").unwrap();
        assert!(s.is_self_adjoint());
        assert_eq!(parse_element_expression(&z, "3 + 2 x").unwrap().trace(), q(3, 1));
        assert_eq!(x.trace(), q(0, 1));
    }

    #[test]
    fn averaging_operators() {
        let f2 = MarkedGroup::free(2);
        assert_eq!(averaging_operator(&f2, false), parse_element_expression(&f2, "1/2 x1 + 1/2 x2").unwrap());
        let z = MarkedGroup::free_abelian(1);
        assert_eq!(averaging_operator(&z, true), parse_element_expression(&z, "1/2 x + 1/2 x^-1").unwrap());
        let z2 = MarkedGroup::cyclic(2);
        assert_eq!(averaging_operator(&z2, true), parse_element_expression(&z2, "x").unwrap());
    }

    #[test]
    fn rationals_normalize() {
        let z = MarkedGroup::free_abelian(1);
        let a = parse_element_expression(&z, "1/2 + 1/3 x").unwrap();
        assert_eq!(a.common_denominator(), &BigInt::from(6));
        let b = a.scale(&q(6, 1));
        assert_eq!(b.common_denominator(), &BigInt::from(1));
        assert_eq!(a.scale(&q(-2, 1)).coefficient(&z.identity()), q(-1, 1));
        assert_eq!(a.sub(&a).unwrap(), AlgebraElement::zero(&z));
        assert_eq!(format!("{}", parse_element_expression(&z, "1 - 2 x").unwrap()), "1 - 2*(x)");
    }

    #[test]
    fn support_cap_is_enforced() {
        let f2 = MarkedGroup::free(2);
        let a = averaging_operator(&f2, true);
        let a2 = a.convolve(&a).unwrap();
        assert!(matches!(a2.convolve_capped(&a2, 10), Err(Error::ResourceExceeded { .. })));
    }

    #[test]
    fn big_coefficients_take_the_exact_route() {
        let z = MarkedGroup::free_abelian(1);
        let big = BigRational::from_integer(BigInt::from(1) << 100);
        let a = AlgebraElement::from_terms(&z, [(z.identity(), big.clone()), (z.generator(0), big.clone())]);
        let p = a.convolve(&a).unwrap();
        assert_eq!(p.coefficient(&z.generator(0)), &big * &big * BigRational::from_integer(2.into()));
    }

    fn arb_element(g: MarkedGroup) -> impl Strategy<Value = AlgebraElement> {
        let rank = g.rank() as u16;
        proptest::collection::vec((arb_word(rank, 5), -4i64..5, 1i64..4), 0..6).prop_map(move |v| {
            let terms: Vec<(Word, BigRational)> = v.into_iter().map(|(w, n, d)| (w, q(n, d))).collect();
            build_element(&g, &terms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn trace_is_cyclic(a in arb_element(MarkedGroup::free(2)), b in arb_element(MarkedGroup::free(2))) {
            let g = a.group().clone();
            let b = AlgebraElement::from_terms(&g, b.terms().map(|(e, c)| (e.clone(), c)));
            prop_assert_eq!(a.convolve(&b).unwrap().trace(), b.convolve(&a).unwrap().trace());
            prop_assert_eq!(a.convolve(&b).unwrap().trace(), a.trace_of_product(&b).unwrap());
            prop_assert_eq!(a.convolve(&b).unwrap().involute(), b.involute().convolve(&a.involute()).unwrap());
            prop_assert_eq!(a.involute().convolve(&a).unwrap().trace(), a.norm_l2_squared());
        }
    }
}
