use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::Serialize;

use super::{ln_rational, AlgebraElement, DEFAULT_SUPPORT_CAP};
use crate::error::{Error, Result};
use crate::group::EngineKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMethod {
    /// `FreeTree` when applicable, otherwise `Convolution`.
    Auto,
    /// Repeated exact convolution with the halving identities.
    Convolution,
    /// Exact excursion counting on the Cayley tree; free engines only, for
    /// elements supported on the identity and single letters.
    FreeTree,
}

/// `tau((a* a)^n)` for `n = 1..=depth` with the derived lower bounds
/// `tau((a* a)^n)^(1/2n)` on `||lambda(a)||`.
#[derive(Clone, Debug)]
pub struct TracePowerSequence {
    pub traces: Vec<BigRational>,
    pub bounds: Vec<f64>,
    pub method: TraceMethod,
}

impl TracePowerSequence {
    pub fn depth(&self) -> usize {
        self.traces.len()
    }

    /// `tau((a* a)^n)`, `n >= 1`.
    pub fn trace(&self, n: usize) -> &BigRational {
        &self.traces[n - 1]
    }

    pub fn bound(&self, n: usize) -> f64 {
        self.bounds[n - 1]
    }

    pub fn last_bound(&self) -> f64 {
        *self.bounds.last().expect("nonempty sequence")
    }
}

fn tree_applicable(a: &AlgebraElement) -> bool {
    a.group().kind() == EngineKind::Free && a.support().all(|g| g.as_bytes().len() <= 1)
}

pub fn power_trace_sequence(a: &AlgebraElement, depth: usize, method: TraceMethod) -> Result<TracePowerSequence> {
    power_trace_sequence_capped(a, depth, method, DEFAULT_SUPPORT_CAP)
}

pub fn power_trace_sequence_capped(
    a: &AlgebraElement,
    depth: usize,
    method: TraceMethod,
    cap: usize,
) -> Result<TracePowerSequence> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    if a.is_zero() {
        return Err(Error::InvalidInput("trace powers of the zero element".into()));
    }
    let method = match method {
        TraceMethod::Auto if tree_applicable(a) => TraceMethod::FreeTree,
        TraceMethod::Auto => TraceMethod::Convolution,
        m => m,
    };
    let traces = match method {
        TraceMethod::FreeTree => {
            if !tree_applicable(a) {
                return Err(Error::NotApplicable(
                    "tree method needs a free engine and support on 1 and single letters".into(),
                ));
            }
            free_tree_traces(a, depth)?
        }
        _ => convolution_traces(a, depth, cap)?,
    };
    let bounds = certify(a, &traces)?;
    Ok(TracePowerSequence {
        traces,
        bounds,
        method,
    })
}

fn convolution_traces(a: &AlgebraElement, depth: usize, cap: usize) -> Result<Vec<BigRational>> {
    let mut out = Vec::with_capacity(depth);
    if a.is_self_adjoint() {
        // tau(a^2n) = sum (a^n)(g)^2
        let mut c = a.clone();
        for n in 1..=depth {
            if n > 1 {
                c = c.convolve_capped(a, cap)?;
            }
            out.push(c.norm_l2_squared());
        }
    } else {
        // b = a* a; tau(b^2k) = sum c_k^2, tau(b^2k+1) = tau(c_(k+1) c_k)
        let b = a.involute().convolve_capped(a, cap)?;
        let mut cur = b.clone();
        out.push(cur.trace());
        let mut k = 1;
        while out.len() < depth {
            if out.len() == 2 * k - 1 {
                out.push(cur.norm_l2_squared());
            } else {
                let next = cur.convolve_capped(&b, cap)?;
                let prev = std::mem::replace(&mut cur, next);
                k += 1;
                out.push(cur.trace_of_product(&prev)?);
            }
        }
    }
    Ok(out)
}

/// Exact `tau((a* a)^n)` on a free group by counting weighted closed walks on the
/// Cayley tree, decomposed into first-return excursions.
pub fn free_tree_traces(a: &AlgebraElement, depth: usize) -> Result<Vec<BigRational>> {
    let m = a.group().rank();
    let nl = 2 * m;
    let denom = a.common_denominator().clone();
    let mut c0 = BigInt::zero();
    let mut c = vec![BigInt::zero(); nl];
    for (g, num) in a.numerators() {
        match g.as_bytes() {
            [] => c0 = num.clone(),
            [code] => c[*code as usize] = num.clone(),
            _ => return Err(Error::NotApplicable("support beyond single letters".into())),
        }
    }
    // factor parity 0 is a*, parity 1 is a
    let w = |p: usize, l: usize| -> &BigInt {
        if p == 0 {
            &c[l ^ 1]
        } else {
            &c[l]
        }
    };
    let len = 2 * depth;
    let none = nl;
    // cc[f][p][l]: closed walks of l factors starting at parity p never leaving by letter f
    let mut cc = vec![vec![vec![BigInt::zero(); len + 1]; 2]; nl + 1];
    // e[l][p][k]: excursions through letter l spanning k factors
    let mut e = vec![vec![vec![BigInt::zero(); len + 1]; 2]; nl];
    let mut s = vec![vec![BigInt::zero(); len + 1]; 2];
    for f in cc.iter_mut() {
        for p in 0..2 {
            f[p][0] = BigInt::one();
        }
    }
    for l_tot in 1..=len {
        // excursions of length l_tot need walks of length l_tot - 2, already known
        if l_tot >= 2 {
            for p in 0..2 {
                let mut sum = BigInt::zero();
                for l in 0..nl {
                    let first = w(p, l);
                    let back = w((p + l_tot - 1) % 2, l ^ 1);
                    let v = if first.is_zero() || back.is_zero() {
                        BigInt::zero()
                    } else {
                        first * &cc[l ^ 1][p ^ 1][l_tot - 2] * back
                    };
                    sum += &v;
                    e[l][p][l_tot] = v;
                }
                s[p][l_tot] = sum;
            }
        }
        for f in 0..=nl {
            for p in 0..2 {
                let mut v = &c0 * &cc[f][p ^ 1][l_tot - 1];
                for k in 2..=l_tot {
                    let mut ex = s[p][k].clone();
                    if f != none {
                        ex -= &e[f][p][k];
                    }
                    if !ex.is_zero() {
                        v += ex * &cc[f][(p + k) % 2][l_tot - k];
                    }
                }
                cc[f][p][l_tot] = v;
            }
        }
    }
    let mut out = Vec::with_capacity(depth);
    let mut scale = BigInt::one();
    let d2 = &denom * &denom;
    for n in 1..=depth {
        scale *= &d2;
        out.push(BigRational::new(cc[none][0][2 * n].clone(), scale.clone()));
    }
    Ok(out)
}

/// Checks the exact invariants of a trace-power sequence and returns the bounds.
fn certify(a: &AlgebraElement, traces: &[BigRational]) -> Result<Vec<f64>> {
    if traces[0] != a.norm_l2_squared() {
        return Err(Error::invariant("tau(a* a) differs from the squared l2 norm"));
    }
    let l1 = a.norm_l1();
    let l1_sq = &l1 * &l1;
    let mut l1_pow = BigRational::one();
    let mut bounds = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        let n = i + 1;
        if !t.is_positive() {
            return Err(Error::invariant(format!("tau((a* a)^{n}) is not positive")));
        }
        l1_pow *= &l1_sq;
        if *t > l1_pow {
            return Err(Error::invariant(format!("tau((a* a)^{n}) exceeds ||a||_1^{}", 2 * n)));
        }
        if n > 1 {
            // t_(n-1)^(1/(n-1)) <= t_n^(1/n)  <=>  t_(n-1)^n <= t_n^(n-1)
            let prev = &traces[i - 1];
            if Pow::pow(prev, n as u32) > Pow::pow(t, (n - 1) as u32) {
                return Err(Error::invariant(format!("trace bounds decrease at n = {n}")));
            }
        }
        let b = (ln_rational(t) / (2 * n) as f64).exp();
        // exact monotonicity holds, so float noise is clamped away
        let b = match bounds.last() {
            Some(&p) if b < p => p,
            _ => b,
        };
        bounds.push(b);
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{averaging_operator, parse_element_expression};
    use crate::group::MarkedGroup;
    use num_integer::binomial;

    fn central_binomial(n: usize) -> BigRational {
        BigRational::from_integer(binomial(BigInt::from(2 * n), BigInt::from(n)))
    }

    #[test]
    fn unitary_traces_are_one() {
        for g in [MarkedGroup::free_abelian(1), MarkedGroup::free(2), MarkedGroup::cyclic(5)] {
            let x = parse_element_expression(&g, g.generators()[0].as_str()).unwrap();
            let s = power_trace_sequence(&x, 8, TraceMethod::Auto).unwrap();
            assert!(s.traces.iter().all(|t| t.is_one()));
            assert!(s.bounds.iter().all(|&b| b == 1.0));
        }
    }

    #[test]
    fn one_plus_x_gives_central_binomials() {
        let z = MarkedGroup::free_abelian(1);
        let a = parse_element_expression(&z, "1 + x").unwrap();
        let s = power_trace_sequence(&a, 12, TraceMethod::Convolution).unwrap();
        for n in 1..=12 {
            assert_eq!(s.trace(n), &central_binomial(n));
        }
        assert!((s.bound(1) - 2f64.sqrt()).abs() < 1e-12);
        // same element in the free group of rank one, by the tree method
        let f1 = MarkedGroup::free(1);
        let a = parse_element_expression(&f1, "1 + x").unwrap();
        let t = power_trace_sequence(&a, 12, TraceMethod::FreeTree).unwrap();
        assert_eq!(t.traces, s.traces);
    }

    #[test]
    fn free_sum_collapses_to_cyclic() {
        let f2 = MarkedGroup::free(2);
        let a = parse_element_expression(&f2, "x1 + x2").unwrap();
        let s = power_trace_sequence(&a, 8, TraceMethod::Convolution).unwrap();
        for n in 1..=8 {
            assert_eq!(s.trace(n), &central_binomial(n));
        }
    }

    #[test]
    fn tree_method_matches_convolution() {
        for (rank, expr) in [(2, "1/2 x1 + 1/3 x2^-1 - 1/5"), (3, "x1 + x2 + x3"), (2, "2 + x1 - x2 + x1^-1")] {
            let g = MarkedGroup::free(rank);
            let a = parse_element_expression(&g, expr).unwrap();
            let conv = power_trace_sequence(&a, 5, TraceMethod::Convolution);
            let tree = power_trace_sequence(&a, 5, TraceMethod::FreeTree);
            match (conv, tree) {
                (Ok(c), Ok(t)) => assert_eq!(c.traces, t.traces, "{expr}"),
                (c, t) => panic!("{expr}: {c:?} {t:?}"),
            }
        }
        let g = MarkedGroup::free(2);
        let m = averaging_operator(&g, true);
        let c = power_trace_sequence(&m, 6, TraceMethod::Convolution).unwrap();
        let t = power_trace_sequence(&m, 6, TraceMethod::FreeTree).unwrap();
        assert_eq!(c.traces, t.traces);
    }

    #[test]
    fn tree_method_rejects_long_support() {
        let g = MarkedGroup::free(2);
        let a = parse_element_expression(&g, "x1 x2").unwrap();
        assert!(matches!(
            power_trace_sequence(&a, 3, TraceMethod::FreeTree),
            Err(Error::NotApplicable(_))
        ));
        assert_eq!(power_trace_sequence(&a, 3, TraceMethod::Auto).unwrap().method, TraceMethod::Convolution);
    }
}
