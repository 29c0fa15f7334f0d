//! Certified lower bounds and tail extrapolation for `||lambda(a)||` and `rho(G, X)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::{
    averaging_operator, ln_rational, power_trace_sequence, AlgebraElement, TraceMethod, TracePowerSequence,
};
use crate::error::{Error, Result};
use crate::group::MarkedGroup;

/// Least-squares fit `log y_n = s n log L + alpha log n + c` over a tail window.
#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub first: usize,
    pub last: usize,
    pub points: usize,
    pub rate: f64,
    pub alpha: f64,
    pub rms_residual: f64,
    /// Rate with `alpha` pinned to `-3/2`, for comparison.
    pub rate_fixed_alpha: f64,
}

fn solve3(mut a: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Fits `ys[i] = scale * ns[i] * log L + alpha * log ns[i] + c`, returning `L`.
pub fn fit_tail(ns: &[f64], ys: &[f64], scale: f64) -> Option<TailFit> {
    if ns.len() < 3 || ns.len() != ys.len() {
        return None;
    }
    let mut m = [[0.0f64; 4]; 3];
    for (&n, &y) in ns.iter().zip(ys) {
        let basis = [n, n.ln(), 1.0];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            m[r][3] += basis[r] * y;
        }
    }
    let [slope, alpha, c] = solve3(m)?;
    let rms = (ns
        .iter()
        .zip(ys)
        .map(|(&n, &y)| (y - slope * n - alpha * n.ln() - c).powi(2))
        .sum::<f64>()
        / ns.len() as f64)
        .sqrt();
    // pinned alpha: slope from a two-parameter fit of y + 1.5 log n
    let k = ns.len() as f64;
    let zs: Vec<f64> = ns.iter().zip(ys).map(|(&n, &y)| y + 1.5 * n.ln()).collect();
    let mean_n = ns.iter().sum::<f64>() / k;
    let mean_z = zs.iter().sum::<f64>() / k;
    let cov: f64 = ns.iter().zip(&zs).map(|(&n, &z)| (n - mean_n) * (z - mean_z)).sum();
    let var: f64 = ns.iter().map(|&n| (n - mean_n).powi(2)).sum();
    let fixed_slope = if var > 0.0 { cov / var } else { slope };
    Some(TailFit {
        first: ns[0] as usize,
        last: *ns.last().unwrap() as usize,
        points: ns.len(),
        rate: (slope / scale).exp(),
        alpha,
        rms_residual: rms,
        rate_fixed_alpha: (fixed_slope / scale).exp(),
    })
}

/// Window of the last third of `1..=n` (at least three points when possible).
pub fn tail_window(n: usize) -> std::ops::RangeInclusive<usize> {
    let len = (n / 3).max(3).min(n);
    (n + 1 - len)..=n
}

/// Lower bounds `tau((a* a)^n)^(1/2n)` with an extrapolated limit.
#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    pub sequence: TracePowerSequence,
    /// Limit estimate, clamped into `[last bound, ||a||_1]`.
    pub extrapolated: f64,
    pub fit: Option<TailFit>,
    /// `||a||_1`, the certified upper bound.
    pub upper: f64,
}

impl SpectralEstimate {
    pub fn depth(&self) -> usize {
        self.sequence.depth()
    }

    pub fn bounds(&self) -> &[f64] {
        &self.sequence.bounds
    }

    pub fn last_bound(&self) -> f64 {
        self.sequence.last_bound()
    }

    /// Extrapolation using only `n <= upto`, as reported per CSV row.
    pub fn extrapolated_at(&self, upto: usize) -> f64 {
        extrapolate(&self.sequence.traces[..upto], &self.sequence.bounds[..upto], self.upper).0
    }

    /// CSV with columns `n,trace_numerator,trace_denominator,bound,extrapolated`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,trace_numerator,trace_denominator,bound,extrapolated\n");
        for n in 1..=self.depth() {
            let t = self.sequence.trace(n);
            s.push_str(&format!(
                "{n},{},{},{:.12},{:.12}\n",
                t.numer(),
                t.denom(),
                self.sequence.bound(n),
                self.extrapolated_at(n)
            ));
        }
        s
    }
}

fn extrapolate(traces: &[BigRational], bounds: &[f64], upper: f64) -> (f64, Option<TailFit>) {
    let last = *bounds.last().expect("nonempty");
    let window = tail_window(traces.len());
    let ns: Vec<f64> = window.clone().map(|n| n as f64).collect();
    let ys: Vec<f64> = window.map(|n| ln_rational(&traces[n - 1])).collect();
    match fit_tail(&ns, &ys, 2.0) {
        Some(fit) if fit.rate.is_finite() => (fit.rate.clamp(last, upper.max(last)), Some(fit)),
        _ => (last, None),
    }
}

pub fn operator_norm_bounds(a: &AlgebraElement, depth: usize) -> Result<SpectralEstimate> {
    operator_norm_bounds_with(a, depth, TraceMethod::Auto)
}

pub fn operator_norm_bounds_with(a: &AlgebraElement, depth: usize, method: TraceMethod) -> Result<SpectralEstimate> {
    if a.is_zero() {
        return Err(Error::InvalidInput("operator norm of the zero element".into()));
    }
    let sequence = power_trace_sequence(a, depth, method)?;
    let upper = a.norm_l1().to_f64().unwrap_or(f64::INFINITY);
    let (extrapolated, fit) = extrapolate(&sequence.traces, &sequence.bounds, upper);
    Ok(SpectralEstimate {
        sequence,
        extrapolated,
        fit,
        upper,
    })
}

/// Bounds on `rho(G, X) = ||A_{X+-}||`; traces are `2n`-step return probabilities.
pub fn spectral_radius_bounds(g: &MarkedGroup, depth: usize) -> Result<SpectralEstimate> {
    operator_norm_bounds(&averaging_operator(g, true), depth)
}

pub fn spectral_radius_bounds_with(g: &MarkedGroup, depth: usize, method: TraceMethod) -> Result<SpectralEstimate> {
    operator_norm_bounds_with(&averaging_operator(g, true), depth, method)
}

/// Exact return probabilities `p_2n`, `n = 1..=depth`, of the simple random walk
/// on the `2m`-regular tree, by a birth-death recursion on the distance to the root.
pub fn free_tree_return_oracle(m: usize, depth: usize) -> Result<Vec<BigRational>> {
    if m == 0 {
        return Err(Error::InvalidInput("rank must be at least 1".into()));
    }
    let deg = BigInt::from(2 * m);
    let up = BigInt::from(2 * m - 1);
    let steps = 2 * depth;
    // walks[d] = number of walks of the current length ending at distance d
    let mut walks = vec![BigInt::zero(); steps + 2];
    walks[0] = BigInt::one();
    let mut out = Vec::with_capacity(depth);
    let mut total = BigInt::one();
    for s in 1..=steps {
        let mut next = vec![BigInt::zero(); steps + 2];
        for d in 0..=s.min(steps) {
            if walks[d].is_zero() {
                continue;
            }
            if d == 0 {
                next[1] += &walks[0] * &deg;
            } else {
                next[d - 1] += &walks[d];
                next[d + 1] += &walks[d] * &up;
            }
        }
        walks = next;
        total *= &deg;
        if s % 2 == 0 {
            out.push(BigRational::new(walks[0].clone(), total.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_element_expression;
    use num_integer::binomial;

    #[test]
    fn oracle_small_values() {
        let p = free_tree_return_oracle(2, 2).unwrap();
        assert_eq!(p[0], BigRational::new(1.into(), 4.into()));
        assert_eq!(p[1], BigRational::new(7.into(), 64.into()));
        let p = free_tree_return_oracle(1, 10).unwrap();
        for n in 1..=10usize {
            let c = binomial(BigInt::from(2 * n), BigInt::from(n));
            assert_eq!(p[n - 1], BigRational::new(c, BigInt::from(4).pow(n as u32)));
        }
    }

    #[test]
    fn oracle_matches_convolution_on_f2() {
        let f2 = MarkedGroup::free(2);
        let s = spectral_radius_bounds_with(&f2, 12, TraceMethod::Convolution).unwrap();
        assert_eq!(s.sequence.traces, free_tree_return_oracle(2, 12).unwrap());
    }

    #[test]
    fn unitary_and_cyclic() {
        let z = MarkedGroup::free_abelian(1);
        let x = parse_element_expression(&z, "x").unwrap();
        let e = operator_norm_bounds(&x, 10).unwrap();
        assert!(e.bounds().iter().all(|&b| b == 1.0));
        assert_eq!(e.extrapolated, 1.0);
        let r = spectral_radius_bounds(&z, 10).unwrap();
        assert!((r.bounds()[0] - 0.5f64.sqrt()).abs() < 1e-12);
        let a = parse_element_expression(&z, "1 + x").unwrap();
        let e = operator_norm_bounds(&a, 60).unwrap();
        assert!((e.extrapolated - 2.0).abs() < 0.01, "{}", e.extrapolated);
    }

    #[test]
    fn finite_group_radius_is_one() {
        let z5 = MarkedGroup::cyclic(5);
        let r = spectral_radius_bounds(&z5, 30).unwrap();
        assert!((r.extrapolated - 1.0).abs() < 0.01, "{}", r.extrapolated);
    }

    #[test]
    fn csv_shape() {
        let f2 = MarkedGroup::free(2);
        let csv = spectral_radius_bounds(&f2, 4).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,trace_numerator,trace_denominator,bound,extrapolated");
        assert!(lines[1].starts_with("1,1,4,0.5000"));
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let ns: Vec<f64> = (20..=60).map(|n| n as f64).collect();
        let ys: Vec<f64> = ns.iter().map(|&n| 2.0 * n * 0.8f64.ln() - 1.5 * n.ln() + 0.3).collect();
        let fit = fit_tail(&ns, &ys, 2.0).unwrap();
        assert!((fit.rate - 0.8).abs() < 1e-9);
        assert!((fit.alpha + 1.5).abs() < 1e-6);
        assert!((fit.rate_fixed_alpha - 0.8).abs() < 1e-9);
    }
}
