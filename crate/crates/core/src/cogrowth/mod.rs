//! Cogrowth `gamma(n)`, girth, the Grigorchuk formula and Cheeger constants.

mod cheeger;

use std::ops::ControlFlow;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{reduced_word_layers, EngineKind, MarkedGroup, DEFAULT_ELEMENT_CAP};
use crate::spectral::{fit_tail, spectral_radius_bounds, tail_window, TailFit};

pub use cheeger::{cheeger_buser_check, cheeger_constant, CheegerBuserReport, CheegerMode, CheegerResult};

/// `gamma(k)` for `k = 0..=depth`: reduced words of length `<= k` that are trivial in `G`.
#[derive(Clone, Debug, Serialize)]
pub struct CogrowthTable {
    pub group: String,
    pub rank: usize,
    /// Kernel words of length exactly `k`.
    pub kernel_counts: Vec<u128>,
    pub gamma: Vec<u128>,
    /// Shortest nontrivial kernel word, if one has length `<= depth`.
    pub girth: Option<usize>,
    /// gcd of the lengths of kernel words seen so far.
    pub period: Option<usize>,
    /// `gamma(depth)^(1/depth)`; underestimates `omega` at finite depth.
    pub omega_root: f64,
    /// Tail fit of `gamma` over lengths divisible by `period`.
    pub omega_hat: Option<f64>,
    pub fit: Option<TailFit>,
}

impl CogrowthTable {
    pub fn depth(&self) -> usize {
        self.gamma.len() - 1
    }

    /// `gamma(k)^(1/k)` for `k >= 1`.
    pub fn gamma_rate(&self, k: usize) -> f64 {
        (self.gamma[k] as f64).powf(1.0 / k as f64)
    }

    /// Best available estimate of `omega`.
    pub fn omega_estimate(&self) -> f64 {
        self.omega_hat.unwrap_or(self.omega_root)
    }

    /// CSV with columns `k,gamma,gamma_rate`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,gamma,gamma_rate\n");
        for (k, g) in self.gamma.iter().enumerate() {
            if k == 0 {
                s.push_str(&format!("0,{g},\n"));
            } else {
                s.push_str(&format!("{k},{g},{:.12}\n", self.gamma_rate(k)));
            }
        }
        s
    }
}

fn kernel_counts(g: &MarkedGroup, depth: usize, cap: usize, stop_at_first: bool) -> Result<Vec<u128>> {
    if g.kind() == EngineKind::Free {
        // the marking is a free basis, so N = {1}
        let mut v = vec![0; depth + 1];
        v[0] = 1;
        return Ok(v);
    }
    let mut counts = vec![0u128; depth + 1];
    reduced_word_layers(g, depth, cap, |k, el, c| {
        if el.is_identity() {
            counts[k] += c;
            if stop_at_first && k > 0 {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(counts)
}

pub fn cogrowth_table(g: &MarkedGroup, depth: usize) -> Result<CogrowthTable> {
    cogrowth_table_capped(g, depth, DEFAULT_ELEMENT_CAP)
}

pub fn cogrowth_table_capped(g: &MarkedGroup, depth: usize, cap: usize) -> Result<CogrowthTable> {
    let kernel = kernel_counts(g, depth, cap, false)?;
    let mut gamma = Vec::with_capacity(depth + 1);
    let mut acc = 0u128;
    for &c in &kernel {
        acc += c;
        gamma.push(acc);
    }
    let girth = (1..=depth).find(|&k| kernel[k] > 0);
    let period = (1..=depth).filter(|&k| kernel[k] > 0).reduce(|a, b| a.gcd(&b));
    let omega_root = if depth == 0 {
        1.0
    } else {
        (gamma[depth] as f64).powf(1.0 / depth as f64)
    };
    let max_rate = (2 * g.rank() - 1) as f64;
    let (omega_hat, fit) = match period {
        Some(d) => {
            let ns: Vec<f64> = tail_window(depth)
                .filter(|k| k % d == 0)
                .map(|k| k as f64)
                .collect();
            let ys: Vec<f64> = ns.iter().map(|&k| (gamma[k as usize] as f64).ln()).collect();
            match fit_tail(&ns, &ys, 1.0) {
                Some(f) if f.rate.is_finite() => (Some(f.rate.clamp(1.0, max_rate)), Some(f)),
                _ => (None, None),
            }
        }
        None => (None, None),
    };
    Ok(CogrowthTable {
        group: g.name().to_string(),
        rank: g.rank(),
        kernel_counts: kernel,
        gamma,
        girth,
        period,
        omega_root,
        omega_hat,
        fit,
    })
}

/// Length of the shortest nontrivial kernel word, or `None` if it exceeds `cap`.
pub fn girth(g: &MarkedGroup, cap: usize) -> Result<Option<usize>> {
    let k = kernel_counts(g, cap, DEFAULT_ELEMENT_CAP, true)?;
    Ok((1..=cap).find(|&i| k[i] > 0))
}

/// Both sides of the Grigorchuk formula at finite depth. Report only.
#[derive(Clone, Debug, Serialize)]
pub struct GrigorchukReport {
    pub group: String,
    pub rank: usize,
    pub depth: usize,
    pub rho_hat: f64,
    pub omega_hat: f64,
    pub omega_root: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Exact values when the group is finite (`rho = 1`, `omega = 2|X| - 1`).
    pub exact_rho: Option<String>,
    pub exact_omega: Option<String>,
    pub exact_residual: Option<String>,
}

/// `(s / omega + omega) / (2m)` with `s = 2m - 1`.
pub fn grigorchuk_rhs(m: usize, omega: f64) -> f64 {
    let s = (2 * m - 1) as f64;
    (s / omega + omega) / (2 * m) as f64
}

fn grigorchuk_rhs_exact(m: usize, omega: &BigRational) -> BigRational {
    let s = BigRational::from_integer((2 * m - 1).into());
    (&s / omega + omega) / BigRational::from_integer((2 * m).into())
}

pub fn grigorchuk_residual(g: &MarkedGroup, depth: usize) -> Result<GrigorchukReport> {
    let table = cogrowth_table(g, depth)?;
    if table.girth.is_none() {
        return Err(Error::NotApplicable(format!(
            "kernel of the marking of {} is trivial up to length {depth}",
            g.name()
        )));
    }
    let m = g.rank();
    let (exact_rho, exact_omega, exact_residual, rho_hat, omega_hat) = if g.order().is_some() {
        let rho = BigRational::one();
        let omega = BigRational::from_integer((2 * m - 1).into());
        let residual = &rho - grigorchuk_rhs_exact(m, &omega);
        (
            Some(rho.to_string()),
            Some(omega.to_string()),
            Some(residual.to_string()),
            1.0,
            omega.to_f64().unwrap(),
        )
    } else {
        let rho = spectral_radius_bounds(g, depth)?;
        (None, None, None, rho.extrapolated, table.omega_estimate())
    };
    let rhs = grigorchuk_rhs(m, omega_hat);
    Ok(GrigorchukReport {
        group: g.name().to_string(),
        rank: m,
        depth,
        rho_hat,
        omega_hat,
        omega_root: table.omega_root,
        rhs,
        residual: rho_hat - rhs,
        exact_rho,
        exact_omega,
        exact_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::burnside_group;

    #[test]
    fn free_groups_have_no_cogrowth() {
        let t = cogrowth_table(&MarkedGroup::free(2), 30).unwrap();
        assert!(t.gamma.iter().all(|&g| g == 1));
        assert_eq!(t.girth, None);
        assert_eq!(girth(&MarkedGroup::free(3), 50).unwrap(), None);
        assert!(matches!(grigorchuk_residual(&MarkedGroup::free(2), 10), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn z2_table() {
        let z2 = MarkedGroup::free_abelian(2);
        let t = cogrowth_table(&z2, 8).unwrap();
        assert_eq!(t.gamma[3], 1);
        assert_eq!(t.gamma[4], 9);
        assert_eq!(t.girth, Some(4));
        assert_eq!(girth(&z2, 10).unwrap(), Some(4));
        assert_eq!(t.period, Some(2));
    }

    #[test]
    fn cyclic_and_burnside() {
        let z3 = MarkedGroup::cyclic(3);
        let t = cogrowth_table(&z3, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(t.gamma[n], 2 * (n as u128 / 3) + 1);
        }
        assert_eq!(girth(&z3, 5).unwrap(), Some(3));
        let r = grigorchuk_residual(&z3, 12).unwrap();
        assert_eq!(r.exact_residual.as_deref(), Some("0"));
        assert_eq!(r.exact_omega.as_deref(), Some("1"));
        let (b, _) = burnside_group(2, 3, 2, 1000).unwrap();
        assert_eq!(cogrowth_table(&b, 3).unwrap().gamma[3], 5);
    }

    #[test]
    fn csv_shape() {
        let t = cogrowth_table(&MarkedGroup::cyclic(3), 3).unwrap();
        assert_eq!(t.to_csv(), "k,gamma,gamma_rate\n0,1,\n1,1,1.000000000000\n2,1,1.000000000000\n3,3,1.442249570307\n");
    }
}
