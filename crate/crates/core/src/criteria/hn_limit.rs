use serde::Serialize;

use super::Homomorphism;
use crate::algebra::{averaging_operator, power_trace_sequence, TraceMethod};
use crate::error::{Error, Result};
use crate::group::hn::britton_reduce;
use crate::group::{HnEngine, LamplighterEngine};
use crate::spectral::operator_norm_bounds_with;
use crate::word::Word;

/// One `n` of the limit experiment `H_n -> Z_2 wr Z`.
#[derive(Clone, Debug, Serialize)]
pub struct HnLimitRow {
    pub n: usize,
    pub relators_checked: usize,
    pub depth: usize,
    /// `tau(M^2k)` in `H_n` and in the lamplighter, `k = 1..=depth`.
    pub traces_hn: Vec<String>,
    pub traces_lamp: Vec<String>,
    /// Number of leading depths where the two traces coincide.
    pub equal_prefix: usize,
    pub domination_holds: bool,
    /// Nontrivial `h` in `A_n` with `t^-(2n+1) h t^(2n+1)` Britton-reduced outside `A_n`.
    pub britton_checked: usize,
    pub britton_min_t_syllables: usize,
    /// Some nontrivial `h` already conjugates back into `A_n` by `t^2n`.
    pub exponent_sharp: bool,
    pub rho_hat_hn: f64,
    pub rho_hat_lamp: f64,
    pub rho_lower_hn: f64,
    pub rho_lower_lamp: f64,
}

impl HnLimitRow {
    pub fn csv_header() -> &'static str {
        "n,k,trace_hn,trace_lamp,equal"
    }

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for k in 0..self.depth {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.n,
                k + 1,
                self.traces_hn[k],
                self.traces_lamp[k],
                self.traces_hn[k] == self.traces_lamp[k]
            ));
        }
        s
    }
}

fn conjugate_by_t_power(h: &HnEngine, mask: u64, m: usize) -> Word {
    let t = Word::gen(h.t());
    let mut base = Vec::new();
    let mut x = mask;
    while x != 0 {
        base.push(crate::word::Letter::pos(x.trailing_zeros() as u16 + 1));
        x &= x - 1;
    }
    t.pow(-(m as i64)).concat(&Word(base)).concat(&t.pow(m as i64))
}

fn one(n: usize, depth: usize) -> Result<HnLimitRow> {
    let hn = HnEngine::marked(n)?;
    let lamp = LamplighterEngine::hn_marking(n);
    let engine: &HnEngine = hn.downcast().expect("hn engine");
    // the identity on letters is a homomorphism: every relator dies in the wreath product
    let hom = Homomorphism::new(&hn, &lamp, (0..hn.rank()).map(|i| Word::gen(i as u16)).collect())?;
    let relators_checked = engine.relators().len();

    let m_hn = averaging_operator(&hn, true);
    let m_lamp = hom.apply(&m_hn)?;
    let s_hn = power_trace_sequence(&m_hn, depth, TraceMethod::Convolution)?;
    let s_lamp = power_trace_sequence(&m_lamp, depth, TraceMethod::Convolution)?;
    if let Some(k) = s_hn.traces.iter().zip(&s_lamp.traces).position(|(a, b)| a > b) {
        return Err(Error::invariant(format!(
            "tau_H{n}(M^{}) exceeds the lamplighter trace",
            2 * (k + 1)
        )));
    }
    let equal_prefix = s_hn.traces.iter().zip(&s_lamp.traces).take_while(|(a, b)| a == b).count();

    let m = 2 * n + 1;
    let mut min_t = usize::MAX;
    let masks = 1u64..(1u64 << m);
    for mask in masks.clone() {
        let w = conjugate_by_t_power(engine, mask, m);
        let form = britton_reduce(engine, &w);
        // the engine's normal form is an independent second opinion
        let engine_t = engine.t_length(&hn.evaluate_word(&w));
        if form.in_base() || engine_t != form.t_syllables() {
            return Err(Error::CertificationFailed {
                reason: format!("t^-{m} h t^{m} is not certified outside A_{n}"),
                witness: hn.format_word(&w),
            });
        }
        min_t = min_t.min(form.t_syllables());
    }
    let exponent_sharp = masks.into_iter().any(|mask| britton_reduce(engine, &conjugate_by_t_power(engine, mask, m - 1)).in_base());

    let e_hn = operator_norm_bounds_with(&m_hn, depth, TraceMethod::Convolution)?;
    let e_lamp = operator_norm_bounds_with(&m_lamp, depth, TraceMethod::Convolution)?;
    Ok(HnLimitRow {
        n,
        relators_checked,
        depth,
        traces_hn: s_hn.traces.iter().map(|t| t.to_string()).collect(),
        traces_lamp: s_lamp.traces.iter().map(|t| t.to_string()).collect(),
        equal_prefix,
        domination_holds: true,
        britton_checked: (1usize << m) - 1,
        britton_min_t_syllables: min_t,
        exponent_sharp,
        rho_hat_hn: e_hn.extrapolated,
        rho_hat_lamp: e_lamp.extrapolated,
        rho_lower_hn: e_hn.last_bound(),
        rho_lower_lamp: e_lamp.last_bound(),
    })
}

/// Relator images, termwise trace domination and the Britton certificates for
/// each `n`. Any failure is an error naming the broken invariant.
pub fn hn_limit_experiment(ns: &[usize], depth: usize) -> Result<Vec<HnLimitRow>> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ns.par_iter().map(|&n| one(n, depth)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ns.iter().map(|&n| one(n, depth)).collect()
    }
}
