use serde::Serialize;

use crate::algebra::averaging_operator;
use crate::cogrowth::{cheeger_constant, cogrowth_table, CheegerMode};
use crate::error::{Error, Result};
use crate::group::MarkedGroup;
use crate::spectral::{operator_norm_bounds, spectral_radius_bounds};

/// An indexed family `{(G_i, X_i)}` with strictly increasing indices.
#[derive(Clone, Debug)]
pub struct GroupSequence {
    members: Vec<(usize, MarkedGroup)>,
}

impl GroupSequence {
    pub fn new(members: Vec<(usize, MarkedGroup)>) -> Result<Self> {
        if members.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("sequence indices must increase strictly".into()));
        }
        Ok(GroupSequence { members })
    }

    /// `F_i` for `i` in `ranks`.
    pub fn free(ranks: impl IntoIterator<Item = usize>) -> Self {
        Self::new(ranks.into_iter().map(|i| (i, MarkedGroup::free(i))).collect()).expect("ranks increase")
    }

    pub fn members(&self) -> &[(usize, MarkedGroup)] {
        &self.members
    }
}

#[derive(Clone, Debug)]
pub struct SequenceOptions {
    pub trace_depth: usize,
    pub cogrowth_depth: usize,
    /// Ball radius for infinite members.
    pub cheeger_radius: usize,
    /// Subset budget for the balanced search on finite members.
    pub cheeger_budget: usize,
}

impl SequenceOptions {
    pub fn with_depth(depth: usize) -> Self {
        SequenceOptions {
            trace_depth: depth,
            cogrowth_depth: depth.min(40),
            cheeger_radius: 4,
            cheeger_budget: 1 << 22,
        }
    }
}

/// One index of the report. Every value carries its mode in `mode_flags`.
#[derive(Clone, Debug, Serialize)]
pub struct SequenceRow {
    pub i: usize,
    /// Extrapolated `||A_X||`.
    pub ax_bound: Option<f64>,
    /// Extrapolated `rho(G_i, X_i)`.
    pub rho_bound: Option<f64>,
    /// `h / (2|X|)`.
    pub cheeger_ratio: Option<f64>,
    /// `omega / |X|`.
    pub omega_ratio: Option<f64>,
    pub girth: Option<usize>,
    pub mode_flags: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    pub rows: Vec<SequenceRow>,
    pub ax_decreasing: bool,
    pub rho_decreasing: bool,
    pub omega_ratio_decreasing: bool,
    pub cheeger_ratio_increasing: bool,
    pub ranks_increasing: bool,
    /// `trend-consistent` when every computable trend points to an infinitesimal
    /// spectral radius, otherwise `not-infinitesimal`. Finite depth never certifies the limit.
    pub verdict: String,
}

impl SequenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("serializable")
    }

    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12}"));
        let mut s = String::from("i,ax_bound,rho_bound,cheeger_ratio,omega_ratio,girth,mode_flags\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.i,
                f(r.ax_bound),
                f(r.rho_bound),
                f(r.cheeger_ratio),
                f(r.omega_ratio),
                r.girth.map_or(String::new(), |g| g.to_string()),
                r.mode_flags.join(";")
            ));
        }
        s
    }
}

fn row(i: usize, g: &MarkedGroup, opt: &SequenceOptions) -> SequenceRow {
    let m = g.rank() as f64;
    let mut flags = Vec::new();
    let err = |flags: &mut Vec<String>, what: &str, e: Error| flags.push(format!("{what}=error({e})"));

    let ax_bound = match operator_norm_bounds(&averaging_operator(g, false), opt.trace_depth) {
        Ok(e) => {
            flags.push(format!("ax=extrapolated(lower {:.12})", e.last_bound()));
            Some(e.extrapolated)
        }
        Err(e) => {
            err(&mut flags, "ax", e);
            None
        }
    };
    let rho_bound = if g.order().is_some() {
        flags.push("rho=exact".into());
        Some(1.0)
    } else {
        match spectral_radius_bounds(g, opt.trace_depth) {
            Ok(e) => {
                flags.push(format!("rho=extrapolated(lower {:.12})", e.last_bound()));
                Some(e.extrapolated)
            }
            Err(e) => {
                err(&mut flags, "rho", e);
                None
            }
        }
    };
    let cheeger = match g.order() {
        Some(n) if n <= 128 => cheeger_constant(g, CheegerMode::BalancedFinite, opt.cheeger_budget),
        Some(_) => Err(Error::resource("balanced Cheeger search (group order)", 128)),
        None => cheeger_constant(g, CheegerMode::BallUpperInfinite, opt.cheeger_radius),
    };
    let cheeger_ratio = match cheeger {
        Ok(h) => {
            flags.push(
                match h.mode {
                    CheegerMode::BallUpperInfinite => "cheeger=ball-upper",
                    _ => "cheeger=balanced-exact",
                }
                .into(),
            );
            Some(h.value_f64 / (2.0 * m))
        }
        Err(e) => {
            err(&mut flags, "cheeger", e);
            None
        }
    };
    let (omega_ratio, girth) = match cogrowth_table(g, opt.cogrowth_depth) {
        Ok(t) => {
            if t.girth.is_none() {
                flags.push(format!("girth=exceeds({})", opt.cogrowth_depth));
                flags.push("omega=trivial-kernel-to-depth".into());
            } else {
                flags.push("girth=exact".into());
                flags.push("omega=report-only".into());
            }
            (Some(t.omega_estimate() / m), t.girth)
        }
        Err(e) => {
            err(&mut flags, "cogrowth", e);
            (None, None)
        }
    };
    SequenceRow {
        i,
        ax_bound,
        rho_bound,
        cheeger_ratio,
        omega_ratio,
        girth,
        mode_flags: flags,
    }
}

fn monotone(v: &[Option<f64>], decreasing: bool) -> bool {
    let xs: Vec<f64> = v.iter().flatten().copied().collect();
    xs.len() == v.len() && xs.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] })
}

pub fn infinitesimal_report(seq: &GroupSequence, depth: usize) -> Result<SequenceReport> {
    infinitesimal_report_with(seq, &SequenceOptions::with_depth(depth))
}

/// Per-index errors are recorded in the row flags, never propagated.
pub fn infinitesimal_report_with(seq: &GroupSequence, opt: &SequenceOptions) -> Result<SequenceReport> {
    if opt.trace_depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    let rows: Vec<SequenceRow> = {
        use rayon::prelude::*;
        seq.members.par_iter().map(|(i, g)| row(*i, g, opt)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<SequenceRow> = seq.members.iter().map(|(i, g)| row(*i, g, opt)).collect();

    let col = |f: fn(&SequenceRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    let ax_decreasing = monotone(&col(|r| r.ax_bound), true);
    let rho_decreasing = monotone(&col(|r| r.rho_bound), true);
    let omega_ratio_decreasing = monotone(&col(|r| r.omega_ratio), true);
    let cheeger_ratio_increasing = monotone(&col(|r| r.cheeger_ratio), false);
    let ranks = seq.members.iter().map(|(_, g)| g.rank()).collect::<Vec<_>>();
    let ranks_increasing = ranks.windows(2).all(|w| w[1] > w[0]);
    let consistent = rows.len() >= 2 && ranks_increasing && ax_decreasing && rho_decreasing;
    Ok(SequenceReport {
        rows,
        ax_decreasing,
        rho_decreasing,
        omega_ratio_decreasing,
        cheeger_ratio_increasing,
        ranks_increasing,
        verdict: if consistent { "trend-consistent" } else { "not-infinitesimal" }.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{free_average_norm, free_spectral_radius};

    #[test]
    fn free_family() {
        let rep = infinitesimal_report(&GroupSequence::free(2..=5), 60).unwrap();
        for r in &rep.rows {
            assert!((r.ax_bound.unwrap() - free_average_norm(r.i)).abs() < 0.01, "{r:?}");
            assert!((r.rho_bound.unwrap() - free_spectral_radius(r.i)).abs() < 0.01, "{r:?}");
            assert_eq!(r.girth, None);
        }
        assert!(rep.ax_decreasing && rep.rho_decreasing && rep.cheeger_ratio_increasing);
        assert_eq!(rep.verdict, "trend-consistent");
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let keys: Vec<_> = json[0].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 7);
        for k in ["i", "ax_bound", "rho_bound", "cheeger_ratio", "omega_ratio", "girth", "mode_flags"] {
            assert!(keys.iter().any(|x| x == k));
        }
    }

    #[test]
    fn constant_amenable_family() {
        let seq = GroupSequence::new((1..=3).map(|i| (i, MarkedGroup::free_abelian(2))).collect()).unwrap();
        let rep = infinitesimal_report(&seq, 30).unwrap();
        assert_eq!(rep.verdict, "not-infinitesimal");
        for r in &rep.rows {
            assert!(r.rho_bound.unwrap() > 0.9);
            assert_eq!(r.girth, Some(4));
        }
    }

    #[test]
    fn errors_stay_local() {
        let seq = GroupSequence::new(vec![(1, MarkedGroup::cyclic(3)), (2, MarkedGroup::cyclic(200))]).unwrap();
        let rep = infinitesimal_report(&seq, 6).unwrap();
        assert!(rep.rows[0].cheeger_ratio.is_some());
        assert!(rep.rows[1].cheeger_ratio.is_none());
        assert!(rep.rows[1].mode_flags.iter().any(|f| f.starts_with("cheeger=error")));
        assert!(GroupSequence::new(vec![(2, MarkedGroup::free(2)), (2, MarkedGroup::free(3))]).is_err());
    }
}
