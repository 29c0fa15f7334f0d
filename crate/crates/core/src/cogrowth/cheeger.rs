use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FiniteTable, GroupElement, MarkedGroup, DEFAULT_ELEMENT_CAP};
use crate::spectral::spectral_radius_bounds;
use crate::word::Letter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheegerMode {
    /// The literal infimum over all finite subsets; `0` for a finite group (`F = G`).
    PaperExactFinite,
    /// Minimum over connected subsets with `|F| <= |G|/2`, exhaustively.
    BalancedFinite,
    /// `|dB_r| / |B_r|` over metric balls: certified upper bounds.
    BallUpperInfinite,
}

impl std::str::FromStr for CheegerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-exact-finite" | "paper" => Ok(CheegerMode::PaperExactFinite),
            "balanced-finite" | "balanced" => Ok(CheegerMode::BalancedFinite),
            "ball-upper-infinite" | "ball" => Ok(CheegerMode::BallUpperInfinite),
            other => Err(Error::InvalidInput(format!("unknown Cheeger mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerWitness {
    pub size: usize,
    pub boundary: usize,
    /// Elements of `F` (omitted for balls and whole groups).
    pub elements: Vec<String>,
    pub radius: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerResult {
    pub group: String,
    pub mode: CheegerMode,
    /// Exact ratio `|dF| / |F|`.
    pub value: String,
    pub value_f64: f64,
    pub witness: CheegerWitness,
    /// Ball mode: `(r, |dB_r|, |B_r|)` for every radius computed.
    pub profile: Vec<(usize, usize, usize)>,
    /// Number of subsets examined (balanced mode).
    pub subsets_examined: u64,
}

impl CheegerResult {
    pub fn ratio(&self) -> BigRational {
        let w = &self.witness;
        if w.size == 0 {
            return BigRational::zero();
        }
        BigRational::new(w.boundary.into(), w.size.into())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn result(
    g: &MarkedGroup,
    mode: CheegerMode,
    boundary: usize,
    size: usize,
    elements: Vec<String>,
    radius: Option<usize>,
) -> CheegerResult {
    let value = BigRational::new(boundary.into(), size.into());
    CheegerResult {
        group: g.name().to_string(),
        mode,
        value: value.to_string(),
        value_f64: value.to_f64().unwrap_or(f64::NAN),
        witness: CheegerWitness {
            size,
            boundary,
            elements,
            radius,
        },
        profile: Vec::new(),
        subsets_examined: 0,
    }
}

/// `h(G, X)` in the 2|X|-regular Cayley multigraph (an involution contributes two
/// parallel edges). `limit` is the subset budget (balanced) or the radius (ball).
pub fn cheeger_constant(g: &MarkedGroup, mode: CheegerMode, limit: usize) -> Result<CheegerResult> {
    match mode {
        CheegerMode::PaperExactFinite => {
            let n = g
                .order()
                .ok_or_else(|| Error::NotApplicable(format!("{} is not a finite engine", g.name())))?;
            Ok(result(g, mode, 0, n, vec!["G".into()], None))
        }
        CheegerMode::BalancedFinite => balanced(g, limit),
        CheegerMode::BallUpperInfinite => ball_bounds(g, limit),
    }
}

fn ball_bounds(g: &MarkedGroup, radius: usize) -> Result<CheegerResult> {
    if radius == 0 {
        return Err(Error::InvalidInput("ball radius must be at least 1".into()));
    }
    let spheres = g.ball(radius, DEFAULT_ELEMENT_CAP)?;
    let dist: FxHashMap<&GroupElement, usize> = spheres
        .iter()
        .enumerate()
        .flat_map(|(r, s)| s.iter().map(move |e| (e, r)))
        .collect();
    let mut profile = Vec::new();
    let mut size = 1usize;
    for r in 1..=radius {
        let Some(outer) = spheres.get(r) else { break };
        size += outer.len();
        // only the outer sphere has edges leaving B_r
        let boundary: usize = outer
            .iter()
            .map(|e| {
                Letter::alphabet(g.rank())
                    .filter(|&l| dist.get(&g.engine().mul_letter(e, l)).is_none_or(|&d| d > r))
                    .count()
            })
            .sum();
        profile.push((r, boundary, size));
    }
    // best certified upper bound over the radii computed
    let &(r, b, s) = profile
        .iter()
        .min_by(|x, y| (x.1 * y.2).cmp(&(y.1 * x.2)).then(y.0.cmp(&x.0)))
        .ok_or_else(|| Error::NotApplicable(format!("{} has no elements beyond the identity", g.name())))?;
    let mut res = result(g, CheegerMode::BallUpperInfinite, b, s, Vec::new(), Some(r));
    res.profile = profile;
    Ok(res)
}

/// Exhaustive search over connected subsets containing the identity. Vertex
/// transitivity makes fixing the identity lossless, and the ratio of a
/// disconnected set is at least that of its best component.
fn balanced(g: &MarkedGroup, budget: usize) -> Result<CheegerResult> {
    let n = g
        .order()
        .ok_or_else(|| Error::NotApplicable(format!("{} is not a finite engine", g.name())))?;
    if n > 128 {
        return Err(Error::resource("balanced Cheeger search (group order)", 128));
    }
    if n < 2 {
        return Err(Error::NotApplicable("balanced Cheeger constant of the trivial group".into()));
    }
    let t = FiniteTable::from_marked(g, n)?;
    // adjacency as letter targets
    let nbr: Vec<Vec<usize>> = (0..n as u32)
        .map(|v| Letter::alphabet(g.rank()).map(|l| t.act(v, l) as usize).collect())
        .collect();
    let nbr_mask: Vec<u128> = nbr.iter().map(|v| v.iter().fold(0u128, |m, &w| m | 1 << w)).collect();
    struct Search<'a> {
        nbr: &'a [Vec<usize>],
        nbr_mask: &'a [u128],
        max: usize,
        best: (usize, usize, u128),
        examined: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn visit(&mut self, set: u128, size: usize, boundary: usize, cand: u128, banned: u128) -> Result<()> {
            self.examined += 1;
            if self.examined > self.budget {
                return Err(Error::resource("balanced Cheeger subsets", self.budget as usize));
            }
            let (bb, bs, _) = self.best;
            if boundary * bs < bb * size {
                self.best = (boundary, size, set);
            }
            if size == self.max {
                return Ok(());
            }
            let mut banned = banned;
            let mut rest = cand;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                banned |= 1 << v;
                let s2 = set | 1 << v;
                let into_old = self.nbr[v].iter().filter(|&&w| set >> w & 1 == 1).count();
                let out_new = self.nbr[v].iter().filter(|&&w| s2 >> w & 1 == 0).count();
                let b2 = boundary + out_new - into_old;
                let c2 = (cand | self.nbr_mask[v]) & !banned & !s2;
                self.visit(s2, size + 1, b2, c2, banned)?;
            }
            Ok(())
        }
    }
    let root_boundary = nbr[0].iter().filter(|&&w| w != 0).count();
    let mut s = Search {
        nbr: &nbr,
        nbr_mask: &nbr_mask,
        max: n / 2,
        best: (root_boundary, 1, 1),
        examined: 0,
        budget: budget as u64,
    };
    s.visit(1, 1, root_boundary, nbr_mask[0] & !1, 1)?;
    let (b, size, set) = s.best;
    let elements = (0..n)
        .filter(|&i| set >> i & 1 == 1)
        .map(|i| g.format_word(t.rep(i as u32)))
        .collect();
    let mut res = result(g, CheegerMode::BalancedFinite, b, size, elements, None);
    res.subsets_examined = s.examined;
    Ok(res)
}

/// The three sides of the Cheeger-Buser sandwich.
#[derive(Clone, Debug, Serialize)]
pub struct CheegerBuserReport {
    pub group: String,
    pub mode: CheegerMode,
    /// Certified lower bound on `rho` (last raw bound) and the extrapolated value.
    pub rho_lower: f64,
    pub rho_hat: f64,
    pub rho_exact: bool,
    pub h: f64,
    /// `2|X|(1 - rho)/(2|X| - 1)`, `h/(2|X|)`, `sqrt(1 - rho^2)` at `rho_hat`.
    pub left: f64,
    pub middle: f64,
    pub right: f64,
    /// `sqrt(1 - rho_lower^2)`, an upper bound for the right side.
    pub right_upper: f64,
    /// Whether the inequalities were certified (exact inputs) and then asserted.
    pub certified: bool,
    pub holds: bool,
}

/// Evaluates the sandwich. It is asserted only when both `rho` and `h` are exact
/// (finite groups in paper mode); otherwise the sides are reported.
pub fn cheeger_buser_check(g: &MarkedGroup, depth: usize, mode: CheegerMode, limit: usize) -> Result<CheegerBuserReport> {
    let h = cheeger_constant(g, mode, limit)?;
    let m2 = (2 * g.rank()) as f64;
    let finite = g.order().is_some();
    let (rho_lower, rho_hat) = if finite {
        (1.0, 1.0)
    } else {
        let e = spectral_radius_bounds(g, depth)?;
        (e.last_bound(), e.extrapolated)
    };
    let left = m2 * (1.0 - rho_hat) / (m2 - 1.0);
    let middle = h.value_f64 / m2;
    let right = (1.0 - rho_hat * rho_hat).max(0.0).sqrt();
    let right_upper = (1.0 - rho_lower * rho_lower).max(0.0).sqrt();
    let certified = finite && mode == CheegerMode::PaperExactFinite;
    let holds = if certified {
        // rho = 1 and h = 0 exactly: every side is 0
        h.ratio().is_zero()
    } else {
        left <= middle + 1e-12 && middle <= right + 1e-12
    };
    if certified && !holds {
        return Err(Error::invariant(format!("Cheeger-Buser sandwich fails for {}", g.name())));
    }
    Ok(CheegerBuserReport {
        group: g.name().to_string(),
        mode,
        rho_lower,
        rho_hat,
        rho_exact: finite,
        h: h.value_f64,
        left,
        middle,
        right,
        right_upper,
        certified,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_involution_edges() {
        let z2 = MarkedGroup::cyclic(2);
        let r = cheeger_constant(&z2, CheegerMode::BalancedFinite, 1000).unwrap();
        assert_eq!(r.value, "2");
        let k4 = MarkedGroup::abelian(&[2, 2]);
        let r = cheeger_constant(&k4, CheegerMode::BalancedFinite, 1000).unwrap();
        assert_eq!(r.value, "2");
        assert_eq!(r.witness.size, 2);
    }

    #[test]
    fn balanced_matches_brute_force_on_small_groups() {
        for g in [MarkedGroup::cyclic(6), MarkedGroup::cyclic(9), MarkedGroup::abelian(&[2, 3]), MarkedGroup::abelian(&[3, 3])] {
            let r = cheeger_constant(&g, CheegerMode::BalancedFinite, 1 << 20).unwrap();
            let t = FiniteTable::from_marked(&g, 100).unwrap();
            let n = t.order();
            let mut best: Option<BigRational> = None;
            for mask in 1u32..(1 << n) {
                let size = mask.count_ones() as usize;
                if size > n / 2 {
                    continue;
                }
                let mut b = 0;
                for v in 0..n as u32 {
                    if mask >> v & 1 == 1 {
                        b += Letter::alphabet(g.rank()).filter(|&l| mask >> t.act(v, l) & 1 == 0).count();
                    }
                }
                let q = BigRational::new(b.into(), size.into());
                if best.as_ref().is_none_or(|x| q < *x) {
                    best = Some(q);
                }
            }
            assert_eq!(r.ratio(), best.unwrap(), "{}", g.name());
        }
    }

    #[test]
    fn free_group_balls() {
        let f2 = MarkedGroup::free(2);
        let r = cheeger_constant(&f2, CheegerMode::BallUpperInfinite, 3).unwrap();
        assert_eq!(r.value, "108/53");
        assert_eq!(r.profile.len(), 3);
        let z = MarkedGroup::free_abelian(1);
        let r = cheeger_constant(&z, CheegerMode::BallUpperInfinite, 5).unwrap();
        assert_eq!(r.value, "2/11");
    }

    #[test]
    fn paper_mode_sandwich() {
        let g = MarkedGroup::abelian(&[2, 3]);
        let rep = cheeger_buser_check(&g, 10, CheegerMode::PaperExactFinite, 0).unwrap();
        assert!(rep.certified && rep.holds);
        assert_eq!((rep.left, rep.middle, rep.right), (0.0, 0.0, 0.0));
        assert!(cheeger_constant(&MarkedGroup::free(2), CheegerMode::PaperExactFinite, 0).is_err());
    }
}
