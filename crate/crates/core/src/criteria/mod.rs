//! Sequence-level checks: trace monotonicity under homomorphisms, the
//! rebalancing map `F_k -> F_l`, Powers averages, free-basis certificates,
//! the `H_n` limit experiment and the metabelian girth tower.

mod basis;
mod hn_limit;
mod sequence;
mod tower;

use num_rational::BigRational;
use serde::Serialize;

use crate::algebra::{power_trace_sequence, AlgebraElement, TraceMethod};
use crate::error::{Error, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::spectral::{operator_norm_bounds_with, SpectralEstimate};
use crate::word::Word;

pub use basis::{free_basis_certify, free_basis_certify_with, BasisCertificate, FreeBasisInstance};
pub use hn_limit::{hn_limit_experiment, HnLimitRow};
pub use sequence::{infinitesimal_report, infinitesimal_report_with, GroupSequence, SequenceOptions, SequenceReport, SequenceRow};
pub use tower::{kernel_words_by_closure, metabelian_girth_tower, GirthTower};

/// A homomorphism given by the images of the marked generators, validated on
/// the defining relators of the source.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    source: MarkedGroup,
    target: MarkedGroup,
    images: Vec<Word>,
}

impl Homomorphism {
    pub fn new(source: &MarkedGroup, target: &MarkedGroup, images: Vec<Word>) -> Result<Self> {
        if images.len() != source.rank() {
            return Err(Error::InvalidHomomorphism(format!(
                "{} images given for {} generators",
                images.len(),
                source.rank()
            )));
        }
        for w in &images {
            target.check_word(w)?;
        }
        let hom = Homomorphism {
            source: source.clone(),
            target: target.clone(),
            images,
        };
        let relators = source.engine().defining_relators().ok_or_else(|| {
            Error::NotApplicable(format!("{} has no finite presentation to validate against", source.name()))
        })?;
        for r in &relators {
            if !target.is_identity_word(&hom.apply_word(r)) {
                return Err(Error::InvalidHomomorphism(format!(
                    "relator {} maps to {} in {}",
                    source.format_word(r),
                    target.describe(&target.evaluate_word(&hom.apply_word(r))),
                    target.name()
                )));
            }
        }
        Ok(hom)
    }

    /// Images written in the target's generator names, e.g. `["x", "x"]`.
    pub fn parse(source: &MarkedGroup, target: &MarkedGroup, images: &[&str]) -> Result<Self> {
        let words = images.iter().map(|s| target.parse_word(s)).collect::<Result<Vec<_>>>()?;
        Self::new(source, target, words)
    }

    pub fn source(&self) -> &MarkedGroup {
        &self.source
    }

    pub fn target(&self) -> &MarkedGroup {
        &self.target
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn apply_word(&self, w: &Word) -> Word {
        let mut out = Word::empty();
        for l in w.letters() {
            let img = &self.images[l.index()];
            out = out.concat(&if l.inverse { img.inverse() } else { img.clone() });
        }
        out
    }

    pub fn apply_element(&self, g: &GroupElement) -> GroupElement {
        let w = self.source.word_of(g).expect("exact engines provide words");
        self.target.evaluate_word(&self.apply_word(&w))
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if !a.group().is_same_group(&self.source) {
            return Err(Error::InvalidInput("element lives in a different group".into()));
        }
        Ok(a.map(&self.target, |g| self.apply_element(g)))
    }
}

/// Termwise comparison `tau((a* a)^n) <= tau((b* b)^n)`.
#[derive(Clone, Debug, Serialize)]
pub struct TraceComparison {
    pub depth: usize,
    pub rows: Vec<TraceComparisonRow>,
    pub holds: bool,
    /// First `n` at which the inequality fails.
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceComparisonRow {
    pub n: usize,
    pub lower: String,
    pub upper: String,
    pub equal: bool,
}

impl TraceComparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,lower,upper,equal\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.n, r.lower, r.upper, r.equal));
        }
        s
    }
}

fn compare_traces(lower: &AlgebraElement, upper: &AlgebraElement, depth: usize) -> Result<TraceComparison> {
    let lo = power_trace_sequence(lower, depth, TraceMethod::Auto)?;
    let hi = power_trace_sequence(upper, depth, TraceMethod::Auto)?;
    let rows: Vec<TraceComparisonRow> = lo
        .traces
        .iter()
        .zip(&hi.traces)
        .enumerate()
        .map(|(i, (l, h))| TraceComparisonRow {
            n: i + 1,
            lower: l.to_string(),
            upper: h.to_string(),
            equal: l == h,
        })
        .collect();
    let witness = lo.traces.iter().zip(&hi.traces).position(|(l, h)| l > h).map(|i| i + 1);
    Ok(TraceComparison {
        depth,
        rows,
        holds: witness.is_none(),
        witness,
    })
}

/// For nonnegative `a`, `tau_Q((e(a)* e(a))^n) >= tau_G((a* a)^n)` for every `n`.
pub fn trace_monotonicity_check(a: &AlgebraElement, hom: &Homomorphism, depth: usize) -> Result<TraceComparison> {
    if !a.is_nonnegative() {
        return Err(Error::InvalidInput("trace monotonicity needs nonnegative coefficients".into()));
    }
    compare_traces(a, &hom.apply(a)?, depth)
}

/// For `0 <= a <= b` termwise, `tau((a* a)^n) <= tau((b* b)^n)`.
pub fn domination_check(a: &AlgebraElement, b: &AlgebraElement, depth: usize) -> Result<TraceComparison> {
    if !a.is_nonnegative() || !a.dominated_by(b) {
        return Err(Error::InvalidInput("domination needs 0 <= a <= b termwise".into()));
    }
    compare_traces(a, b, depth)
}

/// The map `F_k -> F_l` sending `x_i` to `y_(i mod l)` for `i <= lq` and to `1`
/// otherwise, where `k = lq + r`.
#[derive(Clone, Debug, Serialize)]
pub struct Rebalance {
    pub k: usize,
    pub l: usize,
    pub q: usize,
    pub r: usize,
    pub images: Vec<String>,
    /// `e(x_1 + ... + x_k)`.
    pub image: String,
    /// Whether the image equals `q(y_1 + ... + y_l) + r` exactly.
    pub identity_holds: bool,
}

pub fn rebalance_homomorphism(k: usize, l: usize) -> Result<(Homomorphism, Rebalance)> {
    if l == 0 || k < l {
        return Err(Error::InvalidInput(format!("need k >= l >= 1, got k = {k}, l = {l}")));
    }
    let fk = MarkedGroup::free_named((1..=k).map(|i| format!("x{i}")).collect());
    let fl = MarkedGroup::free_named((1..=l).map(|j| format!("y{j}")).collect());
    let (q, r) = (k / l, k % l);
    let images: Vec<Word> = (0..k)
        .map(|i| if i < l * q { Word::gen((i % l) as u16) } else { Word::empty() })
        .collect();
    let hom = Homomorphism::new(&fk, &fl, images)?;
    let sum = |g: &MarkedGroup| {
        AlgebraElement::from_terms(g, (0..g.rank()).map(|i| (g.generator(i), BigRational::from_integer(1.into()))))
    };
    let image = hom.apply(&sum(&fk))?;
    let expected = sum(&fl)
        .scale(&BigRational::from_integer(q.into()))
        .add(&AlgebraElement::one(&fl).scale(&BigRational::from_integer(r.into())))?;
    let report = Rebalance {
        k,
        l,
        q,
        r,
        images: hom.images().iter().map(|w| fl.format_word(w)).collect(),
        image: image.to_string(),
        identity_holds: image.sub(&expected)?.is_zero(),
    };
    Ok((hom, report))
}

/// Trace bounds for `(1/|Y|) sum_y u y g y^-1` together with the exact check
/// that the transformed sum (right factor `g^-1`, or the left multiplier `u`
/// when given) has the same trace sequence.
#[derive(Clone, Debug)]
pub struct PowersAverage {
    pub estimate: SpectralEstimate,
    /// Traces of the conjugate sum and of the transformed sum agree at every depth.
    pub identity_holds: bool,
    /// Support size of the averaged sum.
    pub support: usize,
}

pub fn powers_average_bounds(
    g: &MarkedGroup,
    x: &GroupElement,
    ys: &[GroupElement],
    depth: usize,
    u: Option<&GroupElement>,
) -> Result<PowersAverage> {
    powers_average_bounds_with(g, x, ys, depth, u, TraceMethod::Auto)
}

pub fn powers_average_bounds_with(
    g: &MarkedGroup,
    x: &GroupElement,
    ys: &[GroupElement],
    depth: usize,
    u: Option<&GroupElement>,
    method: TraceMethod,
) -> Result<PowersAverage> {
    if x.is_identity() {
        return Err(Error::InvalidInput("the averaged element must be nontrivial".into()));
    }
    if ys.is_empty() {
        return Err(Error::InvalidInput("the averaging set is empty".into()));
    }
    let w = BigRational::new(1.into(), ys.len().into());
    let conj = |y: &GroupElement| g.multiply(&g.multiply(y, x), &g.inverse(y));
    let s = AlgebraElement::from_terms(g, ys.iter().map(|y| (conj(y), w.clone())));
    let transformed = match u {
        Some(u) => AlgebraElement::from_terms(g, ys.iter().map(|y| (g.multiply(u, &conj(y)), w.clone()))),
        // commutator form [y, x] = y x y^-1 x^-1
        None => AlgebraElement::from_terms(g, ys.iter().map(|y| (g.multiply(&conj(y), &g.inverse(x)), w.clone()))),
    };
    let estimate = operator_norm_bounds_with(&s, depth, method)?;
    let other = power_trace_sequence(&transformed, depth, TraceMethod::Convolution)?;
    let identity_holds = other.traces == estimate.sequence.traces;
    if !identity_holds {
        return Err(Error::invariant("conjugate and transformed sums have different traces"));
    }
    Ok(PowersAverage {
        support: s.support_size(),
        estimate,
        identity_holds,
    })
}

/// `2 sqrt(i - 1) / i`, the norm of the average of a free basis of size `i`.
pub fn free_average_norm(i: usize) -> f64 {
    2.0 * ((i - 1) as f64).sqrt() / i as f64
}

/// `sqrt(2i - 1) / i`, the spectral radius of the free group of rank `i`.
pub fn free_spectral_radius(i: usize) -> f64 {
    ((2 * i - 1) as f64).sqrt() / i as f64
}
