//! Marked groups `(G, X)` and their word-problem engines.
//!
//! Every engine stores elements as a canonical byte string: two elements are
//! equal iff their bytes are equal, and the identity is always the empty string.

mod abelian;
pub mod file;
mod finite;
mod free;
mod free_product;
pub mod hn;
mod lamplighter;
pub mod metabelian;

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::ControlFlow;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHasher};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::syntax;
use crate::word::{Letter, Word};

pub use abelian::AbelianEngine;
pub use finite::{
    burnside_group, coset_enumerate, finite_group, BurnsideReport, FinitePresentation, FiniteTable,
    DEFAULT_COSET_CAP,
};
pub use free::FreeEngine;
pub use free_product::{free_product_normal_form, FreeProductEngine, Syllable};
pub use hn::{britton_reduce, BrittonForm, HnEngine};
pub use lamplighter::{LampElement, LamplighterEngine};
pub use metabelian::{fox_derivative, metabelian_is_trivial, MetabelianEngine};

/// Canonical element of some engine, with a cached hash.
#[derive(Clone)]
pub struct GroupElement {
    bytes: Box<[u8]>,
    hash: u64,
}

impl GroupElement {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let mut h = FxHasher::default();
        h.write(&bytes);
        h.write_usize(bytes.len());
        GroupElement {
            bytes: bytes.into_boxed_slice(),
            hash: h.finish(),
        }
    }

    pub fn identity() -> Self {
        GroupElement::from_bytes(Vec::new())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn is_identity(&self) -> bool {
        self.bytes.is_empty()
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.bytes == other.bytes
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bytes
            .len()
            .cmp(&other.bytes.len())
            .then_with(|| self.bytes.cmp(&other.bytes))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement(")?;
        for b in self.bytes.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Free,
    Abelian,
    CosetTable,
    FreeProduct,
    Hn,
    Lamplighter,
    Metabelianized,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EngineKind::Free => "free",
            EngineKind::Abelian => "abelian",
            EngineKind::CosetTable => "coset-table",
            EngineKind::FreeProduct => "free-product",
            EngineKind::Hn => "hn",
            EngineKind::Lamplighter => "lamplighter",
            EngineKind::Metabelianized => "metabelianized",
        };
        f.write_str(s)
    }
}

/// A group with an exact word problem, generated by `rank()` marked generators.
pub trait GroupEngine: Any + Send + Sync + fmt::Debug {
    fn kind(&self) -> EngineKind;

    /// Number of marked generators.
    fn rank(&self) -> usize;

    fn mul_letter(&self, g: &GroupElement, letter: Letter) -> GroupElement;

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement;

    fn inverse(&self, g: &GroupElement) -> GroupElement;

    /// Group order when the engine knows it is finite.
    fn order(&self) -> Option<usize> {
        None
    }

    /// A finite defining relator set, if the engine has one.
    fn defining_relators(&self) -> Option<Vec<Word>> {
        None
    }

    /// Some word over the marked generators that evaluates to `g`.
    fn word_of(&self, g: &GroupElement) -> Option<Word>;

    /// Engine-specific rendering; `None` falls back to `word_of`.
    fn describe(&self, _g: &GroupElement, _names: &[String]) -> Option<String> {
        None
    }
}

/// The pair `(G, X)`: an engine together with named generators.
#[derive(Clone)]
pub struct MarkedGroup {
    name: String,
    generators: Arc<Vec<String>>,
    engine: Arc<dyn GroupEngine>,
}

impl fmt::Debug for MarkedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkedGroup")
            .field("name", &self.name)
            .field("generators", &self.generators)
            .field("engine", &self.engine.kind())
            .finish()
    }
}

impl MarkedGroup {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<String>,
        engine: Arc<dyn GroupEngine>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("a marked group needs at least one generator".into()));
        }
        if generators.len() != engine.rank() {
            return Err(Error::InvalidInput(format!(
                "{} generator names for an engine of rank {}",
                generators.len(),
                engine.rank()
            )));
        }
        if generators.len() > u16::MAX as usize / 2 {
            return Err(Error::InvalidInput("too many generators".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(Error::InvalidInput(format!("duplicate generator name `{g}`")));
            }
        }
        Ok(MarkedGroup {
            name: name.into(),
            generators: Arc::new(generators),
            engine,
        })
    }

    /// Free group on `x1..xm`.
    pub fn free(rank: usize) -> Self {
        let names = if rank == 1 {
            vec!["x".to_string()]
        } else {
            (1..=rank).map(|i| format!("x{i}")).collect()
        };
        Self::free_named(names)
    }

    pub fn free_named(names: Vec<String>) -> Self {
        let rank = names.len();
        MarkedGroup::new(format!("F{rank}"), names, Arc::new(FreeEngine::new(rank)))
            .expect("valid free group")
    }

    /// `Z^a x Z_{n_1} x ...`; an order of `0` means infinite cyclic.
    pub fn abelian(orders: &[u64]) -> Self {
        let names: Vec<String> = if orders.len() == 1 {
            vec!["x".into()]
        } else if orders.len() <= 3 {
            ["a", "b", "c"][..orders.len()].iter().map(|s| s.to_string()).collect()
        } else {
            (1..=orders.len()).map(|i| format!("x{i}")).collect()
        };
        let name = orders
            .iter()
            .map(|&o| if o == 0 { "Z".to_string() } else { format!("Z{o}") })
            .collect::<Vec<_>>()
            .join("x");
        MarkedGroup::new(name, names, Arc::new(AbelianEngine::new(orders.to_vec())))
            .expect("valid abelian group")
    }

    /// `Z^k` with the standard marking.
    pub fn free_abelian(rank: usize) -> Self {
        Self::abelian(&vec![0; rank])
    }

    /// Cyclic group of order `n`.
    pub fn cyclic(n: u64) -> Self {
        Self::abelian(&[n])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn engine(&self) -> &dyn GroupEngine {
        self.engine.as_ref()
    }

    pub fn engine_arc(&self) -> Arc<dyn GroupEngine> {
        self.engine.clone()
    }

    pub fn kind(&self) -> EngineKind {
        self.engine.kind()
    }

    /// The concrete engine, when it is of type `E`.
    pub fn downcast<E: GroupEngine>(&self) -> Option<&E> {
        (self.engine.as_ref() as &dyn Any).downcast_ref::<E>()
    }

    pub fn order(&self) -> Option<usize> {
        self.engine.order()
    }

    pub fn is_same_group(&self, other: &MarkedGroup) -> bool {
        Arc::ptr_eq(&self.engine, &other.engine)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity()
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        self.engine
            .mul_letter(&GroupElement::identity(), Letter::pos(i as u16))
    }

    pub fn letter(&self, l: Letter) -> GroupElement {
        self.engine.mul_letter(&GroupElement::identity(), l)
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.engine.multiply(a, b)
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        self.engine.inverse(g)
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.max_generator() {
            Some(g) if g as usize >= self.rank() => Err(Error::InvalidInput(format!(
                "generator index {g} out of range for {} generators",
                self.rank()
            ))),
            _ => Ok(()),
        }
    }

    /// Image of `w` under `F(X) -> G`.
    pub fn evaluate_word(&self, w: &Word) -> GroupElement {
        let mut g = GroupElement::identity();
        for &l in w.letters() {
            g = self.engine.mul_letter(&g, l);
        }
        g
    }

    pub fn is_identity_word(&self, w: &Word) -> bool {
        self.evaluate_word(w).is_identity()
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        syntax::parse_word(text, &self.generators)
    }

    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        Ok(self.evaluate_word(&self.parse_word(text)?))
    }

    pub fn word_of(&self, g: &GroupElement) -> Option<Word> {
        self.engine.word_of(g)
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.display_with(&self.generators).to_string()
    }

    pub fn describe(&self, g: &GroupElement) -> String {
        if let Some(s) = self.engine.describe(g, &self.generators) {
            return s;
        }
        match self.engine.word_of(g) {
            Some(w) => self.format_word(&w),
            None => format!("{g:?}"),
        }
    }

    /// Elements of the ball of radius `r`, found by breadth-first search over `X^{±1}`.
    pub fn ball(&self, r: usize, cap: usize) -> Result<Vec<Vec<GroupElement>>> {
        let mut seen: FxHashMap<GroupElement, ()> = FxHashMap::default();
        let id = GroupElement::identity();
        seen.insert(id.clone(), ());
        let mut spheres = vec![vec![id]];
        for _ in 0..r {
            let mut next = Vec::new();
            for g in spheres.last().unwrap() {
                for l in Letter::alphabet(self.rank()) {
                    let h = self.engine.mul_letter(g, l);
                    if !seen.contains_key(&h) {
                        seen.insert(h.clone(), ());
                        next.push(h);
                        if seen.len() > cap {
                            return Err(Error::resource("ball elements", cap));
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            spheres.push(next);
        }
        Ok(spheres)
    }
}

/// Default cap on distinct elements tracked by enumerations.
pub const DEFAULT_ELEMENT_CAP: usize = 10_000_000;

/// Word-count profile: for each element, the number of freely reduced words of
/// each length `0..=r` that evaluate to it.
pub type BallProfile = BTreeMap<GroupElement, Vec<u128>>;

/// Reduced-word dynamic program shared by ball enumeration and cogrowth.
///
/// Calls `visit(length, element, count)` for every element reached at each
/// length with the exact number of reduced words of that length ending there.
/// Returning `Break` stops after the current layer.
pub(crate) fn reduced_word_layers(
    g: &MarkedGroup,
    depth: usize,
    cap: usize,
    mut visit: impl FnMut(usize, &GroupElement, u128) -> ControlFlow<()>,
) -> Result<()> {
    let m = g.rank();
    if visit(0, &GroupElement::identity(), 1).is_break() || depth == 0 {
        return Ok(());
    }
    // (element, last letter code) -> count
    let mut layer: FxHashMap<(GroupElement, u8), u128> = FxHashMap::default();
    for l in Letter::alphabet(m) {
        *layer.entry((g.letter(l), l.code() as u8)).or_default() += 1;
    }
    for k in 1..=depth {
        if k > 1 {
            let mut next: FxHashMap<(GroupElement, u8), u128> = FxHashMap::default();
            for ((el, last), c) in &layer {
                let back = Letter::from_code(*last as usize).inv();
                for l in Letter::alphabet(m) {
                    if l == back {
                        continue;
                    }
                    let h = g.engine.mul_letter(el, l);
                    let slot = next.entry((h, l.code() as u8)).or_default();
                    *slot = slot
                        .checked_add(*c)
                        .ok_or_else(|| Error::resource("reduced-word count overflow (u128)", k))?;
                }
                if next.len() > cap {
                    return Err(Error::resource("reduced-word DP states", cap));
                }
            }
            layer = next;
        }
        // conservation: exactly 2m(2m-1)^(k-1) reduced words of length k
        let total = layer
            .values()
            .try_fold(0u128, |acc, c| acc.checked_add(*c))
            .ok_or_else(|| Error::resource("reduced-word count overflow (u128)", k))?;
        let expected = (2 * m as u128)
            .checked_mul((2 * m as u128 - 1).checked_pow(k as u32 - 1).unwrap_or(u128::MAX))
            .unwrap_or(u128::MAX);
        if expected != u128::MAX && total != expected {
            return Err(Error::invariant(format!(
                "reduced-word DP lost words at length {k}: {total} != {expected}"
            )));
        }
        let mut per_element: FxHashMap<&GroupElement, u128> = FxHashMap::default();
        for ((el, _), c) in &layer {
            *per_element.entry(el).or_default() += c;
        }
        let mut sorted: Vec<_> = per_element.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut stop = false;
        for (el, c) in sorted {
            stop |= visit(k, el, c).is_break();
        }
        if stop {
            break;
        }
    }
    Ok(())
}

/// For each element reachable by a reduced word of length `<= r`, the exact
/// number of reduced words of each length evaluating to it.
pub fn ball_enumerate(g: &MarkedGroup, r: usize, cap: usize) -> Result<BallProfile> {
    let mut out: BallProfile = BTreeMap::new();
    let mut err = None;
    reduced_word_layers(g, r, cap, |k, el, c| {
        if err.is_some() {
            return ControlFlow::Break(());
        }
        if !out.contains_key(el) && out.len() >= cap {
            err = Some(Error::resource("ball elements", cap));
            return ControlFlow::Break(());
        }
        out.entry(el.clone()).or_insert_with(|| vec![0; r + 1])[k] += c;
        ControlFlow::Continue(())
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::word::reduce_word;
    use proptest::prelude::*;

    #[test]
    fn free_ball_radius_two() {
        let f2 = MarkedGroup::free(2);
        let prof = ball_enumerate(&f2, 2, 1000).unwrap();
        assert_eq!(prof.len(), 17);
        for counts in prof.values() {
            assert_eq!(counts.iter().sum::<u128>(), 1);
        }
    }

    #[test]
    fn z2_ball_radius_one() {
        let z2 = MarkedGroup::free_abelian(2);
        let prof = ball_enumerate(&z2, 1, 1000).unwrap();
        assert_eq!(prof.len(), 5);
    }

    #[test]
    fn ball_length_totals() {
        let z3 = MarkedGroup::cyclic(3);
        let prof = ball_enumerate(&z3, 6, 1000).unwrap();
        for k in 1..=6usize {
            let total: u128 = prof.values().map(|c| c[k]).sum();
            assert_eq!(total, 2);
        }
        let z2 = MarkedGroup::free_abelian(2);
        let prof = ball_enumerate(&z2, 5, 10_000).unwrap();
        for k in 1..=5u32 {
            let total: u128 = prof.values().map(|c| c[k as usize]).sum();
            assert_eq!(total, 4 * 3u128.pow(k - 1));
        }
    }

    #[test]
    fn ball_cap_is_enforced() {
        let f2 = MarkedGroup::free(2);
        assert!(matches!(
            ball_enumerate(&f2, 6, 50),
            Err(Error::ResourceExceeded { .. })
        ));
    }

    #[test]
    fn marked_group_validation() {
        let e = Arc::new(FreeEngine::new(2));
        assert!(MarkedGroup::new("x", vec!["a".into(), "a".into()], e.clone()).is_err());
        assert!(MarkedGroup::new("x", vec!["a".into()], e).is_err());
    }

    pub(crate) fn arb_word(rank: u16, max_len: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec((0..rank, any::<bool>()), 0..max_len)
            .prop_map(|v| Word(v.into_iter().map(|(g, i)| Letter::new(g, i)).collect()))
    }

    /// Homomorphism and inverse laws shared by every engine.
    pub(crate) fn check_engine_laws(g: &MarkedGroup, u: &Word, v: &Word) {
        let gu = g.evaluate_word(u);
        let gv = g.evaluate_word(v);
        assert_eq!(g.evaluate_word(&u.concat(v)), g.multiply(&gu, &gv), "{g:?}");
        assert_eq!(g.evaluate_word(&u.inverse()), g.inverse(&gu), "{g:?}");
        assert!(g.evaluate_word(&Word::empty()).is_identity());
        assert_eq!(g.evaluate_word(&reduce_word(u)), gu);
        if let Some(w) = g.word_of(&gu) {
            assert_eq!(g.evaluate_word(&w), gu, "word_of round trip in {g:?}");
        }
    }

    proptest! {
        #[test]
        fn engine_laws_free_and_abelian(u in arb_word(3, 12), v in arb_word(3, 12)) {
            check_engine_laws(&MarkedGroup::free(3), &u, &v);
            check_engine_laws(&MarkedGroup::abelian(&[0, 3, 2]), &u, &v);
        }
    }
}
