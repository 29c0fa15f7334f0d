//! Exact computations on marked groups: word problems, the rational group
//! algebra with its canonical trace, spectral radii, cogrowth, Cheeger
//! constants and the averaging criteria built on them.

pub mod algebra;
pub mod cogrowth;
pub mod criteria;
pub mod error;
pub mod group;
pub mod spectral;
pub mod syntax;
pub mod word;

pub use error::{Error, Result};
pub use group::{GroupElement, MarkedGroup};
pub use word::{Letter, Word};
