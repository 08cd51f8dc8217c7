//! Coinductive infinitary rewriting over non-wellfounded derivation trees.
//!
//! The library is organised around three layers:
//!
//! * a substrate of Cantor-normal-form ordinals and regular/lazy derivation
//!   trees with truncation, an ultrametric, bisimilarity and finite patterns
//!   ([`ord`], [`tree`], [`pattern`], [`text`]);
//! * ordinal-stratified rewriting witnesses in the split/lift system and the
//!   generic compression engine turning them into ω-witnesses ([`rewrite`],
//!   [`compress`]);
//! * three instances: left-linear first-order iTRS ([`fo`]), abc-infinitary
//!   λ-calculi ([`lambda`]) and μMALL∞ cut-elimination ([`mumall`]).

pub mod compress;
pub mod error;
pub mod fo;
pub mod gen;
pub mod lambda;
pub mod mumall;
pub mod ord;
pub mod pattern;
pub mod rewrite;
pub mod text;
pub mod tree;

pub use error::{Error, Result};
pub use ord::Ordinal;
pub use tree::{DTree, FiniteTree, RuleFamily};
