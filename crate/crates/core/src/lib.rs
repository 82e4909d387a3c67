//! Integration and differentiation on polynomial functions over open boxes,
//! the word monoid they generate, terms with opaque leaves, pre-derivatives
//! and tangent fields on the 2-sphere.

pub mod cli;
pub mod error;
pub mod eval;
pub mod interval;
pub mod monoid;
pub mod polyfun;
pub mod prederiv;
pub mod rational;
pub mod relations;
pub mod tangent;
pub mod term;

pub use error::{Error, Result};
pub use interval::OpenBox;
pub use monoid::{Gen, Word};
pub use polyfun::{CompMode, Orientation, Poly, PolyFun};
pub use rational::Q;
pub use term::{Signature, Term};
