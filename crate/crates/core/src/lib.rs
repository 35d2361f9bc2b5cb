//! Regular subspaces of one-dimensional Brownian motion made computable.
//!
//! An open set `G ⊂ R` (finitely many disjoint open intervals in a window,
//! plus declared tails) with closed complement `F` determines the scale
//! function `s(x) = ∫ 1_G`, the darning map `j(x) = ∫ 1_F`, the energies of
//! the associated Dirichlet forms and their traces on `F`, and a family of
//! one-dimensional diffusions that the [`sim`] module simulates by speed-measure
//! time change.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod darned;
pub mod decomposition;
pub mod energy;
pub mod speed;
pub mod sim;
pub mod trace;
pub mod transform;

pub use error::{Error, ErrorKind, Result};
