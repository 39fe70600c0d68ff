//! Adaptive augmented mixed and least-squares finite elements for the
//! generalized Darcy problem with piecewise-constant coefficients.
//!
//! The crate implements four discretizations of the first-order system
//!
//! ```text
//!     div σ = g,      α ∇u + σ = α f      in Ω = (-1, 1)²
//! ```
//!
//! on H(div) × H¹ conforming pairs (RT0 × P1 and BDM1 × P2):
//!
//! * `Aug1`: augmented mixed method with unit divergence weight,
//! * `Aug2`: augmented mixed method with divergence weight `h_K²`,
//! * `Ls`:   the L²-based least-squares method,
//! * `Hls`:  the mesh-weighted least-squares method,
//!
//! together with least-squares a posteriori estimators, Dörfler marking,
//! newest-vertex bisection and the Kellogg checkerboard benchmark used to
//! measure estimator robustness.

pub mod adapt;
pub mod assembly;
pub mod coeff;
mod error;
pub mod estimate;
pub mod femspace;
pub mod kellogg;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quad;
pub mod tables;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
