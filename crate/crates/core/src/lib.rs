//! Finite-volume solver for the flux-limited parabolic-elliptic chemotaxis
//! system with logistic growth,
//!
//! ```text
//! u_t - Lap u = -div(chi u |grad v|^(p-2) grad v / (1 + |grad v|^(p-1) / n)) + mu u (1 - u)
//!  -Lap v + v = u
//! ```
//!
//! with zero-flux boundaries, on intervals, rectangles and radially
//! symmetric balls. `n = inf` gives the unregularized flux.
//!
//! The numerical kernels ([`grid`], [`elliptic`], [`flux`], [`integrator`],
//! [`monitors`]) are generic over the scalar type through [`Real`]; the
//! studies and file formats work in `f64`. The aliases at the crate root
//! name the `f64` instantiations.

// `!(x > 0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod monitors;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridSpec = grid::GridSpec<f64>;
pub type Grid = grid::Grid<f64>;
pub type ScalarField = grid::ScalarField<f64>;
pub type FaceVectorField = grid::FaceVectorField<f64>;
pub type LimiterParams = flux::LimiterParams<f64>;
pub type EllipticOptions = elliptic::EllipticOptions<f64>;
pub type ModelParams = integrator::ModelParams<f64>;
pub type DtPolicy = integrator::DtPolicy<f64>;
pub type SimState = integrator::SimState<f64>;
pub type MonitorRecord = monitors::MonitorRecord<f64>;
pub type InvariantReport = monitors::InvariantReport<f64>;

pub type GridSpec32 = grid::GridSpec<f32>;
pub type Grid32 = grid::Grid<f32>;
pub type ScalarField32 = grid::ScalarField<f32>;
pub type ModelParams32 = integrator::ModelParams<f32>;
pub type SimState32 = integrator::SimState<f32>;

pub use grid::{make_grid, GridKind};
pub use integrator::RunVerdict;
pub use io::config::RunConfig;
