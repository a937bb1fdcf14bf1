//! Spectra of the clamped boundary problem
//!
//! ```text
//! (-1)^n y^(2n) - lambda rho y = 0,   y^(k)(0) = y^(k)(1) = 0  (0 <= k < n)
//! ```
//!
//! where `rho` is the derivative of a self-similar step function of zero
//! spectral order. The weight is truncated to finitely many point masses,
//! discretized exactly by splines with knots at the atoms, and eigenvalues are
//! isolated by inertia counting of the pencil `K - lambda M`.

pub mod asympt;
pub mod banded;
pub mod cli;
pub mod dense;
pub mod oracle;
pub mod pencil;
pub mod presets;
pub mod problem;
pub mod quadrature;
pub mod selfsim;
pub mod spline;
pub mod verify;

pub use asympt::{AsymptoticsReport, Regime, RegimeKind, SideLaw};
pub use banded::BandedSymmetricMatrix;
pub use pencil::{EigenList, PencilError, Side, SymmetricPencil};
pub use problem::{DiscreteProblem, ProblemError};
pub use selfsim::{AtomicMeasure, RefinedWeight, SimilarityParams, StructureReport};
pub use spline::SplineSpace;
