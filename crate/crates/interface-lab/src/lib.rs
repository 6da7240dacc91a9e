//! A spectral laboratory for two-fluid interface motion with surface
//! tension in two dimensions.
//!
//! The library models a closed interface separating an interior fluid
//! (density `ρ₊`) from an exterior one (density `ρ₋`), both inviscid,
//! incompressible, and irrotational, coupled through surface tension.
//! It provides:
//!
//! * closed spectral curves with frame, curvature, and surface calculus
//!   ([`curve`]) ;
//! * boundary-integral machinery: layer potentials, interior/exterior
//!   Dirichlet–Neumann maps, and the density-weighted operators built
//!   from them ([`potential`]);
//! * mapped-grid Poisson/Laplace solvers and volume quadrature on both
//!   sides of the interface ([`volume`]);
//! * vortex-sheet velocity fields via the Birkhoff–Rott integral
//!   ([`velocity`]);
//! * pressure reconstruction from the interface data ([`pressure`]);
//! * tangential calculus on time-dependent interfaces ([`tangent`]);
//! * linearized interface operators and the dispersion relation
//!   ([`linearized`]);
//! * higher-order energy functionals and drift monitoring ([`energy`]);
//! * the full nonlinear evolution loop ([`evolver`]).
//!
//! Everything is resolution-controlled: fields carry warnings when their
//! spectral tails indicate under-resolution, and geometric invariants are
//! enforced at construction time.

pub mod config;
pub mod curve;
pub mod energy;
pub mod error;
pub mod evolver;
pub mod fft;
pub mod field;
pub mod linearized;
pub mod potential;
pub mod pressure;
pub mod tangent;
#[cfg(test)]
pub(crate) mod testutil;
pub mod velocity;
pub mod volume;

pub use curve::{ClosedCurve, CurveFrame};
pub use error::{Error, Result};
pub use field::{BoundaryField, FieldKind};

use once_cell::sync::Lazy;

/// Global thread pool honoring the `INTERFACE_LAB_THREADS` variable.
/// All parallel loops in the crate run inside this pool so results are
/// reproducible for a fixed thread count (reductions are sequential).
pub static THREAD_POOL: Lazy<rayon::ThreadPool> = Lazy::new(|| {
    let threads = std::env::var("INTERFACE_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().expect("failed to build thread pool")
});
