//! Path simulation on the built-in models and the machinery that
//! differentiates it.
//!
//! The pieces, in the order they are usually used:
//!
//! * [`TimeGrid`] and [`BrownianDriver`]: uniform grids and addressed,
//!   reproducible Gaussian increments (see [`rng`] for the addressing
//!   scheme). Drivers refine by Brownian bridging, which is what couples
//!   the levels of a convergence sweep.
//! * [`integrate`]: the one-step scheme from the geometry crate applied
//!   along a driver, with a pre-retraction defect guard.
//! * [`bismut_derivative`]: the exact derivative of the discrete solution
//!   map in a [`CameronMartinVector`] direction, by Jacobian propagation.
//! * [`decompose_noise`]: the orthogonal split of the driving increments
//!   into the components the path actually consumed and the components in
//!   the moving kernel, with the aligning frame `tilde`.
//! * [`covariant_derivative_path`] / [`CovariantOperator`]: the same
//!   derivative represented as the solution of a linear equation driven
//!   only by kernel noise; its conditional mean over that noise is the
//!   damped integral of the forcing.
//! * [`reconstruct_driver`] / [`conditional_driver`]: rebuild full drivers
//!   from split parts, either by re-propagating along a fresh path or by
//!   the exact coupling along the base path.

pub mod covariant;
pub mod driver;
pub mod grid;
pub mod rng;
pub mod solve;
pub mod split;

pub use covariant::{covariant_derivative_path, covariant_operator, CovariantOperator};
pub use driver::{BrownianDriver, CameronMartinVector, Provenance};
pub use grid::TimeGrid;
pub use solve::{bismut_derivative, defect_guard, integrate, SolutionPath};
pub use split::{
    conditional_driver, decompose_noise, reconstruct_driver, sample_beta, NoiseSplit,
    Reconstruction,
};
