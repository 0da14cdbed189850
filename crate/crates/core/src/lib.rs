//! Smoothed maxima of centered Gaussian processes on finite index sets.
//!
//! The crate computes, for a Gaussian law on a finite index set `T`:
//!
//! - per-realization Gibbs quantities: log-partition, Gibbs weights, soft
//!   maxima, participation ratio, Shannon entropy and KL / Rényi divergences
//!   to the uniform measure ([`gibbs`]);
//! - their disorder averages by reproducible Monte Carlo with standard
//!   errors, plus a Gauss–Hermite oracle for tiny index sets ([`quench`]);
//! - statistical checks of the upper and lower bounds relating these
//!   averages to the geometry of `T` ([`bounds`]);
//! - the Random Energy Model pressure and its finite-N sandwich ([`rem`]).
//!
//! The crate is `no_std` (it needs `alloc`). Parallel evaluation is plugged
//! in through [`quench::SampleExecutor`]; results never depend on it.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod gibbs;
pub mod quench;
pub mod rem;
pub mod stream;

pub use bounds::{BoundConfig, BoundReport, Verdict};
pub use ensemble::{Geometry, IndexedEnsemble, Realization};
pub use error::{Error, Result};
pub use gibbs::{GibbsState, Observable};
pub use quench::{Estimate, McConfig, QuenchedEstimate, ThresholdResult};
pub use rem::{PressureCurve, RemModel};
