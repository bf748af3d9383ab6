//! Fisher information and Cramér-Rao precision bounds for two incoherent
//! point sources imaged through a one-dimensional linear system.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of immutable inputs; file formats, the command-line front end
//! and thread-pool drivers live in the `superres` companion crate.
//!
//! Lengths are measured in units of the PSF width. The parameter vector is
//! always ordered `(s0, s, q)`: centroid, separation and the relative
//! brightness of the "+" source, which sits at `s0 + s/2`.
//!
//! Module map:
//!
//! - [`psf`]: PSF models, momentum moments and the overlap functionals
//!   `w(s)`, `m(s)`, `tau(s)` that determine the quantum Fisher matrix.
//! - [`scene`]: source parameters, the mean intensity and photon sampling.
//! - [`qfi`]: quantum Fisher matrix in closed form, through the rank-2
//!   spectral form, and by brute-force discretization; symmetric
//!   logarithmic derivatives and the compatibility check.
//! - [`cfi`]: classical Fisher information of direct imaging and of
//!   mode-projection measurements.
//! - [`crlb`]: precisions, closed-form and asymptotic bounds, slope fits
//!   and sweeps.
//! - [`measure_opt`]: Hermite-Gauss-like mode bases and multistart
//!   measurement optimization.
//! - [`montecarlo`]: photon-level simulation and maximum-likelihood
//!   estimation.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod exec;
mod linalg;
mod math;

pub mod cfi;
pub mod crlb;
pub mod fisher;
pub mod measure_opt;
pub mod montecarlo;
pub mod optim;
pub mod psf;
pub mod qfi;
pub mod quad;
pub mod rng;
pub mod scene;
pub mod spline;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use fisher::{FisherMatrix, InfoKind, Param, Provenance};
pub use math::round_sig;
pub use psf::{OverlapMethod, OverlapSet, PsfModel, PsfMoments};
pub use scene::SourceParams;
