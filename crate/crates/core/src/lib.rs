//! Stable random fields with Gaussian random time changes.
//!
//! The crate builds self-similar symmetric alpha-stable fields from kernel
//! representations `X_t = int f_t dM`, replaces the time `t` by a fractional
//! Brownian field `tau_t` (alpha-stabilized subordination), simulates the
//! result as a discretized stable integral and provides the statistical
//! checks that accompany the construction.

pub mod error;
pub mod field;
pub mod grid;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod scheme;
pub mod stable;
pub mod subordination;
pub mod subordinator;
pub mod verification;

pub use error::{Error, Result};
pub use field::{FieldMeta, FieldSample};
pub use grid::{RigidMotion, TimeGrid};
pub use kernels::{Domain, KernelFamily, KernelKind, KernelSpec, LinearFsmParams};
pub use rng::RandomStream;
pub use scheme::{IntegralScheme, SchemeSpec};
pub use stable::StableParams;
pub use subordination::{RandomTimeKernel, WellPosedness};
pub use subordinator::{GaussianFieldSampler, SubordinatorBatch};
