//! Finite-difference schemes for the linear transport equation
//! `∂ₜf + v·∇f = 0` with divergence-free velocity on a bounded 3D domain.
//!
//! * [`grid`]: lattice windows, domain masks, difference stencils, norms.
//! * [`fields`]: cell averages of data, velocity truncation, scaling.
//! * [`explicit`]: truncated Lax–Friedrichs scheme and its diagnostics.
//! * [`hhd`]: discrete Helmholtz–Hodge projection.
//! * [`implicit`]: projected implicit scheme with zero boundary values.
//! * [`levelset`]: discrete interfaces, normals, curvature, area elements.
//! * [`reference`]: characteristics oracles and error studies.

pub mod error;
pub mod explicit;
pub mod fields;
pub mod grid;
pub mod hhd;
pub mod implicit;
pub mod io;
pub mod jet;
pub mod levelset;
pub mod presets;
pub mod quadrature;
pub mod reference;
pub mod solvers;

pub use error::{Error, Result, ScalingViolation};
pub use grid::{Axis, Domain, DomainMask, GridSpec, Region, ScalarField, VectorField};
