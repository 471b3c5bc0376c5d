//! Matérn kernel interpolation on sparse grids.
//!
//! The crate builds kernel interpolants of functions on the cube
//! `(-1/2, 1/2)^d` using separable Matérn kernels and four sparse grid
//! families:
//!
//! * `ISG`: isotropic index set `|l|_1 <= L`, unit lengthscales.
//! * `ASG`: weighted index set `w . l <= L`, unit lengthscales.
//! * `LISG`: isotropic index set with penalised point sets and
//!   lengthscales `2^p`.
//! * `DASG`: weighted index set with penalised point sets, optionally
//!   with a resolution tuning vector `r` that lowers the point-set penalty.
//!
//! Interpolants are assembled with the combination technique: every
//! contributing tensor block is solved with mode-wise triangular solves
//! against cached one-dimensional Cholesky factors. A dense solver over
//! the whole node set ([`dense_oracle`]) is provided for verification,
//! alongside evaluators for the a-priori error bounds ([`bounds`]) and a
//! convergence-study harness ([`experiments`]).

pub mod bounds;
pub mod config;
pub mod dense_oracle;
pub mod error;
pub mod experiments;
pub mod grids;
pub mod hexfloat;
pub mod kernels;
mod linalg;
pub mod special;
pub mod tensor_solver;
pub mod textio;

pub use error::{Error, PdFailure, Result};
pub use grids::{DyadicPoint, Family, GridNode, GridSpec, MultiIndex};
pub use kernels::{KernelParams1D, SeparableKernel, Smoothness};
pub use config::RunConfig;
pub use tensor_solver::{assemble, assemble_par, AssemblyPlan, SparseInterpolant};
