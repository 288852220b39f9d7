//! Solvers for continuous coupled algebraic Riccati equations (CCAREs).
//!
//! A CCARE couples `N` quadratic matrix equations
//!
//! ```text
//! Ai' Xi + Xi Ai - Xi Si Xi + sum_{j != i} d_ij Xj + Qi = 0,   i = 1..N,
//! ```
//!
//! through nonnegative coupling weights `d_ij`. This crate implements the
//! regular and accelerated (Gauss-Seidel-style) Riccati iteration methods for
//! such systems, the single-equation CARE machinery they are built on, and
//! the instrumentation needed to observe monotone convergence, extremal
//! solutions, and rate comparisons between the two methods.
//!
//! Module map:
//! - [`matcore`]: dense matrix primitives, spectra, PSD and Loewner-order tests
//! - [`care`]: PBH tests, Lyapunov solves, the stabilizing CARE solver and a
//!   Newton-Kleinman cross-check
//! - [`model`]: CCARE problem data, validation, residual operator, shifts
//! - [`iteration`]: the two fixed-point algorithms plus comparison runners
//! - [`synth`]: deterministic generators for solvable random instances

// Dense kernels index with raw loops throughout; the iterator forms clippy
// suggests hurt readability in two-dimensional index arithmetic.
#![allow(clippy::needless_range_loop)]

pub mod care;
pub mod iteration;
pub mod matcore;
pub mod model;
pub mod synth;

pub use care::{CareInstance, CareSolution};
pub use iteration::{IterationConfig, SolveReport, Variant};
pub use matcore::{Matrix, OrderRelation, OrderResult, SymMatrix};
pub use model::{CcareProblem, ShiftVector};
