//! Construction and exploration of diagonal-norm summation-by-parts (SBP)
//! first-derivative operators.
//!
//! An SBP operator is a pair of an `n x n` derivative matrix `D` and a
//! positive-definite norm matrix `P` satisfying `P D + D^T P = Q` with
//! `Q = e_{n-1} e_{n-1}^T - e_0 e_0^T`, the discrete analogue of integration
//! by parts. The family considered here is parameterized by a triple
//! `(s, t, r)`: centered interior stencil of order `2s`, boundary closure of
//! `r` rows with order `t`, and a diagonal norm.
//!
//! The pipeline is:
//!
//! 1. [`existence`] decides whether an operator exists for `(s, t, r)` by
//!    solving the norm compatibility equations exactly ([`ratlinalg`]) and
//!    maximizing the smallest norm weight with an exact simplex ([`simplex`]).
//! 2. [`construct`] builds the full affine manifold of boundary closures for
//!    an existing norm and assembles concrete operators at any grid size,
//!    either in exact rational or floating-point form.
//! 3. [`optimize`] picks manifold coordinates minimizing the spectral norm of
//!    the skew-symmetric surrogate `P D - Q/2`, a convex proxy for the
//!    spectral radius of `D`.
//! 4. [`pde`] runs derivative convergence studies and an advection benchmark
//!    with SAT boundary treatment and Adams-Bashforth time stepping.
//!
//! Everything up to assembly is exact rational arithmetic; only optimization,
//! eigenvalue computation and time stepping use floating point.
//!
//! The `parallel` feature (on by default) runs the data-parallel inner loops
//! (exact elimination row updates, parameter sweeps, benchmark batches) on a
//! rayon thread pool; without it the same code paths run sequentially.

pub mod construct;
mod error;
pub mod existence;
pub mod optimize;
mod par;
pub mod pde;
pub mod ratlinalg;
pub mod scalar;
pub mod simplex;
pub mod stencil;

pub use error::{Error, Result};
