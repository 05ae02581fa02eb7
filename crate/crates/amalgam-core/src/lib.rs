//! Exact computation with operator-valued (amalgamated) moment and cumulant
//! series at finite truncation order.
//!
//! The base algebra is `B = M_d(Q)` with arbitrary-precision rational
//! entries. Distributions of `s` noncommuting variables are stored as
//! truncated series of multilinear maps `B^(n-1) -> B`, one per order `n`
//! and index tuple. Everything is exact: no floating point, no tolerances.
//!
//! Module map:
//! - [`nc_lattice`]: the lattice `NC(n)` of noncrossing partitions, its
//!   Kreweras complement and Möbius function.
//! - [`balgebra`]: exact rational matrices and multilinear coefficient
//!   tables over the matrix-unit basis.
//! - [`cumulant_engine`]: partitioned evaluation of multiplicative
//!   functionals and the moment/cumulant conversions.
//! - [`constructions`]: free unions, sums, left scaling, product words,
//!   boxed convolution, zeta/Möbius series transforms.
//! - [`diagnostics`]: evenness / traciality / R-diagonality checks,
//!   determining series, and the randomized product-pair harness.
//!
//! All values are immutable after construction and all operations are pure;
//! internal memo tables are guarded, so concurrent read-only use is safe.

pub mod balgebra;
pub mod constructions;
pub mod cumulant_engine;
pub mod diagnostics;
mod error;
pub mod nc_lattice;

pub use error::{Error, Result};
