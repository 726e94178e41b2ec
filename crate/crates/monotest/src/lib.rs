//! Hard-instance construction and measurement for non-adaptive Boolean
//! monotonicity testing.
//!
//! The library builds pairs of coefficient distributions whose linear
//! threshold functions are indistinguishable under any fixed set of
//! queries: a nonnegative "yes" variable and a partially negative "no"
//! variable matching the same Gaussian moments. Around that core it
//! provides the measurement machinery those instances call for:
//!
//! - [`moments`]: the constrained moment problems (Gaussian quadrature
//!   from moments, Hankel feasibility, exact determinant identities).
//! - [`instances`]: sampling of threshold functions and of the
//!   coefficient sums induced by a query matrix.
//! - [`monotone`]: monotonicity and exact distance to monotonicity
//!   (min-cut isotone regression), degree-1 Fourier/Hermite analysis,
//!   and the classic edge tester.
//! - [`orthants`]: union-of-orthants distance between coefficient sums,
//!   exact at small scale and Monte Carlo otherwise, plus replacement
//!   (hybrid-swap) and anticoncentration experiments.
//! - [`geometry`]: the cube-versus-subspace toolkit (span distances,
//!   rounding covers, low-weight representations, compatibility).
//! - [`pruning`]: the partition / scatteredness test / pruning loop for
//!   query sets, with distance-drift verification.
//! - [`mollifier`]: smooth indicator approximations with verified
//!   derivative bounds.
//! - [`harness`]: experiment configs and reproducible reports.
//! - [`verify`]: the acceptance checks behind `monotest verify-all`.
//!
//! Run `cargo run --example <name>` for end-to-end walkthroughs of each
//! capability; the `monotest` binary exposes the same flows as
//! subcommands.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod instances;
pub mod mollifier;
pub mod moments;
pub mod monotone;
pub mod orthants;
pub mod pruning;
pub mod rng;
pub mod verify;

mod lp;
mod quad;

pub use error::{Error, Result};
pub use instances::{HardInstanceFamily, Ltf, QueryMatrix};
pub use moments::{DiscreteRV, YesNoPair};
