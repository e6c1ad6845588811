//! warplab: a desk-scale laboratory for warped metrics over group actions.
//!
//! The crate builds finite models of large-scale geometry experiments:
//! word balls in finitely generated groups, epsilon-nets on compact
//! homogeneous spaces, warped shortest-path metrics over group actions,
//! spaces of basepointed quasi-isometric embeddings between such levels, and
//! Gaussian cylinder measures on them. Heavy kernels (all-pairs shortest
//! paths, Monte Carlo weights, map enumeration, quadrature) fan out over a
//! thread pool when the `parallel` feature (default) is enabled and fall back
//! to sequential loops otherwise; results are bit-identical either way.

// Validation guards are written as `!(x > 0.0)` on purpose: the negation
// rejects NaN, which `x <= 0.0` would wave through. Index loops over
// symmetric matrices stay as index loops; the indices appear in error
// messages and mirrored writes.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod coarse;
pub mod error;
pub mod graph;
pub mod groups;
pub mod measure;
pub mod par;
pub mod quat;
pub mod rng;
pub mod spaces;
pub mod spectral;
pub mod warped;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
