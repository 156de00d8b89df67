//! Numerical solvers for equipartitioning a probability measure on `R^d`
//! (`d = p^k` an odd prime power) by a rigid motion of a `(Z_p)^k`-invariant
//! fan of `2d` cones, and for inscribing an orientation-similar regular
//! crosspolytope into a smooth strictly convex body.

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod equipartition;
pub mod error;
pub mod fan;
pub mod group;
pub mod inscription;
pub mod measure;
pub mod motion;
pub mod optim;
pub mod report;

pub use error::{Error, Result};
