//! Numerical laboratory for random-matrix universality experiments.

pub mod compare;
pub mod dbm;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loggas;
pub mod rng;
pub mod semicircle_law;
pub mod spectral;
pub mod stats;

pub use error::{Result, RmtError};

use rayon::prelude::*;

/// Maps `f` over `0..n` on the rayon pool, preserving index order so results
/// do not depend on the thread count.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}
