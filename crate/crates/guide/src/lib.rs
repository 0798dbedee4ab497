//! The mdbook guide under `book/`, compiled so that `cargo test --doc` runs
//! every snippet. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod ensembles {}
#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}
#[doc = include_str!("../../../book/src/local-statistics.md")]
pub mod local_statistics {}
#[doc = include_str!("../../../book/src/flows.md")]
pub mod flows {}
#[doc = include_str!("../../../book/src/loggas.md")]
pub mod loggas {}
#[doc = include_str!("../../../book/src/comparison.md")]
pub mod comparison {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
