//! The guide in `book/` is written in Markdown. Including each chapter as a
//! module doc lets `cargo test` run every Rust listing as a doc-test, so the
//! book cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/forward-model.md")]
pub mod forward_model {}
#[doc = include_str!("../../../book/src/likelihood.md")]
pub mod likelihood {}
#[doc = include_str!("../../../book/src/priors.md")]
pub mod priors {}
#[doc = include_str!("../../../book/src/sampler.md")]
pub mod sampler {}
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}
