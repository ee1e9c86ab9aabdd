//! The narrative guide, mirrored from the `book/` directory so that every
//! Rust listing in it compiles and runs as a doc-test. Build the rendered
//! book with `mdbook build book/`; `cargo test --doc` executes the same
//! listings seen there.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mc-pvalues.md")]
pub mod mc_pvalues {}

#[doc = include_str!("../../../book/src/multiple-testing.md")]
pub mod multiple_testing_guide {}

#[doc = include_str!("../../../book/src/confidence-bounds.md")]
pub mod confidence_bounds {}

#[doc = include_str!("../../../book/src/adaptive-engine.md")]
pub mod adaptive_engine {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines_guide {}

#[doc = include_str!("../../../book/src/simulations.md")]
pub mod simulations {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
