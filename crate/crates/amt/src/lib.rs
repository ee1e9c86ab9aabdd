//! Adaptive Monte Carlo multiple testing.
//!
//! Monte Carlo permutation tests estimate each p-value by sampling from the
//! null distribution. When `m` hypotheses are tested together and each needs
//! `n` MC samples, the standard workflow — compute every MC p-value in full,
//! then apply the Benjamini-Hochberg (BH) step-up procedure — costs `n·m`
//! samples. Most of those samples are wasted: to reproduce the BH decision
//! it is enough to know, for each hypothesis, on which side of the BH
//! threshold its full-MC p-value falls.
//!
//! This crate treats each hypothesis as a bandit arm whose parameter is its
//! full-MC p-value and adaptively allocates MC samples via per-hypothesis
//! confidence bounds. The adaptive engine ([`engine::run_amt`]) returns the
//! same discovery set as the full-MC reference pipeline
//! ([`baselines::run_fmc`]) with probability at least `1 − δ`, typically at
//! a small fraction of the sample budget.
//!
//! # Crate layout
//!
//! - [`numerics`] — seeded substream derivation, normal CDF/quantile.
//! - [`sampling`] — capped per-hypothesis MC sample streams: synthetic
//!   Bernoulli arms and permutation-test arms (Pearson correlation or
//!   chi-squared statistics over tabular data).
//! - [`confidence`] — finite-sample Agresti-Coull bounds on a full-MC
//!   p-value from a prefix of its samples.
//! - [`multiple_testing`] — the BH procedure, false-discovery metrics, and
//!   the early-stopping parameter heuristic.
//! - [`engine`] — the adaptive sample/update loop.
//! - [`baselines`] — the full-MC reference pipeline and the per-hypothesis
//!   early-stopping competitor.
//! - [`sim`] — generative models and experiment runners (reliability,
//!   scaling, parameter sweeps) with JSON/CSV reports.
//!
//! # Example
//!
//! ```
//! use amt::engine::{run_amt, AmtConfig};
//! use amt::baselines::run_fmc;
//! use amt::numerics::{StreamSeed, PurposeTag};
//! use amt::sampling::SampleStream;
//!
//! // Ten synthetic hypotheses: two strong signals, eight nulls. Both
//! // runs rebuild streams from the same seeds, so they consume the same
//! // Monte Carlo universe.
//! let p_ideal = [0.001, 0.002, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95];
//! let n = 2000;
//! let make_streams = || -> Vec<SampleStream> {
//!     p_ideal
//!         .iter()
//!         .enumerate()
//!         .map(|(i, &p)| {
//!             let seed = StreamSeed::new(7, i as u64, PurposeTag::McSampling);
//!             SampleStream::bernoulli(p, n, seed).unwrap()
//!         })
//!         .collect()
//! };
//!
//! let config = AmtConfig::new(0.1, 0.01, n).unwrap();
//! let adaptive = run_amt(make_streams(), &config).unwrap();
//! let full = run_fmc(make_streams(), 0.1).unwrap();
//!
//! // Same discoveries, far fewer samples.
//! assert_eq!(adaptive.discoveries, full.bh.rejected);
//! assert!(adaptive.total_samples < full.total_samples);
//! ```

pub mod baselines;
pub mod confidence;
pub mod engine;
mod error;
pub mod multiple_testing;
pub mod numerics;
pub mod sampling;
pub mod sim;

pub use error::{Error, Result};

pub mod guide;

// Keeps the README's example compiling alongside the book listings.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme_doctests {}
