//! Finite-sample confidence bounds on a hypothesis's full-MC p-value from a
//! prefix of its MC samples.
//!
//! The bounds are Agresti-Coull intervals on the success proportion, with
//! two adjustments that match the adaptive engine's needs:
//!
//! - the success count is floored at one before entering the interval, so
//!   the bound tracks the conservative `(1 + S)/(n + 1)` p-value rather
//!   than collapsing to zero width at `S = 0`;
//! - once all `n` samples are consumed the uncertainty is exactly zero, so
//!   both bounds snap to the full-MC p-value `(1 + S)/(n + 1)` and every
//!   decision at exhaustion matches the full-MC pipeline bit for bit.

use crate::numerics::std_normal_quantile;
use crate::{Error, Result};

/// Full-MC p-value from a complete set of `n` MC samples with `successes`
/// ones: `(1 + S)/(n + 1)`. The single shared definition keeps the engine,
/// the baselines, and the bounds in exact floating-point agreement.
pub fn fmc_p_value_from_counts(successes: u64, n: usize) -> f64 {
    (1 + successes) as f64 / (n + 1) as f64
}

/// Floored empirical mean `max(S, 1) / k`.
pub fn empirical_mean(successes: u64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::NotPositive { what: "sample count k" });
    }
    if successes > k {
        return Err(Error::SuccessesExceedTrials { successes, trials: k });
    }
    Ok(successes.max(1) as f64 / k as f64)
}

/// Agresti-Coull bounds at one-sided error `per_side_error` each side,
/// with the success count floored at one. Returns `(lower, upper)` clamped
/// to `[0, 1]`.
pub fn agresti_coull_bounds(successes: u64, k: u64, per_side_error: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::NotPositive { what: "sample count k" });
    }
    if successes > k {
        return Err(Error::SuccessesExceedTrials { successes, trials: k });
    }
    if !(per_side_error > 0.0 && per_side_error < 0.5) {
        return Err(Error::ProbabilityOutOfRange {
            what: "per-side confidence error",
            value: per_side_error,
        });
    }
    let z = std_normal_quantile(1.0 - per_side_error)?;
    let z2 = z * z;
    let s_eff = successes.max(1) as f64;
    let n_tilde = k as f64 + z2;
    let p_tilde = (s_eff + z2 / 2.0) / n_tilde;
    let half_width = z * (p_tilde * (1.0 - p_tilde) / n_tilde).sqrt();
    Ok(((p_tilde - half_width).max(0.0), (p_tilde + half_width).min(1.0)))
}

/// Running confidence state for one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CbState {
    k: u64,
    successes: u64,
    per_side_error: f64,
    lower: f64,
    upper: f64,
    exhausted: bool,
}

impl CbState {
    /// Fresh state with the trivial bounds `[0, 1]`.
    pub fn new(per_side_error: f64) -> Result<Self> {
        if !(per_side_error > 0.0 && per_side_error < 0.5) {
            return Err(Error::ProbabilityOutOfRange {
                what: "per-side confidence error",
                value: per_side_error,
            });
        }
        Ok(Self { k: 0, successes: 0, per_side_error, lower: 0.0, upper: 1.0, exhausted: false })
    }

    pub fn samples(&self) -> u64 {
        self.k
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Fold in a batch of MC sample bits; `n` is the stream capacity.
    pub fn update(&self, new_bits: &[bool], n: usize) -> Result<Self> {
        let ones = new_bits.iter().filter(|&&b| b).count();
        self.update_counts(new_bits.len(), ones, n)
    }

    /// Counting form of [`CbState::update`]: `drawn` new samples of which
    /// `ones` were ones.
    pub fn update_counts(&self, drawn: usize, ones: usize, n: usize) -> Result<Self> {
        if self.k + drawn as u64 > n as u64 {
            return Err(Error::CapacityExceeded {
                requested: drawn,
                remaining: (n as u64 - self.k) as usize,
            });
        }
        let mut next = self.clone();
        next.k += drawn as u64;
        next.successes += ones as u64;
        if next.k == n as u64 {
            let exact = fmc_p_value_from_counts(next.successes, n);
            next.lower = exact;
            next.upper = exact;
            next.exhausted = true;
        } else if next.k > 0 {
            let (lower, upper) =
                agresti_coull_bounds(next.successes, next.k, next.per_side_error)?;
            next.lower = lower;
            next.upper = upper;
        }
        Ok(next)
    }
}
