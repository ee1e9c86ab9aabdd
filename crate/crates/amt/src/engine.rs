//! The adaptive sample/update loop.
//!
//! Each hypothesis is an arm whose unknown parameter is its full-MC
//! p-value. The engine keeps a confidence interval per arm at per-side
//! error `delta / (2 m L)`, a shrinking critical-rank estimate `r̂`
//! (initially `m`), and the matching threshold estimate `τ̂ = r̂ α / m`.
//! Rounds alternate between sampling the next scheduled batch for every
//! uncertain arm and tightening `r̂` to the fixed point of
//! `r ← m − |{i : lb_i > r α / m}|`. The loop ends when no arm's interval
//! straddles `τ̂` (or `r̂` reaches 0, since no MC p-value can lie at or
//! below a zero threshold); arms certainly below the threshold are the
//! discoveries.
//!
//! Arms that consume their full budget of `n` samples collapse to the
//! exact full-MC p-value `(1 + S)/(n + 1)`, so in the worst case the
//! engine degenerates to the full-MC decision rather than diverging from
//! it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::CbState;
use crate::multiple_testing::bh_threshold;
use crate::sampling::SampleStream;
use crate::{Error, Result};

/// Engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmtConfig {
    /// Nominal FDR level.
    pub alpha: f64,
    /// Failure budget: the full-MC decision is recovered with probability
    /// at least `1 - delta`.
    pub delta: f64,
    /// Full-MC sample cap per hypothesis.
    pub n: usize,
    /// First batch size.
    pub h1: usize,
    /// Geometric batch growth factor.
    pub gamma: f64,
}

impl AmtConfig {
    pub const DEFAULT_H1: usize = 100;
    pub const DEFAULT_GAMMA: f64 = 1.1;

    /// Config with the default batch plan (`h1 = 100` capped at `n`,
    /// `gamma = 1.1`).
    pub fn new(alpha: f64, delta: f64, n: usize) -> Result<Self> {
        Self::with_batching(alpha, delta, n, Self::DEFAULT_H1.min(n.max(1)), Self::DEFAULT_GAMMA)
    }

    pub fn with_batching(alpha: f64, delta: f64, n: usize, h1: usize, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ProbabilityOutOfRange { what: "alpha", value: alpha });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::ProbabilityOutOfRange { what: "delta", value: delta });
        }
        if n == 0 {
            return Err(Error::NotPositive { what: "sample cap n" });
        }
        if h1 == 0 {
            return Err(Error::NotPositive { what: "first batch size h1" });
        }
        if h1 > n {
            return Err(Error::BatchLargerThanCap { h1, n });
        }
        if !gamma.is_finite() || gamma <= 1.0 {
            return Err(Error::InvalidGrowthFactor { gamma });
        }
        Ok(Self { alpha, delta, n, h1, gamma })
    }
}

/// Prespecified batch sizes `[h_1, ..., h_L]` summing to `n` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSchedule {
    sizes: Vec<usize>,
}

impl BatchSchedule {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of batches, `L`.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }
}

/// Geometric batch plan `h_l = floor(h1 * gamma^(l-1))`, each at least 1,
/// with the final batch truncated so the total is exactly `n`.
pub fn batch_schedule(n: usize, h1: usize, gamma: f64) -> Result<BatchSchedule> {
    if n == 0 {
        return Err(Error::NotPositive { what: "sample cap n" });
    }
    if h1 == 0 {
        return Err(Error::NotPositive { what: "first batch size h1" });
    }
    if h1 > n {
        return Err(Error::BatchLargerThanCap { h1, n });
    }
    if !gamma.is_finite() || gamma <= 1.0 {
        return Err(Error::InvalidGrowthFactor { gamma });
    }
    let mut sizes = Vec::new();
    let mut remaining = n;
    let mut exponent = 0i32;
    while remaining > 0 {
        let ideal = (h1 as f64 * gamma.powi(exponent)).floor();
        // The cast saturates, so an overflowing ideal just takes whatever
        // budget is left.
        let h = (ideal as usize).max(1).min(remaining);
        sizes.push(h);
        remaining -= h;
        exponent += 1;
    }
    Ok(BatchSchedule { sizes })
}

/// Classification of one hypothesis against the current threshold
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    /// Interval straddles the threshold; keep sampling.
    Uncertain,
    /// Lower bound exceeds the threshold.
    CertainGreater,
    /// Upper bound is at or below the threshold.
    CertainLess,
}

/// Largest `r <= r_hat` consistent with the lower bounds: the fixed point
/// of `r ← m − |{i : lb_i > r α / m}|`, reached by monotone descent from
/// `r_hat`. Also returns the certainly-greater index set at the final
/// threshold.
///
/// Descending one rank at a time and recounting (the textbook formulation)
/// reaches the same fixed point because the exceedance count is
/// non-increasing in the threshold; the fixed-point jump just skips the
/// intermediate ranks.
pub fn update_critical_rank(
    lower_bounds: &[f64],
    alpha: f64,
    r_hat: usize,
) -> (usize, Vec<usize>) {
    let m = lower_bounds.len();
    let mut sorted = lower_bounds.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("bounds are finite"));
    let count_above = |tau: f64| m - sorted.partition_point(|&v| v <= tau);

    let mut r = r_hat.min(m);
    loop {
        let next = m - count_above(bh_threshold(r, m, alpha));
        if next >= r {
            break;
        }
        r = next;
    }
    let tau = bh_threshold(r, m, alpha);
    let certain_greater = lower_bounds
        .iter()
        .enumerate()
        .filter(|(_, &lb)| lb > tau)
        .map(|(i, _)| i)
        .collect();
    (r, certain_greater)
}

/// One row of the engine's progress log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLogEntry {
    pub round: usize,
    pub r_hat: usize,
    pub tau_hat: f64,
    pub uncertain: usize,
    pub samples_drawn: u64,
}

/// Final state of an adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmtResult {
    /// Hypotheses certainly below the final threshold, ascending.
    pub discoveries: Vec<usize>,
    /// Final critical-rank estimate.
    pub r_hat: usize,
    /// Final threshold estimate `r_hat * alpha / m`.
    pub tau_hat: f64,
    /// MC samples consumed per hypothesis.
    pub per_hypothesis_samples: Vec<u64>,
    /// Sum of `per_hypothesis_samples`.
    pub total_samples: u64,
    /// Number of sample/update rounds executed.
    pub rounds: usize,
    /// Per-round progression, for audits and progress reports.
    pub round_log: Vec<RoundLogEntry>,
    /// Final per-hypothesis lower confidence bounds.
    pub lower_bounds: Vec<f64>,
    /// Final per-hypothesis upper confidence bounds.
    pub upper_bounds: Vec<f64>,
    /// Final classification per hypothesis.
    pub statuses: Vec<HypothesisStatus>,
}

struct Arm {
    stream: SampleStream,
    cb: CbState,
    next_batch: usize,
    status: HypothesisStatus,
}

/// Run the adaptive loop over one stream per hypothesis.
///
/// All streams must be fresh and share capacity `config.n`. Within a round
/// the uncertain arms are sampled in parallel; each arm owns its stream
/// and confidence state, so the result is identical regardless of how the
/// work is scheduled across threads.
pub fn run_amt(streams: Vec<SampleStream>, config: &AmtConfig) -> Result<AmtResult> {
    let m = streams.len();
    if m == 0 {
        return Err(Error::Empty { what: "streams" });
    }
    for stream in &streams {
        if stream.capacity() != config.n {
            return Err(Error::CapacityMismatch { required: config.n, found: stream.capacity() });
        }
        if stream.consumed() != 0 {
            return Err(Error::InvalidConfig {
                reason: "streams must be fresh (no samples consumed)".into(),
            });
        }
    }
    let schedule = batch_schedule(config.n, config.h1, config.gamma)?;
    let per_side_error = config.delta / (2.0 * m as f64 * schedule.len() as f64);

    let cb0 = CbState::new(per_side_error)?;
    let mut arms: Vec<Arm> = streams
        .into_iter()
        .map(|stream| Arm {
            stream,
            cb: cb0.clone(),
            next_batch: 0,
            status: HypothesisStatus::Uncertain,
        })
        .collect();

    let mut r_hat = m;
    let mut tau_hat = bh_threshold(r_hat, m, config.alpha);
    let mut round_log: Vec<RoundLogEntry> = Vec::new();
    let mut total_samples: u64 = 0;

    loop {
        if r_hat == 0 || arms.iter().all(|a| a.status != HypothesisStatus::Uncertain) {
            break;
        }

        // Sample: next scheduled batch for every uncertain arm. An arm
        // re-entering after a stay in the certain-less set resumes at its
        // own schedule position, keeping its sample count a prefix sum of
        // the schedule.
        let n = config.n;
        let sizes = schedule.sizes();
        arms.par_iter_mut()
            .filter(|arm| arm.status == HypothesisStatus::Uncertain)
            .try_for_each(|arm| -> Result<()> {
                debug_assert!(arm.next_batch < sizes.len(), "uncertain arm past its schedule");
                let h = sizes[arm.next_batch];
                let summary = arm.stream.draw(h)?;
                arm.cb = arm.cb.update_counts(summary.drawn, summary.ones, n)?;
                arm.next_batch += 1;
                Ok(())
            })?;

        // Update: tighten the critical-rank estimate, then re-derive the
        // threshold and every classification from the current bounds. The
        // certain-less set is deliberately non-sticky: a dropping
        // threshold can pull an arm back into the uncertain set.
        let lower_bounds: Vec<f64> = arms.iter().map(|a| a.cb.lower()).collect();
        let (new_r_hat, _) = update_critical_rank(&lower_bounds, config.alpha, r_hat);
        r_hat = new_r_hat;
        tau_hat = bh_threshold(r_hat, m, config.alpha);

        let mut uncertain = 0;
        for arm in &mut arms {
            let was_certain_greater = arm.status == HypothesisStatus::CertainGreater;
            arm.status = if arm.cb.lower() > tau_hat {
                HypothesisStatus::CertainGreater
            } else if arm.cb.upper() <= tau_hat {
                HypothesisStatus::CertainLess
            } else {
                uncertain += 1;
                HypothesisStatus::Uncertain
            };
            debug_assert!(
                !was_certain_greater || arm.status == HypothesisStatus::CertainGreater,
                "certain-greater status must be monotone"
            );
        }

        let consumed_so_far: u64 = arms.iter().map(|a| a.cb.samples()).sum();
        let samples_drawn = consumed_so_far - total_samples;
        total_samples = consumed_so_far;
        round_log.push(RoundLogEntry {
            round: round_log.len() + 1,
            r_hat,
            tau_hat,
            uncertain,
            samples_drawn,
        });
    }

    let discoveries = arms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.status == HypothesisStatus::CertainLess)
        .map(|(i, _)| i)
        .collect();
    Ok(AmtResult {
        discoveries,
        r_hat,
        tau_hat,
        per_hypothesis_samples: arms.iter().map(|a| a.cb.samples()).collect(),
        total_samples,
        rounds: round_log.len(),
        round_log,
        lower_bounds: arms.iter().map(|a| a.cb.lower()).collect(),
        upper_bounds: arms.iter().map(|a| a.cb.upper()).collect(),
        statuses: arms.iter().map(|a| a.status).collect(),
    })
}
