//! The Benjamini-Hochberg step-up procedure, false-discovery metrics, and
//! the early-stopping parameter heuristic.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rejection threshold `r * alpha / m` for a candidate critical rank.
///
/// Shared by the step-up procedure and the adaptive engine so threshold
/// comparisons agree in exact floating point.
pub fn bh_threshold(rank: usize, m: usize, alpha: f64) -> f64 {
    rank as f64 * alpha / m as f64
}

/// Outcome of the step-up procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhOutcome {
    /// Largest rank `r` with `p_(r) <= r * alpha / m`; 0 when no rank
    /// qualifies (reject nothing).
    pub critical_rank: usize,
    /// `critical_rank * alpha / m`.
    pub threshold: f64,
    /// Indices with `p_i <= threshold`, ascending.
    pub rejected: Vec<usize>,
}

/// Benjamini-Hochberg step-up procedure at nominal FDR `alpha`.
pub fn bh_procedure(p_values: &[f64], alpha: f64) -> Result<BhOutcome> {
    if p_values.is_empty() {
        return Err(Error::Empty { what: "p-values" });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ProbabilityOutOfRange { what: "alpha", value: alpha });
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::NotAProbability { what: "p-value", value: p });
        }
    }
    let m = p_values.len();
    let mut sorted = p_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("p-values validated finite"));

    let mut critical_rank = 0;
    for (idx, &p) in sorted.iter().enumerate().rev() {
        let rank = idx + 1;
        if p <= bh_threshold(rank, m, alpha) {
            critical_rank = rank;
            break;
        }
    }
    let threshold = bh_threshold(critical_rank, m, alpha);
    let rejected = p_values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p <= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(BhOutcome { critical_rank, threshold, rejected })
}

/// False discovery proportion: `|rejected ∩ nulls| / max(|rejected|, 1)`.
pub fn fdp(rejected: &[usize], null_mask: &[bool]) -> f64 {
    if rejected.is_empty() {
        return 0.0;
    }
    let false_discoveries = rejected.iter().filter(|&&i| null_mask[i]).count();
    false_discoveries as f64 / rejected.len() as f64
}

/// Recommended early-stopping success target for the sequential baseline:
/// match its accuracy near the anticipated rejection threshold to the
/// full-MC accuracy there, giving `s = (r_guess / m) * alpha * n`, floored
/// at 1.
pub fn smc_recommended_s(alpha: f64, n: usize, m: usize, r_guess: usize) -> u64 {
    let s = (r_guess as f64 / m as f64 * alpha * n as f64).round();
    (s as u64).max(1)
}
