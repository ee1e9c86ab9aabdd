//! Reference pipelines operating on the same seeded streams as the
//! adaptive engine: the full-MC workflow (exhaust every stream, then run
//! the step-up procedure) and the per-hypothesis early-stopping
//! competitor.
//!
//! All pipelines consume streams from the front, so running them on
//! streams rebuilt from identical seeds compares the algorithms on one
//! realized sample universe: differences in output are algorithmic, not
//! sampling noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::fmc_p_value_from_counts;
use crate::multiple_testing::{bh_procedure, BhOutcome};
use crate::sampling::SampleStream;
use crate::{Error, Result};

/// Full-MC p-value `(1 + sum(bits)) / (n + 1)` from a complete bit vector.
pub fn fmc_p_value(bits: &[bool], n: usize) -> Result<f64> {
    if bits.len() != n {
        return Err(Error::LengthMismatch { left: bits.len(), right: n });
    }
    let successes = bits.iter().filter(|&&b| b).count() as u64;
    Ok(fmc_p_value_from_counts(successes, n))
}

/// Output of the full-MC pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmcResult {
    /// Per-hypothesis full-MC p-values, each in `[1/(n+1), 1]`.
    pub p_values: Vec<f64>,
    /// Step-up decision over `p_values`.
    pub bh: BhOutcome,
    /// Always `m * n`.
    pub total_samples: u64,
}

/// Exhaust every stream, form the conservative MC p-values, and apply the
/// step-up procedure at level `alpha`.
pub fn run_fmc(streams: Vec<SampleStream>, alpha: f64) -> Result<FmcResult> {
    let (n, mut streams) = validate_streams(streams)?;
    let p_values: Vec<f64> = streams
        .par_iter_mut()
        .map(|s| fmc_p_value_from_counts(s.exhaust(), n))
        .collect();
    let bh = bh_procedure(&p_values, alpha)?;
    Ok(FmcResult { p_values, bh, total_samples: (streams.len() * n) as u64 })
}

/// Output of the sequential early-stopping baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcResult {
    /// Per-hypothesis p-values: `s / K` when stopped early at the s-th
    /// success, `(S + 1)/(n + 1)` when the cap was reached.
    pub p_values: Vec<f64>,
    /// MC samples consumed per hypothesis (`K`).
    pub samples_used: Vec<u64>,
    /// The success target `s`.
    pub s_param: u64,
    /// Sum of `samples_used`.
    pub total_samples: u64,
}

/// Per hypothesis, sample until the `s`-th success or the cap `n`, then
/// apply the step-up procedure to the resulting p-values.
pub fn run_smc(streams: Vec<SampleStream>, s: u64, alpha: f64) -> Result<(SmcResult, BhOutcome)> {
    if s == 0 {
        return Err(Error::NotPositive { what: "success target s" });
    }
    let (n, mut streams) = validate_streams(streams)?;
    let outcomes: Vec<(f64, u64)> = streams
        .par_iter_mut()
        .map(|stream| {
            while stream.next_bit().is_some() {
                if stream.success_count() == s && !stream.is_exhausted() {
                    // Early stop: the last bit drawn was the s-th success.
                    let k = stream.consumed() as u64;
                    return (s as f64 / k as f64, k);
                }
            }
            (fmc_p_value_from_counts(stream.success_count(), n), n as u64)
        })
        .collect();
    let p_values: Vec<f64> = outcomes.iter().map(|&(p, _)| p).collect();
    let samples_used: Vec<u64> = outcomes.iter().map(|&(_, k)| k).collect();
    let total_samples = samples_used.iter().sum();
    let bh = bh_procedure(&p_values, alpha)?;
    Ok((SmcResult { p_values, samples_used, s_param: s, total_samples }, bh))
}

fn validate_streams(streams: Vec<SampleStream>) -> Result<(usize, Vec<SampleStream>)> {
    let Some(first) = streams.first() else {
        return Err(Error::Empty { what: "streams" });
    };
    let n = first.capacity();
    for stream in &streams {
        if stream.capacity() != n {
            return Err(Error::CapacityMismatch { required: n, found: stream.capacity() });
        }
        if stream.consumed() != 0 {
            return Err(Error::InvalidConfig {
                reason: "streams must be fresh (no samples consumed)".into(),
            });
        }
    }
    Ok((n, streams))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{derive_substream, fold_seed, PurposeTag, StreamSeed};
    use rand::Rng;

    #[test]
    fn fmc_p_value_formula() {
        let mut bits = vec![false; 9];
        bits[0] = true;
        bits[4] = true;
        bits[8] = true;
        assert_eq!(fmc_p_value(&bits, 9).unwrap(), 0.4);
        assert_eq!(fmc_p_value(&[false; 999], 999).unwrap(), 0.001);
        assert_eq!(fmc_p_value(&[true; 9], 9).unwrap(), 1.0);
        assert!(fmc_p_value(&bits, 10).is_err());
    }

    fn streams_from(p: &[f64], n: usize, master: u64) -> Vec<SampleStream> {
        p.iter()
            .enumerate()
            .map(|(i, &pi)| {
                SampleStream::bernoulli(
                    pi,
                    n,
                    StreamSeed::new(master, i as u64, PurposeTag::McSampling),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn fmc_all_ones_rejects_nothing() {
        let out = run_fmc(streams_from(&[1.0, 1.0, 1.0], 100, 5), 0.1).unwrap();
        assert_eq!(out.p_values, vec![1.0, 1.0, 1.0]);
        assert!(out.bh.rejected.is_empty());
        assert_eq!(out.total_samples, 300);
    }

    #[test]
    fn fmc_all_zeros_rejects_everything() {
        let out = run_fmc(streams_from(&[0.0; 5], 1000, 5), 0.1).unwrap();
        for &p in &out.p_values {
            assert_eq!(p, 1.0 / 1001.0);
        }
        assert_eq!(out.bh.rejected, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fmc_matches_independent_recomputation() {
        // Oracle: recompute p-values and the step-up decision from the raw
        // bits of identically seeded streams.
        let p = [0.003, 0.4, 0.02, 0.77, 0.11, 0.05];
        let n = 500;
        let out = run_fmc(streams_from(&p, n, 808), 0.08).unwrap();

        let mut oracle_p = Vec::new();
        for (i, &pi) in p.iter().enumerate() {
            let mut rng =
                derive_substream(StreamSeed::new(808, i as u64, PurposeTag::McSampling));
            let successes = (0..n).filter(|_| rng.gen::<f64>() < pi).count() as f64;
            oracle_p.push((1.0 + successes) / (n as f64 + 1.0));
        }
        assert_eq!(out.p_values, oracle_p);

        let mut best = 0;
        let mut sorted = oracle_p.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for r in 1..=sorted.len() {
            if sorted[r - 1] <= r as f64 * 0.08 / sorted.len() as f64 {
                best = r;
            }
        }
        assert_eq!(out.bh.critical_rank, best);
    }

    #[test]
    fn smc_stops_at_second_success() {
        let bits = vec![false, true, false, true, false, false, true, false];
        let streams = vec![SampleStream::from_bits(bits).unwrap()];
        let (res, _) = run_smc(streams, 2, 0.1).unwrap();
        assert_eq!(res.samples_used, vec![4]);
        assert_eq!(res.p_values, vec![0.5]);
    }

    #[test]
    fn smc_cap_branch_with_no_successes() {
        let streams = vec![SampleStream::from_bits(vec![false; 10]).unwrap()];
        let (res, _) = run_smc(streams, 2, 0.1).unwrap();
        assert_eq!(res.samples_used, vec![10]);
        assert_eq!(res.p_values, vec![1.0 / 11.0]);
    }

    #[test]
    fn smc_immediate_stop() {
        let streams = vec![SampleStream::from_bits(vec![true, true, false]).unwrap()];
        let (res, _) = run_smc(streams, 2, 0.1).unwrap();
        assert_eq!(res.samples_used, vec![2]);
        assert_eq!(res.p_values, vec![1.0]);
    }

    #[test]
    fn smc_success_on_final_bit_uses_cap_formula() {
        let streams = vec![SampleStream::from_bits(vec![false, true, true]).unwrap()];
        let (res, _) = run_smc(streams, 2, 0.1).unwrap();
        assert_eq!(res.samples_used, vec![3]);
        assert_eq!(res.p_values, vec![3.0 / 4.0]);
    }

    #[test]
    fn smc_stopping_matches_scan_oracle() {
        // K must be the minimal index where the stopping rule holds.
        let mut rng = derive_substream(StreamSeed::new(31337, 0, PurposeTag::DataGeneration));
        for trial in 0..200 {
            let n = rng.gen_range(1..=60usize);
            let s = rng.gen_range(1..=5u64);
            let bits: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.3).collect();

            let mut oracle_k = n;
            let mut running = 0u64;
            for (j, &b) in bits.iter().enumerate() {
                running += u64::from(b);
                if running == s && j + 1 < n {
                    oracle_k = j + 1;
                    break;
                }
            }

            let streams = vec![SampleStream::from_bits(bits).unwrap()];
            let (res, _) = run_smc(streams, s, 0.1).unwrap();
            assert_eq!(res.samples_used[0], oracle_k as u64, "trial {trial}");
        }
    }

    #[test]
    fn smc_samples_more_for_smaller_p_values() {
        // Negative-binomial expectation: E[K] is about s/p capped at n, so
        // arms with p = 0.5 stop far earlier than arms with p = 0.02.
        let s = 100u64;
        let n = 10_000;
        let arms = 50;
        let mean_k = |p: f64, master: u64| {
            let streams = streams_from(&vec![p; arms], n, master);
            let (res, _) = run_smc(streams, s, 0.1).unwrap();
            res.samples_used.iter().sum::<u64>() as f64 / arms as f64
        };
        let k_easy = mean_k(0.5, fold_seed(21, 0));
        let k_hard = mean_k(0.02, fold_seed(21, 1));
        assert!(k_easy < k_hard, "easy {k_easy} vs hard {k_hard}");
        assert!((k_easy - 200.0).abs() < 60.0, "k_easy {k_easy} far from s/p = 200");
        assert!((k_hard - 5000.0).abs() < 600.0, "k_hard {k_hard} far from s/p = 5000");
    }

    #[test]
    fn smc_validates_s() {
        assert!(run_smc(streams_from(&[0.5], 10, 1), 0, 0.1).is_err());
    }
}
