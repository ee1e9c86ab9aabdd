//! Capped binary MC-sample streams, one per hypothesis.
//!
//! A [`SampleStream`] produces at most `n` bits. Bit `j` is the j-th MC
//! sample for the hypothesis: `1` when the j-th null statistic reaches the
//! observed statistic, `0` otherwise. Streams come in two flavours:
//!
//! - synthetic Bernoulli arms built from an ideal p-value
//!   ([`SampleStream::bernoulli`]), used by the simulation harness;
//! - permutation-test arms over tabular data
//!   ([`SampleStream::permutation`]), where each bit evaluates the test
//!   statistic on a freshly permuted response column.
//!
//! Consuming the first `k` bits of a seeded stream is distributionally
//! identical to drawing `k` of the `n` realized samples uniformly without
//! replacement (the samples are i.i.d., hence exchangeable), and it couples
//! the adaptive run bit-for-bit with the full-MC run on the same seeds.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{derive_substream, StreamSeed};
use crate::{Error, Result};

/// Test statistic evaluated by a permutation arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    PearsonCorrelation,
    ChiSquared,
}

/// Sample Pearson correlation of two equal-length vectors.
///
/// Defined as 0 when either vector has zero variance, which makes the
/// degenerate arm maximally conservative: every permuted statistic ties the
/// observed one.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Empty { what: "correlation needs at least two observations" });
    }
    let n = x.len() as f64;
    let sum_x: f64 = x.iter().sum();
    let sum_y: f64 = y.iter().sum();
    let sum_xx: f64 = x.iter().map(|v| v * v).sum();
    let sum_yy: f64 = y.iter().map(|v| v * v).sum();
    let sum_xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(correlation_from_sums(n, sum_x, sum_y, sum_xx, sum_yy, sum_xy))
}

fn correlation_from_sums(
    n: f64,
    sum_x: f64,
    sum_y: f64,
    sum_xx: f64,
    sum_yy: f64,
    sum_xy: f64,
) -> f64 {
    let var_x = sum_xx - sum_x * sum_x / n;
    let var_y = sum_yy - sum_y * sum_y / n;
    if var_x <= 0.0 || var_y <= 0.0 {
        return 0.0;
    }
    let cov = sum_xy - sum_x * sum_y / n;
    (cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson chi-squared statistic of the contingency table of `(x, y)`.
///
/// Cells with zero expected count (empty row or column margins) contribute
/// nothing; a variable with a single observed category gives 0.
pub fn chi_squared_statistic<T, U>(x: &[T], y: &[U]) -> Result<f64>
where
    T: std::hash::Hash + Eq,
    U: std::hash::Hash + Eq,
{
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::Empty { what: "chi-squared input" });
    }
    let (x_codes, x_levels) = encode_categories(x);
    let (y_codes, y_levels) = encode_categories(y);
    Ok(chi_squared_from_codes(&x_codes, x_levels, &y_codes, y_levels))
}

fn encode_categories<T: std::hash::Hash + Eq>(values: &[T]) -> (Vec<u32>, usize) {
    let mut map = std::collections::HashMap::new();
    let codes = values
        .iter()
        .map(|v| {
            let next = map.len() as u32;
            *map.entry(v).or_insert(next)
        })
        .collect();
    (codes, map.len())
}

pub(crate) fn chi_squared_from_codes(
    x_codes: &[u32],
    x_levels: usize,
    y_codes: &[u32],
    y_levels: usize,
) -> f64 {
    if x_levels < 2 || y_levels < 2 {
        return 0.0;
    }
    let mut counts = vec![0u64; x_levels * y_levels];
    for (&a, &b) in x_codes.iter().zip(y_codes) {
        counts[a as usize * y_levels + b as usize] += 1;
    }
    let mut row_totals = vec![0u64; x_levels];
    let mut col_totals = vec![0u64; y_levels];
    for r in 0..x_levels {
        for c in 0..y_levels {
            let v = counts[r * y_levels + c];
            row_totals[r] += v;
            col_totals[c] += v;
        }
    }
    let total = x_codes.len() as f64;
    let mut stat = 0.0;
    for r in 0..x_levels {
        if row_totals[r] == 0 {
            continue;
        }
        for c in 0..y_levels {
            if col_totals[c] == 0 {
                continue;
            }
            let expected = row_totals[r] as f64 * col_totals[c] as f64 / total;
            let observed = counts[r * y_levels + c] as f64;
            let diff = observed - expected;
            stat += diff * diff / expected;
        }
    }
    stat
}

/// One column of a permutation arm, pre-encoded for fast statistic
/// evaluation under permutation.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    /// Category codes in `0..levels`.
    Categorical { codes: Vec<u32>, levels: usize },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Encode arbitrary categorical labels into codes.
    pub fn from_labels<T: std::hash::Hash + Eq>(labels: &[T]) -> Self {
        let (codes, levels) = encode_categories(labels);
        Column::Categorical { codes, levels }
    }
}

/// A single hypothesis for a permutation test: an input column, the shared
/// response column, and the observed statistic between them.
#[derive(Debug, Clone)]
pub struct PermutationArm {
    input: Arc<Column>,
    response: Arc<Column>,
    statistic_kind: StatisticKind,
    observed_statistic: f64,
}

impl PermutationArm {
    /// Build an arm, computing the observed statistic.
    pub fn new(
        input: Arc<Column>,
        response: Arc<Column>,
        statistic_kind: StatisticKind,
    ) -> Result<Self> {
        if input.len() != response.len() {
            return Err(Error::LengthMismatch { left: input.len(), right: response.len() });
        }
        if input.len() < 2 {
            return Err(Error::Empty { what: "permutation arm needs at least two observations" });
        }
        let observed_statistic = evaluate_statistic(statistic_kind, &input, &response)?;
        Ok(Self { input, response, statistic_kind, observed_statistic })
    }

    pub fn observed_statistic(&self) -> f64 {
        self.observed_statistic
    }

    pub fn statistic_kind(&self) -> StatisticKind {
        self.statistic_kind
    }

    pub fn sample_size(&self) -> usize {
        self.input.len()
    }
}

fn evaluate_statistic(kind: StatisticKind, input: &Column, response: &Column) -> Result<f64> {
    match kind {
        StatisticKind::PearsonCorrelation => match (input, response) {
            (Column::Real(x), Column::Real(y)) => pearson_correlation(x, y),
            _ => Err(Error::InvalidConfig {
                reason: "Pearson correlation requires real-valued columns".into(),
            }),
        },
        StatisticKind::ChiSquared => match (input, response) {
            (
                Column::Categorical { codes: x, levels: lx },
                Column::Categorical { codes: y, levels: ly },
            ) => Ok(chi_squared_from_codes(x, *lx, y, *ly)),
            _ => Err(Error::InvalidConfig {
                reason: "chi-squared requires categorical columns".into(),
            }),
        },
    }
}

// Precomputed sums for O(N) correlation under permutation: only the cross
// term changes when y is permuted.
#[derive(Debug, Clone)]
struct PearsonScratch {
    x: Vec<f64>,
    y: Vec<f64>,
    sum_x: f64,
    sum_y: f64,
    sum_xx: f64,
    sum_yy: f64,
}

#[derive(Debug, Clone)]
struct ChiSquaredScratch {
    x_codes: Vec<u32>,
    x_levels: usize,
    y_codes: Vec<u32>,
    y_levels: usize,
}

#[derive(Debug, Clone)]
enum BitSource {
    Bernoulli {
        p: f64,
        rng: ChaCha8Rng,
    },
    PermutationPearson {
        scratch: PearsonScratch,
        observed: f64,
        rng: ChaCha8Rng,
    },
    PermutationChiSquared {
        scratch: ChiSquaredScratch,
        observed: f64,
        rng: ChaCha8Rng,
    },
    /// Fixed bit pattern, for tests and worked examples.
    Explicit { bits: Vec<bool> },
}

/// A capped, seeded source of binary MC samples for one hypothesis.
///
/// The stream owns its generator state: replaying from the same
/// [`StreamSeed`] yields the identical bit sequence, and the first `k` bits
/// are the same no matter how consumption is split into batches.
#[derive(Debug, Clone)]
pub struct SampleStream {
    capacity: usize,
    consumed: usize,
    successes: u64,
    source: BitSource,
}

/// Counts returned by a batch draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawSummary {
    pub drawn: usize,
    pub ones: usize,
}

impl SampleStream {
    /// Synthetic arm: i.i.d. Bernoulli(`p_ideal`) bits, at most `n` of them.
    pub fn bernoulli(p_ideal: f64, n: usize, seed: StreamSeed) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_ideal) {
            return Err(Error::NotAProbability { what: "p_ideal", value: p_ideal });
        }
        if n == 0 {
            return Err(Error::NotPositive { what: "stream capacity" });
        }
        Ok(Self {
            capacity: n,
            consumed: 0,
            successes: 0,
            source: BitSource::Bernoulli { p: p_ideal, rng: derive_substream(seed) },
        })
    }

    /// Permutation arm: bit `j` is `1` exactly when the statistic of the
    /// input against the j-th permuted response reaches the observed
    /// statistic (ties count).
    pub fn permutation(arm: &PermutationArm, n: usize, seed: StreamSeed) -> Result<Self> {
        if n == 0 {
            return Err(Error::NotPositive { what: "stream capacity" });
        }
        let rng = derive_substream(seed);
        let source = match (arm.statistic_kind, &*arm.input, &*arm.response) {
            (StatisticKind::PearsonCorrelation, Column::Real(x), Column::Real(y)) => {
                let scratch = PearsonScratch {
                    x: x.clone(),
                    y: y.clone(),
                    sum_x: x.iter().sum(),
                    sum_y: y.iter().sum(),
                    sum_xx: x.iter().map(|v| v * v).sum(),
                    sum_yy: y.iter().map(|v| v * v).sum(),
                };
                BitSource::PermutationPearson { scratch, observed: arm.observed_statistic, rng }
            }
            (
                StatisticKind::ChiSquared,
                Column::Categorical { codes: x, levels: lx },
                Column::Categorical { codes: y, levels: ly },
            ) => BitSource::PermutationChiSquared {
                scratch: ChiSquaredScratch {
                    x_codes: x.clone(),
                    x_levels: *lx,
                    y_codes: y.clone(),
                    y_levels: *ly,
                },
                observed: arm.observed_statistic,
                rng,
            },
            _ => {
                return Err(Error::InvalidConfig {
                    reason: "statistic kind does not match column types".into(),
                })
            }
        };
        Ok(Self { capacity: n, consumed: 0, successes: 0, source })
    }

    /// Stream over a fixed bit pattern; capacity is the pattern length.
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::NotPositive { what: "stream capacity" });
        }
        Ok(Self {
            capacity: bits.len(),
            consumed: 0,
            successes: 0,
            source: BitSource::Explicit { bits },
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.capacity - self.consumed
    }

    /// Running count of 1-bits over everything consumed so far.
    pub fn success_count(&self) -> u64 {
        self.successes
    }

    pub fn is_exhausted(&self) -> bool {
        self.consumed == self.capacity
    }

    /// Draw the next bit, or `None` once the cap is reached.
    pub fn next_bit(&mut self) -> Option<bool> {
        if self.consumed == self.capacity {
            return None;
        }
        let bit = match &mut self.source {
            BitSource::Bernoulli { p, rng } => rng.gen::<f64>() < *p,
            BitSource::PermutationPearson { scratch, observed, rng } => {
                shuffle(&mut scratch.y, rng);
                let sum_xy: f64 = scratch.x.iter().zip(&scratch.y).map(|(a, b)| a * b).sum();
                let stat = correlation_from_sums(
                    scratch.x.len() as f64,
                    scratch.sum_x,
                    scratch.sum_y,
                    scratch.sum_xx,
                    scratch.sum_yy,
                    sum_xy,
                );
                stat >= *observed
            }
            BitSource::PermutationChiSquared { scratch, observed, rng } => {
                shuffle(&mut scratch.y_codes, rng);
                let stat = chi_squared_from_codes(
                    &scratch.x_codes,
                    scratch.x_levels,
                    &scratch.y_codes,
                    scratch.y_levels,
                );
                stat >= *observed
            }
            BitSource::Explicit { bits } => bits[self.consumed],
        };
        self.consumed += 1;
        self.successes += u64::from(bit);
        Some(bit)
    }

    /// Draw up to `count` bits, returning how many were drawn and how many
    /// were ones. Errors if `count` exceeds the remaining capacity.
    pub fn draw(&mut self, count: usize) -> Result<DrawSummary> {
        if count > self.remaining() {
            return Err(Error::CapacityExceeded { requested: count, remaining: self.remaining() });
        }
        let mut ones = 0;
        for _ in 0..count {
            if self.next_bit().expect("capacity checked above") {
                ones += 1;
            }
        }
        Ok(DrawSummary { drawn: count, ones })
    }

    /// Draw up to `count` bits into a vector (test and inspection helper).
    pub fn draw_bits(&mut self, count: usize) -> Result<Vec<bool>> {
        if count > self.remaining() {
            return Err(Error::CapacityExceeded { requested: count, remaining: self.remaining() });
        }
        Ok((0..count).map(|_| self.next_bit().expect("capacity checked")).collect())
    }

    /// Consume everything left in the stream, returning the total success
    /// count over all `capacity` bits.
    pub fn exhaust(&mut self) -> u64 {
        while self.next_bit().is_some() {}
        self.successes
    }
}

// Fisher-Yates over the stream's own substream: exactly uniform and
// deterministic. Repeated shuffles of the same buffer stay uniform, so each
// draw sees a fresh uniform permutation of the response.
fn shuffle<T>(values: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PurposeTag;

    fn seed(i: u64) -> StreamSeed {
        StreamSeed::new(0xA11CE, i, PurposeTag::McSampling)
    }

    #[test]
    fn bernoulli_rejects_bad_p() {
        assert!(SampleStream::bernoulli(-0.1, 10, seed(0)).is_err());
        assert!(SampleStream::bernoulli(1.5, 10, seed(0)).is_err());
    }

    #[test]
    fn bernoulli_degenerate_zero() {
        let mut s = SampleStream::bernoulli(0.0, 200, seed(1)).unwrap();
        assert_eq!(s.exhaust(), 0);
    }

    #[test]
    fn bernoulli_degenerate_one() {
        let mut s = SampleStream::bernoulli(1.0, 200, seed(2)).unwrap();
        assert_eq!(s.exhaust(), 200);
    }

    #[test]
    fn bernoulli_law_of_large_numbers() {
        // Exact binomial 4-sigma band around 0.5 at n = 1e5.
        let n = 100_000;
        let mut s = SampleStream::bernoulli(0.5, n, seed(3)).unwrap();
        let frac = s.exhaust() as f64 / n as f64;
        let band = 4.0 * (0.25f64 / n as f64).sqrt();
        assert!((frac - 0.5).abs() <= band, "fraction {frac} outside 4-sigma band {band}");
    }

    #[test]
    fn prefix_coupling_across_batch_splits() {
        let whole: Vec<bool> = {
            let mut s = SampleStream::bernoulli(0.37, 500, seed(4)).unwrap();
            s.draw_bits(500).unwrap()
        };
        let mut split = SampleStream::bernoulli(0.37, 500, seed(4)).unwrap();
        let mut collected = Vec::new();
        for chunk in [1usize, 7, 100, 250, 142] {
            collected.extend(split.draw_bits(chunk).unwrap());
        }
        assert_eq!(whole, collected);
    }

    #[test]
    fn draw_respects_capacity() {
        let mut s = SampleStream::bernoulli(0.5, 10, seed(5)).unwrap();
        assert!(s.draw(11).is_err());
        s.draw(10).unwrap();
        assert!(s.is_exhausted());
        assert!(s.next_bit().is_none());
        assert!(s.draw(1).is_err());
    }

    #[test]
    fn pearson_perfect_correlations() {
        assert_eq!(pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(pearson_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let r = pearson_correlation(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn pearson_zero_variance_is_zero() {
        assert_eq!(pearson_correlation(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn pearson_length_mismatch() {
        assert!(pearson_correlation(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn chi_squared_independent_table_is_zero() {
        // 2x2 counts [[10,10],[10,10]].
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (a, b, count) in [(0, 0, 10), (0, 1, 10), (1, 0, 10), (1, 1, 10)] {
            for _ in 0..count {
                x.push(a);
                y.push(b);
            }
        }
        assert_eq!(chi_squared_statistic(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn chi_squared_hand_value() {
        // 2x2 counts [[20,10],[10,20]]: N(ad-bc)^2 / (row and column
        // products) = 60 * 300^2 / 810000 = 20/3.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (a, b, count) in [(0, 0, 20), (0, 1, 10), (1, 0, 10), (1, 1, 20)] {
            for _ in 0..count {
                x.push(a);
                y.push(b);
            }
        }
        let stat = chi_squared_statistic(&x, &y).unwrap();
        assert!((stat - 20.0 / 3.0).abs() < 1e-12, "got {stat}");
    }

    #[test]
    fn chi_squared_single_category_is_zero() {
        let x = [0, 1, 0, 1, 1];
        let y = [7, 7, 7, 7, 7];
        assert_eq!(chi_squared_statistic(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn chi_squared_length_mismatch() {
        assert!(chi_squared_statistic(&[1, 2], &[1]).is_err());
    }

    fn binary_arm(x: &[u32], y: &[u32]) -> PermutationArm {
        let input = Arc::new(Column::from_labels(x));
        let response = Arc::new(Column::from_labels(y));
        PermutationArm::new(input, response, StatisticKind::ChiSquared).unwrap()
    }

    #[test]
    fn permutation_constant_response_all_ones() {
        let arm = binary_arm(&[0, 1, 0, 1, 0, 1], &[1, 1, 1, 1, 1, 1]);
        assert_eq!(arm.observed_statistic(), 0.0);
        let mut s = SampleStream::permutation(&arm, 50, seed(6)).unwrap();
        assert_eq!(s.exhaust(), 50);
    }

    #[test]
    fn permutation_constant_input_all_ones() {
        let arm = binary_arm(&[3, 3, 3, 3, 3, 3], &[0, 1, 0, 1, 0, 1]);
        assert_eq!(arm.observed_statistic(), 0.0);
        let mut s = SampleStream::permutation(&arm, 50, seed(7)).unwrap();
        assert_eq!(s.exhaust(), 50);
    }

    // Exact permutation p-value by enumerating all N! permutations of the
    // response; the MC estimate must land in its 4-sigma binomial band.
    fn exact_permutation_p(x: &[u32], y: &[u32]) -> f64 {
        fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
            if items.len() <= 1 {
                return vec![items.to_vec()];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.to_vec();
                let first = rest.remove(i);
                for mut tail in permutations(&rest) {
                    tail.insert(0, first);
                    out.push(tail);
                }
            }
            out
        }
        let observed = chi_squared_statistic(x, y).unwrap();
        let all = permutations(y);
        let hits = all
            .iter()
            .filter(|perm| chi_squared_statistic(x, perm).unwrap() >= observed)
            .count();
        hits as f64 / all.len() as f64
    }

    #[test]
    fn permutation_stream_matches_exact_enumeration() {
        // Uneven margins keep the observed statistic strictly inside the
        // permutation distribution: here exactly 288 of the 720
        // permutations reach it, so p_exact = 0.4.
        let x = [0u32, 0, 1, 1, 1, 1];
        let y = [0u32, 0, 1, 1, 1, 0];
        let p_exact = exact_permutation_p(&x, &y);
        assert_eq!(p_exact, 0.4);
        assert!(p_exact > 0.0 && p_exact < 1.0);

        let n = 10_000;
        let arm = binary_arm(&x, &y);
        let mut s = SampleStream::permutation(&arm, n, seed(8)).unwrap();
        let p_mc = (1 + s.exhaust()) as f64 / (n + 1) as f64;
        let band = 4.0 * (p_exact * (1.0 - p_exact) / n as f64).sqrt();
        assert!(
            (p_mc - p_exact).abs() <= band,
            "MC p {p_mc} outside 4-sigma band around exact {p_exact} (band {band})"
        );
    }

    #[test]
    fn permutation_stream_is_replayable() {
        let arm = binary_arm(&[0, 0, 1, 1, 0, 1, 1, 0], &[1, 0, 1, 0, 1, 1, 0, 0]);
        let a: Vec<bool> = SampleStream::permutation(&arm, 200, seed(9))
            .unwrap()
            .draw_bits(200)
            .unwrap();
        let b: Vec<bool> = SampleStream::permutation(&arm, 200, seed(9))
            .unwrap()
            .draw_bits(200)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn null_permutation_pvalues_stochastically_dominate_uniform() {
        // Exchangeable null data: fraction of MC p-values <= 0.1 stays
        // within 0.1 plus 3 binomial standard deviations.
        use crate::numerics::fold_seed;
        let arms = 1000;
        let n = 400;
        let rows = 12;
        let mut at_most = 0;
        for a in 0..arms {
            let master = fold_seed(0xDA7A, a);
            let mut rng = derive_substream(StreamSeed::new(master, a, PurposeTag::DataGeneration));
            let x: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>()).collect();
            let arm = PermutationArm::new(
                Arc::new(Column::Real(x)),
                Arc::new(Column::Real(y)),
                StatisticKind::PearsonCorrelation,
            )
            .unwrap();
            let mut s =
                SampleStream::permutation(&arm, n, StreamSeed::new(master, a, PurposeTag::Permutation))
                    .unwrap();
            let p = (1 + s.exhaust()) as f64 / (n + 1) as f64;
            if p <= 0.1 {
                at_most += 1;
            }
        }
        let frac = at_most as f64 / arms as f64;
        let limit = 0.1 + 3.0 * (0.1f64 * 0.9 / arms as f64).sqrt();
        assert!(frac <= limit, "null p-value mass below 0.1 is {frac}, limit {limit}");
    }

    #[test]
    fn explicit_stream_replays_pattern() {
        let bits = vec![true, false, true, true, false];
        let mut s = SampleStream::from_bits(bits.clone()).unwrap();
        let drawn = s.draw_bits(5).unwrap();
        assert_eq!(drawn, bits);
        assert_eq!(s.success_count(), 3);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn collect_split(mut stream: SampleStream, splits: &[usize]) -> Vec<bool> {
            let mut bits = Vec::new();
            for &chunk in splits {
                let take = chunk.min(stream.remaining());
                bits.extend(stream.draw_bits(take).unwrap());
            }
            bits.extend(stream.draw_bits(stream.remaining()).unwrap());
            bits
        }

        proptest! {
            #[test]
            fn bernoulli_prefix_coupling_under_any_split(
                p in 0.0f64..=1.0,
                master in any::<u64>(),
                splits in proptest::collection::vec(0usize..40, 0..12),
            ) {
                let n = 120;
                let make = || SampleStream::bernoulli(
                    p, n, StreamSeed::new(master, 0, PurposeTag::McSampling)).unwrap();
                let whole = collect_split(make(), &[]);
                let pieces = collect_split(make(), &splits);
                prop_assert_eq!(whole, pieces);
            }

            #[test]
            fn permutation_prefix_coupling_under_any_split(
                master in any::<u64>(),
                splits in proptest::collection::vec(0usize..30, 0..8),
            ) {
                let arm = binary_arm(&[0, 0, 1, 1, 0, 1, 1, 0], &[1, 0, 1, 0, 1, 1, 0, 0]);
                let make = || SampleStream::permutation(
                    &arm, 60, StreamSeed::new(master, 3, PurposeTag::Permutation)).unwrap();
                let whole = collect_split(make(), &[]);
                let pieces = collect_split(make(), &splits);
                prop_assert_eq!(whole, pieces);
            }
        }
    }
}
