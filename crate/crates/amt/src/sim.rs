//! Generative models and experiment runners.
//!
//! The synthetic instance family draws each hypothesis's z-score from
//! `N(0, 1)` under the null and `N(mu, 1)` under the alternative, maps it
//! to a one-sided upper-tail ideal p-value `1 − Φ(z)`, and feeds Bernoulli
//! arms with those ideal p-values. The adaptive engine, the full-MC
//! pipeline, and the early-stopping baseline all consume streams rebuilt
//! from identical seeds, so recovery per repetition means exact equality
//! of discovery sets on one shared sample universe.
//!
//! Reports are replayable: the spec echo plus the master seed reproduce
//! every record byte for byte.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_fmc, run_smc};
use crate::engine::{run_amt, AmtConfig};
use crate::multiple_testing::{fdp, smc_recommended_s};
use crate::numerics::{derive_substream, fold_seed, std_normal_cdf, PurposeTag, StreamSeed};
use crate::sampling::SampleStream;
use crate::{Error, Result};

/// Parameters of one synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Number of hypotheses.
    pub m: usize,
    /// Fraction of hypotheses that are true alternatives; the first
    /// `round(m * alt_proportion)` indices are alternatives.
    pub alt_proportion: f64,
    /// Alternative effect size (z-score mean).
    pub mu_alt: f64,
    /// Full-MC sample cap per hypothesis.
    pub n: usize,
    /// Nominal FDR level.
    pub alpha: f64,
    /// Engine failure budget.
    pub delta: f64,
    /// Repetitions.
    pub reps: usize,
    /// Master seed; every substream in the experiment derives from it.
    pub master_seed: u64,
    /// First engine batch size.
    pub h1: usize,
    /// Engine batch growth factor.
    pub gamma: f64,
    /// Early-stopping success target; `None` applies the recommended
    /// heuristic with a rejection guess of `m / 10`.
    pub smc_s: Option<u64>,
}

impl Default for SimSpec {
    /// The default instance family: 1000 hypotheses with 200 alternatives
    /// at effect size 2.5, a 10,000-sample cap, and nominal FDR 0.1.
    fn default() -> Self {
        Self {
            m: 1000,
            alt_proportion: 0.2,
            mu_alt: 2.5,
            n: 10_000,
            alpha: 0.1,
            delta: 0.01,
            reps: 200,
            master_seed: 0,
            h1: AmtConfig::DEFAULT_H1,
            gamma: AmtConfig::DEFAULT_GAMMA,
            smc_s: None,
        }
    }
}

impl SimSpec {
    pub fn n_alternatives(&self) -> usize {
        (self.m as f64 * self.alt_proportion).round() as usize
    }

    pub fn smc_s_effective(&self) -> u64 {
        self.smc_s
            .unwrap_or_else(|| smc_recommended_s(self.alpha, self.n, self.m, (self.m / 10).max(1)))
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::NotPositive { what: "hypothesis count m" });
        }
        if self.reps == 0 {
            return Err(Error::NotPositive { what: "repetition count" });
        }
        if !(0.0..=1.0).contains(&self.alt_proportion) {
            return Err(Error::NotAProbability {
                what: "alternative proportion",
                value: self.alt_proportion,
            });
        }
        // Engine config construction validates the rest.
        AmtConfig::with_batching(self.alpha, self.delta, self.n, self.h1, self.gamma)?;
        Ok(())
    }

    fn engine_config(&self) -> AmtConfig {
        AmtConfig::with_batching(self.alpha, self.delta, self.n, self.h1, self.gamma)
            .expect("validated")
    }
}

/// One-sided upper-tail ideal p-value of a z-score: `1 − Φ(z)`.
///
/// Under the null (`z ~ N(0,1)`) this is exactly uniform on `(0, 1)`.
pub fn ideal_p_from_z(z: f64) -> Result<f64> {
    std_normal_cdf(-z)
}

/// Draw the ideal p-values and null mask for one repetition.
///
/// Hypothesis `i` of repetition `rep_index` uses the substream
/// `(fold_seed(master, rep_index), i, DataGeneration)`, so any single
/// value can be replayed in isolation.
pub fn gen_ideal_pvalues(spec: &SimSpec, rep_index: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    spec.validate()?;
    let rep_master = fold_seed(spec.master_seed, rep_index as u64);
    let n_alt = spec.n_alternatives();
    let mut p_ideal = Vec::with_capacity(spec.m);
    let mut null_mask = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let is_null = i >= n_alt;
        let mut rng =
            derive_substream(StreamSeed::new(rep_master, i as u64, PurposeTag::DataGeneration));
        let z: f64 = rng.sample(StandardNormal);
        let z = if is_null { z } else { z + spec.mu_alt };
        p_ideal.push(ideal_p_from_z(z)?);
        null_mask.push(is_null);
    }
    Ok((p_ideal, null_mask))
}

fn build_streams(spec: &SimSpec, rep_master: u64, p_ideal: &[f64]) -> Vec<SampleStream> {
    p_ideal
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            SampleStream::bernoulli(
                p,
                spec.n,
                StreamSeed::new(rep_master, i as u64, PurposeTag::McSampling),
            )
            .expect("valid ideal p-value")
        })
        .collect()
}

/// Per-repetition results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub m: usize,
    pub n: usize,
    /// Swept parameter value, when part of a sweep.
    pub param: Option<f64>,
    pub rep: usize,
    /// Adaptive and full-MC discovery sets are identical.
    pub recovered: bool,
    pub avg_samples_amt: f64,
    pub avg_samples_smc: f64,
    pub avg_samples_fmc: f64,
    /// False discovery proportion of the adaptive run.
    pub fdp_amt: f64,
    pub discoveries_amt: usize,
    pub discoveries_fmc: usize,
    pub discoveries_smc: usize,
    pub rounds: usize,
}

/// Aggregates over the repetitions of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregates {
    pub m: usize,
    pub n: usize,
    pub param: Option<f64>,
    pub reps: usize,
    pub recovery_rate: f64,
    pub mean_avg_samples_amt: f64,
    pub sd_avg_samples_amt: f64,
    pub mean_avg_samples_smc: f64,
    pub mean_avg_samples_fmc: f64,
    /// Mean false discovery proportion of the adaptive run.
    pub empirical_fdr: f64,
    /// Standard error of `empirical_fdr`.
    pub fdr_standard_error: f64,
    pub mean_discoveries_amt: f64,
}

/// Log-log slope fits across a scaling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub amt: f64,
    pub smc: f64,
}

/// Full experiment output: the spec echo, per-rep records, per-group
/// aggregates, and scaling fits when applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub spec: SimSpec,
    pub records: Vec<RepRecord>,
    pub groups: Vec<GroupAggregates>,
    pub slopes: Option<SlopeFit>,
}

impl ExperimentReport {
    /// Pretty JSON with stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flattened CSV, one row per repetition record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,n,param,rep,recovered,avg_samples_amt,avg_samples_smc,avg_samples_fmc,\
             fdp_amt,discoveries_amt,discoveries_fmc,discoveries_smc,rounds\n",
        );
        for r in &self.records {
            let param = r.param.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.m,
                r.n,
                param,
                r.rep,
                r.recovered,
                r.avg_samples_amt,
                r.avg_samples_smc,
                r.avg_samples_fmc,
                r.fdp_amt,
                r.discoveries_amt,
                r.discoveries_fmc,
                r.discoveries_smc,
                r.rounds,
            ));
        }
        out
    }
}

fn run_one_rep(spec: &SimSpec, rep: usize, param: Option<f64>) -> Result<RepRecord> {
    let rep_master = fold_seed(spec.master_seed, rep as u64);
    let (p_ideal, null_mask) = gen_ideal_pvalues(spec, rep)?;

    let amt = run_amt(build_streams(spec, rep_master, &p_ideal), &spec.engine_config())?;
    let fmc = run_fmc(build_streams(spec, rep_master, &p_ideal), spec.alpha)?;
    let (smc, smc_bh) = run_smc(
        build_streams(spec, rep_master, &p_ideal),
        spec.smc_s_effective(),
        spec.alpha,
    )?;

    let m = spec.m as f64;
    Ok(RepRecord {
        m: spec.m,
        n: spec.n,
        param,
        rep,
        recovered: amt.discoveries == fmc.bh.rejected,
        avg_samples_amt: amt.total_samples as f64 / m,
        avg_samples_smc: smc.total_samples as f64 / m,
        avg_samples_fmc: fmc.total_samples as f64 / m,
        fdp_amt: fdp(&amt.discoveries, &null_mask),
        discoveries_amt: amt.discoveries.len(),
        discoveries_fmc: fmc.bh.rejected.len(),
        discoveries_smc: smc_bh.rejected.len(),
        rounds: amt.rounds,
    })
}

fn aggregate(records: &[RepRecord]) -> GroupAggregates {
    let reps = records.len();
    let k = reps as f64;
    let mean = |f: fn(&RepRecord) -> f64| records.iter().map(f).sum::<f64>() / k;
    let recovery_rate = records.iter().filter(|r| r.recovered).count() as f64 / k;
    let mean_amt = mean(|r| r.avg_samples_amt);
    let var_amt = records
        .iter()
        .map(|r| (r.avg_samples_amt - mean_amt).powi(2))
        .sum::<f64>()
        / (k - 1.0).max(1.0);
    let empirical_fdr = mean(|r| r.fdp_amt);
    let fdr_var = records
        .iter()
        .map(|r| (r.fdp_amt - empirical_fdr).powi(2))
        .sum::<f64>()
        / (k - 1.0).max(1.0);
    GroupAggregates {
        m: records[0].m,
        n: records[0].n,
        param: records[0].param,
        reps,
        recovery_rate,
        mean_avg_samples_amt: mean_amt,
        sd_avg_samples_amt: var_amt.sqrt(),
        mean_avg_samples_smc: mean(|r| r.avg_samples_smc),
        mean_avg_samples_fmc: mean(|r| r.avg_samples_fmc),
        empirical_fdr,
        fdr_standard_error: (fdr_var / k).sqrt(),
        mean_discoveries_amt: mean(|r| r.discoveries_amt as f64),
    }
}

fn run_reps(spec: &SimSpec, param: Option<f64>) -> Result<Vec<RepRecord>> {
    (0..spec.reps)
        .into_par_iter()
        .map(|rep| run_one_rep(spec, rep, param))
        .collect()
}

/// Repeat the default comparison: coupled adaptive, full-MC, and
/// early-stopping runs per repetition, with recovery, sample, and FDP
/// accounting.
pub fn reliability_experiment(spec: &SimSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let records = run_reps(spec, None)?;
    let groups = vec![aggregate(&records)];
    Ok(ExperimentReport {
        kind: "reliability".into(),
        spec: spec.clone(),
        records,
        groups,
        slopes: None,
    })
}

/// Ordinary least-squares slope of `log(ys)` on `log(xs)`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::Empty { what: "log-log fit needs at least two points" });
    }
    for &v in xs.iter().chain(ys) {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NotPositive { what: "log-log fit inputs" });
        }
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig { reason: "log-log fit needs varying x values".into() });
    }
    Ok(sxy / sxx)
}

/// Scaling study: one grid point per `m` with `n = 10 m`, then log-log
/// slope fits of average samples per hypothesis against `n`.
pub fn scaling_experiment(m_list: &[usize], template: &SimSpec) -> Result<ExperimentReport> {
    if m_list.len() < 2 {
        return Err(Error::Empty { what: "scaling grid needs at least two points" });
    }
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (point, &m) in m_list.iter().enumerate() {
        let mut spec = template.clone();
        spec.m = m;
        spec.n = 10 * m;
        spec.h1 = spec.h1.min(spec.n);
        // Fresh seeds per grid point.
        spec.master_seed = fold_seed(template.master_seed, 1_000_003 * point as u64);
        spec.validate()?;
        let point_records = run_reps(&spec, None)?;
        groups.push(aggregate(&point_records));
        records.extend(point_records);
    }
    let xs: Vec<f64> = groups.iter().map(|g| g.n as f64).collect();
    let amt_ys: Vec<f64> = groups.iter().map(|g| g.mean_avg_samples_amt).collect();
    let smc_ys: Vec<f64> = groups.iter().map(|g| g.mean_avg_samples_smc).collect();
    let slopes = SlopeFit {
        amt: fit_loglog_slope(&xs, &amt_ys)?,
        smc: fit_loglog_slope(&xs, &smc_ys)?,
    };
    Ok(ExperimentReport {
        kind: "scaling".into(),
        spec: template.clone(),
        records,
        groups,
        slopes: Some(slopes),
    })
}

/// Which spec field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    AltProportion,
    Mu,
}

/// One reliability experiment per parameter value, with per-value curves.
pub fn sweep_experiment(
    parameter: SweepParameter,
    values: &[f64],
    template: &SimSpec,
) -> Result<ExperimentReport> {
    if values.is_empty() {
        return Err(Error::Empty { what: "sweep values" });
    }
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (point, &value) in values.iter().enumerate() {
        let mut spec = template.clone();
        match parameter {
            SweepParameter::Alpha => spec.alpha = value,
            SweepParameter::AltProportion => spec.alt_proportion = value,
            SweepParameter::Mu => spec.mu_alt = value,
        }
        spec.master_seed = fold_seed(template.master_seed, 2_000_003 * point as u64);
        spec.validate()?;
        let point_records = run_reps(&spec, Some(value))?;
        groups.push(aggregate(&point_records));
        records.extend(point_records);
    }
    Ok(ExperimentReport {
        kind: "sweep".into(),
        spec: template.clone(),
        records,
        groups,
        slopes: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SimSpec {
        SimSpec {
            m: 40,
            alt_proportion: 0.2,
            mu_alt: 2.5,
            n: 400,
            alpha: 0.1,
            delta: 0.05,
            reps: 10,
            master_seed: 99,
            ..SimSpec::default()
        }
    }

    #[test]
    fn ideal_p_mapping() {
        assert_eq!(ideal_p_from_z(0.0).unwrap(), 0.5);
        let p = ideal_p_from_z(2.5).unwrap();
        assert!((p - 0.006209665325776135).abs() < 1e-12);
    }

    #[test]
    fn null_pvalues_are_uniform() {
        let spec = SimSpec { m: 10_000, alt_proportion: 0.0, ..small_spec() };
        let (p, mask) = gen_ideal_pvalues(&spec, 0).unwrap();
        assert!(mask.iter().all(|&is_null| is_null));
        let frac = p.iter().filter(|&&v| v <= 0.1).count() as f64 / p.len() as f64;
        let band = 3.0 * (0.1f64 * 0.9 / p.len() as f64).sqrt();
        assert!((frac - 0.1).abs() <= band, "null mass {frac} outside band {band}");
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        assert_eq!(gen_ideal_pvalues(&spec, 3).unwrap(), gen_ideal_pvalues(&spec, 3).unwrap());
        assert_ne!(gen_ideal_pvalues(&spec, 3).unwrap(), gen_ideal_pvalues(&spec, 4).unwrap());
    }

    #[test]
    fn alternatives_count_is_rounded() {
        let spec = SimSpec { m: 10, alt_proportion: 0.25, ..small_spec() };
        assert_eq!(spec.n_alternatives(), 3);
        let (_, mask) = gen_ideal_pvalues(&spec, 0).unwrap();
        assert_eq!(mask.iter().filter(|&&is_null| !is_null).count(), 3);
    }

    #[test]
    fn single_batch_spec_degenerates_to_full_mc() {
        let spec = SimSpec { n: 100, h1: 100, reps: 5, ..small_spec() };
        let report = reliability_experiment(&spec).unwrap();
        assert!(report.records.iter().all(|r| r.recovered));
        assert!(report.records.iter().all(|r| r.avg_samples_amt == 100.0));
    }

    #[test]
    fn reliability_replays_byte_identically() {
        let report_a = reliability_experiment(&small_spec()).unwrap();
        let report_b = reliability_experiment(&small_spec()).unwrap();
        assert_eq!(report_a.to_json(), report_b.to_json());
    }

    #[test]
    fn amt_never_exceeds_full_mc_budget() {
        let report = reliability_experiment(&small_spec()).unwrap();
        for r in &report.records {
            assert!(r.avg_samples_amt <= r.avg_samples_fmc);
        }
    }

    #[test]
    fn aggregates_recompute_from_records() {
        let report = reliability_experiment(&small_spec()).unwrap();
        let again = aggregate(&report.records);
        assert_eq!(report.groups[0], again);
    }

    #[test]
    fn loglog_slope_trivial_cases() {
        let xs = [10.0, 100.0, 1000.0];
        let linear: Vec<f64> = xs.iter().map(|x| 10.0 * x).collect();
        assert!((fit_loglog_slope(&xs, &linear).unwrap() - 1.0).abs() < 1e-12);
        let constant = [5.0, 5.0, 5.0];
        assert_eq!(fit_loglog_slope(&xs, &constant).unwrap(), 0.0);
        let sqrt: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        assert!((fit_loglog_slope(&xs, &sqrt).unwrap() - 0.5).abs() < 1e-12);
        assert!(fit_loglog_slope(&xs[..1], &linear[..1]).is_err());
        assert!(fit_loglog_slope(&[1.0, -1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn scaling_needs_two_points() {
        assert!(scaling_experiment(&[100], &small_spec()).is_err());
    }

    #[test]
    fn sweep_alpha_recovers_per_point() {
        let template = SimSpec { reps: 4, ..small_spec() };
        let report =
            sweep_experiment(SweepParameter::Alpha, &[0.05, 0.1, 0.2], &template).unwrap();
        assert_eq!(report.groups.len(), 3);
        for group in &report.groups {
            assert!(group.recovery_rate >= 0.75, "recovery {}", group.recovery_rate);
            assert!(group.mean_avg_samples_amt.is_finite());
        }
    }

    #[test]
    fn sweep_all_null_controls_fdr() {
        let template = SimSpec { m: 50, n: 500, reps: 40, ..small_spec() };
        let report = sweep_experiment(SweepParameter::Mu, &[0.0], &template).unwrap();
        let group = &report.groups[0];
        assert!(
            group.empirical_fdr <= template.alpha + 0.05,
            "all-null FDR {} above {}",
            group.empirical_fdr,
            template.alpha + 0.05
        );
    }

    #[test]
    fn sweep_alt_proportion_monotone_discoveries() {
        let template = SimSpec { reps: 8, ..small_spec() };
        let report =
            sweep_experiment(SweepParameter::AltProportion, &[0.0, 0.2], &template).unwrap();
        assert!(report.records.iter().all(|r| r.recovered));
        assert!(
            report.groups[0].mean_discoveries_amt <= report.groups[1].mean_discoveries_amt,
            "discoveries should weakly increase with the alternative proportion"
        );
    }
}
