//! Command-line front end for adaptive Monte Carlo multiple testing.
//!
//! Subcommands `amt`, `fmc`, and `smc` test every column of a CSV dataset
//! against a response column via permutation tests; `simulate` runs the
//! synthetic experiment harness; `compare` runs several methods on one
//! coupled synthetic instance.

mod dataset;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use amt::baselines::{run_fmc, run_smc};
use amt::engine::{run_amt, AmtConfig};
use amt::multiple_testing::smc_recommended_s;
use amt::numerics::{fold_seed, PurposeTag, StreamSeed};
use amt::sampling::{SampleStream, StatisticKind};
use amt::sim::{
    gen_ideal_pvalues, reliability_experiment, scaling_experiment, sweep_experiment, SimSpec,
    SweepParameter,
};

use dataset::{build_arms, load_dataset, BuiltArm};
use report::{reports_to_csv, ConfigEcho, Discovery, RunReport, Totals};

#[derive(Parser)]
#[command(
    name = "amt",
    version,
    about = "Adaptive Monte Carlo multiple testing over permutation tests",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive run: recovers the full-MC discovery set with high
    /// probability at a fraction of the samples
    Amt(DataArgs),
    /// Full Monte Carlo reference run (exhausts the sample budget)
    Fmc(DataArgs),
    /// Sequential early-stopping run (per-hypothesis stopping)
    Smc(DataArgs),
    /// Synthetic experiments: reliability, scaling, or parameter sweeps
    Simulate(SimulateArgs),
    /// Run several methods on one coupled synthetic instance
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Nominal FDR level
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Failure budget for the adaptive engine
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// First adaptive batch size
    #[arg(long, default_value_t = 100)]
    h1: usize,
    /// Geometric batch growth factor
    #[arg(long, default_value_t = 1.1)]
    gamma: f64,
    /// Master seed; every random quantity derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core); never changes the results
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Success target for the smc method (default: matched-accuracy
    /// heuristic with a rejection guess of m/10)
    #[arg(long)]
    smc_s: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV dataset with a header row
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column
    #[arg(long)]
    response: String,
    /// MC sample cap per hypothesis
    #[arg(long)]
    n: usize,
    /// Test statistic (default: pearson when both sides are real-valued,
    /// chi2 otherwise)
    #[arg(long, value_enum)]
    statistic: Option<StatisticArg>,
    /// Drop columns with a higher missing fraction
    #[arg(long, default_value_t = 0.05)]
    missing_threshold: f64,
    /// Cell value marking a missing entry
    #[arg(long, default_value = "NA")]
    missing_marker: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which experiment to run
    #[arg(value_enum)]
    experiment: ExperimentKind,
    /// Number of hypotheses
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// MC sample cap per hypothesis
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Fraction of true alternatives
    #[arg(long, default_value_t = 0.2)]
    alt_prop: f64,
    /// Alternative effect size
    #[arg(long, default_value_t = 2.5)]
    mu: f64,
    /// Repetitions per grid point
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Hypothesis counts for the scaling grid (n = 10m per point)
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600")]
    m_list: Vec<usize>,
    /// Swept parameter (sweep experiment)
    #[arg(long, value_enum)]
    param: Option<SweepParamArg>,
    /// Swept values (sweep experiment)
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Methods to run on the shared instance
    #[arg(long, value_delimiter = ',', default_value = "amt,fmc,smc")]
    methods: Vec<MethodArg>,
    /// Number of hypotheses
    #[arg(long)]
    m: usize,
    /// MC sample cap per hypothesis
    #[arg(long)]
    n: usize,
    /// Fraction of true alternatives
    #[arg(long, default_value_t = 0.2)]
    alt_prop: f64,
    /// Alternative effect size
    #[arg(long, default_value_t = 2.5)]
    mu: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StatisticArg {
    Chi2,
    Pearson,
}

impl From<StatisticArg> for StatisticKind {
    fn from(value: StatisticArg) -> Self {
        match value {
            StatisticArg::Chi2 => StatisticKind::ChiSquared,
            StatisticArg::Pearson => StatisticKind::PearsonCorrelation,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    /// Coupled adaptive/full-MC/early-stopping comparison at one setting
    Reliability,
    /// Sample-complexity slopes across a grid of problem sizes
    Scaling,
    /// Reliability runs across a grid of one parameter
    Sweep,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepParamArg {
    Alpha,
    AltProp,
    Mu,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Amt,
    Fmc,
    Smc,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Amt => "amt",
            MethodArg::Fmc => "fmc",
            MethodArg::Smc => "smc",
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Amt(a) | Command::Fmc(a) | Command::Smc(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::Compare(a) => a.common.threads,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        pool = pool.num_threads(threads);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Amt(args) => run_data_command(MethodArg::Amt, &args),
        Command::Fmc(args) => run_data_command(MethodArg::Fmc, &args),
        Command::Smc(args) => run_data_command(MethodArg::Smc, &args),
        Command::Simulate(args) => run_simulate(&args),
        Command::Compare(args) => run_compare(&args),
    })
}

fn emit(common: &CommonArgs, body: String) -> Result<()> {
    use std::io::Write;
    match &common.out {
        Some(path) => std::fs::write(path, body)
            .with_context(|| format!("writing report to {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(body.as_bytes()).and_then(|_| stdout.write_all(b"\n")) {
                // A closed pipe (e.g. piping into `head`) is not an error.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.context("writing report to stdout"),
            }
        }
    }
}

fn effective_smc_s(common: &CommonArgs, n: usize, m: usize) -> u64 {
    common
        .smc_s
        .unwrap_or_else(|| smc_recommended_s(common.alpha, n, m, (m / 10).max(1)))
}

struct MethodOutcome {
    discoveries: Vec<Discovery>,
    total_samples: u64,
    rounds: usize,
}

fn run_method(
    method: MethodArg,
    streams: Vec<SampleStream>,
    names: &[String],
    samples_cap: usize,
    common: &CommonArgs,
) -> Result<MethodOutcome> {
    Ok(match method {
        MethodArg::Amt => {
            let config = AmtConfig::with_batching(
                common.alpha,
                common.delta,
                samples_cap,
                common.h1.min(samples_cap),
                common.gamma,
            )?;
            let result = run_amt(streams, &config)?;
            let discoveries = result
                .discoveries
                .iter()
                .map(|&i| Discovery {
                    column: names[i].clone(),
                    p_lb: Some(result.lower_bounds[i]),
                    p_ub: Some(result.upper_bounds[i]),
                    p_value: None,
                    samples_used: result.per_hypothesis_samples[i],
                })
                .collect();
            MethodOutcome {
                discoveries,
                total_samples: result.total_samples,
                rounds: result.rounds,
            }
        }
        MethodArg::Fmc => {
            let result = run_fmc(streams, common.alpha)?;
            let discoveries = result
                .bh
                .rejected
                .iter()
                .map(|&i| Discovery {
                    column: names[i].clone(),
                    p_lb: None,
                    p_ub: None,
                    p_value: Some(result.p_values[i]),
                    samples_used: samples_cap as u64,
                })
                .collect();
            MethodOutcome { discoveries, total_samples: result.total_samples, rounds: 1 }
        }
        MethodArg::Smc => {
            let m = streams.len();
            let s = effective_smc_s(common, samples_cap, m);
            let (result, bh) = run_smc(streams, s, common.alpha)?;
            let discoveries = bh
                .rejected
                .iter()
                .map(|&i| Discovery {
                    column: names[i].clone(),
                    p_lb: None,
                    p_ub: None,
                    p_value: Some(result.p_values[i]),
                    samples_used: result.samples_used[i],
                })
                .collect();
            MethodOutcome { discoveries, total_samples: result.total_samples, rounds: 1 }
        }
    })
}

fn run_data_command(method: MethodArg, args: &DataArgs) -> Result<()> {
    let started = Instant::now();
    let data = load_dataset(
        &args.data,
        &args.response,
        args.missing_threshold,
        &args.missing_marker,
    )?;
    let arms = build_arms(&data, args.statistic.map(Into::into))?;
    let names: Vec<String> = arms.iter().map(|a| a.name.clone()).collect();
    let streams: Vec<SampleStream> = arms
        .iter()
        .enumerate()
        .map(|(i, built): (usize, &BuiltArm)| {
            SampleStream::permutation(
                &built.arm,
                args.n,
                StreamSeed::new(args.common.seed, i as u64, PurposeTag::Permutation),
            )
        })
        .collect::<amt::Result<_>>()?;
    let m = streams.len();
    let outcome = run_method(method, streams, &names, args.n, &args.common)?;

    let config = ConfigEcho {
        alpha: args.common.alpha,
        delta: (method == MethodArg::Amt).then_some(args.common.delta),
        n: args.n,
        h1: (method == MethodArg::Amt).then_some(args.common.h1),
        gamma: (method == MethodArg::Amt).then_some(args.common.gamma),
        seed: args.common.seed,
        m,
        statistic: Some(match args.statistic {
            Some(StatisticArg::Chi2) => "chi2".into(),
            Some(StatisticArg::Pearson) => "pearson".into(),
            None => "auto".into(),
        }),
        missing_threshold: Some(args.missing_threshold),
        missing_marker: Some(args.missing_marker.clone()),
        smc_s: (method == MethodArg::Smc).then(|| effective_smc_s(&args.common, args.n, m)),
        data: Some(args.data.display().to_string()),
        response: Some(args.response.clone()),
        rows: Some(data.n_rows),
        dropped_columns: Some(data.dropped_columns.clone()),
        ..ConfigEcho::default()
    };
    let report = RunReport {
        method: method.name().to_string(),
        config,
        discoveries: outcome.discoveries,
        totals: Totals {
            total_samples: outcome.total_samples,
            rounds: outcome.rounds,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    };
    let body = match args.common.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    emit(&args.common, body)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = SimSpec {
        m: args.m,
        alt_proportion: args.alt_prop,
        mu_alt: args.mu,
        n: args.n,
        alpha: args.common.alpha,
        delta: args.common.delta,
        reps: args.reps,
        master_seed: args.common.seed,
        h1: args.common.h1.min(args.n),
        gamma: args.common.gamma,
        smc_s: args.common.smc_s,
    };
    let report = match args.experiment {
        ExperimentKind::Reliability => reliability_experiment(&spec)?,
        ExperimentKind::Scaling => scaling_experiment(&args.m_list, &spec)?,
        ExperimentKind::Sweep => {
            let param = match args.param {
                Some(SweepParamArg::Alpha) => SweepParameter::Alpha,
                Some(SweepParamArg::AltProp) => SweepParameter::AltProportion,
                Some(SweepParamArg::Mu) => SweepParameter::Mu,
                None => bail!("--param is required for the sweep experiment"),
            };
            if args.values.is_empty() {
                bail!("--values is required for the sweep experiment");
            }
            sweep_experiment(param, &args.values, &spec)?
        }
    };
    let body = match args.common.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    emit(&args.common, body)
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    if args.methods.is_empty() {
        bail!("--methods must name at least one method");
    }
    let spec = SimSpec {
        m: args.m,
        alt_proportion: args.alt_prop,
        mu_alt: args.mu,
        n: args.n,
        alpha: args.common.alpha,
        delta: args.common.delta,
        reps: 1,
        master_seed: args.common.seed,
        h1: args.common.h1.min(args.n),
        gamma: args.common.gamma,
        smc_s: args.common.smc_s,
    };
    let (p_ideal, _) = gen_ideal_pvalues(&spec, 0)?;
    let rep_master = fold_seed(spec.master_seed, 0);
    let names: Vec<String> = (0..args.m).map(|i| format!("h{i}")).collect();
    let fresh_streams = || -> amt::Result<Vec<SampleStream>> {
        p_ideal
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                SampleStream::bernoulli(
                    p,
                    args.n,
                    StreamSeed::new(rep_master, i as u64, PurposeTag::McSampling),
                )
            })
            .collect()
    };

    let mut reports = Vec::new();
    for &method in &args.methods {
        let started = Instant::now();
        let outcome = run_method(method, fresh_streams()?, &names, args.n, &args.common)?;
        let config = ConfigEcho {
            alpha: args.common.alpha,
            delta: (method == MethodArg::Amt).then_some(args.common.delta),
            n: args.n,
            h1: (method == MethodArg::Amt).then_some(args.common.h1),
            gamma: (method == MethodArg::Amt).then_some(args.common.gamma),
            seed: args.common.seed,
            m: args.m,
            smc_s: (method == MethodArg::Smc)
                .then(|| effective_smc_s(&args.common, args.n, args.m)),
            alt_proportion: Some(args.alt_prop),
            mu: Some(args.mu),
            ..ConfigEcho::default()
        };
        reports.push(RunReport {
            method: method.name().to_string(),
            config,
            discoveries: outcome.discoveries,
            totals: Totals {
                total_samples: outcome.total_samples,
                rounds: outcome.rounds,
                wall_seconds: started.elapsed().as_secs_f64(),
            },
        });
    }
    let body = match args.common.format {
        OutputFormat::Json => serde_json::to_string_pretty(&reports).expect("reports serialize"),
        OutputFormat::Csv => reports_to_csv(&reports),
    };
    emit(&args.common, body)
}
