//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pwexp::mcmc::{McmcConfig, Monitors, RateUpdate};
use pwexp::model::{
    default_grid, CensoringMode, HyperParams, ModelFamily, ModelSpec, SurvivalDataset,
};
use pwexp::pex::{validate_params, PeParams, TimeGrid, TruncationBounds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::output::{write_fit_outputs, RunManifest};
use crate::simulate::{self, Scenario, StudyConfig};
use crate::{data, fit};

/// Bad input: exit code 2. Any other error exits with 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationError(pub String);

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "pwexp",
    version,
    about = "Piecewise exponential survival toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate, invert or sample a piecewise exponential distribution.
    Dist {
        #[command(subcommand)]
        mode: DistMode,
    },
    /// Fit a survival model by MCMC.
    Fit(FitArgs),
    /// Monte Carlo study of the simple model on simulated data.
    Simulate(SimulateArgs),
    /// Print the bundled catheter infection data as CSV.
    Kidney,
}

#[derive(Debug, Args)]
pub struct DistParams {
    /// Cut points, starting at 0.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub grid: Vec<f64>,
    /// One hazard rate per cut point.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub rates: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum DistMode {
    /// pdf, cdf, survival, hazard and cumulative hazard at each t.
    Eval {
        #[command(flatten)]
        params: DistParams,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        t: Vec<f64>,
    },
    /// Quantiles at each probability p.
    Quantile {
        #[command(flatten)]
        params: DistParams,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
    /// n random draws, one per line, optionally truncated to (lower, upper].
    Sample {
        #[command(flatten)]
        params: DistParams,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, allow_negative_numbers = true)]
        lower: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        upper: Option<f64>,
        /// Write draws to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Simple,
    FrailtyGamma,
    FrailtyLognormal,
}

impl From<ModelArg> for ModelFamily {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Simple => ModelFamily::Simple,
            ModelArg::FrailtyGamma => ModelFamily::FrailtyGammaChain,
            ModelArg::FrailtyLognormal => ModelFamily::FrailtyLogNormalRw,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CensoringArg {
    Augmented,
    Analytic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RateUpdateArg {
    Conjugate,
    Slice,
}

impl From<RateUpdateArg> for RateUpdate {
    fn from(r: RateUpdateArg) -> Self {
        match r {
            RateUpdateArg::Conjugate => RateUpdate::Conjugate,
            RateUpdateArg::Slice => RateUpdate::Slice,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Survival data CSV: subject,replicate,time,status,covariates...
    #[arg(long, conflicts_with = "kidney", required_unless_present = "kidney")]
    pub data: Option<PathBuf>,
    /// Use the bundled catheter infection data.
    #[arg(long)]
    pub kidney: bool,
    /// Number of intervals for an equally spaced grid.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// `equal` (m intervals up to the largest event time) or a comma-separated list of cut points.
    #[arg(long, default_value = "equal")]
    pub grid: String,
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "augmented")]
    pub censoring: CensoringArg,
    /// Update scheme for the rates of the simple model.
    #[arg(long, value_enum, default_value = "conjugate")]
    pub rate_update: RateUpdateArg,
    /// Posterior mass of the HPD intervals.
    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,
    /// Also record every subject's frailty.
    #[arg(long)]
    pub monitor_frailties: bool,
    /// Also record the log-likelihood.
    #[arg(long)]
    pub monitor_loglik: bool,
    #[arg(long, default_value = "pwexp-fit")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "conjugate")]
    pub rate_update: RateUpdateArg,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "pwexp-sim")]
    pub out: PathBuf,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Dist { mode } => run_dist(mode, stdout),
        Command::Fit(args) => run_fit(args, stdout),
        Command::Simulate(args) => run_simulate(args, stdout),
        Command::Kidney => Ok(stdout.write_all(data::kidney_csv().as_bytes())?),
    }
}

/// Ten decimals with trailing zeros dropped.
fn fmt_value(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn build_params(params: &DistParams) -> anyhow::Result<PeParams> {
    if let Err(violations) = validate_params(&params.grid, &params.rates) {
        let list: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
        return Err(invalid(format!(
            "invalid distribution parameters:\n{}",
            list.join("\n")
        )));
    }
    Ok(PeParams::from_parts(
        params.grid.clone(),
        params.rates.clone(),
    )?)
}

fn run_dist(mode: DistMode, out: &mut dyn Write) -> anyhow::Result<()> {
    match mode {
        DistMode::Eval { params, t } => {
            let pe = build_params(&params)?;
            for (k, &t) in t.iter().enumerate() {
                let bad = |e| invalid(format!("t = {t}: {e}"));
                let rows = [
                    ("t", t),
                    ("pdf", pe.density(t).map_err(bad)?),
                    ("cdf", pe.cdf(t).map_err(bad)?),
                    ("survival", pe.survival(t).map_err(bad)?),
                    ("hazard", pe.hazard(t).map_err(bad)?),
                    ("cum-hazard", pe.cum_hazard(t).map_err(bad)?),
                ];
                if k > 0 {
                    writeln!(out)?;
                }
                for (name, v) in rows {
                    writeln!(out, "{name:<10} {}", fmt_value(v))?;
                }
            }
        }
        DistMode::Quantile { params, p } => {
            let pe = build_params(&params)?;
            for &p in &p {
                let q = pe
                    .quantile(p)
                    .map_err(|e| invalid(format!("p = {p}: {e}")))?;
                writeln!(out, "{} {}", fmt_value(p), fmt_value(q))?;
            }
        }
        DistMode::Sample {
            params,
            n,
            seed,
            lower,
            upper,
            out: path,
        } => {
            let pe = build_params(&params)?;
            let bounds = TruncationBounds::new(lower, upper).map_err(|e| invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut text = String::new();
            for _ in 0..n {
                let x = pe.sample(&bounds, &mut rng)?;
                text.push_str(&x.to_string());
                text.push('\n');
            }
            match path {
                Some(p) => {
                    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn fit_grid(args: &FitArgs, data: &SurvivalDataset) -> anyhow::Result<TimeGrid> {
    if args.grid == "equal" {
        if args.m == 0 {
            return Err(invalid("--m must be at least 1"));
        }
        let span = data.max_event_time().unwrap_or_else(|| data.max_time());
        return default_grid(span, args.m).map_err(|e| invalid(e.to_string()));
    }
    let cuts = args
        .grid
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| {
            invalid(format!(
                "--grid must be `equal` or a list of numbers, got {:?}",
                args.grid
            ))
        })?;
    TimeGrid::new(cuts).map_err(|e| invalid(e.to_string()))
}

/// Builds the model and sampler configuration from the flags; every error here is a validation error.
pub fn fit_setup(args: &FitArgs) -> anyhow::Result<(SurvivalDataset, ModelSpec, McmcConfig)> {
    let data = match &args.data {
        Some(path) => data::read_dataset_file(path).map_err(|e| match e {
            data::DataError::Io(io) => {
                anyhow::Error::new(io).context(format!("reading {}", path.display()))
            }
            other => invalid(format!("{}: {other}", path.display())),
        })?,
        None => data::kidney(),
    };
    let family = ModelFamily::from(args.model);
    let censoring = match args.censoring {
        CensoringArg::Augmented => CensoringMode::Augmented,
        CensoringArg::Analytic => CensoringMode::Analytic,
    };
    let hyper = if family.has_frailty() {
        HyperParams::for_covariates(data.n_covariates())
    } else {
        HyperParams::default()
    };
    let spec = ModelSpec::new(family, fit_grid(args, &data)?, hyper).with_censoring(censoring);
    spec.validate(&data).map_err(|e| invalid(e.to_string()))?;
    if !(args.mass > 0.0 && args.mass < 1.0) {
        return Err(invalid("--mass must lie in (0, 1)"));
    }
    let config = McmcConfig {
        n_chains: args.chains,
        burn_in: args.burnin,
        n_iter: args.iters,
        thin: args.thin,
        seed: args.seed,
        rate_update: args.rate_update.into(),
        monitors: Monitors {
            frailties: args.monitor_frailties,
            log_likelihood: args.monitor_loglik,
            ..Monitors::default()
        },
        ..McmcConfig::default()
    };
    config.validate().map_err(|e| invalid(e.to_string()))?;
    if config.retained() < 10 {
        return Err(invalid(
            "need at least 10 retained draws per chain (iters / thin)",
        ));
    }
    Ok((data, spec, config))
}

fn run_fit(args: FitArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let (data, spec, config) = fit_setup(&args)?;
    let result = fit::fit(&spec, &data, &config, args.mass)?;
    let source = match &args.data {
        Some(p) => p.display().to_string(),
        None => "bundled:kidney".into(),
    };
    let manifest = RunManifest::new(
        "fit",
        json!({
            "data": source,
            "records": data.len(),
            "subjects": data.n_subjects(),
            "model": spec,
            "mcmc": config,
            "hpd_mass": args.mass,
        }),
    );
    let timings = json!({
        "manifest": crate::output::MANIFEST_FILE,
        "sampling_secs": result.sampling_secs,
        "chain_secs": result.chains.iter().map(|c| c.wall_time_secs).collect::<Vec<_>>(),
    });
    write_fit_outputs(
        &args.out,
        manifest,
        &result.chains,
        &result.summary,
        args.mass,
        &timings,
    )?;
    out.write_all(crate::output::summary_table(&result.summary, args.mass).as_bytes())?;
    Ok(())
}

fn run_simulate(args: SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if args.n == 0 || args.reps == 0 {
        bail!(ValidationError("--n and --reps must be at least 1".into()));
    }
    if args.iters < 100 {
        bail!(ValidationError(
            "--iters must be at least 100 for effective sample sizes".into()
        ));
    }
    if args.chains == 0 {
        bail!(ValidationError("--chains must be at least 1".into()));
    }
    let config = StudyConfig {
        n_chains: args.chains,
        burn_in: args.burnin,
        n_iter: args.iters,
        rate_update: args.rate_update.into(),
        ..StudyConfig::new(args.scenario, args.n, args.reps, args.seed)
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let start = std::time::Instant::now();
    let reps = simulate::run_study(&config, jobs)?;
    let total_secs = start.elapsed().as_secs_f64();
    let agg = simulate::aggregate(&reps);

    let dir = &args.out;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    simulate::write_results(&reps, std::fs::File::create(dir.join("results.csv"))?)?;
    simulate::write_aggregate(&agg, std::fs::File::create(dir.join("aggregate.csv"))?)?;
    simulate::write_timings(&reps, std::fs::File::create(dir.join("timings.csv"))?)?;
    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "study": config,
            "grid": simulate::SCENARIO_GRID,
            "rates": config.scenario.rates(),
            "seed_scheme": "replication r uses ChaCha8 stream r of the seed; its first u64 seeds the chains",
            "total_secs_file": "timings.csv",
        }),
    );
    manifest.files = vec!["results.csv".into(), "aggregate.csv".into()];
    manifest.timings_file = "timings.csv".into();
    crate::output::write_json(&dir.join(crate::output::MANIFEST_FILE), &manifest)?;

    writeln!(
        out,
        "scenario {:?}, n = {}, {} replications",
        config.scenario, config.n, config.reps
    )?;
    writeln!(
        out,
        "{:<10} {:>6} {:>10} {:>10} {:>9} {:>9}",
        "parameter", "truth", "mean", "mean sd", "coverage", "mean ESS"
    )?;
    for a in &agg {
        writeln!(
            out,
            "{:<10} {:>6} {:>10.4} {:>10.4} {:>9.2} {:>9.1}",
            a.parameter, a.truth, a.mean_estimate, a.mean_sd, a.coverage, a.mean_ess
        )?;
    }
    writeln!(
        out,
        "sampling time: {total_secs:.2} s (per replication in timings.csv)"
    )?;
    Ok(())
}
