//! Monte Carlo study of the simple model on simulated piecewise exponential data.
//!
//! Each replication draws `n` uncensored event times from a scenario on the
//! grid `{0, 2, 3, 5}`, fits the simple model and records, per rate, the
//! posterior mean and sd, the HPD interval, whether it covers the true value
//! and the effective sample size.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::Context;
use pwexp::diagnostics::summarize;
use pwexp::mcmc::{run_chains, McmcConfig, RateUpdate};
use pwexp::model::{HyperParams, ModelFamily, ModelSpec, SurvivalDataset};
use pwexp::pex::{PeParams, TimeGrid, TruncationBounds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const SCENARIO_GRID: [f64; 4] = [0.0, 2.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Increasing hazard 0.3, 0.6, 0.8, 1.3.
    S1,
    /// Constant hazard 0.7.
    S2,
    /// Decreasing hazard 1.3, 0.8, 0.6, 0.3.
    S3,
}

impl Scenario {
    pub fn rates(self) -> [f64; 4] {
        match self {
            Scenario::S1 => [0.3, 0.6, 0.8, 1.3],
            Scenario::S2 => [0.7; 4],
            Scenario::S3 => [1.3, 0.8, 0.6, 0.3],
        }
    }

    pub fn params(self) -> PeParams {
        PeParams::from_parts(SCENARIO_GRID.to_vec(), self.rates().to_vec())
            .expect("scenario parameters are valid")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub n_chains: usize,
    pub burn_in: usize,
    pub n_iter: usize,
    pub rate_update: RateUpdate,
    pub mass: f64,
}

impl StudyConfig {
    pub fn new(scenario: Scenario, n: usize, reps: usize, seed: u64) -> Self {
        StudyConfig {
            scenario,
            n,
            reps,
            seed,
            n_chains: 2,
            burn_in: 1000,
            n_iter: 2000,
            rate_update: RateUpdate::Conjugate,
            mass: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub replication: usize,
    pub parameter: String,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub covered: bool,
    pub ess: f64,
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub replication: usize,
    pub rates: Vec<RateResult>,
    /// Sampling phase only.
    pub seconds: f64,
}

/// Replication `r` uses stream `r` of `seed`: the first word seeds the
/// sampler, the rest generates the data.
fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

pub fn simulate_dataset<R: Rng + ?Sized>(
    scenario: Scenario,
    n: usize,
    rng: &mut R,
) -> anyhow::Result<SurvivalDataset> {
    let params = scenario.params();
    let times = (0..n)
        .map(|_| params.sample(&TruncationBounds::none(), rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SurvivalDataset::from_event_times(&times)?)
}

pub fn run_replication(config: &StudyConfig, replication: usize) -> anyhow::Result<Replication> {
    let mut rng = replication_rng(config.seed, replication);
    let mcmc_seed: u64 = rng.random();
    let data = simulate_dataset(config.scenario, config.n, &mut rng)?;
    let spec = ModelSpec::new(
        ModelFamily::Simple,
        TimeGrid::new(SCENARIO_GRID.to_vec())?,
        HyperParams::default(),
    );
    let mcmc = McmcConfig {
        n_chains: config.n_chains,
        burn_in: config.burn_in,
        n_iter: config.n_iter,
        seed: mcmc_seed,
        rate_update: config.rate_update,
        ..McmcConfig::default()
    };
    let start = Instant::now();
    let chains =
        run_chains(&spec, &data, &mcmc).with_context(|| format!("replication {replication}"))?;
    let seconds = start.elapsed().as_secs_f64();
    let summary = summarize(&chains, config.mass)?;
    let rates = config
        .scenario
        .rates()
        .iter()
        .enumerate()
        .map(|(j, &truth)| {
            let s = &summary[j];
            RateResult {
                replication,
                parameter: s.name.clone(),
                truth,
                mean: s.mean,
                sd: s.sd,
                hpd_low: s.hpd_low,
                hpd_high: s.hpd_high,
                covered: s.hpd_low <= truth && truth <= s.hpd_high,
                ess: s.ess.unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(Replication {
        replication,
        rates,
        seconds,
    })
}

/// Runs all replications on `jobs` worker threads, returned in replication order.
pub fn run_study(config: &StudyConfig, jobs: usize) -> anyhow::Result<Vec<Replication>> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(config.reps));
    let workers = jobs.clamp(1, config.reps.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                if r >= config.reps {
                    break;
                }
                let out = run_replication(config, r);
                results.lock().expect("result lock").push((r, out));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock");
    results.sort_by_key(|(r, _)| *r);
    results.into_iter().map(|(_, out)| out).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub parameter: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub mean_sd: f64,
    pub coverage: f64,
    pub mean_ess: f64,
    pub min_ess: f64,
}

pub fn aggregate(reps: &[Replication]) -> Vec<Aggregate> {
    let Some(first) = reps.first() else {
        return Vec::new();
    };
    let k = reps.len() as f64;
    (0..first.rates.len())
        .map(|j| {
            let col = || reps.iter().map(move |r| &r.rates[j]);
            Aggregate {
                parameter: first.rates[j].parameter.clone(),
                truth: first.rates[j].truth,
                mean_estimate: col().map(|r| r.mean).sum::<f64>() / k,
                mean_sd: col().map(|r| r.sd).sum::<f64>() / k,
                coverage: col().filter(|r| r.covered).count() as f64 / k,
                mean_ess: col().map(|r| r.ess).sum::<f64>() / k,
                min_ess: col().map(|r| r.ess).fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

pub fn write_results<W: std::io::Write>(reps: &[Replication], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reps.iter().flat_map(|r| &r.rates) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate<W: std::io::Write>(agg: &[Aggregate], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for a in agg {
        w.serialize(a)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings<W: std::io::Write>(reps: &[Replication], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replication", "seconds"])?;
    for r in reps {
        w.write_record([r.replication.to_string(), r.seconds.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
