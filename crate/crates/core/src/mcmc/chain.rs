use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sweep, McmcError, RateUpdate, SliceSampler};
use crate::model::{
    log_likelihood, InitialValues, ModelFamily, ModelSpec, ParamState, SurvivalDataset,
};

/// Generator used by every chain. ChaCha8 is portable, so draws are identical
/// across platforms for a given seed.
pub type ChainRng = ChaCha8Rng;

/// Chain `chain_id` of a run seeded with `seed` draws from its own ChaCha stream.
pub fn chain_rng(seed: u64, chain_id: usize) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_id as u64);
    rng
}

/// Derived quantities of the baseline distribution recorded at every retained
/// iteration, in addition to the model parameters.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monitors {
    pub hazard_at: Vec<f64>,
    pub cum_hazard_at: Vec<f64>,
    pub survival_at: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub frailties: bool,
    pub log_likelihood: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McmcConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    pub n_iter: usize,
    pub thin: usize,
    /// Base seed; chain `c` uses stream `c` of this seed.
    pub seed: u64,
    pub slice: SliceSampler,
    pub rate_update: RateUpdate,
    pub monitors: Monitors,
    /// Starting values per chain; missing entries use defaults.
    pub inits: Vec<InitialValues>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_chains: 2,
            burn_in: 1000,
            n_iter: 2000,
            thin: 1,
            seed: 1,
            slice: SliceSampler::default(),
            rate_update: RateUpdate::default(),
            monitors: Monitors::default(),
            inits: Vec::new(),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<(), McmcError> {
        if self.n_chains == 0 {
            return Err(McmcError::Config("at least one chain is required"));
        }
        if self.n_iter == 0 {
            return Err(McmcError::Config("n_iter must be at least 1"));
        }
        if self.thin == 0 {
            return Err(McmcError::Config("thin must be at least 1"));
        }
        SliceSampler::new(self.slice.width, self.slice.max_steps)?;
        if self
            .monitors
            .quantiles
            .iter()
            .any(|p| !(*p > 0.0 && *p < 1.0))
        {
            return Err(McmcError::Config(
                "monitored quantile probabilities must lie in (0, 1)",
            ));
        }
        let times = self
            .monitors
            .hazard_at
            .iter()
            .chain(&self.monitors.cum_hazard_at)
            .chain(&self.monitors.survival_at);
        if times.clone().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(McmcError::Config(
                "monitored times must be positive and finite",
            ));
        }
        Ok(())
    }

    /// Number of draws kept per chain: `floor(n_iter / thin)`.
    pub fn retained(&self) -> usize {
        self.n_iter / self.thin
    }
}

/// Retained draws of one chain, one column per monitored scalar.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainStore {
    pub chain_id: usize,
    pub seed: u64,
    pub family: ModelFamily,
    pub burn_in: usize,
    pub n_iter: usize,
    pub thin: usize,
    /// Wall-clock seconds spent sampling; filled in by callers that have a clock.
    pub wall_time_secs: Option<f64>,
    names: Vec<String>,
    draws: Vec<Vec<f64>>,
}

impl ChainStore {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.draws[i].as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.draws.iter().map(Vec::as_slice))
    }

    pub fn n_draws(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    /// Assembles a store from already collected columns.
    pub fn from_columns(
        chain_id: usize,
        seed: u64,
        family: ModelFamily,
        columns: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, McmcError> {
        let len = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != len) {
            return Err(McmcError::Config("all columns must have the same length"));
        }
        let (names, draws) = columns.into_iter().unzip();
        Ok(ChainStore {
            chain_id,
            seed,
            family,
            burn_in: 0,
            n_iter: len,
            thin: 1,
            wall_time_secs: None,
            names,
            draws,
        })
    }
}

fn monitor_names(spec: &ModelSpec, data: &SurvivalDataset, monitors: &Monitors) -> Vec<String> {
    let mut names: Vec<String> = (1..=spec.n_intervals())
        .map(|j| format!("lambda[{j}]"))
        .collect();
    if spec.family.has_frailty() {
        names.extend(data.covariate_names().iter().map(|c| format!("beta_{c}")));
        names.push("eta".into());
        names.push("kappa".into());
        if monitors.frailties {
            names.extend((1..=data.n_subjects()).map(|s| format!("z[{s}]")));
        }
    }
    names.extend(monitors.hazard_at.iter().map(|t| format!("h[{t}]")));
    names.extend(monitors.cum_hazard_at.iter().map(|t| format!("H[{t}]")));
    names.extend(monitors.survival_at.iter().map(|t| format!("S[{t}]")));
    names.extend(monitors.quantiles.iter().map(|p| format!("q[{p}]")));
    if monitors.log_likelihood {
        names.push("loglik".into());
    }
    names
}

fn record(
    draws: &mut [Vec<f64>],
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    monitors: &Monitors,
) -> Result<(), McmcError> {
    let mut values = draws.iter_mut();
    let mut push = |v: f64| values.next().expect("column count").push(v);
    state.rates.iter().for_each(|&r| push(r));
    if spec.family.has_frailty() {
        state.beta.iter().for_each(|&b| push(b));
        push(state.eta);
        push(state.kappa());
        if monitors.frailties {
            state.frailty.iter().for_each(|&z| push(z));
        }
    }
    let has_derived = !(monitors.hazard_at.is_empty()
        && monitors.cum_hazard_at.is_empty()
        && monitors.survival_at.is_empty()
        && monitors.quantiles.is_empty());
    if has_derived {
        let baseline = state.baseline(spec)?;
        for &t in &monitors.hazard_at {
            push(baseline.hazard(t)?);
        }
        for &t in &monitors.cum_hazard_at {
            push(baseline.cum_hazard(t)?);
        }
        for &t in &monitors.survival_at {
            push(baseline.survival(t)?);
        }
        for &p in &monitors.quantiles {
            push(baseline.quantile(p)?);
        }
    }
    if monitors.log_likelihood {
        push(log_likelihood(state, spec, data)?);
    }
    Ok(())
}

/// Runs one chain: `burn_in` discarded sweeps, then `n_iter` sweeps of which
/// every `thin`-th is kept.
///
/// `chain_id` is zero-based and selects both the generator stream and the
/// entry of `config.inits`.
pub fn run_chain(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    config: &McmcConfig,
    chain_id: usize,
) -> Result<ChainStore, McmcError> {
    config.validate()?;
    let inits = config.inits.get(chain_id).cloned().unwrap_or_default();
    let mut state = ParamState::initial(spec, data, &inits)?;
    let mut rng = chain_rng(config.seed, chain_id);

    let names = monitor_names(spec, data, &config.monitors);
    let retained = config.retained();
    let mut draws: Vec<Vec<f64>> = names.iter().map(|_| Vec::with_capacity(retained)).collect();

    for iteration in 1..=config.burn_in + config.n_iter {
        sweep(
            &mut state,
            spec,
            data,
            &config.slice,
            config.rate_update,
            &mut rng,
        )
        .map_err(|e| McmcError::Update {
            iteration,
            source: Box::new(e),
        })?;
        if iteration > config.burn_in && (iteration - config.burn_in).is_multiple_of(config.thin) {
            record(&mut draws, &state, spec, data, &config.monitors)?;
        }
    }

    Ok(ChainStore {
        chain_id,
        seed: config.seed,
        family: spec.family,
        burn_in: config.burn_in,
        n_iter: config.n_iter,
        thin: config.thin,
        wall_time_secs: None,
        names,
        draws,
    })
}

/// Runs `config.n_chains` chains one after another.
pub fn run_chains(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    config: &McmcConfig,
) -> Result<Vec<ChainStore>, McmcError> {
    (0..config.n_chains)
        .map(|c| run_chain(spec, data, config, c))
        .collect()
}
