//! Bayesian piecewise exponential survival models.
//!
//! Three families share one likelihood. Record `i` of subject `s` with
//! covariates `x_i` has hazard `λ_j · exp(x_iᵀβ) · z_s` on interval `I_j`; the
//! simple family drops covariates and frailties, so its weight is 1.
//!
//! Priors:
//! - [`ModelFamily::Simple`]: `λ_j ~ Ga(a, b)` independently.
//! - [`ModelFamily::FrailtyGammaChain`]: `λ_j | λ_{j−1} ~ Ga(α, α/λ_{j−1})`, `λ_0 = 1`.
//! - [`ModelFamily::FrailtyLogNormalRw`]: `ξ_j = ln λ_j`, `ξ_j | ξ_{j−1} ~ N(ξ_{j−1}, ν)`, `ξ_0 = 0`.
//! - both frailty families: `z_s ~ Ga(η, η)`, `η ~ Ga(φ1, φ2)`, `β_k ~ N(0, σ²_k)`.
//!
//! Right-censored records are handled in one of two ways (see [`CensoringMode`]).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::pex::{PeParams, PexError, TimeGrid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Distribution(#[from] PexError),
    #[error("record {record}: {reason}")]
    InvalidRecord { record: usize, reason: &'static str },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid hyperparameter {0}: must be finite and strictly positive")]
    InvalidHyper(&'static str),
    #[error("invalid parameter state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ModelFamily {
    /// Independent gamma priors on the rates, no covariates, no frailty.
    Simple,
    /// Shared gamma frailty with a gamma chain prior on adjacent rates.
    FrailtyGammaChain,
    /// Shared gamma frailty with a Gaussian random walk on the log-rates.
    FrailtyLogNormalRw,
}

impl ModelFamily {
    pub fn has_frailty(self) -> bool {
        !matches!(self, ModelFamily::Simple)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Simple => "simple",
            ModelFamily::FrailtyGammaChain => "frailty-gamma",
            ModelFamily::FrailtyLogNormalRw => "frailty-lognormal",
        }
    }
}

/// How right-censored records enter the likelihood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CensoringMode {
    /// Data augmentation: each censored record carries an imputed time above its
    /// censoring time and contributes the density at that time.
    #[default]
    Augmented,
    /// Censored records contribute `log S(censor_time)` directly; nothing is imputed.
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperParams {
    /// Shape `a` of the independent rate prior (simple family).
    pub gamma_shape: f64,
    /// Rate `b` of the independent rate prior (simple family).
    pub gamma_rate: f64,
    /// Shape `α` of the gamma chain prior.
    pub chain_shape: f64,
    /// Step variance `ν` of the log-rate random walk.
    pub rw_variance: f64,
    /// `φ1`, `φ2`: shape and rate of the prior on `η`.
    pub eta_shape: f64,
    pub eta_rate: f64,
    /// Prior variance of each regression coefficient, in covariate order.
    pub beta_variance: Vec<f64>,
}

pub const DEFAULT_BETA_VARIANCE: f64 = 1e3;

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma_shape: 0.01,
            gamma_rate: 0.01,
            chain_shape: 0.01,
            rw_variance: 1e4,
            eta_shape: 1e-3,
            eta_rate: 1e-3,
            beta_variance: Vec::new(),
        }
    }
}

impl HyperParams {
    /// Defaults with one `β` prior variance per covariate.
    pub fn for_covariates(n: usize) -> Self {
        HyperParams {
            beta_variance: vec![DEFAULT_BETA_VARIANCE; n],
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        for (name, v) in [
            ("gamma_shape", self.gamma_shape),
            ("gamma_rate", self.gamma_rate),
            ("chain_shape", self.chain_shape),
            ("rw_variance", self.rw_variance),
            ("eta_shape", self.eta_shape),
            ("eta_rate", self.eta_rate),
        ] {
            if !positive(v) {
                return Err(ModelError::InvalidHyper(name));
            }
        }
        if !self.beta_variance.iter().all(|&v| positive(v)) {
            return Err(ModelError::InvalidHyper("beta_variance"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub grid: TimeGrid,
    pub hyper: HyperParams,
    pub censoring: CensoringMode,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, grid: TimeGrid, hyper: HyperParams) -> Self {
        ModelSpec {
            family,
            grid,
            hyper,
            censoring: CensoringMode::default(),
        }
    }

    pub fn with_censoring(mut self, censoring: CensoringMode) -> Self {
        self.censoring = censoring;
        self
    }

    pub fn n_intervals(&self) -> usize {
        self.grid.len()
    }

    /// Checks the hyperparameters and their fit to `data`.
    pub fn validate(&self, data: &SurvivalDataset) -> Result<(), ModelError> {
        self.hyper.validate()?;
        if self.family.has_frailty() && self.hyper.beta_variance.len() != data.n_covariates() {
            return Err(ModelError::InvalidDataset(alloc::format!(
                "{} covariates but {} coefficient prior variances",
                data.n_covariates(),
                self.hyper.beta_variance.len()
            )));
        }
        Ok(())
    }
}

/// Equally spaced grid `a_j = max_time·(j−1)/m`, `j = 1..m`.
pub fn default_grid(max_time: f64, m: usize) -> Result<TimeGrid, ModelError> {
    Ok(TimeGrid::equally_spaced(max_time, m)?)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalRecord {
    /// One-based subject id; records of a subject share its frailty.
    pub subject: usize,
    /// Replicate (e.g. insertion) number within the subject.
    pub replicate: usize,
    /// Event time when `event`, otherwise the right-censoring time.
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl SurvivalRecord {
    pub fn censor_time(&self) -> Option<f64> {
        (!self.event).then_some(self.time)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalDataset {
    covariate_names: Vec<String>,
    records: Vec<SurvivalRecord>,
    n_subjects: usize,
}

impl SurvivalDataset {
    pub fn new(
        covariate_names: Vec<String>,
        records: Vec<SurvivalRecord>,
    ) -> Result<Self, ModelError> {
        if records.is_empty() {
            return Err(ModelError::InvalidDataset("no records".into()));
        }
        let mut n_subjects = 0;
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0) || !r.time.is_finite() {
                return Err(ModelError::InvalidRecord {
                    record: i,
                    reason: "time must be finite and positive",
                });
            }
            if r.covariates.len() != covariate_names.len() {
                return Err(ModelError::InvalidRecord {
                    record: i,
                    reason: "covariate count differs from the header",
                });
            }
            if !r.covariates.iter().all(|x| x.is_finite()) {
                return Err(ModelError::InvalidRecord {
                    record: i,
                    reason: "covariates must be finite",
                });
            }
            if r.subject == 0 {
                return Err(ModelError::InvalidRecord {
                    record: i,
                    reason: "subject ids start at 1",
                });
            }
            n_subjects = n_subjects.max(r.subject);
        }
        let mut seen = vec![false; n_subjects];
        for r in &records {
            seen[r.subject - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(ModelError::InvalidDataset(alloc::format!(
                "subject ids must be contiguous from 1; id {} is missing",
                missing + 1
            )));
        }
        Ok(SurvivalDataset {
            covariate_names,
            records,
            n_subjects,
        })
    }

    /// Fully observed times without covariates, one subject per record.
    pub fn from_event_times(times: &[f64]) -> Result<Self, ModelError> {
        let records = times
            .iter()
            .enumerate()
            .map(|(i, &time)| SurvivalRecord {
                subject: i + 1,
                replicate: 1,
                time,
                event: true,
                covariates: Vec::new(),
            })
            .collect();
        Self::new(Vec::new(), records)
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn n_censored(&self) -> usize {
        self.len() - self.n_events()
    }

    /// Largest observed event time, if any record has an event.
    pub fn max_event_time(&self) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.event)
            .map(|r| r.time)
            .reduce(f64::max)
    }

    pub fn max_time(&self) -> f64 {
        self.records.iter().map(|r| r.time).fold(0.0, f64::max)
    }
}

/// Optional per-chain starting values; anything left `None` takes its default.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialValues {
    pub rates: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub frailty: Option<Vec<f64>>,
    pub eta: Option<f64>,
}

/// Current values of every unknown in a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    /// Baseline rates `λ`. Under the random-walk family these are `exp(ξ)`.
    pub rates: Vec<f64>,
    /// Regression coefficients, in covariate order; empty for the simple family.
    pub beta: Vec<f64>,
    /// Frailty `z_s` per subject; empty for the simple family.
    pub frailty: Vec<f64>,
    /// Frailty precision `η`; `Var(z) = κ = 1/η`.
    pub eta: f64,
    /// Current time per record: the observed time for events, the imputed
    /// time for censored records under augmentation.
    pub times: Vec<f64>,
}

impl ParamState {
    /// Starting state built from prior means (`λ_j = a/b` or the chain anchor
    /// `1`, `β = 0`, `z = 1`, `η = φ1/φ2`) with `inits` overriding.
    ///
    /// Censored records start at their censoring time plus the median of the
    /// residual lifetime under the starting parameters.
    pub fn initial(
        spec: &ModelSpec,
        data: &SurvivalDataset,
        inits: &InitialValues,
    ) -> Result<Self, ModelError> {
        spec.validate(data)?;
        let m = spec.n_intervals();
        let h = &spec.hyper;
        let frailty = spec.family.has_frailty();
        let rate0 = match spec.family {
            ModelFamily::Simple => h.gamma_shape / h.gamma_rate,
            _ => 1.0,
        };
        let mut state = ParamState {
            rates: inits.rates.clone().unwrap_or_else(|| vec![rate0; m]),
            beta: if frailty {
                inits
                    .beta
                    .clone()
                    .unwrap_or_else(|| vec![0.0; data.n_covariates()])
            } else {
                Vec::new()
            },
            frailty: if frailty {
                inits
                    .frailty
                    .clone()
                    .unwrap_or_else(|| vec![1.0; data.n_subjects()])
            } else {
                Vec::new()
            },
            eta: if frailty {
                inits.eta.unwrap_or(h.eta_shape / h.eta_rate)
            } else {
                1.0
            },
            times: data.records.iter().map(|r| r.time).collect(),
        };
        check_state(&state, spec, data)?;
        if spec.censoring == CensoringMode::Augmented {
            let baseline = state.baseline(spec)?;
            for (i, r) in data.records.iter().enumerate() {
                if !r.event {
                    let w = record_weight(&state, spec, data, i);
                    let target = baseline.cum_hazard(r.time)? + core::f64::consts::LN_2 / w;
                    state.times[i] = baseline.inverse_cum_hazard(target)?.max(r.time);
                    if state.times[i] <= r.time {
                        state.times[i] = next_up(r.time);
                    }
                }
            }
        }
        Ok(state)
    }

    pub fn kappa(&self) -> f64 {
        1.0 / self.eta
    }

    pub fn log_rates(&self) -> Vec<f64> {
        self.rates.iter().map(|&r| libm::log(r)).collect()
    }

    /// The baseline distribution `PE(λ, τ)`.
    pub fn baseline(&self, spec: &ModelSpec) -> Result<PeParams, ModelError> {
        Ok(PeParams::new(spec.grid.clone(), self.rates.clone())?)
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// Rejects states with wrong shapes or non-positive / non-finite values.
pub fn check_state(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<(), ModelError> {
    let bad = |msg: String| Err(ModelError::InvalidState(msg));
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if state.rates.len() != spec.n_intervals() {
        return bad(alloc::format!(
            "{} rates for {} intervals",
            state.rates.len(),
            spec.n_intervals()
        ));
    }
    if let Some(j) = state.rates.iter().position(|&r| !positive(r)) {
        return bad(alloc::format!("rate {j} is {}", state.rates[j]));
    }
    if state.times.len() != data.len() {
        return bad("one current time per record is required".into());
    }
    if spec.family.has_frailty() {
        if state.beta.len() != data.n_covariates() || !state.beta.iter().all(|b| b.is_finite()) {
            return bad("coefficients must be finite, one per covariate".into());
        }
        if state.frailty.len() != data.n_subjects() || !state.frailty.iter().all(|&z| positive(z)) {
            return bad("frailties must be positive, one per subject".into());
        }
        if !positive(state.eta) {
            return bad(alloc::format!("eta is {}", state.eta));
        }
    }
    Ok(())
}

/// `xᵀβ` for record `i`; zero for the simple family.
#[inline]
pub fn linear_predictor(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    i: usize,
) -> f64 {
    if !spec.family.has_frailty() {
        return 0.0;
    }
    data.records[i]
        .covariates
        .iter()
        .zip(&state.beta)
        .map(|(x, b)| x * b)
        .sum()
}

/// Multiplier `exp(xᵀβ)·z` applied to the baseline hazard of record `i`.
#[inline]
pub fn record_weight(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    i: usize,
) -> f64 {
    if !spec.family.has_frailty() {
        return 1.0;
    }
    let s = data.records[i].subject - 1;
    libm::exp(linear_predictor(state, spec, data, i)) * state.frailty[s]
}

/// The time at which record `i` enters the likelihood and whether it counts
/// as an event there.
#[inline]
pub(crate) fn effective_record(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    i: usize,
) -> (f64, bool) {
    let r = &data.records[i];
    match spec.censoring {
        CensoringMode::Augmented => (state.times[i], true),
        CensoringMode::Analytic => (r.time, r.event),
    }
}

/// Log-likelihood of the data (priors excluded).
///
/// Under augmentation a censored record whose current time does not exceed
/// its censoring time has likelihood zero.
pub fn log_likelihood(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<f64, ModelError> {
    check_state(state, spec, data)?;
    let baseline = state.baseline(spec)?;
    let mut total = 0.0;
    for i in 0..data.len() {
        let (t, event) = effective_record(state, spec, data, i);
        let r = &data.records[i];
        if spec.censoring == CensoringMode::Augmented && !r.event && !(t > r.time) {
            return Ok(f64::NEG_INFINITY);
        }
        let j = baseline.grid().interval_index(t)?;
        let w = record_weight(state, spec, data, i);
        let cum = baseline.cum_hazard(t)?;
        if event {
            let mut log_haz = libm::log(state.rates[j]);
            if spec.family.has_frailty() {
                log_haz += linear_predictor(state, spec, data, i)
                    + libm::log(state.frailty[r.subject - 1]);
            }
            total += log_haz;
        }
        total -= w * cum;
    }
    Ok(total)
}

fn ln_gamma_density(x: f64, shape: f64, rate: f64) -> f64 {
    shape * libm::log(rate) - libm::lgamma(shape) + (shape - 1.0) * libm::log(x) - rate * x
}

fn ln_normal_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (libm::log(2.0 * core::f64::consts::PI * variance) + d * d / variance)
}

/// Log prior density of the state.
///
/// The density is over `λ` for the gamma families and over `ξ = ln λ` for the
/// random-walk family.
pub fn log_prior(state: &ParamState, spec: &ModelSpec) -> f64 {
    let h = &spec.hyper;
    let mut total = 0.0;
    match spec.family {
        ModelFamily::Simple => {
            for &r in &state.rates {
                total += ln_gamma_density(r, h.gamma_shape, h.gamma_rate);
            }
        }
        ModelFamily::FrailtyGammaChain => {
            let mut prev = 1.0;
            for &r in &state.rates {
                total += ln_gamma_density(r, h.chain_shape, h.chain_shape / prev);
                prev = r;
            }
        }
        ModelFamily::FrailtyLogNormalRw => {
            let mut prev = 0.0;
            for &r in &state.rates {
                let xi = libm::log(r);
                total += ln_normal_density(xi, prev, h.rw_variance);
                prev = xi;
            }
        }
    }
    if spec.family.has_frailty() {
        for &z in &state.frailty {
            total += ln_gamma_density(z, state.eta, state.eta);
        }
        total += ln_gamma_density(state.eta, h.eta_shape, h.eta_rate);
        for (b, &v) in state.beta.iter().zip(&h.beta_variance) {
            total += ln_normal_density(*b, 0.0, v);
        }
    }
    total
}

/// Unnormalized log posterior: likelihood plus every prior term of the family.
pub fn joint_log_density(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<f64, ModelError> {
    Ok(log_likelihood(state, spec, data)? + log_prior(state, spec))
}

/// Per-interval event counts `d_j` and weighted time at risk `R_j`.
///
/// The likelihood as a function of the rates factorizes as
/// `Π_j λ_j^{d_j} exp(−λ_j R_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub events: Vec<u64>,
    pub exposure: Vec<f64>,
}

pub fn sufficient_stats(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> SufficientStats {
    let grid = &spec.grid;
    let m = grid.len();
    let mut events = vec![0u64; m];
    let mut exposure = vec![0.0; m];
    for i in 0..data.len() {
        let (t, event) = effective_record(state, spec, data, i);
        let w = record_weight(state, spec, data, i);
        let last = grid.index_unchecked(t);
        if event {
            events[last] += 1;
        }
        for j in 0..=last {
            exposure[j] += w * grid.overlap(t, j);
        }
    }
    SufficientStats { events, exposure }
}

/// Log-likelihood written through the Poisson zeros-trick.
///
/// Each record is split over the intervals it crosses: `d_ij` flags the event
/// interval and `μ_ij = overlap_ij · λ_j · weight_i`, and the record adds
/// `Σ_j [d_ij log μ_ij − μ_ij]`. The positivity offset a BUGS program adds to
/// the Poisson mean cancels in every comparison and is left out. The result
/// differs from [`log_likelihood`] by `Σ_events log(t − a_J)`, which depends on
/// the data only.
pub fn zeros_trick_loglik(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<f64, ModelError> {
    check_state(state, spec, data)?;
    let grid = &spec.grid;
    let mut total = 0.0;
    for i in 0..data.len() {
        let (t, event) = effective_record(state, spec, data, i);
        let event_interval = grid.interval_index(t)?;
        let w = record_weight(state, spec, data, i);
        let mut record = 0.0;
        for j in 0..grid.len() {
            let d = event && j == event_interval;
            let mu = grid.overlap(t, j) * state.rates[j] * w;
            if d {
                record += libm::log(mu);
            }
            record -= mu;
        }
        total += record;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn s1_grid() -> TimeGrid {
        TimeGrid::new(vec![0.0, 2.0, 3.0, 5.0]).unwrap()
    }

    fn simple_spec(grid: TimeGrid) -> ModelSpec {
        ModelSpec::new(ModelFamily::Simple, grid, HyperParams::default())
    }

    #[test]
    fn default_grid_matches_the_kidney_layout() {
        let g = default_grid(562.0, 10).unwrap();
        let expected = [
            0.0, 56.2, 112.4, 168.6, 224.8, 281.0, 337.2, 393.4, 449.6, 505.8,
        ];
        for (a, b) in g.cut_points().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(default_grid(5.0, 1).unwrap().cut_points(), &[0.0]);
        assert_eq!(
            default_grid(10.0, 4).unwrap().cut_points(),
            &[0.0, 2.5, 5.0, 7.5]
        );
        assert!(default_grid(10.0, 0).is_err());
        assert!(default_grid(-1.0, 3).is_err());
    }

    #[test]
    fn sufficient_stats_single_records() {
        let spec = simple_spec(s1_grid());
        let data = SurvivalDataset::from_event_times(&[1.5]).unwrap();
        let state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        let st = sufficient_stats(&state, &spec, &data);
        assert_eq!(st.events, vec![1, 0, 0, 0]);
        assert_eq!(st.exposure, vec![1.5, 0.0, 0.0, 0.0]);

        let data = SurvivalDataset::from_event_times(&[3.483]).unwrap();
        let state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        let st = sufficient_stats(&state, &spec, &data);
        assert_eq!(st.events, vec![0, 0, 1, 0]);
        assert_eq!(st.exposure[..2], [2.0, 1.0]);
        assert!((st.exposure[2] - 0.483).abs() < 1e-12);
        assert!((st.exposure.iter().sum::<f64>() - 3.483).abs() < 1e-12);
    }

    #[test]
    fn simple_single_record_likelihood_is_exponential() {
        let c = 0.7;
        let t = 1.3;
        let spec = simple_spec(TimeGrid::new(vec![0.0]).unwrap());
        let data = SurvivalDataset::from_event_times(&[t]).unwrap();
        let mut state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        state.rates = vec![c];
        let ll = log_likelihood(&state, &spec, &data).unwrap();
        assert!((ll - (libm::log(c) - c * t)).abs() < 1e-14);
        let prior =
            0.01 * libm::log(0.01) - libm::lgamma(0.01) + (0.01 - 1.0) * libm::log(c) - 0.01 * c;
        let joint = joint_log_density(&state, &spec, &data).unwrap();
        assert!((joint - (ll + prior)).abs() < 1e-12);
    }

    fn two_subject_data() -> SurvivalDataset {
        let rec = |subject, replicate, time, event, x: f64| SurvivalRecord {
            subject,
            replicate,
            time,
            event,
            covariates: vec![x],
        };
        SurvivalDataset::new(
            vec!["x".to_string()],
            vec![
                rec(1, 1, 1.5, true, 0.0),
                rec(1, 2, 4.0, false, 0.0),
                rec(2, 1, 3.483, true, 1.0),
                rec(2, 2, 6.0, true, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_frailty_and_zero_beta_reduce_to_the_simple_likelihood() {
        let data = two_subject_data();
        let frail = ModelSpec::new(
            ModelFamily::FrailtyGammaChain,
            s1_grid(),
            HyperParams::for_covariates(1),
        )
        .with_censoring(CensoringMode::Analytic);
        let simple = simple_spec(s1_grid()).with_censoring(CensoringMode::Analytic);
        let mut fs = ParamState::initial(&frail, &data, &InitialValues::default()).unwrap();
        let mut ss = ParamState::initial(&simple, &data, &InitialValues::default()).unwrap();
        fs.rates = vec![0.3, 0.6, 0.8, 1.3];
        ss.rates = fs.rates.clone();
        let a = log_likelihood(&fs, &frail, &data).unwrap();
        let b = log_likelihood(&ss, &simple, &data).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn censored_record_zeros_trick_is_log_survival() {
        let rec = SurvivalRecord {
            subject: 1,
            replicate: 1,
            time: 3.483,
            event: false,
            covariates: vec![],
        };
        let data = SurvivalDataset::new(vec![], vec![rec]).unwrap();
        let spec = simple_spec(s1_grid()).with_censoring(CensoringMode::Analytic);
        let mut state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        state.rates = vec![0.3, 0.6, 0.8, 1.3];
        let z = zeros_trick_loglik(&state, &spec, &data).unwrap();
        let direct = log_likelihood(&state, &spec, &data).unwrap();
        assert!((z + 1.5864).abs() < 1e-12);
        assert_eq!(z, direct);
    }

    #[test]
    fn event_record_zeros_trick_offset() {
        let spec = simple_spec(s1_grid());
        let data = SurvivalDataset::from_event_times(&[3.483]).unwrap();
        let mut state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        for rates in [[0.3, 0.6, 0.8, 1.3], [2.0, 0.1, 5.0, 0.2]] {
            state.rates = rates.to_vec();
            let direct = log_likelihood(&state, &spec, &data).unwrap();
            let z = zeros_trick_loglik(&state, &spec, &data).unwrap();
            // the Poisson term carries log(le) = log(t − a_J) on top of the density
            assert!((direct - z + libm::log(3.483 - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn augmented_imputed_times_start_above_censoring() {
        let data = two_subject_data();
        let spec = ModelSpec::new(
            ModelFamily::FrailtyLogNormalRw,
            s1_grid(),
            HyperParams::for_covariates(1),
        );
        let state = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        assert!(state.times[1] > 4.0);
        // residual median under unit rate is ln 2
        assert!((state.times[1] - 4.0 - core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(state.times[0], 1.5);
        let mut broken = state.clone();
        broken.times[1] = 3.0;
        assert_eq!(
            log_likelihood(&broken, &spec, &data).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn invalid_states_are_rejected() {
        let data = two_subject_data();
        let spec = ModelSpec::new(
            ModelFamily::FrailtyGammaChain,
            s1_grid(),
            HyperParams::for_covariates(1),
        );
        let good = ParamState::initial(&spec, &data, &InitialValues::default()).unwrap();
        let mut s = good.clone();
        s.rates[2] = 0.0;
        assert!(joint_log_density(&s, &spec, &data).is_err());
        let mut s = good.clone();
        s.frailty[0] = -1.0;
        assert!(joint_log_density(&s, &spec, &data).is_err());
        let mut s = good.clone();
        s.eta = f64::NAN;
        assert!(joint_log_density(&s, &spec, &data).is_err());
        let mut s = good;
        s.beta.clear();
        assert!(joint_log_density(&s, &spec, &data).is_err());
    }

    #[test]
    fn dataset_validation() {
        let rec = |subject, time| SurvivalRecord {
            subject,
            replicate: 1,
            time,
            event: true,
            covariates: vec![],
        };
        assert!(SurvivalDataset::new(vec![], vec![rec(1, 1.0), rec(3, 2.0)]).is_err());
        assert!(SurvivalDataset::new(vec![], vec![rec(1, 0.0)]).is_err());
        assert!(SurvivalDataset::new(vec![], vec![rec(0, 1.0)]).is_err());
        assert!(SurvivalDataset::new(vec!["x".to_string()], vec![rec(1, 1.0)]).is_err());
        assert!(SurvivalDataset::new(vec![], vec![]).is_err());
        let d = SurvivalDataset::new(vec![], vec![rec(2, 1.0), rec(1, 2.0)]).unwrap();
        assert_eq!(d.n_subjects(), 2);
    }

    #[test]
    fn hyperparameters_must_be_positive() {
        let data = two_subject_data();
        let mut hyper = HyperParams::for_covariates(1);
        hyper.rw_variance = 0.0;
        let spec = ModelSpec::new(ModelFamily::FrailtyLogNormalRw, s1_grid(), hyper);
        assert_eq!(
            spec.validate(&data),
            Err(ModelError::InvalidHyper("rw_variance"))
        );
        let spec = ModelSpec::new(
            ModelFamily::FrailtyLogNormalRw,
            s1_grid(),
            HyperParams::default(),
        );
        assert!(spec.validate(&data).is_err());
    }
}
