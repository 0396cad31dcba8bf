//! Gibbs updates for each block of [`ParamState`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{McmcError, SliceSampler};
use crate::model::{
    check_state, effective_record, linear_predictor, record_weight, sufficient_stats,
    CensoringMode, ModelFamily, ModelSpec, ParamState, SurvivalDataset,
};
use crate::pex::{PeParams, TruncationBounds};

/// A gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    /// One draw, floored at the smallest positive normal so that tiny shapes
    /// never produce an exact zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, McmcError> {
        let dist =
            Gamma::new(self.shape, 1.0 / self.rate).map_err(|_| McmcError::InvalidConditional {
                shape: self.shape,
                rate: self.rate,
            })?;
        Ok(dist.sample(rng).max(f64::MIN_POSITIVE))
    }
}

/// Full conditionals `Ga(a + d_j, b + R_j)` of the rates in the simple family.
pub fn rate_full_conditionals(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<Vec<GammaParams>, McmcError> {
    if spec.family != ModelFamily::Simple {
        return Err(McmcError::WrongFamily(
            "conjugate rate updates need the simple family",
        ));
    }
    let stats = sufficient_stats(state, spec, data);
    Ok(stats
        .events
        .iter()
        .zip(&stats.exposure)
        .map(|(&d, &r)| GammaParams {
            shape: spec.hyper.gamma_shape + d as f64,
            rate: spec.hyper.gamma_rate + r,
        })
        .collect())
}

/// Exact Gibbs draw of every rate (simple family).
pub fn update_rates_conjugate<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    rng: &mut R,
) -> Result<(), McmcError> {
    let conditionals = rate_full_conditionals(state, spec, data)?;
    for (rate, cond) in state.rates.iter_mut().zip(conditionals) {
        *rate = cond.sample(rng)?;
    }
    Ok(())
}

/// Slice-sampled rate updates, one interval at a time.
///
/// The simple and gamma-chain families move `ln λ_j`; the random-walk family
/// moves `ξ_j` directly.
pub fn update_rates_slice<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    slice: &SliceSampler,
    rng: &mut R,
) -> Result<(), McmcError> {
    let stats = sufficient_stats(state, spec, data);
    let m = state.rates.len();
    let h = &spec.hyper;
    for j in 0..m {
        let d = stats.events[j] as f64;
        let exposure = stats.exposure[j];
        match spec.family {
            ModelFamily::Simple => {
                let (a, b) = (h.gamma_shape, h.gamma_rate);
                state.rates[j] = slice.sample_positive(
                    state.rates[j],
                    |lam| (a - 1.0 + d) * libm::log(lam) - (b + exposure) * lam,
                    rng,
                )?;
            }
            ModelFamily::FrailtyGammaChain => {
                let alpha = h.chain_shape;
                let prev = if j == 0 { 1.0 } else { state.rates[j - 1] };
                let next = state.rates.get(j + 1).copied();
                state.rates[j] = slice.sample_positive(
                    state.rates[j],
                    |lam| {
                        let ln = libm::log(lam);
                        let mut f = (alpha - 1.0 + d) * ln - (exposure + alpha / prev) * lam;
                        if let Some(next) = next {
                            f -= alpha * ln + alpha * next / lam;
                        }
                        f
                    },
                    rng,
                )?;
            }
            ModelFamily::FrailtyLogNormalRw => {
                let nu = h.rw_variance;
                let prev = if j == 0 {
                    0.0
                } else {
                    libm::log(state.rates[j - 1])
                };
                let next = state.rates.get(j + 1).map(|&r| libm::log(r));
                let xi = slice.sample(
                    libm::log(state.rates[j]),
                    |xi| {
                        let lam = libm::exp(xi);
                        if !(lam > 0.0 && lam.is_finite()) {
                            return f64::NEG_INFINITY;
                        }
                        let mut f =
                            d * xi - lam * exposure - (xi - prev) * (xi - prev) / (2.0 * nu);
                        if let Some(next) = next {
                            f -= (next - xi) * (next - xi) / (2.0 * nu);
                        }
                        f
                    },
                    rng,
                )?;
                state.rates[j] = libm::exp(xi);
            }
        }
    }
    Ok(())
}

/// Baseline cumulative hazard `H_0(t_i)` at each record's effective time.
fn baseline_cum_hazards(
    baseline: &PeParams,
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<Vec<f64>, McmcError> {
    (0..data.len())
        .map(|i| {
            let (t, _) = effective_record(state, spec, data, i);
            Ok(baseline.cum_hazard(t)?)
        })
        .collect()
}

/// Full conditionals `Ga(η + d_s, η + Σ_k exp(x_skᵀβ) H_0(t_sk))` of the frailties.
pub fn frailty_full_conditionals(
    state: &ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
) -> Result<Vec<GammaParams>, McmcError> {
    if !spec.family.has_frailty() {
        return Err(McmcError::WrongFamily(
            "frailty updates need a frailty family",
        ));
    }
    let baseline = state.baseline(spec)?;
    let cum = baseline_cum_hazards(&baseline, state, spec, data)?;
    let mut out = vec![
        GammaParams {
            shape: state.eta,
            rate: state.eta,
        };
        data.n_subjects()
    ];
    for (i, r) in data.records().iter().enumerate() {
        let (_, event) = effective_record(state, spec, data, i);
        let g = &mut out[r.subject - 1];
        if event {
            g.shape += 1.0;
        }
        g.rate += libm::exp(linear_predictor(state, spec, data, i)) * cum[i];
    }
    Ok(out)
}

pub fn update_frailties<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    rng: &mut R,
) -> Result<(), McmcError> {
    let conditionals = frailty_full_conditionals(state, spec, data)?;
    for (z, cond) in state.frailty.iter_mut().zip(conditionals) {
        *z = cond.sample(rng)?;
    }
    Ok(())
}

/// Slice update of the frailty precision `η` on the log scale.
pub fn update_eta<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    slice: &SliceSampler,
    rng: &mut R,
) -> Result<(), McmcError> {
    let n = state.frailty.len() as f64;
    let sum_log_z: f64 = state.frailty.iter().map(|&z| libm::log(z)).sum();
    let sum_z: f64 = state.frailty.iter().sum();
    let (shape, rate) = (spec.hyper.eta_shape, spec.hyper.eta_rate);
    state.eta = slice.sample_positive(
        state.eta,
        |eta| {
            let ln = libm::log(eta);
            n * (eta * ln - libm::lgamma(eta)) + (eta - 1.0) * sum_log_z - eta * sum_z
                + (shape - 1.0) * ln
                - rate * eta
        },
        rng,
    )?;
    Ok(())
}

/// Slice update of each regression coefficient in turn.
pub fn update_beta<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    slice: &SliceSampler,
    rng: &mut R,
) -> Result<(), McmcError> {
    let baseline = state.baseline(spec)?;
    let cum = baseline_cum_hazards(&baseline, state, spec, data)?;
    let records = data.records();
    let events: Vec<bool> = (0..data.len())
        .map(|i| effective_record(state, spec, data, i).1)
        .collect();
    for k in 0..state.beta.len() {
        let variance = spec.hyper.beta_variance[k];
        let current = state.beta[k];
        let mut score = 0.0;
        // z_s · H_0(t_i) · exp(x_iᵀβ − x_ik β_k)
        let base: Vec<f64> = (0..data.len())
            .map(|i| {
                let x = records[i].covariates[k];
                if events[i] {
                    score += x;
                }
                state.frailty[records[i].subject - 1]
                    * cum[i]
                    * libm::exp(linear_predictor(state, spec, data, i) - x * current)
            })
            .collect();
        state.beta[k] = slice.sample(
            current,
            |b| {
                let mut f = score * b - b * b / (2.0 * variance);
                for (i, c) in base.iter().enumerate() {
                    f -= c * libm::exp(records[i].covariates[k] * b);
                }
                f
            },
            rng,
        )?;
    }
    Ok(())
}

/// Redraws every censored record's time from its own piecewise exponential
/// distribution truncated to `(censor_time, ∞)`.
///
/// Does nothing under [`CensoringMode::Analytic`].
pub fn impute_censored<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    rng: &mut R,
) -> Result<(), McmcError> {
    if spec.censoring == CensoringMode::Analytic {
        return Ok(());
    }
    let baseline = state.baseline(spec)?;
    for (i, r) in data.records().iter().enumerate() {
        if let Some(censor) = r.censor_time() {
            let w = record_weight(state, spec, data, i);
            let subject = baseline.scaled(w)?;
            state.times[i] = subject.sample(&TruncationBounds::above(censor)?, rng)?;
        }
    }
    Ok(())
}

/// How the rates of the simple family are updated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RateUpdate {
    #[default]
    Conjugate,
    Slice,
}

/// One Gibbs sweep: imputation, rates, frailties, `η`, then `β`.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ParamState,
    spec: &ModelSpec,
    data: &SurvivalDataset,
    slice: &SliceSampler,
    rate_update: RateUpdate,
    rng: &mut R,
) -> Result<(), McmcError> {
    impute_censored(state, spec, data, rng)?;
    match (spec.family, rate_update) {
        (ModelFamily::Simple, RateUpdate::Conjugate) => {
            update_rates_conjugate(state, spec, data, rng)?
        }
        _ => update_rates_slice(state, spec, data, slice, rng)?,
    }
    if spec.family.has_frailty() {
        update_frailties(state, spec, data, rng)?;
        update_eta(state, spec, slice, rng)?;
        update_beta(state, spec, data, slice, rng)?;
    }
    check_state(state, spec, data)?;
    Ok(())
}
