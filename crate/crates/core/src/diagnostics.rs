//! Posterior summaries: mean, median, standard deviation, HPD interval and
//! effective sample size.

use alloc::string::String;
use alloc::vec::Vec;

use crate::mcmc::ChainStore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagError {
    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },
    #[error("mass {0} is outside (0, 1)")]
    InvalidMass(f64),
    #[error("draws contain non-finite values")]
    NonFinite,
    #[error("no chains to summarize")]
    NoChains,
    #[error("chain {chain} does not match the first chain's columns")]
    SchemaMismatch { chain: usize },
}

const MIN_HPD_DRAWS: usize = 10;
const MIN_ESS_DRAWS: usize = 100;

fn sorted(draws: &[f64]) -> Result<Vec<f64>, DiagError> {
    if draws.iter().any(|x| !x.is_finite()) {
        return Err(DiagError::NonFinite);
    }
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Shortest interval holding `ceil(mass·n)` of the sorted draws. Ties go to
/// the lowest window.
pub fn hpd_interval(draws: &[f64], mass: f64) -> Result<(f64, f64), DiagError> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(DiagError::InvalidMass(mass));
    }
    if draws.len() < MIN_HPD_DRAWS {
        return Err(DiagError::InsufficientDraws {
            needed: MIN_HPD_DRAWS,
            got: draws.len(),
        });
    }
    let s = sorted(draws)?;
    Ok(hpd_sorted(&s, mass))
}

fn hpd_sorted(s: &[f64], mass: f64) -> (f64, f64) {
    let n = s.len();
    let k = (libm::ceil(mass * n as f64) as usize).clamp(1, n);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=n - k {
        let width = s[i + k - 1] - s[i];
        if width < best_width {
            best_width = width;
            best = i;
        }
    }
    (s[best], s[best + k - 1])
}

/// Effective sample size of a single chain.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ess {
    pub value: f64,
    /// Set when the draws have zero variance; `value` is then 0.
    pub degenerate: bool,
}

/// `n / τ` with the integrated autocorrelation time `τ = 1 + 2 Σ ρ_k`
/// truncated by Geyer's initial positive sequence: autocorrelations are summed
/// in adjacent pairs `ρ_{2k} + ρ_{2k+1}` until a pair turns non-positive.
/// The result is capped at `n`.
pub fn effective_sample_size(draws: &[f64]) -> Result<Ess, DiagError> {
    let n = draws.len();
    if n < MIN_ESS_DRAWS {
        return Err(DiagError::InsufficientDraws {
            needed: MIN_ESS_DRAWS,
            got: n,
        });
    }
    if draws.iter().any(|x| !x.is_finite()) {
        return Err(DiagError::NonFinite);
    }
    let mean = draws.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = draws.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return Ok(Ess {
            value: 0.0,
            degenerate: true,
        });
    }
    // pair k covers lags 2k and 2k+1; pair 0 includes ρ_0 = 1
    let mut pair_sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        pair_sum += pair;
        lag += 2;
    }
    let tau = -1.0 + 2.0 * pair_sum;
    let value = if tau > 0.0 {
        (n as f64 / tau).min(n as f64)
    } else {
        n as f64
    };
    Ok(Ess {
        value,
        degenerate: false,
    })
}

/// One row of a posterior summary table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    /// From the first chain only; `None` when it has fewer than 100 draws.
    pub ess: Option<f64>,
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Pools all chains for mean, median, sd and HPD; the effective sample size
/// comes from the first chain alone.
pub fn summarize(chains: &[ChainStore], mass: f64) -> Result<Vec<Summary>, DiagError> {
    let first = chains.first().ok_or(DiagError::NoChains)?;
    for (c, chain) in chains.iter().enumerate().skip(1) {
        if chain.names() != first.names() {
            return Err(DiagError::SchemaMismatch { chain: c });
        }
    }
    let mut out = Vec::with_capacity(first.names().len());
    for (name, first_draws) in first.columns() {
        let pooled: Vec<f64> = chains
            .iter()
            .flat_map(|c| c.get(name).unwrap_or(&[]).iter().copied())
            .collect();
        let n = pooled.len();
        if n < MIN_HPD_DRAWS {
            return Err(DiagError::InsufficientDraws {
                needed: MIN_HPD_DRAWS,
                got: n,
            });
        }
        if !(mass > 0.0 && mass < 1.0) {
            return Err(DiagError::InvalidMass(mass));
        }
        let s = sorted(&pooled)?;
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let (hpd_low, hpd_high) = hpd_sorted(&s, mass);
        let ess = match effective_sample_size(first_draws) {
            Ok(e) => Some(e.value),
            Err(DiagError::InsufficientDraws { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(Summary {
            name: name.into(),
            mean,
            median: median_sorted(&s),
            sd: libm::sqrt(var),
            hpd_low,
            hpd_high,
            ess,
        });
    }
    Ok(out)
}
