//! Seed-reproducible Gibbs sampling for the survival models.
//!
//! Rates of the simple family have conjugate gamma full conditionals and are
//! drawn exactly; so are the frailties. Everything else (`η`, `β`, chained or
//! random-walk rates) is updated by univariate slice sampling. Censored times
//! are imputed from truncated piecewise exponential distributions.

mod chain;
mod slice;
mod updates;

use alloc::boxed::Box;

use crate::model::ModelError;
use crate::pex::PexError;

pub use chain::{chain_rng, run_chain, run_chains, ChainRng, ChainStore, McmcConfig, Monitors};
pub use slice::SliceSampler;
pub use updates::{
    frailty_full_conditionals, impute_censored, rate_full_conditionals, sweep, update_beta,
    update_eta, update_frailties, update_rates_conjugate, update_rates_slice, GammaParams,
    RateUpdate,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McmcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Distribution(#[from] PexError),
    #[error("log target is {value} at {at}: the state was corrupted upstream")]
    NonFiniteTarget { at: f64, value: f64 },
    #[error("gamma conditional with shape {shape} and rate {rate} is not proper")]
    InvalidConditional { shape: f64, rate: f64 },
    #[error("{0}")]
    WrongFamily(&'static str),
    #[error("invalid sampler configuration: {0}")]
    Config(&'static str),
    #[error("iteration {iteration}: {source}")]
    Update {
        iteration: usize,
        source: Box<McmcError>,
    },
}
