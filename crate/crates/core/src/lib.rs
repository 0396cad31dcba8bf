//! Piecewise exponential survival toolkit.
//!
//! The [`pex`] module evaluates and samples the piecewise exponential
//! distribution `PE(λ, τ)`: a survival distribution whose hazard is constant
//! on each interval of a fixed time grid. On top of it, [`model`] defines three
//! Bayesian survival models (independent gamma rates, a gamma-chain frailty
//! model and a log-normal random-walk frailty model), [`mcmc`] fits them with a
//! seed-reproducible Gibbs sampler, and [`diagnostics`] summarizes the draws.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use pwexp::pex::PeParams;
//!
//! let params = PeParams::from_parts(vec![0.0, 2.0, 3.0, 5.0], vec![0.3, 0.6, 0.8, 1.3]).unwrap();
//! assert_eq!(params.hazard(3.483).unwrap(), 0.8);
//! assert!((params.cum_hazard(3.483).unwrap() - 1.5864).abs() < 1e-12);
//! ```

#![no_std]
#![deny(unsafe_code)]
// Index loops over parallel per-interval arrays read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
pub mod mcmc;
pub mod model;
pub mod pex;

pub use diagnostics::{effective_sample_size, hpd_interval, summarize, Summary};
pub use mcmc::{run_chain, ChainStore, McmcConfig};
pub use model::{ModelFamily, ModelSpec, ParamState, SurvivalDataset, SurvivalRecord};
pub use pex::{PeParams, TimeGrid, TruncationBounds};
