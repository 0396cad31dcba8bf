//! Runs chains on worker threads and times the sampling phase.

use std::time::Instant;

use pwexp::diagnostics::{summarize, Summary};
use pwexp::mcmc::{run_chain, ChainStore, McmcConfig, McmcError};
use pwexp::model::{ModelSpec, SurvivalDataset};

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Ordered by chain id.
    pub chains: Vec<ChainStore>,
    pub summary: Vec<Summary>,
    pub sampling_secs: f64,
}

/// One chain per scoped thread. Results are identical to running the chains
/// sequentially because every chain owns its generator stream.
pub fn run_chains_parallel(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    config: &McmcConfig,
) -> Result<Vec<ChainStore>, McmcError> {
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.n_chains)
            .map(|c| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let mut store = run_chain(spec, data, config, c)?;
                    store.wall_time_secs = Some(start.elapsed().as_secs_f64());
                    Ok(store)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain worker panicked"))
            .collect()
    })
}

pub fn fit(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    config: &McmcConfig,
    mass: f64,
) -> anyhow::Result<FitResult> {
    let start = Instant::now();
    let chains = run_chains_parallel(spec, data, config)?;
    let sampling_secs = start.elapsed().as_secs_f64();
    let summary = summarize(&chains, mass)?;
    Ok(FitResult {
        chains,
        summary,
        sampling_secs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pwexp::mcmc::run_chains;
    use pwexp::model::{HyperParams, ModelFamily};
    use pwexp::pex::TimeGrid;

    #[test]
    fn parallel_matches_sequential() {
        let spec = ModelSpec::new(
            ModelFamily::Simple,
            TimeGrid::new(vec![0.0, 1.0]).unwrap(),
            HyperParams::default(),
        );
        let data = SurvivalDataset::from_event_times(&[0.3, 0.9, 1.4, 2.2, 0.1]).unwrap();
        let config = McmcConfig {
            n_chains: 3,
            burn_in: 20,
            n_iter: 100,
            ..McmcConfig::default()
        };
        let mut par = run_chains_parallel(&spec, &data, &config).unwrap();
        par.iter_mut().for_each(|c| c.wall_time_secs = None);
        assert_eq!(par, run_chains(&spec, &data, &config).unwrap());
    }
}
