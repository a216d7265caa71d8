//! Gibbs samplers for the twelve methods.

pub mod conditionals;
mod prior;
mod samples;
mod state;
mod sweep;
mod workspace;

pub use prior::{sample_prior, sample_response};
pub use samples::{PosteriorSamples, RunManifest};
pub use state::ChainState;
pub use sweep::{Init, Sampler};
pub use workspace::ConditionalWorkspace;

use std::time::Instant;

use rayon::prelude::*;

use crate::data::GxEDataset;
use crate::distributions::RngStream;
use crate::error::Result;
use crate::method::MethodConfig;

/// Output of one chain.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub samples: PosteriorSamples,
    pub final_state: ChainState,
    pub elapsed_seconds: f64,
}

impl ChainRun {
    pub fn manifest(&self, ds: &GxEDataset, config: &MethodConfig, stream_id: u64) -> RunManifest {
        let st = &self.final_state;
        let opt = |v: f64| (!v.is_nan()).then_some(v);
        RunManifest {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            method: config.method(),
            seed: config.hyper.seed,
            stream_id,
            n_iter: config.hyper.n_iter,
            burn_in: config.hyper.burn_in,
            stored_draws: self.samples.n_draws,
            n: ds.n(),
            p: ds.p(),
            q: ds.q(),
            k: ds.k(),
            hyper: config.hyper.clone(),
            final_eta: opt(st.eta),
            final_eta1: opt(st.eta1),
            final_eta2: opt(st.eta2),
            elapsed_seconds: self.elapsed_seconds,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Run `n_iter` sweeps from the default start, keeping draws after `burn_in`.
pub fn run_chain(ds: &GxEDataset, config: &MethodConfig, rng: &mut RngStream) -> Result<PosteriorSamples> {
    Ok(run_chain_from(ds, config, Init::Default, rng)?.samples)
}

pub fn run_chain_from(
    ds: &GxEDataset,
    config: &MethodConfig,
    init: Init,
    rng: &mut RngStream,
) -> Result<ChainRun> {
    let start = Instant::now();
    let method = config.method();
    let mut sampler = Sampler::new(ds, config)?;
    let mut state = sampler.initial_state(init, rng)?;
    sampler.attach(&state);
    let h = &config.hyper;
    let mut samples = PosteriorSamples::new(method, ds.p(), ds.group_size(), ds.q(), ds.k());
    for it in 0..h.n_iter {
        sampler.sweep(&mut state, rng)?;
        if it >= h.burn_in {
            samples.push(&state);
        }
    }
    log::debug!(
        "{method}: {} sweeps in {:.2}s",
        h.n_iter,
        start.elapsed().as_secs_f64()
    );
    Ok(ChainRun {
        samples,
        final_state: state,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `m` chains from jittered starts on streams `0..m` of the configured seed,
/// run concurrently.
pub fn run_chains(ds: &GxEDataset, config: &MethodConfig, m: usize) -> Result<Vec<ChainRun>> {
    (0..m as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = RngStream::new(config.hyper.seed, id);
            let init = if m > 1 { Init::Jittered } else { Init::Default };
            run_chain_from(ds, config, init, &mut rng)
        })
        .collect()
}
