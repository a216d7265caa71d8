//! Robust Bayesian sparse-group variable selection for gene-environment
//! interaction regression.
//!
//! Twelve Gibbs samplers cover the grid {robust (Laplace) or Gaussian
//! likelihood} x {spike-and-slab or Laplacian shrinkage} x {sparse-group,
//! group, individual} selection. The crate also provides selection rules,
//! convergence diagnostics, the simulation designs used to benchmark the
//! methods, and the replicate harness that scores them.
//!
//! ```no_run
//! use robust_gxe::prelude::*;
//!
//! let sim = SimulationConfig::example1(ErrorModel::Normal01);
//! let (train, _test, truth) = gen_dataset(&sim, 7).unwrap();
//! let (train, _) = standardize(&train).unwrap();
//! let config = MethodConfig::new(Method::RbsgSs, Hyperparameters::default());
//! let samples = run_chain(&train, &config, &mut RngStream::new(7, 0)).unwrap();
//! let selection = select(&samples, SelectionRule::Mpm).unwrap();
//! let (tp, fp) = score_selection(&selection.selected, &truth);
//! println!("TP {tp}, FP {fp}");
//! ```

pub mod data;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod geweke;
pub mod gibbs;
pub mod inference;
pub mod method;
pub mod simgen;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{load_csv, standardize, GxEDataset, StandardizationRecord, TrueModel};
    pub use crate::distributions::RngStream;
    pub use crate::error::{Error, Result};
    pub use crate::eval::{prediction_error, score_selection};
    pub use crate::gibbs::{run_chain, run_chains, Init, PosteriorSamples};
    pub use crate::inference::{select, SelectionResult, SelectionRule};
    pub use crate::method::{Hyperparameters, Method, MethodConfig, Structure};
    pub use crate::simgen::{gen_dataset, ErrorModel, SimulationConfig};
}
