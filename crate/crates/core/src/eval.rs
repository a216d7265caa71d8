//! Scoring, prediction and the replicate harness.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, GxEDataset, StandardizationRecord, TrueModel};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::gibbs::run_chain;
use crate::inference::{default_rule, posterior_medians, select, Estimates};
use crate::method::{Hyperparameters, Method, MethodConfig};
use crate::simgen::{gen_dataset, SimulationConfig};

/// The five Beta priors of the sensitivity protocol, applied to both
/// sparsity proportions.
pub const BETA_PRIORS: [(f64, f64); 5] = [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (1.0, 5.0), (5.0, 1.0)];

/// True and false positives over all `p * L` effects.
pub fn score_selection(selected: &[bool], truth: &TrueModel) -> (usize, usize) {
    let mask = truth.active_mask();
    assert_eq!(selected.len(), mask.len(), "selection and truth sizes differ");
    selected.iter().zip(&mask).fold((0, 0), |(tp, fp), (&s, &t)| match (s, t) {
        (true, true) => (tp + 1, fp),
        (true, false) => (tp, fp + 1),
        _ => (tp, fp),
    })
}

/// Mean absolute deviation when `robust`, mean squared error otherwise.
pub fn prediction_error(y_test: &DVector<f64>, y_hat: &DVector<f64>, robust: bool) -> f64 {
    assert_eq!(y_test.len(), y_hat.len());
    let n = y_test.len() as f64;
    y_test
        .iter()
        .zip(y_hat.iter())
        .map(|(y, f)| if robust { (y - f).abs() } else { (y - f) * (y - f) })
        .sum::<f64>()
        / n
}

/// Linear predictor at the estimates, on the dataset's own scale.
pub fn predict(est: &Estimates, ds: &GxEDataset) -> Result<DVector<f64>> {
    ds.linear_predictor(
        &DVector::from_column_slice(&est.alpha),
        &DVector::from_column_slice(&est.theta),
        &est.beta,
    )
}

/// Error of a fit on a raw-scale test set: standardize the test set with the
/// training record, predict, and map back.
pub fn test_error(est: &Estimates, record: &StandardizationRecord, test: &GxEDataset, robust: bool) -> Result<f64> {
    let y_hat = record.response(&predict(est, &record.apply(test)?)?);
    Ok(prediction_error(test.y(), &y_hat, robust))
}

/// Dataset whose genetic block is the selected `u` columns, each its own
/// group with no interactions; the environment factors move into `w` so
/// they stay unpenalized.
fn restricted(ds: &GxEDataset, selected: &[usize]) -> Result<GxEDataset> {
    let n = ds.n();
    let w = DMatrix::from_fn(n, ds.q() + ds.k(), |i, c| {
        if c < ds.q() {
            ds.w()[(i, c)]
        } else {
            ds.e()[(i, c - ds.q())]
        }
    });
    let x = ds.u().select_columns(selected.iter());
    GxEDataset::new(ds.y().clone(), w, DMatrix::zeros(n, 0), x)
}

/// Refit the selected effects with the Bayesian lasso (robust or not) and
/// return the test error of its posterior-median predictions. An empty
/// selection predicts from the covariates alone.
pub fn refit_predict(
    selected: &[bool],
    train: &GxEDataset,
    test: &GxEDataset,
    hyper: &Hyperparameters,
    robust: bool,
    rng: &mut RngStream,
) -> Result<f64> {
    if selected.len() != train.p() * train.group_size() {
        return Err(Error::Dimension(format!(
            "selection has {} entries, design has {}",
            selected.len(),
            train.p() * train.group_size()
        )));
    }
    let (train_std, record) = standardize(train)?;
    let test_std = record.apply(test)?;
    let cols: Vec<usize> = (0..selected.len()).filter(|&c| selected[c]).collect();
    if cols.is_empty() {
        log::warn!("empty selection: predicting from clinical and environment covariates only");
    }
    let rtrain = restricted(&train_std, &cols)?;
    let rtest = restricted(&test_std, &cols)?;
    let method = if robust { Method::Rbl } else { Method::Bl };
    let samples = run_chain(&rtrain, &MethodConfig::new(method, hyper.clone()), rng)?;
    let est = posterior_medians(&samples)?;
    let y_hat = record.response(&predict(&est, &rtest)?);
    Ok(prediction_error(test.y(), &y_hat, robust))
}

/// Mean and sample standard deviation (absent for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: Option<f64>,
}

impl Summary {
    /// Welford accumulation.
    pub fn of(values: &[f64]) -> Summary {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let d = v - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (v - mean);
        }
        let n = values.len();
        Summary {
            mean: if n == 0 { f64::NAN } else { mean },
            sd: (n > 1).then(|| (m2 / (n - 1) as f64).sqrt()),
        }
    }

    /// `mean(sd)` with two decimals; `mean()` when the sd is absent.
    pub fn cell(&self) -> String {
        match self.sd {
            Some(sd) => format!("{:.2}({:.2})", self.mean, sd),
            None => format!("{:.2}()", self.mean),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    pub pred: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub label: String,
    pub tp: Summary,
    pub fp: Summary,
    pub pred: Summary,
}

/// Per-replicate scores of several fitted configurations on one design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    /// Row label, e.g. the error model.
    pub scenario: String,
    pub true_active: usize,
    pub labels: Vec<String>,
    pub records: Vec<ReplicateRecord>,
}

impl ReplicateReport {
    pub fn summaries(&self) -> Vec<CellSummary> {
        self.labels
            .iter()
            .map(|label| {
                let rows: Vec<&ReplicateRecord> = self.records.iter().filter(|r| &r.label == label).collect();
                let get = |f: fn(&ReplicateRecord) -> f64| Summary::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
                CellSummary {
                    label: label.clone(),
                    tp: get(|r| r.tp as f64),
                    fp: get(|r| r.fp as f64),
                    pred: get(|r| r.pred),
                }
            })
            .collect()
    }

    pub fn summary(&self, label: &str) -> Option<CellSummary> {
        self.summaries().into_iter().find(|s| s.label == label)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Table with rows `scenario x {TP, FP, Pred}` and one column per label.
pub fn write_table_csv(reports: &[ReplicateReport], path: impl AsRef<Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path.as_ref())?;
    write_table(reports, &mut wtr)?;
    wtr.flush()?;
    Ok(())
}

pub fn write_table<W: std::io::Write>(reports: &[ReplicateReport], wtr: &mut csv::Writer<W>) -> Result<()> {
    let labels = reports.first().map(|r| r.labels.clone()).unwrap_or_default();
    let mut header = vec!["scenario".to_string(), "measure".to_string()];
    header.extend(labels.iter().cloned());
    wtr.write_record(&header)?;
    for rep in reports {
        let sums = rep.summaries();
        for (name, pick) in [
            ("TP", (|s: &CellSummary| s.tp) as fn(&CellSummary) -> Summary),
            ("FP", |s| s.fp),
            ("Pred", |s| s.pred),
        ] {
            let mut row = vec![rep.scenario.clone(), name.to_string()];
            for label in &labels {
                row.push(sums.iter().find(|s| &s.label == label).map(|s| pick(s).cell()).unwrap_or_default());
            }
            wtr.write_record(&row)?;
        }
    }
    Ok(())
}

/// One fit on one replicate: standardize, sample, select with the method's
/// rule, score, and measure test error at the posterior medians.
pub fn score_replicate(
    train: &GxEDataset,
    test: &GxEDataset,
    truth: &TrueModel,
    config: &MethodConfig,
    rng: &mut RngStream,
) -> Result<(usize, usize, f64)> {
    let (train_std, record) = standardize(train)?;
    let samples = run_chain(&train_std, config, rng)?;
    let sel = select(&samples, default_rule(&samples))?;
    let (tp, fp) = score_selection(&sel.selected, truth);
    let pred = test_error(&sel.estimates, &record, test, config.robust)?;
    Ok((tp, fp, pred))
}

/// Run every labelled configuration on `r` replicates of `sim`.
///
/// Replicate `i` uses data stream `i`; its chain for configuration `c`
/// uses stream `i` of the configuration's seed, substream `c`.
pub fn run_cells(
    cells: &[(String, MethodConfig)],
    sim: &SimulationConfig,
    r: usize,
    scenario: &str,
) -> Result<ReplicateReport> {
    sim.validate()?;
    let data: Vec<_> = (0..r as u64)
        .into_par_iter()
        .map(|i| gen_dataset(sim, i))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..cells.len()).map(move |c| (i, c))).collect();
    let scores: Vec<ReplicateRecord> = jobs
        .par_iter()
        .map(|&(i, c)| {
            let (train, test, truth) = &data[i];
            let (label, config) = &cells[c];
            let mut rng = RngStream::new(config.hyper.seed, i as u64).substream(c as u64);
            let (tp, fp, pred) = score_replicate(train, test, truth, config, &mut rng)?;
            log::info!("{scenario} replicate {i} {label}: TP {tp} FP {fp} pred {pred:.4}");
            Ok(ReplicateRecord {
                replicate: i as u64,
                label: label.clone(),
                tp,
                fp,
                pred,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReplicateReport {
        scenario: scenario.to_string(),
        true_active: sim.n_active_effects,
        labels: cells.iter().map(|c| c.0.clone()).collect(),
        records: scores,
    })
}

/// Run `methods` with shared hyperparameters on `r` replicates.
pub fn run_replicates(
    methods: &[Method],
    sim: &SimulationConfig,
    hyper: &Hyperparameters,
    r: usize,
) -> Result<ReplicateReport> {
    let cells: Vec<(String, MethodConfig)> = methods
        .iter()
        .map(|&m| (m.label(), MethodConfig::new(m, hyper.clone())))
        .collect();
    run_cells(&cells, sim, r, sim.error_model.label())
}

/// RBSG-SS under each Beta prior, applied to both `pi0` and `pi1`.
pub fn sensitivity_sweep(
    priors: &[(f64, f64)],
    sim: &SimulationConfig,
    hyper: &Hyperparameters,
    r: usize,
) -> Result<ReplicateReport> {
    let cells: Vec<(String, MethodConfig)> = priors
        .iter()
        .map(|&(a, b)| {
            let h = Hyperparameters {
                a0: a,
                b0: b,
                a1: a,
                b1: b,
                ..hyper.clone()
            };
            (format!("Beta({a}, {b})"), MethodConfig::new(Method::RbsgSs, h))
        })
        .collect();
    run_cells(&cells, sim, r, sim.error_model.label())
}

/// Range of the mean TP across the report's labels.
pub fn tp_spread(report: &ReplicateReport) -> f64 {
    let means: Vec<f64> = report.summaries().iter().map(|s| s.tp.mean).collect();
    let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}
