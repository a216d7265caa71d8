//! Datasets, the interaction design, standardization and ingestion.

mod csv;
mod design;
mod prescreen;
mod standardize;

pub use self::csv::{load_csv, read_matrix_csv, write_csv, write_matrix_csv};
pub use design::build_design;
pub use prescreen::{group_f_test, prescreen_marginal};
pub use standardize::{standardize, ColumnScaling, StandardizationRecord};

use std::collections::BTreeSet;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response, clinical covariates `w`, environment factors `e`, genetic
/// factors `x` and the derived design `u`.
///
/// `u` is group-major: group `j` occupies columns `j*L .. (j+1)*L` holding
/// `x_j, x_j*e_1, .., x_j*e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GxEDataset {
    y: DVector<f64>,
    w: DMatrix<f64>,
    e: DMatrix<f64>,
    x: DMatrix<f64>,
    u: DMatrix<f64>,
}

impl GxEDataset {
    pub fn new(y: DVector<f64>, w: DMatrix<f64>, e: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        for (name, rows) in [("w", w.nrows()), ("e", e.nrows()), ("x", x.nrows())] {
            if rows != n {
                return Err(Error::Dimension(format!("{name} has {rows} rows, y has {n}")));
            }
        }
        let u = build_design(&x, &e)?;
        Ok(GxEDataset { y, w, e, x, u })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.w.ncols()
    }

    pub fn k(&self) -> usize {
        self.e.ncols()
    }

    /// `L = k + 1`
    pub fn group_size(&self) -> usize {
        self.k() + 1
    }

    pub fn group_columns(&self, j: usize) -> Range<usize> {
        let l = self.group_size();
        j * l..(j + 1) * l
    }

    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response has length {}, dataset has {} rows",
                y.len(),
                self.n()
            )));
        }
        Ok(GxEDataset {
            y,
            ..self.clone()
        })
    }

    /// Keep the listed genetic factors, in the given order.
    pub fn select_groups(&self, groups: &[usize]) -> Result<Self> {
        if let Some(&bad) = groups.iter().find(|&&j| j >= self.p()) {
            return Err(Error::Dimension(format!("group {bad} out of range (p = {})", self.p())));
        }
        let x = self.x.select_columns(groups);
        GxEDataset::new(self.y.clone(), self.w.clone(), self.e.clone(), x)
    }

    /// Linear predictor `W alpha + E theta + U beta`, `beta` flat in `u` column order.
    pub fn linear_predictor(&self, alpha: &DVector<f64>, theta: &DVector<f64>, beta: &[f64]) -> Result<DVector<f64>> {
        if alpha.len() != self.q() || theta.len() != self.k() || beta.len() != self.u.ncols() {
            return Err(Error::Dimension(format!(
                "coefficients ({}, {}, {}) do not match q={}, k={}, p*L={}",
                alpha.len(),
                theta.len(),
                beta.len(),
                self.q(),
                self.k(),
                self.u.ncols()
            )));
        }
        let mut fit = &self.w * alpha + &self.e * theta;
        for (c, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                fit.axpy(b, &self.u.column(c), 1.0);
            }
        }
        Ok(fit)
    }
}

/// Simulation truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    /// `p` rows of length `L`.
    pub beta: Vec<Vec<f64>>,
    pub active_groups: Vec<usize>,
    /// `(group, index within group)` pairs, 0-based.
    pub active_effects: Vec<(usize, usize)>,
}

impl TrueModel {
    /// Build from coefficients, deriving the active sets from the nonzero pattern.
    pub fn from_coefficients(alpha: Vec<f64>, theta: Vec<f64>, beta: Vec<Vec<f64>>) -> Self {
        let mut groups = BTreeSet::new();
        let mut effects = Vec::new();
        for (j, row) in beta.iter().enumerate() {
            for (l, &b) in row.iter().enumerate() {
                if b != 0.0 {
                    groups.insert(j);
                    effects.push((j, l));
                }
            }
        }
        TrueModel {
            alpha,
            theta,
            beta,
            active_groups: groups.into_iter().collect(),
            active_effects: effects,
        }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn group_size(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }

    pub fn beta_flat(&self) -> Vec<f64> {
        self.beta.iter().flatten().copied().collect()
    }

    /// Active flags in flat `u` column order.
    pub fn active_mask(&self) -> Vec<bool> {
        self.beta.iter().flatten().map(|&b| b != 0.0).collect()
    }

    /// Check that the stored active sets agree with the nonzero pattern.
    pub fn is_consistent(&self) -> bool {
        let derived = TrueModel::from_coefficients(Vec::new(), Vec::new(), self.beta.clone());
        derived.active_groups == self.active_groups && derived.active_effects == self.active_effects
    }
}
