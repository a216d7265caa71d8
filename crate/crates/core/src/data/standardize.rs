use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GxEDataset;
use crate::error::{Error, Result};

/// Per-column centering and scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub means: Vec<f64>,
    /// Sample standard deviations; 1 for zero-variance columns.
    pub scales: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl ColumnScaling {
    fn fit(m: &DMatrix<f64>) -> ColumnScaling {
        let n = m.nrows() as f64;
        let mut out = ColumnScaling {
            means: Vec::with_capacity(m.ncols()),
            scales: Vec::with_capacity(m.ncols()),
            zero_variance: Vec::with_capacity(m.ncols()),
        };
        for col in m.column_iter() {
            let mean = col.sum() / n;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            let degenerate = !(sd > 1e-12 * mean.abs().max(1.0));
            out.means.push(mean);
            out.scales.push(if degenerate { 1.0 } else { sd });
            out.zero_variance.push(degenerate);
        }
        out
    }

    fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.means.len() {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, record has {}",
                m.ncols(),
                self.means.len()
            )));
        }
        let mut out = m.clone();
        for (c, mut col) in out.column_iter_mut().enumerate() {
            let (mean, scale) = (self.means[c], self.scales[c]);
            col.apply(|v| *v = (*v - mean) / scale);
        }
        Ok(out)
    }

    fn invert(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (c, mut col) in out.column_iter_mut().enumerate() {
            let (mean, scale) = (self.means[c], self.scales[c]);
            col.apply(|v| *v = *v * scale + mean);
        }
        out
    }

    pub fn any_zero_variance(&self) -> bool {
        self.zero_variance.iter().any(|&z| z)
    }
}

/// Everything needed to map between raw and standardized scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub y_mean: f64,
    pub w: ColumnScaling,
    pub e: ColumnScaling,
    pub x: ColumnScaling,
}

impl StandardizationRecord {
    /// Transform another dataset (e.g. a test set) with this record.
    pub fn apply(&self, ds: &GxEDataset) -> Result<GxEDataset> {
        let y = ds.y().add_scalar(-self.y_mean);
        GxEDataset::new(y, self.w.apply(ds.w())?, self.e.apply(ds.e())?, self.x.apply(ds.x())?)
    }

    pub fn unstandardize(&self, ds: &GxEDataset) -> Result<GxEDataset> {
        let y = ds.y().add_scalar(self.y_mean);
        GxEDataset::new(y, self.w.invert(ds.w()), self.e.invert(ds.e()), self.x.invert(ds.x()))
    }

    /// Map a standardized-scale prediction back to the response scale.
    pub fn response(&self, y_hat: &DVector<f64>) -> DVector<f64> {
        y_hat.add_scalar(self.y_mean)
    }
}

/// Center `y`; center and scale every column of `w`, `e`, `x` to unit sample
/// standard deviation; rebuild `u` from the standardized `x` and `e`.
/// Zero-variance columns are centered only and flagged in the record.
pub fn standardize(ds: &GxEDataset) -> Result<(GxEDataset, StandardizationRecord)> {
    if ds.n() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 rows, got {}",
            ds.n()
        )));
    }
    let record = StandardizationRecord {
        y_mean: ds.y().mean(),
        w: ColumnScaling::fit(ds.w()),
        e: ColumnScaling::fit(ds.e()),
        x: ColumnScaling::fit(ds.x()),
    };
    let out = record.apply(ds)?;
    Ok((out, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GxEDataset {
        GxEDataset::new(
            DVector::from_vec(vec![1.0, 4.0, 2.0, 9.0]),
            DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_row_slice(4, 2, &[0.0, 1.5, 1.0, -2.0, 1.0, 0.3, 0.0, 7.0]),
            DMatrix::from_row_slice(4, 2, &[5.0, 0.0, 5.0, 1.0, 5.0, 2.0, 5.0, 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn unit_column() {
        let ds = GxEDataset::new(
            DVector::zeros(3),
            DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]),
            DMatrix::zeros(3, 0),
            DMatrix::zeros(3, 0),
        )
        .unwrap();
        let (s, _) = standardize(&ds).unwrap();
        assert_eq!(s.w().as_slice(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_column_flagged() {
        let (s, rec) = standardize(&toy()).unwrap();
        assert!(rec.x.zero_variance[0]);
        assert!(!rec.x.zero_variance[1]);
        assert!(s.x().column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn idempotent_and_centered() {
        let (s1, _) = standardize(&toy()).unwrap();
        let (s2, _) = standardize(&s1).unwrap();
        assert!((s1.w() - s2.w()).amax() < 1e-12);
        assert!((s1.e() - s2.e()).amax() < 1e-12);
        assert!((s1.x() - s2.x()).amax() < 1e-12);
        assert!((s1.y() - s2.y()).amax() < 1e-12);
        assert!(s1.y().mean().abs() < 1e-12);
        for m in [s1.w(), s1.e(), s1.x()] {
            for c in m.column_iter() {
                assert!(c.mean().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn design_uses_standardized_inputs() {
        let (s, _) = standardize(&toy()).unwrap();
        let expect = super::super::build_design(s.x(), s.e()).unwrap();
        assert_eq!(s.u(), &expect);
    }

    #[test]
    fn round_trip() {
        let ds = toy();
        let (s, rec) = standardize(&ds).unwrap();
        let back = rec.unstandardize(&s).unwrap();
        for (a, b) in back.x().iter().chain(back.e().iter()).zip(ds.x().iter().chain(ds.e().iter())) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        assert!((back.y() - ds.y()).amax() < 1e-10);
    }

    #[test]
    fn too_few_rows() {
        let ds = GxEDataset::new(
            DVector::zeros(1),
            DMatrix::zeros(1, 0),
            DMatrix::zeros(1, 0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(standardize(&ds).is_err());
    }
}
