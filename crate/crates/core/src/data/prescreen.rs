use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;

use super::GxEDataset;
use crate::error::{Error, Result};

/// Overall F-test of `y ~ 1 + cols`. Returns `(F, p-value)`.
///
/// Rank-deficient designs use their numerical rank as the numerator degrees
/// of freedom; a rank-zero design gives p = 1.
pub fn group_f_test(y: &DVector<f64>, cols: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = y.len();
    let l = cols.ncols();
    if n <= l + 1 {
        return Err(Error::InsufficientData(format!(
            "F-test with {l} predictors needs more than {} rows, got {n}",
            l + 1
        )));
    }
    let yc = y.add_scalar(-y.mean());
    let mut xc = cols.clone();
    for mut c in xc.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
    let tss = yc.norm_squared();
    let svd = xc.svd(true, false);
    let smax = svd.singular_values.max();
    let tol = smax * (n.max(l) as f64) * f64::EPSILON;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut explained = 0.0;
    let mut rank = 0usize;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol && s > 0.0 {
            rank += 1;
            let proj = u.column(i).dot(&yc);
            explained += proj * proj;
        }
    }
    if rank == 0 || tss == 0.0 {
        return Ok((0.0, 1.0));
    }
    let rss = (tss - explained).max(0.0);
    let d1 = rank as f64;
    let d2 = (n - rank - 1) as f64;
    if rss <= 1e-14 * tss {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = (explained / d1) / (rss / d2);
    let p = beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
    Ok((f, p.clamp(0.0, 1.0)))
}

/// Genetic factors whose marginal group F-test p-value is below `p_cutoff`,
/// ascending. A cutoff of 1 keeps every factor.
pub fn prescreen_marginal(ds: &GxEDataset, p_cutoff: f64) -> Result<Vec<usize>> {
    if !(p_cutoff > 0.0 && p_cutoff <= 1.0) {
        return Err(Error::Parameter(format!("cutoff must lie in (0, 1], got {p_cutoff}")));
    }
    let l = ds.group_size();
    if ds.n() <= l + 1 {
        return Err(Error::InsufficientData(format!(
            "prescreening groups of size {l} needs more than {} rows, got {}",
            l + 1,
            ds.n()
        )));
    }
    let mut keep = Vec::new();
    for j in 0..ds.p() {
        if p_cutoff >= 1.0 {
            keep.push(j);
            continue;
        }
        let cols = ds.u().columns(j * l, l).into_owned();
        let (_, pval) = group_f_test(ds.y(), &cols)?;
        if pval < p_cutoff {
            keep.push(j);
        }
    }
    Ok(keep)
}
