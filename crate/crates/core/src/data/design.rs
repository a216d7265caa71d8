use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Interaction design: for each genetic factor `j`, the block
/// `x_j, x_j * e_1, .., x_j * e_k`.
pub fn build_design(x: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if e.nrows() != n {
        return Err(Error::Dimension(format!(
            "x has {n} rows, e has {}",
            e.nrows()
        )));
    }
    let p = x.ncols();
    let k = e.ncols();
    let l = k + 1;
    let mut u = DMatrix::zeros(n, p * l);
    for j in 0..p {
        let xj = x.column(j);
        u.column_mut(j * l).copy_from(&xj);
        for m in 0..k {
            u.column_mut(j * l + 1 + m)
                .copy_from(&xj.component_mul(&e.column(m)));
        }
    }
    Ok(u)
}
