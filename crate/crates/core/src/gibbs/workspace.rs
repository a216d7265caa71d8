use nalgebra::{DMatrix, DVector};

use super::state::ChainState;
use crate::data::GxEDataset;
use crate::distributions::KAPPA2;

/// Residual cache and per-observation noise precisions.
///
/// `resid` always holds `y - W alpha - E theta - U beta` for the attached
/// state. Partial residuals for a group or element are never materialized:
/// block conditionals read `U_j' P r` and correct it with the group Gram.
#[derive(Clone, Debug)]
pub struct ConditionalWorkspace {
    pub resid: DVector<f64>,
    pub prec: DVector<f64>,
    homoscedastic: bool,
    /// Unweighted `U_j' U_j`, kept when every observation shares one precision.
    gram_u: Vec<DMatrix<f64>>,
    gram_w: DMatrix<f64>,
    gram_e: DMatrix<f64>,
    weighted: DVector<f64>,
}

impl ConditionalWorkspace {
    pub fn new(ds: &GxEDataset, homoscedastic: bool) -> Self {
        let n = ds.n();
        let l = ds.group_size();
        let (gram_u, gram_w, gram_e) = if homoscedastic {
            let gu = (0..ds.p())
                .map(|j| {
                    let uj = ds.u().columns(j * l, l);
                    uj.tr_mul(&uj)
                })
                .collect();
            (gu, ds.w().tr_mul(ds.w()), ds.e().tr_mul(ds.e()))
        } else {
            (Vec::new(), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
        };
        ConditionalWorkspace {
            resid: ds.y().clone(),
            prec: DVector::from_element(n, 1.0),
            homoscedastic,
            gram_u,
            gram_w,
            gram_e,
            weighted: DVector::zeros(n),
        }
    }

    /// Residual recomputed from scratch.
    pub fn full_residual(y: &DVector<f64>, ds: &GxEDataset, state: &ChainState) -> DVector<f64> {
        let mut r = y.clone();
        if ds.q() > 0 {
            r.gemv(-1.0, ds.w(), &state.alpha, 1.0);
        }
        if ds.k() > 0 {
            r.gemv(-1.0, ds.e(), &state.theta, 1.0);
        }
        for (c, &b) in state.beta.iter().enumerate() {
            if b != 0.0 {
                r.axpy(-b, &ds.u().column(c), 1.0);
            }
        }
        r
    }

    pub fn refresh(&mut self, y: &DVector<f64>, ds: &GxEDataset, state: &ChainState) {
        self.resid = Self::full_residual(y, ds, state);
    }

    pub fn set_precision_latent(&mut self, nu: f64, u: &DVector<f64>) {
        for (p, &ui) in self.prec.iter_mut().zip(u.iter()) {
            *p = nu / (KAPPA2 * ui.max(1e-300));
        }
    }

    pub fn set_precision_common(&mut self, sigma2: f64) {
        self.prec.fill(1.0 / sigma2);
    }

    fn common_precision(&self) -> f64 {
        self.prec[0]
    }

    /// `X' P X` and `X' P r` for a block of columns.
    fn weighted_cross<'a>(
        &mut self,
        x: nalgebra::DMatrixView<'a, f64>,
        gram: Option<&DMatrix<f64>>,
        g: &mut DMatrix<f64>,
        c: &mut DVector<f64>,
    ) {
        let m = x.ncols();
        if self.homoscedastic && !self.prec.is_empty() {
            let w = self.common_precision();
            let gram = gram.expect("gram precomputed for homoscedastic model");
            g.copy_from(gram);
            *g *= w;
            for a in 0..m {
                c[a] = w * x.column(a).dot(&self.resid);
            }
            return;
        }
        for a in 0..m {
            let xa = x.column(a);
            self.weighted.zip_zip_apply(&xa, &self.prec, |o, xv, pv| *o = xv * pv);
            c[a] = self.weighted.dot(&self.resid);
            for b in 0..=a {
                let v = self.weighted.dot(&x.column(b));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
    }

    /// `U_j' P U_j` and `U_j' P r` for group `j`.
    pub fn group_cross(&mut self, ds: &GxEDataset, j: usize, g: &mut DMatrix<f64>, c: &mut DVector<f64>) {
        let l = ds.group_size();
        let x = ds.u().columns(j * l, l);
        let gram = self.gram_u.get(j).cloned();
        self.weighted_cross(x, gram.as_ref(), g, c);
    }

    pub fn w_cross(&mut self, ds: &GxEDataset, g: &mut DMatrix<f64>, c: &mut DVector<f64>) {
        let gram = if self.homoscedastic { Some(self.gram_w.clone()) } else { None };
        self.weighted_cross(ds.w().columns(0, ds.q()), gram.as_ref(), g, c);
    }

    pub fn e_cross(&mut self, ds: &GxEDataset, g: &mut DMatrix<f64>, c: &mut DVector<f64>) {
        let gram = if self.homoscedastic { Some(self.gram_e.clone()) } else { None };
        self.weighted_cross(ds.e().columns(0, ds.k()), gram.as_ref(), g, c);
    }

    /// `r -= X delta` for a block of columns.
    pub fn subtract(&mut self, x: nalgebra::DMatrixView<'_, f64>, delta: &[f64]) {
        for (a, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                self.resid.axpy(-d, &x.column(a), 1.0);
            }
        }
    }
}
