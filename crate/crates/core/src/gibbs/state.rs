use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::method::{Method, Structure};

/// One full set of latent variables and coefficients.
///
/// Per-effect fields are flat, indexed `j * L + l` in design column order.
/// Fields a method does not use are empty (vectors) or NaN (scalars).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub p: usize,
    pub group_size: usize,
    pub alpha: DVector<f64>,
    pub theta: DVector<f64>,
    /// Group-level slab coefficients (sparse-group spike-and-slab).
    pub b: Vec<f64>,
    /// Within-group scales: `V_j^{1/2}` diagonals for sparse-group
    /// spike-and-slab, variance components for the sparse-group Laplacian.
    pub omega: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi_b: Vec<bool>,
    pub phi_w: Vec<bool>,
    pub u_latent: DVector<f64>,
    pub nu: f64,
    pub sigma2: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub s2: f64,
    pub s_group: Vec<f64>,
    pub s_indiv: Vec<f64>,
    pub r_group: Vec<f64>,
    pub eta1: f64,
    pub eta2: f64,
    pub eta: f64,
}

/// Which optional fields a method carries.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub b: bool,
    pub omega: bool,
    pub phi_b: bool,
    pub phi_w: bool,
    pub u_latent: bool,
    pub nu: bool,
    pub sigma2: bool,
    pub pi0: bool,
    pub pi1: bool,
    pub s2: bool,
    pub s_group: bool,
    pub s_indiv: bool,
    pub r_group: bool,
    pub eta12: bool,
    pub eta: bool,
}

impl Layout {
    pub fn of(method: Method) -> Layout {
        let robust = method.robust();
        let ss = method.spike_slab();
        let st = method.structure();
        let sg = st == Structure::SparseGroup;
        Layout {
            b: sg && ss,
            omega: sg,
            phi_b: ss && st != Structure::Individual,
            phi_w: ss && st != Structure::Group,
            u_latent: robust,
            nu: robust,
            sigma2: !robust,
            pi0: ss && st != Structure::Individual,
            pi1: ss && st != Structure::Group,
            s2: sg && ss,
            s_group: st == Structure::Group,
            s_indiv: st == Structure::Individual,
            r_group: sg && !ss,
            eta12: sg && !ss,
            eta: !(sg && !ss),
        }
    }
}

impl ChainState {
    pub fn n_effects(&self) -> usize {
        self.p * self.group_size
    }

    /// Rebuild `beta = omega * b` for the sparse-group spike-and-slab layout.
    pub fn sync_beta_from_b(&mut self) {
        for ((beta, &w), &b) in self.beta.iter_mut().zip(&self.omega).zip(&self.b) {
            *beta = w * b;
        }
    }

    /// Structural checks: field presence, support, and the spike-and-slab
    /// indicator/coefficient equivalences.
    pub fn check(&self, method: Method) -> Result<()> {
        let lay = Layout::of(method);
        let pl = self.n_effects();
        let mut problems = Vec::new();
        let mut want_len = |name: &str, len: usize, used: bool, full: usize| {
            let expect = if used { full } else { 0 };
            if len != expect {
                problems.push(format!("{name} has length {len}, expected {expect}"));
            }
        };
        want_len("beta", self.beta.len(), true, pl);
        want_len("b", self.b.len(), lay.b, pl);
        want_len("omega", self.omega.len(), lay.omega, pl);
        want_len("phi_b", self.phi_b.len(), lay.phi_b, self.p);
        want_len("phi_w", self.phi_w.len(), lay.phi_w, pl);
        want_len("s_group", self.s_group.len(), lay.s_group, self.p);
        want_len("s_indiv", self.s_indiv.len(), lay.s_indiv, pl);
        want_len("r_group", self.r_group.len(), lay.r_group, self.p);
        let scalars = [
            ("nu", self.nu, lay.nu),
            ("sigma2", self.sigma2, lay.sigma2),
            ("s2", self.s2, lay.s2),
            ("eta", self.eta, lay.eta),
            ("eta1", self.eta1, lay.eta12),
            ("eta2", self.eta2, lay.eta12),
        ];
        for (name, v, used) in scalars {
            if used && !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
            if !used && !v.is_nan() {
                problems.push(format!("{name} is not used by {method}"));
            }
        }
        for (name, v, used) in [("pi0", self.pi0, lay.pi0), ("pi1", self.pi1, lay.pi1)] {
            if used && !(0.0..=1.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 1], got {v}"));
            }
            if !used && !v.is_nan() {
                problems.push(format!("{name} is not used by {method}"));
            }
        }
        if lay.u_latent && self.u_latent.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
            problems.push("u_latent must be positive".to_string());
        }
        if !lay.u_latent && !self.u_latent.is_empty() {
            problems.push(format!("u_latent is not used by {method}"));
        }
        if lay.omega && self.omega.iter().any(|&w| !(w >= 0.0)) {
            problems.push("omega must be nonnegative".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }

        let l = self.group_size;
        let mut inconsistent = Vec::new();
        if lay.b {
            for (c, ((&beta, &w), &b)) in self.beta.iter().zip(&self.omega).zip(&self.b).enumerate() {
                if beta.to_bits() != (w * b).to_bits() {
                    inconsistent.push(format!("beta[{c}] != omega * b"));
                }
            }
            for j in 0..self.p {
                let nonzero = self.b[j * l..(j + 1) * l].iter().any(|&v| v != 0.0);
                if nonzero != self.phi_b[j] {
                    inconsistent.push(format!("phi_b[{j}] disagrees with b"));
                }
            }
            for c in 0..pl {
                if (self.omega[c] != 0.0) != self.phi_w[c] {
                    inconsistent.push(format!("phi_w[{c}] disagrees with omega"));
                }
            }
        } else if lay.phi_b {
            for j in 0..self.p {
                let nonzero = self.beta[j * l..(j + 1) * l].iter().any(|&v| v != 0.0);
                if nonzero != self.phi_b[j] {
                    inconsistent.push(format!("phi_b[{j}] disagrees with beta"));
                }
            }
        } else if lay.phi_w {
            for c in 0..pl {
                if (self.beta[c] != 0.0) != self.phi_w[c] {
                    inconsistent.push(format!("phi_w[{c}] disagrees with beta"));
                }
            }
        }
        if inconsistent.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(inconsistent))
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.alpha.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|v| v.is_finite())
            && self.beta.iter().all(|v| v.is_finite())
            && self.u_latent.iter().all(|v| v.is_finite())
            && [self.nu, self.sigma2, self.pi0, self.pi1, self.s2, self.eta, self.eta1, self.eta2]
                .iter()
                .all(|v| v.is_nan() || v.is_finite())
    }
}
