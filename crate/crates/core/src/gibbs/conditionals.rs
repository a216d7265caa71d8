//! Closed-form pieces of the full conditionals, free of sampler state so
//! they can be checked against brute-force computations.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{log_norm_cdf, logistic, CanonicalGaussian, KAPPA2};
use crate::error::Result;

/// Residual magnitude floor in the latent-scale conditional.
pub const RESIDUAL_FLOOR: f64 = 1e-10;
/// Floor applied to latent scales before they are inverted.
pub const LATENT_FLOOR: f64 = 1e-300;
pub const ETA_MIN: f64 = 1e-6;
pub const ETA_MAX: f64 = 1e6;

/// Mean of the inverse-Gaussian conditional of `1 / u_i`:
/// `sqrt(2 kappa^2 / residual^2)`. Its shape is `2 nu`.
pub fn latent_u_mean(residual: f64) -> f64 {
    let r = residual.abs().max(RESIDUAL_FLOOR);
    (2.0 * KAPPA2).sqrt() / r
}

/// Shape and rate of the Gamma conditional of `nu`.
pub fn nu_shape_rate(c: f64, d: f64, u: &[f64], resid: &[f64]) -> (f64, f64) {
    let n = u.len() as f64;
    let mut rate = d;
    for (&ui, &ri) in u.iter().zip(resid) {
        let ui = ui.max(LATENT_FLOOR);
        rate += ui + ri * ri / (2.0 * KAPPA2 * ui);
    }
    (c + 1.5 * n, rate)
}

/// Slab-versus-spike log Bayes factor for a Gaussian block with prior
/// `N(0, diag(prior_var))`, data precision `g` and data score `h`:
/// the slab marginal over the spike marginal.
///
/// Also returns the slab posterior in canonical form.
pub fn gaussian_slab(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    prior_var: &[f64],
    block: &str,
) -> Result<(f64, CanonicalGaussian)> {
    let mut q = g.clone();
    let mut log_det_prior = 0.0;
    for (i, &v) in prior_var.iter().enumerate() {
        q[(i, i)] += 1.0 / v;
        log_det_prior += v.ln();
    }
    let post = CanonicalGaussian::new(q, h.clone(), block)?;
    let log_bf = -0.5 * log_det_prior - 0.5 * post.log_det_precision() + 0.5 * post.quad();
    Ok((log_bf, post))
}

/// Posterior slab probability from prior slab probability and log Bayes factor.
pub fn slab_probability(prior: f64, log_bf: f64) -> f64 {
    if prior <= 0.0 {
        return 0.0;
    }
    if prior >= 1.0 {
        return 1.0;
    }
    let l = logistic(prior.ln() - (-prior).ln_1p() + log_bf);
    if l.is_nan() {
        // +inf - inf only arises from a degenerate Bayes factor
        if log_bf > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        l
    }
}

/// Scalar version of [`gaussian_slab`]: `(log BF, posterior mean, posterior variance)`.
pub fn scalar_slab(g: f64, h: f64, prior_var: f64) -> (f64, f64, f64) {
    let prec = g + 1.0 / prior_var;
    let var = 1.0 / prec;
    let log_bf = -0.5 * prior_var.ln() - 0.5 * prec.ln() + 0.5 * h * h * var;
    (log_bf, h * var, var)
}

/// Conditional of a within-group scale `omega >= 0` with half-normal slab
/// `N+(0, s2)`, when `beta = omega * b` enters the likelihood with data
/// precision `g` and score `h_beta` (score of the coefficient itself).
///
/// Returns `(log BF, mean, variance)` of the `N+` slab posterior.
pub fn omega_slab(b: f64, g: f64, h_beta: f64, s2: f64) -> (f64, f64, f64) {
    let prec = 1.0 / s2 + b * b * g;
    let var = 1.0 / prec;
    let h = b * h_beta;
    let mu = h * var;
    let sd = var.sqrt();
    let log_bf = std::f64::consts::LN_2 + 0.5 * var.ln() - 0.5 * s2.ln() + 0.5 * h * h * var + log_norm_cdf(mu / sd);
    (log_bf, mu, var)
}

/// Monte Carlo EM update of `eta` from a window of `s2` draws:
/// `a_s / mean(1 / s2)`, clamped. An empty window keeps `prev`.
pub fn em_eta(window: &[f64], a_s: f64, prev: f64) -> f64 {
    if window.is_empty() {
        return prev;
    }
    let mean_inv = window.iter().map(|s| 1.0 / s).sum::<f64>() / window.len() as f64;
    let eta = a_s / mean_inv;
    if eta.is_nan() {
        prev
    } else {
        eta.clamp(ETA_MIN, ETA_MAX)
    }
}

/// Shape and scale of the inverse-gamma conditional of `s2`.
pub fn s2_shape_scale(a_s: f64, eta: f64, omega: &[f64]) -> (f64, f64) {
    let active = omega.iter().filter(|&&w| w != 0.0).count() as f64;
    let ss: f64 = omega.iter().map(|w| w * w).sum();
    (a_s + 0.5 * active, eta + 0.5 * ss)
}

/// Beta parameters of a sparsity probability given indicator counts.
pub fn sparsity_posterior(a: f64, b: f64, active: usize, total: usize) -> (f64, f64) {
    (a + active as f64, b + (total - active) as f64)
}
