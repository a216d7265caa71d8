//! Exact draws from each method's joint prior and from the likelihood.

use nalgebra::DVector;
use rand::Rng;

use super::state::{ChainState, Layout};
use crate::data::GxEDataset;
use crate::distributions::{
    sample_bernoulli, sample_beta, sample_exponential, sample_gamma, sample_inverse_gamma,
    sample_inverse_gaussian, sample_mvn, sample_truncated_normal_positive, std_normal, KAPPA2,
};
use crate::error::{Error, Result};
use crate::method::{Hyperparameters, Method, Structure};

const MAX_REJECTIONS: usize = 10_000_000;

fn laplace<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    let x = sample_exponential(rate, rng)?;
    Ok(if rng.random::<bool>() { x } else { -x })
}

/// Draw every parameter of `method` from its prior.
///
/// EM-managed `eta` is not a random quantity; it must be pinned with
/// `fixed_eta` for the draw to define a proper joint distribution.
pub fn sample_prior<R: Rng + ?Sized>(
    ds: &GxEDataset,
    method: Method,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<ChainState> {
    let (n, p, l, q, k) = (ds.n(), ds.p(), ds.group_size(), ds.q(), ds.k());
    let pl = p * l;
    let lay = Layout::of(method);
    if method.uses_em() && hyper.fixed_eta.is_none() {
        return Err(Error::Config(vec![format!(
            "{method} sets eta by EM; a prior draw needs fixed_eta"
        )]));
    }
    if !method.robust() && !(hyper.a_sigma > 0.0 && hyper.b_sigma > 0.0) {
        return Err(Error::Config(vec![
            "a prior draw of sigma2 needs a_sigma > 0 and b_sigma > 0".to_string(),
        ]));
    }
    let nan = f64::NAN;

    let alpha = sample_mvn(&DVector::zeros(q), &hyper.sigma_alpha0.matrix(q)?, rng)?;
    let theta = sample_mvn(&DVector::zeros(k), &hyper.sigma_theta0.matrix(k)?, rng)?;
    let nu = if lay.nu { sample_gamma(hyper.c, hyper.d, rng)? } else { nan };
    let u_latent = if lay.u_latent {
        let mut u = DVector::zeros(n);
        for v in u.iter_mut() {
            *v = sample_exponential(nu, rng)?;
        }
        u
    } else {
        DVector::zeros(0)
    };
    let sigma2 = if lay.sigma2 {
        sample_inverse_gamma(hyper.a_sigma, hyper.b_sigma, rng)?
    } else {
        nan
    };
    let tau = if method.sigma_scaled_prior() { sigma2 } else { 1.0 };
    let draw_eta = |shape_free: bool, rng: &mut R| -> Result<f64> {
        match hyper.fixed_eta {
            Some(v) => Ok(v),
            None if shape_free => sample_gamma(hyper.d1, hyper.d2, rng),
            None => unreachable!(),
        }
    };

    let mut st = ChainState {
        p,
        group_size: l,
        alpha,
        theta,
        b: Vec::new(),
        omega: Vec::new(),
        beta: vec![0.0; pl],
        phi_b: Vec::new(),
        phi_w: Vec::new(),
        u_latent,
        nu,
        sigma2,
        pi0: nan,
        pi1: nan,
        s2: nan,
        s_group: Vec::new(),
        s_indiv: Vec::new(),
        r_group: Vec::new(),
        eta1: nan,
        eta2: nan,
        eta: nan,
    };
    if lay.pi0 && lay.pi1 {
        // scales vanish in inactive groups, which tilts the Beta x Beta
        // hyperprior by Z^p, Z = pi0 + (1 - pi0)(1 - pi1)^L
        let mut tries = 0;
        loop {
            let pi0 = sample_beta(hyper.a0, hyper.b0, rng)?;
            let pi1 = sample_beta(hyper.a1, hyper.b1, rng)?;
            let z = pi0 + (1.0 - pi0) * (1.0 - pi1).powi(l as i32);
            if rng.random::<f64>() < z.powi(p as i32) {
                st.pi0 = pi0;
                st.pi1 = pi1;
                break;
            }
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(Error::Numeric {
                    block: "pi0, pi1 prior".to_string(),
                    message: "rejection sampler exhausted".to_string(),
                });
            }
        }
    } else if lay.pi0 {
        st.pi0 = sample_beta(hyper.a0, hyper.b0, rng)?;
    } else if lay.pi1 {
        st.pi1 = sample_beta(hyper.a1, hyper.b1, rng)?;
    }

    match (method.structure(), method.spike_slab()) {
        (Structure::SparseGroup, true) => {
            st.eta = draw_eta(false, rng)?;
            st.s2 = sample_inverse_gamma(hyper.a_s, st.eta, rng)?;
            st.b = vec![0.0; pl];
            st.omega = vec![0.0; pl];
            st.phi_b = vec![false; p];
            st.phi_w = vec![false; pl];
            let z = st.pi0 + (1.0 - st.pi0) * (1.0 - st.pi1).powi(l as i32);
            for j in 0..p {
                if sample_bernoulli(st.pi0 / z, rng)? {
                    st.phi_b[j] = true;
                    for c in j * l..(j + 1) * l {
                        st.b[c] = std_normal(rng);
                    }
                }
            }
            for c in 0..pl {
                if st.phi_b[c / l] && sample_bernoulli(st.pi1, rng)? {
                    st.phi_w[c] = true;
                    st.omega[c] = sample_truncated_normal_positive(0.0, st.s2, rng)?;
                }
            }
            st.sync_beta_from_b();
        }
        (Structure::Group, ss) => {
            st.eta = draw_eta(true, rng)?;
            st.s_group = (0..p)
                .map(|_| sample_gamma((l as f64 + 1.0) / 2.0, st.eta / 2.0, rng))
                .collect::<Result<_>>()?;
            if ss {
                st.phi_b = vec![false; p];
            }
            for j in 0..p {
                let active = if ss { sample_bernoulli(st.pi0, rng)? } else { true };
                if ss {
                    st.phi_b[j] = active;
                }
                if active {
                    let sd = (st.s_group[j] * tau).sqrt();
                    for c in j * l..(j + 1) * l {
                        st.beta[c] = sd * std_normal(rng);
                    }
                }
            }
        }
        (Structure::Individual, ss) => {
            st.eta = draw_eta(true, rng)?;
            st.s_indiv = (0..pl)
                .map(|_| sample_gamma(1.0, st.eta / 2.0, rng))
                .collect::<Result<_>>()?;
            if ss {
                st.phi_w = vec![false; pl];
            }
            for c in 0..pl {
                let active = if ss { sample_bernoulli(st.pi1, rng)? } else { true };
                if ss {
                    st.phi_w[c] = active;
                }
                if active {
                    st.beta[c] = (st.s_indiv[c] * tau).sqrt() * std_normal(rng);
                }
            }
        }
        (Structure::SparseGroup, false) => {
            // Marginally (eta1, eta2, beta / sqrt(tau)) has density proportional to
            // eta2^{pL/2} exp(-d1 eta1 - d2 eta2 - sqrt(eta1) sum_j |beta_j| - sqrt(eta2) sum |beta_jl|):
            // propose Laplace coefficients, accept on the group-norm penalty.
            let fixed = hyper.fixed_eta;
            let mut tries = 0usize;
            let (eta1, eta2, scaled) = loop {
                tries += 1;
                if tries > MAX_REJECTIONS {
                    return Err(Error::numeric("prior", "sparse-group prior rejection did not terminate"));
                }
                let eta1 = match fixed {
                    Some(v) => v,
                    None => sample_exponential(hyper.d1, rng)?,
                };
                let eta2 = match fixed {
                    Some(v) => v,
                    None => sample_exponential(hyper.d2, rng)?,
                };
                let rate = eta2.sqrt();
                if fixed.is_some() {
                    // groups are independent given eta; accept each separately
                    let mut scaled = vec![0.0; pl];
                    for j in 0..p {
                        loop {
                            let mut norm2 = 0.0;
                            for v in &mut scaled[j * l..(j + 1) * l] {
                                *v = laplace(rate, rng)?;
                                norm2 += *v * *v;
                            }
                            let accept: f64 = rng.random();
                            if accept < (-eta1.sqrt() * norm2.sqrt()).exp() {
                                break;
                            }
                        }
                    }
                    break (eta1, eta2, scaled);
                }
                let mut scaled = vec![0.0; pl];
                let mut penalty = 0.0;
                for j in 0..p {
                    let mut norm2 = 0.0;
                    for v in &mut scaled[j * l..(j + 1) * l] {
                        *v = laplace(rate, rng)?;
                        norm2 += *v * *v;
                    }
                    penalty += norm2.sqrt();
                }
                let accept: f64 = rng.random();
                if accept < (-eta1.sqrt() * penalty).exp() {
                    break (eta1, eta2, scaled);
                }
            };
            st.eta1 = eta1;
            st.eta2 = eta2;
            st.r_group = vec![0.0; p];
            st.omega = vec![0.0; pl];
            let sd = tau.sqrt();
            for j in 0..p {
                let norm2: f64 = scaled[j * l..(j + 1) * l].iter().map(|v| v * v).sum();
                st.r_group[j] = 1.0 / sample_inverse_gaussian((eta1 / norm2).sqrt(), eta1, rng)?;
                for c in j * l..(j + 1) * l {
                    st.omega[c] = 1.0 / sample_inverse_gaussian((eta2 / (scaled[c] * scaled[c])).sqrt(), eta2, rng)?;
                    st.beta[c] = sd * scaled[c];
                }
            }
        }
    }
    st.check(method)?;
    Ok(st)
}

/// Draw a response from the likelihood given the state.
pub fn sample_response<R: Rng + ?Sized>(
    ds: &GxEDataset,
    method: Method,
    st: &ChainState,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let mut y = ds.linear_predictor(&st.alpha, &st.theta, &st.beta)?;
    for (i, v) in y.iter_mut().enumerate() {
        let sd = if method.robust() {
            (KAPPA2 * st.u_latent[i] / st.nu).sqrt()
        } else {
            st.sigma2.sqrt()
        };
        *v += sd * std_normal(rng);
    }
    Ok(y)
}
