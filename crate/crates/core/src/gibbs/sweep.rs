use nalgebra::{DMatrix, DVector};

use super::conditionals::{
    em_eta, gaussian_slab, latent_u_mean, nu_shape_rate, omega_slab, s2_shape_scale, scalar_slab,
    slab_probability, sparsity_posterior, LATENT_FLOOR,
};
use super::state::{ChainState, Layout};
use super::workspace::ConditionalWorkspace;
use crate::data::GxEDataset;
use crate::distributions::{
    sample_bernoulli, sample_beta, sample_gamma, sample_inverse_gamma, sample_inverse_gaussian,
    sample_truncated_normal_positive, std_normal, CanonicalGaussian,
};
use crate::error::{Error, Result};
use crate::method::{Hyperparameters, Method, MethodConfig, Structure};
use rand::Rng;

/// Starting point of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// `b ~ N(0, I)`, unit scales, all indicators on.
    Default,
    /// As `Default` with an extra `N(0, 4)` perturbation of `b`.
    Jittered,
}

/// Draw from the density proportional to `s^{-1/2} exp(-(a s + b / s) / 2)`.
fn gig_half<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if b > 0.0 {
        let x = sample_inverse_gaussian((a / b).sqrt(), a, rng)?;
        Ok((1.0 / x).max(LATENT_FLOOR))
    } else {
        sample_gamma(0.5, a / 2.0, rng)
    }
}

/// Gibbs sampler for one method on one design.
///
/// Holds the residual cache for the state it was last attached to; `sweep`
/// must be called with that same state.
pub struct Sampler<'a> {
    ds: &'a GxEDataset,
    y: DVector<f64>,
    method: Method,
    layout: Layout,
    hyper: Hyperparameters,
    prec_alpha0: DMatrix<f64>,
    prec_theta0: DMatrix<f64>,
    ws: ConditionalWorkspace,
    em_window: Vec<f64>,
    refresh_every: usize,
    sweeps: usize,
    g: DMatrix<f64>,
    c: DVector<f64>,
    gq: DMatrix<f64>,
    cq: DVector<f64>,
    gk: DMatrix<f64>,
    ck: DVector<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(ds: &'a GxEDataset, config: &MethodConfig) -> Result<Self> {
        Self::with_response(ds, ds.y().clone(), config)
    }

    pub fn with_response(ds: &'a GxEDataset, y: DVector<f64>, config: &MethodConfig) -> Result<Self> {
        config.hyper.validate()?;
        if y.len() != ds.n() {
            return Err(Error::Dimension(format!("response length {} != {}", y.len(), ds.n())));
        }
        let method = config.method();
        let (q, k, l) = (ds.q(), ds.k(), ds.group_size());
        Ok(Sampler {
            ds,
            y,
            method,
            layout: Layout::of(method),
            prec_alpha0: config.hyper.sigma_alpha0.precision(q)?,
            prec_theta0: config.hyper.sigma_theta0.precision(k)?,
            hyper: config.hyper.clone(),
            ws: ConditionalWorkspace::new(ds, !method.robust()),
            em_window: Vec::with_capacity(config.hyper.em_window),
            refresh_every: 100,
            sweeps: 0,
            g: DMatrix::zeros(l, l),
            c: DVector::zeros(l),
            gq: DMatrix::zeros(q, q),
            cq: DVector::zeros(q),
            gk: DMatrix::zeros(k, k),
            ck: DVector::zeros(k),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dataset(&self) -> &GxEDataset {
        self.ds
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn residual(&self) -> &DVector<f64> {
        &self.ws.resid
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Sweeps between full residual recomputations; 0 never recomputes.
    pub fn set_refresh_interval(&mut self, every: usize) {
        self.refresh_every = every;
    }

    pub fn set_response(&mut self, y: DVector<f64>, state: &ChainState) -> Result<()> {
        if y.len() != self.ds.n() {
            return Err(Error::Dimension(format!("response length {} != {}", y.len(), self.ds.n())));
        }
        self.y = y;
        self.attach(state);
        Ok(())
    }

    /// Rebuild the residual cache for `state`.
    pub fn attach(&mut self, state: &ChainState) {
        self.ws.refresh(&self.y, self.ds, state);
    }

    /// Residual recomputed from scratch, for drift checks.
    pub fn full_residual(&self, state: &ChainState) -> DVector<f64> {
        ConditionalWorkspace::full_residual(&self.y, self.ds, state)
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, init: Init, rng: &mut R) -> Result<ChainState> {
        let ds = self.ds;
        let (p, l, n) = (ds.p(), ds.group_size(), ds.n());
        let pl = p * l;
        let lay = self.layout;
        let eta0 = self.hyper.fixed_eta.unwrap_or(1.0);
        let draws: Vec<f64> = (0..pl)
            .map(|_| {
                let z = std_normal(rng);
                match init {
                    Init::Default => z,
                    Init::Jittered => z + 2.0 * std_normal(rng),
                }
            })
            .collect();
        let var_y = if n > 1 {
            let m = self.y.mean();
            self.y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let nan = f64::NAN;
        let state = ChainState {
            p,
            group_size: l,
            alpha: DVector::zeros(ds.q()),
            theta: DVector::zeros(ds.k()),
            b: if lay.b { draws.clone() } else { Vec::new() },
            omega: if lay.omega { vec![1.0; pl] } else { Vec::new() },
            beta: draws,
            phi_b: if lay.phi_b { vec![true; p] } else { Vec::new() },
            phi_w: if lay.phi_w { vec![true; pl] } else { Vec::new() },
            u_latent: if lay.u_latent { DVector::from_element(n, 1.0) } else { DVector::zeros(0) },
            nu: if lay.nu { 1.0 } else { nan },
            sigma2: if lay.sigma2 {
                if var_y > 0.0 && var_y.is_finite() {
                    var_y
                } else {
                    1.0
                }
            } else {
                nan
            },
            pi0: if lay.pi0 { 0.5 } else { nan },
            pi1: if lay.pi1 { 0.5 } else { nan },
            s2: if lay.s2 { 1.0 } else { nan },
            s_group: if lay.s_group { vec![1.0; p] } else { Vec::new() },
            s_indiv: if lay.s_indiv { vec![1.0; pl] } else { Vec::new() },
            r_group: if lay.r_group { vec![1.0; p] } else { Vec::new() },
            eta1: if lay.eta12 { eta0 } else { nan },
            eta2: if lay.eta12 { eta0 } else { nan },
            eta: if lay.eta { eta0 } else { nan },
        };
        state.check(self.method)?;
        Ok(state)
    }

    fn non_finite(&self, block: impl Into<String>) -> Error {
        Error::NonFinite {
            iteration: self.sweeps,
            block: block.into(),
        }
    }

    /// One update of every block, in fixed order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        if self.method.robust() {
            self.update_latent(st, rng)?;
            self.update_nu(st, rng)?;
            if !st.nu.is_finite() {
                return Err(self.non_finite("nu"));
            }
            self.ws.set_precision_latent(st.nu, &st.u_latent);
        } else {
            self.update_sigma2(st, rng)?;
            if !st.sigma2.is_finite() {
                return Err(self.non_finite("sigma2"));
            }
            self.ws.set_precision_common(st.sigma2);
        }
        self.update_alpha(st, rng)?;
        self.update_theta(st, rng)?;
        if st.alpha.iter().chain(st.theta.iter()).any(|v| !v.is_finite()) {
            return Err(self.non_finite("alpha/theta"));
        }
        let l = self.ds.group_size();
        for j in 0..self.ds.p() {
            self.update_group(st, j, rng)?;
            if st.beta[j * l..(j + 1) * l].iter().any(|v| !v.is_finite()) {
                return Err(self.non_finite(format!("group {j}")));
            }
        }
        self.update_globals(st, rng)?;
        self.sweeps += 1;
        if self.refresh_every > 0 && self.sweeps.is_multiple_of(self.refresh_every) {
            self.attach(st);
        }
        if !st.all_finite() || self.ws.resid.iter().any(|v| !v.is_finite()) {
            return Err(self.non_finite("sweep"));
        }
        Ok(())
    }

    fn update_latent<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let shape = 2.0 * st.nu;
        for (u, &r) in st.u_latent.iter_mut().zip(self.ws.resid.iter()) {
            let inv = sample_inverse_gaussian(latent_u_mean(r), shape, rng)?;
            *u = (1.0 / inv).max(LATENT_FLOOR);
        }
        Ok(())
    }

    fn update_nu<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let (shape, rate) = nu_shape_rate(
            self.hyper.c,
            self.hyper.d,
            st.u_latent.as_slice(),
            self.ws.resid.as_slice(),
        );
        st.nu = sample_gamma(shape, rate, rng)?;
        Ok(())
    }

    /// Extra shape count and quadratic form that the coefficient prior
    /// contributes to the `sigma2` conditional.
    fn sigma2_prior_terms(&self, st: &ChainState) -> (f64, f64) {
        let l = st.group_size;
        match self.method {
            Method::BgSs => {
                let mut count = 0.0;
                let mut quad = 0.0;
                for j in 0..st.p {
                    if st.phi_b[j] {
                        count += l as f64;
                        let nb: f64 = st.beta[j * l..(j + 1) * l].iter().map(|b| b * b).sum();
                        quad += nb / st.s_group[j];
                    }
                }
                (count, quad)
            }
            Method::BlSs => {
                let mut count = 0.0;
                let mut quad = 0.0;
                for c in 0..st.n_effects() {
                    if st.phi_w[c] {
                        count += 1.0;
                        quad += st.beta[c] * st.beta[c] / st.s_indiv[c];
                    }
                }
                (count, quad)
            }
            Method::Bsg => {
                let mut quad = 0.0;
                for j in 0..st.p {
                    for c in j * l..(j + 1) * l {
                        quad += st.beta[c] * st.beta[c] * (1.0 / st.r_group[j] + 1.0 / st.omega[c]);
                    }
                }
                (st.n_effects() as f64, quad)
            }
            Method::Bg => {
                let mut quad = 0.0;
                for j in 0..st.p {
                    let nb: f64 = st.beta[j * l..(j + 1) * l].iter().map(|b| b * b).sum();
                    quad += nb / st.s_group[j];
                }
                (st.n_effects() as f64, quad)
            }
            Method::Bl => {
                let quad = (0..st.n_effects()).map(|c| st.beta[c] * st.beta[c] / st.s_indiv[c]).sum();
                (st.n_effects() as f64, quad)
            }
            _ => (0.0, 0.0),
        }
    }

    fn update_sigma2<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let (extra, quad) = self.sigma2_prior_terms(st);
        let ssr = self.ws.resid.norm_squared();
        let shape = self.hyper.a_sigma + 0.5 * (self.ds.n() as f64 + extra);
        let scale = (self.hyper.b_sigma + 0.5 * (ssr + quad)).max(f64::MIN_POSITIVE);
        st.sigma2 = sample_inverse_gamma(shape, scale, rng)?;
        Ok(())
    }

    fn update_alpha<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        if self.ds.q() == 0 {
            return Ok(());
        }
        self.ws.w_cross(self.ds, &mut self.gq, &mut self.cq);
        let h = &self.cq + &self.gq * &st.alpha;
        let post = CanonicalGaussian::new(&self.gq + &self.prec_alpha0, h, "alpha")?;
        let new = post.sample(rng);
        let delta: Vec<f64> = (&new - &st.alpha).iter().copied().collect();
        self.ws.subtract(self.ds.w().columns(0, self.ds.q()), &delta);
        st.alpha = new;
        Ok(())
    }

    fn update_theta<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        if self.ds.k() == 0 {
            return Ok(());
        }
        self.ws.e_cross(self.ds, &mut self.gk, &mut self.ck);
        let h = &self.ck + &self.gk * &st.theta;
        let post = CanonicalGaussian::new(&self.gk + &self.prec_theta0, h, "theta")?;
        let new = post.sample(rng);
        let delta: Vec<f64> = (&new - &st.theta).iter().copied().collect();
        self.ws.subtract(self.ds.e().columns(0, self.ds.k()), &delta);
        st.theta = new;
        Ok(())
    }

    /// Prior variance multiplier of the coefficients.
    fn tau(&self, st: &ChainState) -> f64 {
        if self.method.sigma_scaled_prior() {
            st.sigma2
        } else {
            1.0
        }
    }

    /// Remove `delta` (change in a group's coefficients) from `c = U_j' P r`.
    fn shift_score(&mut self, delta: &[f64]) {
        for (b, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                self.c.axpy(-d, &self.g.column(b), 1.0);
            }
        }
    }

    fn update_group<R: Rng + ?Sized>(&mut self, st: &mut ChainState, j: usize, rng: &mut R) -> Result<()> {
        let l = st.group_size;
        let range = j * l..(j + 1) * l;
        self.ws.group_cross(self.ds, j, &mut self.g, &mut self.c);
        let old: Vec<f64> = st.beta[range.clone()].to_vec();
        // score of the group's coefficients against the partial residual
        let h_full = &self.c + &self.g * DVector::from_column_slice(&old);
        let tau = self.tau(st);

        match (self.method.structure(), self.method.spike_slab()) {
            (Structure::SparseGroup, true) => {
                let w = &st.omega[range.clone()];
                let gw = DMatrix::from_fn(l, l, |a, b| w[a] * self.g[(a, b)] * w[b]);
                let hw = DVector::from_fn(l, |a, _| w[a] * h_full[a]);
                // a group with a nonzero scale cannot be off; with all scales
                // zero the data carry no information about b_j
                let (_, post) = gaussian_slab(&gw, &hw, &vec![1.0; l], "b_j")?;
                let prob = if w.iter().any(|&v| v != 0.0) { 1.0 } else { st.pi0 };
                let slab = sample_bernoulli(prob, rng)?;
                let b_new = if slab { post.sample(rng) } else { DVector::zeros(l) };
                st.phi_b[j] = b_new.iter().any(|&v| v != 0.0);
                let mut delta = vec![0.0; l];
                for (a, c) in range.clone().enumerate() {
                    st.b[c] = b_new[a];
                    let beta = st.omega[c] * st.b[c];
                    delta[a] = beta - st.beta[c];
                    st.beta[c] = beta;
                }
                self.shift_score(&delta);
                for (a, c) in range.clone().enumerate() {
                    if !st.phi_b[j] {
                        // beta is already zero here
                        st.omega[c] = 0.0;
                        st.phi_w[c] = false;
                        continue;
                    }
                    let g_ll = self.g[(a, a)];
                    let h_beta = self.c[a] + g_ll * st.beta[c];
                    let (log_bf, mu, var) = omega_slab(st.b[c], g_ll, h_beta, st.s2);
                    let prob = slab_probability(st.pi1, log_bf);
                    let w_new = if sample_bernoulli(prob, rng)? {
                        sample_truncated_normal_positive(mu, var, rng)?
                    } else {
                        0.0
                    };
                    st.omega[c] = w_new;
                    st.phi_w[c] = w_new != 0.0;
                    let beta = w_new * st.b[c];
                    let d = beta - st.beta[c];
                    st.beta[c] = beta;
                    if d != 0.0 {
                        self.c.axpy(-d, &self.g.column(a), 1.0);
                    }
                }
            }
            (Structure::Group, true) => {
                let d = st.s_group[j] * tau;
                let (log_bf, post) = gaussian_slab(&self.g, &h_full, &vec![d; l], "beta_j")?;
                let prob = slab_probability(st.pi0, log_bf);
                let new = if sample_bernoulli(prob, rng)? { post.sample(rng) } else { DVector::zeros(l) };
                st.phi_b[j] = new.iter().any(|&v| v != 0.0);
                st.beta[range.clone()].copy_from_slice(new.as_slice());
                let eta = st.eta;
                st.s_group[j] = if st.phi_b[j] {
                    gig_half(eta, new.norm_squared() / tau, rng)?
                } else {
                    sample_gamma((l as f64 + 1.0) / 2.0, eta / 2.0, rng)?
                };
            }
            (Structure::Individual, true) => {
                for (a, c) in range.clone().enumerate() {
                    let g_ll = self.g[(a, a)];
                    let h = self.c[a] + g_ll * st.beta[c];
                    let (log_bf, mean, var) = scalar_slab(g_ll, h, st.s_indiv[c] * tau);
                    let prob = slab_probability(st.pi1, log_bf);
                    let new = if sample_bernoulli(prob, rng)? {
                        mean + var.sqrt() * std_normal(rng)
                    } else {
                        0.0
                    };
                    st.phi_w[c] = new != 0.0;
                    let d = new - st.beta[c];
                    st.beta[c] = new;
                    if d != 0.0 {
                        self.c.axpy(-d, &self.g.column(a), 1.0);
                    }
                }
                let eta = st.eta;
                for c in range.clone() {
                    st.s_indiv[c] = if st.phi_w[c] {
                        gig_half(eta, st.beta[c] * st.beta[c] / tau, rng)?
                    } else {
                        sample_gamma(1.0, eta / 2.0, rng)?
                    };
                }
            }
            (structure, false) => {
                let prior: Vec<f64> = match structure {
                    Structure::Group => vec![st.s_group[j] * tau; l],
                    Structure::Individual => st.s_indiv[range.clone()].iter().map(|s| s * tau).collect(),
                    Structure::SparseGroup => st.omega[range.clone()]
                        .iter()
                        .map(|w| tau / (1.0 / st.r_group[j] + 1.0 / w))
                        .collect(),
                };
                let (_, post) = gaussian_slab(&self.g, &h_full, &prior, "beta_j")?;
                let new = post.sample(rng);
                st.beta[range.clone()].copy_from_slice(new.as_slice());
                match structure {
                    Structure::Group => {
                        st.s_group[j] = gig_half(st.eta, new.norm_squared() / tau, rng)?;
                    }
                    Structure::Individual => {
                        for c in range.clone() {
                            st.s_indiv[c] = gig_half(st.eta, st.beta[c] * st.beta[c] / tau, rng)?;
                        }
                    }
                    Structure::SparseGroup => {
                        st.r_group[j] = gig_half(st.eta1, new.norm_squared() / tau, rng)?;
                        for c in range.clone() {
                            st.omega[c] = gig_half(st.eta2, st.beta[c] * st.beta[c] / tau, rng)?;
                        }
                    }
                }
            }
        }

        let delta: Vec<f64> = range.clone().zip(&old).map(|(c, o)| st.beta[c] - o).collect();
        let l = self.ds.group_size();
        self.ws.subtract(self.ds.u().columns(j * l, l), &delta);
        Ok(())
    }

    fn update_globals<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let h = &self.hyper;
        let (p, l) = (st.p, st.group_size);
        let pl = p * l;
        let lay = self.layout;
        if lay.pi0 {
            let active = st.phi_b.iter().filter(|&&f| f).count();
            let (a, b) = sparsity_posterior(h.a0, h.b0, active, p);
            st.pi0 = sample_beta(a, b, rng)?;
        }
        if lay.pi1 {
            let active = st.phi_w.iter().filter(|&&f| f).count();
            let (a, b) = sparsity_posterior(h.a1, h.b1, active, pl);
            st.pi1 = sample_beta(a, b, rng)?;
        }
        let fixed = h.fixed_eta.is_some();
        if lay.s2 {
            let (shape, scale) = s2_shape_scale(h.a_s, st.eta, &st.omega);
            st.s2 = sample_inverse_gamma(shape, scale, rng)?;
            if !fixed {
                self.em_window.push(st.s2);
                if self.em_window.len() >= h.em_window {
                    st.eta = em_eta(&self.em_window, h.a_s, st.eta);
                    self.em_window.clear();
                }
            }
        } else if lay.eta && !fixed {
            let (shape, sum) = match self.method.structure() {
                Structure::Group => (h.d1 + 0.5 * (p * (l + 1)) as f64, st.s_group.iter().sum::<f64>()),
                _ => (h.d1 + pl as f64, st.s_indiv.iter().sum::<f64>()),
            };
            st.eta = sample_gamma(shape, h.d2 + 0.5 * sum, rng)?;
        }
        if lay.eta12 && !fixed {
            let sum_r: f64 = st.r_group.iter().sum();
            let sum_w: f64 = st.omega.iter().sum();
            st.eta1 = sample_gamma(0.5 * p as f64 + 1.0, h.d1 + 0.5 * sum_r, rng)?;
            st.eta2 = sample_gamma(pl as f64 + 1.0, h.d2 + 0.5 * sum_w, rng)?;
        }
        Ok(())
    }
}
