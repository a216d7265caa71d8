//! Random-variate generation for every full conditional used by the samplers.
//!
//! Parameterizations are fixed crate-wide:
//!
//! ```text
//! Gamma(shape, rate)              mean shape / rate
//! InvGamma(shape, scale)          mean scale / (shape - 1)
//! InvGaussian(mean, shape)        variance mean^3 / shape
//! N+(mu, sigma2)                  N(mu, sigma2) restricted to (0, inf)
//! ```
//!
//! All samplers take `&mut R where R: Rng`, so they work with an [`RngStream`]
//! or any other generator.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Scale constant of the Laplace scale-mixture representation at the median.
pub const KAPPA: f64 = 2.828_427_124_746_190_3; // sqrt(8)
pub const KAPPA2: f64 = 8.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Distinct stream ids select disjoint ChaCha streams under the same key, so
/// chains and replicates can run concurrently without sharing a generator.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A child stream for a sub-task, keyed by a derived seed so it never
    /// collides with the parent's own stream ids.
    pub fn substream(&self, tag: u64) -> RngStream {
        let derived = splitmix(self.seed ^ splitmix(self.stream_id.wrapping_add(0x9e37)));
        RngStream::new(derived, tag)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[inline]
fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Uniform on the open interval (0, 1).
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Inverse-Gaussian draw with the given mean and shape.
///
/// Transformation with multiple roots followed by the uniform root selection
/// step. The smaller root is evaluated in a cancellation-free form, and a draw
/// that underflows to zero is discarded.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> Result<f64> {
    check_positive("inverse-gaussian mean", mean)?;
    check_positive("inverse-gaussian shape", shape)?;
    loop {
        let z = std_normal(rng);
        let a = mean * z * z / (2.0 * shape);
        // mean * (1 + a - sqrt(a^2 + 2a)) without subtracting nearly equal terms
        let x = mean / (1.0 + a + (a * a + 2.0 * a).sqrt());
        let u: f64 = rng.random();
        let draw = if u <= mean / (mean + x) {
            x
        } else {
            mean * (mean / x)
        };
        if draw.is_finite() && draw > 0.0 {
            return Ok(draw);
        }
    }
}

/// Draw from N(mu, sigma2) truncated to (0, inf).
///
/// Inversion of the upper tail when the truncation point lies in the bulk,
/// exponential rejection (optimal rate) once it is more than half a standard
/// deviation into the right tail. Stable for any `mu / sigma`.
pub fn sample_truncated_normal_positive<R: Rng + ?Sized>(
    mu: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<f64> {
    if !mu.is_finite() {
        return Err(Error::Parameter(format!("truncated normal mean must be finite, got {mu}")));
    }
    check_positive("truncated normal variance", sigma2)?;
    let sigma = sigma2.sqrt();
    // lower bound in standard units
    let alpha = -mu / sigma;
    loop {
        let draw = if alpha <= 0.5 {
            let tail = norm_cdf(-alpha);
            let z = -norm_quantile(open_unit(rng) * tail);
            mu + sigma * z
        } else {
            let rate = 0.5 * (alpha + (alpha * alpha + 4.0).sqrt());
            let excess = std_exp(rng) / rate;
            let z = alpha + excess;
            let accept: f64 = rng.random();
            if accept > (-0.5 * (z - rate) * (z - rate)).exp() {
                continue;
            }
            sigma * excess
        };
        if draw.is_finite() && draw > 0.0 {
            return Ok(draw);
        }
    }
}

/// Multivariate normal draw with the given covariance.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let m = mean.len();
    if cov.nrows() != m || cov.ncols() != m {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, mean has length {m}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cholesky_checked(cov.clone(), "sample_mvn")?;
    let z = DVector::from_fn(m, |_, _| std_normal(rng));
    Ok(mean + chol.l() * z)
}

/// Cholesky factorization that rejects matrices which are not positive
/// definite within `1e-10 * trace`.
pub fn cholesky_checked(
    mut m: DMatrix<f64>,
    block: &str,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let dim = m.nrows();
    let trace: f64 = (0..dim).map(|i| m[(i, i)]).sum();
    if !trace.is_finite() {
        return Err(Error::numeric(block, "non-finite matrix"));
    }
    let tol = 1e-10 * trace.abs().max(f64::MIN_POSITIVE);
    // symmetrize
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let chol = nalgebra::Cholesky::new(m)
        .ok_or_else(|| Error::numeric(block, "matrix is not positive definite"))?;
    let l = chol.l_dirty();
    for i in 0..dim {
        let d = l[(i, i)];
        if !(d * d > tol) {
            return Err(Error::numeric(
                block,
                format!("pivot {i} is {:.3e}, below tolerance {tol:.3e}", d * d),
            ));
        }
    }
    Ok(chol)
}

/// A Gaussian full conditional in canonical form: density proportional to
/// `exp(-x'Qx/2 + h'x)`.
///
/// Besides drawing, it exposes the pieces of the slab marginal likelihood
/// used by spike-and-slab mixture weights: `log|Q|` and `h'Q^{-1}h`.
pub struct CanonicalGaussian {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    mean: DVector<f64>,
    quad: f64,
    log_det_precision: f64,
}

impl CanonicalGaussian {
    pub fn new(precision: DMatrix<f64>, h: DVector<f64>, block: &str) -> Result<Self> {
        let chol = cholesky_checked(precision, block)?;
        let l = chol.l_dirty();
        let log_det_precision = 2.0 * (0..h.len()).map(|i| l[(i, i)].ln()).sum::<f64>();
        let half = l
            .view_range(.., ..)
            .lower_triangle()
            .solve_lower_triangular(&h)
            .ok_or_else(|| Error::numeric(block, "triangular solve failed"))?;
        let quad = half.norm_squared();
        let mean = chol.solve(&h);
        Ok(CanonicalGaussian {
            chol,
            mean,
            quad,
            log_det_precision,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `h' Q^{-1} h`
    pub fn quad(&self) -> f64 {
        self.quad
    }

    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let m = self.mean.len();
        let z = DVector::from_fn(m, |_, _| std_normal(rng));
        // x = mean + L^{-T} z has covariance Q^{-1}
        let lt = self.chol.l().transpose();
        let offset = lt
            .solve_upper_triangular(&z)
            .expect("cholesky factor has a positive diagonal");
        &self.mean + offset
    }
}

/// One Laplace error through its exponential/normal scale mixture,
/// `kappa * sqrt(u) * z / nu` with `u ~ Exp(1)` and `z ~ N(0, 1)`.
///
/// With `kappa = sqrt(8)` the result has density `(nu/4) exp(-nu |e| / 2)`,
/// i.e. Laplace with scale `2 / nu`; see [`laplace_mixture_cdf`].
pub fn sample_laplace_error<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> Result<f64> {
    check_positive("nu", nu)?;
    let u = std_exp(rng);
    let z = std_normal(rng);
    Ok(KAPPA * u.sqrt() * z / nu)
}

/// CDF of the distribution produced by [`sample_laplace_error`].
pub fn laplace_mixture_cdf(x: f64, nu: f64) -> f64 {
    let scale = KAPPA2.sqrt() / (2.0_f64.sqrt() * nu);
    laplace_cdf(x, scale)
}

/// CDF of Laplace(0, scale).
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    let tail = 0.5 * (-x.abs() / scale).exp();
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let g = rand_distr::Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Parameter(format!("gamma({shape}, {rate}): {e}")))?;
    loop {
        let x = g.sample(rng);
        if x > 0.0 && x.is_finite() {
            return Ok(x);
        }
    }
}

pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    check_positive("inverse-gamma shape", shape)?;
    check_positive("inverse-gamma scale", scale)?;
    loop {
        let x = scale / sample_gamma(shape, 1.0, rng)?;
        if x > 0.0 && x.is_finite() {
            return Ok(x);
        }
    }
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    check_positive("beta a", a)?;
    check_positive("beta b", b)?;
    let d = rand_distr::Beta::new(a, b)
        .map_err(|e| Error::Parameter(format!("beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng).clamp(0.0, 1.0))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("bernoulli probability {p} outside [0, 1]")));
    }
    let u: f64 = rng.random();
    Ok(u < p)
}

/// Exponential draw with the given rate.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("exponential rate", rate)?;
    Ok(std_exp(rng) / rate)
}

/// Probability `1 / (1 + exp(-log_odds))`, exact at +-inf.
#[inline]
pub fn logistic(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// `ln Phi(x)`, accurate far into the lower tail.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-0.5 * erfc(x / std::f64::consts::SQRT_2)).ln_1p()
    } else if x > -8.0 {
        norm_cdf(x).ln()
    } else {
        let t = -x;
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio(t).ln()
    }
}

/// Mills ratio `(1 - Phi(t)) / phi(t)` by its continued fraction, for t >= 8.
fn mills_ratio(t: f64) -> f64 {
    let mut acc = t;
    for k in (1..=60).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 0);
        let mut c = RngStream::new(7, 1);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = RngStream::new(11, 0);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_inverse_gaussian(2.0, 4.0, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&x| x > 0.0 && x.is_finite()));
        let (m, v) = mean_var(&draws);
        assert!((m - 2.0).abs() / 2.0 < 0.01, "mean {m}");
        assert!((v - 2.0).abs() / 2.0 < 0.03, "variance {v}");
    }

    #[test]
    fn inverse_gaussian_extreme_parameters_stay_positive() {
        let mut rng = RngStream::new(3, 0);
        for &(mu, lam) in &[(1e10, 1e-3), (1e-8, 1e6), (4e10, 2.0), (1e-3, 1e-9)] {
            for _ in 0..2000 {
                let x = sample_inverse_gaussian(mu, lam, &mut rng).unwrap();
                assert!(x > 0.0 && x.is_finite(), "mu={mu} lam={lam} -> {x}");
            }
        }
        assert!(sample_inverse_gaussian(f64::NAN, 1.0, &mut rng).is_err());
        assert!(sample_inverse_gaussian(1.0, f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn half_normal_mean() {
        let mut rng = RngStream::new(5, 0);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_truncated_normal_positive(0.0, 1.0, &mut rng).unwrap())
            .collect();
        let (m, _) = mean_var(&draws);
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((m - expect).abs() / expect < 0.01, "mean {m}");
    }

    #[test]
    fn truncated_normal_deep_tail() {
        let mut rng = RngStream::new(5, 1);
        for &mu in &[-10.0, -40.0, -1e3] {
            for _ in 0..1000 {
                let x = sample_truncated_normal_positive(mu, 1.0, &mut rng).unwrap();
                assert!(x > 0.0 && x.is_finite());
            }
        }
        // the tail conditional mean of N(-10, 1) on (0, inf) is about 1/10
        let draws: Vec<f64> = (0..200_000)
            .map(|_| sample_truncated_normal_positive(-10.0, 1.0, &mut rng).unwrap())
            .collect();
        let (m, _) = mean_var(&draws);
        let t = 10.0_f64;
        let exact = 1.0 / mills_ratio(t) - t;
        assert!((m - exact).abs() / exact < 0.01, "mean {m} vs {exact}");
    }

    #[test]
    fn truncated_normal_far_from_boundary() {
        let mut rng = RngStream::new(5, 2);
        for _ in 0..10_000 {
            let x = sample_truncated_normal_positive(5.0, 1e-6, &mut rng).unwrap();
            assert!((x - 5.0).abs() < 0.01);
        }
    }

    #[test]
    fn mvn_identity_and_diagonal_moments() {
        let mut rng = RngStream::new(9, 0);
        let mean = DVector::zeros(3);
        let cov = DMatrix::identity(3, 3);
        let draws: Vec<DVector<f64>> =
            (0..100_000).map(|_| sample_mvn(&mean, &cov, &mut rng).unwrap()).collect();
        for c in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|d| d[c]).collect();
            let (_, v) = mean_var(&xs);
            assert!((v - 1.0).abs() < 0.03, "coord {c} variance {v}");
        }

        let mean = DVector::zeros(2);
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let draws: Vec<DVector<f64>> =
            (0..100_000).map(|_| sample_mvn(&mean, &cov, &mut rng).unwrap()).collect();
        for (c, sd) in [(0, 2.0), (1, 3.0)] {
            let xs: Vec<f64> = draws.iter().map(|d| d[c]).collect();
            let (_, v) = mean_var(&xs);
            assert!((v.sqrt() - sd).abs() / sd < 0.03);
        }
    }

    #[test]
    fn mvn_univariate_matches_normal_cdf() {
        let mut rng = RngStream::new(9, 1);
        let mean = DVector::from_element(1, 1.5);
        let cov = DMatrix::from_element(1, 1, 0.25);
        let xs: Vec<f64> =
            (0..100_000).map(|_| sample_mvn(&mean, &cov, &mut rng).unwrap()[0]).collect();
        let d = ks_distance(xs, |x| norm_cdf((x - 1.5) / 0.5));
        assert!(d < 0.005, "KS {d}");
    }

    #[test]
    fn mvn_rejects_non_pd() {
        let mut rng = RngStream::new(1, 0);
        let mean = DVector::zeros(2);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match sample_mvn(&mean, &cov, &mut rng) {
            Err(Error::Numeric { block, .. }) => assert_eq!(block, "sample_mvn"),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_gaussian_matches_covariance_form() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let h = DVector::from_vec(vec![1.0, -1.0]);
        let g = CanonicalGaussian::new(q.clone(), h.clone(), "test").unwrap();
        let cov = q.clone().try_inverse().unwrap();
        let mean = &cov * &h;
        assert!((g.mean() - &mean).norm() < 1e-12);
        assert!((g.quad() - h.dot(&mean)).abs() < 1e-12);
        assert!((g.log_det_precision() - q.determinant().ln()).abs() < 1e-12);

        let mut rng = RngStream::new(2, 0);
        let draws: Vec<DVector<f64>> = (0..200_000).map(|_| g.sample(&mut rng)).collect();
        let n = draws.len() as f64;
        let m0 = draws.iter().map(|d| d[0]).sum::<f64>() / n;
        let m1 = draws.iter().map(|d| d[1]).sum::<f64>() / n;
        let c01 = draws.iter().map(|d| (d[0] - m0) * (d[1] - m1)).sum::<f64>() / (n - 1.0);
        assert!((m0 - mean[0]).abs() < 0.01 && (m1 - mean[1]).abs() < 0.01);
        assert!((c01 - cov[(0, 1)]).abs() < 0.01);
    }

    #[test]
    fn laplace_mixture_scale_property() {
        let mut r1 = RngStream::new(4, 0);
        let mut r2 = RngStream::new(4, 0);
        for _ in 0..1000 {
            let a = sample_laplace_error(1.0, &mut r1).unwrap();
            let b = sample_laplace_error(2.0, &mut r2).unwrap();
            assert_eq!(a / 2.0, b);
        }
    }

    #[test]
    fn laplace_mixture_matches_its_closed_form() {
        let mut rng = RngStream::new(4, 1);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_laplace_error(1.0, &mut rng).unwrap()).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (sorted[49_999] + sorted[50_000]);
        assert!(median.abs() < 0.02 * 2.0, "median {median}");
        let d = ks_distance(xs, |x| laplace_mixture_cdf(x, 1.0));
        assert!(d < 0.01, "KS {d}");
    }

    #[test]
    fn gamma_beta_bernoulli() {
        let mut rng = RngStream::new(6, 0);
        let g: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(3.0, 2.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&g);
        assert!((m - 1.5).abs() / 1.5 < 0.01);

        let b: Vec<f64> = (0..1_000_000).map(|_| sample_beta(1.0, 1.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&b);
        assert!((m - 0.5).abs() / 0.5 < 0.01);

        assert!((0..10_000).all(|_| !sample_bernoulli(0.0, &mut rng).unwrap()));
        assert!((0..10_000).all(|_| sample_bernoulli(1.0, &mut rng).unwrap()));

        let ig: Vec<f64> =
            (0..1_000_000).map(|_| sample_inverse_gamma(4.0, 6.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&ig);
        assert!((m - 2.0).abs() / 2.0 < 0.01);

        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(1.0, -1.0, &mut rng).is_err());
        assert!(sample_beta(-1.0, 1.0, &mut rng).is_err());
        assert!(sample_inverse_gamma(1.0, 0.0, &mut rng).is_err());
        assert!(sample_bernoulli(1.5, &mut rng).is_err());
    }

    #[test]
    fn log_norm_cdf_regions_agree() {
        for &x in &[-7.99, -5.0, -1.0, 0.0, 0.7, 3.0, 9.0] {
            assert!((log_norm_cdf(x) - norm_cdf(x).ln()).abs() < 1e-12, "x={x}");
        }
        // continuity across the switch to the continued fraction
        let below = log_norm_cdf(-8.0 - 1e-9);
        let above = norm_cdf(-8.0 + 1e-9).ln();
        assert!((below - above).abs() < 1e-6);
        // finite where Phi itself underflows
        let v = log_norm_cdf(-50.0);
        assert!(v.is_finite() && v < -1200.0);
        let asym = -1250.0 - LN_SQRT_2PI - 50.0_f64.ln() + (1.0 - 1.0 / 2500.0_f64).ln();
        assert!((v - asym).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.025, 0.3, 0.5, 0.975] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-12 * p.max(1e-3) * 1e3);
        }
    }

    #[test]
    fn logistic_limits() {
        assert_eq!(logistic(f64::INFINITY), 1.0);
        assert_eq!(logistic(f64::NEG_INFINITY), 0.0);
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
    }
}
