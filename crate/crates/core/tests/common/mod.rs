#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use robust_gxe::gibbs::conditionals::{gaussian_slab, omega_slab, slab_probability};

/// Toy regression `y_i = x_i beta + e_i`, `e_i ~ N(0, 1 / w_i)`.
pub struct Toy {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl Toy {
    pub fn small() -> Toy {
        Toy {
            x: vec![0.7, -1.3, 0.4],
            y: vec![0.9, -1.1, 0.2],
            w: vec![2.0, 0.5, 1.5],
        }
    }

    pub fn g(&self) -> f64 {
        self.x.iter().zip(&self.w).map(|(x, w)| w * x * x).sum()
    }

    pub fn h(&self) -> f64 {
        self.x.iter().zip(&self.y).zip(&self.w).map(|((x, y), w)| w * x * y).sum()
    }

    /// Gaussian likelihood with coefficient `beta`.
    pub fn likelihood(&self, beta: f64) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((x, y), w)| normal_pdf(*y, x * beta, 1.0 / w))
            .product()
    }
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Multivariate normal density of `y` under `N(0, cov)`.
pub fn mvn_pdf(y: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = y.len() as f64;
    let det = cov.determinant();
    let inv = cov.clone().try_inverse().unwrap();
    let quad = (y.transpose() * inv * y)[(0, 0)];
    (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powf(n) * det).sqrt()
}

/// Composite Simpson rule on `[a, b]` with `m` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Slab weight of a coefficient with prior `pi N(0, v) + (1 - pi) delta_0`,
/// from the marginal densities of `y` under both components.
pub fn brute_coefficient_weight(toy: &Toy, pi: f64, v: f64) -> f64 {
    let n = toy.y.len();
    let y = DVector::from_vec(toy.y.clone());
    let x = DVector::from_vec(toy.x.clone());
    let noise = DMatrix::from_diagonal(&DVector::from_iterator(n, toy.w.iter().map(|w| 1.0 / w)));
    let slab = mvn_pdf(&y, &(noise.clone() + &x * x.transpose() * v));
    let spike = mvn_pdf(&y, &noise);
    pi * slab / (pi * slab + (1.0 - pi) * spike)
}

pub fn model_coefficient_weight(toy: &Toy, pi: f64, v: f64) -> f64 {
    let g = DMatrix::from_element(1, 1, toy.g());
    let h = DVector::from_element(1, toy.h());
    let (log_bf, _) = gaussian_slab(&g, &h, &[v], "toy").unwrap();
    slab_probability(pi, log_bf)
}

/// Slab weight of a scale with prior `pi N+(0, s2) + (1 - pi) delta_0`
/// when the coefficient is `omega * b`, by quadrature over `omega`.
pub fn brute_scale_weight(toy: &Toy, b: f64, pi: f64, s2: f64) -> f64 {
    let half_normal = |w: f64| 2.0 * normal_pdf(w, 0.0, s2);
    let upper = 40.0 * s2.sqrt();
    let slab = simpson(|w| half_normal(w) * toy.likelihood(w * b), 0.0, upper, 200_000);
    let spike = toy.likelihood(0.0);
    pi * slab / (pi * slab + (1.0 - pi) * spike)
}

pub fn model_scale_weight(toy: &Toy, b: f64, pi: f64, s2: f64) -> f64 {
    let (log_bf, _, _) = omega_slab(b, toy.g(), toy.h(), s2);
    slab_probability(pi, log_bf)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Type-7 quantile at probability `num / den`, in exact integer arithmetic.
pub fn oracle_quantile(values: &[i64], num: usize, den: usize) -> f64 {
    let mut s = values.to_vec();
    s.sort();
    let pos = (s.len() - 1) * num;
    let (lo, rem) = (pos / den, pos % den);
    if rem == 0 {
        s[lo] as f64
    } else {
        s[lo] as f64 + (rem as f64 / den as f64) * (s[lo + 1] - s[lo]) as f64
    }
}

pub fn oracle_median(values: &[i64]) -> f64 {
    let mut s = values.to_vec();
    s.sort();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    }
}
