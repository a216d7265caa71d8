//! The twelve samplers and their hyperparameters.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selection structure of the coefficient prior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Bi-level: whole groups and single effects inside active groups.
    SparseGroup,
    Group,
    Individual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    RbsgSs,
    RbgSs,
    RblSs,
    Rbsg,
    Rbg,
    Rbl,
    BsgSs,
    BgSs,
    BlSs,
    Bsg,
    Bg,
    Bl,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::RbsgSs,
        Method::RbgSs,
        Method::RblSs,
        Method::Rbsg,
        Method::Rbg,
        Method::Rbl,
        Method::BsgSs,
        Method::BgSs,
        Method::BlSs,
        Method::Bsg,
        Method::Bg,
        Method::Bl,
    ];

    pub fn from_axes(robust: bool, spike_slab: bool, structure: Structure) -> Method {
        use Method::*;
        use Structure::*;
        match (robust, spike_slab, structure) {
            (true, true, SparseGroup) => RbsgSs,
            (true, true, Group) => RbgSs,
            (true, true, Individual) => RblSs,
            (true, false, SparseGroup) => Rbsg,
            (true, false, Group) => Rbg,
            (true, false, Individual) => Rbl,
            (false, true, SparseGroup) => BsgSs,
            (false, true, Group) => BgSs,
            (false, true, Individual) => BlSs,
            (false, false, SparseGroup) => Bsg,
            (false, false, Group) => Bg,
            (false, false, Individual) => Bl,
        }
    }

    pub fn robust(self) -> bool {
        matches!(
            self,
            Method::RbsgSs | Method::RbgSs | Method::RblSs | Method::Rbsg | Method::Rbg | Method::Rbl
        )
    }

    pub fn spike_slab(self) -> bool {
        matches!(
            self,
            Method::RbsgSs | Method::RbgSs | Method::RblSs | Method::BsgSs | Method::BgSs | Method::BlSs
        )
    }

    pub fn structure(self) -> Structure {
        match self {
            Method::RbsgSs | Method::Rbsg | Method::BsgSs | Method::Bsg => Structure::SparseGroup,
            Method::RbgSs | Method::Rbg | Method::BgSs | Method::Bg => Structure::Group,
            Method::RblSs | Method::Rbl | Method::BlSs | Method::Bl => Structure::Individual,
        }
    }

    /// Whether the coefficient prior variance is multiplied by `sigma2`.
    pub fn sigma_scaled_prior(self) -> bool {
        !self.robust() && self != Method::BsgSs
    }

    /// Whether `eta` is set by Monte Carlo EM rather than drawn.
    pub fn uses_em(self) -> bool {
        self.spike_slab() && self.structure() == Structure::SparseGroup
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::RbsgSs => "rbsg-ss",
            Method::RbgSs => "rbg-ss",
            Method::RblSs => "rbl-ss",
            Method::Rbsg => "rbsg",
            Method::Rbg => "rbg",
            Method::Rbl => "rbl",
            Method::BsgSs => "bsg-ss",
            Method::BgSs => "bg-ss",
            Method::BlSs => "bl-ss",
            Method::Bsg => "bsg",
            Method::Bg => "bg",
            Method::Bl => "bl",
        }
    }

    pub fn label(self) -> String {
        self.name().to_uppercase()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == lower)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Parameter(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

/// Prior covariance of `alpha` or `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCovariance {
    /// `v * I`
    Isotropic(f64),
    /// Row-major dense matrix.
    Dense(Vec<Vec<f64>>),
}

impl Default for PriorCovariance {
    fn default() -> Self {
        PriorCovariance::Isotropic(1e4)
    }
}

impl PriorCovariance {
    pub fn matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        match self {
            PriorCovariance::Isotropic(v) => Ok(DMatrix::identity(dim, dim) * *v),
            PriorCovariance::Dense(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Dimension(format!(
                        "prior covariance must be {dim}x{dim}"
                    )));
                }
                Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
            }
        }
    }

    /// Inverse of the covariance, validated symmetric positive definite.
    pub fn precision(&self, dim: usize) -> Result<DMatrix<f64>> {
        match self {
            PriorCovariance::Isotropic(v) => Ok(DMatrix::identity(dim, dim) / *v),
            PriorCovariance::Dense(_) => {
                let m = self.matrix(dim)?;
                let chol = crate::distributions::cholesky_checked(m, "prior covariance")?;
                Ok(chol.inverse())
            }
        }
    }

    fn validate(&self, name: &str, problems: &mut Vec<String>) {
        match self {
            PriorCovariance::Isotropic(v) => {
                if !(v.is_finite() && *v > 0.0) {
                    problems.push(format!("{name} must be > 0, got {v}"));
                }
            }
            PriorCovariance::Dense(rows) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    problems.push(format!("{name} must be square"));
                    return;
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
                if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    problems.push(format!("{name} must be symmetric"));
                } else if crate::distributions::cholesky_checked(m, name).is_err() {
                    problems.push(format!("{name} must be positive definite"));
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
    pub c: f64,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub sigma_alpha0: PriorCovariance,
    pub sigma_theta0: PriorCovariance,
    /// Shape of the inverse-gamma prior on `s2`; its scale is `eta`.
    pub a_s: f64,
    /// Inverse-gamma prior on `sigma2`; zero for both gives `1 / sigma2`.
    pub a_sigma: f64,
    pub b_sigma: f64,
    /// Sweeps between EM updates of `eta`.
    pub em_window: usize,
    /// Hold `eta` (and `eta1`, `eta2`) at this value instead of updating it.
    pub fixed_eta: Option<f64>,
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            a0: 1.0,
            b0: 1.0,
            a1: 1.0,
            b1: 1.0,
            c: 0.1,
            d: 0.1,
            d1: 1.0,
            d2: 1.0,
            sigma_alpha0: PriorCovariance::default(),
            sigma_theta0: PriorCovariance::default(),
            a_s: 1.0,
            a_sigma: 0.0,
            b_sigma: 0.0,
            em_window: 100,
            fixed_eta: None,
            n_iter: 15_000,
            burn_in: 7_500,
            seed: 1,
        }
    }
}

impl Hyperparameters {
    /// Every violated constraint, not only the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("a0", self.a0),
            ("b0", self.b0),
            ("a1", self.a1),
            ("b1", self.b1),
            ("c", self.c),
            ("d", self.d),
            ("d1", self.d1),
            ("d2", self.d2),
            ("a_s", self.a_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [("a_sigma", self.a_sigma), ("b_sigma", self.b_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("{name} must be >= 0, got {v}"));
            }
        }
        if let Some(eta) = self.fixed_eta {
            if !(eta.is_finite() && eta > 0.0) {
                out.push(format!("fixed_eta must be > 0, got {eta}"));
            }
        }
        if self.em_window == 0 {
            out.push("em_window must be >= 1".to_string());
        }
        if self.n_iter == 0 {
            out.push("n_iter must be >= 1".to_string());
        }
        if self.burn_in >= self.n_iter {
            out.push(format!(
                "burn_in ({}) must be less than n_iter ({})",
                self.burn_in, self.n_iter
            ));
        }
        self.sigma_alpha0.validate("sigma_alpha0", &mut out);
        self.sigma_theta0.validate("sigma_theta0", &mut out);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn stored_draws(&self) -> usize {
        self.n_iter.saturating_sub(self.burn_in)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub robust: bool,
    pub spike_slab: bool,
    pub structure: Structure,
    pub hyper: Hyperparameters,
}

impl MethodConfig {
    pub fn new(method: Method, hyper: Hyperparameters) -> Self {
        MethodConfig {
            robust: method.robust(),
            spike_slab: method.spike_slab(),
            structure: method.structure(),
            hyper,
        }
    }

    pub fn method(&self) -> Method {
        Method::from_axes(self.robust, self.spike_slab, self.structure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_enumerates_twelve_distinct_methods() {
        let mut seen = std::collections::HashSet::new();
        for robust in [true, false] {
            for ss in [true, false] {
                for s in [Structure::SparseGroup, Structure::Group, Structure::Individual] {
                    let m = Method::from_axes(robust, ss, s);
                    assert_eq!((m.robust(), m.spike_slab(), m.structure()), (robust, ss, s));
                    seen.insert(m);
                }
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert_eq!("RBSG-SS".parse::<Method>().unwrap(), Method::RbsgSs);
        assert!("rbsg_ss".parse::<Method>().is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let h = Hyperparameters {
            a0: 0.0,
            c: -1.0,
            burn_in: 10,
            n_iter: 10,
            sigma_alpha0: PriorCovariance::Dense(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            ..Default::default()
        };
        match h.validate() {
            Err(Error::Config(p)) => assert_eq!(p.len(), 4, "{p:?}"),
            other => panic!("{other:?}"),
        }
        assert!(Hyperparameters::default().validate().is_ok());
    }

    #[test]
    fn unknown_hyperparameter_keys_are_rejected() {
        let r: std::result::Result<Hyperparameters, _> = serde_json::from_str(r#"{"a0": 2, "zeta": 1}"#);
        assert!(r.is_err());
        let h: Hyperparameters = serde_json::from_str(r#"{"a0": 2}"#).unwrap();
        assert_eq!(h.a0, 2.0);
        assert_eq!(h.b0, 1.0);
    }

    #[test]
    fn dense_precision_inverts() {
        let c = PriorCovariance::Dense(vec![vec![2.0, 0.5], vec![0.5, 1.0]]);
        let p = c.precision(2).unwrap();
        let prod = c.matrix(2).unwrap() * p;
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-12);
    }
}
