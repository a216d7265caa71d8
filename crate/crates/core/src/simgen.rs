//! Simulation designs: genetic factors, environment and clinical covariates,
//! true coefficients and error models.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::{read_matrix_csv, GxEDataset, TrueModel};
use crate::distributions::{sample_exponential, std_normal, RngStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    /// Gene expressions with AR correlation.
    GeneExprAr,
    /// SNPs from dichotomized gene expressions.
    SnpDichotomized,
    /// SNPs with pairwise linkage disequilibrium between adjacent loci.
    SnpLd,
    /// Rows resampled from a user-supplied genotype matrix.
    ResampleReal,
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gene-expr-ar" | "example1" | "1" => Ok(Example::GeneExprAr),
            "snp-dichotomized" | "example2" | "2" => Ok(Example::SnpDichotomized),
            "snp-ld" | "example3" | "3" => Ok(Example::SnpLd),
            "resample-real" | "example4" | "4" => Ok(Example::ResampleReal),
            other => Err(Error::Parameter(format!("unknown example {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// N(0, 1).
    Normal01,
    /// Laplace with scale 2.
    Laplace0_2,
    /// 10% Laplace(0, 1) + 90% Laplace(0, sqrt 5).
    MixLaplace,
    /// 90% N(0, 1) + 10% Cauchy(0, 1).
    NormalCauchyMix,
    /// Student t with 2 degrees of freedom.
    T2,
    /// LogNormal(0, 1), uncentered.
    LogNormal01,
    /// No noise at all.
    Zero,
}

impl ErrorModel {
    pub const STANDARD: [ErrorModel; 6] = [
        ErrorModel::Normal01,
        ErrorModel::Laplace0_2,
        ErrorModel::MixLaplace,
        ErrorModel::NormalCauchyMix,
        ErrorModel::T2,
        ErrorModel::LogNormal01,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorModel::Normal01 => "Error 1",
            ErrorModel::Laplace0_2 => "Error 2",
            ErrorModel::MixLaplace => "Error 3",
            ErrorModel::NormalCauchyMix => "Error 4",
            ErrorModel::T2 => "Error 5",
            ErrorModel::LogNormal01 => "Error 6",
            ErrorModel::Zero => "No error",
        }
    }
}

impl std::str::FromStr for ErrorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal01" | "error1" | "1" => Ok(ErrorModel::Normal01),
            "laplace0-2" | "error2" | "2" => Ok(ErrorModel::Laplace0_2),
            "mix-laplace" | "error3" | "3" => Ok(ErrorModel::MixLaplace),
            "normal-cauchy-mix" | "error4" | "4" => Ok(ErrorModel::NormalCauchyMix),
            "t2" | "error5" | "5" => Ok(ErrorModel::T2),
            "log-normal01" | "lognormal" | "error6" | "6" => Ok(ErrorModel::LogNormal01),
            "zero" | "none" => Ok(ErrorModel::Zero),
            other => Err(Error::Parameter(format!("unknown error model {other:?}"))),
        }
    }
}

fn d_rho_g() -> f64 {
    0.3
}
fn d_rho_e() -> f64 {
    0.5
}
fn d_maf() -> f64 {
    0.3
}
fn d_r_p() -> f64 {
    0.6
}
fn d_groups() -> usize {
    9
}
fn d_effects() -> usize {
    25
}
fn d_main() -> [f64; 2] {
    [0.8, 1.5]
}
fn d_ge() -> [f64; 2] {
    [0.3, 0.9]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    /// Test-set size; defaults to `n`.
    #[serde(default)]
    pub n_test: Option<usize>,
    pub p: usize,
    pub k: usize,
    pub q: usize,
    pub example: Example,
    pub error_model: ErrorModel,
    #[serde(default = "d_rho_g")]
    pub rho_g: f64,
    #[serde(default = "d_rho_e")]
    pub rho_e: f64,
    #[serde(default = "d_maf")]
    pub maf: f64,
    #[serde(default = "d_r_p")]
    pub r_p: f64,
    #[serde(default = "d_groups")]
    pub n_active_groups: usize,
    #[serde(default = "d_effects")]
    pub n_active_effects: usize,
    /// Range of alpha and theta.
    #[serde(default = "d_main")]
    pub coef_main_range: [f64; 2],
    /// Range of the nonzero beta.
    #[serde(default = "d_ge")]
    pub coef_ge_range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    /// Genotype CSV for [`Example::ResampleReal`].
    #[serde(default)]
    pub genotype_csv: Option<PathBuf>,
}

impl SimulationConfig {
    pub fn new(example: Example, error_model: ErrorModel) -> Self {
        SimulationConfig {
            n: 500,
            n_test: None,
            p: 100,
            k: 5,
            q: 3,
            example,
            error_model,
            rho_g: d_rho_g(),
            rho_e: d_rho_e(),
            maf: d_maf(),
            r_p: d_r_p(),
            n_active_groups: d_groups(),
            n_active_effects: d_effects(),
            coef_main_range: d_main(),
            coef_ge_range: d_ge(),
            seed: 0,
            genotype_csv: None,
        }
    }

    /// n = 500, p = 100, k = 5, q = 3 gene expressions.
    pub fn example1(error_model: ErrorModel) -> Self {
        Self::new(Example::GeneExprAr, error_model)
    }

    pub fn example2(error_model: ErrorModel) -> Self {
        Self::new(Example::SnpDichotomized, error_model)
    }

    pub fn example3(error_model: ErrorModel) -> Self {
        Self::new(Example::SnpLd, error_model)
    }

    pub fn example4(error_model: ErrorModel, genotype_csv: PathBuf) -> Self {
        SimulationConfig {
            genotype_csv: Some(genotype_csv),
            ..Self::new(Example::ResampleReal, error_model)
        }
    }

    pub fn with_dims(mut self, n: usize, p: usize, k: usize, q: usize) -> Self {
        self.n = n;
        self.p = p;
        self.k = k;
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_test(&self) -> usize {
        self.n_test.unwrap_or(self.n)
    }

    pub fn group_size(&self) -> usize {
        self.k + 1
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n < 2 {
            out.push(format!("n must be at least 2, got {}", self.n));
        }
        if self.n_test == Some(0) {
            out.push("n_test must be positive".to_string());
        }
        if self.p == 0 {
            out.push("p must be positive".to_string());
        }
        if self.k == 0 {
            out.push("k must be positive".to_string());
        }
        if self.q == 0 {
            out.push("q must be positive".to_string());
        }
        for (name, v) in [("rho_g", self.rho_g), ("rho_e", self.rho_e)] {
            if !(v > -1.0 && v < 1.0) {
                out.push(format!("{name} must lie in (-1, 1), got {v}"));
            }
        }
        if !(self.maf > 0.0 && self.maf < 1.0) {
            out.push(format!("maf must lie in (0, 1), got {}", self.maf));
        }
        if !(-1.0..=1.0).contains(&self.r_p) {
            out.push(format!("r_p must lie in [-1, 1], got {}", self.r_p));
        }
        if self.n_active_groups > self.p {
            out.push(format!(
                "n_active_groups {} exceeds p {}",
                self.n_active_groups, self.p
            ));
        }
        if self.n_active_effects < self.n_active_groups
            || self.n_active_effects > self.n_active_groups * self.group_size()
        {
            out.push(format!(
                "n_active_effects {} must lie between n_active_groups {} and n_active_groups * (k + 1) = {}",
                self.n_active_effects,
                self.n_active_groups,
                self.n_active_groups * self.group_size()
            ));
        }
        for (name, r) in [("coef_main_range", self.coef_main_range), ("coef_ge_range", self.coef_ge_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                out.push(format!("{name} must be an ordered finite pair, got {r:?}"));
            }
        }
        if self.example == Example::ResampleReal && self.genotype_csv.is_none() {
            out.push("example resample-real needs genotype_csv".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}

/// `n x p` matrix whose rows are N(0, R) with `R[j, j'] = rho^|j - j'|`,
/// built column by column through the AR(1) recursion.
pub fn gen_gene_expression<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, p);
    let innov = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z = std_normal(rng);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            m[(i, j)] = v;
            prev = v;
        }
    }
    m
}

fn type7(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Genotypes 0/1/2 by cutting each column at its empirical first and third
/// quartiles. The flag marks columns whose quartiles coincide.
pub fn dichotomize_to_snp(expr: &DMatrix<f64>) -> (DMatrix<f64>, Vec<bool>) {
    let mut out = DMatrix::zeros(expr.nrows(), expr.ncols());
    let mut degenerate = vec![false; expr.ncols()];
    if expr.nrows() == 0 {
        return (out, degenerate);
    }
    for (j, col) in expr.column_iter().enumerate() {
        let mut s: Vec<f64> = col.iter().copied().collect();
        s.sort_by(f64::total_cmp);
        let (q1, q3) = (type7(&s, 0.25), type7(&s, 0.75));
        degenerate[j] = q1 == q3;
        for (i, &v) in col.iter().enumerate() {
            out[(i, j)] = if v < q1 {
                0.0
            } else if v < q3 {
                1.0
            } else {
                2.0
            };
        }
    }
    (out, degenerate)
}

/// Haplotype frequencies `(AB, Ab, aB, ab)` of two loci with risk-allele
/// frequency `maf` and LD correlation `r_p`.
pub fn haplotype_frequencies(maf: f64, r_p: f64) -> Result<[f64; 4]> {
    if !(maf > 0.0 && maf < 1.0) {
        return Err(Error::Parameter(format!("maf must lie in (0, 1), got {maf}")));
    }
    if !(-1.0..=1.0).contains(&r_p) {
        return Err(Error::Parameter(format!("r_p must lie in [-1, 1], got {r_p}")));
    }
    let (r1, r2) = (maf, maf);
    let delta = r_p * (r1 * (1.0 - r1) * r2 * (1.0 - r2)).sqrt();
    let f = [
        r1 * r2 + delta,
        r1 * (1.0 - r2) - delta,
        (1.0 - r1) * r2 - delta,
        (1.0 - r1) * (1.0 - r2) + delta,
    ];
    if f.iter().any(|&v| !(-1e-15..=1.0 + 1e-15).contains(&v)) {
        return Err(Error::Parameter(format!(
            "maf {maf} and r_p {r_p} give haplotype frequencies {f:?} outside [0, 1]"
        )));
    }
    Ok(f.map(|v| v.clamp(0.0, 1.0)))
}

/// Genotypes with LD between adjacent loci. Each gamete is a Markov chain
/// along the loci: the first allele is risk with probability `maf`, and each
/// next allele is drawn from the haplotype frequencies conditional on the
/// previous one. A genotype counts risk alleles over two independent gametes.
pub fn gen_snp_ld<R: Rng + ?Sized>(n: usize, p: usize, maf: f64, r_p: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let [ab, a_b, _, _] = haplotype_frequencies(maf, r_p)?;
    let p_risk_after_risk = ab / maf;
    let p_risk_after_other = (maf - ab) / (1.0 - maf);
    debug_assert!((a_b - (maf - ab)).abs() < 1e-12);
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        for _ in 0..2 {
            let mut risk = false;
            for j in 0..p {
                let prob = if j == 0 {
                    maf
                } else if risk {
                    p_risk_after_risk
                } else {
                    p_risk_after_other
                };
                risk = rng.random::<f64>() < prob;
                if risk {
                    m[(i, j)] += 1.0;
                }
            }
        }
    }
    Ok(m)
}

fn gen_covariates<R: Rng + ?Sized>(n: usize, cols: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let mut m = gen_gene_expression(n, cols, rho, rng);
    if cols > 0 {
        m.column_mut(cols - 1).apply(|v| *v = if *v > 0.0 { 1.0 } else { 0.0 });
    }
    m
}

/// AR(`rho`) normal environment factors; the last column is thresholded at 0.
pub fn gen_environment<R: Rng + ?Sized>(n: usize, k: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    gen_covariates(n, k, rho, rng)
}

/// AR(`rho`) normal clinical covariates; the last column is thresholded at 0.
pub fn gen_clinical<R: Rng + ?Sized>(n: usize, q: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    gen_covariates(n, q, rho, rng)
}

fn uniform<R: Rng + ?Sized>(range: [f64; 2], rng: &mut R) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

/// Coefficients: alpha and theta uniform on the main range; `n_active_effects`
/// nonzero beta over exactly `n_active_groups` groups, each group receiving at
/// least one, values uniform on the interaction range.
pub fn gen_true_coefficients<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<TrueModel> {
    config.validate()?;
    let l = config.group_size();
    let alpha = (0..config.q).map(|_| uniform(config.coef_main_range, rng)).collect();
    let theta = (0..config.k).map(|_| uniform(config.coef_main_range, rng)).collect();
    let mut groups = index::sample(rng, config.p, config.n_active_groups).into_vec();
    groups.sort_unstable();
    let mut slots = vec![false; groups.len() * l];
    for g in 0..groups.len() {
        slots[g * l + rng.random_range(0..l)] = true;
    }
    let free: Vec<usize> = (0..slots.len()).filter(|&s| !slots[s]).collect();
    for pick in index::sample(rng, free.len(), config.n_active_effects - groups.len()) {
        slots[free[pick]] = true;
    }
    let mut beta = vec![vec![0.0; l]; config.p];
    for (g, &j) in groups.iter().enumerate() {
        for (idx, b) in beta[j].iter_mut().enumerate() {
            if slots[g * l + idx] {
                *b = uniform(config.coef_ge_range, rng);
            }
        }
    }
    Ok(TrueModel::from_coefficients(alpha, theta, beta))
}

fn laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let x = sample_exponential(1.0 / scale, rng).expect("positive rate");
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

pub fn gen_errors<R: Rng + ?Sized>(model: ErrorModel, n: usize, rng: &mut R) -> Vec<f64> {
    let cauchy = Cauchy::new(0.0, 1.0).expect("valid Cauchy");
    let t2 = StudentT::new(2.0).expect("valid t");
    (0..n)
        .map(|_| match model {
            ErrorModel::Normal01 => std_normal(rng),
            ErrorModel::Laplace0_2 => laplace(2.0, rng),
            ErrorModel::MixLaplace => {
                if rng.random::<f64>() < 0.1 {
                    laplace(1.0, rng)
                } else {
                    laplace(5f64.sqrt(), rng)
                }
            }
            ErrorModel::NormalCauchyMix => {
                if rng.random::<f64>() < 0.9 {
                    std_normal(rng)
                } else {
                    cauchy.sample(rng)
                }
            }
            ErrorModel::T2 => t2.sample(rng),
            ErrorModel::LogNormal01 => std_normal(rng).exp(),
            ErrorModel::Zero => 0.0,
        })
        .collect()
}

/// `n` rows drawn uniformly without replacement.
pub fn resample_real_genotypes<R: Rng + ?Sized>(source: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if n > source.nrows() {
        return Err(Error::Parameter(format!(
            "cannot draw {n} subjects from {} without replacement",
            source.nrows()
        )));
    }
    let rows = index::sample(rng, source.nrows(), n).into_vec();
    Ok(source.select_rows(rows.iter()))
}

const TAG_TRUTH: u64 = 0;
const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_RESAMPLE: u64 = 3;

fn gen_genotypes(config: &SimulationConfig, n: usize, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    Ok(match config.example {
        Example::GeneExprAr => gen_gene_expression(n, config.p, config.rho_g, rng),
        Example::SnpDichotomized => {
            let (m, degenerate) = dichotomize_to_snp(&gen_gene_expression(n, config.p, config.rho_g, rng));
            if degenerate.iter().any(|&d| d) {
                log::warn!("{} dichotomized columns are degenerate", degenerate.iter().filter(|&&d| d).count());
            }
            m
        }
        Example::SnpLd => gen_snp_ld(n, config.p, config.maf, config.r_p, rng)?,
        Example::ResampleReal => unreachable!("resampled genotypes are drawn jointly"),
    })
}

fn assemble(
    config: &SimulationConfig,
    truth: &TrueModel,
    x: DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<GxEDataset> {
    let n = x.nrows();
    let e = gen_environment(n, config.k, config.rho_e, rng);
    let w = gen_clinical(n, config.q, config.rho_e, rng);
    let ds = GxEDataset::new(DVector::zeros(n), w, e, x)?;
    let mut y = ds.linear_predictor(
        &DVector::from_vec(truth.alpha.clone()),
        &DVector::from_vec(truth.theta.clone()),
        &truth.beta_flat(),
    )?;
    for (v, eps) in y.iter_mut().zip(gen_errors(config.error_model, n, rng)) {
        *v += eps;
    }
    ds.with_response(y)
}

/// Training set, independent test set and the shared truth for one
/// replicate. Streams derive from `config.seed` and `replicate`.
pub fn gen_dataset(config: &SimulationConfig, replicate: u64) -> Result<(GxEDataset, GxEDataset, TrueModel)> {
    config.validate()?;
    let root = RngStream::new(config.seed, replicate);
    let truth = gen_true_coefficients(config, &mut root.substream(TAG_TRUTH))?;
    let (n, n_test) = (config.n, config.n_test());
    let (x_train, x_test) = if config.example == Example::ResampleReal {
        let path = config.genotype_csv.as_ref().expect("validated");
        let (_, source) = read_matrix_csv(path)?;
        if source.ncols() < config.p {
            return Err(Error::Dimension(format!(
                "genotype file has {} columns, p = {}",
                source.ncols(),
                config.p
            )));
        }
        let source = source.columns(0, config.p).into_owned();
        let both = resample_real_genotypes(&source, n + n_test, &mut root.substream(TAG_RESAMPLE))?;
        (both.rows(0, n).into_owned(), both.rows(n, n_test).into_owned())
    } else {
        let mut rng = root.substream(TAG_TRAIN);
        let x_train = gen_genotypes(config, n, &mut rng)?;
        let mut rng = root.substream(TAG_TEST);
        (x_train, gen_genotypes(config, n_test, &mut rng)?)
    };
    let train = assemble(config, &truth, x_train, &mut root.substream(TAG_TRAIN + 16))?;
    let test = assemble(config, &truth, x_test, &mut root.substream(TAG_TEST + 16))?;
    Ok((train, test, truth))
}
