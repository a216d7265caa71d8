//! Selection rules, posterior summaries and convergence diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::PosteriorSamples;
use crate::method::Structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    /// Median probability model: inclusion probability at least 1/2.
    Mpm,
    /// Equal-tailed 95% credible interval excludes zero.
    Ci95,
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mpm" => Ok(SelectionRule::Mpm),
            "ci95" => Ok(SelectionRule::Ci95),
            other => Err(Error::Parameter(format!("unknown rule {other:?}; expected mpm or ci95"))),
        }
    }
}

/// Posterior medians of the coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    /// Flat, `j * L + l`.
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub rule: SelectionRule,
    pub p: usize,
    pub group_size: usize,
    pub inclusion_prob: Option<Vec<f64>>,
    pub credible_intervals: Option<Vec<(f64, f64)>>,
    pub selected: Vec<bool>,
    pub estimates: Estimates,
}

/// One line of the selection document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectRecord {
    pub group: usize,
    pub index_in_group: usize,
    pub role: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub selected: bool,
    pub estimate: f64,
}

impl SelectionResult {
    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// Per-effect records; `role` is `main` or `interaction(m)` with `m` 1-based.
    pub fn records(&self) -> Vec<EffectRecord> {
        let l = self.group_size;
        (0..self.selected.len())
            .map(|c| {
                let (j, idx) = (c / l, c % l);
                EffectRecord {
                    group: j,
                    index_in_group: idx,
                    role: if idx == 0 { "main".to_string() } else { format!("interaction({idx})") },
                    prob: self.inclusion_prob.as_ref().map(|v| v[c]),
                    ci: self.credible_intervals.as_ref().map(|v| v[c]),
                    selected: self.selected[c],
                    estimate: self.estimates.beta[c],
                }
            })
            .collect()
    }
}

fn require_draws(s: &PosteriorSamples) -> Result<()> {
    if s.n_draws == 0 {
        Err(Error::InsufficientData("no stored draws".to_string()))
    } else {
        Ok(())
    }
}

/// Fraction of stored draws in which each effect is included.
///
/// Sparse-group: `phi_b[j] * phi_w[j, l]`; group: `phi_b[j]`; individual: `phi_w[j, l]`.
pub fn inclusion_probabilities(s: &PosteriorSamples) -> Result<Vec<f64>> {
    require_draws(s)?;
    if s.structure().is_none() {
        return Err(Error::Parameter(
            "inclusion probabilities need spike-and-slab indicator draws".to_string(),
        ));
    }
    let pl = s.n_effects();
    let mut counts = vec![0usize; pl];
    for g in 0..s.n_draws {
        for (c, count) in counts.iter_mut().enumerate() {
            if s.indicator(g, c) == Some(true) {
                *count += 1;
            }
        }
    }
    let total = s.n_draws as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Select effects with inclusion probability at least 1/2.
pub fn mpm_select(probs: &[f64]) -> Vec<bool> {
    probs.iter().map(|&p| p >= 0.5).collect()
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    // snap to a fine grid so decimal levels like 0.025 hit order statistics exactly
    let h = ((n - 1) as f64 * prob.clamp(0.0, 1.0) * 1e9).round() / 1e9;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted(values.to_vec()), 0.5)
}

/// Equal-tailed interval at `level`.
pub fn credible_interval(values: &[f64], level: f64) -> (f64, f64) {
    let s = sorted(values.to_vec());
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&s, tail), quantile_sorted(&s, 1.0 - tail))
}

/// Lower and upper ends of a credible interval.
pub type Interval = (f64, f64);

/// Per-effect equal-tailed intervals; an effect is selected when zero lies
/// outside its interval.
pub fn ci_select(s: &PosteriorSamples, level: f64) -> Result<(Vec<bool>, Vec<Interval>)> {
    require_draws(s)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter(format!("level must lie in (0, 1), got {level}")));
    }
    let intervals: Vec<(f64, f64)> = (0..s.n_effects()).map(|c| credible_interval(&s.beta_trace(c), level)).collect();
    let selected = intervals.iter().map(|&(lo, hi)| lo > 0.0 || hi < 0.0).collect();
    Ok((selected, intervals))
}

/// Elementwise posterior medians; exact zeros count as draws.
pub fn posterior_medians(s: &PosteriorSamples) -> Result<Estimates> {
    require_draws(s)?;
    Ok(Estimates {
        alpha: (0..s.q).map(|t| median(&s.alpha_trace(t))).collect(),
        theta: (0..s.k).map(|m| median(&s.theta_trace(m))).collect(),
        beta: (0..s.n_effects()).map(|c| median(&s.beta_trace(c))).collect(),
    })
}

/// Apply a selection rule and attach posterior medians.
pub fn select(s: &PosteriorSamples, rule: SelectionRule) -> Result<SelectionResult> {
    let estimates = posterior_medians(s)?;
    let (inclusion_prob, credible_intervals, selected) = match rule {
        SelectionRule::Mpm => {
            let probs = inclusion_probabilities(s)?;
            let sel = mpm_select(&probs);
            (Some(probs), None, sel)
        }
        SelectionRule::Ci95 => {
            let (sel, ci) = ci_select(s, 0.95)?;
            (None, Some(ci), sel)
        }
    };
    Ok(SelectionResult {
        rule,
        p: s.p,
        group_size: s.group_size,
        inclusion_prob,
        credible_intervals,
        selected,
        estimates,
    })
}

/// Rule the benchmark applies to a sample set: MPM when indicators exist.
pub fn default_rule(s: &PosteriorSamples) -> SelectionRule {
    if s.structure().is_some() {
        SelectionRule::Mpm
    } else {
        SelectionRule::Ci95
    }
}

/// Structure of a method's selection, for reporting.
pub fn selection_structure(s: &PosteriorSamples) -> Option<Structure> {
    s.structure()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psrf {
    pub value: f64,
    /// Within-chain variance is zero (e.g. a coefficient spiked throughout).
    pub degenerate: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Potential scale reduction factor of equal-length traces.
///
/// With zero within-chain variance the value is 1 when the chains also
/// agree, and infinite when they sit at different constants; both are
/// flagged degenerate.
pub fn psrf(chains: &[Vec<f64>]) -> Result<Psrf> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InsufficientData("PSRF requires ≥2 chains".to_string()));
    }
    let g = chains[0].len();
    if chains.iter().any(|c| c.len() != g) {
        return Err(Error::Dimension("PSRF chains must have equal length".to_string()));
    }
    if g < 10 {
        return Err(Error::InsufficientData(format!("PSRF needs at least 10 draws per chain, got {g}")));
    }
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(c)).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m as f64;
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let b = g as f64 * mean_var(&means).1;
    let scale = means.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if w <= 1e-300 * scale * scale {
        let value = if b <= 1e-24 * scale * scale * g as f64 { 1.0 } else { f64::INFINITY };
        return Ok(Psrf { value, degenerate: true });
    }
    let gf = g as f64;
    let v_hat = (gf - 1.0) / gf * w + b / gf;
    Ok(Psrf {
        value: (v_hat / w).sqrt(),
        degenerate: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrfEntry {
    pub parameter: String,
    pub psrf: f64,
    pub degenerate: bool,
}

/// PSRF for every coefficient (alpha, theta, beta) across chains.
pub fn psrf_report(chains: &[PosteriorSamples]) -> Result<Vec<PsrfEntry>> {
    if chains.len() < 2 {
        return Err(Error::InsufficientData("PSRF requires ≥2 chains".to_string()));
    }
    let first = &chains[0];
    if chains
        .iter()
        .any(|c| (c.p, c.group_size, c.q, c.k) != (first.p, first.group_size, first.q, first.k))
    {
        return Err(Error::Dimension("chains have different dimensions".to_string()));
    }
    let mut out = Vec::new();
    let mut push = |name: String, traces: Vec<Vec<f64>>| -> Result<()> {
        let r = psrf(&traces)?;
        out.push(PsrfEntry {
            parameter: name,
            psrf: r.value,
            degenerate: r.degenerate,
        });
        Ok(())
    };
    for t in 0..first.q {
        push(format!("alpha.{}", t + 1), chains.iter().map(|c| c.alpha_trace(t)).collect())?;
    }
    for m in 0..first.k {
        push(format!("theta.{}", m + 1), chains.iter().map(|c| c.theta_trace(m)).collect())?;
    }
    let l = first.group_size;
    for c in 0..first.n_effects() {
        push(
            format!("beta.{}.{}", c / l + 1, c % l + 1),
            chains.iter().map(|s| s.beta_trace(c)).collect(),
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{std_normal, RngStream};
    use crate::method::Method;

    fn samples_with(method: Method, beta_draws: &[Vec<f64>], phi_b: &[Vec<bool>], phi_w: &[Vec<bool>]) -> PosteriorSamples {
        let pl = beta_draws[0].len();
        let mut s = PosteriorSamples::new(method, pl, 1, 0, 0);
        for (g, b) in beta_draws.iter().enumerate() {
            s.beta.extend(b);
            if let Some(v) = phi_b.get(g) {
                s.phi_b.extend(v);
            }
            if let Some(v) = phi_w.get(g) {
                s.phi_w.extend(v);
            }
            s.n_draws += 1;
        }
        s
    }

    #[test]
    fn counting_probabilities() {
        let draws = vec![vec![1.0], vec![0.0], vec![1.0], vec![0.0]];
        let ind = vec![vec![true], vec![false], vec![true], vec![false]];
        let s = samples_with(Method::RblSs, &draws, &[], &ind);
        assert_eq!(inclusion_probabilities(&s).unwrap(), vec![0.5]);
        assert_eq!(mpm_select(&[0.5, 0.49, 1.0]), vec![true, false, true]);
        assert!(mpm_select(&[0.0; 4]).iter().all(|&x| !x));
    }

    #[test]
    fn group_probabilities_constant_within_group() {
        let mut s = PosteriorSamples::new(Method::RbgSs, 2, 3, 0, 0);
        for g in 0..10 {
            s.beta.extend([1.0; 6]);
            s.phi_b.extend([g % 3 == 0, true]);
            s.n_draws += 1;
        }
        let p = inclusion_probabilities(&s).unwrap();
        assert!(p[0..3].iter().all(|&v| v == p[0]));
        assert_eq!(p[3], 1.0);
    }

    #[test]
    fn no_draws_is_an_error() {
        let s = PosteriorSamples::new(Method::RblSs, 1, 1, 0, 0);
        assert!(inclusion_probabilities(&s).is_err());
    }

    #[test]
    fn constant_trace_interval() {
        let draws = vec![vec![3.0]; 40];
        let s = samples_with(Method::Rbl, &draws, &[], &[]);
        let (sel, ci) = ci_select(&s, 0.95).unwrap();
        assert_eq!(ci[0], (3.0, 3.0));
        assert!(sel[0]);
    }

    #[test]
    fn symmetric_trace_not_selected() {
        let draws: Vec<Vec<f64>> = (-50..=50).map(|v| vec![v as f64]).collect();
        let s = samples_with(Method::Rbl, &draws, &[], &[]);
        let (sel, _) = ci_select(&s, 0.95).unwrap();
        assert!(!sel[0]);
        let (sel, _) = ci_select(&s, 1.0 - 1e-12).unwrap();
        assert!(!sel[0]);
    }

    #[test]
    fn quantiles_match_order_statistics() {
        // 0..=100 shuffled: the type-7 quantile at k/100 is exactly k
        let mut vals: Vec<f64> = (0..=100).map(f64::from).collect();
        let mut rng = RngStream::new(3, 0);
        for i in (1..vals.len()).rev() {
            let j = (rand::Rng::random::<u64>(&mut rng) % (i as u64 + 1)) as usize;
            vals.swap(i, j);
        }
        let s = sorted(vals.clone());
        for k in [0, 2, 3, 50, 97, 100] {
            assert_eq!(quantile_sorted(&s, k as f64 / 100.0), k as f64);
        }
        assert_eq!(credible_interval(&vals, 0.95), (2.5, 97.5));
        assert_eq!(median(&vals), 50.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[0.0, 0.0, 5.0]), 0.0);
        assert_eq!(median(&[7.0]), 7.0);
        assert_eq!(median(&[1.0, 4.0]), 2.5);
    }

    #[test]
    fn psrf_identical_and_separated() {
        let mut rng = RngStream::new(5, 0);
        let a: Vec<f64> = (0..1000).map(|_| std_normal(&mut rng)).collect();
        let r = psrf(&[a.clone(), a.clone()]).unwrap();
        assert!((r.value - (999.0f64 / 1000.0).sqrt()).abs() < 1e-12);
        let b: Vec<f64> = (0..1000).map(|_| 10.0 + std_normal(&mut rng)).collect();
        assert!(psrf(&[a, b]).unwrap().value > 1.1);
    }

    #[test]
    fn psrf_degenerate_and_errors() {
        let z = vec![0.0; 20];
        let r = psrf(&[z.clone(), z.clone()]).unwrap();
        assert_eq!(r, Psrf { value: 1.0, degenerate: true });
        let r = psrf(&[z.clone(), vec![1.0; 20]]).unwrap();
        assert!(r.degenerate && r.value.is_infinite());
        let err = psrf(std::slice::from_ref(&z)).unwrap_err();
        assert!(err.to_string().contains("PSRF requires ≥2 chains"));
        assert!(psrf(&[vec![0.0; 5], vec![0.0; 5]]).is_err());
    }

    #[test]
    fn records_roles() {
        let mut s = PosteriorSamples::new(Method::RbsgSs, 1, 3, 0, 0);
        s.beta.extend([1.0, 0.0, 2.0]);
        s.phi_b.push(true);
        s.phi_w.extend([true, false, true]);
        s.n_draws = 1;
        let r = select(&s, SelectionRule::Mpm).unwrap();
        let recs = r.records();
        assert_eq!(recs[0].role, "main");
        assert_eq!(recs[2].role, "interaction(2)");
        assert_eq!(r.selected, vec![true, false, true]);
    }
}
