//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p robust-gxe --test acceptance`. Set `ACCEPTANCE_ONLY=1,4`
//! to run a subset.

mod common;

use std::time::Instant;

use robust_gxe::distributions::{
    laplace_cdf, sample_inverse_gaussian, sample_laplace_error, sample_truncated_normal_positive,
    RngStream,
};
use robust_gxe::eval::{run_replicates, sensitivity_sweep, tp_spread};
use robust_gxe::geweke::{geweke_test, GewekeConfig};
use robust_gxe::gibbs::{run_chain, run_chains, PosteriorSamples};
use robust_gxe::inference::{inclusion_probabilities, median, psrf_report, quantile_sorted};
use robust_gxe::prelude::*;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk_hyper() -> Hyperparameters {
    Hyperparameters {
        n_iter: 15_000,
        burn_in: 7_500,
        ..Hyperparameters::default()
    }
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0_f64;
    let mut lines = Vec::new();
    let mut pass = true;
    for m in Method::ALL {
        let r = geweke_test(m, &GewekeConfig::tiny(m, 100_000)).expect("geweke run");
        let w = r.worst().expect("statistics");
        worst = worst.max(w.z.abs());
        if r.max_abs_z() >= 4.0 {
            pass = false;
        }
        lines.push(format!("{}={:.2}({})", m.name(), w.z.abs(), w.name));
    }
    outcome(pass, format!("max |z| {worst:.2}; {}", lines.join(" ")))
}

fn ks_distance(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn criterion_2() -> Outcome {
    let mut rng = RngStream::new(2, 0);
    let x: Vec<f64> = (0..100_000).map(|_| sample_laplace_error(1.0, &mut rng).unwrap()).collect();
    // density (nu / 2) exp(-nu |e|) at nu = 1
    let d = ks_distance(x, |v| laplace_cdf(v, 1.0));
    outcome(d < 0.01, format!("KS {d:.4} against Laplace(0, 1)"))
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

fn criterion_3() -> Outcome {
    let mut rng = RngStream::new(3, 0);
    let ig: Vec<f64> = (0..1_000_000).map(|_| sample_inverse_gaussian(2.0, 4.0, &mut rng).unwrap()).collect();
    let (m, v) = mean_var(&ig);
    let tn: Vec<f64> = (0..1_000_000)
        .map(|_| sample_truncated_normal_positive(0.0, 1.0, &mut rng).unwrap())
        .collect();
    let (tm, _) = mean_var(&tn);
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let (em, ev, et) = ((m - 2.0).abs() / 2.0, (v - 2.0).abs() / 2.0, (tm - target).abs() / target);
    outcome(
        em < 0.01 && ev < 0.03 && et < 0.01,
        format!("IG mean {m:.4} ({:.2}%), var {v:.4} ({:.2}%); N+ mean {tm:.4} ({:.2}%)", em * 100.0, ev * 100.0, et * 100.0),
    )
}

struct DeskRun {
    train: GxEDataset,
    truth: TrueModel,
    samples: PosteriorSamples,
    seconds: f64,
}

fn desk_run() -> DeskRun {
    let sim = SimulationConfig::example1(ErrorModel::Normal01);
    let (train, _, truth) = gen_dataset(&sim, 0).unwrap();
    let (train, _) = standardize(&train).unwrap();
    let hyper = desk_hyper();
    let config = MethodConfig::new(Method::RbsgSs, hyper.clone());
    let t = Instant::now();
    let samples = run_chain(&train, &config, &mut RngStream::new(hyper.seed, 0)).unwrap();
    DeskRun {
        train,
        truth,
        samples,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn criterion_4(run: &DeskRun) -> Outcome {
    let sel = select(&run.samples, SelectionRule::Mpm).unwrap();
    let (tp, fp) = score_selection(&sel.selected, &run.truth);
    outcome(
        tp >= 22 && fp <= 8 && run.seconds < 1800.0,
        format!("TP {tp}/{} FP {fp} in {:.0}s", run.truth.active_mask().iter().filter(|&&a| a).count(), run.seconds),
    )
}

fn criterion_6(run: &DeskRun) -> Outcome {
    let probs = inclusion_probabilities(&run.samples).unwrap();
    let mask = run.truth.active_mask();
    let inactive: Vec<usize> = (0..mask.len()).filter(|&c| !mask[c]).collect();
    let low = inactive.iter().filter(|&&c| probs[c] < 0.5).count();
    let mostly_zero = inactive
        .iter()
        .filter(|&&c| {
            let tr = run.samples.beta_trace(c);
            tr.iter().filter(|&&b| b == 0.0).count() * 2 > tr.len()
        })
        .count();
    let frac_low = low as f64 / inactive.len() as f64;
    let frac_zero = mostly_zero as f64 / inactive.len() as f64;

    let config = MethodConfig::new(Method::Rbsg, desk_hyper());
    let dense = run_chain(&run.train, &config, &mut RngStream::new(config.hyper.seed, 0)).unwrap();
    let zeros = dense.beta.iter().filter(|&&b| b == 0.0).count();
    outcome(
        frac_low >= 0.99 && frac_zero >= 0.99 && zeros == 0,
        format!(
            "inactive with p < 0.5: {low}/{}; mostly-zero draws: {mostly_zero}/{}; RBSG exact zeros: {zeros}",
            inactive.len(),
            inactive.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let methods = [Method::RbsgSs, Method::BsgSs, Method::RblSs];
    let mut pass = true;
    let mut parts = Vec::new();
    for err in [ErrorModel::Laplace0_2, ErrorModel::NormalCauchyMix] {
        let sim = SimulationConfig::example1(err).with_dims(250, 50, 5, 3);
        let report = run_replicates(&methods, &sim, &desk_hyper(), 10).unwrap();
        let tp: Vec<f64> = methods.iter().map(|m| report.summary(&m.label()).unwrap().tp.mean).collect();
        pass &= tp[0] > tp[1] && tp[0] > tp[2];
        parts.push(format!(
            "{}: RBSG-SS {:.1}, BSG-SS {:.1}, RBL-SS {:.1}",
            err.label(),
            tp[0],
            tp[1],
            tp[2]
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7(run: &DeskRun) -> Outcome {
    let config = MethodConfig::new(Method::RbsgSs, desk_hyper());
    let chains: Vec<PosteriorSamples> = run_chains(&run.train, &config, 3)
        .unwrap()
        .into_iter()
        .map(|c| c.samples)
        .collect();
    let report = psrf_report(&chains).unwrap();
    let coef: Vec<_> = report
        .iter()
        .filter(|e| ["alpha.", "theta.", "beta."].iter().any(|p| e.parameter.starts_with(p)))
        .collect();
    let worst = coef.iter().max_by(|a, b| a.psrf.total_cmp(&b.psrf)).unwrap();
    let over = coef.iter().filter(|e| !(e.psrf <= 1.1)).count();
    outcome(
        over == 0,
        format!("{} coefficients, {over} above 1.1, max {:.3} ({})", coef.len(), worst.psrf, worst.parameter),
    )
}

fn criterion_8() -> Outcome {
    let priors = [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (1.0, 5.0), (5.0, 1.0)];
    let sim = SimulationConfig::example1(ErrorModel::Laplace0_2);
    let report = sensitivity_sweep(&priors, &sim, &desk_hyper(), 1).unwrap();
    let tps: Vec<String> = report
        .summaries()
        .iter()
        .map(|s| format!("{} {}", s.label, s.tp.mean))
        .collect();
    let spread = tp_spread(&report);
    outcome(spread <= 4.0, format!("TP range {spread}; {}", tps.join(", ")))
}

fn criterion_9() -> Outcome {
    let toy = Toy::small();
    let mut worst = 0.0_f64;
    for &(pi, v) in &[(0.5, 1.0), (0.1, 0.3), (0.9, 4.0)] {
        worst = worst.max(relative_error(model_coefficient_weight(&toy, pi, v), brute_coefficient_weight(&toy, pi, v)));
    }
    for &(b, pi, s2) in &[(1.0, 0.5, 1.0), (-0.6, 0.2, 0.5), (2.0, 0.8, 0.1)] {
        worst = worst.max(relative_error(model_scale_weight(&toy, b, pi, s2), brute_scale_weight(&toy, b, pi, s2)));
    }

    let mut rng = RngStream::new(9, 0);
    let mut exact = true;
    for n in [201usize, 202] {
        let trace: Vec<i64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -50..50)).collect();
        let f: Vec<f64> = trace.iter().map(|&v| v as f64).collect();
        let mut sorted = f.clone();
        sorted.sort_by(f64::total_cmp);
        exact &= median(&f) == oracle_median(&trace);
        let levels: &[(usize, usize)] = if n == 201 {
            &[(1, 40), (1, 10), (1, 4), (1, 2), (3, 4), (9, 10), (39, 40)]
        } else {
            &[(1, 4), (1, 2), (3, 4)]
        };
        for &(num, den) in levels {
            exact &= quantile_sorted(&sorted, num as f64 / den as f64) == oracle_quantile(&trace, num, den);
        }
    }
    outcome(
        worst < 1e-8 && exact,
        format!("max relative error of weights {worst:.2e}; medians and quantiles exact: {exact}"),
    )
}

fn criterion_10() -> Outcome {
    let sim = SimulationConfig::example1(ErrorModel::Laplace0_2).with_dims(120, 20, 5, 3);
    let (train, _, _) = gen_dataset(&sim, 3).unwrap();
    let (train, _) = standardize(&train).unwrap();
    let hyper = Hyperparameters {
        n_iter: 2_000,
        burn_in: 1_000,
        seed: 77,
        ..Hyperparameters::default()
    };
    let bytes = |m: Method| {
        let config = MethodConfig::new(m, hyper.clone());
        let s = run_chain(&train, &config, &mut RngStream::new(hyper.seed, 0)).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        out
    };
    let mut same = 0;
    for m in Method::ALL {
        if bytes(m) == bytes(m) {
            same += 1;
        }
    }
    outcome(same == Method::ALL.len(), format!("{same}/12 methods byte-identical"))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let want = |i: usize| only.as_ref().is_none_or(|o| o.contains(&i));

    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |i: usize, f: &dyn Fn() -> Outcome| {
        if want(i) {
            let t = Instant::now();
            let o = f();
            println!(
                "criterion {i:2}: {} ({:.0}s) {}",
                if o.pass { "PASS" } else { "FAIL" },
                t.elapsed().as_secs_f64(),
                o.detail
            );
            results.push((i, o));
        }
    };
    record(1, &criterion_1);
    record(2, &criterion_2);
    record(3, &criterion_3);
    if want(4) || want(6) || want(7) {
        let run = desk_run();
        record(4, &|| criterion_4(&run));
        record(6, &|| criterion_6(&run));
        record(7, &|| criterion_7(&run));
    }
    record(5, &criterion_5);
    record(8, &criterion_8);
    record(9, &criterion_9);
    record(10, &criterion_10);

    results.sort_by_key(|r| r.0);
    println!();
    for (i, o) in &results {
        println!("criterion {i:2}: {}", if o.pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
