use std::fs;
use std::path::{Path, PathBuf};

use robust_gxe::data::{load_csv, prescreen_marginal, standardize, write_csv};
use robust_gxe::eval::{run_cells, write_table_csv, ReplicateReport};
use robust_gxe::gibbs::{run_chains, PosteriorSamples};
use robust_gxe::inference::{default_rule, psrf_report, select};
use robust_gxe::method::{Hyperparameters, Method, MethodConfig};
use robust_gxe::simgen::{gen_dataset, Example, ErrorModel, SimulationConfig};
use robust_gxe::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{finish, Overrides, RunConfigFile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SOFTWARE: &str = "robust-gxe";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn missing_files(files: &[PathBuf], problems: &mut Vec<String>) {
    for f in files {
        if !f.is_file() {
            problems.push(format!("file {} does not exist", f.display()));
        }
    }
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct SimulateArgs {
    /// gene-expr-ar, snp-dichotomized, snp-ld or resample-real (or 1..4).
    #[arg(long)]
    pub example: Option<String>,
    /// Error model: 1..6, or normal01, laplace0-2, mix-laplace, normal-cauchy-mix, t2, log-normal01, zero.
    #[arg(long)]
    pub error: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub active_groups: Option<usize>,
    #[arg(long)]
    pub active_effects: Option<usize>,
    /// Genotype CSV for resample-real.
    #[arg(long)]
    pub genotypes: Option<PathBuf>,
}

fn simulation_config(cfg: &RunConfigFile, args: &SimulateArgs, problems: &mut Vec<String>) -> SimulationConfig {
    let mut sim = cfg
        .simulation
        .clone()
        .unwrap_or_else(|| SimulationConfig::example1(ErrorModel::Normal01).with_seed(cfg.hyper.seed));
    if let Some(e) = &args.example {
        match e.parse::<Example>() {
            Ok(e) => sim.example = e,
            Err(err) => problems.push(format!("--example: {err}")),
        }
    }
    if let Some(e) = &args.error {
        match e.parse::<ErrorModel>() {
            Ok(e) => sim.error_model = e,
            Err(err) => problems.push(format!("--error: {err}")),
        }
    }
    sim.n = args.n.unwrap_or(sim.n);
    sim.p = args.p.unwrap_or(sim.p);
    sim.k = args.k.unwrap_or(sim.k);
    sim.q = args.q.unwrap_or(sim.q);
    sim.n_active_groups = args.active_groups.unwrap_or(sim.n_active_groups);
    sim.n_active_effects = args.active_effects.unwrap_or(sim.n_active_effects);
    if args.genotypes.is_some() {
        sim.genotype_csv = args.genotypes.clone();
    }
    sim
}

pub fn simulate(flags: &Overrides, args: &SimulateArgs) -> Result<Value> {
    let mut problems = Vec::new();
    let cfg = RunConfigFile::resolve(flags, &mut problems)?;
    let mut sim = simulation_config(&cfg, args, &mut problems);
    if let Some(seed) = flags.seed {
        sim.seed = seed;
    }
    problems.extend(cfg.common_problems());
    problems.extend(sim.problems().into_iter().map(|p| format!("simulation: {p}")));
    if let Some(g) = &sim.genotype_csv {
        missing_files(std::slice::from_ref(g), &mut problems);
    }
    finish(problems)?;

    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let (train, test, truth) = gen_dataset(&sim, args.replicate)?;
    write_csv(&train, dir.join("train.csv"))?;
    write_csv(&test, dir.join("test.csv"))?;
    write_json(&dir.join("truth.json"), &truth)?;
    let manifest = json!({
        "software": SOFTWARE,
        "version": VERSION,
        "seed": sim.seed,
        "replicate": args.replicate,
        "simulation": sim,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(json!({
        "out": dir,
        "n_train": train.n(),
        "n_test": test.n(),
        "p": train.p(),
        "active_effects": truth.active_effects.len(),
    }))
}

pub fn fit(flags: &Overrides) -> Result<Value> {
    let mut problems = Vec::new();
    let cfg = RunConfigFile::resolve(flags, &mut problems)?;
    cfg.require_method(&mut problems);
    cfg.require_data(&mut problems);
    problems.extend(cfg.common_problems());
    finish(problems)?;

    let method = cfg.method.expect("validated");
    let data = load_csv(cfg.data.as_ref().expect("validated"))?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let ds = if cfg.standardize.unwrap_or(true) {
        let (ds, record) = standardize(&data)?;
        write_json(&dir.join("standardization.json"), &record)?;
        ds
    } else {
        data
    };
    let config = MethodConfig::new(method, cfg.hyper.clone());
    let m = cfg.chains();
    let runs = run_chains(&ds, &config, m)?;
    let mut files = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let path = dir.join(format!("samples_chain{}.csv", i + 1));
        run.samples.write_csv_path(&path)?;
        run.manifest(&ds, &config, i as u64)
            .write(dir.join(format!("manifest_chain{}.json", i + 1)))?;
        files.push(path);
    }
    Ok(json!({
        "method": method,
        "chains": m,
        "stored_draws": config.hyper.stored_draws(),
        "seed": config.hyper.seed,
        "samples": files,
    }))
}

fn read_samples(files: &[PathBuf]) -> Result<Vec<PosteriorSamples>> {
    files.iter().map(PosteriorSamples::read_csv_path).collect()
}

pub fn select_cmd(flags: &Overrides, files: &[PathBuf]) -> Result<Value> {
    let mut problems = Vec::new();
    let cfg = RunConfigFile::resolve(flags, &mut problems)?;
    if files.is_empty() {
        problems.push("at least one samples file is required".to_string());
    }
    missing_files(files, &mut problems);
    problems.extend(cfg.common_problems());
    finish(problems)?;

    let chains = read_samples(files)?;
    let mut all = chains[0].clone();
    for c in &chains[1..] {
        all.extend(c)?;
    }
    if let Some(m) = cfg.method {
        all.method = Some(m);
    }
    let rule = cfg.rule.unwrap_or_else(|| default_rule(&all));
    let sel = select(&all, rule)?;
    let doc = json!({
        "software": SOFTWARE,
        "version": VERSION,
        "method": all.method,
        "rule": rule,
        "draws": all.n_draws,
        "selected_count": sel.selected_count(),
        "effects": sel.records(),
        "estimates": sel.estimates,
    });
    if let Some(out) = &cfg.out {
        write_json(out, &doc)?;
    }
    Ok(doc)
}

pub fn diagnose(flags: &Overrides, files: &[PathBuf]) -> Result<Value> {
    let mut problems = Vec::new();
    let cfg = RunConfigFile::resolve(flags, &mut problems)?;
    missing_files(files, &mut problems);
    problems.extend(cfg.common_problems());
    finish(problems)?;
    if files.len() < 2 {
        return Err(Error::InsufficientData("PSRF requires ≥2 chains".to_string()));
    }

    let chains = read_samples(files)?;
    let entries = psrf_report(&chains)?;
    let max = entries.iter().map(|e| e.psrf).fold(f64::NEG_INFINITY, f64::max);
    let over: Vec<&str> = entries.iter().filter(|e| !(e.psrf <= 1.1)).map(|e| e.parameter.as_str()).collect();
    let doc = json!({
        "software": SOFTWARE,
        "version": VERSION,
        "chains": chains.len(),
        "draws_per_chain": chains[0].n_draws,
        "max_psrf": if max.is_finite() { json!(max) } else { json!("inf") },
        "above_1.1": over,
        "entries": entries.iter().map(|e| json!({
            "parameter": e.parameter,
            "psrf": if e.psrf.is_finite() { json!(e.psrf) } else { json!("inf") },
            "degenerate": e.degenerate,
        })).collect::<Vec<_>>(),
    });
    if let Some(out) = &cfg.out {
        write_json(out, &doc)?;
    }
    Ok(doc)
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated methods; defaults to --method or the config.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Comma-separated error models; defaults to the simulation's.
    #[arg(long, value_delimiter = ',')]
    pub errors: Vec<String>,
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub active_groups: Option<usize>,
    #[arg(long)]
    pub active_effects: Option<usize>,
}

fn cells(cfg: &RunConfigFile, methods: &[Method]) -> Vec<(String, MethodConfig)> {
    match &cfg.beta_priors {
        Some(priors) => priors
            .iter()
            .map(|&(a, b)| {
                let h = Hyperparameters {
                    a0: a,
                    b0: b,
                    a1: a,
                    b1: b,
                    ..cfg.hyper.clone()
                };
                (format!("Beta({a}, {b})"), MethodConfig::new(Method::RbsgSs, h))
            })
            .collect(),
        None => methods
            .iter()
            .map(|&m| (m.label(), MethodConfig::new(m, cfg.hyper.clone())))
            .collect(),
    }
}

pub fn replicate(flags: &Overrides, args: &ReplicateArgs) -> Result<Value> {
    let mut problems = Vec::new();
    let mut cfg = RunConfigFile::resolve(flags, &mut problems)?;
    let sim_args = SimulateArgs {
        example: args.example.clone(),
        n: args.n,
        p: args.p,
        k: args.k,
        q: args.q,
        active_groups: args.active_groups,
        active_effects: args.active_effects,
        ..SimulateArgs::default()
    };
    let mut sim = simulation_config(&cfg, &sim_args, &mut problems);
    if let Some(seed) = flags.seed {
        sim.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = Some(r);
    }
    let mut methods: Vec<Method> = Vec::new();
    for m in &args.methods {
        match m.parse() {
            Ok(m) => methods.push(m),
            Err(e) => problems.push(format!("--methods: {e}")),
        }
    }
    if methods.is_empty() {
        methods = cfg.methods.clone().unwrap_or_default();
    }
    if methods.is_empty() {
        methods.extend(cfg.method);
    }
    if methods.is_empty() && cfg.beta_priors.is_none() {
        problems.push("no methods given (--methods, --method, or \"methods\" in the config)".to_string());
    }
    let mut errors: Vec<ErrorModel> = Vec::new();
    for e in &args.errors {
        match e.parse() {
            Ok(e) => errors.push(e),
            Err(err) => problems.push(format!("--errors: {err}")),
        }
    }
    if errors.is_empty() {
        errors = cfg.error_models.clone().unwrap_or_else(|| vec![sim.error_model]);
    }
    problems.extend(cfg.common_problems());
    problems.extend(sim.problems().into_iter().map(|p| format!("simulation: {p}")));
    finish(problems)?;

    let r = cfg.replicates.unwrap_or(100);
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let cells = cells(&cfg, &methods);
    let mut reports: Vec<ReplicateReport> = Vec::new();
    for e in &errors {
        let s = SimulationConfig {
            error_model: *e,
            ..sim.clone()
        };
        let report = run_cells(&cells, &s, r, e.label())?;
        let slug = e.label().to_ascii_lowercase().replace(' ', "_");
        report.write_json(dir.join(format!("report_{slug}.json")))?;
        reports.push(report);
    }
    let table = dir.join("table.csv");
    write_table_csv(&reports, &table)?;
    let manifest = json!({
        "software": SOFTWARE,
        "version": VERSION,
        "seed": cfg.hyper.seed,
        "simulation_seed": sim.seed,
        "replicates": r,
        "simulation": sim,
        "hyper": cfg.hyper,
        "cells": cells.iter().map(|c| &c.0).collect::<Vec<_>>(),
        "error_models": errors,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(json!({
        "table": table,
        "summaries": reports.iter().map(|r| json!({
            "scenario": r.scenario,
            "cells": r.summaries(),
        })).collect::<Vec<_>>(),
    }))
}

pub fn prescreen(flags: &Overrides) -> Result<Value> {
    let mut problems = Vec::new();
    let cfg = RunConfigFile::resolve(flags, &mut problems)?;
    cfg.require_data(&mut problems);
    if cfg.cutoff.is_none() {
        problems.push("cutoff is required (--cutoff or \"cutoff\" in the config)".to_string());
    }
    problems.extend(cfg.common_problems());
    finish(problems)?;

    let cutoff = cfg.cutoff.expect("validated");
    let ds = load_csv(cfg.data.as_ref().expect("validated"))?;
    let retained = prescreen_marginal(&ds, cutoff)?;
    let doc = json!({
        "software": SOFTWARE,
        "version": VERSION,
        "cutoff": cutoff,
        "p": ds.p(),
        "retained": retained,
    });
    if let Some(out) = &cfg.out {
        if out.extension().is_some_and(|e| e == "csv") {
            write_csv(&ds.select_groups(&retained)?, out)?;
        } else {
            write_json(out, &doc)?;
        }
    }
    Ok(doc)
}
