use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use psos_core::dynamics::Chain;
use psos_core::oracle::Report;
use psos_core::rng::StreamId;
use psos_core::HeightField;

use crate::config::{canonical_hash, set_path, Config};
use crate::error::{Error, Result};
use crate::experiments::{self as ex, CiPolicy, EXPERIMENTS};
use crate::output::{num, opt, RunDir};
use crate::schema;
use crate::suites::{run_suite, SuiteOptions, SUITES};

#[derive(Debug, Parser)]
#[command(name = "psos", version, about = "Simulate, verify and run experiments on the p-SOS interface model")]
pub struct Cli {
    /// JSON or TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "PSOS_WORKERS")]
    pub workers: Option<usize>,
    /// Output root; each run writes to `<out>/<config-hash prefix>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Validate and print the resolved configuration without running.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Which end of the tail confidence interval the typical-height rule uses.
    #[arg(long, global = true, value_enum)]
    pub ci_policy: Option<CiPolicy>,
    /// Record wall-clock start and end times in the manifest.
    #[arg(long, global = true)]
    pub record_time: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Box side, or a comma-separated list for hitting-time.
    #[arg(long = "L", value_delimiter = ',')]
    pub side: Vec<usize>,
    /// free, floor or floor_ceiling.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub n_plus: Option<i32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Glauber chains and write snapshots and observables.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        sweeps: Option<u64>,
    },
    /// Run an exact verification suite.
    Verify {
        /// peierls, fkg, sandwich, detailed-balance, coupling or all.
        suite: String,
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        #[arg(long = "L")]
        side: Option<usize>,
        /// Reverses every checked inequality (negative control).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run a named experiment.
    Experiment {
        name: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long = "K")]
        k: Option<i64>,
        #[arg(long = "M")]
        proxy_side: Option<usize>,
        #[arg(long = "T-max", alias = "t-max")]
        t_max: Option<u64>,
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        h: Vec<i64>,
        #[arg(long, value_delimiter = ',')]
        separations: Vec<usize>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long = "H")]
        typical_height: Option<i64>,
    },
    /// Print a shipped JSON schema, or list them.
    Schema { name: Option<String> },
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cli.workers {
            if w == 0 {
                return Err(Error::Config("--workers must be positive".into()));
            }
            b = b.num_threads(w);
        }
        b.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?
    };
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate { model, sweeps } => {
            let mut v = base_value(cli)?;
            apply_model_args(&mut v, model, false);
            if let Some(s) = sweeps {
                set_path(&mut v, &["simulate", "sweeps"], json!(s));
            }
            let cfg = Config::from_value(v)?;
            cfg.model()?;
            if cli.dry_run {
                println!("{}", cfg.to_json_pretty());
                return Ok(0);
            }
            simulate(cli, &cfg)
        }
        Command::Verify { suite, p, beta, side, inject_fault } => {
            let names: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else if SUITES.contains(&suite.as_str()) {
                vec![suite.as_str()]
            } else {
                return Err(Error::Config(format!("unknown suite `{suite}`; valid: {}, all", SUITES.join(", "))));
            };
            let opts = SuiteOptions { p: p.clone(), beta: beta.clone(), side: *side, seed: cli.seed.unwrap_or(0) };
            if cli.dry_run {
                println!("{}", serde_json::to_string_pretty(&json!({"suites": names, "options": opts})).unwrap());
                return Ok(0);
            }
            verify(cli, &names, &opts, *inject_fault)
        }
        Command::Experiment { name, model, a, k, proxy_side, t_max, n_seeds, h, separations, samples, typical_height } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown experiment `{name}`; valid: {}", EXPERIMENTS.join(", "))));
            }
            let mut v = base_value(cli)?;
            apply_model_args(&mut v, model, name == "hitting-time");
            let e = |v: &mut Value, key: &str, val: Value| set_path(v, &["experiment", key], val);
            if let Some(x) = a {
                e(&mut v, "a", json!(x));
            }
            if let Some(x) = k {
                e(&mut v, "K", json!(x));
            }
            if let Some(x) = proxy_side {
                e(&mut v, "M", json!(x));
            }
            if let Some(x) = t_max {
                e(&mut v, "T_max", json!(x));
            }
            if let Some(x) = n_seeds {
                e(&mut v, "n_seeds", json!(x));
            }
            if !h.is_empty() {
                e(&mut v, "h_list", json!(h));
            }
            if !separations.is_empty() {
                e(&mut v, "separations", json!(separations));
            }
            if let Some(x) = samples {
                e(&mut v, "samples", json!(x));
            }
            if let Some(x) = typical_height {
                e(&mut v, "H", json!(x));
            }
            if let Some(pol) = cli.ci_policy {
                e(&mut v, "ci_policy", serde_json::to_value(pol).unwrap());
            }
            let cfg = Config::from_value(v)?;
            if cli.dry_run {
                println!("{}", cfg.to_json_pretty());
                return Ok(0);
            }
            experiment(cli, name, &cfg)
        }
        Command::Schema { name } => {
            match name {
                None => {
                    for n in schema::NAMES {
                        println!("{n}");
                    }
                }
                Some(n) => match schema::get(n) {
                    Some(s) => print!("{s}"),
                    None => {
                        return Err(Error::Config(format!("unknown schema `{n}`; valid: {}", schema::NAMES.join(", "))))
                    }
                },
            }
            Ok(0)
        }
    }
}

fn base_value(cli: &Cli) -> Result<Value> {
    let mut v = match &cli.config {
        Some(p) => Config::read_value(p)?,
        None => json!({}),
    };
    if !v.is_object() {
        return Err(Error::Config("configuration must be a JSON object".into()));
    }
    if let Some(s) = cli.seed {
        set_path(&mut v, &["seed"], json!(s));
    }
    Ok(v)
}

fn apply_model_args(v: &mut Value, m: &ModelArgs, side_list: bool) {
    if let Some(p) = m.p {
        set_path(v, &["p"], json!(p));
    }
    if let Some(b) = m.beta {
        set_path(v, &["beta"], json!(b));
    }
    if side_list && !m.side.is_empty() {
        set_path(v, &["experiment", "L_list"], json!(m.side));
    } else if let Some(&l) = m.side.first() {
        set_path(v, &["L"], json!(l));
    }
    if let Some(mode) = &m.mode {
        set_path(v, &["mode"], json!(mode));
    }
    if let Some(n) = m.n_plus {
        set_path(v, &["n_plus"], json!(n));
    }
}

fn out_root(cli: &Cli, cfg: Option<&Config>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Serialize)]
struct Snapshot<'a> {
    replica: usize,
    step: u64,
    sweeps: f64,
    heights: &'a [i32],
}

fn simulate(cli: &Cli, cfg: &Config) -> Result<i32> {
    let model = cfg.model()?;
    let sim = &cfg.simulate;
    if sim.replicas == 0 || sim.sample_every == 0 {
        return Err(Error::Config("simulate.replicas and simulate.sample_every must be positive".into()));
    }
    let geom = *model.geometry();
    let start = HeightField::constant(&geom, sim.start_height);
    model.check_field(&start)?;
    let hash = cfg.hash("simulate");
    let per_replica: Vec<Vec<(u64, HeightField, f64)>> = (0..sim.replicas)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut chain = Chain::new(&model, start.clone(), StreamId::new(cfg.seed, &[0x7369_6d75, r as u64]))?;
            let mut rows = vec![(0, chain.field().clone(), model.total_energy(chain.field())?.value())];
            let mut t = 0;
            while t < sim.sweeps {
                let k = sim.sample_every.min(sim.sweeps - t);
                chain.run_sweeps(&model, k);
                t += k;
                rows.push((chain.steps(), chain.field().clone(), model.total_energy(chain.field())?.value()));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut run = RunDir::create(&out_root(cli, Some(cfg)), &hash, "simulate", cli.record_time)?;
    let n = geom.num_sites() as f64;
    let formats = &cfg.output.formats;
    if formats.iter().any(|f| f == "jsonl") {
        let snaps = per_replica.iter().enumerate().flat_map(|(r, rows)| {
            rows.iter().map(move |(step, f, _)| Snapshot { replica: r, step: *step, sweeps: *step as f64 / n, heights: f.heights() })
        });
        run.write_jsonl("snapshots.jsonl", snaps)?;
    }
    if formats.iter().any(|f| f == "csv") {
        let mut rows = Vec::new();
        for (r, reps) in per_replica.iter().enumerate() {
            for (step, f, energy) in reps {
                let (lo, hi) = f.min_max();
                let mean = f.heights().iter().map(|&h| h as f64).sum::<f64>() / n;
                rows.push(vec![
                    r.to_string(),
                    step.to_string(),
                    num(*step as f64 / n),
                    num(mean),
                    lo.to_string(),
                    hi.to_string(),
                    num(f.count_at_least(1) as f64 / n),
                    num(*energy),
                ]);
            }
        }
        run.write_csv(
            "observables.csv",
            &["replica", "step", "sweeps", "mean_height", "min_height", "max_height", "frac_ge_1", "energy"],
            &rows,
        )?;
    }
    run.write_json("config.json", cfg)?;
    for r in 0..sim.replicas {
        run.add_seed(format!("replica={r}"), "done");
    }
    let dir = run.finish()?;
    println!("{}", dir.display());
    Ok(0)
}

#[derive(Serialize)]
struct SuiteFile<'a> {
    suite: &'a str,
    config_hash: &'a str,
    passed: bool,
    checks: u64,
    violations: u64,
    reports: &'a [Report],
}

fn verify(cli: &Cli, names: &[&str], opts: &SuiteOptions, inject_fault: bool) -> Result<i32> {
    let request = json!({"suites": names, "options": opts, "inject_fault": inject_fault});
    let hash = canonical_hash("verify", &request);
    let mut all = Vec::new();
    for &name in names {
        let mut reports = run_suite(name, opts)?;
        if inject_fault {
            reports = reports.iter().map(Report::flipped).collect();
        }
        all.push((name, reports));
    }
    let mut run = RunDir::create(&out_root(cli, None), &hash, "verify", cli.record_time)?;
    let mut failed = false;
    for (name, reports) in &all {
        let checks = reports.iter().map(|r| r.checks).sum();
        let violations: u64 = reports.iter().map(|r| r.violations).sum();
        failed |= violations > 0;
        let file = SuiteFile { suite: name, config_hash: &hash, passed: violations == 0, checks, violations, reports };
        run.write_json(&format!("report_{name}.json"), &file)?;
        run.add_seed(format!("suite={name}"), if violations == 0 { "done" } else { "failed" });
        println!("{name}: {checks} checks, {violations} violations, {}", if violations == 0 { "PASS" } else { "FAIL" });
    }
    let dir = run.finish()?;
    println!("{}", dir.display());
    Ok(if failed { 1 } else { 0 })
}

fn req<T: Copy>(x: Option<T>, field: &str) -> Result<T> {
    x.ok_or_else(|| Error::Config(format!("missing required field `{field}`")))
}

fn tail_settings(cfg: &Config, default_side: usize) -> Result<ex::TailSettings> {
    let e = &cfg.experiment;
    let mut s = ex::TailSettings::new(cfg.p()?, cfg.beta()?, e.proxy_side.unwrap_or(default_side), cfg.seed);
    s.measure = e.tail_measure.unwrap_or_default();
    if let Some(x) = e.burn_in {
        s.burn_in_sweeps = x;
    }
    if let Some(x) = e.samples.or(e.tail_samples) {
        s.sample_sweeps = x;
    }
    if let Some(x) = e.thin {
        s.thin = x;
    }
    if let Some(x) = e.chains {
        s.chains = x;
    }
    if let Some(x) = e.batches {
        s.batches = x;
    }
    Ok(s)
}

fn tail_rows(tails: &[ex::TailEstimate]) -> Vec<Vec<String>> {
    tails
        .iter()
        .map(|t| {
            vec![
                t.h.to_string(),
                num(t.p_hat),
                num(t.ci),
                num(t.indicator_hat),
                num(t.wilson_lo),
                num(t.wilson_hi),
                t.n_samples.to_string(),
                t.box_side.to_string(),
            ]
        })
        .collect()
}

/// CSV header and rows.
type Table = (Vec<&'static str>, Vec<Vec<String>>);

const TAIL_HEADER: [&str; 8] = ["h", "p_hat", "ci", "indicator_hat", "wilson_lo", "wilson_hi", "n_samples", "M"];

/// Runs experiment `name` and writes `summary.json`, `series.csv` and `plotdata.csv`.
fn experiment(cli: &Cli, name: &str, cfg: &Config) -> Result<i32> {
    let hash = cfg.hash(&format!("experiment {name}"));
    let e = &cfg.experiment;
    let mut seeds: Vec<(String, String)> = Vec::new();
    let mut exit = 0;
    let (result, series, plot): (Value, Table, Table) = match name {
        "tail-rates" => {
            let s = tail_settings(cfg, 64)?;
            let hs = e.h_list.clone().unwrap_or_else(|| vec![1, 2, 3]);
            let r = ex::tail_rates(&s, &hs)?;
            for c in 0..s.chains {
                seeds.push((format!("M={}/chain={c}", s.box_side), "done".into()));
            }
            let plot = r
                .estimates
                .iter()
                .zip(&r.neg_log)
                .map(|(t, nl)| {
                    let fitted = r.fit.map(|f| f.intercept + f.slope * t.h as f64).unwrap_or(f64::NAN);
                    vec![t.h.to_string(), num(*nl), num(fitted)]
                })
                .collect();
            (
                json!({"settings": s, "rates": r}),
                (TAIL_HEADER.to_vec(), tail_rows(&r.estimates)),
                (vec!["h", "neg_log_p_hat", "fitted"], plot),
            )
        }
        "typical-height" => {
            let side = cfg.side()?;
            let s = tail_settings(cfg, ex::tail::default_proxy_side(side))?;
            let policy = e.ci_policy.unwrap_or_default();
            let r = ex::estimate_h(&s, side, policy, e.level.unwrap_or(30))?;
            if !r.tails.is_empty() {
                for c in 0..s.chains {
                    seeds.push((format!("M={}/chain={c}", s.box_side), "done".into()));
                }
            }
            let plot = r.tails.iter().map(|t| vec![t.h.to_string(), num(t.value(policy)), num(r.threshold)]).collect();
            (
                json!({"settings": s, "L": side, "typical_height": r}),
                (TAIL_HEADER.to_vec(), tail_rows(&r.tails)),
                (vec!["h", "tail", "threshold"], plot),
            )
        }
        "concentration" => {
            let mut s = ex::ConcentrationSettings::new(cfg.p()?, cfg.beta()?, cfg.side()?, e.k.unwrap_or(2), cfg.seed);
            s.n_plus = cfg.n_plus;
            s.typical_height = e.typical_height;
            s.ci_policy = e.ci_policy.unwrap_or_default();
            if let Some(x) = e.tail_samples {
                s.tail_sample_sweeps = x;
            }
            if let Some(x) = e.burn_in {
                s.burn_in_sweeps = x;
            }
            if let Some(x) = e.samples {
                s.sample_sweeps = x;
            }
            if let Some(x) = e.thin {
                s.thin = x;
            }
            s.high_start = e.high_start;
            if let Some(x) = e.tolerance {
                s.tolerance = x;
            }
            if let Some(x) = e.epsilon {
                s.epsilon = x;
            }
            let r = match ex::concentration_experiment(&s) {
                Ok(r) => r,
                Err(Error::Unmixed(msg)) => {
                    // the report is written, flagged, and the run fails
                    exit = 1;
                    seeds.push(("start=low".into(), "failed".into()));
                    seeds.push(("start=high".into(), "failed".into()));
                    let mut run = RunDir::create(&out_root(cli, Some(cfg)), &hash, "experiment", cli.record_time)?;
                    run.write_json(
                        "summary.json",
                        &json!({"experiment": name, "config_hash": hash, "seed": cfg.seed, "config": cfg, "status": "unmixed", "result": {"message": msg}}),
                    )?;
                    for (t, st) in seeds {
                        run.add_seed(t, st);
                    }
                    run.finish()?;
                    eprintln!("error: chains did not mix: {msg}");
                    return Ok(exit);
                }
                Err(err) => return Err(err),
            };
            seeds.push(("start=low".into(), "done".into()));
            seeds.push(("start=high".into(), "done".into()));
            let series = r.series.iter().map(|(st, step, f)| vec![st.clone(), step.to_string(), num(*f)]).collect();
            let plot = r.by_k.iter().map(|(k, f)| vec![k.to_string(), (r.typical_height - k).to_string(), num(*f)]).collect();
            let mut rv = serde_json::to_value(&r).unwrap();
            rv.as_object_mut().unwrap().remove("series");
            (
                json!({"settings": s, "concentration": rv}),
                (vec!["start", "step", "fraction"], series),
                (vec!["K", "level", "fraction"], plot),
            )
        }
        "hitting-time" => {
            let sides = e.sides.clone().or(cfg.side.map(|l| vec![l])).ok_or_else(|| Error::Config("missing required field `L`".into()))?;
            let mut s = ex::HittingSettings::new(cfg.p()?, cfg.beta()?, req(e.a, "a")?, sides, cfg.seed);
            if let Some(x) = e.n_seeds {
                s.n_seeds = x;
            }
            if let Some(x) = e.t_max_sweeps {
                s.t_max_sweeps = x;
            }
            if let Some(x) = e.target {
                s.target = x;
            }
            s.fraction = e.fraction;
            s.n_plus = cfg.n_plus;
            if let Some(x) = e.start {
                s.start = x;
            }
            if let Some(x) = e.nu_burn_in {
                s.nu_burn_in_sweeps = x;
            }
            if let Some(x) = e.delta {
                s.delta = x;
            }
            s.typical_height = e.typical_height;
            s.ci_policy = e.ci_policy.unwrap_or_default();
            if let Some(x) = e.tail_samples {
                s.tail_sample_sweeps = x;
            }
            let r = ex::hitting_time_experiment(&s)?;
            for run in &r.runs {
                seeds.push((format!("L={}/seed={}", run.side, run.seed_index), run.status.clone()));
            }
            let series = r
                .runs
                .iter()
                .map(|x| {
                    vec![
                        x.side.to_string(),
                        x.seed_index.to_string(),
                        x.level.to_string(),
                        opt(x.tau_steps),
                        x.tau_sweeps.map(num).unwrap_or_default(),
                        x.censored.to_string(),
                        x.status.clone(),
                    ]
                })
                .collect();
            let plot = r
                .sides
                .iter()
                .map(|x| {
                    vec![
                        x.side.to_string(),
                        x.growth_variable.map(num).unwrap_or_default(),
                        x.median_sweeps.map(num).unwrap_or_default(),
                        x.q1_sweeps.map(num).unwrap_or_default(),
                        x.q3_sweeps.map(num).unwrap_or_default(),
                        x.censored.to_string(),
                        x.runs.to_string(),
                    ]
                })
                .collect();
            let mut rv = serde_json::to_value(&r).unwrap();
            rv.as_object_mut().unwrap().remove("runs");
            (
                json!({"settings": s, "growth": rv}),
                (vec!["L", "seed_index", "level", "tau_steps", "tau_sweeps", "censored", "status"], series),
                (vec!["L", "growth_variable", "median_sweeps", "q1_sweeps", "q3_sweeps", "censored", "runs"], plot),
            )
        }
        "correlation-decay" => {
            let seps = e.separations.clone().unwrap_or_else(|| vec![0, 1, 2, 3, 4, 6, 8]);
            let mut s = ex::CorrelationSettings::new(cfg.p()?, cfg.beta()?, e.proxy_side.unwrap_or(64), seps, cfg.seed);
            s.measure = e.tail_measure.unwrap_or_default();
            if let Some(x) = e.level {
                s.level = x;
            }
            if let Some(x) = e.burn_in {
                s.burn_in_sweeps = x;
            }
            if let Some(x) = e.samples {
                s.sample_sweeps = x;
            }
            if let Some(x) = e.thin {
                s.thin = x;
            }
            if let Some(x) = e.chains {
                s.chains = x;
            }
            let r = ex::correlation_decay_probe(&s)?;
            for c in 0..s.chains {
                seeds.push((format!("M={}/chain={c}", s.box_side), "done".into()));
            }
            let series = r
                .points
                .iter()
                .map(|p| vec![p.separation.to_string(), num(p.covariance), num(p.ci), p.n_samples.to_string()])
                .collect();
            let plot = r
                .points
                .iter()
                .map(|p| vec![p.separation.to_string(), if p.covariance > 0.0 { num(p.covariance.ln()) } else { String::new() }])
                .collect();
            (
                json!({"settings": s, "decay": r}),
                (vec!["separation", "covariance", "ci", "n_samples"], series),
                (vec!["separation", "log_covariance"], plot),
            )
        }
        "appendix-tail" => {
            let s = ex::AppendixSettings {
                p: cfg.p()?,
                beta: cfg.beta()?,
                side: cfg.side()?,
                n_plus: req(cfg.n_plus, "n_plus")?,
                proxy_side: e.exact_side.unwrap_or(3),
            };
            let r = ex::appendix_tail_check(&s)?;
            let row = vec![
                r.side.to_string(),
                r.n_plus.to_string(),
                r.level.to_string(),
                num(r.probability),
                num(r.bound),
                num(r.slack),
                r.below_bound.to_string(),
                num(r.window_change),
            ];
            (
                json!({"settings": s, "appendix_tail": r}),
                (vec!["L", "n_plus", "level", "probability", "bound", "slack", "below_bound", "window_change"], vec![row]),
                (vec!["L", "probability", "bound"], vec![vec![r.side.to_string(), num(r.probability), num(r.bound)]]),
            )
        }
        _ => unreachable!("name checked against EXPERIMENTS"),
    };

    let mut run = RunDir::create(&out_root(cli, Some(cfg)), &hash, "experiment", cli.record_time)?;
    run.write_json(
        "summary.json",
        &json!({"experiment": name, "config_hash": hash, "seed": cfg.seed, "config": cfg, "status": "ok", "result": result}),
    )?;
    run.write_csv("series.csv", &series.0, &series.1)?;
    run.write_csv("plotdata.csv", &plot.0, &plot.1)?;
    for (t, st) in seeds {
        run.add_seed(t, st);
    }
    let dir = run.finish()?;
    println!("{}", dir.display());
    Ok(exit)
}

/// Path of the run directory a command would write to; used by tests.
pub fn run_dir_for(out: &Path, hash: &str) -> PathBuf {
    out.join(&hash[..16])
}
