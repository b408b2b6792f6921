//! Built-in exact verification suites on tiny instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use psos_core::oracle::{
    threshold_events, verify_coupling, verify_detailed_balance, verify_fkg, verify_peierls, verify_peierls_nested,
    verify_sandwich, ExactMeasure, Report, SandwichEvents, TransferMeasure, Window, DEFAULT_CAP,
};
use psos_core::rng::StreamId;
use psos_core::{HeightField, Mode, Model, ModelParams};

use crate::error::{Error, Result};

pub const SUITES: [&str; 5] = ["peierls", "fkg", "sandwich", "detailed-balance", "coupling"];

/// Instance filters from the command line; empty lists mean the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub p: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(rename = "L")]
    pub side: Option<usize>,
    pub seed: u64,
}

fn pick(given: &[f64], default: &[f64]) -> Vec<f64> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn grid(opts: &SuiteOptions, ps: &[f64], betas: &[f64]) -> Vec<(f64, f64)> {
    let ps = pick(&opts.p, ps);
    let betas = pick(&opts.beta, betas);
    ps.iter().flat_map(|&p| betas.iter().map(move |&b| (p, b))).collect()
}

fn model(p: f64, beta: f64, side: usize, mode: Mode) -> Result<Model> {
    Ok(Model::new(ModelParams::new(p, beta, side, mode))?)
}

fn ceiling(p: f64, beta: f64, side: usize, n_plus: i32) -> Result<ExactMeasure> {
    let m = model(p, beta, side, Mode::FloorCeiling { n_plus })?;
    Ok(ExactMeasure::enumerate(&m, Window::for_model(&m, 0)?, DEFAULT_CAP)?)
}

/// Free-window Peierls bounds on the 3×3 box for `|γ| ≤ 8`, `h ∈ {1, 2}`,
/// plus the nested form with `h′ = 1 < h = 2`, each certified against a
/// window one wider.
pub fn peierls(opts: &SuiteOptions) -> Result<Vec<Report>> {
    let side = opts.side.unwrap_or(3);
    grid(opts, &[1.0, 2.0, 3.0], &[1.0, 2.0])
        .par_iter()
        .map(|&(p, beta)| -> Result<Vec<Report>> {
            let m = model(p, beta, side, Mode::Free)?;
            let w = Window::certified(&m)?;
            let t = TransferMeasure::new(&m, w, DEFAULT_CAP)?;
            let t1 = TransferMeasure::new(&m, w.widened(1, Mode::Free), DEFAULT_CAP)?;
            Ok(vec![verify_peierls(&t, &[1, 2], 8, Some(&t1))?, verify_peierls_nested(&t, 2, 1, 8)?])
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

pub fn fkg(opts: &SuiteOptions) -> Result<Vec<Report>> {
    let side = opts.side.unwrap_or(2);
    grid(opts, &[1.0, 1.5, 2.0, 3.0], &[0.5, 2.0])
        .par_iter()
        .map(|&(p, beta)| {
            let e = ceiling(p, beta, side, 2)?;
            Ok(verify_fkg(&e, &threshold_events(&e))?)
        })
        .collect()
}

pub fn sandwich(opts: &SuiteOptions) -> Result<Vec<Report>> {
    let side = opts.side.unwrap_or(2);
    grid(opts, &[1.0, 1.5, 2.0, 3.0], &[0.5, 2.0])
        .par_iter()
        .map(|&(p, beta)| {
            let fm = model(p, beta, side, Mode::Floor)?;
            let floor = ExactMeasure::enumerate(&fm, Window::certified(&fm)?, DEFAULT_CAP)?;
            let c = ceiling(p, beta, side, 1)?;
            let events = if c.len() <= 20 { SandwichEvents::All } else { SandwichEvents::Singletons };
            Ok(verify_sandwich(&floor, &c, events)?)
        })
        .collect()
}

pub fn detailed_balance(opts: &SuiteOptions) -> Result<Vec<Report>> {
    let side = opts.side.unwrap_or(2);
    grid(opts, &[1.0, 1.5, 2.0, 3.0], &[0.5, 2.0])
        .par_iter()
        .map(|&(p, beta)| Ok(verify_detailed_balance(&ceiling(p, beta, side, 2)?, 1e-12)?))
        .collect()
}

/// Three ordered replicas (all zero, all 2, all `n₊`) on 8×8, `n₊ = 5`,
/// for 10⁴ sweeps.
pub fn coupling(opts: &SuiteOptions) -> Result<Vec<Report>> {
    let side = opts.side.unwrap_or(8);
    let n_plus = 5;
    grid(opts, &[1.0, 1.5, 2.0, 3.0], &[1.0])
        .par_iter()
        .enumerate()
        .map(|(k, &(p, beta))| {
            let m = model(p, beta, side, Mode::FloorCeiling { n_plus })?;
            let g = *m.geometry();
            let starts = vec![HeightField::zeros(&g), HeightField::constant(&g, 2), HeightField::constant(&g, n_plus)];
            let steps = 10_000 * g.num_sites() as u64;
            Ok(verify_coupling(&m, starts, steps, StreamId::new(opts.seed, &[0x636f_7570, k as u64]))?)
        })
        .collect()
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<Vec<Report>> {
    match name {
        "peierls" => peierls(opts),
        "fkg" => fkg(opts),
        "sandwich" => sandwich(opts),
        "detailed-balance" => detailed_balance(opts),
        "coupling" => coupling(opts),
        other => Err(Error::Config(format!("unknown suite `{other}`; valid: {}, all", SUITES.join(", ")))),
    }
}
