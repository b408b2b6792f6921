//! Hitting time of the high set from the all-zero start (or from the
//! restricted-chain approximation of `π(· | A)`), across box sides.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use psos_core::contour::atypical_membership;
use psos_core::dynamics::{run_until, Chain, LevelFraction, RestrictedChain};
use psos_core::rng::StreamId;
use psos_core::{HeightField, Mode, Model, ModelParams};

use super::schedule::{LevelSchedule, TargetKind};
use super::tail::{default_proxy_side, estimate_h, CiPolicy, TailSettings};
use crate::error::{Error, Result};
use crate::stats::{fit_line, quantile, spearman, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    #[default]
    Zero,
    /// Restricted chain on `A` from all-zero, run for the burn-in.
    Nu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSettings {
    pub p: f64,
    pub beta: f64,
    pub a: f64,
    pub sides: Vec<usize>,
    pub n_seeds: usize,
    pub t_max_sweeps: u64,
    pub target: TargetKind,
    /// Defaults to the target's own fraction.
    pub fraction: Option<f64>,
    /// Ceiling; defaults to `max(1, ⌈log L⌉)`.
    pub n_plus: Option<i32>,
    pub start: StartKind,
    pub nu_burn_in_sweeps: u64,
    pub delta: f64,
    /// Skips the tail estimation when set.
    pub typical_height: Option<i64>,
    pub ci_policy: CiPolicy,
    pub tail_sample_sweeps: u64,
    pub seed: u64,
}

impl HittingSettings {
    pub fn new(p: f64, beta: f64, a: f64, sides: Vec<usize>, seed: u64) -> Self {
        HittingSettings {
            p,
            beta,
            a,
            sides,
            n_seeds: 32,
            t_max_sweeps: 10_000_000,
            target: TargetKind::Omega,
            fraction: None,
            n_plus: None,
            start: StartKind::Zero,
            nu_burn_in_sweeps: 1000,
            delta: 0.1,
            typical_height: None,
            ci_policy: CiPolicy::Point,
            tail_sample_sweeps: 2000,
            seed,
        }
    }

    pub fn n_plus_for(&self, side: usize) -> i32 {
        self.n_plus.unwrap_or_else(|| ((side as f64).ln().ceil() as i32).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingRun {
    #[serde(rename = "L")]
    pub side: usize,
    pub seed_index: usize,
    pub level: i64,
    pub tau_steps: Option<u64>,
    pub tau_sweeps: Option<f64>,
    pub censored: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSummary {
    #[serde(rename = "L")]
    pub side: usize,
    pub n_plus: i32,
    pub schedule: LevelSchedule,
    pub runs: usize,
    pub censored: usize,
    /// `None` when the median run is censored.
    pub median_sweeps: Option<f64>,
    pub q1_sweeps: Option<f64>,
    pub q3_sweeps: Option<f64>,
    /// `L^{a^{d(p)}}`.
    pub growth_variable: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub target: TargetKind,
    pub fraction: f64,
    pub t_max_sweeps: u64,
    pub sides: Vec<SideSummary>,
    /// Fit of `log median` against `L^{a^{d(p)}}` over the uncensored prefix.
    pub fit: Option<LineFit>,
    pub fit_points: usize,
    pub spearman_median_vs_l: Option<f64>,
    pub strictly_increasing: bool,
    pub runs: Vec<HittingRun>,
}

fn order_stat(sorted: &[f64], q: f64) -> Option<f64> {
    let v = quantile(sorted, q);
    v.is_finite().then_some(v)
}

fn schedule_for(settings: &HittingSettings, side: usize) -> Result<LevelSchedule> {
    let h = match settings.typical_height {
        Some(h) => h,
        None => {
            let mut tail = TailSettings::new(settings.p, settings.beta, default_proxy_side(side), settings.seed);
            tail.sample_sweeps = settings.tail_sample_sweeps;
            estimate_h(&tail, side, settings.ci_policy, 30)?.h
        }
    };
    LevelSchedule::new(settings.p, settings.a, h)
}

fn one_run(settings: &HittingSettings, side: usize, sched: &LevelSchedule, seed_index: usize, fraction: f64) -> Result<HittingRun> {
    let n_plus = settings.n_plus_for(side);
    let model = Model::new(ModelParams::new(settings.p, settings.beta, side, Mode::FloorCeiling { n_plus }))?;
    let geom = *model.geometry();
    let tags = [0x6869_7474, side as u64, seed_index as u64];
    let start = match settings.start {
        StartKind::Zero => HeightField::zeros(&geom),
        StartKind::Nu => {
            if sched.contour_level < 1 {
                return Err(Error::Config(format!(
                    "restricted start needs contour level >= 1, schedule gives {}",
                    sched.contour_level
                )));
            }
            let area = sched.droplet_area(settings.delta, side);
            let bc = model.bc().clone();
            let level = sched.contour_level;
            let chain = Chain::new(&model, HeightField::zeros(&geom), StreamId::new(settings.seed, &[tags[0], tags[1], tags[2], 1]))?;
            let mut r = RestrictedChain::new(chain, move |f: &HeightField| atypical_membership(f, &bc, level, area))?;
            r.run_steps(&model, settings.nu_burn_in_sweeps * geom.num_sites() as u64);
            r.field().clone()
        }
    };
    let mut chain = Chain::new(&model, start, StreamId::new(settings.seed, &tags))?;
    let name = match settings.target {
        TargetKind::Omega => "omega",
        TargetKind::B => "b",
    };
    let mut target = LevelFraction::new(name, sched.target_level, fraction, geom.num_sites());
    let t_max = settings.t_max_sweeps.saturating_mul(geom.num_sites() as u64);
    let rec = run_until(&mut chain, &model, &mut target, t_max, None)?;
    Ok(HittingRun {
        side,
        seed_index,
        level: sched.target_level,
        tau_steps: rec.tau_steps,
        tau_sweeps: rec.tau_sweeps(),
        censored: rec.censored,
        status: if rec.censored { "censored".into() } else { "done".into() },
    })
}

pub fn hitting_time_experiment(settings: &HittingSettings) -> Result<HittingReport> {
    if settings.sides.is_empty() || settings.n_seeds == 0 {
        return Err(Error::Config("hitting-time needs at least one L and one seed".into()));
    }
    if settings.t_max_sweeps == 0 {
        return Err(Error::Config("T_max must be at least 1 sweep".into()));
    }
    let fraction = settings.fraction.unwrap_or(settings.target.default_fraction());
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let schedules: Vec<LevelSchedule> = settings.sides.iter().map(|&l| schedule_for(settings, l)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..settings.sides.len()).flat_map(|i| (0..settings.n_seeds).map(move |s| (i, s))).collect();
    let runs: Vec<HittingRun> = jobs
        .par_iter()
        .map(|&(i, s)| one_run(settings, settings.sides[i], &schedules[i], s, fraction))
        .collect::<Result<_>>()?;

    let mut sides = Vec::new();
    for (i, &side) in settings.sides.iter().enumerate() {
        let mut taus: Vec<f64> = runs
            .iter()
            .filter(|r| r.side == side)
            .map(|r| r.tau_sweeps.unwrap_or(f64::INFINITY))
            .collect();
        taus.sort_by(f64::total_cmp);
        sides.push(SideSummary {
            side,
            n_plus: settings.n_plus_for(side),
            schedule: schedules[i],
            runs: taus.len(),
            censored: taus.iter().filter(|t| t.is_infinite()).count(),
            median_sweeps: order_stat(&taus, 0.5),
            q1_sweeps: order_stat(&taus, 0.25),
            q3_sweeps: order_stat(&taus, 0.75),
            growth_variable: schedules[i].growth_variable(side),
        });
    }

    let prefix: Vec<&SideSummary> = sides.iter().take_while(|s| s.median_sweeps.is_some()).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = prefix
        .iter()
        .filter_map(|s| match (s.growth_variable, s.median_sweeps) {
            (Some(x), Some(m)) if m > 0.0 => Some((x, m.ln())),
            _ => None,
        })
        .unzip();
    let fit = fit_line(&xs, &ys);
    let medians: Vec<f64> = sides.iter().map(|s| s.median_sweeps.unwrap_or(f64::INFINITY)).collect();
    let ls: Vec<f64> = sides.iter().map(|s| s.side as f64).collect();
    let rho = spearman(&ls, &medians);
    let strictly_increasing = medians.windows(2).all(|w| w[0] < w[1]) && medians.iter().all(|m| m.is_finite());
    Ok(HittingReport {
        target: settings.target,
        fraction,
        t_max_sweeps: settings.t_max_sweeps,
        sides,
        fit,
        fit_points: xs.len(),
        spearman_median_vs_l: rho.is_finite().then_some(rho),
        strictly_increasing,
        runs,
    })
}
