//! Share of sites at height at least `H − K` in equilibrium, sampled from
//! two extremal starts that must agree.

use serde::{Deserialize, Serialize};

use psos_core::dynamics::Chain;
use psos_core::rng::StreamId;
use psos_core::{HeightField, Mode, Model, ModelParams};

use super::tail::{default_proxy_side, estimate_h, CiPolicy, TailSettings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSettings {
    pub p: f64,
    pub beta: f64,
    pub side: usize,
    pub k: i64,
    /// Ceiling; `None` is the floor measure.
    pub n_plus: Option<i32>,
    pub typical_height: Option<i64>,
    pub ci_policy: CiPolicy,
    pub tail_sample_sweeps: u64,
    pub burn_in_sweeps: u64,
    pub sample_sweeps: u64,
    pub thin: u64,
    /// Height of the upper start without a ceiling; default `max(H + K + 2, ⌈log L⌉)`.
    pub high_start: Option<i32>,
    /// Largest allowed gap between the two starts' mean fractions.
    pub tolerance: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl ConcentrationSettings {
    pub fn new(p: f64, beta: f64, side: usize, k: i64, seed: u64) -> Self {
        ConcentrationSettings {
            p,
            beta,
            side,
            k,
            n_plus: None,
            typical_height: None,
            ci_policy: CiPolicy::Point,
            tail_sample_sweeps: 2000,
            burn_in_sweeps: 500,
            sample_sweeps: 500,
            thin: 5,
            high_start: None,
            tolerance: 0.05,
            epsilon: 0.2,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    #[serde(rename = "K")]
    pub k: i64,
    pub typical_height: i64,
    pub level: i64,
    /// Pooled mean over both starts.
    pub fraction: f64,
    pub fraction_low_start: f64,
    pub fraction_high_start: f64,
    /// `(K′, pooled fraction at H − K′)` for `K′ = 0..=K`.
    pub by_k: Vec<(i64, f64)>,
    pub threshold: f64,
    pub meets_threshold: bool,
    pub mixed: bool,
    pub samples_per_start: usize,
    /// Per-sample fractions from the low start, then the high start.
    pub series: Vec<(String, u64, f64)>,
}

pub fn concentration_experiment(settings: &ConcentrationSettings) -> Result<ConcentrationReport> {
    if settings.k < 0 {
        return Err(Error::Config("K must be nonnegative".into()));
    }
    if settings.sample_sweeps == 0 || settings.thin == 0 {
        return Err(Error::Config("sample_sweeps and thin must be positive".into()));
    }
    let h = match settings.typical_height {
        Some(h) => h,
        None => {
            let mut tail = TailSettings::new(settings.p, settings.beta, default_proxy_side(settings.side), settings.seed);
            tail.sample_sweeps = settings.tail_sample_sweeps;
            estimate_h(&tail, settings.side, settings.ci_policy, 30)?.h
        }
    };
    let mode = match settings.n_plus {
        Some(n_plus) => Mode::FloorCeiling { n_plus },
        None => Mode::Floor,
    };
    let model = Model::new(ModelParams::new(settings.p, settings.beta, settings.side, mode))?;
    let geom = *model.geometry();
    let top = match settings.n_plus {
        Some(n) => n,
        None => settings
            .high_start
            .unwrap_or(((h + settings.k + 2) as i32).max((settings.side as f64).ln().ceil() as i32)),
    };
    let level = h - settings.k;
    let n = geom.num_sites() as f64;
    let mut fields_by_start = Vec::new();
    let mut series = Vec::new();
    for (tag, name, start) in [(0u64, "low", 0), (1u64, "high", top)] {
        let mut chain = Chain::new(&model, HeightField::constant(&geom, start), StreamId::new(settings.seed, &[0x636f_6e63, settings.side as u64, tag]))?;
        chain.run_sweeps(&model, settings.burn_in_sweeps);
        let mut samples = Vec::new();
        let mut t = 0;
        while t < settings.sample_sweeps {
            chain.run_sweeps(&model, settings.thin);
            t += settings.thin;
            samples.push(chain.field().clone());
            series.push((name.to_string(), chain.steps(), chain.field().count_at_least(level) as f64 / n));
        }
        fields_by_start.push(samples);
    }
    let mean_at = |samples: &[HeightField], lv: i64| {
        samples.iter().map(|f| f.count_at_least(lv) as f64 / n).sum::<f64>() / samples.len() as f64
    };
    let low = mean_at(&fields_by_start[0], level);
    let high = mean_at(&fields_by_start[1], level);
    if (low - high).abs() > settings.tolerance {
        return Err(Error::Unmixed(format!(
            "fraction at level {level}: low start {low:.4}, high start {high:.4}, tolerance {}",
            settings.tolerance
        )));
    }
    let pooled = |lv: i64| (mean_at(&fields_by_start[0], lv) + mean_at(&fields_by_start[1], lv)) / 2.0;
    let fraction = pooled(level);
    let threshold = 1.0 - settings.epsilon;
    Ok(ConcentrationReport {
        k: settings.k,
        typical_height: h,
        level,
        fraction,
        fraction_low_start: low,
        fraction_high_start: high,
        by_k: (0..=settings.k).map(|k| (k, pooled(h - k))).collect(),
        threshold,
        meets_threshold: fraction >= threshold,
        mixed: true,
        samples_per_start: fields_by_start[0].len(),
        series,
    })
}
