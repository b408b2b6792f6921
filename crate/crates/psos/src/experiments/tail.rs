//! Centre-site tail of the height in a large box, as a proxy for the
//! infinite-volume one-point tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use psos_core::dynamics::Chain;
use psos_core::rng::StreamId;
use psos_core::{HeightField, LocalDistribution, Mode, Model, ModelParams, Site};

use crate::error::{Error, Result};
use crate::stats::{batch_mean_ci, batch_means, fit_line, wilson, LineFit, Z95};

/// Measure whose tail is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailMeasure {
    #[default]
    Free,
    Floor,
}

/// Which end of the confidence interval `estimate_h` compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CiPolicy {
    #[default]
    Point,
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSettings {
    pub p: f64,
    pub beta: f64,
    pub measure: TailMeasure,
    /// Proxy box side `M`.
    pub box_side: usize,
    pub burn_in_sweeps: u64,
    pub sample_sweeps: u64,
    /// Sweeps between samples.
    pub thin: u64,
    pub chains: usize,
    /// Batches per chain for the confidence radius.
    pub batches: usize,
    pub seed: u64,
}

impl TailSettings {
    pub fn new(p: f64, beta: f64, box_side: usize, seed: u64) -> Self {
        TailSettings {
            p,
            beta,
            measure: TailMeasure::Free,
            box_side,
            burn_in_sweeps: 200,
            sample_sweeps: 2000,
            thin: 1,
            chains: 4,
            batches: 10,
            seed,
        }
    }
}

/// Default proxy side `max(64, 8⌈log L⌉)`.
pub fn default_proxy_side(side: usize) -> usize {
    64.max(8 * (side as f64).ln().ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub h: i64,
    /// Mean of the centre's heat-bath tail `P(η₀ ≥ h | neighbours)`.
    pub p_hat: f64,
    /// 95% radius from batch means.
    pub ci: f64,
    /// Plain frequency of `η₀ ≥ h`.
    pub indicator_hat: f64,
    /// Wilson interval of the frequency.
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub n_samples: u64,
    pub box_side: usize,
}

impl TailEstimate {
    pub fn value(&self, policy: CiPolicy) -> f64 {
        match policy {
            CiPolicy::Point => self.p_hat,
            CiPolicy::Lower => (self.p_hat - self.ci).max(0.0),
            CiPolicy::Upper => (self.p_hat + self.ci).min(1.0),
        }
    }
}

struct ChainTallies {
    rb: Vec<Vec<f64>>,
    hits: Vec<u64>,
}

/// Estimates the centre tail for every level in `hs` from the same runs.
pub fn estimate_infinite_tail(settings: &TailSettings, hs: &[i64]) -> Result<Vec<TailEstimate>> {
    let m = settings.box_side;
    let need = 4 * (m as f64).ln().ceil() as usize;
    if m < need.max(1) {
        return Err(Error::Config(format!("proxy box side M = {m} too small, need M >= 4*ceil(log M) = {need}")));
    }
    if settings.sample_sweeps == 0 || settings.chains == 0 || settings.thin == 0 {
        return Err(Error::Config("tail estimation needs positive sample_sweeps, chains and thin".into()));
    }
    let mode = match settings.measure {
        TailMeasure::Free => Mode::Free,
        TailMeasure::Floor => Mode::Floor,
    };
    let model = Model::new(ModelParams::new(settings.p, settings.beta, m, mode))?;
    let centre = model.geometry().index(Site::new((m as i32 + 1) / 2, (m as i32 + 1) / 2))?;
    let levels: Vec<i32> = hs.iter().map(|&h| h.clamp(i32::MIN as i64, i32::MAX as i64) as i32).collect();

    let tallies: Vec<ChainTallies> = (0..settings.chains)
        .into_par_iter()
        .map(|c| -> Result<ChainTallies> {
            let stream = StreamId::new(settings.seed, &[0x7461_696c, m as u64, c as u64]);
            let mut chain = Chain::new(&model, HeightField::zeros(model.geometry()), stream)?;
            chain.run_sweeps(&model, settings.burn_in_sweeps);
            let mut local = LocalDistribution::default();
            let mut rb = vec![Vec::new(); levels.len()];
            let mut hits = vec![0u64; levels.len()];
            let mut t = 0;
            while t < settings.sample_sweeps {
                chain.run_sweeps(&model, settings.thin);
                t += settings.thin;
                model.fill_local(chain.field(), centre, &mut local);
                let h0 = chain.field().get(centre);
                for (k, &h) in levels.iter().enumerate() {
                    rb[k].push(local.tail(h));
                    hits[k] += (h0 >= h) as u64;
                }
            }
            Ok(ChainTallies { rb, hits })
        })
        .collect::<Result<Vec<_>>>()?;

    let n: u64 = tallies.iter().map(|t| t.rb[0].len() as u64).sum();
    Ok(hs
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let batches: Vec<f64> = tallies.iter().flat_map(|t| batch_means(&t.rb[k], settings.batches)).collect();
            let all: f64 = tallies.iter().map(|t| t.rb[k].iter().sum::<f64>()).sum();
            let p_hat = (all / n as f64).clamp(0.0, 1.0);
            let (_, ci) = batch_mean_ci(&batches);
            let hits: u64 = tallies.iter().map(|t| t.hits[k]).sum();
            let (wilson_lo, wilson_hi) = wilson(hits, n, Z95);
            TailEstimate {
                h,
                p_hat,
                ci,
                indicator_hat: hits as f64 / n as f64,
                wilson_lo,
                wilson_hi,
                n_samples: n,
                box_side: m,
            }
        })
        .collect())
}

/// Threshold `5β/L` of the typical height.
pub fn typical_height_threshold(beta: f64, side: usize) -> f64 {
    5.0 * beta / side as f64
}

/// `max{h : tail(h) ≥ threshold}` over consecutive levels starting at 0,
/// stopping after two consecutive failures. `0` when the threshold exceeds 1.
pub fn h_from_tails(tails: &[TailEstimate], threshold: f64, policy: CiPolicy) -> i64 {
    if threshold > 1.0 {
        return 0;
    }
    let mut best = 0;
    let mut misses = 0;
    for t in tails {
        if t.value(policy) >= threshold {
            best = t.h;
            misses = 0;
        } else {
            misses += 1;
            if misses == 2 {
                break;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalHeight {
    pub h: i64,
    pub threshold: f64,
    pub policy: CiPolicy,
    /// Empty when the threshold exceeds 1.
    pub tails: Vec<TailEstimate>,
}

/// Largest level (from 0 up to `max_level`) whose estimated tail meets `5β/L`.
pub fn estimate_h(settings: &TailSettings, side: usize, policy: CiPolicy, max_level: i64) -> Result<TypicalHeight> {
    let threshold = typical_height_threshold(settings.beta, side);
    if threshold > 1.0 {
        return Ok(TypicalHeight { h: 0, threshold, policy, tails: Vec::new() });
    }
    let hs: Vec<i64> = (0..=max_level).collect();
    let tails = estimate_infinite_tail(settings, &hs)?;
    Ok(TypicalHeight { h: h_from_tails(&tails, threshold, policy), threshold, policy, tails })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRates {
    pub estimates: Vec<TailEstimate>,
    /// `−log p̂(h)`.
    pub neg_log: Vec<f64>,
    /// Least-squares fit of `−log p̂` against `h`.
    pub fit: Option<LineFit>,
    /// Increments of `−log p̂` strictly increasing in `h`.
    pub superlinear: bool,
    /// `4β` for `p = 1`.
    pub linear_rate_reference: Option<f64>,
}

pub fn tail_rates(settings: &TailSettings, hs: &[i64]) -> Result<TailRates> {
    let estimates = estimate_infinite_tail(settings, hs)?;
    let neg_log: Vec<f64> = estimates.iter().map(|e| -e.p_hat.ln()).collect();
    let xs: Vec<f64> = hs.iter().map(|&h| h as f64).collect();
    let fit = fit_line(&xs, &neg_log);
    let inc: Vec<f64> = neg_log.windows(2).map(|w| w[1] - w[0]).collect();
    let superlinear = inc.len() >= 2 && inc.windows(2).all(|w| w[1] > w[0]);
    Ok(TailRates {
        estimates,
        neg_log,
        fit,
        superlinear,
        linear_rate_reference: (settings.p == 1.0).then_some(4.0 * settings.beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frozen(ps: &[f64]) -> Vec<TailEstimate> {
        ps.iter()
            .enumerate()
            .map(|(h, &p)| TailEstimate {
                h: h as i64,
                p_hat: p,
                ci: 0.1 * p,
                indicator_hat: p,
                wilson_lo: 0.0,
                wilson_hi: 1.0,
                n_samples: 1,
                box_side: 64,
            })
            .collect()
    }

    #[test]
    fn h_scan_rules() {
        let t = frozen(&[1.0, 0.1, 0.01, 0.001, 0.0001]);
        assert_eq!(h_from_tails(&t, 0.05, CiPolicy::Point), 1);
        assert_eq!(h_from_tails(&t, 0.0095, CiPolicy::Point), 2);
        assert_eq!(h_from_tails(&t, 0.0095, CiPolicy::Lower), 1);
        assert_eq!(h_from_tails(&t, 2.0, CiPolicy::Point), 0);
        // monotone in the threshold, so in L
        let mut last = 0;
        for side in [10usize, 100, 1000, 10_000, 100_000] {
            let h = h_from_tails(&t, typical_height_threshold(1.0, side), CiPolicy::Point);
            assert!(h >= last);
            last = h;
        }
    }

    #[test]
    fn proxy_side() {
        assert_eq!(default_proxy_side(1000), 64);
        assert_eq!(default_proxy_side(1_000_000_000), 8 * 21);
    }

    #[test]
    fn small_box_rejected() {
        let s = TailSettings::new(1.0, 1.0, 8, 0);
        assert!(matches!(estimate_infinite_tail(&s, &[1]), Err(Error::Config(_))));
    }

    #[test]
    fn floor_tail_at_zero_is_one() {
        let mut s = TailSettings::new(1.0, 1.5, 20, 3);
        s.measure = TailMeasure::Floor;
        s.sample_sweeps = 20;
        s.burn_in_sweeps = 5;
        let t = estimate_infinite_tail(&s, &[0, 1]).unwrap();
        assert_eq!(t[0].p_hat, 1.0);
        assert!(t[1].p_hat > 0.0 && t[1].p_hat < 0.05);
    }
}
