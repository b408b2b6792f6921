//! Truncated correlation of `1{η ≥ level}` between the box centre and
//! bulk sites at increasing separation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use psos_core::dynamics::Chain;
use psos_core::rng::StreamId;
use psos_core::{HeightField, Mode, Model, ModelParams, Site};

use super::tail::TailMeasure;
use crate::error::{Error, Result};
use crate::stats::{batch_mean_ci, fit_line, LineFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSettings {
    pub p: f64,
    pub beta: f64,
    pub box_side: usize,
    pub separations: Vec<usize>,
    pub measure: TailMeasure,
    pub level: i64,
    pub burn_in_sweeps: u64,
    pub sample_sweeps: u64,
    pub thin: u64,
    pub chains: usize,
    pub seed: u64,
}

impl CorrelationSettings {
    pub fn new(p: f64, beta: f64, box_side: usize, separations: Vec<usize>, seed: u64) -> Self {
        CorrelationSettings {
            p,
            beta,
            box_side,
            separations,
            measure: TailMeasure::Free,
            level: 1,
            burn_in_sweeps: 200,
            sample_sweeps: 2000,
            thin: 1,
            chains: 8,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub separation: usize,
    pub covariance: f64,
    /// 95% radius across independent chains.
    pub ci: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<CorrelationPoint>,
    /// Fit of `log covariance` against separation over positive separations
    /// with positive covariance.
    pub fit: Option<LineFit>,
    /// `−slope` of the fit.
    pub rate: Option<f64>,
}

/// Largest separation whose pair stays at least `M/4` from the boundary.
pub fn max_bulk_separation(box_side: usize) -> usize {
    let c = box_side.div_ceil(2);
    let margin = box_side.div_ceil(4);
    (box_side + 1).saturating_sub(margin).saturating_sub(c)
}

pub fn correlation_decay_probe(settings: &CorrelationSettings) -> Result<DecayCurve> {
    let m = settings.box_side;
    let max_sep = max_bulk_separation(m);
    if let Some(&r) = settings.separations.iter().find(|&&r| r > max_sep) {
        return Err(Error::Config(format!("separation {r} leaves the bulk of an {m}x{m} box (max {max_sep})")));
    }
    if settings.chains < 2 || settings.sample_sweeps == 0 || settings.thin == 0 {
        return Err(Error::Config("correlation probe needs >= 2 chains and positive sample_sweeps, thin".into()));
    }
    let mode = match settings.measure {
        TailMeasure::Free => Mode::Free,
        TailMeasure::Floor => Mode::Floor,
    };
    let model = Model::new(ModelParams::new(settings.p, settings.beta, m, mode))?;
    let c = (m as i32 + 1) / 2;
    let centre = model.geometry().index(Site::new(c, c))?;
    let others: Vec<usize> = settings
        .separations
        .iter()
        .map(|&r| model.geometry().index(Site::new(c, c + r as i32)))
        .collect::<psos_core::Result<_>>()?;
    let lv = settings.level;

    // per chain: (mean X, mean Y_r, mean X·Y_r)
    let per_chain: Vec<(f64, Vec<f64>, Vec<f64>, u64)> = (0..settings.chains)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let mut chain = Chain::new(&model, HeightField::zeros(model.geometry()), StreamId::new(settings.seed, &[0x636f_7272, m as u64, k as u64]))?;
            chain.run_sweeps(&model, settings.burn_in_sweeps);
            let mut sx = 0u64;
            let mut sy = vec![0u64; others.len()];
            let mut sxy = vec![0u64; others.len()];
            let mut n = 0u64;
            let mut t = 0;
            while t < settings.sample_sweeps {
                chain.run_sweeps(&model, settings.thin);
                t += settings.thin;
                let f = chain.field();
                let x = (f.get(centre) as i64 >= lv) as u64;
                sx += x;
                for (j, &o) in others.iter().enumerate() {
                    let y = (f.get(o) as i64 >= lv) as u64;
                    sy[j] += y;
                    sxy[j] += x * y;
                }
                n += 1;
            }
            let nf = n as f64;
            Ok((
                sx as f64 / nf,
                sy.iter().map(|&v| v as f64 / nf).collect(),
                sxy.iter().map(|&v| v as f64 / nf).collect(),
                n,
            ))
        })
        .collect::<Result<_>>()?;

    let n_total: u64 = per_chain.iter().map(|c| c.3).sum();
    let mut points = Vec::new();
    for (j, &r) in settings.separations.iter().enumerate() {
        let covs: Vec<f64> = per_chain.iter().map(|(x, y, xy, _)| xy[j] - x * y[j]).collect();
        let (cov, ci) = batch_mean_ci(&covs);
        points.push(CorrelationPoint { separation: r, covariance: cov, ci, n_samples: n_total });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.separation > 0 && p.covariance > 0.0)
        .map(|p| (p.separation as f64, p.covariance.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    Ok(DecayCurve { rate: fit.map(|f| -f.slope), points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bulk_limit() {
        for m in [8usize, 16, 63, 64] {
            let g = psos_core::BoxGeometry::new(m).unwrap();
            let c = (m as i32 + 1) / 2;
            let margin = m.div_ceil(4) as u32;
            let brute = (0..m)
                .take_while(|&r| {
                    let y = c + r as i32;
                    y <= m as i32 && g.dist_to_boundary(Site::new(c, y)).unwrap() >= margin
                })
                .last()
                .unwrap();
            assert_eq!(max_bulk_separation(m), brute, "M = {m}");
        }
        let s = CorrelationSettings::new(2.0, 1.0, 16, vec![0, max_bulk_separation(16) + 1], 1);
        assert!(matches!(correlation_decay_probe(&s), Err(Error::Config(_))));
    }

    #[test]
    fn variance_at_zero_separation() {
        let mut s = CorrelationSettings::new(1.0, 0.5, 16, vec![0, 1, 2], 1);
        s.sample_sweeps = 300;
        s.burn_in_sweeps = 50;
        let d = correlation_decay_probe(&s).unwrap();
        assert!(d.points[0].covariance >= 0.0);
        assert!(d.points[0].covariance >= d.points[2].covariance);
    }
}
