//! Centre tail of the floor measure at half the ceiling, compared with
//! `L^{-3}`, computed exactly on a small proxy box.

use serde::{Deserialize, Serialize};

use psos_core::oracle::{ProductEvents, TransferMeasure, Window};
use psos_core::{Mode, Model, ModelParams, Site};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixSettings {
    pub p: f64,
    pub beta: f64,
    pub side: usize,
    pub n_plus: i32,
    /// Side of the exactly evaluated box.
    pub proxy_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    #[serde(rename = "L")]
    pub side: usize,
    pub n_plus: i32,
    /// `⌈n₊/2⌉`.
    pub level: i64,
    pub probability: f64,
    /// `L^{-3}`.
    pub bound: f64,
    pub slack: f64,
    pub below_bound: bool,
    pub proxy_side: usize,
    pub window: (i32, i32),
    /// Change in the probability when the window grows by one.
    pub window_change: f64,
    pub method: String,
}

fn centre_tail(t: &TransferMeasure, centre: usize, level: i64) -> f64 {
    let mut iv = t.full_intervals();
    let w = t.window();
    if level > w.hi as i64 {
        return 0.0;
    }
    iv[centre].0 = iv[centre].0.max(level as i32);
    t.log_probability(&iv).exp()
}

pub fn appendix_tail_check(settings: &AppendixSettings) -> Result<AppendixReport> {
    let need = (settings.side as f64).ln().ceil() as i32;
    if settings.n_plus < need {
        return Err(Error::Config(format!("n_plus = {} below ceil(log L) = {need}", settings.n_plus)));
    }
    let model = Model::new(ModelParams::new(settings.p, settings.beta, settings.proxy_side, Mode::Floor))?;
    let c = (settings.proxy_side as i32 + 1) / 2;
    let centre = model.geometry().index(Site::new(c, c))?;
    let level = (settings.n_plus as i64 + 1) / 2;
    let window = Window::certified(&model)?;
    let wider = window.widened(1, Mode::Floor);
    let cap = 50_000_000;
    let t = TransferMeasure::new(&model, window, cap)?;
    let t1 = TransferMeasure::new(&model, wider, cap)?;
    let probability = centre_tail(&t, centre, level);
    let probability_wider = centre_tail(&t1, centre, level);
    let bound = (settings.side as f64).powi(-3);
    Ok(AppendixReport {
        side: settings.side,
        n_plus: settings.n_plus,
        level,
        probability,
        bound,
        slack: bound - probability,
        below_bound: probability <= bound,
        proxy_side: settings.proxy_side,
        window: (window.lo, window.hi),
        window_change: (probability_wider - probability).abs(),
        method: "transfer matrix on a certified floor window".into(),
    })
}
