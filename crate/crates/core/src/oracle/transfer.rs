//! Partition functions of product events by a broken-line transfer matrix.
//!
//! Sites are added one at a time in row-major order. The state is the
//! frontier of the last `L` heights, so memory is `R^L` and time is
//! `O(R^{L+1} L²)` for window size `R`.

use alloc::vec;
use alloc::vec::Vec;

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::gibbs::{log_sum_exp, Model};
use crate::lattice::{Location, Site};

use super::exact::{ExactMeasure, Window};

/// Per-site inclusive height intervals; an event of the form `∏_x {η_x ∈ I_x}`.
pub type Intervals = Vec<(i32, i32)>;

/// Anything that can report `log Z` restricted to a product event.
pub trait ProductEvents {
    fn model(&self) -> &Model;
    fn window(&self) -> Window;
    /// `log Σ_{η ∈ E} e^{−βH(η)}`, `−∞` for an empty event.
    fn log_z_restricted(&self, intervals: &[(i32, i32)]) -> f64;
    fn log_z(&self) -> f64;

    fn log_probability(&self, intervals: &[(i32, i32)]) -> f64 {
        self.log_z_restricted(intervals) - self.log_z()
    }

    fn full_intervals(&self) -> Intervals {
        let w = self.window();
        vec![(w.lo, w.hi); self.model().geometry().num_sites()]
    }
}

impl ProductEvents for ExactMeasure {
    fn model(&self) -> &Model {
        ExactMeasure::model(self)
    }

    fn window(&self) -> Window {
        ExactMeasure::window(self)
    }

    fn log_z_restricted(&self, intervals: &[(i32, i32)]) -> f64 {
        let n = intervals.len();
        let r = ExactMeasure::window(self).len();
        let lo = ExactMeasure::window(self).lo;
        let lw: Vec<f64> = (0..self.len())
            .filter(|&i| {
                let mut v = i;
                for k in (0..n).rev() {
                    let h = lo + (v % r) as i32;
                    if h < intervals[k].0 || h > intervals[k].1 {
                        return false;
                    }
                    v /= r;
                }
                true
            })
            .map(|i| self.log_weight(i))
            .collect();
        log_sum_exp(&lw)
    }

    fn log_z(&self) -> f64 {
        ExactMeasure::log_z(self)
    }
}

/// Gibbs measure on `[lo, hi]^Λ` evaluated by transfer matrix.
#[derive(Debug, Clone)]
pub struct TransferMeasure {
    model: Model,
    window: Window,
    pair: Vec<f64>,
    log_z: f64,
}

impl TransferMeasure {
    /// Fails when the frontier `R^L` exceeds `cap` entries.
    pub fn new(model: &Model, window: Window, cap: u128) -> Result<Self> {
        window.check_mode(model.mode())?;
        let r = window.len();
        let required = (r as u128).checked_pow(model.geometry().side() as u32).unwrap_or(u128::MAX);
        if required > cap {
            return Err(Error::Resource { required, cap });
        }
        let w = if model.params().bond_double_count { 2.0 } else { 1.0 };
        let pair = (0..2 * r - 1)
            .map(|k| libm::exp(-model.beta() * w * model.bond_energy(k as i64 - (r as i64 - 1))))
            .collect();
        let mut t = TransferMeasure { model: model.clone(), window, pair, log_z: 0.0 };
        let full = t.full_intervals();
        t.log_z = t.compute(&full);
        Ok(t)
    }

    fn boundary_factor(&self, h: i32, s: Site) -> f64 {
        match self.model.geometry().locate(s) {
            Some(Location::Boundary(b)) => {
                let phi = self.model.bc().value(b) as i64;
                libm::exp(-self.model.beta() * self.model.bond_energy(h as i64 - phi))
            }
            _ => unreachable!("boundary neighbour expected"),
        }
    }

    fn compute(&self, intervals: &[(i32, i32)]) -> f64 {
        let l = self.model.geometry().side();
        let r = self.window.len();
        let lo = self.window.lo;
        let size = r.pow(l as u32);
        let mut place = vec![1usize; l];
        for c in 1..l {
            place[c] = place[c - 1] * r;
        }
        let mut cur = vec![0.0f64; size];
        let mut next = vec![0.0f64; size];
        cur[0] = 1.0;
        let mut log_scale = 0.0;
        for row in 0..l {
            for col in 0..l {
                let (ilo, ihi) = intervals[row * l + col];
                let ilo = ilo.max(self.window.lo);
                let ihi = ihi.min(self.window.hi);
                if ilo > ihi {
                    return f64::NEG_INFINITY;
                }
                let site = Site::new(row as i32 + 1, col as i32 + 1);
                // fixed factors from the outer boundary, per candidate height
                let fixed: Vec<f64> = (ilo..=ihi)
                    .map(|h| {
                        let mut f = 1.0;
                        if row == 0 {
                            f *= self.boundary_factor(h, Site::new(0, site.y));
                        }
                        if col == 0 {
                            f *= self.boundary_factor(h, Site::new(site.x, 0));
                        }
                        if col == l - 1 {
                            f *= self.boundary_factor(h, Site::new(site.x, l as i32 + 1));
                        }
                        if row == l - 1 {
                            f *= self.boundary_factor(h, Site::new(l as i32 + 1, site.y));
                        }
                        f
                    })
                    .collect();
                next.iter_mut().for_each(|v| *v = 0.0);
                for (s, &v) in cur.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    let old = (s / place[col]) % r;
                    let left = if col > 0 { Some((s / place[col - 1]) % r) } else { None };
                    let base = s - old * place[col];
                    for (k, h) in (ilo..=ihi).enumerate() {
                        let hi_ = (h - lo) as usize;
                        let mut f = v * fixed[k];
                        if row > 0 {
                            f *= self.pair[hi_ + r - 1 - old];
                        }
                        if let Some(lv) = left {
                            f *= self.pair[hi_ + r - 1 - lv];
                        }
                        next[base + hi_ * place[col]] += f;
                    }
                }
                core::mem::swap(&mut cur, &mut next);
                let m = cur.iter().cloned().fold(0.0, f64::max);
                if m == 0.0 {
                    return f64::NEG_INFINITY;
                }
                cur.iter_mut().for_each(|v| *v /= m);
                log_scale += libm::log(m);
            }
        }
        let total: f64 = crate::gibbs::neumaier_sum(&cur);
        log_scale + libm::log(total)
    }
}

impl ProductEvents for TransferMeasure {
    fn model(&self) -> &Model {
        &self.model
    }

    fn window(&self) -> Window {
        self.window
    }

    fn log_z_restricted(&self, intervals: &[(i32, i32)]) -> f64 {
        self.compute(intervals)
    }

    fn log_z(&self) -> f64 {
        self.log_z
    }
}

/// Intervals of `C_{γ,h}` within `base`: heights `≥ h` on `∂γ⁺` and
/// `≤ h − 1` on `∂γ⁻`. `None` when a constraint falls on the outer boundary
/// or beyond and the fixed heights there violate it.
pub fn contour_event(model: &Model, base: &[(i32, i32)], contour: &Contour, h: i64) -> Option<Intervals> {
    let geom = model.geometry();
    let mut iv: Intervals = base.to_vec();
    let h32 = i32::try_from(h).ok()?;
    for &s in contour.inner_boundary() {
        match geom.locate(s) {
            Some(Location::Interior(i)) => iv[i].0 = iv[i].0.max(h32),
            Some(Location::Boundary(b)) if (model.bc().value(b) as i64) >= h => {}
            _ => return None,
        }
    }
    for &s in contour.outer_boundary() {
        match geom.locate(s) {
            Some(Location::Interior(i)) => iv[i].1 = iv[i].1.min(h32 - 1),
            Some(Location::Boundary(b)) if (model.bc().value(b) as i64) < h => {}
            Some(Location::Boundary(_)) => return None,
            None => {}
        }
    }
    Some(iv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{Mode, ModelParams};
    use crate::lattice::BoundaryCondition;

    fn check_against_exact(model: &Model, window: Window) {
        let e = ExactMeasure::enumerate(model, window, 2_000_000).unwrap();
        let t = TransferMeasure::new(model, window, 1_000_000).unwrap();
        assert!((e.log_z() - t.log_z()).abs() < 1e-10, "{} vs {}", e.log_z(), t.log_z());
        let n = model.geometry().num_sites();
        let mut iv = t.full_intervals();
        iv[0] = (window.lo + 1, window.hi);
        iv[n - 1] = (window.lo, window.lo + 1);
        let a = e.log_z_restricted(&iv);
        let b = t.log_z_restricted(&iv);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn agrees_with_enumeration() {
        for (p, l, mode, window) in [
            (1.0, 2, Mode::Free, Window::new(-3, 3).unwrap()),
            (1.5, 3, Mode::FloorCeiling { n_plus: 2 }, Window::new(0, 2).unwrap()),
            (2.0, 2, Mode::Floor, Window::new(0, 5).unwrap()),
            (3.0, 3, Mode::Free, Window::new(-2, 2).unwrap()),
        ] {
            let m = Model::new(ModelParams::new(p, 0.6, l, mode)).unwrap();
            check_against_exact(&m, window);
        }
    }

    #[test]
    fn agrees_with_enumeration_for_boundary_maps_and_double_count() {
        let mut params = ModelParams::new(1.3, 0.5, 2, Mode::Free)
            .with_bc(BoundaryCondition::Map { values: vec![0, 1, -1, 2, 0, 0, 1, 1] });
        params.bond_double_count = true;
        let m = Model::new(params).unwrap();
        check_against_exact(&m, Window::new(-3, 4).unwrap());
    }

    #[test]
    fn empty_event_has_no_mass() {
        let m = Model::new(ModelParams::new(1.0, 1.0, 2, Mode::Free)).unwrap();
        let t = TransferMeasure::new(&m, Window::new(-2, 2).unwrap(), 1000).unwrap();
        let mut iv = t.full_intervals();
        iv[2] = (5, 6);
        assert_eq!(t.log_z_restricted(&iv), f64::NEG_INFINITY);
    }

    #[test]
    fn single_site_closed_form() {
        let m = Model::new(ModelParams::new(1.0, 1.0, 1, Mode::Free)).unwrap();
        let t = TransferMeasure::new(&m, Window::new(-1, 1).unwrap(), 1000).unwrap();
        let z = 1.0 + 2.0 * libm::exp(-4.0);
        assert!((t.log_z() - libm::log(z)).abs() < 1e-14);
    }
}
