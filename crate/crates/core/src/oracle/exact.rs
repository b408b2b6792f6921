use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gibbs::{log_sum_exp, Mode, Model};
use crate::lattice::HeightField;

/// Inclusive height window every site is enumerated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if lo > hi {
            return Err(Error::Param(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi as i64 - self.lo as i64 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, h: i32) -> bool {
        self.lo <= h && h <= self.hi
    }

    /// Window of half-width `w` around the boundary heights, clipped to the
    /// mode: `[min φ − w, max φ + w]` (free), `[0, max φ⁺ + w]` (floor),
    /// `[0, n₊]` (floor and ceiling, `w` ignored).
    pub fn for_model(model: &Model, w: i32) -> Result<Self> {
        let (bmin, bmax) = model.bc().min_max();
        match model.mode() {
            Mode::Free => Window::new(bmin - w, bmax + w),
            Mode::Floor => Window::new(0, bmax.max(0) + w),
            Mode::FloorCeiling { n_plus } => Window::new(0, n_plus),
        }
    }

    /// Window whose truncation error is negligible: the half-width makes
    /// lifting any single site above the window cost at least
    /// `log(10¹²·|Λ|)` in units of energy times β.
    pub fn certified(model: &Model) -> Result<Self> {
        let n = model.geometry().num_sites() as f64;
        let budget = libm::log(1e12 * n) / (4.0 * model.beta());
        let w = libm::ceil(libm::pow(budget, 1.0 / model.p())) as i32;
        Window::for_model(model, w.max(1))
    }

    pub fn widened(&self, by: i32, mode: Mode) -> Self {
        match mode {
            Mode::Free => Window { lo: self.lo - by, hi: self.hi + by },
            Mode::Floor => Window { lo: self.lo, hi: self.hi + by },
            Mode::FloorCeiling { .. } => *self,
        }
    }

    pub(crate) fn check_mode(&self, mode: Mode) -> Result<()> {
        if !mode.allows(self.lo as i64) || !mode.allows(self.hi as i64) {
            return Err(Error::Param(format!("window [{}, {}] violates {mode:?}", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Fully enumerated Gibbs measure on a window `[lo, hi]^Λ`. States are
/// indexed by a mixed-radix counter over sites in row-major order, the first
/// site being the most significant digit.
#[derive(Debug, Clone)]
pub struct ExactMeasure {
    model: Model,
    window: Window,
    log_weights: Vec<f64>,
    log_z: f64,
}

impl ExactMeasure {
    /// Enumerates every state; fails when `(hi − lo + 1)^{L²}` exceeds `cap`.
    pub fn enumerate(model: &Model, window: Window, cap: u128) -> Result<Self> {
        window.check_mode(model.mode())?;
        let n = model.geometry().num_sites();
        let r = window.len() as u128;
        let required = r.checked_pow(n as u32).unwrap_or(u128::MAX);
        if required > cap {
            return Err(Error::Resource { required, cap });
        }
        let total = required as usize;
        let mut field = HeightField::constant(model.geometry(), window.lo);
        let mut log_weights = Vec::with_capacity(total);
        let beta = model.beta();
        for i in 0..total {
            if i > 0 {
                // increment the mixed-radix counter, last site fastest
                let mut k = n - 1;
                loop {
                    let v = field.get(k);
                    if v < window.hi {
                        field.set(k, v + 1);
                        break;
                    }
                    field.set(k, window.lo);
                    k -= 1;
                }
            }
            log_weights.push(-beta * model.total_energy(&field)?.value());
        }
        let log_z = log_sum_exp(&log_weights);
        Ok(ExactMeasure { model: model.clone(), window, log_weights, log_z })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_weight(&self, i: usize) -> f64 {
        self.log_weights[i]
    }

    pub fn prob(&self, i: usize) -> f64 {
        libm::exp(self.log_weights[i] - self.log_z)
    }

    /// Height of `site` in state `i`.
    #[inline]
    pub fn digit(&self, i: usize, site: usize) -> i32 {
        let n = self.model.geometry().num_sites();
        let r = self.window.len();
        let mut v = i;
        for _ in 0..(n - 1 - site) {
            v /= r;
        }
        self.window.lo + (v % r) as i32
    }

    pub fn state(&self, i: usize) -> HeightField {
        let n = self.model.geometry().num_sites();
        let r = self.window.len();
        let mut hs = alloc::vec![0; n];
        let mut v = i;
        for k in (0..n).rev() {
            hs[k] = self.window.lo + (v % r) as i32;
            v /= r;
        }
        HeightField::from_vec(self.model.geometry(), hs).expect("state has the model geometry")
    }

    pub fn index_of(&self, field: &HeightField) -> Option<usize> {
        if field.side() != self.model.geometry().side() {
            return None;
        }
        let r = self.window.len();
        let mut idx = 0usize;
        for &h in field.heights() {
            if !self.window.contains(h) {
                return None;
            }
            idx = idx * r + (h - self.window.lo) as usize;
        }
        Some(idx)
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, HeightField)> + '_ {
        (0..self.len()).map(move |i| (i, self.state(i)))
    }

    /// Evaluates `pred` on every state.
    pub fn indicator(&self, mut pred: impl FnMut(&HeightField) -> bool) -> Vec<bool> {
        self.states().map(|(_, f)| pred(&f)).collect()
    }

    /// `log π(E)` for an event given as an indicator over states.
    pub fn log_mass(&self, indicator: &[bool]) -> f64 {
        let lw: Vec<f64> = self
            .log_weights
            .iter()
            .zip(indicator)
            .filter(|(_, &b)| b)
            .map(|(&l, _)| l)
            .collect();
        log_sum_exp(&lw) - self.log_z
    }

    pub fn mass(&self, indicator: &[bool]) -> f64 {
        libm::exp(self.log_mass(indicator))
    }

    /// Exact `π(E)`.
    pub fn event_probability(&self, pred: impl FnMut(&HeightField) -> bool) -> f64 {
        self.mass(&self.indicator(pred))
    }

    /// `π(· | A)` on the same state space.
    pub fn conditional(&self, pred: impl FnMut(&HeightField) -> bool) -> Result<ExactMeasure> {
        let ind = self.indicator(pred);
        let log_weights: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&ind)
            .map(|(&l, &b)| if b { l } else { f64::NEG_INFINITY })
            .collect();
        let log_z = log_sum_exp(&log_weights);
        if log_z == f64::NEG_INFINITY {
            return Err(Error::ZeroMass);
        }
        Ok(ExactMeasure { model: self.model.clone(), window: self.window, log_weights, log_z })
    }

    /// Exact law of an integer observable.
    pub fn observable_law(&self, observable: &dyn Fn(&HeightField) -> i64) -> BTreeMap<i64, f64> {
        let mut law = BTreeMap::new();
        for (i, f) in self.states() {
            *law.entry(observable(&f)).or_insert(0.0) += self.prob(i);
        }
        law
    }

    /// `π(η_site ≥ h)`.
    pub fn one_point_tail(&self, site: usize, h: i64) -> Result<f64> {
        if site >= self.model.geometry().num_sites() {
            return Err(Error::Domain(format!("site index {site} outside the box")));
        }
        let ind: Vec<bool> = (0..self.len()).map(|i| self.digit(i, site) as i64 >= h).collect();
        Ok(self.mass(&ind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::ModelParams;

    fn model(p: f64, beta: f64, l: usize, mode: Mode) -> Model {
        Model::new(ModelParams::new(p, beta, l, mode)).unwrap()
    }

    #[test]
    fn two_state_hand_computation() {
        let m = model(1.0, 1.0, 1, Mode::FloorCeiling { n_plus: 1 });
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 10).unwrap();
        let z = 1.0 + libm::exp(-4.0);
        assert!((e.log_z() - libm::log(z)).abs() < 1e-14);
        assert!((e.prob(1) - libm::exp(-4.0) / z).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one() {
        let m = model(1.5, 0.8, 2, Mode::FloorCeiling { n_plus: 2 });
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 1000).unwrap();
        assert_eq!(e.len(), 81);
        let s: f64 = (0..e.len()).map(|i| e.prob(i)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((e.event_probability(|_| true) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let m = model(1.0, 1.0, 3, Mode::FloorCeiling { n_plus: 2 });
        let err = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 1000).unwrap_err();
        assert_eq!(err, Error::Resource { required: 19683, cap: 1000 });
    }

    #[test]
    fn zero_coupling_is_uniform() {
        let m = model(2.0, 1e-12, 2, Mode::FloorCeiling { n_plus: 2 });
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 1000).unwrap();
        for i in 0..e.len() {
            assert!((e.prob(i) - 1.0 / 81.0).abs() < 1e-9);
        }
    }

    #[test]
    fn free_window_is_sign_symmetric() {
        let m = model(1.0, 1.0, 2, Mode::Free);
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 3).unwrap(), 10_000).unwrap();
        for (i, f) in e.states() {
            let neg = HeightField::from_vec(m.geometry(), f.heights().iter().map(|h| -h).collect()).unwrap();
            let j = e.index_of(&neg).unwrap();
            assert!((e.prob(i) - e.prob(j)).abs() < 1e-15);
        }
    }

    #[test]
    fn indexing_round_trips() {
        let m = model(1.0, 1.0, 2, Mode::Free);
        let e = ExactMeasure::enumerate(&m, Window::new(-2, 1).unwrap(), 10_000).unwrap();
        for (i, f) in e.states() {
            assert_eq!(e.index_of(&f), Some(i));
            for s in 0..4 {
                assert_eq!(e.digit(i, s), f.get(s));
            }
        }
    }

    #[test]
    fn floor_is_free_conditioned_on_nonnegative() {
        for p in [1.0, 2.0] {
            let free = model(p, 1.2, 2, Mode::Free);
            let floor = model(p, 1.2, 2, Mode::Floor);
            let w = 4;
            let ef = ExactMeasure::enumerate(&free, Window::new(-w, w).unwrap(), 1_000_000).unwrap();
            let cond = ef.conditional(|f| f.heights().iter().all(|&h| h >= 0)).unwrap();
            let direct = ExactMeasure::enumerate(&floor, Window::new(0, w).unwrap(), 1_000_000).unwrap();
            for (j, f) in direct.states() {
                let i = cond.index_of(&f).unwrap();
                assert!((cond.prob(i) - direct.prob(j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ceiling_is_floor_conditioned_below_ceiling() {
        let n_plus = 1;
        let floor = model(1.0, 0.9, 2, Mode::Floor);
        let fc = model(1.0, 0.9, 2, Mode::FloorCeiling { n_plus });
        let pb = ExactMeasure::enumerate(&floor, Window::new(0, 6).unwrap(), 1_000_000).unwrap();
        let pc = ExactMeasure::enumerate(&fc, Window::for_model(&fc, 0).unwrap(), 1_000_000).unwrap();
        let below = |f: &HeightField| f.heights().iter().all(|&h| h <= n_plus);
        let pb_below = pb.event_probability(below);
        // A = {site 0 at height 1}
        let a = |f: &HeightField| f.get(0) == 1;
        let lhs = pc.event_probability(a);
        let rhs = pb.event_probability(|f| a(f) && below(f)) / pb_below;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_conditioning_fails() {
        let m = model(1.0, 1.0, 1, Mode::FloorCeiling { n_plus: 1 });
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 10).unwrap();
        assert_eq!(e.conditional(|_| false).unwrap_err(), Error::ZeroMass);
    }

    #[test]
    fn one_point_tail_examples() {
        let m = model(1.0, 0.7, 2, Mode::FloorCeiling { n_plus: 3 });
        let e = ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 1_000).unwrap();
        assert!((e.one_point_tail(0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(e.one_point_tail(0, 4).unwrap(), 0.0);
        let tails: Vec<f64> = (0..=4).map(|h| e.one_point_tail(0, h).unwrap()).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]));
        assert!(e.one_point_tail(4, 1).is_err());
    }

    #[test]
    fn windows_respect_mode() {
        let m = model(1.0, 1.0, 2, Mode::Floor);
        assert!(ExactMeasure::enumerate(&m, Window::new(-1, 2).unwrap(), 1000).is_err());
        let w = Window::certified(&model(1.0, 1.0, 3, Mode::Free)).unwrap();
        assert_eq!(w, Window::new(-8, 8).unwrap());
    }
}
