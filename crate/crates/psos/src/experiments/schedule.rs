use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `d(p)`: `p` on `(1, 2)` and `2` from `2` on. Undefined for `p ≤ 1`.
pub fn d_of_p(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Config(format!("d(p) is defined for 1 < p < inf, got p = {p}")));
    }
    Ok(if p < 2.0 { p } else { 2.0 })
}

/// Which height the hitting-time target counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `#{η_x ≥ aH} ≥ fraction·|Λ|`, fraction 9/10 by default.
    #[default]
    Omega,
    /// `#{η_x ≥ h + 1} ≥ fraction·L²` with `h = aH − 1`, fraction 1/2 by default.
    B,
}

impl TargetKind {
    pub fn default_fraction(self) -> f64 {
        match self {
            TargetKind::Omega => 0.9,
            TargetKind::B => 0.5,
        }
    }
}

/// Levels used by the hitting-time protocol for one `(p, a, H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub p: f64,
    pub a: f64,
    /// `None` for `p ≤ 1`.
    pub d_of_p: Option<f64>,
    pub typical_height: i64,
    /// `aH`, possibly fractional.
    pub a_h: f64,
    /// Smallest integer height counted by either target: `⌈aH⌉`.
    pub target_level: i64,
    /// Level `aH − 1` of the atypical set, as an integer threshold `⌈aH⌉ − 1`.
    pub contour_level: i64,
}

impl LevelSchedule {
    pub fn new(p: f64, a: f64, typical_height: i64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("a must lie in (0, 1), got {a}")));
        }
        let a_h = a * typical_height as f64;
        let target_level = a_h.ceil() as i64;
        Ok(LevelSchedule {
            p,
            a,
            d_of_p: d_of_p(p).ok(),
            typical_height,
            a_h,
            target_level,
            contour_level: target_level - 1,
        })
    }

    /// Critical droplet area `δ L^{2a^{d(p)}}`; `p ≤ 1` uses exponent `2a`.
    pub fn droplet_area(&self, delta: f64, side: usize) -> f64 {
        let d = self.d_of_p.unwrap_or(1.0);
        delta * (side as f64).powf(2.0 * self.a.powf(d))
    }

    /// Growth variable `L^{a^{d(p)}}` of the hitting-time fit.
    pub fn growth_variable(&self, side: usize) -> Option<f64> {
        self.d_of_p.map(|d| (side as f64).powf(self.a.powf(d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_of_p_piecewise() {
        for (p, d) in [(1.2, 1.2), (1.9, 1.9), (2.0, 2.0), (2.1, 2.0), (5.0, 2.0)] {
            assert_eq!(d_of_p(p).unwrap(), d);
        }
        assert!(d_of_p(1.0).is_err());
        assert!(d_of_p(f64::INFINITY).is_err());
    }

    #[test]
    fn levels() {
        let s = LevelSchedule::new(2.0, 0.5, 3).unwrap();
        assert_eq!((s.target_level, s.contour_level), (2, 1));
        let s = LevelSchedule::new(2.0, 0.5, 0).unwrap();
        assert_eq!(s.target_level, 0);
        assert!(LevelSchedule::new(2.0, 1.0, 3).is_err());
    }
}
