//! The p-SOS Hamiltonian and its heat-bath conditionals.
//!
//! Every unordered nearest-neighbour bond with at least one endpoint in the
//! box is counted once. With `bond_double_count` the literal ordered-pair sum
//! is used instead: interior bonds weigh 2, bonds to the boundary weigh 1.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, BoxGeometry, HeightField, Location};

/// Height constraint of the measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Mode {
    /// Unconstrained heights in `Z`.
    Free,
    /// Heights `≥ 0`.
    Floor,
    /// Heights in `[0, n_plus]`.
    FloorCeiling { n_plus: i32 },
}

impl Mode {
    /// Inclusive height bounds; `i64` extremes stand for "unbounded".
    pub fn bounds(&self) -> (i64, i64) {
        match *self {
            Mode::Free => (i64::MIN, i64::MAX),
            Mode::Floor => (0, i64::MAX),
            Mode::FloorCeiling { n_plus } => (0, n_plus as i64),
        }
    }

    #[inline]
    pub fn allows(&self, h: i64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= h && h <= hi
    }
}

/// Model parameters as they appear in configurations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub p: f64,
    pub beta: f64,
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub side: usize,
    pub mode: Mode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bc: BoundaryCondition,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bond_double_count: bool,
}

impl ModelParams {
    pub fn new(p: f64, beta: f64, side: usize, mode: Mode) -> Self {
        ModelParams { p, beta, side, mode, bc: BoundaryCondition::zero(), bond_double_count: false }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

/// Energy of a configuration in units where β is not applied.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Energy(f64);

impl Energy {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

const POW_TABLE: usize = 1024;
const FREE_TAIL_LOG: f64 = 35.0;
const MAX_FREE_WINDOW: i64 = 100_000;

/// `k ↦ k^p` for nonnegative integer gradients.
#[derive(Debug, Clone)]
struct PowTable {
    p: f64,
    int_p: Option<u32>,
    table: Vec<f64>,
}

impl PowTable {
    fn new(p: f64) -> Self {
        let int_p = (libm::trunc(p) == p && p <= 64.0).then_some(p as u32);
        let table = (0..POW_TABLE).map(|k| Self::raw(p, int_p, k as u64)).collect();
        PowTable { p, int_p, table }
    }

    fn raw(p: f64, int_p: Option<u32>, k: u64) -> f64 {
        match int_p {
            Some(e) => match (k as u128).checked_pow(e) {
                Some(v) => v as f64,
                None => libm::pow(k as f64, p),
            },
            None => libm::pow(k as f64, p),
        }
    }

    #[inline]
    fn get(&self, k: u64) -> f64 {
        if (k as usize) < POW_TABLE {
            self.table[k as usize]
        } else {
            Self::raw(self.p, self.int_p, k)
        }
    }

    fn exact(&self, k: u64) -> Option<u128> {
        (k as u128).checked_pow(self.int_p?)
    }
}

/// Heat-bath conditional law of one site: `probs[i]` is the probability of
/// height `lo + i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalDistribution {
    lo: i32,
    probs: Vec<f64>,
}

impl LocalDistribution {
    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.probs.len() as i32 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.probs.len()).map(move |i| self.lo + i as i32)
    }

    pub fn prob(&self, h: i32) -> f64 {
        let i = h as i64 - self.lo as i64;
        if i < 0 || i >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    /// Probability of height `≥ h`.
    pub fn tail(&self, h: i32) -> f64 {
        if h <= self.lo {
            return 1.0;
        }
        let start = (h as i64 - self.lo as i64).max(0) as usize;
        if start >= self.probs.len() {
            return 0.0;
        }
        // Sum from the small end for accuracy.
        self.probs[start..].iter().rev().sum()
    }

    /// Inverse-CDF sample: the smallest height whose CDF exceeds `u`.
    pub fn sample(&self, u: f64) -> i32 {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &q) in self.probs.iter().enumerate() {
            if q > 0.0 {
                last = i;
            }
            acc += q;
            if u < acc {
                return self.lo + i as i32;
            }
        }
        self.lo + last as i32
    }

    pub fn mode(&self) -> i32 {
        let mut best = 0;
        for (i, &q) in self.probs.iter().enumerate() {
            if q > self.probs[best] {
                best = i;
            }
        }
        self.lo + best as i32
    }
}

/// Validated parameters with precomputed tables.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    geometry: BoxGeometry,
    pow: PowTable,
    free_window: i64,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        if !(params.p.is_finite() && params.p >= 1.0) {
            return Err(Error::Param(format!("p must be a finite real >= 1, got {}", params.p)));
        }
        if !(params.beta.is_finite() && params.beta > 0.0) {
            return Err(Error::Param(format!("beta must be finite and > 0, got {}", params.beta)));
        }
        if let Mode::FloorCeiling { n_plus } = params.mode {
            if n_plus < 1 {
                return Err(Error::Param(format!("n_plus must be >= 1, got {n_plus}")));
            }
        }
        let geometry = BoxGeometry::new(params.side)?;
        params.bc.validate(&geometry)?;
        let w = libm::ceil(libm::pow(FREE_TAIL_LOG / params.beta, 1.0 / params.p)) + 1.0;
        let free_window = if w.is_finite() { (w as i64).min(MAX_FREE_WINDOW) } else { MAX_FREE_WINDOW };
        Ok(Model { pow: PowTable::new(params.p), params, geometry, free_window })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn mode(&self) -> Mode {
        self.params.mode
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.params.bc
    }

    /// Half-width `W = ⌈(35/β)^{1/p}⌉ + 1` of the heat-bath window for
    /// unbounded directions; the discarded single-bond tail is below `e^{-35}`.
    pub fn free_window(&self) -> i64 {
        self.free_window
    }

    /// `|k|^p`.
    #[inline]
    pub fn bond_energy(&self, gradient: i64) -> f64 {
        self.pow.get(gradient.unsigned_abs())
    }

    #[inline]
    fn interior_weight(&self) -> f64 {
        if self.params.bond_double_count {
            2.0
        } else {
            1.0
        }
    }

    #[inline]
    fn bond_weight(&self, loc: Location) -> f64 {
        match loc {
            Location::Interior(_) => self.interior_weight(),
            Location::Boundary(_) => 1.0,
        }
    }

    pub fn check_field(&self, field: &HeightField) -> Result<()> {
        if field.side() != self.geometry.side() {
            return Err(Error::Domain(format!(
                "field has L = {}, model has L = {}",
                field.side(),
                self.geometry.side()
            )));
        }
        let (lo, hi) = self.params.mode.bounds();
        for (i, &h) in field.heights().iter().enumerate() {
            if !self.params.mode.allows(h as i64) {
                return Err(Error::Constraint { site: i, height: h as i64, lo, hi });
            }
        }
        Ok(())
    }

    /// Neighbour heights and bond weights of site `index`.
    #[inline]
    pub fn neighbor_terms(&self, field: &HeightField, index: usize) -> [(i32, f64); 4] {
        self.geometry
            .neighbors_of_index(index)
            .map(|(_, loc)| (field.xi(loc, &self.params.bc), self.bond_weight(loc)))
    }

    /// Calls `f(gradient, weight)` once per bond of the Hamiltonian.
    fn for_each_bond(&self, field: &HeightField, mut f: impl FnMut(i64, f64)) {
        let bc = &self.params.bc;
        for i in 0..self.geometry.num_sites() {
            let hi = field.get(i) as i64;
            for (_, loc) in self.geometry.neighbors_of_index(i) {
                match loc {
                    Location::Interior(j) if j > i => f(hi - field.get(j) as i64, self.interior_weight()),
                    Location::Interior(_) => {}
                    Location::Boundary(b) => f(hi - bc.value(b) as i64, 1.0),
                }
            }
        }
    }

    /// Exact energy for integer `p`; `None` for fractional `p` or overflow.
    pub fn total_energy_exact(&self, field: &HeightField) -> Result<Option<u128>> {
        self.check_field(field)?;
        if self.pow.int_p.is_none() {
            return Ok(None);
        }
        let mut acc: Option<u128> = Some(0);
        self.for_each_bond(field, |g, w| {
            acc = acc.and_then(|a| {
                let e = self.pow.exact(g.unsigned_abs())?;
                a.checked_add(e.checked_mul(w as u128)?)
            });
        });
        Ok(acc)
    }

    /// `H(η) = Σ_bonds |∇η|^p`.
    pub fn total_energy(&self, field: &HeightField) -> Result<Energy> {
        if let Some(e) = self.total_energy_exact(field)? {
            return Ok(Energy(e as f64));
        }
        let mut terms = Vec::with_capacity(2 * field.heights().len() + 4 * field.side());
        self.for_each_bond(field, |g, w| terms.push(w * self.bond_energy(g)));
        Ok(Energy(pairwise_sum(&terms)))
    }

    fn check_height(&self, index: usize, h: i64) -> Result<()> {
        if !self.params.mode.allows(h) {
            let (lo, hi) = self.params.mode.bounds();
            return Err(Error::Constraint { site: index, height: h, lo, hi });
        }
        Ok(())
    }

    /// `H(η[x ← new_h]) − H(η)` from the four bonds at `x`.
    pub fn energy_delta(&self, field: &HeightField, index: usize, new_h: i32) -> Result<f64> {
        if index >= self.geometry.num_sites() {
            return Err(Error::Domain(format!("site index {index} outside the box")));
        }
        self.check_height(index, new_h as i64)?;
        let old = field.get(index) as i64;
        let new = new_h as i64;
        let mut d = 0.0;
        for (xi, w) in self.neighbor_terms(field, index) {
            let xi = xi as i64;
            d += w * (self.bond_energy(new - xi) - self.bond_energy(old - xi));
        }
        Ok(d)
    }

    /// Unnormalised weight `exp(−β H(η))`. Underflows to 0 for large
    /// energies; use [`log_gibbs_weight`](Self::log_gibbs_weight) there.
    pub fn gibbs_weight(&self, field: &HeightField) -> Result<f64> {
        Ok(libm::exp(self.log_gibbs_weight(field)?))
    }

    pub fn log_gibbs_weight(&self, field: &HeightField) -> Result<f64> {
        Ok(-self.params.beta * self.total_energy(field)?.value())
    }

    /// Legal heat-bath support for the given neighbour heights.
    fn support(&self, terms: &[(i32, f64); 4]) -> (i64, i64) {
        let mut mn = i64::MAX;
        let mut mx = i64::MIN;
        for &(h, _) in terms {
            mn = mn.min(h as i64);
            mx = mx.max(h as i64);
        }
        let w = self.free_window;
        let clamp = |v: i64| v.clamp(i32::MIN as i64, i32::MAX as i64);
        match self.params.mode {
            Mode::Free => (clamp(mn - w), clamp(mx + w)),
            Mode::Floor => {
                let lo = (mn - w).max(0);
                (lo, clamp((mx + w).max(lo)))
            }
            Mode::FloorCeiling { n_plus } => (0, n_plus as i64),
        }
    }

    /// Fills `out` with the heat-bath law of site `index` given the rest of
    /// `field`. Reuses the allocation of `out`.
    pub fn fill_local(&self, field: &HeightField, index: usize, out: &mut LocalDistribution) {
        let terms = self.neighbor_terms(field, index);
        let (lo, hi) = self.support(&terms);
        out.lo = lo as i32;
        out.probs.clear();
        let beta = self.params.beta;
        let mut max = f64::NEG_INFINITY;
        for h in lo..=hi {
            let mut e = 0.0;
            for &(xi, w) in &terms {
                e += w * self.bond_energy(h - xi as i64);
            }
            let lw = -beta * e;
            max = max.max(lw);
            out.probs.push(lw);
        }
        for q in out.probs.iter_mut() {
            *q = libm::exp(*q - max);
        }
        let total = neumaier_sum(&out.probs);
        for q in out.probs.iter_mut() {
            *q /= total;
        }
    }

    /// Heat-bath law `∝ exp(−β Σ_y |h − ξ_y|^p)` of one site.
    pub fn heat_bath_distribution(&self, field: &HeightField, index: usize) -> Result<LocalDistribution> {
        if index >= self.geometry.num_sites() {
            return Err(Error::Domain(format!("site index {index} outside the box")));
        }
        let mut out = LocalDistribution::default();
        self.fill_local(field, index, &mut out);
        Ok(out)
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Tree reduction of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `log Σ exp(xs)`, `−∞` for an empty or all-`−∞` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let v = libm::exp(x - m);
        let t = sum + v;
        c += (sum - t) + v;
        sum = t;
    }
    m + libm::log(sum + c)
}
