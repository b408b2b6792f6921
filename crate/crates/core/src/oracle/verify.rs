//! Exact checks of the inequalities the model is known to satisfy.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::contour::{enumerate_contours, Contour};
use crate::dynamics::{grand_coupled_step, Chain};
use crate::error::{Error, Result};
use crate::gibbs::{LocalDistribution, Mode, Model};
use crate::lattice::HeightField;
use crate::rng::{StreamId, UpdateDraw};

use super::exact::ExactMeasure;
use super::transfer::{contour_event, ProductEvents};

/// How `value` is compared with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Relation {
    /// `value ≤ bound + tolerance`
    AtMost,
    /// `value ≥ bound − tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckEntry {
    pub name: String,
    pub inputs: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Signed distance to the bound, positive when satisfied.
    pub slack: f64,
    pub pass: bool,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, inputs: impl Into<String>, value: f64, relation: Relation, bound: f64, tolerance: f64) -> Self {
        let mut e = CheckEntry {
            name: name.into(),
            inputs: inputs.into(),
            value,
            bound,
            relation,
            tolerance,
            slack: 0.0,
            pass: false,
        };
        e.evaluate();
        e
    }

    fn evaluate(&mut self) {
        self.slack = match self.relation {
            Relation::AtMost => self.bound - self.value,
            Relation::AtLeast => self.value - self.bound,
        };
        self.pass = self.slack >= -self.tolerance;
    }
}

/// Outcome of one verification suite. Passing entries beyond
/// [`Report::MAX_KEPT`] are counted but not stored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Report {
    pub suite: String,
    pub instance: String,
    pub checks: u64,
    pub violations: u64,
    pub min_slack: f64,
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub const MAX_KEPT: usize = 2000;

    pub fn new(suite: impl Into<String>, instance: impl Into<String>) -> Self {
        Report {
            suite: suite.into(),
            instance: instance.into(),
            checks: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.checks += 1;
        if !entry.pass {
            self.violations += 1;
        }
        if entry.slack < self.min_slack {
            self.min_slack = entry.slack;
        }
        if !entry.pass || self.entries.len() < Self::MAX_KEPT {
            self.entries.push(entry);
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Re-evaluates every stored entry with the comparison reversed. Only
    /// used as a negative control for the harness.
    pub fn flipped(&self) -> Report {
        let mut out = Report::new(self.suite.clone(), self.instance.clone());
        for e in &self.entries {
            let mut e = e.clone();
            e.relation = match e.relation {
                Relation::AtMost => Relation::AtLeast,
                Relation::AtLeast => Relation::AtMost,
            };
            e.tolerance = 0.0;
            e.evaluate();
            // a tie satisfies both directions
            if e.slack == 0.0 {
                e.pass = false;
            }
            out.push(e);
        }
        out
    }
}

fn describe(model: &Model) -> String {
    let p = model.params();
    format!("p={} beta={} L={} mode={:?}", p.p, p.beta, p.side, p.mode)
}

fn contour_label(c: &Contour) -> String {
    let mut s = String::from("[");
    for (i, v) in c.vertices().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("({},{})", v.a, v.b));
    }
    s.push(']');
    s
}

/// Relative slack allowed on exact probabilities compared with exact
/// bounds; covers rounding in `log Z` only.
const PROB_TOL: f64 = 1e-12;

/// `π̂(C_{γ,h}) ≤ e^{−β|γ|}` for every contour with `|γ| ≤ max_perimeter`
/// and every level in `levels`. When `wider` is given, each probability is
/// also recomputed on it and the change must stay below `1e-10`.
pub fn verify_peierls(
    measure: &dyn ProductEvents,
    levels: &[i64],
    max_perimeter: usize,
    wider: Option<&dyn ProductEvents>,
) -> Result<Report> {
    let model = measure.model();
    let mut report = Report::new("peierls", describe(model));
    let contours = enumerate_contours(model.geometry(), max_perimeter)?;
    let base = measure.full_intervals();
    let wide_base = wider.map(|w| w.full_intervals());
    for &h in levels {
        for c in &contours {
            let bound = libm::exp(-model.beta() * c.perimeter() as f64);
            let prob = match contour_event(model, &base, c, h) {
                Some(iv) => libm::exp(measure.log_probability(&iv)),
                None => 0.0,
            };
            let inputs = format!("h={h} |gamma|={} gamma={}", c.perimeter(), contour_label(c));
            report.push(CheckEntry::new("contour_probability", inputs.clone(), prob, Relation::AtMost, bound, PROB_TOL * bound));
            if let (Some(w), Some(wb)) = (wider, &wide_base) {
                let pw = match contour_event(model, wb, c, h) {
                    Some(iv) => libm::exp(w.log_probability(&iv)),
                    None => 0.0,
                };
                report.push(CheckEntry::new("window_certification", inputs, libm::fabs(pw - prob), Relation::AtMost, 1e-10, 0.0));
            }
        }
    }
    Ok(report)
}

fn interior_subset(inner: &Contour, outer: &Contour) -> bool {
    inner.interior().iter().all(|&s| outer.contains_site(s))
}

/// `π̂(C_{γ,h} | C_{γ′,h′}) ≤ e^{−β|γ|}` for nested pairs `Λ_γ ⊆ Λ_{γ′}`
/// with `h′ < h`. Pairs whose conditioning event has no mass are skipped.
pub fn verify_peierls_nested(
    measure: &dyn ProductEvents,
    h: i64,
    h_outer: i64,
    max_perimeter: usize,
) -> Result<Report> {
    if h_outer >= h {
        return Err(Error::Usage(format!("nested check needs h' < h, got h'={h_outer} h={h}")));
    }
    let model = measure.model();
    let mut report = Report::new("peierls_nested", describe(model));
    let contours = enumerate_contours(model.geometry(), max_perimeter)?;
    let base = measure.full_intervals();
    for outer in &contours {
        let Some(outer_iv) = contour_event(model, &base, outer, h_outer) else { continue };
        let log_outer = measure.log_z_restricted(&outer_iv);
        if log_outer == f64::NEG_INFINITY {
            continue;
        }
        for inner in contours.iter().filter(|c| interior_subset(c, outer)) {
            let bound = libm::exp(-model.beta() * inner.perimeter() as f64);
            let cond = match contour_event(model, &outer_iv, inner, h) {
                Some(iv) => libm::exp(measure.log_z_restricted(&iv) - log_outer),
                None => 0.0,
            };
            let inputs = format!(
                "h={h} h'={h_outer} gamma={} gamma'={}",
                contour_label(inner),
                contour_label(outer)
            );
            report.push(CheckEntry::new("conditional_contour_probability", inputs, cond, Relation::AtMost, bound, PROB_TOL * bound));
        }
    }
    Ok(report)
}

/// An event on the states of an [`ExactMeasure`], as an indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub indicator: Vec<bool>,
}

impl Event {
    pub fn from_predicate(measure: &ExactMeasure, name: impl Into<String>, pred: impl FnMut(&HeightField) -> bool) -> Self {
        Event { name: name.into(), indicator: measure.indicator(pred) }
    }

    pub fn complement(&self) -> Self {
        Event {
            name: format!("not({})", self.name),
            indicator: self.indicator.iter().map(|b| !b).collect(),
        }
    }
}

/// Whether the event is increasing within the enumerated window. On a
/// product of chains the order is generated by raising one site by one, so
/// closure under those moves is equivalent to the pairwise check.
pub fn is_increasing(measure: &ExactMeasure, indicator: &[bool]) -> bool {
    let n = measure.model().geometry().num_sites();
    let w = measure.window();
    let r = w.len();
    for i in 0..measure.len() {
        if !indicator[i] {
            continue;
        }
        let mut place = 1usize;
        for site in (0..n).rev() {
            if measure.digit(i, site) < w.hi && !indicator[i + place] {
                return false;
            }
            place *= r;
        }
    }
    true
}

/// Brute-force version of [`is_increasing`] over all ordered state pairs.
pub fn is_increasing_pairwise(measure: &ExactMeasure, indicator: &[bool]) -> bool {
    let states: Vec<HeightField> = measure.states().map(|(_, f)| f).collect();
    for (i, a) in states.iter().enumerate() {
        if !indicator[i] {
            continue;
        }
        for (j, b) in states.iter().enumerate() {
            if !indicator[j] && a.leq(b).unwrap_or(false) {
                return false;
            }
        }
    }
    true
}

/// `{η_x ≥ a}` for every site and every `a` strictly inside the window.
pub fn threshold_events(measure: &ExactMeasure) -> Vec<Event> {
    let n = measure.model().geometry().num_sites();
    let w = measure.window();
    let mut out = Vec::new();
    for site in 0..n {
        for a in w.lo + 1..=w.hi {
            let indicator = (0..measure.len()).map(|i| measure.digit(i, site) >= a).collect();
            out.push(Event { name: format!("eta[{site}]>={a}"), indicator });
        }
    }
    out
}

/// `π(E∩F) ≥ π(E)π(F)` over all pairs of increasing events, and
/// `π(E∩F^c) ≤ π(E)π(F^c)` for the complements. A non-increasing event is a
/// usage error.
pub fn verify_fkg(measure: &ExactMeasure, events: &[Event]) -> Result<Report> {
    for e in events {
        if e.indicator.len() != measure.len() {
            return Err(Error::Usage(format!("event {} has the wrong length", e.name)));
        }
        if !is_increasing(measure, &e.indicator) {
            return Err(Error::Usage(format!("event {} is not increasing", e.name)));
        }
    }
    let mut report = Report::new("fkg", describe(measure.model()));
    let probs: Vec<f64> = (0..measure.len()).map(|i| measure.prob(i)).collect();
    let mass = |ind: &dyn Fn(usize) -> bool| -> f64 {
        let v: Vec<f64> = (0..probs.len()).filter(|&i| ind(i)).map(|i| probs[i]).collect();
        crate::gibbs::neumaier_sum(&v)
    };
    let singles: Vec<f64> = events.iter().map(|e| mass(&|i| e.indicator[i])).collect();
    for (a, e) in events.iter().enumerate() {
        for (b, f) in events.iter().enumerate().skip(a) {
            let joint = mass(&|i| e.indicator[i] && f.indicator[i]);
            let cov = joint - singles[a] * singles[b];
            let inputs = format!("E={} F={}", e.name, f.name);
            report.push(CheckEntry::new("covariance_increasing", inputs, cov, Relation::AtLeast, 0.0, 1e-12));
            let joint_c = mass(&|i| e.indicator[i] && !f.indicator[i]);
            let cov_c = joint_c - singles[a] * (1.0 - singles[b]);
            let inputs = format!("E={} F=not({})", e.name, f.name);
            report.push(CheckEntry::new("covariance_with_decreasing", inputs, cov_c, Relation::AtMost, 0.0, 1e-12));
        }
    }
    Ok(report)
}

/// Events for the sandwich check, as subsets of `{0..n₊}^Λ`.
#[derive(Debug, Clone)]
pub enum SandwichEvents {
    /// Every subset; needs at most 20 states.
    All,
    Singletons,
    Listed(Vec<Event>),
}

/// `π̄(A) ≤ π(A)` and `π(A)/π̄(A) = 1/π̄(η ≤ n₊)` for floor measure `floor`
/// and floor-and-ceiling measure `ceiling`.
pub fn verify_sandwich(floor: &ExactMeasure, ceiling: &ExactMeasure, events: SandwichEvents) -> Result<Report> {
    let Mode::FloorCeiling { n_plus } = ceiling.model().mode() else {
        return Err(Error::Usage("second measure must have a ceiling".into()));
    };
    if floor.model().mode() != Mode::Floor {
        return Err(Error::Usage("first measure must be the floor measure".into()));
    }
    if floor.window().hi < n_plus {
        return Err(Error::Usage("floor window must contain [0, n_plus]".into()));
    }
    let fp = floor.model().params();
    let cp = ceiling.model().params();
    if fp.p != cp.p || fp.beta != cp.beta || fp.side != cp.side || fp.bc != cp.bc || fp.bond_double_count != cp.bond_double_count {
        return Err(Error::Usage("measures differ in more than the mode".into()));
    }
    // floor probability of each ceiling state
    let pf: Vec<f64> = ceiling
        .states()
        .map(|(_, f)| floor.prob(floor.index_of(&f).expect("ceiling state inside floor window")))
        .collect();
    let pc: Vec<f64> = (0..ceiling.len()).map(|i| ceiling.prob(i)).collect();
    let below = crate::gibbs::neumaier_sum(&pf);
    let ratio_expected = 1.0 / below;
    let mut report = Report::new("sandwich", format!("{} n_plus={n_plus}", describe(floor.model())));
    report.push(CheckEntry::new("floor_mass_below_ceiling", "", below, Relation::AtMost, 1.0, 0.0));
    let mut check = |name: String, a_floor: f64, a_ceiling: f64| {
        report.push(CheckEntry::new("left_inequality", name.clone(), a_floor, Relation::AtMost, a_ceiling, 0.0));
        if a_floor > 0.0 {
            let gap = libm::fabs(a_ceiling / a_floor - ratio_expected);
            report.push(CheckEntry::new("ratio_identity", name, gap, Relation::AtMost, 1e-12 * ratio_expected, 0.0));
        }
    };
    match events {
        SandwichEvents::All => {
            let m = ceiling.len();
            if m > 20 {
                return Err(Error::Usage(format!("exhaustive events need at most 20 states, have {m}")));
            }
            // prefix sums over subsets in increasing mask order
            let mut sf = vec![0.0f64; 1 << m];
            let mut sc = vec![0.0f64; 1 << m];
            for mask in 1usize..(1 << m) {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                sf[mask] = sf[rest] + pf[low];
                sc[mask] = sc[rest] + pc[low];
                check(format!("mask={mask:#x}"), sf[mask], sc[mask]);
            }
        }
        SandwichEvents::Singletons => {
            for i in 0..ceiling.len() {
                let f = ceiling.state(i);
                check(format!("state={:?}", f.heights()), pf[i], pc[i]);
            }
        }
        SandwichEvents::Listed(list) => {
            for e in list {
                if e.indicator.len() != ceiling.len() {
                    return Err(Error::Usage(format!("event {} has the wrong length", e.name)));
                }
                let sel = |p: &[f64]| {
                    let v: Vec<f64> = (0..p.len()).filter(|&i| e.indicator[i]).map(|i| p[i]).collect();
                    crate::gibbs::neumaier_sum(&v)
                };
                check(e.name.clone(), sel(&pf), sel(&pc));
            }
        }
    }
    Ok(report)
}

/// Heat-bath weights of site `site` within the enumerated window.
fn window_conditional(measure: &ExactMeasure, field: &HeightField, site: usize) -> Vec<f64> {
    let model = measure.model();
    let w = measure.window();
    let terms = model.neighbor_terms(field, site);
    let energies: Vec<f64> = (w.lo..=w.hi)
        .map(|h| terms.iter().map(|&(xi, wt)| wt * model.bond_energy(h as i64 - xi as i64)).sum::<f64>())
        .collect();
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let ws: Vec<f64> = energies.iter().map(|e| libm::exp(-model.beta() * (e - emin))).collect();
    let z = crate::gibbs::neumaier_sum(&ws);
    ws.into_iter().map(|x| x / z).collect()
}

/// Exact residual `|π(η)P(η,η′) − π(η′)P(η′,η)|` of the single-site heat
/// bath (site chosen uniformly) restricted to the window, maximised over all
/// state pairs. Pairs differing at two or more sites have both terms zero.
pub fn verify_detailed_balance(measure: &ExactMeasure, tolerance: f64) -> Result<Report> {
    let model = measure.model();
    let n = model.geometry().num_sites();
    let w = measure.window();
    let r = w.len();
    let mut report = Report::new("detailed_balance", describe(model));
    let mut worst = 0.0f64;
    let mut worst_pair = (0usize, 0usize);
    let mut row_err = 0.0f64;
    for (i, field) in measure.states() {
        let pi_i = measure.prob(i);
        let mut place = 1usize;
        let mut row = 0.0;
        for site in (0..n).rev() {
            let q = window_conditional(measure, &field, site);
            let cur = (field.get(site) - w.lo) as usize;
            row += q.iter().sum::<f64>() / n as f64;
            for (k, &qk) in q.iter().enumerate() {
                if k == cur {
                    continue;
                }
                let j = i - cur * place + k * place;
                let mut other = field.clone();
                other.set(site, w.lo + k as i32);
                let back = window_conditional(measure, &other, site)[cur];
                let res = libm::fabs(pi_i * qk / n as f64 - measure.prob(j) * back / n as f64);
                if res > worst {
                    worst = res;
                    worst_pair = (i, j);
                }
            }
            place *= r;
        }
        row_err = row_err.max(libm::fabs(row - 1.0));
    }
    report.push(CheckEntry::new(
        "max_residual",
        format!("states={} worst_pair=({},{})", measure.len(), worst_pair.0, worst_pair.1),
        worst,
        Relation::AtMost,
        tolerance,
        0.0,
    ));
    report.push(CheckEntry::new("row_sum_error", "", row_err, Relation::AtMost, 1e-12, 0.0));
    Ok(report)
}

/// Runs the grand coupling from an ordered list of starts for `steps`
/// updates and checks the order after every update.
pub fn verify_coupling(model: &Model, starts: Vec<HeightField>, steps: u64, stream: StreamId) -> Result<Report> {
    for f in &starts {
        model.check_field(f)?;
    }
    for pair in starts.windows(2) {
        if !pair[0].leq(&pair[1])? {
            return Err(Error::Usage("coupling starts must be ordered".into()));
        }
    }
    let mut report = Report::new("coupling", format!("{} replicas={}", describe(model), starts.len()));
    let mut fields = starts;
    let mut rng = stream.rng();
    let mut scratch = LocalDistribution::default();
    let n = model.geometry().num_sites();
    let mut violations = 0u64;
    let mut first: Option<u64> = None;
    for t in 0..steps {
        let draw = UpdateDraw::draw(&mut rng, n);
        grand_coupled_step(model, &mut fields, draw, &mut scratch);
        if !fields.windows(2).all(|p| p[0].leq(&p[1]).unwrap_or(false)) {
            violations += 1;
            first.get_or_insert(t);
        }
    }
    let coalesced = fields.windows(2).all(|p| p[0] == p[1]);
    report.push(CheckEntry::new(
        "order_violations",
        format!("steps={steps} first_violation={first:?} coalesced={coalesced}"),
        violations as f64,
        Relation::AtMost,
        0.0,
        0.0,
    ));
    Ok(report)
}

/// Total-variation distance between the occupation measure of one chain run
/// for `steps` updates from `start` and the exact measure.
pub fn occupation_tv(measure: &ExactMeasure, start: HeightField, steps: u64, stream: StreamId) -> Result<f64> {
    let model = measure.model();
    let mut chain = Chain::new(model, start, stream)?;
    let mut counts = vec![0u64; measure.len()];
    let mut outside = 0u64;
    for _ in 0..steps {
        chain.step(model);
        match measure.index_of(chain.field()) {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let tv: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| libm::fabs(c as f64 / steps as f64 - measure.prob(i)))
        .sum::<f64>()
        + outside as f64 / steps as f64;
    Ok(0.5 * tv)
}
