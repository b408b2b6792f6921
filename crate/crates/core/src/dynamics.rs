//! Discrete-time heat-bath Glauber dynamics.
//!
//! Each step picks a uniform site and resamples it by feeding one uniform
//! `u` to the inverse CDF of its heat-bath law. Driving several replicas with
//! the same [`UpdateDraw`] gives the grand coupling; since the heat-bath law
//! is stochastically increasing in the neighbour heights, the coupling keeps
//! the pointwise order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gibbs::{LocalDistribution, Model};
use crate::lattice::HeightField;
use crate::oracle::ExactMeasure;
use crate::rng::{self, StreamId, UpdateDraw};

/// Applies one draw to `field`. Returns the previous height of the site.
#[inline]
pub fn apply_draw(model: &Model, field: &mut HeightField, draw: UpdateDraw, scratch: &mut LocalDistribution) -> i32 {
    model.fill_local(field, draw.site, scratch);
    let old = field.get(draw.site);
    field.set(draw.site, scratch.sample(draw.u));
    old
}

/// A single Glauber chain with its own random stream.
#[derive(Debug, Clone)]
pub struct Chain {
    field: HeightField,
    step: u64,
    stream: StreamId,
    rng: ChaCha8Rng,
    scratch: LocalDistribution,
}

impl Chain {
    pub fn new(model: &Model, field: HeightField, stream: StreamId) -> Result<Self> {
        model.check_field(&field)?;
        Ok(Chain { field, step: 0, rng: stream.rng(), stream, scratch: LocalDistribution::default() })
    }

    pub fn field(&self) -> &HeightField {
        &self.field
    }

    pub fn into_field(self) -> HeightField {
        self.field
    }

    /// Number of single-site updates performed.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Steps divided by `L²`.
    pub fn sweeps(&self) -> f64 {
        self.step as f64 / self.field.heights().len() as f64
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn next_draw(&mut self) -> UpdateDraw {
        UpdateDraw::draw(&mut self.rng, self.field.heights().len())
    }

    /// One Glauber update. Returns the draw and the site's previous height.
    #[inline]
    pub fn step(&mut self, model: &Model) -> (UpdateDraw, i32) {
        let draw = self.next_draw();
        let old = self.apply(model, draw);
        (draw, old)
    }

    /// Applies an externally supplied draw.
    #[inline]
    pub fn apply(&mut self, model: &Model, draw: UpdateDraw) -> i32 {
        self.step += 1;
        apply_draw(model, &mut self.field, draw, &mut self.scratch)
    }

    pub fn run_steps(&mut self, model: &Model, n: u64) {
        for _ in 0..n {
            self.step(model);
        }
    }

    pub fn run_sweeps(&mut self, model: &Model, sweeps: u64) {
        self.run_steps(model, sweeps * self.field.heights().len() as u64)
    }
}

/// Replicas advanced in lock-step by the same draws.
#[derive(Debug, Clone)]
pub struct CoupledChains {
    fields: Vec<HeightField>,
    step: u64,
    rng: ChaCha8Rng,
    scratch: LocalDistribution,
}

impl CoupledChains {
    pub fn new(model: &Model, fields: Vec<HeightField>, stream: StreamId) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Usage("coupling needs at least one replica".into()));
        }
        for f in &fields {
            model.check_field(f)?;
        }
        Ok(CoupledChains { fields, step: 0, rng: stream.rng(), scratch: LocalDistribution::default() })
    }

    pub fn fields(&self) -> &[HeightField] {
        &self.fields
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, model: &Model) -> UpdateDraw {
        let draw = UpdateDraw::draw(&mut self.rng, self.fields[0].heights().len());
        grand_coupled_step(model, &mut self.fields, draw, &mut self.scratch);
        self.step += 1;
        draw
    }

    /// `fields[i] ≤ fields[i+1]` for every consecutive pair.
    pub fn is_ordered(&self) -> bool {
        self.fields.windows(2).all(|w| w[0].leq(&w[1]).unwrap_or(false))
    }

    pub fn coalesced(&self) -> bool {
        self.fields.windows(2).all(|w| w[0] == w[1])
    }
}

/// Applies the same draw to every replica.
pub fn grand_coupled_step(model: &Model, fields: &mut [HeightField], draw: UpdateDraw, scratch: &mut LocalDistribution) {
    for f in fields.iter_mut() {
        apply_draw(model, f, draw, scratch);
    }
}

/// Checked variant of [`grand_coupled_step`] for externally built replica sets.
pub fn grand_coupled_step_checked(
    model: &Model,
    fields: &mut [HeightField],
    draw: UpdateDraw,
    scratch: &mut LocalDistribution,
) -> Result<()> {
    for f in fields.iter() {
        if f.side() != model.geometry().side() {
            return Err(Error::Domain(format!("replica has L = {}, model has L = {}", f.side(), model.geometry().side())));
        }
    }
    grand_coupled_step(model, fields, draw, scratch);
    Ok(())
}

/// A target set for hitting-time measurements, updated incrementally.
pub trait HittingTarget {
    fn name(&self) -> &str;
    /// Re-evaluates membership from scratch.
    fn reset(&mut self, field: &HeightField) -> bool;
    /// Membership after the height at `site` changed from `old`.
    fn update(&mut self, field: &HeightField, site: usize, old: i32) -> bool;
}

/// `{η : #{x : η_x ≥ level} ≥ min_count}`.
#[derive(Debug, Clone)]
pub struct LevelFraction {
    name: String,
    level: i64,
    min_count: usize,
    count: usize,
}

impl LevelFraction {
    /// At least a `fraction` of the `num_sites` sites at height `≥ level`.
    pub fn new(name: impl Into<String>, level: i64, fraction: f64, num_sites: usize) -> Self {
        let min_count = libm::ceil(fraction * num_sites as f64) as usize;
        LevelFraction { name: name.into(), level, min_count, count: 0 }
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn contains(&self, field: &HeightField) -> bool {
        field.count_at_least(self.level) >= self.min_count
    }
}

impl HittingTarget for LevelFraction {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, field: &HeightField) -> bool {
        self.count = field.count_at_least(self.level);
        self.count >= self.min_count
    }

    #[inline]
    fn update(&mut self, field: &HeightField, site: usize, old: i32) -> bool {
        let was = old as i64 >= self.level;
        let is = field.get(site) as i64 >= self.level;
        match (was, is) {
            (false, true) => self.count += 1,
            (true, false) => self.count -= 1,
            _ => {}
        }
        self.count >= self.min_count
    }
}

/// Any predicate on fields, re-evaluated in full after every step.
pub struct FieldPredicate<F> {
    name: String,
    pred: F,
}

impl<F: FnMut(&HeightField) -> bool> FieldPredicate<F> {
    pub fn new(name: impl Into<String>, pred: F) -> Self {
        FieldPredicate { name: name.into(), pred }
    }
}

impl<F: FnMut(&HeightField) -> bool> HittingTarget for FieldPredicate<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, field: &HeightField) -> bool {
        (self.pred)(field)
    }

    fn update(&mut self, field: &HeightField, _site: usize, _old: i32) -> bool {
        (self.pred)(field)
    }
}

/// Outcome of a hitting-time run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HittingRecord {
    pub event: String,
    /// First step at which the target held; `None` when censored.
    pub tau_steps: Option<u64>,
    pub t_max_steps: u64,
    pub censored: bool,
    pub num_sites: usize,
    /// `(step, mean height)` samples.
    pub trajectory: Vec<(u64, f64)>,
}

impl HittingRecord {
    pub fn tau_sweeps(&self) -> Option<f64> {
        self.tau_steps.map(|t| t as f64 / self.num_sites as f64)
    }
}

/// Runs `chain` until `target` holds or `t_max_steps` updates have been
/// made. The target is checked at step 0 and after every step. When
/// `sample_every` is set, the mean height is recorded at that spacing.
pub fn run_until<T: HittingTarget + ?Sized>(
    chain: &mut Chain,
    model: &Model,
    target: &mut T,
    t_max_steps: u64,
    sample_every: Option<u64>,
) -> Result<HittingRecord> {
    if t_max_steps < 1 {
        return Err(Error::Usage("T_max must be at least 1".into()));
    }
    let n = chain.field().heights().len();
    let mut trajectory = Vec::new();
    let record = |chain: &Chain, t: u64, trajectory: &mut Vec<(u64, f64)>| {
        if let Some(every) = sample_every {
            if every > 0 && t.is_multiple_of(every) {
                let mean = chain.field().heights().iter().map(|&h| h as f64).sum::<f64>() / n as f64;
                trajectory.push((t, mean));
            }
        }
    };
    record(chain, 0, &mut trajectory);
    let mut tau = if target.reset(chain.field()) { Some(0) } else { None };
    let mut t = 0;
    while tau.is_none() && t < t_max_steps {
        let (draw, old) = chain.step(model);
        t += 1;
        record(chain, t, &mut trajectory);
        if target.update(chain.field(), draw.site, old) {
            tau = Some(t);
        }
    }
    Ok(HittingRecord {
        event: target.name().into(),
        tau_steps: tau,
        t_max_steps,
        censored: tau.is_none(),
        num_sites: n,
        trajectory,
    })
}

/// Glauber dynamics constrained to a set `A`: a proposed update that would
/// leave `A` is rejected and the chain stays put. Reversible with respect to
/// `π(· | A)`.
pub struct RestrictedChain<F> {
    chain: Chain,
    membership: F,
    rejected: u64,
}

impl<F: Fn(&HeightField) -> bool> RestrictedChain<F> {
    pub fn new(chain: Chain, membership: F) -> Result<Self> {
        if !membership(chain.field()) {
            return Err(Error::Domain("initial field is not in the restricting set".into()));
        }
        Ok(RestrictedChain { chain, membership, rejected: 0 })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn field(&self) -> &HeightField {
        self.chain.field()
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn step(&mut self, model: &Model) {
        let (draw, old) = self.chain.step(model);
        if self.chain.field.get(draw.site) != old && !(self.membership)(&self.chain.field) {
            self.chain.field.set(draw.site, old);
            self.rejected += 1;
        }
        debug_assert!((self.membership)(&self.chain.field));
    }

    pub fn run_steps(&mut self, model: &Model, n: u64) {
        for _ in 0..n {
            self.step(model);
        }
    }
}

type Observable<'a> = dyn Fn(&HeightField) -> i64 + 'a;

/// Law that the time-`t` distribution is compared against.
pub enum TvReference<'a> {
    /// Full state space of an enumerated measure.
    Exact(&'a ExactMeasure),
    /// Law of an integer observable, computed exactly from an enumerated
    /// measure.
    Projected {
        measure: &'a ExactMeasure,
        observable: &'a dyn Fn(&HeightField) -> i64,
    },
    /// Law of an integer observable given as a probability table, for boxes
    /// too large to enumerate.
    Table {
        law: &'a BTreeMap<i64, f64>,
        observable: &'a dyn Fn(&HeightField) -> i64,
    },
}

/// Empirical total-variation distance with a bootstrap radius.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TvEstimate {
    pub tv: f64,
    /// 95% bootstrap radius.
    pub radius: f64,
    pub n_runs: usize,
    pub t_steps: u64,
}

fn tv_of_counts(counts: &BTreeMap<i64, u64>, n: u64, law: &BTreeMap<i64, f64>) -> f64 {
    let mut tv = 0.0;
    for (k, &q) in law {
        let e = counts.get(k).copied().unwrap_or(0) as f64 / n as f64;
        tv += libm::fabs(e - q);
    }
    for (k, &c) in counts {
        if !law.contains_key(k) {
            tv += c as f64 / n as f64;
        }
    }
    0.5 * tv
}

/// Estimates `‖P^t(start, ·) − π‖_TV` from `n_runs` independent chains of
/// `t_steps` updates each. `reference = None` is a usage error.
pub fn tv_distance_to_equilibrium(
    model: &Model,
    start: &HeightField,
    t_steps: u64,
    n_runs: usize,
    master_seed: u64,
    reference: Option<TvReference<'_>>,
) -> Result<TvEstimate> {
    let reference = reference.ok_or_else(|| {
        Error::Usage("TV estimation needs an exact measure or an observable projection".into())
    })?;
    if n_runs == 0 {
        return Err(Error::Usage("n_runs must be positive".into()));
    }
    let (law, observe): (BTreeMap<i64, f64>, &Observable<'_>) = match reference {
        TvReference::Exact(m) => {
            let law = (0..m.len()).map(|i| (i as i64, m.prob(i))).collect();
            (law, &|_: &HeightField| 0)
        }
        TvReference::Projected { measure, observable } => (measure.observable_law(observable), observable),
        TvReference::Table { law, observable } => (law.clone(), observable),
    };
    let exact = match reference {
        TvReference::Exact(m) => Some(m),
        _ => None,
    };
    let mut outcomes: Vec<i64> = Vec::with_capacity(n_runs);
    for run in 0..n_runs {
        let mut chain = Chain::new(model, start.clone(), StreamId::new(master_seed, &[0x7476, run as u64]))?;
        chain.run_steps(model, t_steps);
        let key = match exact {
            Some(m) => m.index_of(chain.field()).map(|i| i as i64).unwrap_or(-1),
            None => observe(chain.field()),
        };
        outcomes.push(key);
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &k in &outcomes {
        *counts.entry(k).or_default() += 1;
    }
    let tv = tv_of_counts(&counts, n_runs as u64, &law);

    // Nonparametric bootstrap over runs.
    const REPLICATES: usize = 200;
    let mut brng = rng::stream(master_seed, &[0x626f6f74]);
    let mut devs: Vec<f64> = Vec::with_capacity(REPLICATES);
    for _ in 0..REPLICATES {
        let mut c: BTreeMap<i64, u64> = BTreeMap::new();
        for _ in 0..n_runs {
            let k = outcomes[rand::Rng::gen_range(&mut brng, 0..n_runs)];
            *c.entry(k).or_default() += 1;
        }
        devs.push(libm::fabs(tv_of_counts(&c, n_runs as u64, &law) - tv));
    }
    devs.sort_by(f64::total_cmp);
    let radius = devs[(0.95 * (REPLICATES - 1) as f64) as usize];
    Ok(TvEstimate { tv, radius, n_runs, t_steps })
}
