//! Walker dynamics: spawning, clone/death, annihilation, initiator
//! filtering and shift control.
//!
//! Every occupied configuration draws from its own random stream keyed by
//! `(seed, step, configuration)`, and all contributions are integer sums, so
//! a step is bit-identical for any shard count or thread schedule.

use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::estimators::{measure_all, Measurement, RatioAccumulator};
use crate::estimators::observable::Observable;
use crate::lattice::{SpinConfig, XyzModel};
use crate::liouvillian::{connections_into, diagonal_element, ConfigPair, Connection, ConnectionScratch, ImportanceScheme};
use crate::samplers::{splitmix64, stochastic_round, RngStream, SpawnTable};
use crate::{Error, Real, Result};

/// Net signed walker counts on one configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WalkerCell {
    pub re: i64,
    pub im: i64,
    pub initiator: bool,
}

impl WalkerCell {
    pub fn new(re: i64, im: i64) -> Self {
        WalkerCell {
            re,
            im,
            initiator: false,
        }
    }

    #[inline]
    pub fn weight(&self) -> u64 {
        self.re.unsigned_abs() + self.im.unsigned_abs()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.re == 0 && self.im == 0
    }
}

/// How the controlled diagonal weight `N_w` is read off the table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NwMode {
    /// `sum_diag |re|`
    #[default]
    AbsSum,
    /// `sum_diag re`
    NetSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams<T> {
    pub dt: T,
    /// Diagonal weight at which shift control engages.
    pub target_population: u64,
    pub delta: T,
    pub shift_update_interval: u32,
    pub initial_shift: T,
    /// Occupancy above which a cell becomes an initiator; 0 disables the
    /// initiator filter.
    pub initiator_limit: T,
    /// Treat every configuration as an initiator.
    pub all_initiators: bool,
    pub importance: ImportanceScheme<T>,
    pub equilibration_steps: u64,
    pub measurement_steps: u64,
    pub seed: u64,
    pub initial_walkers: u64,
    pub hard_cap: u64,
    pub nw_mode: NwMode,
    pub shards: usize,
}

impl<T: Real> Default for EngineParams<T> {
    fn default() -> Self {
        EngineParams {
            dt: T::lit(0.01),
            target_population: 10_000,
            delta: T::lit(0.1),
            shift_update_interval: 10,
            initial_shift: T::lit(-0.5),
            initiator_limit: T::zero(),
            all_initiators: false,
            importance: ImportanceScheme::none(),
            equilibration_steps: 5_000,
            measurement_steps: 20_000,
            seed: 1,
            initial_walkers: 100,
            hard_cap: 1_000_000_000,
            nw_mode: NwMode::AbsSum,
            shards: 1,
        }
    }
}

impl<T: Real> EngineParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(Error::param("dt", "must be > 0"));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::param("delta", "must be > 0"));
        }
        if !(self.initiator_limit >= T::zero()) {
            return Err(Error::param("initiator_limit", "must be >= 0"));
        }
        if !(self.importance.p >= T::zero()) || !self.importance.p.is_finite() {
            return Err(Error::param("importance_p", "must be finite and >= 0"));
        }
        if self.shift_update_interval == 0 {
            return Err(Error::param("shift_update_interval", "must be >= 1"));
        }
        if self.target_population == 0 {
            return Err(Error::param("target_population", "must be > 0"));
        }
        if self.initial_walkers == 0 {
            return Err(Error::param("initial_walkers", "must be > 0"));
        }
        if self.shards == 0 {
            return Err(Error::param("shards", "must be >= 1"));
        }
        if self.hard_cap < self.initial_walkers {
            return Err(Error::param("hard_cap", "must be >= initial_walkers"));
        }
        Ok(())
    }

    fn filter_active(&self) -> bool {
        self.initiator_limit > T::zero() && !self.all_initiators
    }
}

/// Sparse walker representation of the (weighted, unnormalised) density
/// matrix, split into hash shards.
#[derive(Clone, Debug)]
pub struct PopulationTable<T> {
    shards: Vec<FxHashMap<u64, WalkerCell>>,
    pub step: u64,
    pub shift: T,
}

impl<T: Real> PopulationTable<T> {
    pub fn empty(n_shards: usize, shift: T) -> Self {
        PopulationTable {
            shards: vec![FxHashMap::default(); n_shards.max(1)],
            step: 0,
            shift,
        }
    }

    pub fn n_shards(&self) -> usize {
        self.shards.len()
    }

    #[inline]
    fn shard_of(&self, key: u64) -> usize {
        shard_index(key, self.shards.len())
    }

    /// Add walkers to a cell; cells that reach zero are removed.
    pub fn add(&mut self, pair: ConfigPair, re: i64, im: i64) {
        let key = pair.key();
        let s = self.shard_of(key);
        let cell = self.shards[s].entry(key).or_default();
        cell.re += re;
        cell.im += im;
        if cell.is_empty() {
            self.shards[s].remove(&key);
        }
    }

    pub fn get(&self, pair: ConfigPair) -> Option<WalkerCell> {
        let key = pair.key();
        self.shards[self.shard_of(key)].get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConfigPair, WalkerCell)> + '_ {
        self.shards
            .iter()
            .flat_map(|m| m.iter().map(|(&k, &c)| (ConfigPair::from_key(k), c)))
    }

    /// Occupied configurations.
    pub fn len(&self) -> usize {
        self.shards.iter().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.shards.iter().all(|m| m.is_empty())
    }

    pub fn diag_weight(&self, mode: NwMode) -> f64 {
        let mut abs = 0u64;
        let mut net = 0i64;
        for (p, c) in self.iter() {
            if p.is_diagonal() {
                abs += c.re.unsigned_abs();
                net += c.re;
            }
        }
        match mode {
            NwMode::AbsSum => abs as f64,
            NwMode::NetSum => net as f64,
        }
    }

    /// `sum (|re| + |im|)` over all cells.
    pub fn total_weight(&self) -> u64 {
        self.iter().map(|(_, c)| c.weight()).sum()
    }

    /// Recompute initiator flags from occupancy (diagonals are always
    /// initiators and need no flag).
    pub fn refresh_initiators(&mut self, limit: T, all: bool) {
        let limit = limit.as_f64();
        for m in &mut self.shards {
            for c in m.values_mut() {
                c.initiator = c.initiator || all || (limit > 0.0 && c.weight() as f64 > limit);
            }
        }
    }

    /// Same contents re-hashed into `n` shards.
    pub fn reshard(&self, n: usize) -> Self {
        let mut out = Self::empty(n, self.shift);
        out.step = self.step;
        for m in &self.shards {
            for (&k, &c) in m {
                let s = out.shard_of(k);
                out.shards[s].insert(k, c);
            }
        }
        out
    }

    /// Cells sorted by configuration, for deterministic dumps.
    pub fn sorted_cells(&self) -> Vec<(ConfigPair, WalkerCell)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|(p, _)| (p.row, p.col));
        v
    }
}

#[inline]
fn shard_index(key: u64, n: usize) -> usize {
    if n == 1 {
        0
    } else {
        (splitmix64(key) % n as u64) as usize
    }
}

/// `n0` real walkers on the all-down diagonal configuration.
pub fn init_population<T: Real>(n0: u64, _model: &XyzModel<T>, params: &EngineParams<T>) -> Result<PopulationTable<T>> {
    if n0 == 0 {
        return Err(Error::param("initial_walkers", "must be > 0"));
    }
    let mut pop = PopulationTable::empty(params.shards, params.initial_shift);
    pop.add(ConfigPair::diagonal(SpinConfig::ALL_DOWN), n0 as i64, 0);
    pop.refresh_initiators(params.initiator_limit, params.all_initiators);
    Ok(pop)
}

#[derive(Clone, Copy, Debug)]
struct Spawn {
    key: u64,
    re: i64,
    im: i64,
    from_initiator: bool,
}

struct Scratch<T> {
    conn: ConnectionScratch<T>,
    conns: Vec<Connection<T>>,
    re_idx: Vec<usize>,
    im_idx: Vec<usize>,
    re_table: SpawnTable,
    im_table: SpawnTable,
    re_counts: Vec<u64>,
    im_counts: Vec<u64>,
    child_re: Vec<i64>,
    child_im: Vec<i64>,
}

impl<T: Real> Scratch<T> {
    fn new() -> Self {
        Scratch {
            conn: ConnectionScratch::default(),
            conns: Vec::new(),
            re_idx: Vec::new(),
            im_idx: Vec::new(),
            re_table: SpawnTable::default(),
            im_table: SpawnTable::default(),
            re_counts: Vec::new(),
            im_counts: Vec::new(),
            child_re: Vec::new(),
            child_im: Vec::new(),
        }
    }
}

struct ShardSweep {
    /// `(key, re, im, initiator)` after clone/death, zero cells included.
    local: Vec<(u64, i64, i64, bool)>,
    outbox: Vec<Vec<Spawn>>,
}

#[inline]
fn sgn(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

struct StepCtx<'a, T> {
    model: &'a XyzModel<T>,
    params: &'a EngineParams<T>,
    shift: T,
    step: u64,
    n_shards: usize,
}

fn sweep_shard<T: Real>(ctx: &StepCtx<'_, T>, shard: &FxHashMap<u64, WalkerCell>) -> Result<ShardSweep> {
    let dt = ctx.params.dt;
    let dt64 = dt.as_f64();
    let mut scratch = Scratch::<T>::new();
    let mut local = Vec::with_capacity(shard.len());
    let mut outbox: Vec<Vec<Spawn>> = vec![Vec::new(); ctx.n_shards];

    for (&key, &cell) in shard {
        let pair = ConfigPair::from_key(key);
        let mut rng = RngStream::for_cell(ctx.params.seed, ctx.step, key);
        let parent_initiator = cell.initiator || pair.is_diagonal() || ctx.params.all_initiators;

        // clone/death and the on-site real <-> imaginary exchange
        let d = diagonal_element(ctx.model, pair, ctx.shift) * dt;
        let (d_re, d_im) = (d.re.as_f64(), d.im.as_f64());
        if 1.0 + d_re < 0.0 {
            return Err(Error::TimeStepTooLarge {
                step: ctx.step,
                factor: 1.0 + d_re,
            });
        }
        let (r, m) = (cell.re, cell.im);
        let (ar, am) = (r.unsigned_abs() as f64, m.unsigned_abs() as f64);
        let (sr, sm) = (r.signum(), m.signum());
        let rr = stochastic_round(ar * d_re.abs(), &mut rng)? as i64;
        let ri = stochastic_round(ar * d_im.abs(), &mut rng)? as i64;
        let mr = stochastic_round(am * d_re.abs(), &mut rng)? as i64;
        let mi = stochastic_round(am * d_im.abs(), &mut rng)? as i64;
        let new_re = r + sr * sgn(d_re) * rr - sm * sgn(d_im) * mi;
        let new_im = m + sr * sgn(d_im) * ri + sm * sgn(d_re) * mr;
        local.push((key, new_re, new_im, cell.initiator));

        // spawning
        let s = &mut scratch;
        s.conns.clear();
        connections_into(ctx.model, pair, &ctx.params.importance, &mut s.conn, &mut s.conns);
        if s.conns.is_empty() {
            continue;
        }
        s.re_idx.clear();
        s.im_idx.clear();
        for (k, c) in s.conns.iter().enumerate() {
            if c.amplitude.re != T::zero() {
                s.re_idx.push(k);
            }
            if c.amplitude.im != T::zero() {
                s.im_idx.push(k);
            }
        }
        let conns = &s.conns;
        s.re_table
            .fill(s.re_idx.iter().map(|&k| conns[k].amplitude.re.abs().as_f64() * dt64));
        s.im_table
            .fill(s.im_idx.iter().map(|&k| conns[k].amplitude.im.abs().as_f64() * dt64));
        s.child_re.clear();
        s.child_re.resize(conns.len(), 0);
        s.child_im.clear();
        s.child_im.resize(conns.len(), 0);

        let re_sign = |k: usize| sgn(conns[k].amplitude.re.as_f64());
        let im_sign = |k: usize| sgn(conns[k].amplitude.im.as_f64());

        // real parents: Re A -> real children, Im A -> imaginary children
        if r != 0 {
            let n = r.unsigned_abs();
            if !s.re_table.is_empty() {
                s.re_counts.clear();
                s.re_counts.resize(s.re_idx.len(), 0);
                s.re_table.spawn(n, &mut rng, &mut s.re_counts)?;
                for (j, &k) in s.re_idx.iter().enumerate() {
                    s.child_re[k] += sr * re_sign(k) * s.re_counts[j] as i64;
                }
            }
            if !s.im_table.is_empty() {
                s.im_counts.clear();
                s.im_counts.resize(s.im_idx.len(), 0);
                s.im_table.spawn(n, &mut rng, &mut s.im_counts)?;
                for (j, &k) in s.im_idx.iter().enumerate() {
                    s.child_im[k] += sr * im_sign(k) * s.im_counts[j] as i64;
                }
            }
        }
        // imaginary parents: Im A -> real children (i*i = -1), Re A -> imaginary
        if m != 0 {
            let n = m.unsigned_abs();
            if !s.im_table.is_empty() {
                s.im_counts.clear();
                s.im_counts.resize(s.im_idx.len(), 0);
                s.im_table.spawn(n, &mut rng, &mut s.im_counts)?;
                for (j, &k) in s.im_idx.iter().enumerate() {
                    s.child_re[k] -= sm * im_sign(k) * s.im_counts[j] as i64;
                }
            }
            if !s.re_table.is_empty() {
                s.re_counts.clear();
                s.re_counts.resize(s.re_idx.len(), 0);
                s.re_table.spawn(n, &mut rng, &mut s.re_counts)?;
                for (j, &k) in s.re_idx.iter().enumerate() {
                    s.child_im[k] += sm * re_sign(k) * s.re_counts[j] as i64;
                }
            }
        }

        for (k, c) in conns.iter().enumerate() {
            let (cre, cim) = (s.child_re[k], s.child_im[k]);
            if cre == 0 && cim == 0 {
                continue;
            }
            let tkey = c.target.key();
            outbox[shard_index(tkey, ctx.n_shards)].push(Spawn {
                key: tkey,
                re: cre,
                im: cim,
                from_initiator: parent_initiator,
            });
        }
    }
    Ok(ShardSweep { local, outbox })
}

fn merge_shard<T: Real>(
    params: &EngineParams<T>,
    old: &FxHashMap<u64, WalkerCell>,
    dest: usize,
    sweeps: &[ShardSweep],
) -> FxHashMap<u64, WalkerCell> {
    let mut next: FxHashMap<u64, WalkerCell> =
        FxHashMap::with_capacity_and_hasher(old.len() + old.len() / 2, Default::default());
    for &(key, re, im, initiator) in &sweeps[dest].local {
        next.insert(key, WalkerCell { re, im, initiator });
    }
    let filter = params.filter_active();
    for sweep in sweeps {
        for sp in &sweep.outbox[dest] {
            if filter
                && !sp.from_initiator
                && !old.contains_key(&sp.key)
                && !ConfigPair::from_key(sp.key).is_diagonal()
            {
                continue;
            }
            let cell = next.entry(sp.key).or_default();
            cell.re += sp.re;
            cell.im += sp.im;
        }
    }
    let limit = params.initiator_limit.as_f64();
    next.retain(|_, c| {
        if c.is_empty() {
            return false;
        }
        // flags persist while occupied
        c.initiator = c.initiator || params.all_initiators || (limit > 0.0 && c.weight() as f64 > limit);
        true
    });
    next
}

/// One stochastic Euler step of the shifted, importance-weighted dynamics.
///
/// In expectation the new table equals `rho + dt * L~ rho`.
pub fn step<T: Real>(pop: &PopulationTable<T>, model: &XyzModel<T>, params: &EngineParams<T>) -> Result<PopulationTable<T>> {
    let n_shards = pop.n_shards();
    let ctx = StepCtx {
        model,
        params,
        shift: pop.shift,
        step: pop.step,
        n_shards,
    };
    let sweeps: Vec<ShardSweep> = if n_shards == 1 {
        vec![sweep_shard(&ctx, &pop.shards[0])?]
    } else {
        pop.shards
            .par_iter()
            .map(|m| sweep_shard(&ctx, m))
            .collect::<Result<_>>()?
    };
    let shards: Vec<_> = if n_shards == 1 {
        vec![merge_shard(params, &pop.shards[0], 0, &sweeps)]
    } else {
        (0..n_shards)
            .into_par_iter()
            .map(|d| merge_shard(params, &pop.shards[d], d, &sweeps))
            .collect()
    };
    let next = PopulationTable {
        shards,
        step: pop.step + 1,
        shift: pop.shift,
    };
    let weight = next.total_weight();
    if weight > params.hard_cap {
        return Err(Error::PopulationExplosion {
            step: pop.step,
            weight,
            cap: params.hard_cap,
        });
    }
    Ok(next)
}

/// `S + delta / (A dt) * ln(N_w / N_w_prev)`.
pub fn update_shift<T: Real>(shift: T, params: &EngineParams<T>, n_w: f64, n_w_prev: f64, step: u64) -> Result<T> {
    if !(n_w > 0.0 && n_w_prev > 0.0) {
        return Err(Error::PopulationDied { step });
    }
    let a = T::from_u32(params.shift_update_interval).unwrap();
    let growth = T::lit((n_w / n_w_prev).ln());
    Ok(shift + params.delta / (a * params.dt) * growth)
}

/// Per-step diagnostics and estimator contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct SimRecord<T> {
    pub step: u64,
    pub time: T,
    pub shift: T,
    pub n_diag: u64,
    pub n_total: u64,
    pub observables: Vec<Measurement<T>>,
}

/// Result of a full run: measurement-phase accumulators and diagnostics.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub observables: Vec<Observable>,
    pub accumulators: Vec<RatioAccumulator<T>>,
    /// Shift value at every measurement step.
    pub shift_history: Vec<T>,
    pub steps: u64,
    /// Step at which shift control took over, if the target was reached.
    pub engaged_at: Option<u64>,
    pub mean_occupied: f64,
    pub final_n_diag: u64,
    pub final_n_total: u64,
    pub runtime_secs: f64,
}

impl<T: Real> RunOutput<T> {
    pub fn mean_shift(&self) -> Option<T> {
        mean(&self.shift_history)
    }

    /// Mean shift over the second half of the measurement phase.
    pub fn mean_shift_last_half(&self) -> Option<T> {
        mean(&self.shift_history[self.shift_history.len() / 2..])
    }

    pub fn accumulator(&self, obs: Observable) -> Option<&RatioAccumulator<T>> {
        self.observables
            .iter()
            .position(|o| *o == obs)
            .map(|i| &self.accumulators[i])
    }
}

fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().sum::<T>() / T::from_usize(xs.len()).unwrap())
    }
}

/// Step-by-step driver: growth phase at fixed shift, then shift control,
/// then measurement.
pub struct Simulation<'a, T> {
    model: &'a XyzModel<T>,
    params: EngineParams<T>,
    observables: Vec<Observable>,
    pop: PopulationTable<T>,
    engaged_at: Option<u64>,
    n_w_prev: f64,
    accumulators: Vec<RatioAccumulator<T>>,
    shift_history: Vec<T>,
    occupied_sum: f64,
    started: Instant,
}

impl<'a, T: Real> Simulation<'a, T> {
    pub fn new(model: &'a XyzModel<T>, params: EngineParams<T>, observables: &[Observable]) -> Result<Self> {
        params.validate()?;
        model.params.validate()?;
        let n = model.n_sites();
        if let Some(o) = observables.iter().find(|o| !o.is_valid_for(n)) {
            return Err(Error::param("observables", format!("{o} not defined on {n} sites")));
        }
        let bound = crate::liouvillian::stability_bound(model);
        if params.dt > bound {
            log::warn!("dt = {} exceeds the estimated stability bound {}", params.dt, bound);
        }
        let pop = init_population(params.initial_walkers, model, &params)?;
        Ok(Simulation {
            model,
            observables: observables.to_vec(),
            accumulators: observables.iter().map(|_| RatioAccumulator::default()).collect(),
            shift_history: Vec::with_capacity(params.measurement_steps as usize),
            params,
            pop,
            engaged_at: None,
            n_w_prev: 0.0,
            occupied_sum: 0.0,
            started: Instant::now(),
        })
    }

    pub fn total_steps(&self) -> u64 {
        self.params.equilibration_steps + self.params.measurement_steps
    }

    pub fn population(&self) -> &PopulationTable<T> {
        &self.pop
    }

    pub fn is_finished(&self) -> bool {
        self.pop.step >= self.total_steps()
    }

    /// Advance one step; `None` once all steps have run.
    pub fn advance(&mut self) -> Result<Option<SimRecord<T>>> {
        if self.is_finished() {
            return Ok(None);
        }
        let params = &self.params;
        let mut next = step(&self.pop, self.model, params)?;
        let step_index = next.step;
        let n_w = next.diag_weight(params.nw_mode);
        if n_w <= 0.0 {
            return Err(Error::PopulationDied { step: step_index });
        }
        match self.engaged_at {
            None if n_w >= params.target_population as f64 => {
                self.engaged_at = Some(step_index);
                self.n_w_prev = n_w;
            }
            Some(at) if (step_index - at) % params.shift_update_interval as u64 == 0 => {
                next.shift = update_shift(next.shift, params, n_w, self.n_w_prev, step_index)?;
                self.n_w_prev = n_w;
            }
            _ => {}
        }
        self.pop = next;

        let measurements = measure_all(&self.pop, &self.observables, self.model.n_sites(), &params.importance);
        if step_index > params.equilibration_steps {
            for (acc, m) in self.accumulators.iter_mut().zip(&measurements) {
                acc.push(*m);
            }
            self.shift_history.push(self.pop.shift);
            self.occupied_sum += self.pop.len() as f64;
        }
        let n_diag = self.pop.diag_weight(NwMode::AbsSum) as u64;
        Ok(Some(SimRecord {
            step: step_index,
            time: params.dt * T::from_u64(step_index).unwrap(),
            shift: self.pop.shift,
            n_diag,
            n_total: self.pop.total_weight(),
            observables: measurements,
        }))
    }

    pub fn finish(self) -> RunOutput<T> {
        let n_meas = self.shift_history.len();
        RunOutput {
            observables: self.observables,
            accumulators: self.accumulators,
            steps: self.pop.step,
            engaged_at: self.engaged_at,
            mean_occupied: if n_meas > 0 { self.occupied_sum / n_meas as f64 } else { 0.0 },
            final_n_diag: self.pop.diag_weight(NwMode::AbsSum) as u64,
            final_n_total: self.pop.total_weight(),
            shift_history: self.shift_history,
            runtime_secs: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Run equilibration and measurement, discarding per-step records.
pub fn run<T: Real>(model: &XyzModel<T>, params: &EngineParams<T>, observables: &[Observable]) -> Result<RunOutput<T>> {
    let mut sim = Simulation::new(model, params.clone(), observables)?;
    while sim.advance()?.is_some() {}
    Ok(sim.finish())
}

/// Deterministic expectation of one step: `rho + dt * L~ rho` on the
/// weighted amplitudes, computed from the same element rules.
pub fn euler_update<T: Real>(
    model: &XyzModel<T>,
    params: &EngineParams<T>,
    shift: T,
    cells: &[(ConfigPair, Complex<T>)],
) -> Vec<(ConfigPair, Complex<T>)> {
    let mut out: FxHashMap<u64, Complex<T>> = FxHashMap::default();
    for &(pair, amp) in cells {
        let d = diagonal_element(model, pair, shift);
        *out.entry(pair.key()).or_insert(Complex::new(T::zero(), T::zero())) += amp + d * params.dt * amp;
        for c in crate::liouvillian::connections(model, pair, &params.importance) {
            *out.entry(c.target.key()).or_insert(Complex::new(T::zero(), T::zero())) += c.amplitude * params.dt * amp;
        }
    }
    let mut v: Vec<_> = out.into_iter().map(|(k, a)| (ConfigPair::from_key(k), a)).collect();
    v.sort_by_key(|(p, _)| (p.row, p.col));
    v
}
