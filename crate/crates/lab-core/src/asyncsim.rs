//! Totally asynchronous runs, the marching-soldiers lift, invariant-history
//! verification, and variable-period simulation with decoding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::dynamics::{Trajectory, TransitionFunction};
use crate::error::{LabError, Result};
use crate::rng::MasterSeed;
use crate::state::{amod, Cell, Configuration, FieldMap};

/// Which sites update at each step of an asynchronous run.
#[derive(Debug, Clone)]
pub enum UpdateSchedule {
    /// Every site, every step (synchronous).
    All,
    /// Each site independently with probability `p` each step.
    RandomP { p: f64, seed: MasterSeed },
    /// Explicit per-step update sets.
    Explicit(Vec<Vec<usize>>),
}

impl UpdateSchedule {
    fn set_at(&self, t: usize, ring: usize) -> Vec<usize> {
        match self {
            UpdateSchedule::All => (0..ring).collect(),
            UpdateSchedule::RandomP { p, seed } => {
                let mut out = Vec::new();
                for x in 0..ring {
                    let mut s = seed.stream(t as u64, x as u64);
                    if s.next_f64() < *p {
                        out.push(x);
                    }
                }
                out
            }
            UpdateSchedule::Explicit(sets) => {
                sets.get(t).cloned().unwrap_or_default()
            }
        }
    }
}

/// Effective ages `tau(x, t)`: the number of actual state changes of each
/// cell up to each time.
#[derive(Debug, Clone)]
pub struct EffectiveAgeTable {
    /// `ages[t][x]`, with `ages[0] = 0`.
    pub ages: Vec<Vec<u32>>,
}

impl EffectiveAgeTable {
    pub fn get(&self, x: usize, t: usize) -> u32 {
        self.ages[t][x]
    }
}

/// Field layout of a marching lift: `Cur` and `Prev` of the simulated width
/// plus an age counter mod `U`.
pub fn marching_fields(inner_capacity: u32, period: u32) -> Result<FieldMap> {
    let age_bits = 32 - (period - 1).leading_zeros();
    FieldMap::packed(&[
        ("Cur", inner_capacity),
        ("Prev", inner_capacity),
        ("Age", age_bits.max(1)),
    ])
}

/// The marching-soldiers lift of `tr2`: a commutative rule whose `Cur` track
/// replays `CA(tr2)` under any update order.
///
/// If some neighbor lags behind modulo `U` the cell does nothing. Otherwise
/// it reads each neighbor's `Cur` if that neighbor has equal age and its
/// `Prev` if the neighbor is one step ahead, applies `tr2`, saves its own
/// `Cur` into `Prev` and advances its age.
pub fn lift_marching(tr2: &TransitionFunction, period: u32) -> Result<TransitionFunction> {
    if period < 3 {
        return Err(LabError::Parameter(
            "marching lift needs U >= 3 (amod requires modulus > 2)".into(),
        ));
    }
    let fields = marching_fields(tr2.capacity(), period)?;
    let inner = tr2.clone();
    let fm = fields.clone();
    let u = period as i64;
    let name = format!("march[U={period}]");
    let lifted = TransitionFunction::from_fallible_fn(
        &name,
        fields.capacity(),
        move |a, b, c| {
            let age0 = fm.get(b, "Age")? as i64;
            for s in [a, c] {
                let age = fm.get(s, "Age")? as i64;
                if amod(age - age0, u) < 0 {
                    return Ok(b); // a neighbor lags: no effect
                }
            }
            let pick = |s: u64| -> Result<u64> {
                if fm.get(s, "Age")? as i64 == age0 {
                    fm.get(s, "Cur")
                } else {
                    fm.get(s, "Prev")
                }
            };
            let r_m1 = pick(a)?;
            let r_0 = fm.get(b, "Cur")?;
            let r_p1 = pick(c)?;
            let mut out = fm.set(b, "Prev", r_0)?;
            out = fm.set(out, "Cur", inner.eval(r_m1, r_0, r_p1)?)?;
            out = fm.set(out, "Age", ((age0 + 1) % u) as u64)?;
            Ok(out)
        },
    )?;
    // Valid packed states: any Cur/Prev, Age < U.
    let cap2 = tr2.capacity();
    let mut domain = Vec::new();
    for cur in 0..(1u64 << cap2) {
        for prev in 0..(1u64 << cap2) {
            for age in 0..period as u64 {
                let mut s = fields.set(0, "Cur", cur)?;
                s = fields.set(s, "Prev", prev)?;
                s = fields.set(s, "Age", age)?;
                domain.push(s);
            }
        }
    }
    Ok(lifted.with_domain(domain))
}

/// Encodes a configuration of the simulated automaton into the lift's
/// initial configuration: `Cur` carries the state, all other fields zero.
pub fn marching_encode(
    xi2: &Configuration,
    inner_capacity: u32,
    period: u32,
) -> Result<Configuration> {
    let fields = marching_fields(inner_capacity, period)?;
    let mut cells = Vec::with_capacity(xi2.len());
    for x in 0..xi2.len() {
        let s = fields.set(0, "Cur", xi2.get(x as i64).state()?)?;
        cells.push(Cell::State(s));
    }
    Configuration::new(cells)
}

/// Commutativity verdict with a witness on failure.
#[derive(Debug, Clone)]
pub enum CommutVerdict {
    Commutative,
    Witness {
        config: Configuration,
        x: usize,
        y: usize,
    },
}

impl CommutVerdict {
    pub fn is_commutative(&self) -> bool {
        matches!(self, CommutVerdict::Commutative)
    }
}

pub enum CommutMode {
    /// Every configuration on a ring of the given size.
    Exhaustive { ring: usize },
    /// Random configurations on the given ring.
    Sampled {
        ring: usize,
        attempts: usize,
        seed: MasterSeed,
    },
}

/// Budget guard for exhaustive commutativity checks.
const COMMUT_MAX_CONFIGS: u128 = 1 << 22;

fn apply_at(cfg: &Configuration, tr: &TransitionFunction, xs: &[usize]) -> Result<Configuration> {
    let mut out = cfg.clone();
    for &x in xs {
        let a = cfg.get(x as i64 - 1).state()?;
        let b = cfg.get(x as i64).state()?;
        let c = cfg.get(x as i64 + 1).state()?;
        out.set(x as i64, Cell::State(tr.eval(a, b, c)?));
    }
    Ok(out)
}

fn free_sites(cfg: &Configuration, tr: &TransitionFunction) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for x in 0..cfg.len() {
        let a = cfg.get(x as i64 - 1).state()?;
        let b = cfg.get(x as i64).state()?;
        let c = cfg.get(x as i64 + 1).state()?;
        if tr.eval(a, b, c)? != b {
            out.push(x);
        }
    }
    Ok(out)
}

fn check_one(
    cfg: &Configuration,
    tr: &TransitionFunction,
) -> Result<Option<(usize, usize)>> {
    let free = free_sites(cfg, tr)?;
    for (i, &x) in free.iter().enumerate() {
        for &y in &free[i + 1..] {
            let xy = apply_at(&apply_at(cfg, tr, &[x])?, tr, &[y])?;
            let yx = apply_at(&apply_at(cfg, tr, &[y])?, tr, &[x])?;
            if xy != yx {
                return Ok(Some((x, y)));
            }
        }
    }
    Ok(None)
}

/// Checks `tr(xi, {x}, {y}) = tr(xi, {y}, {x})` over configurations and
/// pairs of distinct free sites.
pub fn is_commutative(tr: &TransitionFunction, mode: CommutMode) -> Result<CommutVerdict> {
    match mode {
        CommutMode::Exhaustive { ring } => {
            let states = tr.domain_states();
            let total = (states.len() as u128).pow(ring as u32);
            if total > COMMUT_MAX_CONFIGS {
                return Err(LabError::Parameter(format!(
                    "exhaustive commutativity space {total} exceeds budget"
                )));
            }
            let mut index = vec![0usize; ring];
            loop {
                let cfg = Configuration::from_states(
                    &index.iter().map(|&i| states[i]).collect::<Vec<_>>(),
                )?;
                if let Some((x, y)) = check_one(&cfg, tr)? {
                    return Ok(CommutVerdict::Witness { config: cfg, x, y });
                }
                // Odometer increment.
                let mut k = 0;
                loop {
                    if k == ring {
                        return Ok(CommutVerdict::Commutative);
                    }
                    index[k] += 1;
                    if index[k] < states.len() {
                        break;
                    }
                    index[k] = 0;
                    k += 1;
                }
            }
        }
        CommutMode::Sampled {
            ring,
            attempts,
            seed,
        } => {
            let states = tr.domain_states();
            for trial in 0..attempts {
                let mut s = seed.stream(trial as u64, 0);
                let cfg = Configuration::from_states(
                    &(0..ring)
                        .map(|_| states[s.next_below(states.len() as u64) as usize])
                        .collect::<Vec<_>>(),
                )?;
                if let Some((x, y)) = check_one(&cfg, tr)? {
                    return Ok(CommutVerdict::Witness { config: cfg, x, y });
                }
            }
            Ok(CommutVerdict::Commutative)
        }
    }
}

/// Runs the totally asynchronous automaton: at step `t` exactly the sites in
/// the schedule's set apply the rule. Returns the trajectory and the
/// effective-age table accumulated from actual state changes.
pub fn run_aca(
    tr: &TransitionFunction,
    xi: &Configuration,
    schedule: &UpdateSchedule,
    steps: usize,
) -> Result<(Trajectory, EffectiveAgeTable)> {
    let ring = xi.len();
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(xi.clone());
    let mut ages = Vec::with_capacity(steps + 1);
    ages.push(vec![0u32; ring]);
    for t in 0..steps {
        let set = schedule.set_at(t, ring);
        let cur = frames.last().unwrap();
        let next = apply_at(cur, tr, &set)?;
        let mut age = ages.last().unwrap().clone();
        for x in 0..ring {
            if next.get(x as i64) != cur.get(x as i64) {
                age[x] += 1;
            }
        }
        frames.push(next);
        ages.push(age);
    }
    Ok((
        Trajectory {
            capacity: tr.capacity(),
            frames,
            switch_times: None,
            rng_seed: None,
        },
        EffectiveAgeTable { ages },
    ))
}

/// Invariant-history verdict.
#[derive(Debug, Clone)]
pub enum HistoryVerdict {
    Invariant,
    Violated {
        schedule_index: usize,
        x: usize,
        t: usize,
    },
}

impl HistoryVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, HistoryVerdict::Invariant)
    }
}

/// Verifies `eta(x, t) = zeta(x, tau(x, t))` against the synchronous
/// reference run, for every schedule.
///
/// The reference `zeta(x, .)` is the synchronous orbit of each cell with
/// consecutive repetitions removed; an effective age beyond the reference
/// sequence also counts as a violation.
pub fn check_invariant_histories(
    tr: &TransitionFunction,
    xi: &Configuration,
    schedules: &[UpdateSchedule],
    steps: usize,
) -> Result<HistoryVerdict> {
    let ring = xi.len();
    let sync = run_aca(tr, xi, &UpdateSchedule::All, steps)?.0;
    // zeta[x][u]: the u-th distinct value of cell x in the synchronous run.
    let mut zeta: Vec<Vec<Cell>> = vec![Vec::new(); ring];
    for (x, z) in zeta.iter_mut().enumerate() {
        for frame in &sync.frames {
            let v = frame.get(x as i64);
            if z.last() != Some(&v) {
                z.push(v);
            }
        }
    }
    for (si, schedule) in schedules.iter().enumerate() {
        let (traj, tau) = run_aca(tr, xi, schedule, steps)?;
        for t in 0..=steps {
            for x in 0..ring {
                let u = tau.get(x, t) as usize;
                if u >= zeta[x].len() || traj.frames[t].get(x as i64) != zeta[x][u] {
                    return Ok(HistoryVerdict::Violated {
                        schedule_index: si,
                        x,
                        t,
                    });
                }
            }
        }
    }
    Ok(HistoryVerdict::Invariant)
}

/// Dwell-time sampler for variable-period runs.
#[derive(Debug, Clone)]
pub enum DwellSampler {
    /// Uniform on `[lower, upper]`.
    Uniform,
    /// Exponential with the given rate, for continuous-time style
    /// experiments. Ignores the bounds.
    Exponential { rate: f64 },
}

/// Dwell period model with bounds `0 < lower <= upper`.
#[derive(Debug, Clone)]
pub struct DwellModel {
    pub lower: f64,
    pub upper: f64,
    pub sampler: DwellSampler,
}

impl DwellModel {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper) {
            return Err(LabError::Parameter(format!(
                "dwell bounds must satisfy 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(DwellModel {
            lower,
            upper,
            sampler: DwellSampler::Uniform,
        })
    }

    fn sample(&self, stream: &mut crate::rng::Stream) -> f64 {
        match self.sampler {
            DwellSampler::Uniform => stream.next_range_f64(self.lower, self.upper),
            DwellSampler::Exponential { rate } => stream.next_exp(rate),
        }
    }
}

/// Result of a variable-period run of a marching lift.
#[derive(Debug, Clone)]
pub struct VariablePeriodRun {
    /// Per-cell wake-up epochs; consecutive gaps are the sampled dwell
    /// periods and lie within the dwell bounds.
    pub wakeups: Vec<Vec<f64>>,
    /// Per-cell effective switching times (wake-ups whose update changed
    /// the state).
    pub switch_times: Vec<Vec<f64>>,
    /// Decoded simulated trajectory: `decoded[s]` is the configuration after
    /// `s` simulated steps. Complete up to the smallest per-cell effective
    /// age reached within the horizon.
    pub decoded: Vec<Configuration>,
    /// True when the horizon ended before `want_steps` were decoded.
    pub partial: bool,
}

#[derive(PartialEq)]
struct Event {
    time: f64,
    cell: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, cell): ties broken by cell index.
        other
            .time
            .total_cmp(&self.time)
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event-driven run of a marching lift: each cell switches at its own
/// sampled epochs, observing the latest committed states of its neighbors.
/// The decoded value after `s` simulated steps is the `Cur` field at the
/// cell's `s`-th effective switch.
pub fn run_variable_period(
    tr2: &TransitionFunction,
    xi2: &Configuration,
    period: u32,
    dwell: &DwellModel,
    want_steps: usize,
    horizon: f64,
    seed: MasterSeed,
) -> Result<VariablePeriodRun> {
    let tr1 = lift_marching(tr2, period)?;
    let fields = marching_fields(tr2.capacity(), period)?;
    let ring = xi2.len();
    let mut cfg = marching_encode(xi2, tr2.capacity(), period)?;

    let mut streams: Vec<_> = (0..ring).map(|x| seed.stream(0, x as u64)).collect();
    let mut heap = BinaryHeap::new();
    let mut wakeups: Vec<Vec<f64>> = vec![Vec::new(); ring];
    let mut switch_times: Vec<Vec<f64>> = vec![Vec::new(); ring];
    // decoded_states[x][s]: Cur value of cell x after s effective updates.
    let mut decoded_states: Vec<Vec<u64>> = Vec::with_capacity(ring);
    for x in 0..ring {
        decoded_states.push(vec![xi2.get(x as i64).state()?]);
    }

    for x in 0..ring {
        let t = dwell.sample(&mut streams[x]);
        heap.push(Event { time: t, cell: x });
    }
    while let Some(Event { time, cell }) = heap.pop() {
        if time > horizon {
            break;
        }
        wakeups[cell].push(time);
        let a = cfg.get(cell as i64 - 1).state()?;
        let b = cfg.get(cell as i64).state()?;
        let c = cfg.get(cell as i64 + 1).state()?;
        let next = tr1.eval(a, b, c)?;
        if next != b {
            // Effective switch: one simulated step for this cell.
            cfg.set(cell as i64, Cell::State(next));
            switch_times[cell].push(time);
            decoded_states[cell].push(fields.get(next, "Cur")?);
        }
        let dt = dwell.sample(&mut streams[cell]);
        heap.push(Event {
            time: time + dt,
            cell,
        });
    }

    let reached = decoded_states
        .iter()
        .map(|v| v.len() - 1)
        .min()
        .unwrap_or(0);
    let steps = reached.min(want_steps);
    let mut decoded = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        decoded.push(Configuration::from_states(
            &(0..ring).map(|x| decoded_states[x][s]).collect::<Vec<_>>(),
        )?);
    }
    Ok(VariablePeriodRun {
        wakeups,
        switch_times,
        decoded,
        partial: reached < want_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;

    #[test]
    fn lift_rejects_small_period() {
        let tr = TransitionFunction::xor(1);
        assert!(lift_marching(&tr, 2).is_err());
    }

    #[test]
    fn synchronous_lift_replays_inner_rule() {
        let tr2 = TransitionFunction::xor(1);
        let lifted = lift_marching(&tr2, 4).unwrap();
        let fields = marching_fields(1, 4).unwrap();
        let xi2 = Configuration::from_states(&[1, 0, 0, 1, 1, 0]).unwrap();
        let xi1 = marching_encode(&xi2, 1, 4).unwrap();
        let t1 = evolve(&xi1, &lifted, 8).unwrap();
        let t2 = evolve(&xi2, &tr2, 8).unwrap();
        for t in 0..=8 {
            for x in 0..6 {
                let cur = fields
                    .get(t1.frames[t].get(x as i64).state().unwrap(), "Cur")
                    .unwrap();
                assert_eq!(cur, t2.frames[t].get(x as i64).state().unwrap());
                // Age is uniform under the synchronous schedule.
                let age = fields
                    .get(t1.frames[t].get(x as i64).state().unwrap(), "Age")
                    .unwrap();
                assert_eq!(age, (t % 4) as u64);
            }
        }
    }

    #[test]
    fn neighbor_one_ahead_uses_prev() {
        // Cell 1 is one step ahead; its Prev must be consulted by cell 0.
        let tr2 = TransitionFunction::from_fn("sum", 1, |a, b, c| (a + b + c) & 1).unwrap();
        let lifted = lift_marching(&tr2, 4).unwrap();
        let fields = marching_fields(1, 4).unwrap();
        let mk = |cur: u64, prev: u64, age: u64| {
            let mut s = fields.set(0, "Cur", cur).unwrap();
            s = fields.set(s, "Prev", prev).unwrap();
            fields.set(s, "Age", age).unwrap()
        };
        // Neighbors at age 1 with Prev p; center at age 0.
        let left = mk(0, 1, 1);
        let center = mk(1, 0, 0);
        let right = mk(0, 0, 1);
        let out = lifted.eval(left, center, right).unwrap();
        // r(-1) = left.Prev = 1, r(0) = 1, r(1) = right.Prev = 0 -> sum = 0.
        assert_eq!(fields.get(out, "Cur").unwrap(), 0);
        assert_eq!(fields.get(out, "Prev").unwrap(), 1);
        assert_eq!(fields.get(out, "Age").unwrap(), 1);
    }

    #[test]
    fn lagging_neighbor_freezes_cell() {
        let tr2 = TransitionFunction::xor(1);
        let lifted = lift_marching(&tr2, 4).unwrap();
        let fields = marching_fields(1, 4).unwrap();
        let mk = |age: u64| fields.set(fields.set(0, "Cur", 1).unwrap(), "Age", age).unwrap();
        // Center at age 1, left neighbor still at age 0: (0 - 1) amod 4 < 0.
        let out = lifted.eval(mk(0), mk(1), mk(1)).unwrap();
        assert_eq!(out, mk(1));
    }

    #[test]
    fn identity_lift_keeps_cur_zero() {
        let tr2 = TransitionFunction::identity(1);
        let lifted = lift_marching(&tr2, 3).unwrap();
        let fields = marching_fields(1, 3).unwrap();
        let xi2 = Configuration::uniform(0, 5).unwrap();
        let xi1 = marching_encode(&xi2, 1, 3).unwrap();
        let schedule = UpdateSchedule::RandomP {
            p: 0.5,
            seed: MasterSeed(40),
        };
        let (traj, _) = run_aca(&lifted, &xi1, &schedule, 50).unwrap();
        for frame in &traj.frames {
            for x in 0..5 {
                let s = frame.get(x).state().unwrap();
                assert_eq!(fields.get(s, "Cur").unwrap(), 0);
            }
        }
    }

    #[test]
    fn marching_lift_is_commutative_exhaustively() {
        let tr2 = TransitionFunction::xor(1);
        let lifted = lift_marching(&tr2, 3).unwrap();
        let verdict = is_commutative(&lifted, CommutMode::Exhaustive { ring: 5 }).unwrap();
        assert!(verdict.is_commutative());
    }

    #[test]
    fn xor_rule_is_not_commutative() {
        let tr = TransitionFunction::xor(1);
        let verdict = is_commutative(
            &tr,
            CommutMode::Sampled {
                ring: 6,
                attempts: 200,
                seed: MasterSeed(41),
            },
        )
        .unwrap();
        assert!(!verdict.is_commutative());
    }

    #[test]
    fn identity_rule_commutative_vacuously() {
        let tr = TransitionFunction::identity(1);
        let verdict = is_commutative(&tr, CommutMode::Exhaustive { ring: 4 }).unwrap();
        assert!(verdict.is_commutative());
    }

    #[test]
    fn run_aca_all_equals_evolve() {
        let tr = TransitionFunction::xor(1);
        let xi = Configuration::from_states(&[1, 0, 1, 1]).unwrap();
        let (traj, tau) = run_aca(&tr, &xi, &UpdateSchedule::All, 6).unwrap();
        let reference = evolve(&xi, &tr, 6).unwrap();
        assert_eq!(traj.frames, reference.frames);
        // tau counts actual changes.
        for x in 0..4usize {
            let mut changes = 0;
            for t in 0..6 {
                if reference.frames[t + 1].get(x as i64) != reference.frames[t].get(x as i64) {
                    changes += 1;
                }
                assert_eq!(tau.get(x, t + 1), changes);
            }
        }
    }

    #[test]
    fn empty_schedule_freezes() {
        let tr = TransitionFunction::xor(1);
        let xi = Configuration::from_states(&[1, 0, 1, 1]).unwrap();
        let schedule = UpdateSchedule::Explicit(vec![vec![]; 5]);
        let (traj, tau) = run_aca(&tr, &xi, &schedule, 5).unwrap();
        for frame in &traj.frames {
            assert_eq!(*frame, xi);
        }
        assert!(tau.ages.iter().all(|row| row.iter().all(|&a| a == 0)));
    }

    #[test]
    fn marching_effective_age_is_lipschitz() {
        let tr2 = TransitionFunction::xor(1);
        let lifted = lift_marching(&tr2, 3).unwrap();
        let xi2 = Configuration::from_states(&[1, 0, 0, 1, 0, 1, 1, 0]).unwrap();
        let xi1 = marching_encode(&xi2, 1, 3).unwrap();
        for trial in 0..20u64 {
            let schedule = UpdateSchedule::RandomP {
                p: 0.4,
                seed: MasterSeed(42).derive(trial),
            };
            let (_, tau) = run_aca(&lifted, &xi1, &schedule, 60).unwrap();
            for t in 0..=60 {
                for x in 0..8usize {
                    let a = tau.get(x, t) as i64;
                    let b = tau.get((x + 1) % 8, t) as i64;
                    assert!((a - b).abs() <= 1, "lipschitz broken at x={x} t={t}");
                }
            }
        }
    }

    #[test]
    fn invariant_histories_hold_for_marching_lift() {
        let seed = MasterSeed(43);
        let tr2 = TransitionFunction::majority(1);
        let lifted = lift_marching(&tr2, 3).unwrap();
        let xi2 = Configuration::from_states(&[1, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        let xi1 = marching_encode(&xi2, 1, 3).unwrap();
        let schedules: Vec<UpdateSchedule> = (0..50)
            .map(|i| UpdateSchedule::RandomP {
                p: 0.3 + 0.4 * (i as f64 / 50.0),
                seed: seed.derive(i),
            })
            .collect();
        let verdict = check_invariant_histories(&lifted, &xi1, &schedules, 80).unwrap();
        assert!(verdict.holds());
    }

    #[test]
    fn non_commutative_rule_violates_histories() {
        let tr = TransitionFunction::xor(1);
        let xi = Configuration::from_states(&[1, 0, 0, 0, 1, 0]).unwrap();
        let schedules: Vec<UpdateSchedule> = (0..100)
            .map(|i| UpdateSchedule::RandomP {
                p: 0.5,
                seed: MasterSeed(44).derive(i),
            })
            .collect();
        let verdict = check_invariant_histories(&tr, &xi, &schedules, 40).unwrap();
        assert!(!verdict.holds());
    }

    #[test]
    fn variable_period_decodes_inner_rule() {
        let tr2 = TransitionFunction::xor(1);
        let xi2 = Configuration::from_states(&[1, 0, 0, 1, 1, 0, 1, 0]).unwrap();
        let dwell = DwellModel::uniform(0.5, 1.0).unwrap();
        let reference = evolve(&xi2, &tr2, 30).unwrap();
        for s in 0..10u64 {
            let run = run_variable_period(
                &tr2,
                &xi2,
                4,
                &dwell,
                30,
                60.0,
                MasterSeed(45).derive(s),
            )
            .unwrap();
            assert!(!run.partial);
            for (step, frame) in run.decoded.iter().enumerate() {
                assert_eq!(frame, &reference.frames[step], "seed {s} step {step}");
            }
        }
    }

    #[test]
    fn lockstep_dwell_is_synchronous() {
        let tr2 = TransitionFunction::majority(1);
        let xi2 = Configuration::from_states(&[1, 0, 1, 0, 1]).unwrap();
        let dwell = DwellModel::uniform(1.0, 1.0).unwrap();
        let run =
            run_variable_period(&tr2, &xi2, 3, &dwell, 10, 20.0, MasterSeed(46)).unwrap();
        let reference = evolve(&xi2, &tr2, 10).unwrap();
        assert!(!run.partial);
        for (step, frame) in run.decoded.iter().enumerate() {
            assert_eq!(frame, &reference.frames[step]);
        }
    }

    #[test]
    fn dwell_and_switch_time_invariants() {
        let tr2 = TransitionFunction::xor(1);
        let xi2 = Configuration::from_states(&[1, 0, 0, 1, 1, 0]).unwrap();
        let dwell = DwellModel::uniform(0.5, 1.0).unwrap();
        let run =
            run_variable_period(&tr2, &xi2, 4, &dwell, 20, 40.0, MasterSeed(48)).unwrap();
        for x in 0..6 {
            let w = &run.wakeups[x];
            assert!(w.windows(2).all(|p| p[0] < p[1]));
            // First wake-up and every gap is a sampled dwell in bounds.
            assert!((0.5..=1.0).contains(&w[0]));
            for gap in w.windows(2).map(|p| p[1] - p[0]) {
                assert!((0.5 - 1e-9..=1.0 + 1e-9).contains(&gap), "gap {gap}");
            }
            let s = &run.switch_times[x];
            assert!(s.windows(2).all(|p| p[0] < p[1]));
            // Every switch is one of the wake-ups.
            let mut wi = 0;
            for &t in s {
                while wi < w.len() && (w[wi] - t).abs() > 1e-12 {
                    wi += 1;
                }
                assert!(wi < w.len(), "switch at {t} is not a wake-up");
            }
        }
    }

    #[test]
    fn single_cell_ring_orbit() {
        let tr2 = TransitionFunction::from_fn("inc", 2, |_, b, _| (b + 1) & 3).unwrap();
        let xi2 = Configuration::from_states(&[1]).unwrap();
        let dwell = DwellModel::uniform(0.5, 1.5).unwrap();
        let run =
            run_variable_period(&tr2, &xi2, 4, &dwell, 8, 30.0, MasterSeed(47)).unwrap();
        assert!(!run.partial);
        for (step, frame) in run.decoded.iter().enumerate() {
            assert_eq!(
                frame.get(0).state().unwrap(),
                (1 + step as u64) & 3,
                "step {step}"
            );
        }
    }

    #[test]
    fn marching_state_changes_every_synchronous_step() {
        let tr2 = TransitionFunction::identity(1);
        let lifted = lift_marching(&tr2, 3).unwrap();
        let xi1 = marching_encode(&Configuration::uniform(0, 4).unwrap(), 1, 3).unwrap();
        let traj = evolve(&xi1, &lifted, 9).unwrap();
        for t in 0..9 {
            for x in 0..4 {
                assert_ne!(
                    traj.frames[t].get(x),
                    traj.frames[t + 1].get(x),
                    "packed state must change every step"
                );
            }
        }
    }
}
