//! Noise injection and the information-retention estimators.
//!
//! A fault model perturbs a deterministic rule: each cell independently keeps
//! the rule's value with probability `1 - epsilon` and otherwise takes the
//! adversary's value. Deviations are independent across cells and steps, so
//! the probability of any `k` fixed deviations is at most `epsilon^k`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::dynamics::{step_deterministic, CellStreams, Trajectory, TransitionFunction, TransitionMatrix, step_probabilistic};
use crate::error::{LabError, Result};
use crate::rng::{MasterSeed, Stream};
use crate::state::{Cell, Configuration};

/// How a faulty cell picks its value.
#[derive(Clone)]
pub enum Adversary {
    /// Uniform over all states except the correct one. The most symmetric
    /// legal adversary; always produces a deviation.
    UniformWrong,
    /// Flip one uniformly random bit of the correct value.
    BitflipRandom,
    /// Always the given state. No deviation is recorded when it happens to
    /// equal the rule's value.
    StuckAt(u64),
    /// Arbitrary policy: `(correct value, stream) -> value`.
    Callback(Arc<dyn Fn(u64, &mut Stream) -> u64 + Send + Sync>),
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::UniformWrong => write!(f, "uniform-wrong"),
            Adversary::BitflipRandom => write!(f, "bitflip-random"),
            Adversary::StuckAt(s) => write!(f, "stuck-at({s:#x})"),
            Adversary::Callback(_) => write!(f, "callback"),
        }
    }
}

/// Perturbation parameters: deviation probability and adversary policy.
#[derive(Debug, Clone)]
pub struct FaultModel {
    epsilon: f64,
    capacity: u32,
    adversary: Adversary,
}

impl FaultModel {
    pub fn new(epsilon: f64, capacity: u32, adversary: Adversary) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(LabError::BadProbability(epsilon));
        }
        if let Adversary::StuckAt(s) = adversary {
            if capacity < 64 && s >> capacity != 0 {
                return Err(LabError::Parameter(format!(
                    "stuck-at state {s:#x} outside capacity {capacity}"
                )));
            }
        }
        Ok(FaultModel {
            epsilon,
            capacity,
            adversary,
        })
    }

    pub fn uniform_wrong(epsilon: f64, capacity: u32) -> Result<Self> {
        FaultModel::new(epsilon, capacity, Adversary::UniformWrong)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Draws this cell's value given the rule value. Returns the value; it
    /// differs from `correct` exactly when the cell deviates.
    pub fn sample(&self, correct: u64, stream: &mut Stream) -> u64 {
        if self.epsilon == 0.0 || stream.next_f64() >= self.epsilon {
            return correct;
        }
        match &self.adversary {
            Adversary::UniformWrong => {
                debug_assert!(self.capacity < 64);
                let n = 1u64 << self.capacity;
                if n == 1 {
                    return correct; // nowhere to deviate to
                }
                let r = stream.next_below(n - 1);
                if r >= correct {
                    r + 1
                } else {
                    r
                }
            }
            Adversary::BitflipRandom => {
                let bit = stream.next_below(self.capacity as u64);
                correct ^ (1u64 << bit)
            }
            Adversary::StuckAt(s) => *s,
            Adversary::Callback(f) => f(correct, stream),
        }
    }

    /// Capacity-1 shortcut used by the torus engine.
    pub fn sample_binary(&self, correct: u64, stream: &mut Stream) -> u64 {
        debug_assert!(self.capacity == 1);
        self.sample(correct, stream)
    }
}

/// One perturbed synchronous step. Returns the new configuration and the
/// sites that deviated from the rule.
pub fn perturbed_step(
    cfg: &Configuration,
    tr: &TransitionFunction,
    fm: &FaultModel,
    streams: &mut CellStreams,
) -> Result<(Configuration, Vec<usize>)> {
    let m = cfg.len() as i64;
    let mut out = Vec::with_capacity(cfg.len());
    let mut faults = Vec::new();
    for x in 0..m {
        let a = cfg.get(x - 1).state()?;
        let b = cfg.get(x).state()?;
        let c = cfg.get(x + 1).state()?;
        let correct = tr.eval(a, b, c)?;
        let v = fm.sample(correct, streams.cell(x as usize));
        if v != correct {
            faults.push(x as usize);
        }
        out.push(Cell::State(v));
    }
    Ok((Configuration::new(out)?, faults))
}

/// Runs `steps` perturbed steps, recording the trajectory and all deviations.
pub fn perturbed_run(
    cfg: &Configuration,
    tr: &TransitionFunction,
    fm: &FaultModel,
    seed: MasterSeed,
    trial: u64,
    steps: usize,
) -> Result<(Trajectory, DamageSet)> {
    let mut streams = CellStreams::new(seed, trial, cfg.len());
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(cfg.clone());
    let mut damage = DamageSet::default();
    for t in 0..steps {
        let (next, faults) = perturbed_step(frames.last().unwrap(), tr, fm, &mut streams)?;
        for x in faults {
            damage.points.insert((x, t + 1));
        }
        frames.push(next);
    }
    Ok((
        Trajectory {
            capacity: tr.capacity(),
            frames,
            switch_times: None,
            rng_seed: Some(trial),
        },
        damage,
    ))
}

/// Space-time points where a trajectory violates the rule: `(x, t)` is in
/// the set when frame `t` at `x` differs from the rule applied to the
/// neighborhood in frame `t - 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DamageSet {
    pub points: BTreeSet<(usize, usize)>,
}

impl DamageSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn contains(&self, x: usize, t: usize) -> bool {
        self.points.contains(&(x, t))
    }
}

/// Recomputes the damage set of a constant-period trajectory under `tr`.
pub fn damage_of(traj: &Trajectory, tr: &TransitionFunction) -> Result<DamageSet> {
    let mut damage = DamageSet::default();
    for t in 1..traj.frames.len() {
        let prev = &traj.frames[t - 1];
        let expect = step_deterministic(prev, tr)?;
        let got = &traj.frames[t];
        for x in 0..got.len() {
            if got.get(x as i64) != expect.get(x as i64) {
                damage.points.insert((x, t));
            }
        }
    }
    Ok(damage)
}

/// Two-sided Hoeffding confidence radius at level `delta` for `trials`
/// Bernoulli samples.
pub fn hoeffding_radius(delta: f64, trials: usize) -> f64 {
    ((2.0 / delta).ln() / (2.0 * trials as f64)).sqrt()
}

/// Confidence level used by every verdict in this module.
pub const CONFIDENCE_DELTA: f64 = 0.01;

/// Empirical field statistics at one probe point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStat {
    pub site: usize,
    pub time: usize,
    /// Fraction of trials with field value 0 resp. 1.
    pub p0_hat: f64,
    pub p1_hat: f64,
}

/// Retention statistics for one initial configuration.
#[derive(Debug, Clone)]
pub struct RetentionReport {
    pub field: String,
    /// The field value this start encodes everywhere at time 0.
    pub encoded: u64,
    pub probes: Vec<ProbeStat>,
    pub trials: usize,
    pub radius: f64,
}

impl RetentionReport {
    /// Smallest probability of still reading the encoded value.
    pub fn min_correct(&self) -> f64 {
        self.probes
            .iter()
            .map(|p| if self.encoded == 0 { p.p0_hat } else { p.p1_hat })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of a retention experiment for the two uniform starts.
#[derive(Debug, Clone)]
pub struct RetentionOutcome {
    pub reports: [RetentionReport; 2],
    /// True when both starts keep the encoded value with probability above
    /// `2/3 + radius` at every probe.
    pub retains: bool,
}

/// Number of evenly spaced probe sites and probe times.
pub const PROBE_POINTS: usize = 5;

fn probe_grid(extent: usize) -> Vec<usize> {
    // Five evenly spaced values in [extent/5, extent], deduplicated for tiny
    // extents.
    let mut out = Vec::new();
    for i in 1..=PROBE_POINTS {
        let v = (extent * i) / PROBE_POINTS;
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Measures whether the perturbed dynamics remembers field `field` of its
/// initial configuration at horizon `t_max`.
///
/// `xi0` and `xi1` must assign field values 0 resp. 1 everywhere. Probes are
/// a 5 x 5 evenly spaced site/time grid.
pub fn retention_experiment(
    tr: &TransitionFunction,
    fm: &FaultModel,
    fields: &crate::state::FieldMap,
    field: &str,
    xi0: &Configuration,
    xi1: &Configuration,
    t_max: usize,
    trials: usize,
    seed: MasterSeed,
) -> Result<RetentionOutcome> {
    let m = xi0.len();
    if xi1.len() != m {
        return Err(LabError::Parameter("starts must share the ring size".into()));
    }
    for (expect, xi) in [(0u64, xi0), (1u64, xi1)] {
        for x in 0..m {
            if fields.get(xi.get(x as i64).state()?, field)? != expect {
                return Err(LabError::Parameter(format!(
                    "start {expect} must carry field value {expect} everywhere"
                )));
            }
        }
    }
    let sites: Vec<usize> = probe_grid(m).into_iter().map(|v| v % m).collect();
    let times = probe_grid(t_max);
    let radius = hoeffding_radius(CONFIDENCE_DELTA, trials);

    let mut reports = Vec::with_capacity(2);
    for (encoded, xi) in [(0u64, xi0), (1u64, xi1)] {
        // counts[probe][value 0/1]
        let mut counts = vec![[0usize; 2]; sites.len() * times.len()];
        for trial in 0..trials {
            let run_seed = seed.derive(encoded);
            let mut streams = CellStreams::new(run_seed, trial as u64, m);
            let mut cfg = xi.clone();
            let mut t = 0usize;
            for (ti, &pt) in times.iter().enumerate() {
                while t < pt {
                    cfg = perturbed_step(&cfg, tr, fm, &mut streams)?.0;
                    t += 1;
                }
                for (si, &x) in sites.iter().enumerate() {
                    let v = fields.get(cfg.get(x as i64).state()?, field)?;
                    if v <= 1 {
                        counts[ti * sites.len() + si][v as usize] += 1;
                    }
                }
            }
        }
        let probes = times
            .iter()
            .enumerate()
            .flat_map(|(ti, &t)| {
                let counts = &counts;
                let sites = &sites;
                sites.iter().enumerate().map(move |(si, &x)| ProbeStat {
                    site: x,
                    time: t,
                    p0_hat: counts[ti * sites.len() + si][0] as f64 / trials as f64,
                    p1_hat: counts[ti * sites.len() + si][1] as f64 / trials as f64,
                })
            })
            .collect();
        reports.push(RetentionReport {
            field: field.to_string(),
            encoded,
            probes,
            trials,
            radius,
        });
    }
    let reports: [RetentionReport; 2] = [reports.remove(0), reports.remove(0)];
    let retains = reports.iter().all(|r| r.min_correct() > 2.0 / 3.0 + radius);
    Ok(RetentionOutcome { reports, retains })
}

/// Retention experiment on the two-dimensional majority-rule torus.
/// The remembered field is the whole one-bit cell state.
pub fn toom_retention_experiment(
    m: usize,
    fm: &FaultModel,
    t_max: usize,
    trials: usize,
    seed: MasterSeed,
) -> RetentionOutcome {
    use crate::toom::{ToomGrid, ToomRun};
    let sites: Vec<usize> = probe_grid(m * m).into_iter().map(|v| v % (m * m)).collect();
    let times = probe_grid(t_max);
    let radius = hoeffding_radius(CONFIDENCE_DELTA, trials);

    let mut reports = Vec::with_capacity(2);
    for encoded in [0u64, 1] {
        let mut counts = vec![[0usize; 2]; sites.len() * times.len()];
        for trial in 0..trials {
            let run_seed = seed.derive(encoded);
            let mut run = ToomRun::new(
                ToomGrid::filled(m, encoded as u8),
                fm.clone(),
                run_seed,
                trial as u64,
            );
            for (ti, &pt) in times.iter().enumerate() {
                while (run.step_count() as usize) < pt {
                    run.step();
                }
                for (si, &i) in sites.iter().enumerate() {
                    let v = run.grid().cells()[i];
                    counts[ti * sites.len() + si][v as usize] += 1;
                }
            }
        }
        let probes = times
            .iter()
            .enumerate()
            .flat_map(|(ti, &t)| {
                let counts = &counts;
                let sites = &sites;
                sites.iter().enumerate().map(move |(si, &x)| ProbeStat {
                    site: x,
                    time: t,
                    p0_hat: counts[ti * sites.len() + si][0] as f64 / trials as f64,
                    p1_hat: counts[ti * sites.len() + si][1] as f64 / trials as f64,
                })
            })
            .collect();
        reports.push(RetentionReport {
            field: "Cell".to_string(),
            encoded,
            probes,
            trials,
            radius,
        });
    }
    let reports: [RetentionReport; 2] = [reports.remove(0), reports.remove(0)];
    let retains = reports.iter().all(|r| r.min_correct() > 2.0 / 3.0 + radius);
    RetentionOutcome { reports, retains }
}

/// Window over which restoration is probed: `b_span` cells by `t_span` steps.
#[derive(Debug, Clone, Copy)]
pub struct ProbeWindow {
    pub b_span: usize,
    pub t_span: usize,
}

/// Result of a restoration probe.
#[derive(Debug, Clone)]
pub struct RestorationEstimate {
    pub probability: f64,
    pub conditioned_anchors: usize,
    pub radius: f64,
}

/// Estimates the probability that damage intersects an anchored window
/// `(x, t) + V`, conditioned on damage-freeness in the `2V`-widened region
/// strictly before `t`. For an independent epsilon-perturbation this comes
/// out at most `epsilon * |V|` plus sampling error.
pub fn restoration_estimate(
    tr: &TransitionFunction,
    fm: &FaultModel,
    window: ProbeWindow,
    ring: usize,
    horizon: usize,
    trials: usize,
    seed: MasterSeed,
) -> Result<RestorationEstimate> {
    if window.b_span == 0 || window.t_span == 0 {
        return Err(LabError::Parameter("degenerate probe window".into()));
    }
    if horizon < 3 * window.t_span {
        return Err(LabError::Parameter(
            "horizon too small for the probe window".into(),
        ));
    }
    let cfg = Configuration::uniform(0, ring)?;
    let anchors_per_trial = 8;
    let mut hit = 0usize;
    let mut conditioned = 0usize;
    for trial in 0..trials {
        let (_, damage) = perturbed_run(&cfg, tr, fm, seed, trial as u64, horizon)?;
        let mut anchor_stream = seed.derive(0xa11c).stream(trial as u64, 0);
        for _ in 0..anchors_per_trial {
            let x = anchor_stream.next_below(ring as u64) as usize;
            let t = window.t_span
                + anchor_stream.next_below((horizon - 2 * window.t_span) as u64) as usize;
            // Condition: no damage in the widened earlier region.
            let half = window.b_span / 2;
            let early_clean = damage.points.iter().all(|&(dx, dt)| {
                if dt >= t || dt + window.t_span < t {
                    return true;
                }
                // Horizontal band of width 2 * b_span centered on the window.
                let rel = (dx + ring - (x + ring - half) % ring) % ring;
                rel >= 2 * window.b_span
            });
            if !early_clean {
                continue;
            }
            conditioned += 1;
            let in_window = damage.points.iter().any(|&(dx, dt)| {
                dt >= t
                    && dt < t + window.t_span
                    && (dx + ring - x % ring) % ring < window.b_span
            });
            if in_window {
                hit += 1;
            }
        }
    }
    if conditioned == 0 {
        return Err(LabError::Parameter(
            "no anchor satisfied the conditioning event".into(),
        ));
    }
    Ok(RestorationEstimate {
        probability: hit as f64 / conditioned as f64,
        conditioned_anchors: conditioned,
        radius: hoeffding_radius(CONFIDENCE_DELTA, conditioned),
    })
}

/// Dynamics whose relaxation is being estimated.
pub enum RelaxDynamics<'a> {
    Matrix(&'a TransitionMatrix),
    Perturbed(&'a TransitionFunction, &'a FaultModel),
}

/// Relaxation estimate: the distance curve and the first time it undercuts
/// the threshold.
#[derive(Debug, Clone)]
pub struct RelaxationEstimate {
    /// `d_hat(t)` for `t = 0..=horizon`, total-variation style in `[0, 2]`.
    pub curve: Vec<f64>,
    /// First `t` with `d_hat(t) < delta`; `None` means `r > horizon`.
    pub r_hat: Option<usize>,
    pub window: usize,
    pub trials: usize,
}

/// Estimates the relaxation time of a noisy ring: the first time at which
/// the distributions of an `n`-cell window, started from the two extreme
/// uniform configurations, come within `delta` in L1 distance.
pub fn relaxation_estimate(
    dynamics: RelaxDynamics<'_>,
    ring: usize,
    window: usize,
    delta: f64,
    horizon: usize,
    trials: usize,
    seed: MasterSeed,
) -> Result<RelaxationEstimate> {
    let capacity = match &dynamics {
        RelaxDynamics::Matrix(p) => p.capacity(),
        RelaxDynamics::Perturbed(tr, _) => tr.capacity(),
    };
    if window == 0 || window > 3 || window > (ring.saturating_sub(1)) / 2 {
        return Err(LabError::Parameter(format!(
            "window {window} must be in [1, 3] and at most (m-1)/2"
        )));
    }
    let support_bits = capacity as usize * window;
    if support_bits > 16 {
        return Err(LabError::Parameter(
            "window support too large to enumerate".into(),
        ));
    }
    let support = 1usize << support_bits;
    let mask = (1u64 << capacity) - 1;
    let extremes = [0u64, mask];

    // counts[start][t][window value]
    let mut counts = vec![vec![vec![0u32; support]; horizon + 1]; 2];
    for (si, &s0) in extremes.iter().enumerate() {
        for trial in 0..trials {
            let run_seed = seed.derive(si as u64);
            let mut streams = CellStreams::new(run_seed, trial as u64, ring);
            let mut cfg = Configuration::uniform(s0, ring)?;
            for t in 0..=horizon {
                let mut w = 0u64;
                for j in 0..window {
                    w |= cfg.get(j as i64).state()? << (j as u32 * capacity);
                }
                counts[si][t][w as usize] += 1;
                if t < horizon {
                    cfg = match &dynamics {
                        RelaxDynamics::Matrix(p) => step_probabilistic(&cfg, p, &mut streams)?,
                        RelaxDynamics::Perturbed(tr, fm) => {
                            perturbed_step(&cfg, tr, fm, &mut streams)?.0
                        }
                    };
                }
            }
        }
    }
    let curve: Vec<f64> = (0..=horizon)
        .map(|t| {
            (0..support)
                .map(|w| {
                    (counts[0][t][w] as f64 - counts[1][t][w] as f64).abs() / trials as f64
                })
                .sum()
        })
        .collect();
    let r_hat = curve.iter().position(|&d| d < delta);
    Ok(RelaxationEstimate {
        curve,
        r_hat,
        window,
        trials,
    })
}
