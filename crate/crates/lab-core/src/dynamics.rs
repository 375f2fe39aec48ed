//! Deterministic and probabilistic nearest-neighbor dynamics on rings.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::rng::{MasterSeed, Stream};
use crate::state::{Alphabet, Cell, Configuration};

/// Largest total triple width (3 * capacity) for table-backed rules.
pub const TABLE_TRIPLE_BITS: u32 = 12;

type TrFn = dyn Fn(u64, u64, u64) -> Result<u64> + Send + Sync;

#[derive(Clone)]
enum Backing {
    /// Dense table indexed by the packed triple `a | b << cap | c << 2cap`.
    Table(Arc<Vec<Option<u64>>>),
    /// Built-in or generated rule.
    Func { name: String, f: Arc<TrFn> },
}

/// A transition function `tr: S^3 -> S` on a bit-string alphabet.
///
/// Most rules are total functions backed by a closure; explicit tables are
/// capped at `2^12` triple entries. An optional state-domain list restricts
/// enumeration (for rules whose packed encoding has unused patterns, such as
/// an age counter that never reaches its power-of-two bound).
#[derive(Clone)]
pub struct TransitionFunction {
    capacity: u32,
    backing: Backing,
    domain: Option<Arc<Vec<u64>>>,
}

impl std::fmt::Debug for TransitionFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.backing {
            Backing::Table(_) => write!(f, "TransitionFunction(table, cap={})", self.capacity),
            Backing::Func { name, .. } => {
                write!(f, "TransitionFunction({name}, cap={})", self.capacity)
            }
        }
    }
}

impl TransitionFunction {
    pub fn from_fn<F>(name: &str, capacity: u32, f: F) -> Result<Self>
    where
        F: Fn(u64, u64, u64) -> u64 + Send + Sync + 'static,
    {
        Alphabet::new(capacity)?;
        Ok(TransitionFunction {
            capacity,
            backing: Backing::Func {
                name: name.to_string(),
                f: Arc::new(move |a, b, c| Ok(f(a, b, c))),
            },
            domain: None,
        })
    }

    pub fn from_fallible_fn<F>(name: &str, capacity: u32, f: F) -> Result<Self>
    where
        F: Fn(u64, u64, u64) -> Result<u64> + Send + Sync + 'static,
    {
        Alphabet::new(capacity)?;
        Ok(TransitionFunction {
            capacity,
            backing: Backing::Func {
                name: name.to_string(),
                f: Arc::new(f),
            },
            domain: None,
        })
    }

    /// Builds a table-backed rule from `(triple, value)` entries.
    /// Missing triples report an undefined-transition error when hit.
    pub fn from_table(capacity: u32, entries: &[((u64, u64, u64), u64)]) -> Result<Self> {
        if 3 * capacity > TABLE_TRIPLE_BITS {
            return Err(LabError::TableTooLarge {
                got: 3 * capacity,
                limit: TABLE_TRIPLE_BITS,
            });
        }
        let mut table = vec![None; 1usize << (3 * capacity)];
        for &((a, b, c), v) in entries {
            let idx = (a | b << capacity | c << (2 * capacity)) as usize;
            table[idx] = Some(v);
        }
        Ok(TransitionFunction {
            capacity,
            backing: Backing::Table(Arc::new(table)),
            domain: None,
        })
    }

    /// Restricts the enumerable state domain (states must be valid).
    pub fn with_domain(mut self, states: Vec<u64>) -> Self {
        self.domain = Some(Arc::new(states));
        self
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// All states to consider when enumerating configurations exhaustively.
    pub fn domain_states(&self) -> Vec<u64> {
        match &self.domain {
            Some(d) => d.as_ref().clone(),
            None => {
                assert!(self.capacity < 32, "domain enumeration needs capacity < 32");
                (0..(1u64 << self.capacity)).collect()
            }
        }
    }

    pub fn eval(&self, a: u64, b: u64, c: u64) -> Result<u64> {
        match &self.backing {
            Backing::Table(t) => {
                let idx = (a | b << self.capacity | c << (2 * self.capacity)) as usize;
                t.get(idx)
                    .copied()
                    .flatten()
                    .ok_or(LabError::UndefinedTransition(a, b, c))
            }
            Backing::Func { f, .. } => f(a, b, c),
        }
    }

    /// The identity rule `tr(a, b, c) = b`.
    pub fn identity(capacity: u32) -> Self {
        TransitionFunction::from_fn("identity", capacity, |_, b, _| b).unwrap()
    }

    /// The left shift `tr(a, b, c) = c` (contents move left).
    pub fn left_shift(capacity: u32) -> Self {
        TransitionFunction::from_fn("left-shift", capacity, |_, _, c| c).unwrap()
    }

    /// Bitwise `tr(a, b, c) = a xor c`.
    pub fn xor(capacity: u32) -> Self {
        TransitionFunction::from_fn("xor", capacity, |a, _, c| a ^ c).unwrap()
    }

    /// Bitwise majority of the three neighbors.
    pub fn majority(capacity: u32) -> Self {
        TransitionFunction::from_fn("majority", capacity, |a, b, c| {
            (a & b) | (a & c) | (b & c)
        })
        .unwrap()
    }
}

/// One synchronous step: `out(x) = tr(cfg(x-1), cfg(x), cfg(x+1))`.
pub fn step_deterministic(cfg: &Configuration, tr: &TransitionFunction) -> Result<Configuration> {
    let m = cfg.len() as i64;
    let mut out = Vec::with_capacity(cfg.len());
    for x in 0..m {
        let a = cfg.get(x - 1).state()?;
        let b = cfg.get(x).state()?;
        let c = cfg.get(x + 1).state()?;
        out.push(Cell::State(tr.eval(a, b, c)?));
    }
    Configuration::new(out)
}

/// Space-time record of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub capacity: u32,
    pub frames: Vec<Configuration>,
    /// Real switching times per cell, present only for variable-period runs.
    pub switch_times: Option<Vec<Vec<f64>>>,
    pub rng_seed: Option<u64>,
}

impl Trajectory {
    pub fn ring_size(&self) -> usize {
        self.frames[0].len()
    }

    pub fn steps(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn frame(&self, t: usize) -> &Configuration {
        &self.frames[t]
    }
}

/// Runs `T` deterministic steps; the trajectory has `T + 1` frames.
pub fn evolve(cfg: &Configuration, tr: &TransitionFunction, steps: usize) -> Result<Trajectory> {
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(cfg.clone());
    for _ in 0..steps {
        let next = step_deterministic(frames.last().unwrap(), tr)?;
        frames.push(next);
    }
    Ok(Trajectory {
        capacity: tr.capacity(),
        frames,
        switch_times: None,
        rng_seed: None,
    })
}

/// Stochastic transition matrix `P(s, (r_-1, r_0, r_1))`.
///
/// Rows are dense over the alphabet and must sum to 1 within `1e-12`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    capacity: u32,
    rows: BTreeMap<(u64, u64, u64), Vec<f64>>,
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

impl TransitionMatrix {
    pub fn new(capacity: u32, rows: BTreeMap<(u64, u64, u64), Vec<f64>>) -> Result<Self> {
        let n = 1usize << capacity;
        for (&(a, b, c), row) in &rows {
            if row.len() != n {
                return Err(LabError::Parameter(format!(
                    "row for ({a:#x},{b:#x},{c:#x}) has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(LabError::BadProbability(
                    *row.iter().find(|&&p| !(0.0..=1.0).contains(&p)).unwrap(),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(LabError::RowNotNormalized(a, b, c, sum));
            }
        }
        Ok(TransitionMatrix { capacity, rows })
    }

    /// Builds the full matrix of a deterministic rule (all mass on `tr(r)`).
    pub fn from_deterministic(tr: &TransitionFunction) -> Result<Self> {
        let cap = tr.capacity();
        assert!(cap <= 4, "dense matrix from rule only for small capacity");
        let n = 1u64 << cap;
        let mut rows = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut row = vec![0.0; n as usize];
                    row[tr.eval(a, b, c)? as usize] = 1.0;
                    rows.insert((a, b, c), row);
                }
            }
        }
        TransitionMatrix::new(cap, rows)
    }

    /// The same row everywhere: a fresh sample each step, independent of the
    /// neighborhood.
    pub fn constant_row(capacity: u32, row: Vec<f64>) -> Result<Self> {
        assert!(capacity <= 4);
        let n = 1u64 << capacity;
        let mut rows = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    rows.insert((a, b, c), row.clone());
                }
            }
        }
        TransitionMatrix::new(capacity, rows)
    }

    /// Discrete-time approximation of a continuous-time rate matrix `R`:
    /// `P(s, r) = delta * R(s, r)` for `s != r_0`, with the diagonal
    /// absorbing the leftover mass. `delta` must be small enough to keep the
    /// diagonal nonnegative.
    pub fn from_rates<R>(capacity: u32, delta: f64, rates: R) -> Result<Self>
    where
        R: Fn(u64, (u64, u64, u64)) -> f64,
    {
        assert!(capacity <= 4);
        let n = 1u64 << capacity;
        let mut rows = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut row = vec![0.0; n as usize];
                    let mut off = 0.0;
                    for s in 0..n {
                        if s != b {
                            let p = delta * rates(s, (a, b, c));
                            if p < 0.0 {
                                return Err(LabError::BadProbability(p));
                            }
                            row[s as usize] = p;
                            off += p;
                        }
                    }
                    if off > 1.0 {
                        return Err(LabError::Parameter(format!(
                            "delta too large: off-diagonal mass {off} > 1"
                        )));
                    }
                    row[b as usize] = 1.0 - off;
                    rows.insert((a, b, c), row);
                }
            }
        }
        TransitionMatrix::new(capacity, rows)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn row(&self, triple: (u64, u64, u64)) -> Result<&[f64]> {
        self.rows
            .get(&triple)
            .map(|r| r.as_slice())
            .ok_or(LabError::UndefinedTransition(triple.0, triple.1, triple.2))
    }

    /// True when every entry of every row is strictly positive.
    pub fn noisy(&self) -> bool {
        self.rows
            .values()
            .all(|row| row.iter().all(|&p| p > 0.0))
    }

    /// Samples a state from the row for `triple`.
    pub fn sample(&self, triple: (u64, u64, u64), stream: &mut Stream) -> Result<u64> {
        let row = self.row(triple)?;
        let u = stream.next_f64();
        let mut acc = 0.0;
        for (s, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(s as u64);
            }
        }
        // Guard against the row summing to slightly less than one.
        Ok((row.len() - 1) as u64)
    }
}

/// Per-cell independent draw streams for one trial.
#[derive(Debug, Clone)]
pub struct CellStreams {
    streams: Vec<Stream>,
}

impl CellStreams {
    pub fn new(seed: MasterSeed, trial: u64, cells: usize) -> Self {
        CellStreams {
            streams: (0..cells).map(|x| seed.stream(trial, x as u64)).collect(),
        }
    }

    pub fn cell(&mut self, x: usize) -> &mut Stream {
        &mut self.streams[x]
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }
}

/// One synchronous probabilistic step: every cell samples independently from
/// the row selected by its neighborhood.
pub fn step_probabilistic(
    cfg: &Configuration,
    matrix: &TransitionMatrix,
    streams: &mut CellStreams,
) -> Result<Configuration> {
    let m = cfg.len() as i64;
    let mut out = Vec::with_capacity(cfg.len());
    for x in 0..m {
        let a = cfg.get(x - 1).state()?;
        let b = cfg.get(x).state()?;
        let c = cfg.get(x + 1).state()?;
        let s = matrix.sample((a, b, c), streams.cell(x as usize))?;
        out.push(Cell::State(s));
    }
    Configuration::new(out)
}

/// Aggregated rule `tr^Q` on the alphabet `S^Q`: concatenate the three
/// argument blocks into a `3Q`-symbol string, apply `tr` positionwise `Q`
/// times (losing the two end symbols each round), and return the surviving
/// central `Q` symbols.
pub fn aggregate_transition(tr: &TransitionFunction, q: u32) -> Result<TransitionFunction> {
    if q == 0 {
        return Err(LabError::Parameter("aggregation needs Q >= 1".into()));
    }
    let cap = tr.capacity();
    let agg_cap = cap.checked_mul(q).filter(|&c| c <= 64).ok_or(LabError::Capacity {
        requested: cap.saturating_mul(q),
        limit: 64,
    })?;
    let inner = tr.clone();
    let mask = if cap == 64 { u64::MAX } else { (1u64 << cap) - 1 };
    let name = format!("aggregate^{q}");
    TransitionFunction::from_fallible_fn(&name, agg_cap, move |a, b, c| {
        let unpack = |s: u64| (0..q).map(move |i| (s >> (i * cap)) & mask);
        let mut word: Vec<u64> = unpack(a).chain(unpack(b)).chain(unpack(c)).collect();
        for _ in 0..q {
            let mut next = Vec::with_capacity(word.len() - 2);
            for w in word.windows(3) {
                next.push(inner.eval(w[0], w[1], w[2])?);
            }
            word = next;
        }
        debug_assert_eq!(word.len(), q as usize);
        let mut out = 0u64;
        for (i, s) in word.iter().enumerate() {
            out |= s << (i as u32 * cap);
        }
        Ok(out)
    })
}

/// Bandwidth-`w` kernel of a separable transition function: maps a packed
/// `7w`-bit input to a packed `5w`-bit output.
#[derive(Clone)]
pub struct SeparableKernel {
    pub bandwidth: u32,
    f: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
}

impl SeparableKernel {
    pub fn new<F>(bandwidth: u32, f: F) -> Self
    where
        F: Fn(u64) -> u64 + Send + Sync + 'static,
    {
        assert!(bandwidth >= 1 && 7 * bandwidth <= 64);
        SeparableKernel {
            bandwidth,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, input: u64) -> u64 {
        (self.f)(input) & mask_bits(5 * self.bandwidth)
    }
}

fn mask_bits(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits(s: u64, lo: u32, n: u32) -> u64 {
    (s >> lo) & mask_bits(n)
}

fn put_bits(s: u64, lo: u32, n: u32, v: u64) -> u64 {
    (s & !(mask_bits(n) << lo)) | ((v & mask_bits(n)) << lo)
}

/// Applies a separable rule with the standard layout
/// `Inbuf = [0, w)`, `Outbuf = [w, 2w)`, `Pointer = [2w, 3w)`,
/// `Buf = Inbuf | Outbuf`, `Memory = All \ Inbuf`.
///
/// The kernel input is `r_-1.Buf ++ r_0.Buf ++ r_0.[a, a+w) ++ r_1.Buf`
/// where `a = r_0.Pointer`; vacant neighbors contribute zero bits. Of the
/// `5w` output bits, `[0, 3w)` replaces `Buf | Pointer`, and `[3w, 4w)` is
/// written to the window at `n = p.[4w, 5w)`. All other bits of `r_0` are
/// preserved.
pub fn apply_separable(
    kernel: &SeparableKernel,
    capacity: u32,
    left: Cell,
    center: u64,
    right: Cell,
) -> Result<u64> {
    let w = kernel.bandwidth;
    if 3 * w > capacity {
        return Err(LabError::WindowOutOfRange {
            lo: 0,
            hi: 3 * w - 1,
            capacity,
        });
    }
    let buf = |c: Cell| match c {
        Cell::Vac => 0,
        Cell::State(s) => bits(s, 0, 2 * w),
    };
    let a = bits(center, 2 * w, w) as u32;
    if a.checked_add(w).map_or(true, |hi| hi > capacity) {
        return Err(LabError::WindowOutOfRange {
            lo: a,
            hi: a.saturating_add(w) - 1,
            capacity,
        });
    }
    let input = buf(left)
        | bits(center, 0, 2 * w) << (2 * w)
        | bits(center, a, w) << (4 * w)
        | buf(right) << (5 * w);
    let p = kernel.eval(input);

    let n = bits(p, 4 * w, w) as u32;
    if n.checked_add(w).map_or(true, |hi| hi > capacity) {
        return Err(LabError::WindowOutOfRange {
            lo: n,
            hi: n.saturating_add(w) - 1,
            capacity,
        });
    }
    let mut out = put_bits(center, 0, 3 * w, bits(p, 0, 3 * w));
    out = put_bits(out, n, w, bits(p, 3 * w, w));
    Ok(out)
}

/// Legality predicate of a separable rule: `v` agrees with the isolated
/// transition of `u` on the `Memory = All \ Inbuf` part.
pub fn separable_legal(
    kernel: &SeparableKernel,
    capacity: u32,
    u: u64,
    v: u64,
) -> Result<bool> {
    let w = kernel.bandwidth;
    let isolated = apply_separable(kernel, capacity, Cell::Vac, u, Cell::Vac)?;
    let memory_mask = mask_bits(capacity) & !mask_bits(w);
    Ok(v & memory_mask == isolated & memory_mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(states: &[u64]) -> Configuration {
        Configuration::from_states(states).unwrap()
    }

    #[test]
    fn identity_rule_fixes_everything() {
        let tr = TransitionFunction::identity(2);
        let cfg = ring(&[0, 1, 2, 3]);
        assert_eq!(step_deterministic(&cfg, &tr).unwrap(), cfg);
    }

    #[test]
    fn left_shift_moves_content_left() {
        // tr(a,b,c) = c on (0,1,0,0) -> (1,0,0,0)
        let tr = TransitionFunction::left_shift(1);
        let cfg = ring(&[0, 1, 0, 0]);
        let out = step_deterministic(&cfg, &tr).unwrap();
        assert_eq!(out.states().unwrap(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn xor_rule_hand_evaluated() {
        // tr(a,b,c) = a ^ c on ring (1,0,0,0):
        // x=0: 0^0=0, x=1: 1^0=1, x=2: 0^0=0, x=3: 0^1=1
        let tr = TransitionFunction::xor(1);
        let cfg = ring(&[1, 0, 0, 0]);
        let out = step_deterministic(&cfg, &tr).unwrap();
        assert_eq!(out.states().unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn evolve_matches_chained_steps() {
        let tr = TransitionFunction::xor(1);
        let cfg = ring(&[1, 0, 0, 0]);
        let traj = evolve(&cfg, &tr, 2).unwrap();
        assert_eq!(traj.frames.len(), 3);
        let s1 = step_deterministic(&cfg, &tr).unwrap();
        let s2 = step_deterministic(&s1, &tr).unwrap();
        assert_eq!(traj.frames[1], s1);
        assert_eq!(traj.frames[2], s2);
    }

    #[test]
    fn evolve_zero_steps_is_initial_frame() {
        let tr = TransitionFunction::identity(1);
        let cfg = ring(&[1, 0]);
        let traj = evolve(&cfg, &tr, 0).unwrap();
        assert_eq!(traj.frames.len(), 1);
        assert_eq!(traj.frames[0], cfg);
    }

    #[test]
    fn table_miss_reports_triple() {
        let tr = TransitionFunction::from_table(1, &[((0, 0, 0), 1)]).unwrap();
        assert_eq!(tr.eval(0, 0, 0).unwrap(), 1);
        match tr.eval(1, 0, 1) {
            Err(LabError::UndefinedTransition(1, 0, 1)) => {}
            other => panic!("expected undefined transition, got {other:?}"),
        }
    }

    #[test]
    fn table_capacity_guard() {
        assert!(TransitionFunction::from_table(5, &[]).is_err());
    }

    #[test]
    fn deterministic_matrix_equals_deterministic_step() {
        let seed = MasterSeed(5);
        for trial in 0..100 {
            let mut s = seed.stream(trial, 999);
            let cap = 1 + (s.next_below(2) as u32); // 1 or 2 bits
            let n = 1u64 << cap;
            let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
            let capc = cap;
            let t2 = table.clone();
            let tr = TransitionFunction::from_fn("rand", cap, move |a, b, c| {
                t2[(a | b << capc | c << (2 * capc)) as usize]
            })
            .unwrap();
            let matrix = TransitionMatrix::from_deterministic(&tr).unwrap();
            let m = 5 + s.next_below(4) as usize;
            let cfg = Configuration::from_states(
                &(0..m).map(|_| s.next_below(n)).collect::<Vec<_>>(),
            )
            .unwrap();
            let mut streams = CellStreams::new(seed, trial, m);
            let det = step_deterministic(&cfg, &tr).unwrap();
            let prob = step_probabilistic(&cfg, &matrix, &mut streams).unwrap();
            assert_eq!(det, prob);
        }
    }

    #[test]
    fn coin_frequency_is_half() {
        // Single-cell ring, fresh fair coin each step.
        let matrix = TransitionMatrix::constant_row(1, vec![0.5, 0.5]).unwrap();
        let seed = MasterSeed(77);
        let mut streams = CellStreams::new(seed, 0, 1);
        let mut cfg = ring(&[0]);
        let mut ones = 0u32;
        let n = 100_000;
        for _ in 0..n {
            cfg = step_probabilistic(&cfg, &matrix, &mut streams).unwrap();
            ones += cfg.get(0).state().unwrap() as u32;
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn all_mass_rows_give_constant_output() {
        let matrix = TransitionMatrix::constant_row(1, vec![0.0, 1.0]).unwrap();
        let seed = MasterSeed(3);
        let mut streams = CellStreams::new(seed, 0, 4);
        let out = step_probabilistic(&ring(&[0, 1, 0, 1]), &matrix, &mut streams).unwrap();
        assert_eq!(out.states().unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn row_normalization_enforced() {
        let mut rows = BTreeMap::new();
        rows.insert((0, 0, 0), vec![0.6, 0.6]);
        assert!(TransitionMatrix::new(1, rows).is_err());
    }

    #[test]
    fn rate_matrix_discretization() {
        // Flip rate 2.0 regardless of neighborhood, delta = 0.05:
        // P(flip) = 0.1, diagonal 0.9, rows normalized by construction.
        let p = TransitionMatrix::from_rates(1, 0.05, |s, (_, b, _)| {
            if s != b {
                2.0
            } else {
                0.0
            }
        })
        .unwrap();
        let row = p.row((1, 0, 1)).unwrap();
        assert!((row[1] - 0.1).abs() < 1e-12);
        assert!((row[0] - 0.9).abs() < 1e-12);
        assert!(p.noisy());
        // Too large a delta overflows the off-diagonal mass.
        assert!(TransitionMatrix::from_rates(1, 0.6, |s, (_, b, _)| {
            if s != b {
                2.0
            } else {
                0.0
            }
        })
        .is_err());
    }

    #[test]
    fn aggregate_q1_is_same_rule() {
        let tr = TransitionFunction::xor(1);
        let ag = aggregate_transition(&tr, 1).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    assert_eq!(tr.eval(a, b, c).unwrap(), ag.eval(a, b, c).unwrap());
                }
            }
        }
    }

    #[test]
    fn aggregate_identity_keeps_middle_block() {
        let tr = TransitionFunction::identity(2);
        for q in [1u32, 2, 3] {
            let ag = aggregate_transition(&tr, q).unwrap();
            let b = 0b10_01_11 & mask_bits(2 * q);
            assert_eq!(ag.eval(0b01, b, 0b11).unwrap(), b);
        }
    }

    #[test]
    fn aggregate_matches_direct_shrink() {
        // Q=2, xor rule, arguments ((1,0),(0,0),(0,1)) packed LSB-first.
        let tr = TransitionFunction::xor(1);
        let ag = aggregate_transition(&tr, 2).unwrap();
        // Word: 1 0 0 0 0 1; round 1: (1^0, 0^0, 0^0, 0^1) = 1 0 0 1;
        // round 2: (1^0, 0^1) = 1 1 -> packed 0b11.
        let a = 0b01; // cells (1,0)
        let b = 0b00;
        let c = 0b10; // cells (0,1)
        assert_eq!(ag.eval(a, b, c).unwrap(), 0b11);
    }

    #[test]
    fn aggregate_overflow_rejected() {
        let tr = TransitionFunction::identity(16);
        assert!(aggregate_transition(&tr, 5).is_err());
    }

    #[test]
    fn block_simulation_identity_exhaustive_small() {
        // Running CA(tr) for Q steps on a ring of size m*Q and re-blocking
        // equals one step of CA(tr^Q) on the blocked ring.
        let seed = MasterSeed(91);
        for cap in [1u32, 2] {
            for q in [2u32, 3] {
                for m in [2usize, 3] {
                    let n = 1u64 << cap;
                    let mut s = seed.stream(cap as u64, q as u64 * 10 + m as u64);
                    let table: Vec<u64> =
                        (0..n * n * n).map(|_| s.next_below(n)).collect();
                    let capc = cap;
                    let t2 = table.clone();
                    let tr = TransitionFunction::from_fn("rand", cap, move |a, b, c| {
                        t2[(a | b << capc | c << (2 * capc)) as usize]
                    })
                    .unwrap();
                    let ag = aggregate_transition(&tr, q).unwrap();

                    let cells: Vec<u64> =
                        (0..m * q as usize).map(|_| s.next_below(n)).collect();
                    let fine = Configuration::from_states(&cells).unwrap();
                    let fine_out = evolve(&fine, &tr, q as usize).unwrap();

                    let block = |cfg: &Configuration| -> Configuration {
                        let blocks: Vec<u64> = (0..m)
                            .map(|i| {
                                (0..q).fold(0u64, |acc, j| {
                                    acc | cfg.get((i as i64) * q as i64 + j as i64)
                                        .state()
                                        .unwrap()
                                        << (j * cap)
                                })
                            })
                            .collect();
                        Configuration::from_states(&blocks).unwrap()
                    };

                    let coarse = step_deterministic(&block(&fine), &ag).unwrap();
                    assert_eq!(coarse, block(fine_out.frames.last().unwrap()));
                }
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let seed = MasterSeed(17);
        for trial in 0..100 {
            let mut s = seed.stream(trial, 0);
            let cap = 1 + s.next_below(2) as u32;
            let n = 1u64 << cap;
            let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
            let capc = cap;
            let tr = TransitionFunction::from_fn("rand", cap, move |a, b, c| {
                table[(a | b << capc | c << (2 * capc)) as usize]
            })
            .unwrap();
            let m = 3 + s.next_below(14) as usize;
            let cfg =
                Configuration::from_states(&(0..m).map(|_| s.next_below(n)).collect::<Vec<_>>())
                    .unwrap();
            let stepped = step_deterministic(&cfg, &tr).unwrap();
            for k in 0..m as i64 {
                let lhs = step_deterministic(&cfg.rotate(k), &tr).unwrap();
                assert_eq!(lhs, stepped.rotate(k));
            }
        }
    }

    #[test]
    fn separable_identity_kernel_preserves_rest() {
        // Kernel echoes its own Buf back, points the write window at Outbuf,
        // and writes the same Outbuf bits there: the state cannot change.
        let w = 2u32;
        let cap = 10u32;
        let kernel = SeparableKernel::new(w, move |input| {
            let own_buf = bits(input, 2 * w, 2 * w);
            let outbuf = bits(input, 3 * w, w);
            // p.[0,2w) = Buf echo, p.[2w,3w) = pointer kept at w, p.[3w,4w) =
            // window content = Outbuf, p.[4w,5w) = window target n = w.
            own_buf | (w as u64) << (2 * w) | outbuf << (3 * w) | (w as u64) << (4 * w)
        });
        for s in [0u64, 0b11_0101_1010, 0b10_1111_0001] {
            // Pointer must stay in range: force it to w.
            let s = put_bits(s, 2 * w, w, w as u64);
            let out =
                apply_separable(&kernel, cap, Cell::State(0), s, Cell::State(0)).unwrap();
            // Outside Buf | Pointer nothing changed (window rewrote Outbuf).
            let keep = mask_bits(cap) & !mask_bits(3 * w);
            assert_eq!(out & keep, s & keep);
        }
    }

    #[test]
    fn separable_legality_of_isolated_transition() {
        let w = 1u32;
        let cap = 8u32;
        let kernel = SeparableKernel::new(w, |input| input.wrapping_mul(0x2545_f491) & 0x1f);
        for u in 0..256u64 {
            let u = put_bits(u, 2, 1, 0); // pointer at 0
            let v = apply_separable(&kernel, cap, Cell::Vac, u, Cell::Vac).unwrap();
            assert!(separable_legal(&kernel, cap, u, v).unwrap());
        }
    }

    #[test]
    fn separable_only_writes_declared_windows() {
        // Random kernel, random triples: bits outside Buf|Pointer|window
        // must equal the center's.
        let w = 2u32;
        let cap = 16u32;
        let seed = MasterSeed(23);
        let mut s = seed.stream(0, 0);
        let kernel = {
            let mut k = seed.stream(1, 0);
            let tbl: Vec<u64> = (0..(1u64 << (7 * w))).map(|_| k.next_u64()).collect();
            SeparableKernel::new(w, move |input| tbl[input as usize])
        };
        let mut checked = 0;
        while checked < 200 {
            let center = s.next_u64() & mask_bits(cap);
            let left = Cell::State(s.next_u64() & mask_bits(cap));
            let right = Cell::State(s.next_u64() & mask_bits(cap));
            let a = bits(center, 2 * w, w) as u32;
            if a + w > cap {
                continue;
            }
            let out = match apply_separable(&kernel, cap, left, center, right) {
                Ok(v) => v,
                Err(_) => continue, // kernel chose an out-of-range target
            };
            let p = {
                let input = bits(left.state().unwrap(), 0, 2 * w)
                    | bits(center, 0, 2 * w) << (2 * w)
                    | bits(center, a, w) << (4 * w)
                    | bits(right.state().unwrap(), 0, 2 * w) << (5 * w);
                kernel.eval(input)
            };
            let n = bits(p, 4 * w, w) as u32;
            let mut writable = mask_bits(3 * w);
            writable |= mask_bits(w) << n;
            assert_eq!(out & !writable, center & !writable);
            checked += 1;
        }
    }
}
