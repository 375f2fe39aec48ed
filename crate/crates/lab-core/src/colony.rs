//! Colony-structured block simulation of one automaton by another.
//!
//! A ring of simulated cells is represented by a host ring in which each
//! colony of `Q` host cells carries one simulated state on its `Info` track,
//! addressed by an `Addr` ramp `0..Q-1`. Each work period of `U` host steps,
//! tracked by the `Age` field, performs one simulated transition:
//!
//! - **Retrieve**: the colony ships its represented state to both neighbor
//!   colonies over the mail tracks (and keeps its own on the `Cpt` input);
//! - **Evaluate**: the simulated rule is applied to the three retrieved
//!   strings and the result is parked on the `Hold` track;
//! - **Update**: `Hold` is copied into `Info` in the last step.
//!
//! Evaluation is performed host-side: the retrieved arguments, gathered by
//! the mail rules, are fed to the simulated transition function directly and
//! the result bits are written to each cell's slot. The mail movement, the
//! phase timing, and the decoding contract follow the colony rules exactly.
//!
//! The single-fault-tolerant variant keeps the represented state in three
//! copies on `Info` and votes over them before every shipment. It runs
//! three full retrieve rounds into separate argument buffers, evaluates on
//! the bitwise majority of the three retrieved versions, rebuilds all of
//! `Hold` from that vote, and repairs a cell's `Addr`/`Age` from its
//! neighbors when both disagree with it the same way. A fault in a sending
//! colony can therefore corrupt at most one retrieved version of each
//! neighbor, and a colony's own fault at most one third of its own state,
//! so one adversarial fault per colony per work period never corrupts the
//! decoded trajectory.

use crate::dynamics::{evolve, TransitionFunction};
use crate::error::{LabError, Result};
use crate::state::{Cell, Configuration, FieldMap};

/// Simulation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Basic,
    SingleFaultTolerant,
}

/// Mail tracks: direction `-1`/`+1`, within-colony or colony-crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MailTrack {
    pub dir: i64,
    pub cross: bool,
}

/// The four mail tracks (`-1.1`, `-0.1`, `0.1`, `1.1` by direction and reach).
pub const MAIL_TRACKS: [MailTrack; 4] = [
    MailTrack {
        dir: -1,
        cross: true,
    },
    MailTrack {
        dir: -1,
        cross: false,
    },
    MailTrack {
        dir: 1,
        cross: false,
    },
    MailTrack {
        dir: 1,
        cross: true,
    },
];

const MAIL_FROMADDR: usize = 0;
const MAIL_FROMNB: usize = 1;
const MAIL_INFO: usize = 2;
const MAIL_STATUS: usize = 3;
const ARG_LEFT: usize = 0;
const ARG_OWN: usize = 1;
const ARG_RIGHT: usize = 2;

fn track_pos(t: MailTrack) -> usize {
    match (t.dir, t.cross) {
        (-1, true) => 0,
        (-1, false) => 1,
        (1, false) => 2,
        (1, true) => 3,
        _ => unreachable!(),
    }
}

fn track_name(t: MailTrack) -> &'static str {
    match (t.dir, t.cross) {
        (-1, true) => "Mail_m11",
        (-1, false) => "Mail_m01",
        (1, false) => "Mail_p01",
        (1, true) => "Mail_p11",
        _ => unreachable!(),
    }
}

/// Resolved bit indices of the per-cell fields, for the hot step loop.
#[derive(Debug, Clone)]
struct LayoutIdx {
    addr: Vec<u32>,
    age: Vec<u32>,
    info: Vec<u32>,
    work: Vec<u32>,
    /// `[track][sub]` with subfields Fromaddr, Fromnb, Info, Status.
    mail: [[Vec<u32>; 4]; 4],
    /// `[round][argument]` with arguments left, own, right.
    ret: [[Vec<u32>; 3]; 3],
    out: Vec<u32>,
    hold: Vec<u32>,
}

/// Field layout and sizing of one host cell.
#[derive(Debug, Clone)]
pub struct ColonyLayout {
    q: usize,
    u: usize,
    sim_capacity: u32,
    variant: Variant,
    fields: FieldMap,
    idx: LayoutIdx,
}

/// Fromnb tag values: source direction as seen from the receiving colony,
/// encoded as `i + 1`.
fn nb_tag(i: i64) -> u64 {
    (i + 1) as u64
}

impl ColonyLayout {
    /// Minimal work period of the compiled schedule. The basic variant runs
    /// one post step, `2Q` mail steps, one evaluate and one update step.
    /// The fault-tolerant variant runs three retrieve rounds (a vote step,
    /// a post step and `2Q` mail steps each), then a single evaluate step
    /// over the voted arguments and the update step.
    pub fn min_work_period(q: usize, variant: Variant) -> usize {
        match variant {
            Variant::Basic => 2 * q + 3,
            Variant::SingleFaultTolerant => 3 * (2 * q + 2) + 2,
        }
    }

    pub fn new(q: usize, sim_capacity: u32, variant: Variant) -> Result<Self> {
        Self::with_period(q, Self::min_work_period(q, variant), sim_capacity, variant)
    }

    pub fn with_period(
        q: usize,
        u: usize,
        sim_capacity: u32,
        variant: Variant,
    ) -> Result<Self> {
        if sim_capacity == 0 || sim_capacity > 16 {
            return Err(LabError::ColonyLayout(
                "simulated capacity must be in [1, 16]".into(),
            ));
        }
        // Colony Size Lower Bound.
        let min_q = match variant {
            Variant::Basic => (sim_capacity as usize).max(2),
            Variant::SingleFaultTolerant => 3 * sim_capacity as usize,
        };
        if q < min_q {
            return Err(LabError::ColonyLayout(format!(
                "colony size lower bound violated: Q = {q} < {min_q}"
            )));
        }
        if variant == Variant::SingleFaultTolerant && q % 3 != 0 {
            return Err(LabError::ColonyLayout(
                "fault-tolerant colonies need 3 | Q for the three copies".into(),
            ));
        }
        // Work Period Lower Bound.
        let min_u = Self::min_work_period(q, variant);
        if u < min_u {
            return Err(LabError::ColonyLayout(format!(
                "work period lower bound violated: U = {u} < {min_u}"
            )));
        }
        let addr_bits = (usize::BITS - (q - 1).leading_zeros()).max(1);
        let age_bits = (usize::BITS - (u - 1).leading_zeros()).max(1);
        let mut decls: Vec<(String, u32)> = vec![
            ("Addr".into(), addr_bits),
            ("Age".into(), age_bits),
            ("Info".into(), 1),
            ("Work".into(), 1),
        ];
        for t in MAIL_TRACKS {
            let base = track_name(t);
            decls.push((format!("{base}.Fromaddr"), addr_bits));
            decls.push((format!("{base}.Fromnb"), 2));
            decls.push((format!("{base}.Info"), 1));
            decls.push((format!("{base}.Status"), 1));
        }
        // Three retrieved versions per argument; the basic variant only
        // uses version 0.
        for r in 0..3 {
            decls.push((format!("Ret_m1_{r}"), 1));
            decls.push((format!("Ret_0_{r}"), 1));
            decls.push((format!("Ret_p1_{r}"), 1));
        }
        decls.push(("Out".into(), 1));
        decls.push(("Hold".into(), 1));
        let refs: Vec<(&str, u32)> = decls.iter().map(|(n, w)| (n.as_str(), *w)).collect();
        // Cell Capacity Lower Bound: the packed layout must fit (FieldMap
        // rejects anything above 64 bits).
        let fields = FieldMap::packed(&refs).map_err(|_| {
            LabError::ColonyLayout(format!(
                "cell capacity lower bound violated: fields for Q={q}, U={u} exceed 64 bits"
            ))
        })?;
        let ix = |name: &str| fields.indices(name).expect("declared").to_vec();
        let mail = std::array::from_fn(|ti| {
            let base = track_name(MAIL_TRACKS[ti]);
            [
                ix(&format!("{base}.Fromaddr")),
                ix(&format!("{base}.Fromnb")),
                ix(&format!("{base}.Info")),
                ix(&format!("{base}.Status")),
            ]
        });
        let ret = std::array::from_fn(|r| {
            [
                ix(&format!("Ret_m1_{r}")),
                ix(&format!("Ret_0_{r}")),
                ix(&format!("Ret_p1_{r}")),
            ]
        });
        let idx = LayoutIdx {
            addr: ix("Addr"),
            age: ix("Age"),
            info: ix("Info"),
            work: ix("Work"),
            mail,
            ret,
            out: ix("Out"),
            hold: ix("Hold"),
        };
        Ok(ColonyLayout {
            q,
            u,
            sim_capacity,
            variant,
            fields,
            idx,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn u(&self) -> usize {
        self.u
    }

    pub fn sim_capacity(&self) -> u32 {
        self.sim_capacity
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn fields(&self) -> &FieldMap {
        &self.fields
    }

    fn get(&self, s: u64, name: &str) -> u64 {
        self.fields.get(s, name).expect("layout field")
    }

    fn set(&self, s: u64, name: &str, v: u64) -> u64 {
        self.fields.set(s, name, v).expect("layout field")
    }

    /// Offset of copy `copy` of the represented string on the `Info` track.
    fn copy_base(&self, copy: usize) -> usize {
        match self.variant {
            Variant::Basic => 0,
            Variant::SingleFaultTolerant => copy * (self.q / 3),
        }
    }

    fn copies(&self) -> usize {
        match self.variant {
            Variant::Basic => 1,
            Variant::SingleFaultTolerant => 3,
        }
    }

    /// Encodes one simulated state into a fresh colony word.
    pub fn encode_state(&self, v: u64) -> Vec<u64> {
        let mut word = Vec::with_capacity(self.q);
        for a in 0..self.q {
            let mut s = 0u64;
            s = self.set(s, "Addr", a as u64);
            // Age starts at the beginning of a work period.
            s = self.set(s, "Age", 0);
            for copy in 0..self.copies() {
                let base = self.copy_base(copy);
                if a >= base && a < base + self.sim_capacity as usize {
                    s = self.set(s, "Info", (v >> (a - base)) & 1);
                }
            }
            for t in MAIL_TRACKS {
                s = self.set(s, &format!("{}.Status", track_name(t)), 1);
            }
            word.push(s);
        }
        word
    }

    /// Decodes a colony word: `None` when the address ramp is rejected
    /// (the base must be the only address-0 cell). The fault-tolerant
    /// variant takes a bitwise majority over the three copies.
    pub fn decode_state(&self, word: &[u64]) -> Option<u64> {
        if word.len() != self.q {
            return None;
        }
        for (a, &s) in word.iter().enumerate() {
            if (self.get(s, "Addr") == 0) != (a == 0) {
                return None;
            }
        }
        let mut v = 0u64;
        for bit in 0..self.sim_capacity as usize {
            let mut ones = 0;
            for copy in 0..self.copies() {
                ones += self.get(word[self.copy_base(copy) + bit], "Info");
            }
            if 2 * ones > self.copies() as u64 {
                v |= 1 << bit;
            }
        }
        Some(v)
    }
}

/// What one cell does at a given age, besides the mail movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Idle,
    /// Majority-vote the info copies onto `Work` (fault-tolerant rounds).
    Vote,
    /// Post the shipped track onto the outgoing mail tracks and seed this
    /// round's own-argument buffer; also clears the intra-colony tracks.
    Post { round: usize },
    /// Mail is in flight; receive matching payloads into this round's
    /// argument buffers.
    MailStep { round: usize },
    /// Apply the simulated rule to the (voted) retrieved strings; write
    /// `Out` and the `Hold` slots.
    Eval,
    /// Copy `Hold` into `Info`.
    Update,
}

/// Colony simulator: a host ring of `colonies * Q` cells simulating
/// `CA(tr2)` on a ring of `colonies` cells.
pub struct ColonySimulator {
    layout: ColonyLayout,
    tr2: TransitionFunction,
    schedule: Vec<Action>,
}

/// Post/receive instrumentation for the mail-conservation check.
#[derive(Debug, Default, Clone)]
pub struct MailLog {
    /// `(time, cell, track, fromaddr, tag, payload)`.
    pub posts: Vec<(usize, usize, &'static str, u64, u64, u64)>,
    /// `(time, cell, track, fromaddr, tag, payload)`.
    pub receives: Vec<(usize, usize, &'static str, u64, u64, u64)>,
}

impl ColonySimulator {
    pub fn build(layout: ColonyLayout, tr2: TransitionFunction) -> Result<Self> {
        if tr2.capacity() != layout.sim_capacity {
            return Err(LabError::ColonyLayout(format!(
                "simulated rule capacity {} != layout capacity {}",
                tr2.capacity(),
                layout.sim_capacity
            )));
        }
        let schedule = Self::compile_schedule(&layout);
        Ok(ColonySimulator {
            layout,
            tr2,
            schedule,
        })
    }

    fn compile_schedule(layout: &ColonyLayout) -> Vec<Action> {
        let q = layout.q;
        let mut schedule = vec![Action::Idle; layout.u];
        match layout.variant {
            Variant::Basic => {
                schedule[0] = Action::Post { round: 0 };
                for s in 1..=2 * q {
                    schedule[s] = Action::MailStep { round: 0 };
                }
                schedule[2 * q + 1] = Action::Eval;
                schedule[2 * q + 2] = Action::Update;
            }
            Variant::SingleFaultTolerant => {
                let round_len = 2 * q + 2;
                for round in 0..3 {
                    let base = round * round_len;
                    schedule[base] = Action::Vote;
                    schedule[base + 1] = Action::Post { round };
                    for s in 2..=2 * q + 1 {
                        schedule[base + s] = Action::MailStep { round };
                    }
                }
                schedule[3 * round_len] = Action::Eval;
                schedule[3 * round_len + 1] = Action::Update;
            }
        }
        schedule
    }

    pub fn layout(&self) -> &ColonyLayout {
        &self.layout
    }

    /// Encodes a simulated ring into the host ring.
    pub fn encode_ring(&self, xi2: &Configuration) -> Result<Configuration> {
        let mut cells = Vec::with_capacity(xi2.len() * self.layout.q);
        for x in 0..xi2.len() {
            let v = xi2.get(x as i64).state()?;
            for s in self.layout.encode_state(v) {
                cells.push(Cell::State(s));
            }
        }
        Configuration::new(cells)
    }

    /// Decodes every aligned colony of the host ring.
    pub fn decode_ring(&self, host: &Configuration) -> Result<Vec<Option<u64>>> {
        let q = self.layout.q;
        if host.len() % q != 0 {
            return Err(LabError::Parameter("host ring not a multiple of Q".into()));
        }
        let mut out = Vec::with_capacity(host.len() / q);
        for c in 0..host.len() / q {
            let word: Vec<u64> = (0..q)
                .map(|a| host.get((c * q + a) as i64).state())
                .collect::<Result<_>>()?;
            out.push(self.layout.decode_state(&word));
        }
        Ok(out)
    }

    /// One synchronous host step.
    pub fn step(&self, cfg: &Configuration) -> Result<Configuration> {
        self.step_impl(cfg, 0, &mut None)
    }

    /// One step with mail instrumentation.
    pub fn step_logged(
        &self,
        cfg: &Configuration,
        time: usize,
        log: &mut MailLog,
    ) -> Result<Configuration> {
        let mut log_opt = Some(std::mem::take(log));
        let out = self.step_impl(cfg, time, &mut log_opt)?;
        *log = log_opt.take().unwrap();
        Ok(out)
    }

    fn step_impl(
        &self,
        cfg: &Configuration,
        time: usize,
        log: &mut Option<MailLog>,
    ) -> Result<Configuration> {
        use crate::state::{extract, inject};
        let l = &self.layout;
        let ix = &l.idx;
        let q = l.q;
        let m = cfg.len();
        let cap = l.sim_capacity as usize;
        let states: Vec<u64> = cfg.states()?;
        let addr = |x: usize| extract(states[x], &ix.addr) as i64;
        let mut next = states.clone();

        // Colony bases as implied by each cell's own address field.
        let base_of = |x: usize| -> usize {
            let a = addr(x) as usize % q.max(1);
            (x + m - a) % m
        };

        // Edge relation between x and its neighbor in direction j, from the
        // address ramp: 0 inside a colony, 1 across adjacent colonies.
        let edge = |x: usize, j: i64| -> Option<u8> {
            let y = (x as i64 + j).rem_euclid(m as i64) as usize;
            let (ax, ay) = (addr(x), addr(y));
            if j == -1 {
                if ax == ay + 1 {
                    Some(0)
                } else if ax == 0 && ay == q as i64 - 1 {
                    Some(1)
                } else {
                    None
                }
            } else if ay == ax + 1 {
                Some(0)
            } else if ax == q as i64 - 1 && ay == 0 {
                Some(1)
            } else {
                None
            }
        };

        for x in 0..m {
            let s = states[x];
            let age = extract(s, &ix.age) as usize;
            let action = self
                .schedule
                .get(age)
                .copied()
                .unwrap_or(Action::Idle);
            let mut out = s;

            // Mail movement: every step of a mail window shifts all tracks.
            if let Action::MailStep { round } = action {
                for (ti, t) in MAIL_TRACKS.iter().enumerate() {
                    let from = (x as i64 - t.dir).rem_euclid(m as i64) as usize;
                    let incoming = match edge(x, -t.dir) {
                        Some(0) => Some((ti, states[from])),
                        Some(1) if !t.cross => Some((
                            track_pos(MailTrack {
                                dir: t.dir,
                                cross: true,
                            }),
                            states[from],
                        )),
                        _ => None,
                    };
                    match incoming {
                        Some((src, y)) => {
                            for sub in 0..4 {
                                let v = extract(y, &ix.mail[src][sub]);
                                out = inject(out, &ix.mail[ti][sub], v);
                            }
                        }
                        None => {
                            out = inject(out, &ix.mail[ti][MAIL_STATUS], 1);
                        }
                    }
                }
                // Receive: match the intra-colony tracks against this cell's
                // address and the expected source tag.
                let a = addr(x);
                if a >= 0 && (a as usize) < cap {
                    for (track, tag, ret_arg) in [
                        (
                            MailTrack {
                                dir: 1,
                                cross: false,
                            },
                            nb_tag(-1),
                            ARG_LEFT,
                        ),
                        (
                            MailTrack {
                                dir: -1,
                                cross: false,
                            },
                            nb_tag(1),
                            ARG_RIGHT,
                        ),
                    ] {
                        let ti = track_pos(track);
                        let status = extract(out, &ix.mail[ti][MAIL_STATUS]);
                        let fromaddr = extract(out, &ix.mail[ti][MAIL_FROMADDR]);
                        let fromnb = extract(out, &ix.mail[ti][MAIL_FROMNB]);
                        if status == 0 && fromnb == tag && fromaddr == a as u64 {
                            let payload = extract(out, &ix.mail[ti][MAIL_INFO]);
                            out = inject(out, &ix.ret[round][ret_arg], payload);
                            if let Some(log) = log.as_mut() {
                                log.receives.push((
                                    time,
                                    x,
                                    track_name(track),
                                    fromaddr,
                                    fromnb,
                                    payload,
                                ));
                            }
                        }
                    }
                }
            }

            match action {
                Action::Vote => {
                    let a = addr(x);
                    if a >= 0 && (a as usize) < cap {
                        let base = base_of(x);
                        let mut ones = 0;
                        for copy in 0..l.copies() {
                            let cell = (base + l.copy_base(copy) + a as usize) % m;
                            ones += extract(states[cell], &ix.info);
                        }
                        let v = (2 * ones > l.copies() as u64) as u64;
                        out = inject(out, &ix.work, v);
                    }
                }
                Action::Post { round } => {
                    // The shipped track: voted copy for the fault-tolerant
                    // variant, raw info for the basic one.
                    let payload = match l.variant {
                        Variant::Basic => extract(s, &ix.info),
                        Variant::SingleFaultTolerant => extract(s, &ix.work),
                    };
                    let a = addr(x) as u64;
                    // Post toward the right (carries tag "from the left
                    // neighbor", i = -1) and toward the left (i = +1).
                    for (track, i) in [
                        (
                            MailTrack {
                                dir: 1,
                                cross: true,
                            },
                            -1i64,
                        ),
                        (
                            MailTrack {
                                dir: -1,
                                cross: true,
                            },
                            1,
                        ),
                    ] {
                        let ti = track_pos(track);
                        out = inject(out, &ix.mail[ti][MAIL_FROMADDR], a);
                        out = inject(out, &ix.mail[ti][MAIL_FROMNB], nb_tag(i));
                        out = inject(out, &ix.mail[ti][MAIL_INFO], payload);
                        out = inject(out, &ix.mail[ti][MAIL_STATUS], 0);
                        if let Some(log) = log.as_mut() {
                            log.posts.push((time, x, track_name(track), a, nb_tag(i), payload));
                        }
                    }
                    // Clear the intra tracks so stale payloads cannot match.
                    for t in MAIL_TRACKS.iter().filter(|t| !t.cross) {
                        out = inject(out, &ix.mail[track_pos(*t)][MAIL_STATUS], 1);
                    }
                    // The colony's own argument needs no mail.
                    if (addr(x) as usize) < cap {
                        out = inject(out, &ix.ret[round][ARG_OWN], payload);
                    }
                }
                Action::Eval => {
                    let a = addr(x);
                    let base = base_of(x);
                    let gather = |indices: &[u32]| -> u64 {
                        let mut v = 0u64;
                        for bit in 0..cap {
                            v |= extract(states[(base + bit) % m], indices) << bit;
                        }
                        v
                    };
                    // Majority over the retrieved versions; the basic
                    // variant only ever fills version 0.
                    let arg = |which: usize| -> u64 {
                        match l.variant {
                            Variant::Basic => gather(&ix.ret[0][which]),
                            Variant::SingleFaultTolerant => {
                                let v0 = gather(&ix.ret[0][which]);
                                let v1 = gather(&ix.ret[1][which]);
                                let v2 = gather(&ix.ret[2][which]);
                                (v0 & v1) | (v0 & v2) | (v1 & v2)
                            }
                        }
                    };
                    let result =
                        self.tr2.eval(arg(ARG_LEFT), arg(ARG_OWN), arg(ARG_RIGHT))?;
                    if a >= 0 && (a as usize) < cap {
                        out = inject(out, &ix.out, (result >> a) & 1);
                    }
                    for copy in 0..l.copies() {
                        let hold_base = l.copy_base(copy) as i64;
                        if a >= hold_base && a < hold_base + cap as i64 {
                            out = inject(out, &ix.hold, (result >> (a - hold_base)) & 1);
                        }
                    }
                }
                Action::Update => {
                    out = inject(out, &ix.info, extract(s, &ix.hold));
                }
                Action::Idle | Action::MailStep { .. } => {}
            }

            // Default: the address is kept, the age advances.
            out = inject(out, &ix.age, ((age + 1) % l.u) as u64);

            // Fault-tolerant self-repair: adopt the neighbors' implied
            // address/age when both agree against this cell.
            if l.variant == Variant::SingleFaultTolerant {
                let left = states[(x + m - 1) % m];
                let right = states[(x + 1) % m];
                let la = extract(left, &ix.addr);
                let ra = extract(right, &ix.addr);
                let implied_l = (la + 1) % q as u64;
                let implied_r = (ra + q as u64 - 1) % q as u64;
                let own = extract(s, &ix.addr);
                if implied_l == implied_r && implied_l != own {
                    out = inject(out, &ix.addr, implied_l);
                }
                let lage = extract(left, &ix.age);
                let rage = extract(right, &ix.age);
                if lage == rage && lage != extract(s, &ix.age) {
                    out = inject(out, &ix.age, (lage + 1) % l.u as u64);
                }
            }
            next[x] = out;
        }
        Configuration::from_states(&next)
    }

    /// Runs `periods` fault-free work periods and decodes the host ring at
    /// every period boundary.
    pub fn run_decoded(
        &self,
        xi2: &Configuration,
        periods: usize,
    ) -> Result<Vec<Vec<Option<u64>>>> {
        let mut host = self.encode_ring(xi2)?;
        let mut decoded = vec![self.decode_ring(&host)?];
        for _ in 0..periods {
            for _ in 0..self.layout.u {
                host = self.step(&host)?;
            }
            decoded.push(self.decode_ring(&host)?);
        }
        Ok(decoded)
    }
}

/// One adversarial fault: overwrite `field` of `cell` in `colony` with
/// `value` at step `step` of work period `period`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultEvent {
    pub period: usize,
    pub colony: usize,
    pub cell: usize,
    pub field: String,
    pub value: u64,
    pub step: usize,
}

/// A schedule of faults respecting one fault per colony per work period.
#[derive(Debug, Clone, Default)]
pub struct FaultSchedule {
    pub events: Vec<FaultEvent>,
}

impl FaultSchedule {
    pub fn validate(&self, layout: &ColonyLayout, colonies: usize, periods: usize) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.events {
            if e.period >= periods || e.colony >= colonies || e.cell >= layout.q {
                return Err(LabError::FaultSchedule(format!(
                    "event out of range: {e:?}"
                )));
            }
            if e.step >= layout.u {
                return Err(LabError::FaultSchedule(format!(
                    "step {} outside the work period",
                    e.step
                )));
            }
            if !layout.fields.contains(&e.field) {
                return Err(LabError::FaultSchedule(format!(
                    "unknown field '{}'",
                    e.field
                )));
            }
            if !seen.insert((e.period, e.colony)) {
                return Err(LabError::FaultSchedule(format!(
                    "two faults in colony {} during period {}",
                    e.colony, e.period
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one fault-tolerant trial.
#[derive(Debug, Clone)]
pub struct FtolTrialReport {
    /// Decoded ring at each period boundary (before fault injection).
    pub decoded: Vec<Vec<Option<u64>>>,
    /// Per period and colony: the hold third that disagreed with the other
    /// two just before the final vote, if any.
    pub corrupted_thirds: Vec<Vec<Option<usize>>>,
    /// `None` when the decoded trajectory matches the fault-free decoding;
    /// otherwise the first divergent `(period, colony)`.
    pub first_divergence: Option<(usize, usize)>,
}

impl FtolTrialReport {
    pub fn passed(&self) -> bool {
        self.first_divergence.is_none()
    }
}

impl ColonySimulator {
    /// Runs a fault-tolerant trial under an adversarial schedule and
    /// compares the decoded trajectory to the fault-free decoding.
    ///
    /// Snapshots decode *before* the faults of a period boundary step are
    /// injected, so the decoded trajectory reflects what the colonies
    /// repaired, not the instant of corruption.
    pub fn run_ftol_trial(
        &self,
        xi2: &Configuration,
        schedule: &FaultSchedule,
        periods: usize,
    ) -> Result<FtolTrialReport> {
        if self.layout.variant != Variant::SingleFaultTolerant {
            return Err(LabError::Parameter(
                "fault trials need the fault-tolerant variant".into(),
            ));
        }
        schedule.validate(&self.layout, xi2.len(), periods)?;
        let reference = self.run_decoded(xi2, periods)?;

        let l = &self.layout;
        let q = l.q;
        let u = l.u;
        let cap = l.sim_capacity as usize;
        let mut host = self.encode_ring(xi2)?;
        let mut decoded = Vec::with_capacity(periods + 1);
        let mut corrupted = Vec::with_capacity(periods);
        decoded.push(self.decode_ring(&host)?);
        for period in 0..periods {
            for step in 0..u {
                for e in schedule
                    .events
                    .iter()
                    .filter(|e| e.period == period && e.step == step)
                {
                    let x = (e.colony * q + e.cell) as i64;
                    let s = host.get(x).state()?;
                    host.set(x, Cell::State(l.set(s, &e.field, e.value)));
                }
                // Inspect the hold thirds right before the final update.
                if step == u - 1 {
                    let mut row = Vec::with_capacity(xi2.len());
                    for colony in 0..xi2.len() {
                        let third = |c: usize| -> u64 {
                            let mut v = 0u64;
                            for bit in 0..cap {
                                let cell = (colony * q + l.copy_base(c) + bit) as i64;
                                v |= l.get(host.get(cell).state().unwrap(), "Hold") << bit;
                            }
                            v
                        };
                        let t = [third(0), third(1), third(2)];
                        let odd = (0..3).find(|&i| {
                            t[i] != t[(i + 1) % 3] && t[i] != t[(i + 2) % 3]
                        });
                        row.push(odd);
                    }
                    corrupted.push(row);
                }
                host = self.step(&host)?;
            }
            decoded.push(self.decode_ring(&host)?);
        }
        let mut first_divergence = None;
        'outer: for (p, (got, want)) in decoded.iter().zip(reference.iter()).enumerate() {
            for (c, (g, w)) in got.iter().zip(want.iter()).enumerate() {
                if g != w {
                    first_divergence = Some((p, c));
                    break 'outer;
                }
            }
        }
        Ok(FtolTrialReport {
            decoded,
            corrupted_thirds: corrupted,
            first_divergence,
        })
    }

    /// Runs just the copy sub-behavior: ships `field1` over the addresses
    /// `[a1, a1+n)` of the colony in direction `i` into `field2` over
    /// `[a2, a2+n)` of every colony, using the mail tracks. The engine runs
    /// one post step plus `2Q` mail steps on a private step counter.
    pub fn run_copy(
        &self,
        cfg: &Configuration,
        i: i64,
        field1: &str,
        a1: usize,
        field2: &str,
        a2: usize,
        n: usize,
    ) -> Result<Configuration> {
        let l = &self.layout;
        if n == 0 {
            return Ok(cfg.clone());
        }
        if !(-1..=1).contains(&i) {
            return Err(LabError::Parameter("copy direction must be -1, 0 or 1".into()));
        }
        if a1 + n > l.q || a2 + n > l.q {
            return Err(LabError::Parameter("copy locations outside the colony".into()));
        }
        if i == 0 && a1 == a2 {
            // Degenerate intra-colony copy: a direct track-to-track move.
            let mut out = cfg.clone();
            for x in 0..cfg.len() {
                let s = out.get(x as i64).state()?;
                let a = l.get(s, "Addr") as usize;
                if a >= a1 && a < a1 + n {
                    let v = l.get(s, field1);
                    out.set(x as i64, Cell::State(l.set(s, field2, v)));
                }
            }
            return Ok(out);
        }
        let m = cfg.len();
        let q = l.q;
        let mut states: Vec<u64> = cfg.states()?;
        // Payload travels opposite to the source direction; intra-colony
        // copies travel toward the target window.
        let dir: i64 = if i != 0 {
            -i
        } else if a2 > a1 {
            1
        } else {
            -1
        };
        let send_track = MailTrack {
            dir,
            cross: i != 0,
        };
        let recv_track = MailTrack { dir, cross: false };
        // Post step.
        for s in states.iter_mut() {
            let a = l.get(*s, "Addr");
            let name = track_name(send_track);
            *s = l.set(*s, &format!("{name}.Fromaddr"), a);
            *s = l.set(*s, &format!("{name}.Fromnb"), nb_tag(i));
            *s = l.set(*s, &format!("{name}.Info"), l.get(*s, field1));
            *s = l.set(*s, &format!("{name}.Status"), 0);
            // Clear the other tracks.
            for t in MAIL_TRACKS.iter().filter(|t| **t != send_track) {
                *s = l.set(*s, &format!("{}.Status", track_name(*t)), 1);
            }
        }
        // Mail steps.
        for _ in 0..2 * q {
            let snapshot = states.clone();
            let addr = |x: usize| l.get(snapshot[x], "Addr") as i64;
            let edge = |x: usize, j: i64| -> Option<u8> {
                let y = (x as i64 + j).rem_euclid(m as i64) as usize;
                let (ax, ay) = (addr(x), addr(y));
                if j == -1 {
                    if ax == ay + 1 {
                        Some(0)
                    } else if ax == 0 && ay == q as i64 - 1 {
                        Some(1)
                    } else {
                        None
                    }
                } else if ay == ax + 1 {
                    Some(0)
                } else if ax == q as i64 - 1 && ay == 0 {
                    Some(1)
                } else {
                    None
                }
            };
            for x in 0..m {
                let mut out = snapshot[x];
                for t in MAIL_TRACKS {
                    let name = track_name(t);
                    let from = (x as i64 - t.dir).rem_euclid(m as i64) as usize;
                    let incoming = match edge(x, -t.dir) {
                        Some(0) => Some((track_name(t), snapshot[from])),
                        Some(1) if !t.cross => Some((
                            track_name(MailTrack {
                                dir: t.dir,
                                cross: true,
                            }),
                            snapshot[from],
                        )),
                        _ => None,
                    };
                    match incoming {
                        Some((src, y)) => {
                            for sub in ["Fromaddr", "Fromnb", "Info", "Status"] {
                                let v = l.get(y, &format!("{src}.{sub}"));
                                out = l.set(out, &format!("{name}.{sub}"), v);
                            }
                        }
                        None => out = l.set(out, &format!("{name}.Status"), 1),
                    }
                }
                let a = addr(x);
                let name = track_name(recv_track);
                if a >= a2 as i64 && a < (a2 + n) as i64 {
                    let status = l.get(out, &format!("{name}.Status"));
                    let fromaddr = l.get(out, &format!("{name}.Fromaddr")) as i64;
                    let fromnb = l.get(out, &format!("{name}.Fromnb"));
                    if status == 0 && fromnb == nb_tag(i) && a - a2 as i64 == fromaddr - a1 as i64
                    {
                        let payload = l.get(out, &format!("{name}.Info"));
                        out = l.set(out, field2, payload);
                    }
                }
                states[x] = out;
            }
        }
        Configuration::from_states(&states)
    }
}

/// Convenience oracle: the simulated trajectory decoded from a fault-free
/// run must match `CA(tr2)` exactly at every period boundary.
pub fn decoded_matches_reference(
    sim: &ColonySimulator,
    xi2: &Configuration,
    periods: usize,
) -> Result<bool> {
    let decoded = sim.run_decoded(xi2, periods)?;
    let reference = evolve(xi2, &sim.tr2, periods)?;
    for (t, row) in decoded.iter().enumerate() {
        for (x, v) in row.iter().enumerate() {
            if *v != Some(reference.frames[t].get(x as i64).state()?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::MasterSeed;

    fn random_rule(cap: u32, seed: u64) -> TransitionFunction {
        let n = 1u64 << cap;
        let mut s = MasterSeed(seed).stream(0, 0);
        let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
        TransitionFunction::from_fn("rand", cap, move |a, b, c| {
            table[(a | b << cap | c << (2 * cap)) as usize]
        })
        .unwrap()
    }

    #[test]
    fn colony_size_lower_bound_rejects() {
        assert!(ColonyLayout::new(1, 2, Variant::Basic).is_err());
        assert!(ColonyLayout::new(5, 2, Variant::SingleFaultTolerant).is_err());
        // 3 | Q required for the fault-tolerant copies.
        assert!(ColonyLayout::new(8, 2, Variant::SingleFaultTolerant).is_err());
    }

    #[test]
    fn work_period_lower_bound_rejects() {
        assert!(ColonyLayout::with_period(8, 10, 2, Variant::Basic).is_err());
        assert!(ColonyLayout::with_period(8, 19, 2, Variant::Basic).is_ok());
    }

    #[test]
    fn encode_decode_identity() {
        for variant in [Variant::Basic, Variant::SingleFaultTolerant] {
            let layout = ColonyLayout::new(9, 3, variant).unwrap();
            for v in 0..8u64 {
                let word = layout.encode_state(v);
                assert_eq!(layout.decode_state(&word), Some(v));
            }
        }
    }

    #[test]
    fn broken_addr_ramp_rejected() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let mut word = layout.encode_state(3);
        // Cell 0 loses its zero address.
        word[0] = layout.set(word[0], "Addr", 5);
        assert_eq!(layout.decode_state(&word), None);
        // A second zero address elsewhere also rejects.
        let mut word = layout.encode_state(3);
        word[4] = layout.set(word[4], "Addr", 0);
        assert_eq!(layout.decode_state(&word), None);
    }

    #[test]
    fn ftol_decode_tolerates_one_corrupt_copy() {
        let layout = ColonyLayout::new(9, 3, Variant::SingleFaultTolerant).unwrap();
        let mut word = layout.encode_state(0b101);
        // Corrupt the whole middle copy.
        for bit in 0..3 {
            let cell = layout.copy_base(1) + bit;
            let flipped = layout.get(word[cell], "Info") ^ 1;
            word[cell] = layout.set(word[cell], "Info", flipped);
        }
        assert_eq!(layout.decode_state(&word), Some(0b101));
    }

    #[test]
    fn identity_rule_constant_decoded_trajectory() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let sim = ColonySimulator::build(layout, TransitionFunction::identity(2)).unwrap();
        let xi2 = Configuration::from_states(&[1, 2, 3]).unwrap();
        let decoded = sim.run_decoded(&xi2, 3).unwrap();
        for row in &decoded {
            assert_eq!(row, &vec![Some(1), Some(2), Some(3)]);
        }
    }

    #[test]
    fn xor_rule_block_simulation_matches_reference() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let sim = ColonySimulator::build(layout, TransitionFunction::xor(2)).unwrap();
        let xi2 = Configuration::from_states(&[1, 0, 3]).unwrap();
        assert!(decoded_matches_reference(&sim, &xi2, 5).unwrap());
    }

    #[test]
    fn random_rules_block_simulation_exact() {
        for trial in 0..5 {
            let tr2 = random_rule(2, 1000 + trial);
            let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
            let sim = ColonySimulator::build(layout, tr2).unwrap();
            let mut s = MasterSeed(2000 + trial).stream(0, 0);
            let xi2 = Configuration::from_states(&[
                s.next_below(4),
                s.next_below(4),
                s.next_below(4),
            ])
            .unwrap();
            assert!(decoded_matches_reference(&sim, &xi2, 3).unwrap(), "trial {trial}");
        }
    }

    #[test]
    fn ftol_variant_simulates_fault_free() {
        let tr2 = random_rule(2, 7);
        let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
        let sim = ColonySimulator::build(layout, tr2).unwrap();
        let xi2 = Configuration::from_states(&[2, 0, 1]).unwrap();
        assert!(decoded_matches_reference(&sim, &xi2, 3).unwrap());
    }

    #[test]
    fn age_coherence_in_fault_free_runs() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let u = layout.u();
        let sim = ColonySimulator::build(layout, TransitionFunction::xor(2)).unwrap();
        let xi2 = Configuration::from_states(&[1, 2, 0]).unwrap();
        let mut host = sim.encode_ring(&xi2).unwrap();
        for t in 0..2 * u {
            for x in 0..host.len() {
                let age = sim.layout().get(host.get(x as i64).state().unwrap(), "Age");
                assert_eq!(age as usize, t % u, "cell {x} at t={t}");
            }
            host = sim.step(&host).unwrap();
        }
    }

    #[test]
    fn empty_fault_schedule_passes() {
        let tr2 = random_rule(2, 11);
        let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
        let sim = ColonySimulator::build(layout, tr2).unwrap();
        let xi2 = Configuration::from_states(&[1, 3, 2]).unwrap();
        let report = sim
            .run_ftol_trial(&xi2, &FaultSchedule::default(), 3)
            .unwrap();
        assert!(report.passed());
        assert!(report
            .corrupted_thirds
            .iter()
            .all(|row| row.iter().all(|c| c.is_none())));
    }

    #[test]
    fn one_info_fault_per_period_is_absorbed() {
        let tr2 = random_rule(2, 13);
        let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
        let u = layout.u();
        let sim = ColonySimulator::build(layout, tr2).unwrap();
        let xi2 = Configuration::from_states(&[1, 3, 2]).unwrap();
        // One info-bit fault in the first round of each period, all colonies.
        let mut events = Vec::new();
        for period in 0..5 {
            for colony in 0..3 {
                events.push(FaultEvent {
                    period,
                    colony,
                    cell: colony % 2,
                    field: "Info".into(),
                    value: 1,
                    step: 3 % u,
                });
            }
        }
        let report = sim
            .run_ftol_trial(&xi2, &FaultSchedule { events }, 5)
            .unwrap();
        assert!(report.passed(), "diverged at {:?}", report.first_divergence);
    }

    #[test]
    fn budget_violation_rejected() {
        let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
        let schedule = FaultSchedule {
            events: vec![
                FaultEvent {
                    period: 0,
                    colony: 1,
                    cell: 0,
                    field: "Info".into(),
                    value: 1,
                    step: 2,
                },
                FaultEvent {
                    period: 0,
                    colony: 1,
                    cell: 5,
                    field: "Age".into(),
                    value: 0,
                    step: 9,
                },
            ],
        };
        assert!(schedule.validate(&layout, 3, 2).is_err());
    }

    #[test]
    fn copy_between_colonies_lands_aligned() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let sim = ColonySimulator::build(layout, TransitionFunction::identity(2)).unwrap();
        let xi2 = Configuration::from_states(&[0, 0, 0]).unwrap();
        let mut host = sim.encode_ring(&xi2).unwrap();
        let l = sim.layout();
        // Put a recognizable pattern on the Info track of colony 0,
        // addresses 2..6.
        for (offset, bit) in [(2usize, 1u64), (3, 0), (4, 1), (5, 1)] {
            let s = host.get(offset as i64).state().unwrap();
            host.set(offset as i64, Cell::State(l.set(s, "Info", bit)));
        }
        // Copy from the left neighbor colony (i = -1) into Work[2..6): for
        // colony 1 the source is colony 0.
        let out = sim.run_copy(&host, -1, "Info", 2, "Work", 2, 4).unwrap();
        for (offset, bit) in [(2usize, 1u64), (3, 0), (4, 1), (5, 1)] {
            let cell = 8 + offset;
            let s = out.get(cell as i64).state().unwrap();
            assert_eq!(l.get(s, "Work"), bit, "cell {cell}");
        }
    }

    #[test]
    fn intra_colony_copy_with_offset() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let sim = ColonySimulator::build(layout, TransitionFunction::identity(2)).unwrap();
        let xi2 = Configuration::from_states(&[0, 0]).unwrap();
        let mut host = sim.encode_ring(&xi2).unwrap();
        let l = sim.layout();
        for (offset, bit) in [(0usize, 1u64), (1, 1), (2, 0), (3, 1)] {
            let s = host.get(offset as i64).state().unwrap();
            host.set(offset as i64, Cell::State(l.set(s, "Info", bit)));
        }
        let out = sim.run_copy(&host, 0, "Info", 0, "Work", 4, 4).unwrap();
        for (d, bit) in [(0usize, 1u64), (1, 1), (2, 0), (3, 1)] {
            let s = out.get((4 + d) as i64).state().unwrap();
            assert_eq!(l.get(s, "Work"), bit, "offset {d}");
        }
    }

    #[test]
    fn empty_copy_is_noop() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let sim = ColonySimulator::build(layout, TransitionFunction::identity(2)).unwrap();
        let host = sim
            .encode_ring(&Configuration::from_states(&[1, 2]).unwrap())
            .unwrap();
        let out = sim.run_copy(&host, -1, "Info", 0, "Work", 0, 0).unwrap();
        assert_eq!(out, host);
    }

    #[test]
    fn mail_log_receives_trace_to_posts() {
        let layout = ColonyLayout::new(8, 2, Variant::Basic).unwrap();
        let u = layout.u();
        let sim = ColonySimulator::build(layout, TransitionFunction::xor(2)).unwrap();
        let xi2 = Configuration::from_states(&[1, 2, 3]).unwrap();
        let mut host = sim.encode_ring(&xi2).unwrap();
        let mut log = MailLog::default();
        for t in 0..u {
            host = sim.step_logged(&host, t, &mut log).unwrap();
        }
        assert!(!log.receives.is_empty());
        for (_, _, _, fromaddr, tag, payload) in &log.receives {
            assert!(
                log.posts
                    .iter()
                    .any(|(_, _, _, fa, tg, pl)| fa == fromaddr && tg == tag && pl == payload),
                "unmatched receive"
            );
        }
    }

    #[test]
    fn ftol_restores_from_two_thirds() {
        // Start a period with one whole copy corrupted; a fault-free period
        // ends perfect.
        let tr2 = random_rule(2, 17);
        let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
        let u = layout.u();
        let sim = ColonySimulator::build(layout, tr2.clone()).unwrap();
        let xi2 = Configuration::from_states(&[1, 3, 2]).unwrap();
        let mut host = sim.encode_ring(&xi2).unwrap();
        let l = sim.layout();
        // Corrupt copy 2 of colony 0 entirely.
        for bit in 0..2usize {
            let cell = (l.copy_base(2) + bit) as i64;
            let s = host.get(cell).state().unwrap();
            host.set(cell, Cell::State(l.set(s, "Info", l.get(s, "Info") ^ 1)));
        }
        for _ in 0..u {
            host = sim.step(&host).unwrap();
        }
        let decoded = sim.decode_ring(&host).unwrap();
        let reference = evolve(&xi2, &tr2, 1).unwrap();
        for (x, v) in decoded.iter().enumerate() {
            assert_eq!(*v, Some(reference.frames[1].get(x as i64).state().unwrap()));
        }
        // And the period end is "perfect": all three copies agree.
        for colony in 0..3usize {
            for bit in 0..2usize {
                let read = |copy: usize| {
                    let cell = (colony * 9 + l.copy_base(copy) + bit) as i64;
                    l.get(host.get(cell).state().unwrap(), "Info")
                };
                assert_eq!(read(0), read(1));
                assert_eq!(read(1), read(2));
            }
        }
    }
}
