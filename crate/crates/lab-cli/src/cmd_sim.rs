//! Simulation experiments: block simulation, fault-tolerant trials, and
//! asynchronous runs.

use anyhow::{anyhow, bail, Result};
use lab_core::asyncsim::{
    check_invariant_histories, lift_marching, run_variable_period, CommutMode, DwellModel,
    UpdateSchedule,
};
use lab_core::colony::{ColonyLayout, ColonySimulator, FaultEvent, FaultSchedule, Variant};
use lab_core::dynamics::evolve;
use lab_core::render::dump_configuration;
use lab_core::{Cell, Configuration, MasterSeed, TransitionFunction};

use crate::config::{Config, RunOutputs};

fn random_rule(cap: u32, seed: u64) -> TransitionFunction {
    let n = 1u64 << cap;
    let mut s = MasterSeed(seed).stream(0, 0);
    let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
    TransitionFunction::from_fn("random", cap, move |a, b, c| {
        table[(a | b << cap | c << (2 * cap)) as usize]
    })
    .unwrap()
}

fn sim_rule(name: &str, cap: u32, seed: u64) -> Result<TransitionFunction> {
    Ok(match name {
        "identity" => TransitionFunction::identity(cap),
        "xor" => TransitionFunction::xor(cap),
        "majority" => TransitionFunction::majority(cap),
        "random" => random_rule(cap, seed),
        other => bail!("unknown rule '{other}'"),
    })
}

fn random_start(cap: u32, cells: usize, seed: MasterSeed) -> Configuration {
    let mut s = seed.stream(0, 1);
    Configuration::from_states(
        &(0..cells)
            .map(|_| s.next_below(1u64 << cap))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

/// Renders a decoded trajectory in the common dump format, with `.` for
/// rejected colonies.
fn dump_decoded(rows: &[Vec<Option<u64>>], cap: u32) -> String {
    let mut out = String::new();
    for row in rows {
        let cfg = Configuration::new(
            row.iter()
                .map(|v| match v {
                    Some(s) => Cell::State(*s),
                    None => Cell::Vac,
                })
                .collect(),
        )
        .unwrap();
        out.push_str(&dump_configuration(&cfg, cap));
        out.push('\n');
    }
    out
}

/// `lab blocksim`: fault-free colony simulation checked against the
/// directly simulated rule.
pub fn cmd_blocksim(cfg: &Config) -> Result<()> {
    let q: usize = cfg.parse_or("q", 32)?;
    let cap: u32 = cfg.parse_or("cap", 2)?;
    let colonies: usize = cfg.parse_or("colonies", 3)?;
    let periods: usize = cfg.parse_or("periods", 5)?;
    let rule = cfg.str_or("rule", "xor");
    let seed = cfg.seed()?;
    let u: usize = cfg.parse_or("u", ColonyLayout::min_work_period(q, Variant::Basic))?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let tr2 = sim_rule(&rule, cap, seed)?;
    let layout = ColonyLayout::with_period(q, u, cap, Variant::Basic)?;
    let sim = ColonySimulator::build(layout, tr2.clone())?;
    let xi2 = random_start(cap, colonies, MasterSeed(seed));
    let decoded = sim.run_decoded(&xi2, periods)?;
    outputs.write("decoded.txt", &dump_decoded(&decoded, cap))?;
    // Image of the decoded stride trajectory, one row per work period.
    let frames: Vec<Configuration> = decoded
        .iter()
        .map(|row| {
            Configuration::new(
                row.iter()
                    .map(|v| v.map(Cell::State).unwrap_or(Cell::Vac))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let traj = lab_core::Trajectory {
        capacity: cap,
        frames,
        switch_times: None,
        rng_seed: Some(seed),
    };
    outputs.write("decoded.pgm", &lab_core::render::trajectory_to_pgm(&traj))?;

    let reference = evolve(&xi2, &tr2, periods)?;
    let mut ok = true;
    for (t, row) in decoded.iter().enumerate() {
        for (x, v) in row.iter().enumerate() {
            if *v != Some(reference.frames[t].get(x as i64).state()?) {
                ok = false;
            }
        }
    }
    println!("periods={periods}");
    println!("verdict={}", if ok { "exact" } else { "mismatch" });
    outputs.finish("blocksim", cfg)?;
    if !ok {
        bail!("decoded trajectory diverged from the simulated rule");
    }
    Ok(())
}

fn parse_schedule_csv(text: &str) -> Result<FaultSchedule> {
    let mut events = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || ln == 0 && line.starts_with("period") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 5 || parts.len() > 6 {
            bail!("schedule line {}: expected 5 or 6 columns", ln + 1);
        }
        let parse = |i: usize| -> Result<usize> {
            parts[i]
                .parse()
                .map_err(|_| anyhow!("schedule line {}: bad number '{}'", ln + 1, parts[i]))
        };
        events.push(FaultEvent {
            period: parse(0)?,
            colony: parse(1)?,
            cell: parse(2)?,
            field: parts[3].to_string(),
            value: parts[4]
                .parse()
                .map_err(|_| anyhow!("schedule line {}: bad value", ln + 1))?,
            step: if parts.len() == 6 { parse(5)? } else { 0 },
        });
    }
    Ok(FaultSchedule { events })
}

fn schedule_csv(schedule: &FaultSchedule) -> String {
    let mut out = String::from("period,colony,cell,field,value,step\n");
    for e in &schedule.events {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.period, e.colony, e.cell, e.field, e.value, e.step
        ));
    }
    out
}

fn random_schedule(
    layout: &ColonyLayout,
    colonies: usize,
    periods: usize,
    seed: MasterSeed,
) -> FaultSchedule {
    const TARGETS: &[&str] = &[
        "Info", "Addr", "Age", "Ret_m1_0", "Ret_0_0", "Ret_p1_0", "Ret_m1_1", "Ret_0_1",
        "Ret_p1_1", "Ret_m1_2", "Ret_0_2", "Ret_p1_2", "Out", "Hold",
    ];
    let mut s = seed.stream(0, 2);
    let mut events = Vec::new();
    for period in 0..periods {
        for colony in 0..colonies {
            let field = TARGETS[s.next_below(TARGETS.len() as u64) as usize];
            let width = layout.fields().width(field).unwrap();
            events.push(FaultEvent {
                period,
                colony,
                cell: s.next_below(layout.q() as u64) as usize,
                field: field.to_string(),
                value: s.next_u64() & ((1u64 << width) - 1),
                step: s.next_below(layout.u() as u64) as usize,
            });
        }
    }
    FaultSchedule { events }
}

/// `lab ftol`: single-fault-tolerant trial under an adversarial schedule.
pub fn cmd_ftol(cfg: &Config) -> Result<()> {
    let q: usize = cfg.parse_or("q", 30)?;
    let cap: u32 = cfg.parse_or("cap", 2)?;
    let colonies: usize = cfg.parse_or("colonies", 3)?;
    let periods: usize = cfg.parse_or("periods", 5)?;
    let rule = cfg.str_or("rule", "random");
    let schedule_path = cfg.get("schedule").map(str::to_string);
    let seed = cfg.seed()?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let tr2 = sim_rule(&rule, cap, seed)?;
    let layout = ColonyLayout::new(q, cap, Variant::SingleFaultTolerant)?;
    let sim = ColonySimulator::build(layout, tr2)?;
    let xi2 = random_start(cap, colonies, MasterSeed(seed));
    let schedule = match schedule_path {
        Some(path) => parse_schedule_csv(&std::fs::read_to_string(path)?)?,
        None => random_schedule(sim.layout(), colonies, periods, MasterSeed(seed).derive(7)),
    };
    outputs.write("schedule.csv", &schedule_csv(&schedule))?;
    let report = sim.run_ftol_trial(&xi2, &schedule, periods)?;
    outputs.write("decoded.txt", &dump_decoded(&report.decoded, cap))?;
    let mut thirds = String::from("period,colony,corrupted_third\n");
    for (p, row) in report.corrupted_thirds.iter().enumerate() {
        for (c, t) in row.iter().enumerate() {
            let label = t.map(|v| v.to_string()).unwrap_or_default();
            thirds.push_str(&format!("{p},{c},{label}\n"));
        }
    }
    outputs.write("thirds.csv", &thirds)?;
    println!(
        "verdict={}",
        if report.passed() { "pass" } else { "fail" }
    );
    outputs.finish("ftol", cfg)?;
    if !report.passed() {
        bail!(
            "decoded trajectory diverged at {:?}",
            report.first_divergence
        );
    }
    Ok(())
}

fn schedules_csv(schedules: &[Vec<Vec<usize>>]) -> String {
    let mut out = String::from("schedule,t,sites\n");
    for (i, sched) in schedules.iter().enumerate() {
        for (t, sites) in sched.iter().enumerate() {
            let list: Vec<String> = sites.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("{i},{t},{}\n", list.join(";")));
        }
    }
    out
}

/// `lab async`: invariant histories under random schedules, or a
/// variable-period run with decoding.
pub fn cmd_async(cfg: &Config) -> Result<()> {
    let mode = cfg.str_or("mode", "histories");
    let seed = cfg.seed()?;
    match mode.as_str() {
        "histories" => {
            let ring: usize = cfg.parse_or("ring", 16)?;
            let steps: usize = cfg.parse_or("steps", 100)?;
            let count: usize = cfg.parse_or("schedules", 100)?;
            let period: u32 = cfg.parse_or("u", 3)?;
            let check_commut: usize = cfg.parse_or("check_commutative", 1)?;
            let mut outputs = RunOutputs::new(cfg.out_dir()?);
            cfg.reject_unknown()?;

            let master = MasterSeed(seed);
            let tr2 = random_rule(1, seed);
            let lifted = lift_marching(&tr2, period)?;
            if check_commut != 0 {
                let verdict = lab_core::asyncsim::is_commutative(
                    &lifted,
                    CommutMode::Exhaustive { ring: 5 },
                )?;
                println!("commutative={}", verdict.is_commutative());
            }
            let xi2 = random_start(1, ring, master.derive(1));
            let xi1 = lab_core::asyncsim::marching_encode(&xi2, 1, period)?;
            let schedules: Vec<UpdateSchedule> = (0..count)
                .map(|i| UpdateSchedule::RandomP {
                    p: 0.2 + 0.6 * (i as f64 / count.max(1) as f64),
                    seed: master.derive(100 + i as u64),
                })
                .collect();
            // Serialize the first few schedules for inspection.
            let materialized: Vec<Vec<Vec<usize>>> = schedules
                .iter()
                .take(3)
                .map(|s| match s {
                    UpdateSchedule::RandomP { p, seed } => (0..steps)
                        .map(|t| {
                            (0..ring)
                                .filter(|&x| {
                                    let mut st = seed.stream(t as u64, x as u64);
                                    st.next_f64() < *p
                                })
                                .collect()
                        })
                        .collect(),
                    _ => Vec::new(),
                })
                .collect();
            outputs.write("schedules.csv", &schedules_csv(&materialized))?;
            let verdict = check_invariant_histories(&lifted, &xi1, &schedules, steps)?;
            println!("invariant_histories={}", verdict.holds());
            outputs.finish("async", cfg)?;
            if !verdict.holds() {
                bail!("invariant histories violated");
            }
            Ok(())
        }
        "varperiod" => {
            let ring: usize = cfg.parse_or("ring", 8)?;
            let steps: usize = cfg.parse_or("steps", 50)?;
            let period: u32 = cfg.parse_or("u", 4)?;
            let t_lo: f64 = cfg.parse_or("t_lo", 0.5)?;
            let t_hi: f64 = cfg.parse_or("t_hi", 1.0)?;
            let horizon: f64 = cfg.parse_or("horizon", (steps as f64) * t_hi * 2.0 + 8.0)?;
            let rule = cfg.str_or("rule", "xor");
            let mut outputs = RunOutputs::new(cfg.out_dir()?);
            cfg.reject_unknown()?;

            let tr2 = sim_rule(&rule, 1, seed)?;
            let xi2 = random_start(1, ring, MasterSeed(seed).derive(1));
            let dwell = DwellModel::uniform(t_lo, t_hi)?;
            let run = run_variable_period(
                &tr2,
                &xi2,
                period,
                &dwell,
                steps,
                horizon,
                MasterSeed(seed),
            )?;
            let rows: Vec<Vec<Option<u64>>> = run
                .decoded
                .iter()
                .map(|f| f.cells().iter().map(|c| c.state().ok()).collect())
                .collect();
            outputs.write("decoded.txt", &dump_decoded(&rows, 1))?;
            let reference = evolve(&xi2, &tr2, run.decoded.len() - 1)?;
            let exact = run
                .decoded
                .iter()
                .enumerate()
                .all(|(t, f)| f == &reference.frames[t]);
            println!("partial={}", run.partial);
            println!("verdict={}", if exact { "exact" } else { "mismatch" });
            outputs.finish("async", cfg)?;
            if !exact {
                bail!("variable-period decoding diverged");
            }
            Ok(())
        }
        other => bail!("unknown mode '{other}' (expected histories or varperiod)"),
    }
}
