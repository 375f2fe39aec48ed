//! Randomized adversarial schedules against the fault-tolerant simulator:
//! one fault per colony per work period, targeting any field at any step,
//! must never change the decoded trajectory.

use lab_core::colony::{ColonyLayout, ColonySimulator, FaultEvent, FaultSchedule, Variant};
use lab_core::{Configuration, MasterSeed, TransitionFunction};

fn random_rule(cap: u32, seed: u64) -> TransitionFunction {
    let n = 1u64 << cap;
    let mut s = MasterSeed(seed).stream(0, 0);
    let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
    TransitionFunction::from_fn("rand", cap, move |a, b, c| {
        table[(a | b << cap | c << (2 * cap)) as usize]
    })
    .unwrap()
}

fn all_fields(layout: &ColonyLayout) -> Vec<String> {
    layout.fields().names().map(str::to_string).collect()
}

fn random_schedule(
    layout: &ColonyLayout,
    fields: &[String],
    colonies: usize,
    periods: usize,
    seed: MasterSeed,
) -> FaultSchedule {
    let mut s = seed.stream(0, 0);
    let mut events = Vec::new();
    for period in 0..periods {
        for colony in 0..colonies {
            let field = &fields[s.next_below(fields.len() as u64) as usize];
            let width = layout.fields().width(field).unwrap();
            let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            events.push(FaultEvent {
                period,
                colony,
                cell: s.next_below(layout.q() as u64) as usize,
                field: field.clone(),
                value: s.next_u64() & mask,
                step: s.next_below(layout.u() as u64) as usize,
            });
        }
    }
    FaultSchedule { events }
}

#[test]
fn randomized_single_faults_never_corrupt_decoding() {
    let seed = MasterSeed(0xf701);
    let layout = ColonyLayout::new(9, 2, Variant::SingleFaultTolerant).unwrap();
    // Any field at all, including the mail tracks themselves.
    let fields = all_fields(&layout);
    for trial in 0..150u64 {
        let tr2 = random_rule(2, 5000 + trial);
        let sim = ColonySimulator::build(layout.clone(), tr2).unwrap();
        let mut s = seed.stream(trial, 1);
        let xi2 = Configuration::from_states(&[
            s.next_below(4),
            s.next_below(4),
            s.next_below(4),
        ])
        .unwrap();
        let schedule = random_schedule(sim.layout(), &fields, 3, 4, seed.derive(trial));
        let report = sim.run_ftol_trial(&xi2, &schedule, 4).unwrap();
        assert!(
            report.passed(),
            "trial {trial} diverged at {:?} with schedule {:?}",
            report.first_divergence,
            schedule.events
        );
    }
}

#[test]
fn randomized_faults_at_acceptance_scale() {
    // Same shape as the acceptance run: Q = 30, three colonies, five work
    // periods, faults on the information, address, age and computation
    // fields. A handful of schedules here; the full 200 run in acceptance.
    let seed = MasterSeed(0xf702);
    let layout = ColonyLayout::new(30, 2, Variant::SingleFaultTolerant).unwrap();
    let fields: Vec<String> = [
        "Info", "Addr", "Age", "Ret_m1_0", "Ret_0_0", "Ret_p1_0", "Ret_m1_1", "Ret_0_1",
        "Ret_p1_1", "Ret_m1_2", "Ret_0_2", "Ret_p1_2", "Out",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for trial in 0..10u64 {
        let tr2 = random_rule(2, 8000 + trial);
        let sim = ColonySimulator::build(layout.clone(), tr2).unwrap();
        let mut s = seed.stream(trial, 1);
        let xi2 = Configuration::from_states(&[
            s.next_below(4),
            s.next_below(4),
            s.next_below(4),
        ])
        .unwrap();
        let schedule = random_schedule(sim.layout(), &fields, 3, 5, seed.derive(trial));
        let report = sim.run_ftol_trial(&xi2, &schedule, 5).unwrap();
        assert!(report.passed(), "trial {trial} diverged at {:?}", report.first_divergence);
    }
}
