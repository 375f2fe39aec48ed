//! The concurrency contract: immutable engine objects are shareable across
//! threads, and independent trials reproduce regardless of scheduling.

use std::sync::Arc;

use lab_core::coding::{GfContext, HierSystem, RsCode};
use lab_core::colony::{ColonyLayout, ColonySimulator};
use lab_core::fault::{perturbed_run, FaultModel};
use lab_core::rulelang::RuleProgram;
use lab_core::{Configuration, MasterSeed, Trajectory, TransitionFunction, TransitionMatrix};

fn assert_send_sync<T: Send + Sync>() {}

#[test]
fn shared_objects_are_send_and_sync() {
    assert_send_sync::<TransitionFunction>();
    assert_send_sync::<TransitionMatrix>();
    assert_send_sync::<Trajectory>();
    assert_send_sync::<Configuration>();
    assert_send_sync::<FaultModel>();
    assert_send_sync::<RuleProgram>();
    assert_send_sync::<RsCode>();
    assert_send_sync::<GfContext>();
    assert_send_sync::<HierSystem>();
    assert_send_sync::<ColonyLayout>();
    assert_send_sync::<ColonySimulator>();
}

#[test]
fn parallel_trials_match_serial_trials() {
    let tr = Arc::new(TransitionFunction::majority(1));
    let fm = Arc::new(FaultModel::uniform_wrong(0.05, 1).unwrap());
    let cfg = Configuration::uniform(0, 32).unwrap();
    let seed = MasterSeed(0x7442);

    let serial: Vec<_> = (0..8u64)
        .map(|trial| {
            perturbed_run(&cfg, &tr, &fm, seed, trial, 50).unwrap().1
        })
        .collect();

    let handles: Vec<_> = (0..8u64)
        .map(|trial| {
            let tr = Arc::clone(&tr);
            let fm = Arc::clone(&fm);
            let cfg = cfg.clone();
            std::thread::spawn(move || perturbed_run(&cfg, &tr, &fm, seed, trial, 50).unwrap().1)
        })
        .collect();
    for (trial, h) in handles.into_iter().enumerate() {
        assert_eq!(h.join().unwrap(), serial[trial]);
    }
}
