//! Shared fixtures for the benchmarks.

use lab_core::{Configuration, MasterSeed, TransitionFunction};

/// Table-backed random rule over `cap` bits.
pub fn random_rule(cap: u32, seed: u64) -> TransitionFunction {
    let n = 1u64 << cap;
    let mut s = MasterSeed(seed).stream(0, 0);
    let table: Vec<u64> = (0..n * n * n).map(|_| s.next_below(n)).collect();
    TransitionFunction::from_fn("rand", cap, move |a, b, c| {
        table[(a | b << cap | c << (2 * cap)) as usize]
    })
    .unwrap()
}

/// Random ring configuration.
pub fn random_ring(cap: u32, cells: usize, seed: u64) -> Configuration {
    let mut s = MasterSeed(seed).stream(0, 1);
    Configuration::from_states(
        &(0..cells)
            .map(|_| s.next_below(1u64 << cap))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}
