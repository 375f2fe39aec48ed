//! Noise experiments: torus retention and ring relaxation curves.

use anyhow::{bail, Result};
use lab_core::fault::{
    relaxation_estimate, toom_retention_experiment, FaultModel, RelaxDynamics,
};
use lab_core::render::toom_to_ppm;
use lab_core::report::{relaxation_csv, retention_csv};
use lab_core::toom::{ToomGrid, ToomRun};
use lab_core::{MasterSeed, TransitionFunction, TransitionMatrix};

use crate::config::{Config, RunOutputs};

/// `lab toom-memory`: does the majority torus remember its initial fill?
pub fn cmd_toom_memory(cfg: &Config) -> Result<()> {
    let m: usize = cfg.parse_or("m", 50)?;
    let eps: f64 = cfg.parse_or("eps", 0.01)?;
    let t_max: usize = cfg.parse_or("t", 10_000)?;
    let trials: usize = cfg.parse_or("trials", 20)?;
    let render: usize = cfg.parse_or("render", 1)?;
    let seed = cfg.seed()?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let fm = FaultModel::uniform_wrong(eps, 1)?;
    let outcome = toom_retention_experiment(m, &fm, t_max, trials, MasterSeed(seed));
    outputs.write("retention.csv", &retention_csv("toom-memory", seed, &outcome))?;

    if render != 0 {
        // Rerun one trial per start for the final-state pictures.
        for encoded in [0u8, 1] {
            let mut run = ToomRun::new(
                ToomGrid::filled(m, encoded),
                fm.clone(),
                MasterSeed(seed).derive(encoded as u64),
                0,
            );
            for _ in 0..t_max {
                run.step();
            }
            outputs.write(&format!("final_start{encoded}.ppm"), &toom_to_ppm(run.grid()))?;
        }
    }

    let min0 = outcome.reports[0].min_correct();
    let min1 = outcome.reports[1].min_correct();
    let radius = outcome.reports[0].radius;
    println!("min_p_correct_start0={min0:.6}");
    println!("min_p_correct_start1={min1:.6}");
    println!("threshold={:.6}", 2.0 / 3.0 + radius);
    println!(
        "verdict={}",
        if outcome.retains { "retains" } else { "does-not-retain" }
    );
    outputs.finish("toom-memory", cfg)
}

fn named_rule(name: &str) -> Result<TransitionFunction> {
    Ok(match name {
        "identity" => TransitionFunction::identity(1),
        "majority" => TransitionFunction::majority(1),
        "xor" => TransitionFunction::xor(1),
        other => bail!("unknown rule '{other}' (expected identity, majority or xor)"),
    })
}

/// `lab relax`: relaxation-time estimate on a noisy ring.
pub fn cmd_relax(cfg: &Config) -> Result<()> {
    let rule = cfg.str_or("rule", "majority");
    let m: usize = cfg.parse_or("m", 32)?;
    let window: usize = cfg.parse_or("window", 1)?;
    let delta: f64 = cfg.parse_or("delta", 0.05)?;
    let horizon: usize = cfg.parse_or("horizon", 400)?;
    let trials: usize = cfg.parse_or("trials", 400)?;
    let eps: f64 = cfg.parse_or("eps", 0.05)?;
    let compare_double: usize = cfg.parse_or("compare_double", 0)?;
    let seed = cfg.seed()?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let master = MasterSeed(seed);
    let estimate_for = |ring: usize, tag: u64| -> Result<_> {
        Ok(if rule == "coin" {
            let p = TransitionMatrix::constant_row(1, vec![0.5, 0.5])?;
            relaxation_estimate(
                RelaxDynamics::Matrix(&p),
                ring,
                window,
                delta,
                horizon,
                trials,
                master.derive(tag),
            )?
        } else {
            let tr = named_rule(&rule)?;
            let fm = FaultModel::uniform_wrong(eps, 1)?;
            relaxation_estimate(
                RelaxDynamics::Perturbed(&tr, &fm),
                ring,
                window,
                delta,
                horizon,
                trials,
                master.derive(tag),
            )?
        })
    };

    let est = estimate_for(m, 0)?;
    outputs.write("relax.csv", &relaxation_csv("relax", seed, &est))?;
    match est.r_hat {
        Some(r) => println!("r_hat={r}"),
        None => println!("r_hat=>{horizon}"),
    }
    if compare_double != 0 {
        let est2 = estimate_for(2 * m, 1)?;
        outputs.write("relax_double.csv", &relaxation_csv("relax-2m", seed, &est2))?;
        // Uniform forgetfulness direction: reported, never asserted.
        match (est.r_hat, est2.r_hat) {
            (Some(a), Some(b)) => println!(
                "uniform_forgetfulness_report=r_hat_m={a},r_hat_2m={b},doubling_increased={}",
                b > a
            ),
            _ => println!("uniform_forgetfulness_report=inconclusive"),
        }
    }
    outputs.finish("relax", cfg)
}
