//! `lab` — experiment harness for the cellular-automaton reliability
//! laboratory.
//!
//! Usage: `lab <subcommand> [--config FILE] [--key value ...]`
//! Most experiments require `--seed N --out DIR`. Outputs are CSV metric
//! files, plain-text dumps, ASCII PGM/PPM renders, and a `manifest.txt`
//! with the config echo and output digests. Runs are bit-reproducible for a
//! fixed seed.

mod cmd_codes;
mod cmd_noise;
mod cmd_sim;
mod config;

use anyhow::{bail, Result};
use config::Config;

const USAGE: &str = "\
usage: lab <subcommand> [--config FILE] [--key value ...]

subcommands:
  toom-memory   retention of the initial fill on the noisy majority torus
                (m, eps, t, trials, render, seed, out)
  relax         relaxation-time estimate on a noisy ring
                (rule, m, window, delta, horizon, trials, eps, compare_double, seed, out)
  blocksim      fault-free colony block simulation vs the simulated rule
                (q, u, cap, colonies, periods, rule, seed, out)
  ftol          single-fault-tolerant trial under an adversarial schedule
                (q, cap, colonies, periods, rule, schedule, seed, out)
  async         invariant histories or variable-period decoding
                (mode=histories|varperiod, ring, steps, schedules, u,
                 t_lo, t_hi, horizon, rule, check_commutative, seed, out)
  hier          hierarchical code build, verification and site-map check
                (q, qinfo, a, payload_width, ring, payload, seed, out)
  rs encode     Reed-Solomon encode of a hex-symbol file (l, n, t, in, out)
  rs decode     Reed-Solomon decode with error correction (l, n, t, in, out)
  frame         broadcast amplifier-frame derivation and checks
                (preset=brc, c, k, eps, eps_prime, r0, out)
  rulecheck F   validate a .rule file and dump its syntax tree
";

fn run() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(sub) = args.first() else {
        eprint!("{USAGE}");
        std::process::exit(2);
    };
    match sub.as_str() {
        "rulecheck" => {
            let Some(path) = args.get(1) else {
                bail!("usage: lab rulecheck <file>");
            };
            let text = std::fs::read_to_string(path)?;
            let prog = lab_core::rulelang::parse(&text)?;
            print!("{}", prog.dump());
            Ok(())
        }
        "rs" => {
            let Some(action) = args.get(1) else {
                bail!("usage: lab rs encode|decode --in FILE --out DIR [...]");
            };
            let cfg = Config::from_args(&args[2..])?;
            cmd_codes::cmd_rs(&cfg, action)
        }
        "toom-memory" => cmd_noise::cmd_toom_memory(&Config::from_args(&args[1..])?),
        "relax" => cmd_noise::cmd_relax(&Config::from_args(&args[1..])?),
        "blocksim" => cmd_sim::cmd_blocksim(&Config::from_args(&args[1..])?),
        "ftol" => cmd_sim::cmd_ftol(&Config::from_args(&args[1..])?),
        "async" => cmd_sim::cmd_async(&Config::from_args(&args[1..])?),
        "hier" => cmd_codes::cmd_hier(&Config::from_args(&args[1..])?),
        "frame" => cmd_codes::cmd_frame(&Config::from_args(&args[1..])?),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => {
            eprint!("{USAGE}");
            bail!("unknown subcommand '{other}'");
        }
    }
}

fn main() {
    if let Err(e) = run() {
        // One machine-parsable error line.
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
