//! CSV rendering of experiment metrics.
//!
//! Format: comma-separated, one header row, LF line endings, deterministic
//! row order. The shared metric schema is
//! `experiment, seed, t, site, p0_hat, p1_hat, d_hat`; retention rows leave
//! `d_hat` empty and relaxation rows leave the probe columns empty.

use std::fmt::Write as _;

use crate::fault::{RelaxationEstimate, RetentionOutcome};

pub const METRIC_HEADER: &str = "experiment,seed,t,site,p0_hat,p1_hat,d_hat";

fn fmt_prob(p: f64) -> String {
    // Probabilities are multiples of 1/trials; 10 digits round-trip them.
    format!("{p:.10}")
}

/// Rows for a retention outcome: both starts, probes in (t, site) order.
pub fn retention_csv(experiment: &str, seed: u64, outcome: &RetentionOutcome) -> String {
    let mut out = String::from(METRIC_HEADER);
    out.push('\n');
    for report in &outcome.reports {
        let name = format!("{experiment}/start{}", report.encoded);
        let mut probes: Vec<_> = report.probes.iter().collect();
        probes.sort_by_key(|p| (p.time, p.site));
        for p in probes {
            let _ = writeln!(
                out,
                "{name},{seed},{},{},{},{},",
                p.time,
                p.site,
                fmt_prob(p.p0_hat),
                fmt_prob(p.p1_hat)
            );
        }
    }
    out
}

/// Rows for a relaxation curve, one per time step.
pub fn relaxation_csv(experiment: &str, seed: u64, est: &RelaxationEstimate) -> String {
    let mut out = String::from(METRIC_HEADER);
    out.push('\n');
    for (t, d) in est.curve.iter().enumerate() {
        let _ = writeln!(out, "{experiment},{seed},{t},,,,{}", fmt_prob(*d));
    }
    out
}
