//! Code experiments: Reed-Solomon files, hierarchical encodings, and
//! amplifier-frame tables.

use anyhow::{anyhow, bail, Result};
use lab_core::coding::{
    FrameParams, GfContext, HierLevelSpec, HierSystem, RsCode, RsDecodeOutcome,
};
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::config::{Config, RunOutputs};

fn gf_for_degree(l: u32) -> Result<GfContext> {
    let s = match l {
        2 => 0,
        6 => 1,
        18 => 2,
        other => bail!("degree {other} not in the standard family (2, 6, 18)"),
    };
    Ok(GfContext::standard(s)?)
}

fn parse_hex_symbols(text: &str) -> Result<Vec<u64>> {
    text.split_whitespace()
        .map(|w| u64::from_str_radix(w, 16).map_err(|_| anyhow!("bad hex symbol '{w}'")))
        .collect()
}

fn hex_symbols(word: &[u64]) -> String {
    let mut out = String::new();
    for (i, s) in word.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{s:02x}"));
    }
    out.push('\n');
    out
}

/// `lab rs`: encode or decode hex-symbol text files.
pub fn cmd_rs(cfg: &Config, action: &str) -> Result<()> {
    let l: u32 = cfg.parse_or("l", 6)?;
    let n: usize = cfg.parse_or("n", 10)?;
    let t: usize = cfg.parse_or("t", 3)?;
    let input = cfg.require("in")?.to_string();
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let rs = RsCode::new(gf_for_degree(l)?, n, t)?;
    let symbols = parse_hex_symbols(&std::fs::read_to_string(&input)?)?;
    match action {
        "encode" => {
            let word = rs.encode(&symbols)?;
            outputs.write("codeword.txt", &hex_symbols(&word))?;
            println!("encoded_symbols={}", word.len());
            outputs.finish("rs-encode", cfg)
        }
        "decode" => {
            match rs.decode(&symbols)? {
                RsDecodeOutcome::Decoded {
                    info,
                    corrected_positions,
                } => {
                    outputs.write("decoded.txt", &hex_symbols(&info))?;
                    let list: Vec<String> =
                        corrected_positions.iter().map(|p| p.to_string()).collect();
                    println!("corrected_positions={}", list.join(";"));
                    outputs.finish("rs-decode", cfg)
                }
                RsDecodeOutcome::Failure => {
                    outputs.finish("rs-decode", cfg)?;
                    bail!("decoding failed: more than {t} errors");
                }
            }
        }
        other => bail!("unknown rs action '{other}' (expected encode or decode)"),
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|w| w.trim().parse().map_err(|_| anyhow!("bad list entry '{w}'")))
        .collect()
}

/// `lab hier`: build a hierarchical code, verify its properties, encode a
/// payload, and check the site map recovers every visible symbol.
pub fn cmd_hier(cfg: &Config) -> Result<()> {
    let q = parse_usize_list(&cfg.str_or("q", "4,4,4"))?;
    let qi = parse_usize_list(&cfg.str_or("qinfo", "2,2,2"))?;
    let a = parse_usize_list(&cfg.str_or("a", "1,1,1"))?;
    let payload_width: u32 = cfg.parse_or("payload_width", 2)?;
    let ring: usize = cfg.parse_or("ring", 64)?;
    let payload_text = cfg.get("payload").map(str::to_string);
    let seed: u64 = cfg.parse_or("seed", 0)?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    if q.len() != qi.len() || q.len() != a.len() {
        bail!("q, qinfo and a must have the same length");
    }
    let levels: Vec<HierLevelSpec> = q
        .iter()
        .zip(&qi)
        .zip(&a)
        .map(|((&q_big, &q_info), &a)| HierLevelSpec { q_big, q_info, a })
        .collect();
    let sys = HierSystem::new(payload_width, levels, ring)?;
    sys.verify_properties()?;
    let (lo, len) = sys.visible_range();
    println!("visible={lo}..{}", lo + len as i64);

    // Payload: explicit bit string (payload_width bits per symbol) or
    // seeded random symbols.
    let rho: Vec<u64> = match payload_text {
        Some(text) => {
            let bits: Vec<u64> = text
                .trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u64),
                    '1' => Ok(1u64),
                    other => Err(anyhow!("payload must be binary, got '{other}'")),
                })
                .collect::<Result<_>>()?;
            if bits.len() != len * payload_width as usize {
                bail!(
                    "payload needs {} bits, got {}",
                    len * payload_width as usize,
                    bits.len()
                );
            }
            (0..len)
                .map(|i| {
                    (0..payload_width as usize).fold(0u64, |acc, b| {
                        acc | bits[i * payload_width as usize + b] << b
                    })
                })
                .collect()
        }
        None => {
            let mut s = lab_core::MasterSeed(seed).stream(0, 0);
            (0..len).map(|_| s.next_below(1 << payload_width)).collect()
        }
    };
    let enc = sys.encode_payload(&rho)?;
    let host = sys.host_configuration(&enc);
    outputs.write(
        "host.txt",
        &lab_core::render::dump_configuration(&host, sys.capacity(1)),
    )?;
    let mut ok = true;
    for (i, &sym) in rho.iter().enumerate() {
        let y = lo + i as i64;
        let x = sys.site_map(y)?;
        if sys.field_of(1, host.get(x).state()?) != sym {
            ok = false;
        }
    }
    println!("site_map_recovery={}", if ok { "exact" } else { "mismatch" });
    outputs.finish("hier", cfg)?;
    if !ok {
        bail!("payload recovery through the site map failed");
    }
    Ok(())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| anyhow!("bad rational '{s}'"))?;
        let d: BigInt = den.trim().parse().map_err(|_| anyhow!("bad rational '{s}'"))?;
        if d == BigInt::from(0) {
            bail!("zero denominator in '{s}'");
        }
        Ok(BigRational::new(n, d))
    } else if let Some((mantissa, exp)) = s.split_once(['e', 'E']) {
        // Scientific notation with an integer mantissa, e.g. 1e-4.
        let m: BigInt = mantissa.parse().map_err(|_| anyhow!("bad rational '{s}'"))?;
        let e: i32 = exp.parse().map_err(|_| anyhow!("bad exponent in '{s}'"))?;
        let base = BigInt::from(10).pow(e.unsigned_abs());
        Ok(if e >= 0 {
            BigRational::from_integer(m * base)
        } else {
            BigRational::new(m, base)
        })
    } else {
        let n: BigInt = s.parse().map_err(|_| anyhow!("bad rational '{s}'"))?;
        Ok(BigRational::from_integer(n))
    }
}

/// `lab frame`: derive and check a broadcast amplifier frame.
pub fn cmd_frame(cfg: &Config) -> Result<()> {
    let preset = cfg.str_or("preset", "brc");
    if preset != "brc" {
        bail!("unknown preset '{preset}'");
    }
    let c: u64 = cfg.parse_or("c", 10)?;
    let k: usize = cfg.parse_or("k", 10)?;
    let eps = parse_rational(&cfg.str_or("eps", "1/10000"))?;
    let eps_prime = parse_rational(&cfg.str_or("eps_prime", &cfg.str_or("eps", "1/10000")))?;
    let r0 = parse_rational(&cfg.str_or("r0", "1/2"))?;
    let mut outputs = RunOutputs::new(cfg.out_dir()?);
    cfg.reject_unknown()?;

    let params = FrameParams::brc_example(c, k, r0, eps, eps_prime);
    let derived = params.derive()?;
    let report = params.check(k)?;

    // Aligned text table of the inputs and derived sequences.
    let mut table = String::new();
    table.push_str(&format!(
        "{:>3} {:>10} {:>12} {:>6} {:>12} {:>24} {:>24}\n",
        "k", "Q_k", "U_k", "cap_k", "nu_k", "eps_k", "eps''_k"
    ));
    let approx = |r: &BigRational| -> String {
        // Short decimal approximation for the table; CSV keeps exact values.
        let f = rational_to_f64(r);
        if f != 0.0 && (f.abs() < 1e-4 || f.abs() >= 1e6) {
            format!("{f:.6e}")
        } else {
            format!("{f:.6}")
        }
    };
    for i in 0..k.min(params.levels()) {
        table.push_str(&format!(
            "{:>3} {:>10} {:>12} {:>6} {:>12} {:>24} {:>24}\n",
            i + 1,
            params.q[i],
            params.u[i],
            params.cap[i],
            approx(&derived.nu[i]),
            approx(&derived.eps[i]),
            approx(&derived.eps_dprime[i]),
        ));
    }
    table.push_str(&format!("violations: {}\n", report.violations.len()));
    for v in &report.violations {
        table.push_str(&format!("  level {}: {}\n", v.level, v.condition));
    }
    table.push_str(&format!("exp_error_bound_holds: {}\n", report.exp_error_holds));
    table.push_str(&format!(
        "superexp_error_bound_holds: {}\n",
        report.superexp_error_holds
    ));
    outputs.write("frame.txt", &table)?;

    // Exact CSV.
    let mut csv = String::from("k,Q,U,cap,nu,eps,eps_dprime,eps_prime\n");
    for i in 0..k.min(params.levels()) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            i + 1,
            params.q[i],
            params.u[i],
            params.cap[i],
            derived.nu[i],
            derived.eps[i],
            derived.eps_dprime[i],
            derived.eps_prime[i.min(derived.eps_prime.len() - 1)],
        ));
    }
    outputs.write("frame.csv", &csv)?;

    println!("violations={}", report.violations.len());
    println!("exp_error_bound={}", report.exp_error_holds);
    println!("superexp_error_bound={}", report.superexp_error_holds);
    outputs.finish("frame", cfg)
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
