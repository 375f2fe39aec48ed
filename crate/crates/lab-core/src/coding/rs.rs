//! Reed-Solomon codes over `GF(2^l)` in the syndrome view.
//!
//! A codeword is a vector `c` of `n` field elements with
//! `sum_i alpha_i^j c(i) = 0` for `j = 1..=2t`, where the `alpha_i` are
//! distinct nonzero evaluation points. The first `n - 2t` symbols carry
//! information; the last `2t` are determined by solving the check system,
//! which is always solvable because its matrix is Vandermonde-like.
//!
//! Decoding locates up to `t` errors by solving the key equation for the
//! locator polynomial and finding its roots by trial over the inverses of
//! the evaluation points, then verifies the corrected word against every
//! check equation before accepting it.

use super::gf::GfContext;
use crate::error::{LabError, Result};

#[derive(Debug, Clone)]
pub struct RsCode {
    ctx: GfContext,
    n: usize,
    t: usize,
    points: Vec<u64>,
}

/// Decode result: a failure is a normal outcome, not an internal error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RsDecodeOutcome {
    Decoded {
        info: Vec<u64>,
        corrected_positions: Vec<usize>,
    },
    Failure,
}

impl RsCode {
    /// Evaluation points default to `alpha^1 .. alpha^n` for the field
    /// generator `alpha`.
    pub fn new(ctx: GfContext, n: usize, t: usize) -> Result<Self> {
        let g = ctx.generator();
        let points = (1..=n as u64).map(|i| ctx.pow(g, i)).collect();
        RsCode::with_points(ctx, n, t, points)
    }

    pub fn with_points(ctx: GfContext, n: usize, t: usize, points: Vec<u64>) -> Result<Self> {
        if n == 0 || n as u64 > ctx.order() {
            return Err(LabError::Parameter(format!(
                "codeword length {n} outside [1, {}]",
                ctx.order()
            )));
        }
        if 2 * t >= n {
            return Err(LabError::Parameter(format!(
                "error capability t={t} needs 2t < n={n}"
            )));
        }
        if points.len() != n {
            return Err(LabError::Parameter("need one evaluation point per symbol".into()));
        }
        for (i, &p) in points.iter().enumerate() {
            if p == 0 || !ctx.contains(p) {
                return Err(LabError::Parameter(format!(
                    "evaluation point {i} must be a nonzero field element"
                )));
            }
            if points[..i].contains(&p) {
                return Err(LabError::Parameter(format!(
                    "evaluation point {i} repeats an earlier one"
                )));
            }
        }
        Ok(RsCode { ctx, n, t, points })
    }

    /// The 12-error-correcting instance over `GF(2^6)` used as a workhorse:
    /// `info_len` information symbols plus 24 check symbols.
    pub fn preset_t12(info_len: usize) -> Result<Self> {
        RsCode::new(GfContext::standard(1)?, info_len + 24, 12)
    }

    /// The companion 6-error-correcting instance over `GF(2^6)`.
    pub fn preset_t6(info_len: usize) -> Result<Self> {
        RsCode::new(GfContext::standard(1)?, info_len + 12, 6)
    }

    pub fn ctx(&self) -> &GfContext {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn info_len(&self) -> usize {
        self.n - 2 * self.t
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    /// Encodes `info` (length `n - 2t`) into a codeword of length `n`.
    pub fn encode(&self, info: &[u64]) -> Result<Vec<u64>> {
        if info.len() != self.info_len() {
            return Err(LabError::Parameter(format!(
                "info length {} != {}",
                info.len(),
                self.info_len()
            )));
        }
        for &s in info {
            if !self.ctx.contains(s) {
                return Err(LabError::Parameter(format!("symbol {s:#x} outside field")));
            }
        }
        let k = self.info_len();
        let r = 2 * self.t;
        // sum_{i >= k} alpha_i^j c_i = sum_{i < k} alpha_i^j info_i (char 2).
        let mut m = vec![vec![0u64; r]; r];
        let mut rhs = vec![0u64; r];
        for j in 1..=r {
            for (col, &p) in self.points[k..].iter().enumerate() {
                m[j - 1][col] = self.ctx.pow(p, j as u64);
            }
            rhs[j - 1] = info
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &s)| acc ^ self.ctx.mul(self.ctx.pow(self.points[i], j as u64), s));
        }
        let checks = self
            .ctx
            .solve(&m, &rhs)?
            .ok_or(LabError::SingularSystem)?;
        let mut word = info.to_vec();
        word.extend(checks);
        Ok(word)
    }

    /// Syndromes `S_j = sum_i word(i) * alpha_i^j` for `j = 1..=2t`.
    pub fn syndromes(&self, word: &[u64]) -> Result<Vec<u64>> {
        if word.len() != self.n {
            return Err(LabError::Parameter(format!(
                "word length {} != {}",
                word.len(),
                self.n
            )));
        }
        Ok((1..=2 * self.t as u64)
            .map(|j| {
                word.iter()
                    .enumerate()
                    .fold(0, |acc, (i, &c)| acc ^ self.ctx.mul(c, self.ctx.pow(self.points[i], j)))
            })
            .collect())
    }

    fn is_codeword(&self, word: &[u64]) -> Result<bool> {
        Ok(self.syndromes(word)?.iter().all(|&s| s == 0))
    }

    /// Corrects up to `t` symbol errors. For each candidate error count the
    /// key-equation system is solved for the locator coefficients, the
    /// locator's roots are found by trial over the point inverses, error
    /// values are recovered from the syndrome equations, and the corrected
    /// word is verified against all check equations.
    pub fn decode(&self, word: &[u64]) -> Result<RsDecodeOutcome> {
        let s = self.syndromes(word)?;
        if s.iter().all(|&v| v == 0) {
            return Ok(RsDecodeOutcome::Decoded {
                info: word[..self.info_len()].to_vec(),
                corrected_positions: Vec::new(),
            });
        }
        for nu in 1..=self.t {
            // Key equation: sum_{s=1..nu} L_s S_{j+nu-s} = S_{j+nu}, j=1..nu.
            let mut m = vec![vec![0u64; nu]; nu];
            let mut rhs = vec![0u64; nu];
            for j in 1..=nu {
                for col in 1..=nu {
                    m[j - 1][col - 1] = s[j + nu - col - 1];
                }
                rhs[j - 1] = s[j + nu - 1];
            }
            let Some(lambda) = self.ctx.solve(&m, &rhs)? else {
                continue;
            };
            // Roots of Lambda(x) = 1 + sum L_s x^s by trial over alpha_i^-1.
            let mut positions = Vec::new();
            for (i, &p) in self.points.iter().enumerate() {
                let x = self.ctx.inv(p)?;
                let mut v = 1u64;
                let mut xp = 1u64;
                for &l in &lambda {
                    xp = self.ctx.mul(xp, x);
                    v ^= self.ctx.mul(l, xp);
                }
                if v == 0 {
                    positions.push(i);
                }
            }
            if positions.len() != nu {
                continue;
            }
            // Error values from S_j = sum_r Y_r X_r^j, j = 1..nu.
            let mut vm = vec![vec![0u64; nu]; nu];
            for j in 1..=nu {
                for (col, &i) in positions.iter().enumerate() {
                    vm[j - 1][col] = self.ctx.pow(self.points[i], j as u64);
                }
            }
            let Some(values) = self.ctx.solve(&vm, &s[..nu])? else {
                continue;
            };
            if values.iter().any(|&y| y == 0) {
                continue;
            }
            let mut corrected = word.to_vec();
            for (&i, &y) in positions.iter().zip(values.iter()) {
                corrected[i] ^= y;
            }
            if self.is_codeword(&corrected)? {
                return Ok(RsDecodeOutcome::Decoded {
                    info: corrected[..self.info_len()].to_vec(),
                    corrected_positions: positions,
                });
            }
        }
        Ok(RsDecodeOutcome::Failure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::MasterSeed;

    fn code_l6() -> RsCode {
        RsCode::new(GfContext::standard(1).unwrap(), 10, 3).unwrap()
    }

    #[test]
    fn zero_info_encodes_to_zero() {
        let rs = code_l6();
        assert_eq!(rs.encode(&[0, 0, 0, 0]).unwrap(), vec![0; 10]);
    }

    #[test]
    fn codewords_have_zero_syndromes() {
        let rs = code_l6();
        let mut s = MasterSeed(100).stream(0, 0);
        for _ in 0..50 {
            let info: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let w = rs.encode(&info).unwrap();
            assert!(rs.syndromes(&w).unwrap().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn single_error_syndrome_is_scaled_powers() {
        let rs = code_l6();
        let f = rs.ctx().clone();
        let w = rs.encode(&[5, 20, 33, 1]).unwrap();
        let (i, e) = (6usize, 17u64);
        let mut corrupted = w.clone();
        corrupted[i] ^= e;
        let s = rs.syndromes(&corrupted).unwrap();
        for (jm1, &sj) in s.iter().enumerate() {
            let expect = f.mul(e, f.pow(rs.points()[i], jm1 as u64 + 1));
            assert_eq!(sj, expect);
        }
    }

    #[test]
    fn encode_is_linear() {
        let rs = code_l6();
        let mut s = MasterSeed(101).stream(0, 0);
        for _ in 0..500 {
            let a: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let b: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let ab: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let wa = rs.encode(&a).unwrap();
            let wb = rs.encode(&b).unwrap();
            let wab = rs.encode(&ab).unwrap();
            let sum: Vec<u64> = wa.iter().zip(&wb).map(|(x, y)| x ^ y).collect();
            assert_eq!(wab, sum);
        }
    }

    #[test]
    fn uncorrupted_word_decodes_clean() {
        let rs = code_l6();
        let info = vec![9, 0, 63, 41];
        let w = rs.encode(&info).unwrap();
        match rs.decode(&w).unwrap() {
            RsDecodeOutcome::Decoded {
                info: got,
                corrected_positions,
            } => {
                assert_eq!(got, info);
                assert!(corrected_positions.is_empty());
            }
            RsDecodeOutcome::Failure => panic!("clean word failed"),
        }
    }

    #[test]
    fn corrects_all_weights_up_to_t() {
        let rs = code_l6();
        let seed = MasterSeed(102);
        let mut s = seed.stream(0, 0);
        for trial in 0..2000 {
            let info: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let w = rs.encode(&info).unwrap();
            let weight = (trial % 4) as usize; // 0..=3 = t
            let mut corrupted = w.clone();
            let mut positions = Vec::new();
            while positions.len() < weight {
                let p = s.next_below(10) as usize;
                if !positions.contains(&p) {
                    positions.push(p);
                }
            }
            for &p in &positions {
                corrupted[p] ^= 1 + s.next_below(63);
            }
            positions.sort_unstable();
            match rs.decode(&corrupted).unwrap() {
                RsDecodeOutcome::Decoded {
                    info: got,
                    corrected_positions,
                } => {
                    assert_eq!(got, info, "trial {trial}");
                    assert_eq!(corrected_positions, positions, "trial {trial}");
                }
                RsDecodeOutcome::Failure => panic!("trial {trial} failed at weight {weight}"),
            }
        }
    }

    #[test]
    fn beyond_capability_never_verifies_a_non_codeword() {
        let rs = code_l6();
        let seed = MasterSeed(103);
        let mut s = seed.stream(0, 0);
        for _ in 0..300 {
            let info: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let w = rs.encode(&info).unwrap();
            let mut corrupted = w.clone();
            let mut positions = Vec::new();
            while positions.len() < 4 {
                let p = s.next_below(10) as usize;
                if !positions.contains(&p) {
                    positions.push(p);
                }
            }
            for &p in &positions {
                corrupted[p] ^= 1 + s.next_below(63);
            }
            match rs.decode(&corrupted).unwrap() {
                RsDecodeOutcome::Decoded { info: got, .. } => {
                    // Allowed to land on a different codeword, but whatever
                    // is returned must re-encode to a true codeword.
                    let again = rs.encode(&got).unwrap();
                    assert!(rs.syndromes(&again).unwrap().iter().all(|&v| v == 0));
                }
                RsDecodeOutcome::Failure => {}
            }
        }
    }

    #[test]
    fn presets_have_expected_shape() {
        let t12 = RsCode::preset_t12(30).unwrap();
        assert_eq!(t12.len(), 54);
        assert_eq!(t12.t(), 12);
        let t6 = RsCode::preset_t6(20).unwrap();
        assert_eq!(t6.len(), 32);
        assert_eq!(t6.t(), 6);
    }

    #[test]
    fn roundtrip_after_decode_reproduces_word() {
        let rs = code_l6();
        let mut s = MasterSeed(104).stream(0, 0);
        for _ in 0..200 {
            let info: Vec<u64> = (0..4).map(|_| s.next_below(64)).collect();
            let w = rs.encode(&info).unwrap();
            if let RsDecodeOutcome::Decoded { info: got, .. } = rs.decode(&w).unwrap() {
                assert_eq!(rs.encode(&got).unwrap(), w);
            } else {
                panic!("decode failed");
            }
        }
    }
}
