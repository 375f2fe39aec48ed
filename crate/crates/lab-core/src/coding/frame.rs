//! Amplifier-frame parameter calculus in exact rational arithmetic.
//!
//! A broadcast amplifier frame is given by sequences `Q_k`, `U_k`, `cap_k`
//! and a constant `R_0`, together with base constants `Tlo_1 <= Thi_1` and
//! `eps_1, eps'_1 < 1 / R_0^2`. The derived sequences are
//!
//! ```text
//! B_k       = prod_{i<k} Q_i
//! nu_k      = 1 + R_0 Q_k / U_k   (1 when Tlo_1 = Thi_1)
//! Tlo_k     = Tlo_1 prod_{i<k} U_i / nu_i
//! Thi_k     = Thi_1 prod_{i<k} U_i nu_i
//! eps_{k+1} = 25 (Q_k U_k nu_k eps_k)^2
//! eps''_k   = 4 Q_k U_k nu_k eps_k
//! eps'_k    = eps'_1 + sum_{i<k} eps''_i
//! ```
//!
//! The validity conditions checked per level are the bandwidth, capacity and
//! work-period lower bounds, the error upper bound, and time stability;
//! logarithmic comparisons are made exact by comparing integer powers.
//! Everything is `BigRational`, since the error sequence underflows any
//! fixed-precision float within a few levels.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

fn rat_int(n: u64) -> BigRational {
    BigRational::from_integer(big(n))
}

/// Frame inputs: per-level integer sequences (index 0 is level 1) and the
/// rational base constants.
#[derive(Debug, Clone)]
pub struct FrameParams {
    pub q: Vec<BigInt>,
    pub u: Vec<BigInt>,
    pub cap: Vec<BigInt>,
    pub r0: BigRational,
    pub t_lo1: BigRational,
    pub t_hi1: BigRational,
    pub eps1: BigRational,
    pub eps_prime1: BigRational,
}

/// Derived sequences, index 0 is level 1.
#[derive(Debug, Clone)]
pub struct FrameDerived {
    pub b: Vec<BigInt>,
    pub nu: Vec<BigRational>,
    pub t_lo: Vec<BigRational>,
    pub t_hi: Vec<BigRational>,
    pub eps: Vec<BigRational>,
    pub eps_dprime: Vec<BigRational>,
    pub eps_prime: Vec<BigRational>,
}

/// One violated frame condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameViolation {
    pub level: usize,
    pub condition: &'static str,
}

/// Outcome of `frame_check`.
#[derive(Debug, Clone)]
pub struct FrameCheckReport {
    pub violations: Vec<FrameViolation>,
    /// `eps_k <= eps^(1.5^(k-1))` for every checked level.
    pub exp_error_holds: bool,
    /// `eps_k <= eps^(2^(k-2) + (k+1)/4)` for every checked level.
    pub superexp_error_holds: bool,
}

impl FrameCheckReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl FrameParams {
    /// The polynomial example frame: `Q_k = c^2 k^2`, `U_k = c^3 k^4`,
    /// `cap_k = c * max(ceil(log2 k), 1)`, `Tlo_1 = 1`, `Thi_1 = 2`.
    ///
    /// The capacity sequence rounds `log2 k` up to an integer so that every
    /// parameter stays rational.
    pub fn brc_example(
        c: u64,
        levels: usize,
        r0: BigRational,
        eps1: BigRational,
        eps_prime1: BigRational,
    ) -> Self {
        let q = (1..=levels as u64).map(|k| big(c * c * k * k)).collect();
        let u = (1..=levels as u64).map(|k| big(c * c * c * k * k * k * k)).collect();
        let cap = (1..=levels as u64)
            .map(|k| {
                let log_ceil = (64 - (k - 1).leading_zeros() as u64).max(1);
                big(c * log_ceil.max(1))
            })
            .collect();
        FrameParams {
            q,
            u,
            cap,
            r0,
            t_lo1: rat_int(1),
            t_hi1: rat_int(2),
            eps1,
            eps_prime1,
        }
    }

    pub fn levels(&self) -> usize {
        self.q.len()
    }

    /// Evaluates the derived sequences exactly. Requires
    /// `eps_1, eps'_1 < 1 / R_0^2` and positive sequences.
    pub fn derive(&self) -> Result<FrameDerived> {
        let k_max = self.levels();
        if k_max == 0 || self.u.len() != k_max || self.cap.len() != k_max {
            return Err(LabError::Parameter(
                "frame sequences must be nonempty and equally long".into(),
            ));
        }
        for (name, seq) in [("Q", &self.q), ("U", &self.u), ("cap", &self.cap)] {
            if seq.iter().any(|v| !v.is_positive()) {
                return Err(LabError::Parameter(format!(
                    "frame sequence {name} must be positive"
                )));
            }
        }
        if self.r0 <= BigRational::zero() {
            return Err(LabError::Parameter("R_0 must be positive".into()));
        }
        if self.eps1.is_negative() || self.eps_prime1.is_negative() {
            return Err(LabError::Parameter("error bounds must be nonnegative".into()));
        }
        let r0_sq_inv = (self.r0.clone() * self.r0.clone()).recip();
        if self.eps1 >= r0_sq_inv || self.eps_prime1 >= r0_sq_inv {
            return Err(LabError::Parameter(
                "need eps_1, eps'_1 < 1 / R_0^2".into(),
            ));
        }
        if self.t_lo1 > self.t_hi1 || !self.t_lo1.is_positive() {
            return Err(LabError::Parameter("need 0 < Tlo_1 <= Thi_1".into()));
        }

        let lockstep = self.t_lo1 == self.t_hi1;
        let mut b = vec![BigInt::one()];
        let mut nu = Vec::with_capacity(k_max);
        let mut t_lo = vec![self.t_lo1.clone()];
        let mut t_hi = vec![self.t_hi1.clone()];
        let mut eps = vec![self.eps1.clone()];
        let mut eps_dprime = Vec::with_capacity(k_max);
        let mut eps_prime = vec![self.eps_prime1.clone()];

        for k in 0..k_max {
            let qk = BigRational::from_integer(self.q[k].clone());
            let uk = BigRational::from_integer(self.u[k].clone());
            let nu_k = if lockstep {
                BigRational::one()
            } else {
                BigRational::one() + self.r0.clone() * qk.clone() / uk.clone()
            };
            let quv = qk * uk * nu_k.clone();
            let scaled = quv.clone() * eps[k].clone();
            eps_dprime.push(rat_int(4) * scaled.clone());
            if k + 1 < k_max {
                b.push(b[k].clone() * self.q[k].clone());
                let u_over_nu = BigRational::from_integer(self.u[k].clone()) / nu_k.clone();
                let u_times_nu = BigRational::from_integer(self.u[k].clone()) * nu_k.clone();
                t_lo.push(t_lo[k].clone() * u_over_nu);
                t_hi.push(t_hi[k].clone() * u_times_nu);
                eps.push(rat_int(25) * scaled.clone() * scaled);
                eps_prime.push(eps_prime[k].clone() + eps_dprime[k].clone());
            }
            nu.push(nu_k);
        }
        Ok(FrameDerived {
            b,
            nu,
            t_lo,
            t_hi,
            eps,
            eps_dprime,
            eps_prime,
        })
    }

    /// Evaluates the broadcast-frame conditions for levels `1..=k_max` and
    /// reports whether the two error-decay bounds hold numerically.
    pub fn check(&self, k_max: usize) -> Result<FrameCheckReport> {
        let k_max = k_max.min(self.levels());
        let d = self.derive()?;
        let mut violations = Vec::new();
        for k in 1..=k_max {
            let i = k - 1;
            // Bandwidth lower bound: cap_k >= R_0 log2(U_k).
            let lhs = BigRational::from_integer(self.cap[i].clone()) / self.r0.clone();
            if !ratio_ge_log2(&lhs, &self.u[i]) {
                violations.push(FrameViolation {
                    level: k,
                    condition: "bandwidth-lower-bound",
                });
            }
            // Capacity lower bound: R_0 cap_{k+1} <= Q_k cap_k.
            if k < k_max {
                let lhs = self.r0.clone() * BigRational::from_integer(self.cap[i + 1].clone());
                let rhs = BigRational::from_integer(self.q[i].clone() * self.cap[i].clone());
                if lhs > rhs {
                    violations.push(FrameViolation {
                        level: k,
                        condition: "capacity-lower-bound",
                    });
                }
            }
            // Work period lower bound: U_k >= R_0 (log2 Q_k + log2 k) Q_k,
            // i.e. U_k / (R_0 Q_k) >= log2(k Q_k).
            let lhs = BigRational::from_integer(self.u[i].clone())
                / (self.r0.clone() * BigRational::from_integer(self.q[i].clone()));
            let arg = self.q[i].clone() * BigInt::from(k as u64);
            if !ratio_ge_log2(&lhs, &arg) {
                violations.push(FrameViolation {
                    level: k,
                    condition: "work-period-lower-bound",
                });
            }
            // Error upper bound: eps_k^(1/5) ... stated as
            // eps_k^0.2 <= R_0 / (Q_k U_k), i.e. eps_k <= (R_0 / (Q_k U_k))^5.
            let bound = (self.r0.clone()
                / BigRational::from_integer(self.q[i].clone() * self.u[i].clone()))
            .pow(5);
            if d.eps[i] > bound {
                violations.push(FrameViolation {
                    level: k,
                    condition: "error-upper-bound",
                });
            }
            // Time stability: Thi_k / Tlo_k <= 3.
            if d.t_hi[i].clone() / d.t_lo[i].clone() > rat_int(3) {
                violations.push(FrameViolation {
                    level: k,
                    condition: "time-stability",
                });
            }
        }

        // eps_k <= eps^(1.5^(k-1))  <=>  eps_k^(2^(k-1)) <= eps^(3^(k-1)).
        let mut exp_error_holds = true;
        // eps_k <= eps^(2^(k-2) + (k+1)/4)  <=>  eps_k^4 <= eps^(2^k + k + 1).
        let mut superexp_error_holds = true;
        for k in 1..=k_max {
            let i = k - 1;
            let e = &d.eps[i];
            if self.eps1.is_zero() {
                if !e.is_zero() {
                    exp_error_holds = false;
                    superexp_error_holds = false;
                }
                continue;
            }
            let lhs = e.pow(1i32 << (k - 1).min(31));
            let rhs = self.eps1.pow(3i32.pow((k - 1) as u32));
            if lhs > rhs {
                exp_error_holds = false;
            }
            let lhs = e.pow(4);
            let rhs = self.eps1.pow((1i64 << k) as i32 + k as i32 + 1);
            if lhs > rhs {
                superexp_error_holds = false;
            }
        }
        Ok(FrameCheckReport {
            violations,
            exp_error_holds,
            superexp_error_holds,
        })
    }
}

/// Exact comparison `ratio >= log2(n)` for positive rational `ratio` and
/// integer `n >= 1`, via `2^p >= n^q` where `ratio = p / q`.
fn ratio_ge_log2(ratio: &BigRational, n: &BigInt) -> bool {
    if *n <= BigInt::one() {
        return !ratio.is_negative();
    }
    if ratio.is_negative() {
        return false;
    }
    let p = ratio.numer().clone();
    let q = ratio.denom().clone();
    // 2^p and n^q can be large; the exponents stay at desk scale by
    // construction (p / q is a per-level work or capacity ratio).
    let p_u32: u32 = match p.try_into() {
        Ok(v) => v,
        Err(_) => return true, // astronomically large ratio
    };
    let q_u32: u32 = q.try_into().expect("denominator fits u32");
    BigInt::from(2).pow(p_u32) >= n.pow(q_u32)
}
