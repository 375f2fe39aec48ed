//! Arithmetic in `GF(2^l)` represented as binary polynomials modulo an
//! irreducible polynomial over `GF(2)`.
//!
//! Irreducibility of the modulus is verified at construction by trial
//! division against every polynomial of degree 1 through `l/2`, which is
//! cheap for the supported range `l <= 18`. The family
//! `x^(2*3^s) + x^(3^s) + 1` is irreducible for every `s` and provides the
//! default moduli.

use crate::error::{LabError, Result};

/// Maximum supported extension degree.
pub const MAX_DEGREE: u32 = 18;

/// Degree of a polynomial bitmask (`deg(0)` returns 0 here; callers guard).
fn degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

/// Polynomial remainder of `a` modulo `m` over GF(2).
fn poly_rem(mut a: u64, m: u64) -> u64 {
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

/// Carry-less polynomial product (fits in u64 for our degrees).
fn poly_mul(a: u64, b: u64) -> u64 {
    let mut out = 0u64;
    let mut a = a;
    let mut k = 0;
    while a != 0 {
        if a & 1 == 1 {
            out ^= b << k;
        }
        a >>= 1;
        k += 1;
    }
    out
}

/// Field context: modulus, size, and discrete-log tables for fast
/// multiplication (built for `l <= 16`, on-the-fly reduction above).
#[derive(Debug, Clone)]
pub struct GfContext {
    degree: u32,
    modulus: u64,
    order: u64,
    generator: u64,
    /// log[a] for a in 1..2^l; log[generator^k] = k.
    log: Vec<u32>,
    /// antilog[k] = generator^k for k in 0..order.
    antilog: Vec<u64>,
}

impl GfContext {
    /// Builds the field from an explicit modulus polynomial of degree `l`
    /// (bit `l` and bit 0 must be set). Verifies irreducibility.
    pub fn new(l: u32, modulus: u64) -> Result<Self> {
        if l < 1 || l > MAX_DEGREE {
            return Err(LabError::Parameter(format!(
                "extension degree {l} outside [1, {MAX_DEGREE}]"
            )));
        }
        if degree(modulus) != l || modulus & 1 == 0 {
            return Err(LabError::Parameter(format!(
                "modulus {modulus:#b} is not a degree-{l} polynomial with nonzero constant term"
            )));
        }
        // Exhaustive trial division by every polynomial of degree 1..=l/2.
        for d in 1..=(l / 2) {
            for q in (1u64 << d)..(1u64 << (d + 1)) {
                if poly_rem(modulus, q) == 0 {
                    return Err(LabError::NotIrreducible(l));
                }
            }
        }
        let order = (1u64 << l) - 1;
        let generator = find_generator(l, modulus, order)?;
        let (log, antilog) = if l <= 16 {
            let mut log = vec![0u32; 1 << l];
            let mut antilog = vec![0u64; order as usize];
            let mut v = 1u64;
            for k in 0..order {
                antilog[k as usize] = v;
                log[v as usize] = k as u32;
                v = poly_rem(poly_mul(v, generator), modulus);
            }
            (log, antilog)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(GfContext {
            degree: l,
            modulus,
            order,
            generator,
            log,
            antilog,
        })
    }

    /// The modulus family `x^(2*3^s) + x^(3^s) + 1`, irreducible for all `s`.
    /// Supported here for `s` in `{0, 1, 2}` (degrees 2, 6, 18).
    pub fn standard(s: u32) -> Result<Self> {
        if s > 2 {
            return Err(LabError::Parameter(format!(
                "standard family degree 2*3^{s} exceeds {MAX_DEGREE}"
            )));
        }
        let h = 3u32.pow(s);
        let l = 2 * h;
        let modulus = (1u64 << l) | (1u64 << h) | 1;
        GfContext::new(l, modulus)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Multiplicative group order `2^l - 1`.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    pub fn contains(&self, a: u64) -> bool {
        a >> self.degree == 0
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.log.is_empty() {
            poly_rem(poly_mul(a, b), self.modulus)
        } else {
            let k = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % self.order;
            self.antilog[k as usize]
        }
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        if !self.log.is_empty() {
            let k = (self.log[a as usize] as u128 * e as u128 % self.order as u128) as u64;
            return self.antilog[k as usize];
        }
        let mut base = a;
        let mut out = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(out, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        out
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(LabError::RuleRuntime("inverse of zero".into()));
        }
        Ok(self.pow(a, self.order - 1))
    }

    /// Solves the linear system `M x = rhs` over the field by Gaussian
    /// elimination. Returns `None` when `M` is singular.
    pub fn solve(&self, m: &[Vec<u64>], rhs: &[u64]) -> Result<Option<Vec<u64>>> {
        let n = rhs.len();
        let mut a: Vec<Vec<u64>> = m
            .iter()
            .map(|row| {
                let mut r = row.clone();
                r.truncate(n);
                r
            })
            .collect();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0);
            let Some(p) = pivot else {
                return Ok(None);
            };
            a.swap(col, p);
            b.swap(col, p);
            let inv = self.inv(a[col][col])?;
            for j in col..n {
                a[col][j] = self.mul(a[col][j], inv);
            }
            b[col] = self.mul(b[col], inv);
            for r in 0..n {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for j in col..n {
                        a[r][j] ^= self.mul(f, a[col][j]);
                    }
                    b[r] ^= self.mul(f, b[col]);
                }
            }
        }
        Ok(Some(b))
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn find_generator(l: u32, modulus: u64, order: u64) -> Result<u64> {
    let factors = prime_factors(order);
    let pow = |a: u64, mut e: u64| -> u64 {
        let mut base = a;
        let mut out = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                out = poly_rem(poly_mul(out, base), modulus);
            }
            base = poly_rem(poly_mul(base, base), modulus);
            e >>= 1;
        }
        out
    };
    for cand in 2..(1u64 << l) {
        if factors.iter().all(|&p| pow(cand, order / p) != 1) {
            return Ok(cand);
        }
    }
    Err(LabError::Parameter("no generator found".into()))
}
