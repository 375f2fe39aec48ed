//! Counter-based random number generation.
//!
//! Every random decision in the crate is a pure function of
//! `(master seed, trial, cell, draw counter)`. Streams for distinct
//! `(trial, cell)` pairs are independent, so trials can run in any order or
//! in parallel and still reproduce bit-for-bit.
//!
//! The generator is the SplitMix64 finalizer over a derived stream seed.
//! It is a statistical generator, not a cryptographic one.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of a reproducible randomness tree for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterSeed(pub u64);

impl MasterSeed {
    /// Stream for one `(trial, cell)` pair.
    pub fn stream(&self, trial: u64, cell: u64) -> Stream {
        // Feed the coordinates through the mixer one at a time so that
        // (trial, cell) and (trial', cell') collide only if the pairs match.
        let s = mix(mix(mix(self.0 ^ GOLDEN).wrapping_add(trial)).wrapping_add(cell));
        Stream { state: s, ctr: 0 }
    }

    /// Derives an independent master seed for a named sub-experiment.
    pub fn derive(&self, tag: u64) -> MasterSeed {
        MasterSeed(mix(self.0.wrapping_add(GOLDEN).wrapping_add(tag)))
    }
}

/// One independent stream of draws.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    state: u64,
    ctr: u64,
}

impl Stream {
    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.state.wrapping_add(self.ctr.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN));
        self.ctr += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`. Uses rejection to avoid modulo bias.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        if n.is_power_of_two() {
            return self.next_u64() & (n - 1);
        }
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform real in `[lo, hi)`.
    pub fn next_range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Exponential with the given rate.
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        assert!(rate > 0.0);
        let u = 1.0 - self.next_f64(); // in (0, 1]
        -u.ln() / rate
    }
}
