//! Block codes: one outer symbol encoded as a word of `Q` inner symbols.
//!
//! Decoding distinguishes accepted words from rejected ones; rejection is
//! reported as `None` (the vacant value). All codes used for simulations are
//! overlap-free: two accepted words cannot overlap nontrivially.

use crate::error::{LabError, Result};
use crate::rng::MasterSeed;
use crate::state::FieldMap;

/// A block code between an inner alphabet (capacity `inner_capacity` bits)
/// and an outer alphabet (capacity `outer_capacity` bits).
pub trait BlockCode {
    fn block_size(&self) -> usize;
    fn inner_capacity(&self) -> u32;
    fn outer_capacity(&self) -> u32;
    /// Encodes an outer symbol into a word of `block_size` inner symbols.
    fn encode(&self, r: u64) -> Vec<u64>;
    /// Decodes a word; `None` means the word is rejected.
    fn decode(&self, word: &[u64]) -> Option<u64>;
}

/// The address-and-payload code: cell `i` carries its address `i` in the
/// `Addr` field and one payload bit in the `Info` field (first `payload_len`
/// cells only); all other bits are zero. A word is accepted when its base is
/// the only cell with address zero.
#[derive(Debug, Clone)]
pub struct AddrInfoCode {
    q: usize,
    capacity: u32,
    payload_len: u32,
    fields: FieldMap,
}

impl AddrInfoCode {
    pub fn new(q: usize, capacity: u32, payload_len: u32) -> Result<Self> {
        if q < 2 {
            return Err(LabError::Parameter("block size must be at least 2".into()));
        }
        let addr_bits = usize::BITS - (q - 1).leading_zeros();
        if addr_bits + 1 > capacity {
            return Err(LabError::Parameter(format!(
                "capacity {capacity} too small for {addr_bits} address bits plus info"
            )));
        }
        if payload_len as usize > q {
            return Err(LabError::Parameter(format!(
                "payload length {payload_len} exceeds block size {q}"
            )));
        }
        let mut fields = FieldMap::new(capacity);
        fields.declare("Addr", (0..addr_bits).collect())?;
        fields.declare("Info", vec![capacity - 1])?;
        Ok(AddrInfoCode {
            q,
            capacity,
            payload_len,
            fields,
        })
    }

    pub fn fields(&self) -> &FieldMap {
        &self.fields
    }
}

impl BlockCode for AddrInfoCode {
    fn block_size(&self) -> usize {
        self.q
    }

    fn inner_capacity(&self) -> u32 {
        self.capacity
    }

    fn outer_capacity(&self) -> u32 {
        self.payload_len
    }

    fn encode(&self, r: u64) -> Vec<u64> {
        (0..self.q)
            .map(|i| {
                let mut s = self.fields.set(0, "Addr", i as u64).unwrap();
                if (i as u32) < self.payload_len {
                    s = self.fields.set(s, "Info", (r >> i) & 1).unwrap();
                }
                s
            })
            .collect()
    }

    fn decode(&self, word: &[u64]) -> Option<u64> {
        if word.len() != self.q {
            return None;
        }
        for (i, &s) in word.iter().enumerate() {
            let addr = self.fields.get(s, "Addr").unwrap();
            if (addr == 0) != (i == 0) {
                return None;
            }
        }
        let mut r = 0u64;
        for i in 0..self.payload_len {
            r |= self.fields.get(word[i as usize], "Info").unwrap() << i;
        }
        Some(r)
    }
}

/// Aggregation: `Q` inner symbols concatenated into one outer symbol.
/// Every word is accepted; the code is a notational identity, not an
/// error-detecting one.
#[derive(Debug, Clone)]
pub struct AggregationCode {
    q: usize,
    capacity: u32,
}

impl AggregationCode {
    pub fn new(q: usize, capacity: u32) -> Result<Self> {
        if q == 0 {
            return Err(LabError::Parameter("block size must be positive".into()));
        }
        if q as u32 * capacity > 64 {
            return Err(LabError::Capacity {
                requested: q as u32 * capacity,
                limit: 64,
            });
        }
        Ok(AggregationCode { q, capacity })
    }
}

impl BlockCode for AggregationCode {
    fn block_size(&self) -> usize {
        self.q
    }

    fn inner_capacity(&self) -> u32 {
        self.capacity
    }

    fn outer_capacity(&self) -> u32 {
        self.q as u32 * self.capacity
    }

    fn encode(&self, r: u64) -> Vec<u64> {
        let mask = if self.capacity == 64 {
            u64::MAX
        } else {
            (1u64 << self.capacity) - 1
        };
        (0..self.q)
            .map(|i| (r >> (i as u32 * self.capacity)) & mask)
            .collect()
    }

    fn decode(&self, word: &[u64]) -> Option<u64> {
        if word.len() != self.q {
            return None;
        }
        let mut r = 0u64;
        for (i, &s) in word.iter().enumerate() {
            r |= s << (i as u32 * self.capacity);
        }
        Some(r)
    }
}

/// How an overlap-freeness verdict was reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OverlapCheckMode {
    /// Every string of length `< 2Q` was enumerated.
    ExhaustiveStrings,
    /// Every codeword pair was checked for overlap consistency; acceptance
    /// of non-codeword windows was probed by random sampling.
    CodewordPairsPlusSampling { samples: u64 },
}

#[derive(Debug, Clone)]
pub enum OverlapVerdict {
    OverlapFree(OverlapCheckMode),
    /// A string containing two accepted windows at the given offset.
    Counterexample { string: Vec<u64>, offset: usize },
    /// Budget exhausted before any complete check.
    Unknown { coverage: f64 },
}

impl OverlapVerdict {
    pub fn is_overlap_free(&self) -> bool {
        matches!(self, OverlapVerdict::OverlapFree(_))
    }
}

/// Work budget for `overlap_free_check`, counted in acceptance tests.
#[derive(Debug, Clone, Copy)]
pub struct OverlapBudget {
    pub max_ops: u64,
    pub random_samples: u64,
}

impl Default for OverlapBudget {
    fn default() -> Self {
        OverlapBudget {
            max_ops: 50_000_000,
            random_samples: 20_000,
        }
    }
}

/// Searches for two accepted `Q`-windows overlapping at some offset
/// `0 < i < Q`.
///
/// Strategy: enumerate all strings when the inner alphabet and block size
/// are small enough; otherwise check every pair of codewords for a
/// consistent overlap (exhaustive over the outer alphabet) and probe
/// non-codeword acceptance with budgeted random sampling.
pub fn overlap_free_check(code: &dyn BlockCode, budget: OverlapBudget) -> OverlapVerdict {
    let q = code.block_size();
    if q <= 1 {
        // No nontrivial offsets exist.
        return OverlapVerdict::OverlapFree(OverlapCheckMode::ExhaustiveStrings);
    }
    let inner_bits = code.inner_capacity();
    let string_space: Option<u64> = (inner_bits as u64)
        .checked_mul(2 * q as u64 - 1)
        .filter(|&b| b < 40)
        .map(|b| 1u64 << b);
    if let Some(space) = string_space {
        if space <= budget.max_ops {
            return exhaustive_strings(code, space);
        }
    }
    // Outer-alphabet pair check.
    if code.outer_capacity() > 16 {
        return OverlapVerdict::Unknown { coverage: 0.0 };
    }
    let outer = 1u64 << code.outer_capacity();
    if outer * outer > budget.max_ops {
        return OverlapVerdict::Unknown {
            coverage: outer as f64 * outer as f64 / budget.max_ops as f64,
        };
    }
    let codewords: Vec<Vec<u64>> = (0..outer).map(|r| code.encode(r)).collect();
    for offset in 1..q {
        use std::collections::HashMap;
        let mut prefixes: HashMap<&[u64], usize> = HashMap::new();
        for (ri, w) in codewords.iter().enumerate() {
            prefixes.entry(&w[..q - offset]).or_insert(ri);
        }
        for w1 in &codewords {
            if let Some(&r2) = prefixes.get(&w1[offset..]) {
                let w2 = &codewords[r2];
                let mut s = w1.clone();
                s.extend_from_slice(&w2[q - offset..]);
                // Confirm acceptance of both windows through the decoder.
                if code.decode(&s[..q]).is_some() && code.decode(&s[offset..offset + q]).is_some()
                {
                    return OverlapVerdict::Counterexample { string: s, offset };
                }
            }
        }
    }
    // Random probing for accepted windows that are not codewords.
    let seed = MasterSeed(0x0f5e);
    let mask = if inner_bits == 64 {
        u64::MAX
    } else {
        (1u64 << inner_bits) - 1
    };
    for trial in 0..budget.random_samples {
        let mut stream = seed.stream(trial, 0);
        let offset = 1 + (stream.next_below((q - 1) as u64) as usize);
        let s: Vec<u64> = (0..q + offset).map(|_| stream.next_u64() & mask).collect();
        if code.decode(&s[..q]).is_some() && code.decode(&s[offset..offset + q]).is_some() {
            return OverlapVerdict::Counterexample { string: s, offset };
        }
    }
    OverlapVerdict::OverlapFree(OverlapCheckMode::CodewordPairsPlusSampling {
        samples: budget.random_samples,
    })
}

fn exhaustive_strings(code: &dyn BlockCode, space: u64) -> OverlapVerdict {
    let q = code.block_size();
    let inner_bits = code.inner_capacity();
    let len = 2 * q - 1;
    let mask = (1u64 << inner_bits) - 1;
    for packed in 0..space {
        let s: Vec<u64> = (0..len)
            .map(|i| (packed >> (i as u32 * inner_bits)) & mask)
            .collect();
        for offset in 1..q {
            // Two windows: [0, q) and [offset, offset + q).
            if code.decode(&s[..q]).is_some() && code.decode(&s[offset..offset + q]).is_some() {
                return OverlapVerdict::Counterexample {
                    string: s[..offset + q].to_vec(),
                    offset,
                };
            }
        }
    }
    OverlapVerdict::OverlapFree(OverlapCheckMode::ExhaustiveStrings)
}
