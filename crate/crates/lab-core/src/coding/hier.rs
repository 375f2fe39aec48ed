//! Hierarchical codes with a shared field and their site map.
//!
//! A system of `depth` block codes stacks alphabets `S_1 .. S_{depth+1}`.
//! Level-`k` states carry a payload field `F^k` in their low bits and, for
//! every level produced by a code, a colony address. Code `k` identifies
//! `F^k` over the addresses `[0, q_k)` with `F^{k+1}` (so `|F^{k+1}| =
//! q_k * |F^k|`), stores the remaining bits of the level-`k+1` state on the
//! payload track of the addresses `[q_k, Q_k)`, and is controlled at address
//! `a_k` by the payload field alone.
//!
//! The site map `X(y)` locates payload symbol `y` in the bottom
//! configuration: encoding a payload `rho` yields `xi^1` with
//! `xi^1(X(y)).F^1 = rho(y)` for every visible `y`.

use crate::error::{LabError, Result};
use crate::state::Cell;

/// Parameters of one code level: colony size `Q`, identified prefix `q`,
/// and controlled address `a`.
#[derive(Debug, Clone, Copy)]
pub struct HierLevelSpec {
    pub q_big: usize,
    pub q_info: usize,
    pub a: usize,
}

#[derive(Debug, Clone)]
pub struct HierSystem {
    levels: Vec<HierLevelSpec>,
    payload_width: u32,
    ring: usize,
    /// `f[k-1]` = payload field width at level `k`, for `k = 1..=depth+1`.
    f: Vec<u32>,
    /// Address field width per code level `1..=depth`.
    addr_bits: Vec<u32>,
    /// Full state width per level `1..=depth+1`.
    cap: Vec<u32>,
}

/// Derived offset tables: `B`, `B'`, `o`, `o'` indexed by level `1..=depth+1`
/// (position `k-1` in each vector).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierDerived {
    pub b: Vec<i64>,
    pub b_prime: Vec<i64>,
    pub o: Vec<i64>,
    pub o_prime: Vec<i64>,
}

/// All level configurations produced by one encoding.
#[derive(Debug, Clone)]
pub struct HierEncoding {
    /// `levels[k-1][x]` = state of cell `x` of level `k`; cell `x` sits at
    /// host site `(o_k + x * B_k) mod N`.
    pub levels: Vec<Vec<u64>>,
}

impl HierSystem {
    pub fn new(payload_width: u32, levels: Vec<HierLevelSpec>, ring: usize) -> Result<Self> {
        if payload_width == 0 || levels.is_empty() {
            return Err(LabError::Parameter(
                "need a positive payload width and at least one level".into(),
            ));
        }
        let depth = levels.len();
        let mut f = vec![payload_width];
        for spec in &levels {
            if spec.q_info < 2 || spec.q_info > spec.q_big {
                return Err(LabError::Parameter(format!(
                    "need 2 <= q <= Q, got q={} Q={}",
                    spec.q_info, spec.q_big
                )));
            }
            if spec.a >= spec.q_info {
                return Err(LabError::Parameter(format!(
                    "controlled address {} must lie in the identified prefix [0, {})",
                    spec.a, spec.q_info
                )));
            }
            let last = *f.last().unwrap();
            f.push(last * spec.q_info as u32);
        }
        let addr_bits: Vec<u32> = levels
            .iter()
            .map(|s| (usize::BITS - (s.q_big - 1).leading_zeros()).max(1))
            .collect();
        let mut cap = Vec::with_capacity(depth + 1);
        for k in 0..depth {
            cap.push(f[k] + addr_bits[k]);
        }
        cap.push(f[depth]);
        for (k, c) in cap.iter().enumerate() {
            if *c > 64 {
                return Err(LabError::Capacity {
                    requested: *c,
                    limit: 64,
                });
            }
            let _ = k;
        }
        let sys = HierSystem {
            levels,
            payload_width,
            ring,
            f,
            addr_bits,
            cap,
        };
        let b_top = sys.derived().b[depth];
        if ring == 0 || ring as i64 % b_top != 0 {
            return Err(LabError::Parameter(format!(
                "ring size {ring} must be a positive multiple of B_K = {b_top}"
            )));
        }
        Ok(sys)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn ring(&self) -> usize {
        self.ring
    }

    pub fn payload_width(&self) -> u32 {
        self.payload_width
    }

    pub fn level_spec(&self, k: usize) -> &HierLevelSpec {
        &self.levels[k - 1]
    }

    /// Payload field width `|F^k|`.
    pub fn field_width(&self, k: usize) -> u32 {
        self.f[k - 1]
    }

    pub fn capacity(&self, k: usize) -> u32 {
        self.cap[k - 1]
    }

    /// `B_k = Q_1 ... Q_{k-1}`, `o_k = -sum a_i B_i`, and the primed
    /// variants built from `q` instead of `Q`.
    pub fn derived(&self) -> HierDerived {
        let depth = self.levels.len();
        let mut b = vec![1i64];
        let mut bp = vec![1i64];
        for k in 0..depth {
            b.push(b[k] * self.levels[k].q_big as i64);
            bp.push(bp[k] * self.levels[k].q_info as i64);
        }
        let mut o = vec![0i64];
        let mut op = vec![0i64];
        for k in 0..depth {
            o.push(o[k] - self.levels[k].a as i64 * b[k]);
            op.push(op[k] - self.levels[k].a as i64 * bp[k]);
        }
        HierDerived {
            b,
            b_prime: bp,
            o,
            o_prime: op,
        }
    }

    /// Checks that every level has room for the non-payload part of the
    /// level above on the payload track of its redundancy addresses. A
    /// system can fail this (for example with `q = Q`) and still provide
    /// meaningful site-map arithmetic; only encoding requires it.
    pub fn encoding_room_check(&self) -> Result<()> {
        for k in 0..self.depth() {
            let rest = self.cap[k + 1] - self.f[k + 1];
            let room = (self.levels[k].q_big - self.levels[k].q_info) as u32 * self.f[k];
            if rest > room {
                return Err(LabError::Parameter(format!(
                    "level {} cannot store {rest} non-payload bits in {room} spare bits",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    fn field_mask(&self, k: usize) -> u64 {
        if self.f[k - 1] == 64 {
            u64::MAX
        } else {
            (1u64 << self.f[k - 1]) - 1
        }
    }

    /// Payload field of a level-`k` state.
    pub fn field_of(&self, k: usize, state: u64) -> u64 {
        state & self.field_mask(k)
    }

    /// Address field of a level-`k` state (`k <= depth`).
    pub fn addr_of(&self, k: usize, state: u64) -> u64 {
        (state >> self.f[k - 1]) & ((1u64 << self.addr_bits[k - 1]) - 1)
    }

    /// Control map `gamma_k`: rebuilds the full controlled cell at address
    /// `a_k` from its payload field value.
    pub fn control_map(&self, k: usize, field_value: u64) -> u64 {
        (field_value & self.field_mask(k)) | (self.levels[k - 1].a as u64) << self.f[k - 1]
    }

    /// Encodes one level-`k+1` state into its `Q_k` level-`k` cells.
    pub fn encode_level(&self, k: usize, state: u64) -> Vec<u64> {
        let spec = &self.levels[k - 1];
        let fk = self.f[k - 1];
        let fk1 = self.f[k];
        let payload = state & self.field_mask(k + 1);
        let rest = if fk1 < 64 { state >> fk1 } else { 0 };
        let cell_mask = self.field_mask(k);
        (0..spec.q_big)
            .map(|a| {
                let fval = if a < spec.q_info {
                    (payload >> (a as u32 * fk)) & cell_mask
                } else {
                    (rest >> ((a - spec.q_info) as u32 * fk)) & cell_mask
                };
                fval | (a as u64) << fk
            })
            .collect()
    }

    /// Decodes a level-`k` word back to a level-`k+1` state; `None` when the
    /// address ramp is rejected (the base must be the only address-0 cell).
    pub fn decode_level(&self, k: usize, word: &[u64]) -> Option<u64> {
        let spec = &self.levels[k - 1];
        if word.len() != spec.q_big {
            return None;
        }
        for (a, &s) in word.iter().enumerate() {
            if (self.addr_of(k, s) == 0) != (a == 0) {
                return None;
            }
        }
        let fk = self.f[k - 1];
        let mut payload = 0u64;
        for a in 0..spec.q_info {
            payload |= self.field_of(k, word[a]) << (a as u32 * fk);
        }
        let rest_bits = self.cap[k] - self.f[k];
        let mut rest = 0u64;
        for a in spec.q_info..spec.q_big {
            rest |= self.field_of(k, word[a]) << ((a - spec.q_info) as u32 * fk);
        }
        rest &= if rest_bits == 0 {
            0
        } else {
            (1u64 << rest_bits) - 1
        };
        Some(payload | rest << self.f[k])
    }

    /// Verifies the identification, controlling, and inverse properties of
    /// every code level, exhaustively when the level capacity is small and
    /// on sampled states otherwise.
    pub fn verify_properties(&self) -> Result<()> {
        use crate::rng::MasterSeed;
        self.encoding_room_check()?;
        for k in 1..=self.depth() {
            let upper_cap = self.cap[k];
            let states: Vec<u64> = if upper_cap <= 12 {
                (0..(1u64 << upper_cap)).collect()
            } else {
                let mut s = MasterSeed(0x41e7).stream(k as u64, 0);
                (0..4096).map(|_| s.next_u64() & ((1u64 << upper_cap) - 1)).collect()
            };
            let spec = &self.levels[k - 1];
            let fk = self.f[k - 1];
            for &s in &states {
                let w = self.encode_level(k, s);
                for a in 0..spec.q_info {
                    let slice = (self.field_of(k + 1, s) >> (a as u32 * fk)) & self.field_mask(k);
                    if self.field_of(k, w[a]) != slice {
                        return Err(LabError::HierProperty {
                            level: k,
                            clause: format!("identification at address {a}"),
                        });
                    }
                }
                let ctl = w[spec.a];
                if ctl != self.control_map(k, self.field_of(k, ctl)) {
                    return Err(LabError::HierProperty {
                        level: k,
                        clause: format!("controlling at address {}", spec.a),
                    });
                }
                if self.decode_level(k, &w) != Some(s) {
                    return Err(LabError::HierProperty {
                        level: k,
                        clause: "decode-encode inverse".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Visible payload sites: the interval `[o'_K, o'_K + N B'_K / B_K)`.
    pub fn visible_range(&self) -> (i64, usize) {
        let d = self.derived();
        let depth = self.depth();
        let len = self.ring as i64 * d.b_prime[depth] / d.b[depth];
        (d.o_prime[depth], len as usize)
    }

    fn digits(&self, y: i64, k: usize) -> Result<Vec<i64>> {
        let d = self.derived();
        // w = y + sum_{m <= k} a_m B'_m; the top level carries no address,
        // so for k = depth + 1 the sum stops at the last code level.
        let base = if k <= self.depth() {
            d.o_prime[k]
        } else {
            d.o_prime[k - 1]
        };
        let mut w = y - base;
        if w < 0 {
            return Err(LabError::Parameter(format!(
                "payload site {y} not representable at level {k}"
            )));
        }
        let mut digits = Vec::with_capacity(k);
        for m in 1..k {
            let q = self.levels[m - 1].q_info as i64;
            digits.push(w % q);
            w /= q;
        }
        digits.push(w);
        Ok(digits)
    }

    /// Site map `X(y, i; k) = sum_{m=i}^{k} (y'_m - a_m) B_m` with the
    /// digits of `y` in the mixed-radix system of the `q` sequence.
    pub fn site_map_general(&self, y: i64, i: usize, k: usize) -> Result<i64> {
        if i < 1 || i > k || k > self.depth() + 1 {
            return Err(LabError::Parameter(format!(
                "site map levels must satisfy 1 <= i <= k <= {}",
                self.depth() + 1
            )));
        }
        let d = self.derived();
        let digits = self.digits(y, k)?;
        // Finite-mode visibility: the top digit must index an existing cell.
        let top = *digits.last().unwrap();
        if k == self.depth() + 1 && top >= self.ring as i64 / d.b[k - 1] {
            return Err(LabError::Parameter(format!(
                "payload site {y} outside the visible range"
            )));
        }
        let mut x = 0i64;
        for m in i..=k {
            let a_m = if m <= self.depth() {
                self.levels[m - 1].a as i64
            } else {
                0
            };
            x += (digits[m - 1] - a_m) * d.b[m - 1];
        }
        Ok(x)
    }

    /// `X(y) = X(y, 1; K)` for the full system.
    pub fn site_map(&self, y: i64) -> Result<i64> {
        self.site_map_general(y, 1, self.depth() + 1)
    }

    /// Primed site map built from `B'` instead of `B`.
    pub fn site_map_prime(&self, y: i64, i: usize, k: usize) -> Result<i64> {
        if i < 1 || i > k || k > self.depth() + 1 {
            return Err(LabError::Parameter("bad site map levels".into()));
        }
        let d = self.derived();
        let digits = self.digits(y, k)?;
        let mut x = 0i64;
        for m in i..=k {
            let a_m = if m <= self.depth() {
                self.levels[m - 1].a as i64
            } else {
                0
            };
            x += (digits[m - 1] - a_m) * d.b_prime[m - 1];
        }
        Ok(x)
    }

    /// Encodes a payload configuration (one `payload_width`-bit symbol per
    /// visible site, in increasing site order) into all levels.
    pub fn encode_payload(&self, rho: &[u64]) -> Result<HierEncoding> {
        self.encoding_room_check()?;
        let (_, visible_len) = self.visible_range();
        if rho.len() != visible_len {
            return Err(LabError::Parameter(format!(
                "payload length {} != visible length {visible_len}",
                rho.len()
            )));
        }
        let depth = self.depth();
        let d = self.derived();
        let top = depth + 1;
        let b_prime_top = d.b_prime[depth] as usize;
        let top_cells = self.ring / d.b[depth] as usize;

        let mut levels: Vec<Vec<u64>> = Vec::with_capacity(top);
        for k in 1..=top {
            levels.push(vec![0u64; self.ring / d.b[k - 1] as usize]);
        }
        // Top level: aggregate the payload slices directly.
        for x in 0..top_cells {
            let mut v = 0u64;
            for j in 0..b_prime_top {
                v |= rho[x * b_prime_top + j] << (j as u32 * self.payload_width);
            }
            levels[top - 1][x] = v;
        }
        // Expand downward: one level-(k+1) cell makes Q_k level-k cells.
        for k in (1..=depth).rev() {
            let q = self.levels[k - 1].q_big;
            let cells_above = self.ring / d.b[k] as usize;
            let cells_here = self.ring / d.b[k - 1] as usize;
            let a_k = self.levels[k - 1].a;
            for x in 0..cells_above {
                let word = self.encode_level(k, levels[k][x]);
                for (a, &cell) in word.iter().enumerate() {
                    // Base site o_{k+1} + x B_{k+1} expands to level-k index
                    // (x Q_k + a - a_k) mod cells_here.
                    let idx = (x * q + a + cells_here - a_k) % cells_here;
                    levels[k - 1][idx] = cell;
                }
            }
        }
        Ok(HierEncoding { levels })
    }

    /// Host (level-1) configuration of an encoding; level-1 cells sit at
    /// host sites directly since `o_1 = 0` and `B_1 = 1`.
    pub fn host_configuration(&self, enc: &HierEncoding) -> crate::state::Configuration {
        crate::state::Configuration::new(
            enc.levels[0].iter().map(|&s| Cell::State(s)).collect(),
        )
        .expect("ring is nonempty")
    }

    /// State of level-`k` cell holding host site `site` (which must be a
    /// lattice point `(o_k + x B_k) mod N`).
    pub fn level_cell_at(&self, enc: &HierEncoding, k: usize, site: i64) -> Result<u64> {
        let d = self.derived();
        let n = self.ring as i64;
        let rel = (site - d.o[k - 1]).rem_euclid(n);
        if rel % d.b[k - 1] != 0 {
            return Err(LabError::Parameter(format!(
                "host site {site} is not a level-{k} lattice point"
            )));
        }
        Ok(enc.levels[k - 1][(rel / d.b[k - 1]) as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system_433() -> HierSystem {
        HierSystem::new(
            2,
            vec![
                HierLevelSpec {
                    q_big: 4,
                    q_info: 2,
                    a: 1,
                },
                HierLevelSpec {
                    q_big: 4,
                    q_info: 2,
                    a: 1,
                },
                HierLevelSpec {
                    q_big: 4,
                    q_info: 2,
                    a: 1,
                },
            ],
            64,
        )
        .unwrap()
    }

    #[test]
    fn derived_depth1() {
        let sys = HierSystem::new(
            1,
            vec![HierLevelSpec {
                q_big: 4,
                q_info: 2,
                a: 1,
            }],
            4,
        )
        .unwrap();
        let d = sys.derived();
        assert_eq!(d.b, vec![1, 4]);
        assert_eq!(d.o, vec![0, -1]);
    }

    #[test]
    fn derived_paper_example() {
        // Q = (31, 31), a = (1, 1): B_2 = 31, o_2 = -1, o_3 = -32.
        let sys = HierSystem::new(
            1,
            vec![
                HierLevelSpec {
                    q_big: 31,
                    q_info: 2,
                    a: 1,
                },
                HierLevelSpec {
                    q_big: 31,
                    q_info: 2,
                    a: 1,
                },
            ],
            961,
        )
        .unwrap();
        let d = sys.derived();
        assert_eq!(d.b[1], 31);
        assert_eq!(d.b[2], 961);
        assert_eq!(d.o[1], -1);
        assert_eq!(d.o[2], -32);
    }

    #[test]
    fn derived_zero_addresses() {
        let sys = HierSystem::new(
            1,
            vec![
                HierLevelSpec {
                    q_big: 3,
                    q_info: 2,
                    a: 0,
                },
                HierLevelSpec {
                    q_big: 3,
                    q_info: 2,
                    a: 0,
                },
            ],
            9,
        )
        .unwrap();
        let d = sys.derived();
        assert!(d.o.iter().all(|&o| o == 0));
        // 0 lies in o_k + [0, B_k - 1] and o_k = o_{k+1} + a_k B_k.
        for k in 0..d.o.len() - 1 {
            assert_eq!(d.o[k], d.o[k + 1]);
        }
    }

    #[test]
    fn offset_identities() {
        let sys = system_433();
        let d = sys.derived();
        assert_eq!(d.o[0], 0);
        for k in 0..sys.depth() {
            let a = sys.level_spec(k + 1).a as i64;
            assert_eq!(d.o[k], d.o[k + 1] + a * d.b[k]);
            assert!(0 >= d.o[k] && 0 <= d.o[k] + d.b[k] - 1);
        }
    }

    #[test]
    fn properties_verify() {
        system_433().verify_properties().unwrap();
    }

    #[test]
    fn site_map_fixed_points() {
        let sys = system_433();
        // X(0, i) = 0 for every i, and X'(y, 1) = y on the visible range.
        for i in 1..=4 {
            assert_eq!(sys.site_map_general(0, i, 4).unwrap(), 0);
            assert_eq!(sys.site_map_prime(0, i, 4).unwrap(), 0);
        }
        let (lo, len) = sys.visible_range();
        for y in lo..lo + len as i64 {
            assert_eq!(sys.site_map_prime(y, 1, 4).unwrap(), y);
        }
    }

    #[test]
    fn site_map_is_identity_when_q_equals_big_q() {
        let sys = HierSystem::new(
            1,
            vec![
                HierLevelSpec {
                    q_big: 3,
                    q_info: 3,
                    a: 1,
                },
                HierLevelSpec {
                    q_big: 3,
                    q_info: 3,
                    a: 1,
                },
            ],
            9,
        )
        .unwrap();
        let (lo, len) = sys.visible_range();
        assert_eq!(len, 9);
        for y in lo..lo + len as i64 {
            assert_eq!(sys.site_map(y).unwrap(), y);
        }
    }

    #[test]
    fn site_map_recurrence() {
        // o_i + X(y, i; k) = o_{i+1} + X(y, i+1; k) + y'_i B_i.
        let sys = system_433();
        let d = sys.derived();
        let (lo, len) = sys.visible_range();
        for y in lo..lo + len as i64 {
            let digits = sys.digits(y, 4).unwrap();
            for i in 1..4 {
                let lhs = d.o[i - 1] + sys.site_map_general(y, i, 4).unwrap();
                let rhs = d.o[i]
                    + sys.site_map_general(y, i + 1, 4).unwrap()
                    + digits[i - 1] * d.b[i - 1];
                assert_eq!(lhs, rhs, "y={y} i={i}");
            }
        }
    }

    #[test]
    fn depth1_encoding_is_controlwise() {
        let sys = HierSystem::new(
            2,
            vec![HierLevelSpec {
                q_big: 4,
                q_info: 2,
                a: 1,
            }],
            4,
        )
        .unwrap();
        let (_, len) = sys.visible_range();
        assert_eq!(len, 2);
        let rho = vec![0b10u64, 0b01];
        let enc = sys.encode_payload(&rho).unwrap();
        for (y_idx, &sym) in rho.iter().enumerate() {
            let (lo, _) = sys.visible_range();
            let y = lo + y_idx as i64;
            let x = sys.site_map(y).unwrap();
            let host = sys.host_configuration(&enc);
            let cell = host.get(x).state().unwrap();
            assert_eq!(sys.field_of(1, cell), sym);
        }
    }

    #[test]
    fn shared_computation_and_telescoping() {
        let sys = system_433();
        let (lo, len) = sys.visible_range();
        assert_eq!(len, 8);
        let rho: Vec<u64> = (0..len as u64).map(|i| i % 4).collect();
        let enc = sys.encode_payload(&rho).unwrap();
        let host = sys.host_configuration(&enc);
        // xi^1(X(y)).F^1 = rho(y).
        for (i, &sym) in rho.iter().enumerate() {
            let y = lo + i as i64;
            let x = sys.site_map(y).unwrap();
            assert_eq!(sys.field_of(1, host.get(x).state().unwrap()), sym);
        }
        // Level-wise telescoping: encoding level k+1 reproduces level k, and
        // decoding level-k words from the bottom up reproduces level k+1.
        let d = sys.derived();
        for k in 1..=sys.depth() {
            let cells_above = sys.ring() / d.b[k] as usize;
            let cells_here = sys.ring() / d.b[k - 1] as usize;
            let q = sys.level_spec(k).q_big;
            let a_k = sys.level_spec(k).a;
            for x in 0..cells_above {
                let word = sys.encode_level(k, enc.levels[k][x]);
                for (a, &cell) in word.iter().enumerate() {
                    let idx = (x * q + a + cells_here - a_k) % cells_here;
                    assert_eq!(enc.levels[k - 1][idx], cell, "level {k} cell {x} addr {a}");
                }
                let gathered: Vec<u64> = (0..q)
                    .map(|a| {
                        enc.levels[k - 1][(x * q + a + cells_here - a_k) % cells_here]
                    })
                    .collect();
                assert_eq!(
                    sys.decode_level(k, &gathered),
                    Some(enc.levels[k][x]),
                    "decode at level {k} cell {x}"
                );
            }
        }
    }
}
