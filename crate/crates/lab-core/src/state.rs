//! Cell states as bit strings, named bit-field maps, and ring configurations.
//!
//! A state is a machine integer of at most 64 bits; bit `i` of state `s` is
//! `(s >> i) & 1`, so the symbol string `s(0) s(1) ...` maps index `i` to bit
//! position `i`. The vacant symbol is out of band: a `Cell` is either `Vac`
//! or a state, never a reserved bit pattern.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{LabError, Result};

/// Maximum number of bits in a cell state.
pub const MAX_CAPACITY: u32 = 64;

/// State set of a cellular automaton: bit strings of a fixed width,
/// optionally extended with a distinguished vacant symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    capacity: u32,
    has_vacant: bool,
}

impl Alphabet {
    pub fn new(capacity: u32) -> Result<Self> {
        if capacity == 0 || capacity > MAX_CAPACITY {
            return Err(LabError::Capacity {
                requested: capacity,
                limit: MAX_CAPACITY,
            });
        }
        Ok(Alphabet {
            capacity,
            has_vacant: false,
        })
    }

    pub fn with_vacant(capacity: u32) -> Result<Self> {
        let mut a = Alphabet::new(capacity)?;
        a.has_vacant = true;
        Ok(a)
    }

    /// Number of bits per state.
    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn has_vacant(&self) -> bool {
        self.has_vacant
    }

    /// Number of non-vacant states, as u128 so capacity 64 does not overflow.
    pub fn size(&self) -> u128 {
        1u128 << self.capacity
    }

    pub fn mask(&self) -> u64 {
        if self.capacity == 64 {
            u64::MAX
        } else {
            (1u64 << self.capacity) - 1
        }
    }

    pub fn contains(&self, s: u64) -> bool {
        s & !self.mask() == 0
    }

    /// Iterate over all states. Only sensible for small capacities.
    pub fn states(&self) -> impl Iterator<Item = u64> {
        let n = if self.capacity >= 32 {
            panic!("state enumeration is only supported for capacity < 32")
        } else {
            1u64 << self.capacity
        };
        0..n
    }
}

/// A cell content: a state or the vacant symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Vac,
    State(u64),
}

impl Cell {
    pub fn is_vac(&self) -> bool {
        matches!(self, Cell::Vac)
    }

    pub fn state(&self) -> Result<u64> {
        match self {
            Cell::Vac => Err(LabError::VacantCell),
            Cell::State(s) => Ok(*s),
        }
    }
}

impl From<u64> for Cell {
    fn from(s: u64) -> Self {
        Cell::State(s)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Vac => write!(f, "."),
            Cell::State(s) => write!(f, "{s:x}"),
        }
    }
}

/// Named fields: each field is an ordered set of bit indices of the state.
///
/// Fields are usually contiguous intervals but the map only requires strictly
/// increasing indices within one field.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldMap {
    capacity: u32,
    entries: BTreeMap<String, Vec<u32>>,
    /// Declaration order, used for stable iteration and packing.
    order: Vec<String>,
}

impl FieldMap {
    pub fn new(capacity: u32) -> Self {
        FieldMap {
            capacity,
            entries: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    /// Builds a map by packing the given `(name, width)` fields into
    /// consecutive bit intervals starting at bit 0.
    pub fn packed(fields: &[(&str, u32)]) -> Result<Self> {
        let capacity: u32 = fields.iter().map(|(_, w)| w).sum();
        if capacity > MAX_CAPACITY {
            return Err(LabError::Capacity {
                requested: capacity,
                limit: MAX_CAPACITY,
            });
        }
        let mut map = FieldMap::new(capacity);
        let mut at = 0;
        for (name, w) in fields {
            map.declare(name, (at..at + w).collect())?;
            at += w;
        }
        Ok(map)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn declare(&mut self, name: &str, indices: Vec<u32>) -> Result<()> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::FieldIndices(name.to_string()));
        }
        if *indices.last().unwrap() >= self.capacity {
            return Err(LabError::FieldIndices(name.to_string()));
        }
        if self.entries.contains_key(name) {
            return Err(LabError::DuplicateField(name.to_string()));
        }
        self.order.push(name.to_string());
        self.entries.insert(name.to_string(), indices);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn indices(&self, name: &str) -> Result<&[u32]> {
        self.entries
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| LabError::UnknownField(name.to_string()))
    }

    /// Width of a field in bits.
    pub fn width(&self, name: &str) -> Result<u32> {
        Ok(self.indices(name)?.len() as u32)
    }

    /// Extracts field `name` from state `s`: bit `j` of the result is bit
    /// `indices[j]` of `s`.
    pub fn get(&self, s: u64, name: &str) -> Result<u64> {
        Ok(extract(s, self.indices(name)?))
    }

    /// Returns `s` with field `name` replaced by `value` (low bits of value).
    pub fn set(&self, s: u64, name: &str, value: u64) -> Result<u64> {
        Ok(inject(s, self.indices(name)?, value))
    }

    /// Field names in declaration order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(|s| s.as_str())
    }

    /// Lifts the field map to the `Q`-fold aggregated alphabet: field `F`
    /// of the aggregate is the union of `F + i * capacity` over `i < q`.
    pub fn aggregate(&self, q: u32) -> Result<FieldMap> {
        let cap = self
            .capacity
            .checked_mul(q)
            .filter(|c| *c <= MAX_CAPACITY)
            .ok_or(LabError::Capacity {
                requested: self.capacity.saturating_mul(q),
                limit: MAX_CAPACITY,
            })?;
        let mut out = FieldMap::new(cap);
        for name in &self.order {
            let base = &self.entries[name];
            let mut idx = Vec::with_capacity(base.len() * q as usize);
            for i in 0..q {
                idx.extend(base.iter().map(|b| b + i * self.capacity));
            }
            out.declare(name, idx)?;
        }
        Ok(out)
    }
}

/// Extracts the bits of `s` at `indices` (strictly increasing), packing them
/// LSB-first in index order.
pub fn extract(s: u64, indices: &[u32]) -> u64 {
    let mut out = 0u64;
    for (j, &i) in indices.iter().enumerate() {
        out |= ((s >> i) & 1) << j;
    }
    out
}

/// Writes the low bits of `value` into `s` at `indices`, in index order.
pub fn inject(s: u64, indices: &[u32], value: u64) -> u64 {
    let mut out = s;
    for (j, &i) in indices.iter().enumerate() {
        out = (out & !(1u64 << i)) | (((value >> j) & 1) << i);
    }
    out
}

/// A space configuration on the ring `Z_m`: indexing is modulo `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    cells: Vec<Cell>,
}

impl Configuration {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(LabError::EmptyRing);
        }
        Ok(Configuration { cells })
    }

    pub fn from_states(states: &[u64]) -> Result<Self> {
        Configuration::new(states.iter().map(|&s| Cell::State(s)).collect())
    }

    pub fn uniform(state: u64, m: usize) -> Result<Self> {
        Configuration::new(vec![Cell::State(state); m])
    }

    /// Ring size `m`. Never zero.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Cell at site `x`, modulo the ring size. Accepts negative sites.
    pub fn get(&self, x: i64) -> Cell {
        let m = self.cells.len() as i64;
        self.cells[(x.rem_euclid(m)) as usize]
    }

    pub fn set(&mut self, x: i64, c: Cell) {
        let m = self.cells.len() as i64;
        self.cells[(x.rem_euclid(m)) as usize] = c;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Cell] {
        &mut self.cells
    }

    /// Rotates the configuration by `k`: `rotate(cfg, k)(x) = cfg(x - k)`.
    pub fn rotate(&self, k: i64) -> Configuration {
        let m = self.cells.len() as i64;
        let cells = (0..m).map(|x| self.get(x - k)).collect();
        Configuration { cells }
    }

    /// States of all cells; errors if any cell is vacant.
    pub fn states(&self) -> Result<Vec<u64>> {
        self.cells.iter().map(|c| c.state()).collect()
    }
}

/// Smallest absolute-value remainder: the unique `r` with
/// `-m/2 < r <= m/2` and `r = b (mod m)`. Requires `m > 2`.
pub fn amod(b: i64, m: i64) -> i64 {
    debug_assert!(m > 2);
    let mut r = b.rem_euclid(m);
    if 2 * r > m {
        r -= m;
    }
    r
}
