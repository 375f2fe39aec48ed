//! Two-dimensional torus engine for the north-east-center majority rule.
//!
//! Axis convention, fixed here and pinned by tests: the first coordinate `x`
//! grows to the east, the second coordinate `y` grows to the north. A step
//! replaces each cell by the majority of itself, its northern neighbor
//! `(x, y+1)` and its eastern neighbor `(x+1, y)`, so a triangular island of
//! ones whose right angle sits at the south-west erodes along its north-east
//! hypotenuse.

use crate::fault::FaultModel;
use crate::rng::MasterSeed;

/// An `m x m` torus of bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToomGrid {
    m: usize,
    cells: Vec<u8>,
}

impl ToomGrid {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        ToomGrid {
            m,
            cells: vec![0; m * m],
        }
    }

    pub fn filled(m: usize, bit: u8) -> Self {
        assert!(bit <= 1);
        ToomGrid {
            m,
            cells: vec![bit; m * m],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    fn idx(&self, x: i64, y: i64) -> usize {
        let m = self.m as i64;
        (y.rem_euclid(m) * m + x.rem_euclid(m)) as usize
    }

    pub fn get(&self, x: i64, y: i64) -> u8 {
        self.cells[self.idx(x, y)]
    }

    pub fn set(&mut self, x: i64, y: i64, v: u8) {
        debug_assert!(v <= 1);
        let i = self.idx(x, y);
        self.cells[i] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Triangular island of ones: cells `{(x0+i, y0+j) : i,j >= 0, i+j < n}`.
    /// The right angle is at `(x0, y0)`; the hypotenuse faces north-east.
    pub fn with_triangle(mut self, x0: i64, y0: i64, n: i64) -> Self {
        for i in 0..n {
            for j in 0..(n - i) {
                self.set(x0 + i, y0 + j, 1);
            }
        }
        self
    }

    /// Pointwise partial order: `self <= other` everywhere.
    pub fn le(&self, other: &ToomGrid) -> bool {
        self.m == other.m
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a <= b)
    }
}

/// One deterministic step of the majority rule.
pub fn toom_step(grid: &ToomGrid) -> ToomGrid {
    let m = grid.m as i64;
    let mut out = ToomGrid::new(grid.m);
    for y in 0..m {
        for x in 0..m {
            let s = grid.get(x, y) + grid.get(x, y + 1) + grid.get(x + 1, y);
            out.set(x, y, (s >= 2) as u8);
        }
    }
    out
}

/// Noisy trajectory runner. Owns one stream per `(trial, cell)` so a fixed
/// master seed reproduces a trial regardless of when other trials run.
pub struct ToomRun {
    grid: ToomGrid,
    fm: FaultModel,
    streams: Vec<crate::rng::Stream>,
    step: u64,
}

impl ToomRun {
    pub fn new(grid: ToomGrid, fm: FaultModel, seed: MasterSeed, trial: u64) -> Self {
        let n = grid.m * grid.m;
        let streams = (0..n).map(|i| seed.stream(trial, i as u64)).collect();
        ToomRun {
            grid,
            fm,
            streams,
            step: 0,
        }
    }

    pub fn grid(&self) -> &ToomGrid {
        &self.grid
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Advances one noisy step.
    pub fn step(&mut self) {
        let m = self.grid.m as i64;
        let mut out = ToomGrid::new(self.grid.m);
        for y in 0..m {
            for x in 0..m {
                let s =
                    self.grid.get(x, y) + self.grid.get(x, y + 1) + self.grid.get(x + 1, y);
                let correct = (s >= 2) as u64;
                let stream = &mut self.streams[(y * m + x) as usize];
                let v = self.fm.sample_binary(correct, stream);
                out.set(x, y, v as u8);
            }
        }
        self.grid = out;
        self.step += 1;
    }
}
