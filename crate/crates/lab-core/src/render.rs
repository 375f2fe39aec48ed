//! Plain-text space-time dumps and ASCII PGM/PPM image output.
//!
//! Dump format: one line per frame, cells as fixed-width lowercase hex
//! separated by single spaces, `.` (padded to the cell width) for vacant
//! cells. A blank line separates trajectories when several are concatenated.

use std::fmt::Write as _;

use crate::dynamics::Trajectory;
use crate::state::{Cell, Configuration};
use crate::toom::ToomGrid;

fn hex_width(capacity: u32) -> usize {
    capacity.div_ceil(4) as usize
}

/// Renders one configuration line of the dump format.
pub fn dump_configuration(cfg: &Configuration, capacity: u32) -> String {
    let w = hex_width(capacity);
    let mut out = String::new();
    for (i, cell) in cfg.cells().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match cell {
            Cell::Vac => {
                for _ in 0..w {
                    out.push('.');
                }
            }
            Cell::State(s) => {
                let _ = write!(out, "{s:0w$x}");
            }
        }
    }
    out
}

/// Renders a whole trajectory, one frame per line, earliest first.
pub fn dump_trajectory(traj: &Trajectory) -> String {
    let mut out = String::new();
    for frame in &traj.frames {
        out.push_str(&dump_configuration(frame, traj.capacity));
        out.push('\n');
    }
    out
}

/// ASCII PGM (P2): a trajectory as an image, one row per frame, state value
/// mapped linearly to gray. Vacant cells render as the maximum gray value.
pub fn trajectory_to_pgm(traj: &Trajectory) -> String {
    let w = traj.ring_size();
    let h = traj.frames.len();
    let maxval: u64 = (1u64 << traj.capacity.min(16)) - 1;
    let mut out = format!("P2\n{w} {h}\n{maxval}\n");
    for frame in &traj.frames {
        let row: Vec<String> = frame
            .cells()
            .iter()
            .map(|c| match c {
                Cell::Vac => maxval.to_string(),
                Cell::State(s) => (s & maxval).to_string(),
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// ASCII PPM (P3) of a torus grid: ones render white, zeros black.
pub fn toom_to_ppm(grid: &ToomGrid) -> String {
    let m = grid.size();
    let mut out = format!("P3\n{m} {m}\n255\n");
    // Row 0 at the top is the largest y: north up.
    for y in (0..m as i64).rev() {
        let mut row = Vec::with_capacity(m);
        for x in 0..m as i64 {
            let v = if grid.get(x, y) == 1 { 255 } else { 0 };
            row.push(format!("{v} {v} {v}"));
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
