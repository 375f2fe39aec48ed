//! A laboratory for reliable cellular automata at desk scale.
//!
//! The crate provides:
//!
//! - bit-field cell states on rings and the deterministic / probabilistic /
//!   noise-perturbed dynamics over them ([`state`], [`dynamics`], [`fault`]);
//! - a two-dimensional torus engine for the north-east-center majority rule
//!   ([`toom`]);
//! - a small rule language compiling to transition functions ([`rulelang`]);
//! - block codes, Reed-Solomon codes over `GF(2^l)`, hierarchical shared-field
//!   codes and the amplifier-frame parameter calculus ([`coding`]);
//! - colony-structured block simulation, basic and single-fault-tolerant
//!   ([`colony`]);
//! - totally asynchronous runs, the marching-soldiers lift and variable-period
//!   simulation ([`asyncsim`]);
//! - plain-text space-time dumps and ASCII PGM/PPM renders ([`render`]).
//!
//! Everything stochastic is driven by counter-based streams derived from a
//! master seed, so a fixed seed reproduces every experiment bit-for-bit.

pub mod asyncsim;
pub mod coding;
pub mod colony;
pub mod dynamics;
pub mod error;
pub mod fault;
pub mod render;
pub mod report;
pub mod rng;
pub mod rulelang;
pub mod state;
pub mod toom;

pub use dynamics::{
    aggregate_transition, apply_separable, evolve, step_deterministic, step_probabilistic,
    CellStreams, SeparableKernel, Trajectory, TransitionFunction, TransitionMatrix,
};
pub use error::{LabError, Result};
pub use rng::{MasterSeed, Stream};
pub use state::{amod, Alphabet, Cell, Configuration, FieldMap};
