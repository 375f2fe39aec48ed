//! Coding stack: block codes, Reed-Solomon over `GF(2^l)`, hierarchical
//! shared-field codes, and the amplifier-frame calculus.

pub mod block;
pub mod frame;
pub mod gf;
pub mod hier;
pub mod rs;

pub use block::{
    overlap_free_check, AddrInfoCode, AggregationCode, BlockCode, OverlapBudget, OverlapVerdict,
};
pub use frame::{FrameCheckReport, FrameDerived, FrameParams, FrameViolation};
pub use gf::GfContext;
pub use hier::{HierDerived, HierEncoding, HierLevelSpec, HierSystem};
pub use rs::{RsCode, RsDecodeOutcome};
