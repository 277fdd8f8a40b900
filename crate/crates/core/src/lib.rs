//! Mining of message-flow specifications from concurrent system-on-chip traces.
//!
//! The pipeline slices traces by address, mines binary patterns that hold with
//! 100% forward or backward confidence under a structural causality filter,
//! chains them into longer patterns and drops redundant prefixes and suffixes.
//! Around it sit a synthetic trace generator, an alternating-pattern baseline
//! and a precision/recall evaluator.

pub mod baseline;
pub mod chaining;
pub mod dot;
pub mod eval;
pub mod flow;
pub mod format;
pub mod generate;
pub mod mining;
pub mod model;
pub mod pipeline;
pub mod postprocess;
pub mod slicing;

pub use flow::{enumerate_paths, parse_flow_library, parse_flow_spec, FlowSpec, GroundTruth};
pub use model::{
    canonical_render, Causality, Message, MessageInstance, ModelError, Origin, Pattern, PatternSet,
    SliceKey, Step, SupportStats, Trace, TraceSet,
};
pub use pipeline::{mine, MinerConfig, MiningOutcome};
