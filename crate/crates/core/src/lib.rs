//! Binary-value, continuous-time digital circuit simulation built on
//! involution delay channels.
//!
//! The crate provides:
//!
//! * [`channel`] — involution delay-function models (closed-form
//!   exp-channels, waveform-derived channels) and constant-delay baselines,
//! * [`signal`] — transition-list signals with the measure and distance the
//!   continuity experiments use,
//! * [`circuit`] — the circuit graph with structural validation,
//! * [`engine`] — deterministic execution construction with transition
//!   cancellation, implicit resets and causal-depth tracking,
//! * [`spf`] — the storage-loop (short-pulse-filtration) analysis toolkit:
//!   pulse-length iteration, critical pulse search, high-threshold filter
//!   synthesis,
//! * [`unroll`] — bounded-depth acyclic unrolling of feedback circuits and
//!   the differential simulation check,
//! * [`continuity`] — empirical continuity probes and forward-circuit
//!   measure sweeps,
//! * [`netlist`] / [`vcd`] — JSON netlists, CSV signals and VCD export.

// Validation code deliberately writes `!(x > y)` so NaN inputs fail closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod circuit;
pub mod continuity;
pub mod engine;
pub mod interp;
pub mod netlist;
pub mod signal;
pub mod spf;
pub mod unroll;
pub mod vcd;

pub use channel::{ChannelError, DelayKind, DelayModel, Edge, ExpChannelParams, ValidationReport};
pub use circuit::{Circuit, CircuitBuilder, StructuralError, TruthTable, Vertex, VertexKind};
pub use engine::{channel_output, execute, verify_execution, EngineError, Execution, Violation};
pub use signal::{Signal, SignalError, Transition};
