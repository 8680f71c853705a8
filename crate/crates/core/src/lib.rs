//! Interaction-aware labeled multi-Bernoulli (LMB) tracking.
//!
//! The crate is organised bottom-up:
//!
//! * [`rfs`] labeled random finite set data model (labels, particle
//!   Bernoulli tracks, LMB densities, estimate extraction).
//! * [`motion`] nearly-constant-velocity dynamics.
//! * [`interaction`] leave-one-out estimate context, swarm distance keeping
//!   and the front-vehicle identification pipeline.
//! * [`filter`] the particle LMB recursion with interaction-aware prediction.
//! * [`metrics`] OSPA, OSPA² and cardinality error.
//! * [`scenario`] synthetic ground truth, detection/clutter simulation and
//!   the delimited text file formats.
//! * [`cli`] the batch front-end behind the `iaware` binary.
//!
//! Per-track work inside the filter runs on rayon when the `parallel`
//! feature is enabled (the default). Every random draw comes from a
//! [`RandomSource`] substream keyed by frame, label and stage, so parallel
//! and sequential execution produce bit-identical results.

pub mod cli;
pub mod error;
pub mod filter;
pub mod interaction;
pub mod metrics;
pub mod motion;
pub mod par;
pub mod random;
pub mod rfs;
pub mod scenario;

pub use error::{Error, Result};
pub use par::Execution;
pub use random::RandomSource;
