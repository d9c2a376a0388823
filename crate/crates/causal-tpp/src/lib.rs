//! Multivariate temporal point process whose intensity aggregates direct
//! and multi-hop influences over a learned, time-varying causal graph.
//!
//! Event types influence each other along weighted edges produced by an
//! attention layer over recency-aware type embeddings; chains of past
//! events contribute through learned decay curves, one term per influence
//! order. Training minimizes the exact negative log likelihood plus
//! acyclicity and sparsity penalties, with reverse-mode differentiation
//! through the whole computation. The crate covers the full workflow:
//! likelihood evaluation and fitting ([`loss`], [`train`]), thinning-based
//! simulation and goodness of fit ([`simulate`]), next-event prediction and
//! structure recovery ([`eval`]), causal-graph extraction ([`graph`]), and
//! the file formats and command-line tool gluing them together ([`io`],
//! [`cli`]).
//!
//! The `examples/` directory walks through the workflow end to end;
//! `examples/structure_recovery.rs` is a good starting point.

pub mod autodiff;
pub mod cli;
pub mod decay;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod intensity;
pub mod io;
pub mod loss;
pub mod mat;
pub mod params;
pub mod simulate;
pub mod train;
pub mod types;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use params::ModelParameters;
pub use types::{Event, EventSequence, HyperParameters, Variant};
