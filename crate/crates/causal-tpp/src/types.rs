//! Domain types: events, sequences, model variants, and hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single occurrence: a timestamp and an event-type index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: usize,
}

/// Time-ordered events observed over the window [0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub events: Vec<Event>,
    pub horizon: f64,
}

impl EventSequence {
    pub fn new(events: Vec<Event>, horizon: f64) -> Self {
        EventSequence { events, horizon }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with timestamps strictly before `t`.
    pub fn before(&self, t: f64) -> &[Event] {
        let n = self.events.partition_point(|e| e.time < t);
        &self.events[..n]
    }
}

/// Checks strict time ordering, window membership, and type range.
pub fn validate_sequence(seq: &EventSequence, num_types: usize) -> Result<()> {
    if !(seq.horizon > 0.0) || !seq.horizon.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "observation horizon must be positive and finite, got {}",
            seq.horizon
        )));
    }
    let mut previous = f64::NEG_INFINITY;
    for (index, e) in seq.events.iter().enumerate() {
        if !e.time.is_finite() || e.time < 0.0 || e.time > seq.horizon {
            return Err(Error::OutsideWindow {
                index,
                time: e.time,
                horizon: seq.horizon,
            });
        }
        if index > 0 && e.time <= previous {
            return Err(Error::NonMonotonicTime {
                index,
                time: e.time,
                previous,
            });
        }
        if e.kind >= num_types {
            return Err(Error::TypeOutOfRange {
                index,
                found: e.kind,
                num_types,
            });
        }
        previous = e.time;
    }
    Ok(())
}

/// Model family ladder, from a classical baseline to the full model.
///
/// The ladder varies two axes: how many hops of indirect excitation the
/// intensity aggregates, and whether the influence graph is recomputed at
/// every query time or held static.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Self-excitation only: diagonal static graph, single hop.
    HawkesUni,
    /// Full static graph, single hop.
    HawkesMulti,
    /// Static graph with multi-hop aggregation.
    MultiOrderStatic,
    /// Time-varying graph with multi-hop aggregation.
    FullDynamic,
}

impl Variant {
    /// Number of influence orders this variant aggregates.
    pub fn effective_order(self, max_order: usize) -> usize {
        match self {
            Variant::HawkesUni | Variant::HawkesMulti => 1,
            Variant::MultiOrderStatic | Variant::FullDynamic => max_order,
        }
    }

    /// Whether type embeddings are augmented with recency encodings at the
    /// query time. Static variants use bare type embeddings, so their graph
    /// does not change over time.
    pub fn dynamic_embeddings(self) -> bool {
        matches!(self, Variant::FullDynamic)
    }

    /// Whether off-diagonal influence is masked out.
    pub fn self_excitation_only(self) -> bool {
        matches!(self, Variant::HawkesUni)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::HawkesUni => "hawkes_uni",
            Variant::HawkesMulti => "hawkes_multi",
            Variant::MultiOrderStatic => "multi_order_static",
            Variant::FullDynamic => "full_dynamic",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hawkes_uni" => Ok(Variant::HawkesUni),
            "hawkes_multi" => Ok(Variant::HawkesMulti),
            "multi_order_static" => Ok(Variant::MultiOrderStatic),
            "full_dynamic" => Ok(Variant::FullDynamic),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant `{other}` (expected hawkes_uni, hawkes_multi, multi_order_static, or full_dynamic)"
            ))),
        }
    }
}

/// Architecture sizes and fixed modeling constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParameters {
    /// Number of event types K.
    pub num_types: usize,
    /// Half-width of the positional encoding; embeddings have 2x this size.
    pub embed_half_dim: usize,
    /// Attention projection size.
    pub attn_dim: usize,
    /// Hidden width of the decay network.
    pub hidden_dim: usize,
    /// Maximum influence order aggregated by the intensity.
    pub max_order: usize,
    /// Sharpness of the edge activation mapping weights to (0, 1).
    pub sharpness: f64,
    /// Activation threshold above which an edge enters the causal graph.
    pub edge_threshold: f64,
    /// Coefficient of the acyclicity penalty.
    pub acyclic_weight: f64,
    /// Coefficient of the L1 sparsity penalty.
    pub sparsity_weight: f64,
    /// Interior quadrature points inserted per inter-event interval.
    pub integration_substeps: usize,
    /// Floor added to every intensity to keep log terms finite.
    pub intensity_floor: f64,
    pub variant: Variant,
    /// Optional cap on the number of most recent history events per query.
    pub max_history: Option<usize>,
    /// Inference-time option: zero influence along edges absent from the
    /// thresholded graph.
    pub mask_by_dag: bool,
    /// Reuse the influence graph of an interval's first quadrature point for
    /// the whole interval instead of recomputing it at every point.
    pub frozen_grid_weights: bool,
}

impl HyperParameters {
    pub fn defaults(num_types: usize) -> Self {
        HyperParameters {
            num_types,
            embed_half_dim: 8,
            attn_dim: 8,
            hidden_dim: 16,
            max_order: 3.min(num_types.saturating_sub(1)).max(1),
            sharpness: 1.0,
            edge_threshold: 0.5,
            acyclic_weight: 0.1,
            sparsity_weight: 0.01,
            integration_substeps: 10,
            intensity_floor: 1e-9,
            variant: Variant::FullDynamic,
            max_history: None,
            mask_by_dag: false,
            frozen_grid_weights: false,
        }
    }

    /// Orders actually aggregated under the configured variant.
    pub fn effective_order(&self) -> usize {
        self.variant.effective_order(self.max_order)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_types < 2 {
            return fail(format!(
                "at least 2 event types required, got {}",
                self.num_types
            ));
        }
        if self.embed_half_dim == 0 || self.attn_dim == 0 || self.hidden_dim == 0 {
            return fail("embedding, attention, and hidden sizes must be positive".into());
        }
        if self.max_order == 0 || self.max_order > self.num_types - 1 {
            return fail(format!(
                "max order must lie in [1, {}], got {}",
                self.num_types - 1,
                self.max_order
            ));
        }
        if !(self.sharpness > 0.0) {
            return fail(format!("sharpness must be positive, got {}", self.sharpness));
        }
        if !(0.0..1.0).contains(&self.edge_threshold) {
            return fail(format!(
                "edge threshold must lie in [0, 1), got {}",
                self.edge_threshold
            ));
        }
        if self.acyclic_weight < 0.0 || self.sparsity_weight < 0.0 {
            return fail("penalty weights must be nonnegative".into());
        }
        if !(self.intensity_floor > 0.0) {
            return fail(format!(
                "intensity floor must be positive, got {}",
                self.intensity_floor
            ));
        }
        if self.max_history == Some(0) {
            return fail("history cap must be at least 1 when set".into());
        }
        Ok(())
    }
}
