//! Continuous-time encodings and per-type embeddings.
//!
//! A query time is summarized per type by the gap since that type last
//! occurred. The gap is mapped through a sinusoidal encoding and added to a
//! learned type embedding; the resulting rows feed the attention step that
//! produces the influence graph. Sinusoid inputs are data, not parameters,
//! so the encoding itself is computed in plain `f64` and enters the tape as
//! constants.

use crate::autodiff::Real;
use crate::mat::Mat;
use crate::params::ParamSet;
use crate::types::Event;

/// Sinusoidal encoding of a scalar into 2*half_dim components: sines on
/// geometrically spaced frequencies first, matching cosines after. The first
/// frequency is 1, so `half_dim = 1` gives [sin(x), cos(x)].
pub fn positional_encoding(x: f64, half_dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * half_dim];
    for i in 0..half_dim {
        let scaled = x / 10000f64.powf(i as f64 / half_dim as f64);
        out[i] = scaled.sin();
        out[i + half_dim] = scaled.cos();
    }
    out
}

/// Per-type recency at a query time: the gap since each type's most recent
/// occurrence strictly before the query.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeStateAtTime {
    pub time: f64,
    /// Most recent occurrence strictly before `time`, per type.
    pub last_seen: Vec<Option<f64>>,
    /// Gap since the last occurrence; for never-observed types, the time
    /// elapsed since the window start.
    pub gaps: Vec<f64>,
}

/// Recency state from the events of `history` with timestamps strictly
/// before `time`.
pub fn type_state(history: &[Event], time: f64, num_types: usize) -> TypeStateAtTime {
    let mut last_seen = vec![None; num_types];
    for e in history {
        if e.time >= time {
            break;
        }
        last_seen[e.kind] = Some(e.time);
    }
    let gaps = last_seen
        .iter()
        .map(|ls| time - ls.unwrap_or(0.0))
        .collect();
    TypeStateAtTime {
        time,
        last_seen,
        gaps,
    }
}

/// State used by static model variants: every gap pinned to zero, so the
/// embeddings (and hence the influence graph) do not depend on the query.
pub fn static_state(time: f64, num_types: usize) -> TypeStateAtTime {
    TypeStateAtTime {
        time,
        last_seen: vec![None; num_types],
        gaps: vec![0.0; num_types],
    }
}

/// K x embed_dim state matrix: row k is the encoded gap of type k plus that
/// type's learned embedding.
pub fn build_embeddings<R: Real>(state: &TypeStateAtTime, params: &ParamSet<R>) -> Mat<R> {
    let k = params.dims.num_types;
    let e = params.dims.embed_dim;
    let half = e / 2;
    debug_assert_eq!(state.gaps.len(), k);
    let mut pe_row = Vec::new();
    Mat::from_fn(k, e, |r, c| {
        if c == 0 {
            pe_row = positional_encoding(state.gaps[r], half);
        }
        params.type_embed[r * e + c].shift(pe_row[c])
    })
}
