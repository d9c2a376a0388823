//! Influence graphs: attention-derived weights, edge activation and
//! thresholding, path counting, and the differentiable acyclicity penalty.
//!
//! At a query time the per-type state rows attend to each other; the
//! attention context of each type is projected to one row of a K x K weight
//! matrix whose entry (u, v) is the directed influence of type u on type v.
//! Activating and thresholding that matrix yields a directed graph, which is
//! a DAG exactly when the K-th power of its adjacency matrix vanishes.

use crate::autodiff::Real;
use crate::encoding::{build_embeddings, static_state, type_state, TypeStateAtTime};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::params::ParamSet;
use crate::types::{Event, HyperParameters};

/// Slope of the attention score nonlinearity.
const ATTN_SLOPE: f64 = 0.2;

/// Entrywise magnitude below which the acyclicity series is truncated.
const SERIES_TOL: f64 = 1e-12;

/// Influence weights snapshotted at one query time.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralWeights {
    pub time: f64,
    /// Entry (u, v) is the influence of type u on type v.
    pub weights: Mat<f64>,
}

/// Thresholded influence graph at one query time.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    pub time: f64,
    /// 0/1 adjacency; entry (u, v) is the edge u -> v.
    pub adjacency: Mat<u8>,
    pub is_dag: bool,
    /// Edges that lie on at least one directed cycle, in row-major order.
    pub cycle_edges: Vec<(usize, usize)>,
}

/// Pairwise pre-softmax attention scores; entry (u, v) scores source u for
/// target v.
pub fn attention_scores<R: Real>(h: &Mat<R>, params: &ParamSet<R>) -> Result<Mat<R>> {
    let k = params.dims.num_types;
    let e = params.dims.embed_dim;
    let a = params.dims.attn_dim;
    debug_assert_eq!(h.rows(), k);
    debug_assert_eq!(h.cols(), e);

    // The scoring vector splits over the concatenation, so each side reduces
    // to one scalar per type: score(u, v) = LeakyReLU(s_src[u] + s_tgt[v]).
    let half = |proj: &[R], coeff: &[R]| -> Vec<R> {
        (0..k)
            .map(|r| {
                let mut s = params.lit(0.0);
                for i in 0..a {
                    let mut q = params.lit(0.0);
                    for c in 0..e {
                        q = q + proj[i * e + c] * h.at(r, c);
                    }
                    s = s + coeff[i] * q;
                }
                s
            })
            .collect()
    };
    let s_src = half(&params.attn_query, &params.attn_vec[..a]);
    let s_tgt = half(&params.attn_key, &params.attn_vec[a..]);

    let scores = Mat::from_fn(k, k, |u, v| {
        (s_src[u] + s_tgt[v]).leaky_relu(ATTN_SLOPE)
    });
    if scores.data().iter().any(|s| !s.val().is_finite()) {
        return Err(Error::NumericOverflow {
            context: "attention scores",
        });
    }
    Ok(scores)
}

/// K x K influence weights from a state matrix: per-target softmax over
/// sources, context aggregation, and projection of each type's context to
/// its outgoing-weight row.
pub fn structural_weights_from<R: Real>(h: &Mat<R>, params: &ParamSet<R>) -> Result<Mat<R>> {
    let k = params.dims.num_types;
    let e = params.dims.embed_dim;
    let scores = attention_scores(h, params)?;

    // Softmax per target over sources, stabilized by the column max; the
    // shift cancels exactly, so stabilization does not change the result.
    let mut context = Mat::filled(k, e, params.lit(0.0));
    for v in 0..k {
        let mut m = f64::NEG_INFINITY;
        for u in 0..k {
            m = m.max(scores.at(u, v).val());
        }
        let weights: Vec<R> = (0..k).map(|u| scores.at(u, v).shift(-m).exp()).collect();
        let mut denom = weights[0];
        for &w in &weights[1..] {
            denom = denom + w;
        }
        if !denom.val().is_finite() {
            return Err(Error::NumericOverflow {
                context: "attention softmax",
            });
        }
        for c in 0..e {
            let mut acc = params.lit(0.0);
            for u in 0..k {
                acc = acc + weights[u] * h.at(u, c);
            }
            context.set(v, c, acc / denom);
        }
    }

    // Row u of the output is the projection of u's context: entry (u, v) is
    // the influence u exerts on v.
    Ok(Mat::from_fn(k, k, |u, v| {
        let mut acc = params.lit(0.0);
        for c in 0..e {
            acc = acc + params.edge_proj[v * e + c] * context.at(u, c);
        }
        acc
    }))
}

/// State snapshot used for the graph at time `t` under the configured
/// variant: recency-aware for the dynamic variant, fixed otherwise.
pub fn graph_state(
    history: &[Event],
    t: f64,
    hp: &HyperParameters,
) -> TypeStateAtTime {
    if hp.variant.dynamic_embeddings() {
        type_state(history, t, hp.num_types)
    } else {
        static_state(t, hp.num_types)
    }
}

/// Influence weights at time `t` given the history before `t`, respecting
/// the variant's embedding mode and self-excitation mask.
pub fn influence_weights<R: Real>(
    history: &[Event],
    t: f64,
    params: &ParamSet<R>,
    hp: &HyperParameters,
) -> Result<Mat<R>> {
    let state = graph_state(history, t, hp);
    let h = build_embeddings(&state, params);
    let mut w = structural_weights_from(&h, params)?;
    if hp.variant.self_excitation_only() {
        let k = params.dims.num_types;
        for u in 0..k {
            for v in 0..k {
                if u != v {
                    w.set(u, v, params.lit(0.0));
                }
            }
        }
    }
    Ok(w)
}

/// Plain-value snapshot of the influence weights at one query time.
pub fn structural_weights(
    history: &[Event],
    t: f64,
    params: &ParamSet<f64>,
    hp: &HyperParameters,
) -> Result<StructuralWeights> {
    Ok(StructuralWeights {
        time: t,
        weights: influence_weights(history, t, params, hp)?,
    })
}

/// Maps a raw weight to edge strength in [0, 1); strictly increasing in the
/// magnitude, zero only at zero.
pub fn edge_activation(weight: f64, sharpness: f64) -> f64 {
    1.0 - (-sharpness * weight.abs()).exp()
}

/// Thresholds activated weights into a 0/1 graph and reports whether it is
/// acyclic, listing the edges that lie on cycles.
pub fn threshold_graph(w: &StructuralWeights, hp: &HyperParameters) -> CausalGraph {
    let k = w.weights.rows();
    let adjacency = Mat::from_fn(k, k, |u, v| {
        u8::from(edge_activation(w.weights.at(u, v), hp.sharpness) > hp.edge_threshold)
    });

    // Transitive closure over the thresholded graph; an edge (u, v) lies on
    // a cycle exactly when v reaches u (self-loops included via u == v).
    let mut reach = Mat::from_fn(k, k, |u, v| adjacency.at(u, v) != 0);
    for mid in 0..k {
        for a in 0..k {
            if reach.at(a, mid) {
                for b in 0..k {
                    if reach.at(mid, b) {
                        reach.set(a, b, true);
                    }
                }
            }
        }
    }
    let mut cycle_edges = Vec::new();
    for u in 0..k {
        for v in 0..k {
            if adjacency.at(u, v) != 0 && (u == v || reach.at(v, u)) {
                cycle_edges.push((u, v));
            }
        }
    }
    CausalGraph {
        time: w.time,
        is_dag: cycle_edges.is_empty(),
        adjacency,
        cycle_edges,
    }
}

/// Entry (u, v) counts directed paths of exactly `length` edges from u to v.
pub fn path_count_matrix(adjacency: &Mat<u8>, length: usize) -> Mat<u64> {
    let k = adjacency.rows();
    let a = adjacency.map(|v| v as u64);
    let mut out = Mat::from_fn(k, k, |u, v| u64::from(u == v));
    for _ in 0..length {
        out = Mat::from_fn(k, k, |u, v| {
            let mut acc: u64 = 0;
            for mid in 0..k {
                acc = acc
                    .checked_add(
                        out.at(u, mid)
                            .checked_mul(a.at(mid, v))
                            .expect("path count overflow"),
                    )
                    .expect("path count overflow");
            }
            acc
        });
    }
    out
}

fn square_entrywise<R: Real>(w: &Mat<R>) -> Mat<R> {
    w.map(|x| x * x)
}

fn mat_mul<R: Real>(a: &Mat<R>, b: &Mat<R>, zero: R) -> Mat<R> {
    let k = a.rows();
    Mat::from_fn(k, k, |r, c| {
        let mut acc = zero;
        for m in 0..k {
            acc = acc + a.at(r, m) * b.at(m, c);
        }
        acc
    })
}

fn series_cap(k: usize) -> usize {
    2 * k + 20
}

/// Differentiable acyclicity penalty: trace of the matrix exponential of the
/// entrywise square, minus K. Zero exactly when the weight support is
/// acyclic; any directed cycle through nonzero weights makes it positive.
///
/// The exponential series is truncated once a term's largest entry falls
/// below 1e-12 (the term matrices are entrywise nonnegative, so later terms
/// stay below this bound) or after 2K + 20 terms.
pub fn acyclicity_penalty<R: Real>(w: &Mat<R>) -> Result<R> {
    let k = w.rows();
    debug_assert_eq!(k, w.cols());
    let zero = w.at(0, 0).lit(0.0);
    let m = square_entrywise(w);
    let mut term = m.clone();
    let mut h = zero;
    let mut j = 1usize;
    loop {
        let mut trace = zero;
        let mut largest = 0.0f64;
        for i in 0..k {
            trace = trace + term.at(i, i);
        }
        for v in term.data() {
            largest = largest.max(v.val().abs());
        }
        h = h + trace;
        if !h.val().is_finite() || !largest.is_finite() {
            return Err(Error::NumericOverflow {
                context: "acyclicity series",
            });
        }
        if largest < SERIES_TOL || j >= series_cap(k) {
            break;
        }
        j += 1;
        term = mat_mul(&term, &m, zero);
        let scale = 1.0 / j as f64;
        term = term.map(|x| x.scale(scale));
    }
    Ok(h)
}

/// Plain-value acyclicity penalty.
pub fn acyclicity_value(w: &Mat<f64>) -> Result<f64> {
    acyclicity_penalty(w)
}

/// Exact gradient of the truncated acyclicity penalty: with M the entrywise
/// square and E the matching truncation of exp(M), the gradient is
/// 2 * E^T o W (entrywise product).
pub fn acyclicity_gradient(w: &Mat<f64>) -> Result<Mat<f64>> {
    let k = w.rows();
    let m = square_entrywise(w);
    // E accumulates sum of M^i / i! for i = 0 .. J-1, where J is the number
    // of trace terms the value computation uses; d tr(M^j)/dM = j M^(j-1)T.
    let mut e_acc = Mat::from_fn(k, k, |r, c| f64::from(u8::from(r == c)));
    let mut term = m.clone();
    let mut j = 1usize;
    loop {
        let largest = term.data().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if !largest.is_finite() {
            return Err(Error::NumericOverflow {
                context: "acyclicity series",
            });
        }
        if largest < SERIES_TOL || j >= series_cap(k) {
            break;
        }
        for r in 0..k {
            for c in 0..k {
                e_acc.set(r, c, e_acc.at(r, c) + term.at(r, c));
            }
        }
        j += 1;
        term = mat_mul(&term, &m, 0.0);
        let scale = 1.0 / j as f64;
        term = term.map(|x| x * scale);
    }
    Ok(Mat::from_fn(k, k, |u, v| {
        2.0 * e_acc.at(v, u) * w.at(u, v)
    }))
}

/// Sum of absolute weights.
pub fn sparsity_penalty<R: Real>(w: &Mat<R>) -> R {
    let mut acc = w.at(0, 0).lit(0.0);
    for &v in w.data() {
        acc = acc + v.abs();
    }
    acc
}
