//! Held-out evaluation: next-event prediction, agreement between declared
//! causal paths and extracted graphs, and structure recovery against a
//! known ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge_activation, structural_weights, threshold_graph, CausalGraph};
use crate::intensity::{
    compose_intensities, effective_weights, history_window, order_intensities, terminal_decays,
    HistoryKernel,
};
use crate::mat::Mat;
use crate::params::ModelParameters;
use crate::types::{Event, EventSequence, HyperParameters};

/// Probability mass allowed beyond the integration window before a
/// prediction is flagged as truncated.
pub const TRUNCATION_MASS: f64 = 0.05;
/// Trapezoid resolution of the prediction integrals.
const PREDICTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NextEventPrediction {
    /// Expected arrival time of the next event, integrated over the window;
    /// an underestimate when `truncated` is set.
    pub expected_time: f64,
    /// Most probable type of the next event; ties resolve to the smallest
    /// type index.
    pub predicted_kind: usize,
    /// Probability that the next event has each type, conditioned on it
    /// arriving inside the window.
    pub kind_probabilities: Vec<f64>,
    /// Set when more than the tolerated mass of the arrival distribution
    /// lies beyond the window.
    pub truncated: bool,
}

/// Distribution of the next event after `from`, given the events up to and
/// including `from`.
///
/// Integrates the arrival density over `[from, from + span]` on a fixed
/// trapezoid grid. The survival function uses the same strictly-before
/// history convention as the likelihood; the leading knot therefore takes
/// the left limit of the intensity, which the grid resolution absorbs.
pub fn next_event_prediction(
    prefix: &[Event],
    from: f64,
    span: f64,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<NextEventPrediction> {
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "prediction span must be positive and finite, got {span}"
        )));
    }
    if prefix.last().is_some_and(|e| e.time > from) {
        return Err(Error::InvalidConfig(
            "prediction start precedes the end of the history".into(),
        ));
    }
    let k = hp.num_types;
    let l_eff = hp.effective_order();
    let kernel = HistoryKernel::build(prefix, params);

    let lambdas_at = |s: f64| -> Result<Vec<f64>> {
        let window = history_window(prefix, s, hp.max_history);
        let offset = prefix.partition_point(|e| e.time < s) - window.len();
        let terminal = terminal_decays(window, s, params);
        let w = effective_weights(window, s, params, hp)?;
        let per_order = order_intensities(window, offset, &kernel, &terminal, &w, l_eff, 0.0);
        let lam = compose_intensities(&per_order, params, hp);
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                context: "prediction intensity",
            });
        }
        Ok(lam)
    };

    let step = span / PREDICTION_STEPS as f64;
    let mut lam_prev = lambdas_at(from)?;
    let mut survival = 1.0;
    let mut cumulative = 0.0;
    let mut expected_wait = 0.0;
    let mut kind_mass = vec![0.0; k];
    for j in 1..=PREDICTION_STEPS {
        let s = from + span * j as f64 / PREDICTION_STEPS as f64;
        let lam = lambdas_at(s)?;
        let tot_prev: f64 = lam_prev.iter().sum();
        let tot: f64 = lam.iter().sum();
        let survival_prev = survival;
        cumulative += 0.5 * (tot_prev + tot) * step;
        survival = (-cumulative).exp();
        expected_wait += 0.5 * (survival_prev + survival) * step;
        for t in 0..k {
            kind_mass[t] += 0.5 * (lam_prev[t] * survival_prev + lam[t] * survival) * step;
        }
        lam_prev = lam;
    }

    let total_mass: f64 = kind_mass.iter().sum();
    let kind_probabilities: Vec<f64> = kind_mass.iter().map(|m| m / total_mass).collect();
    let mut predicted_kind = 0;
    for t in 1..k {
        if kind_probabilities[t] > kind_probabilities[predicted_kind] {
            predicted_kind = t;
        }
    }
    Ok(NextEventPrediction {
        expected_time: from + expected_wait,
        predicted_kind,
        kind_probabilities,
        truncated: survival > TRUNCATION_MASS,
    })
}

/// One next-event prediction paired with what actually happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sequence: usize,
    /// Index of the predicted event within its sequence.
    pub index: usize,
    pub actual_time: f64,
    pub predicted_time: f64,
    pub actual_kind: usize,
    pub predicted_kind: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalMetrics {
    /// Number of predictions: every event with at least one predecessor.
    pub count: usize,
    pub time_rmse: f64,
    pub kind_accuracy: f64,
    pub nll_per_event: f64,
    pub truncated: usize,
}

/// Predicts each event from its predecessors, skipping first events, which
/// have no history to condition on.
pub fn prediction_records(
    corpus: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (s_idx, seq) in corpus.iter().enumerate() {
        crate::types::validate_sequence(seq, hp.num_types)?;
        for i in 1..seq.len() {
            let from = seq.events[i - 1].time;
            let span = seq.horizon - from;
            if !(span > 0.0) {
                continue;
            }
            let p = next_event_prediction(&seq.events[..i], from, span, params, hp)?;
            out.push(PredictionRecord {
                sequence: s_idx,
                index: i,
                actual_time: seq.events[i].time,
                predicted_time: p.expected_time,
                actual_kind: seq.events[i].kind,
                predicted_kind: p.predicted_kind,
                truncated: p.truncated,
            });
        }
    }
    Ok(out)
}

/// Average likelihood cost per observed event over the corpus, weighting
/// every event equally rather than every sequence.
pub fn nll_per_event(
    corpus: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<f64> {
    let mut total = 0.0;
    let mut events = 0usize;
    for seq in corpus {
        if seq.is_empty() {
            continue;
        }
        total += crate::loss::nll(seq, params, hp)?;
        events += seq.len();
    }
    if events == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(total / events as f64)
}

/// Aggregates prediction records into summary metrics. An empty record set
/// yields zeroed metrics with a zero count.
pub fn summarize(records: &[PredictionRecord], nll_per_event: f64) -> EvalMetrics {
    if records.is_empty() {
        return EvalMetrics {
            count: 0,
            time_rmse: 0.0,
            kind_accuracy: 0.0,
            nll_per_event,
            truncated: 0,
        };
    }
    let n = records.len() as f64;
    let sq_err: f64 = records
        .iter()
        .map(|r| (r.predicted_time - r.actual_time).powi(2))
        .sum();
    let hits = records
        .iter()
        .filter(|r| r.predicted_kind == r.actual_kind)
        .count();
    EvalMetrics {
        count: records.len(),
        time_rmse: (sq_err / n).sqrt(),
        kind_accuracy: hits as f64 / n,
        nll_per_event,
        truncated: records.iter().filter(|r| r.truncated).count(),
    }
}

/// Full held-out evaluation: per-event predictions plus their summary.
pub fn evaluate(
    corpus: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<(EvalMetrics, Vec<PredictionRecord>)> {
    let records = prediction_records(corpus, params, hp)?;
    let nll = nll_per_event(corpus, params, hp)?;
    Ok((summarize(&records, nll), records))
}

/// A declared causal chain of event types, checked against extracted graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypePath {
    pub label: String,
    pub types: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMatch {
    pub label: String,
    /// Events of the path's terminal type, each providing one check.
    pub occurrences: usize,
    /// Checks at which every edge of the path was present in the graph.
    pub matched: usize,
}

impl PathMatch {
    pub fn rate(&self) -> f64 {
        self.matched as f64 / self.occurrences.max(1) as f64
    }
}

fn validate_paths(paths: &[TypePath], num_types: usize) -> Result<()> {
    for p in paths {
        if p.types.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "path `{}` needs at least two types",
                p.label
            )));
        }
        if let Some(&bad) = p.types.iter().find(|&&t| t >= num_types) {
            return Err(Error::InvalidConfig(format!(
                "path `{}` references type {bad}, but only {num_types} exist",
                p.label
            )));
        }
    }
    Ok(())
}

/// Checks each declared path at every occurrence of its terminal type,
/// against graphs produced by `graph_at` for the events strictly before the
/// occurrence. A path matches when all its consecutive edges are present.
pub fn match_paths_with<F>(
    corpus: &[EventSequence],
    paths: &[TypePath],
    num_types: usize,
    mut graph_at: F,
) -> Result<Vec<PathMatch>>
where
    F: FnMut(&[Event], f64) -> Result<CausalGraph>,
{
    validate_paths(paths, num_types)?;
    let mut out: Vec<PathMatch> = paths
        .iter()
        .map(|p| PathMatch {
            label: p.label.clone(),
            occurrences: 0,
            matched: 0,
        })
        .collect();
    for seq in corpus {
        for (i, e) in seq.events.iter().enumerate() {
            let relevant: Vec<usize> = paths
                .iter()
                .enumerate()
                .filter(|(_, p)| *p.types.last().unwrap() == e.kind)
                .map(|(pi, _)| pi)
                .collect();
            if relevant.is_empty() {
                continue;
            }
            let graph = graph_at(&seq.events[..i], e.time)?;
            for pi in relevant {
                out[pi].occurrences += 1;
                let ok = paths[pi]
                    .types
                    .windows(2)
                    .all(|pair| graph.adjacency.at(pair[0], pair[1]) != 0);
                if ok {
                    out[pi].matched += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Path agreement under the model: graphs are extracted by thresholding the
/// structural weights at each occurrence time.
pub fn match_paths(
    corpus: &[EventSequence],
    paths: &[TypePath],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<Vec<PathMatch>> {
    match_paths_with(corpus, paths, hp.num_types, |history, t| {
        let w = structural_weights(history, t, params, hp)?;
        Ok(threshold_graph(&w, hp))
    })
}

/// Edge scores for structure recovery: each ordered pair's activation
/// averaged over a snapshot at every event time in the corpus.
pub fn mean_edge_activations(
    corpus: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<Mat<f64>> {
    let k = hp.num_types;
    let mut acc = Mat::zeros(k, k);
    let mut snapshots = 0usize;
    for seq in corpus {
        for (i, e) in seq.events.iter().enumerate() {
            let w = structural_weights(&seq.events[..i], e.time, params, hp)?;
            for u in 0..k {
                for v in 0..k {
                    let a = edge_activation(w.weights.at(u, v), hp.sharpness);
                    acc.set(u, v, acc.at(u, v) + a);
                }
            }
            snapshots += 1;
        }
    }
    if snapshots == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(acc.map(|v| v / snapshots as f64))
}

/// Probability that a uniformly drawn true edge outscores a uniformly drawn
/// non-edge, counting ties as half. Only off-diagonal pairs participate.
/// `None` when either class is empty.
pub fn ranking_auc(scores: &Mat<f64>, truth: &Mat<u8>) -> Option<f64> {
    let k = truth.rows();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for u in 0..k {
        for v in 0..k {
            if u == v {
                continue;
            }
            if truth.at(u, v) != 0 {
                positives.push(scores.at(u, v));
            } else {
                negatives.push(scores.at(u, v));
            }
        }
    }
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut credit = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                credit += 1.0;
            } else if p == n {
                credit += 0.5;
            }
        }
    }
    Some(credit / (positives.len() * negatives.len()) as f64)
}

/// Structure recovery score of the model against a known adjacency.
pub fn edge_recovery_auc(
    corpus: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
    truth: &Mat<u8>,
) -> Result<Option<f64>> {
    if truth.rows() != hp.num_types || truth.cols() != hp.num_types {
        return Err(Error::TypeCountMismatch {
            context: "ground-truth adjacency",
            expected: hp.num_types,
            found: truth.rows(),
        });
    }
    let scores = mean_edge_activations(corpus, params, hp)?;
    Ok(ranking_auc(&scores, truth))
}
