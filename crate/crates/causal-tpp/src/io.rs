//! File formats: event corpora, model checkpoints, graph snapshots, and
//! small JSON/TOML helpers shared by the command-line tools.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::mat::Mat;
use crate::params::{tensor_specs, ModelParameters, ParamDims};
use crate::simulate::PlantedGenerator;
use crate::types::{Event, EventSequence, HyperParameters, Variant};

const CHECKPOINT_MAGIC: &[u8; 4] = b"CTPP";
const CHECKPOINT_VERSION: u32 = 1;

/// Serializes any value as pretty JSON at `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(
            &serde_json::to_string(item).map_err(|e| Error::parse(path, e.to_string()))?,
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusEvent {
    t: f64,
    k: usize,
}

/// One sequence per line: an identifier, the observation horizon `T`, and
/// the time-ordered events.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    seq_id: usize,
    #[serde(rename = "T")]
    horizon: f64,
    events: Vec<CorpusEvent>,
}

pub fn write_corpus(path: &Path, corpus: &[EventSequence]) -> Result<()> {
    let records: Vec<CorpusRecord> = corpus
        .iter()
        .enumerate()
        .map(|(seq_id, seq)| CorpusRecord {
            seq_id,
            horizon: seq.horizon,
            events: seq
                .events
                .iter()
                .map(|e| CorpusEvent { t: e.time, k: e.kind })
                .collect(),
        })
        .collect();
    write_jsonl(path, &records)
}

/// Loads a corpus, multiplying every time and horizon by `time_scale` so
/// data recorded in inconvenient units can be brought to model scale.
/// Sequences keep their file order.
pub fn read_corpus(path: &Path, time_scale: f64) -> Result<Vec<EventSequence>> {
    if !(time_scale > 0.0) || !time_scale.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "time scale must be positive and finite, got {time_scale}"
        )));
    }
    let records: Vec<CorpusRecord> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .map(|r| {
            EventSequence::new(
                r.events
                    .into_iter()
                    .map(|e| Event {
                        time: e.t * time_scale,
                        kind: e.k,
                    })
                    .collect(),
                r.horizon * time_scale,
            )
        })
        .collect())
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn corrupt(&self, what: &str) -> Error {
        Error::CorruptCheckpoint(format!("{}: {what}", self.path.display()))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(self.corrupt("unexpected end of file"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn text(&mut self) -> Result<String> {
        let len = self.u64()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("non-UTF8 string"))
    }
}

fn push_text(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Saves parameters with their hyperparameters in the versioned binary
/// checkpoint format: magic, version, hyperparameters, then each parameter
/// tensor by name. All floats are little-endian and round-trip exactly.
pub fn save_checkpoint(
    path: &Path,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());

    out.extend_from_slice(&(hp.num_types as u64).to_le_bytes());
    out.extend_from_slice(&(hp.embed_half_dim as u64).to_le_bytes());
    out.extend_from_slice(&(hp.attn_dim as u64).to_le_bytes());
    out.extend_from_slice(&(hp.hidden_dim as u64).to_le_bytes());
    out.extend_from_slice(&(hp.max_order as u64).to_le_bytes());
    out.extend_from_slice(&hp.sharpness.to_le_bytes());
    out.extend_from_slice(&hp.edge_threshold.to_le_bytes());
    out.extend_from_slice(&hp.acyclic_weight.to_le_bytes());
    out.extend_from_slice(&hp.sparsity_weight.to_le_bytes());
    out.extend_from_slice(&(hp.integration_substeps as u64).to_le_bytes());
    out.extend_from_slice(&hp.intensity_floor.to_le_bytes());
    push_text(&mut out, hp.variant.name());
    match hp.max_history {
        Some(cap) => {
            out.push(1);
            out.extend_from_slice(&(cap as u64).to_le_bytes());
        }
        None => out.push(0),
    }
    out.push(u8::from(hp.mask_by_dag));
    out.push(u8::from(hp.frozen_grid_weights));

    let specs = tensor_specs(params.dims);
    let flat = params.flatten();
    out.extend_from_slice(&(specs.len() as u64).to_le_bytes());
    for spec in &specs {
        push_text(&mut out, spec.name);
        out.extend_from_slice(&(spec.len as u64).to_le_bytes());
        for &v in &flat[spec.offset..spec.offset + spec.len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint, verifying the magic, the format version, the
/// hyperparameter consistency, and every tensor's name and size.
pub fn load_checkpoint(path: &Path) -> Result<(ModelParameters, HyperParameters)> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader {
        buf: &buf,
        pos: 0,
        path,
    };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(r.corrupt("bad magic bytes"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }

    let num_types = r.u64()? as usize;
    let embed_half_dim = r.u64()? as usize;
    let attn_dim = r.u64()? as usize;
    let hidden_dim = r.u64()? as usize;
    let max_order = r.u64()? as usize;
    let sharpness = r.f64()?;
    let edge_threshold = r.f64()?;
    let acyclic_weight = r.f64()?;
    let sparsity_weight = r.f64()?;
    let integration_substeps = r.u64()? as usize;
    let intensity_floor = r.f64()?;
    let variant_name = r.text()?;
    let variant: Variant = variant_name
        .parse()
        .map_err(|_| r.corrupt(&format!("unknown variant `{variant_name}`")))?;
    let max_history = match r.u8()? {
        0 => None,
        1 => Some(r.u64()? as usize),
        _ => return Err(r.corrupt("invalid history-cap flag")),
    };
    let mask_by_dag = r.u8()? != 0;
    let frozen_grid_weights = r.u8()? != 0;

    let hp = HyperParameters {
        num_types,
        embed_half_dim,
        attn_dim,
        hidden_dim,
        max_order,
        sharpness,
        edge_threshold,
        acyclic_weight,
        sparsity_weight,
        integration_substeps,
        intensity_floor,
        variant,
        max_history,
        mask_by_dag,
        frozen_grid_weights,
    };
    hp.validate()
        .map_err(|e| r.corrupt(&format!("inconsistent hyperparameters: {e}")))?;

    let dims = ParamDims::of(&hp);
    let specs = tensor_specs(dims);
    let count = r.u64()? as usize;
    if count != specs.len() {
        return Err(r.corrupt(&format!(
            "expected {} tensors, found {count}",
            specs.len()
        )));
    }
    let mut flat = vec![0.0; specs.iter().map(|s| s.len).sum()];
    for spec in &specs {
        let name = r.text()?;
        if name != spec.name {
            return Err(r.corrupt(&format!(
                "expected tensor `{}`, found `{name}`",
                spec.name
            )));
        }
        let len = r.u64()? as usize;
        if len != spec.len {
            return Err(r.corrupt(&format!(
                "tensor `{name}` has {len} values, expected {}",
                spec.len
            )));
        }
        for slot in flat[spec.offset..spec.offset + spec.len].iter_mut() {
            *slot = r.f64()?;
        }
    }
    if r.pos != buf.len() {
        return Err(r.corrupt("trailing bytes"));
    }
    Ok((ModelParameters::from_flat(dims, &flat), hp))
}

/// One significant edge of an extracted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub activation: f64,
}

/// A causal graph extracted at one query time, with the weights it was
/// thresholded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshotRecord {
    pub time: f64,
    pub num_types: usize,
    /// Row-major structural weights, source type by target type.
    pub weights: Vec<f64>,
    /// Edges whose activation cleared the threshold.
    pub edges: Vec<SnapshotEdge>,
    pub is_dag: bool,
    pub cycle_edges: Vec<(usize, usize)>,
}

impl GraphSnapshotRecord {
    pub fn from_graph(graph: &CausalGraph, weights: &Mat<f64>, sharpness: f64) -> Self {
        let k = graph.adjacency.rows();
        let mut edges = Vec::new();
        for u in 0..k {
            for v in 0..k {
                if graph.adjacency.at(u, v) != 0 {
                    let w = weights.at(u, v);
                    edges.push(SnapshotEdge {
                        from: u,
                        to: v,
                        weight: w,
                        activation: crate::graph::edge_activation(w, sharpness),
                    });
                }
            }
        }
        GraphSnapshotRecord {
            time: graph.time,
            num_types: k,
            weights: weights.data().to_vec(),
            edges,
            is_dag: graph.is_dag,
            cycle_edges: graph.cycle_edges.clone(),
        }
    }
}

pub fn write_graph_snapshots(path: &Path, snapshots: &[GraphSnapshotRecord]) -> Result<()> {
    write_jsonl(path, snapshots)
}

pub fn read_graph_snapshots(path: &Path) -> Result<Vec<GraphSnapshotRecord>> {
    read_jsonl(path)
}

/// Renders one snapshot in DOT format. Edge labels carry the activation to
/// four decimals; edges on cycles are drawn red.
pub fn dot_string(snapshot: &GraphSnapshotRecord) -> String {
    let mut out = String::from("digraph causal {\n  rankdir=LR;\n");
    for t in 0..snapshot.num_types {
        out.push_str(&format!("  n{t} [label=\"type {t}\"];\n"));
    }
    for e in &snapshot.edges {
        let style = if snapshot.cycle_edges.contains(&(e.from, e.to)) {
            ", color=red"
        } else {
            ""
        };
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{:.4}\"{style}];\n",
            e.from, e.to, e.activation
        ));
    }
    out.push_str("}\n");
    out
}

pub fn write_dot(path: &Path, snapshot: &GraphSnapshotRecord) -> Result<()> {
    std::fs::write(path, dot_string(snapshot)).map_err(|e| Error::io(path, e))
}

/// Ground-truth adjacency exchanged between generation and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthAdjacency {
    pub num_types: usize,
    /// Directed true edges as (from, to) pairs.
    pub edges: Vec<(usize, usize)>,
}

impl TruthAdjacency {
    pub fn from_matrix(m: &Mat<u8>) -> Self {
        let mut edges = Vec::new();
        for u in 0..m.rows() {
            for v in 0..m.cols() {
                if m.at(u, v) != 0 {
                    edges.push((u, v));
                }
            }
        }
        TruthAdjacency {
            num_types: m.rows(),
            edges,
        }
    }

    pub fn matrix(&self) -> Result<Mat<u8>> {
        let mut m = Mat::filled(self.num_types, self.num_types, 0u8);
        for &(u, v) in &self.edges {
            if u >= self.num_types || v >= self.num_types {
                return Err(Error::InvalidConfig(format!(
                    "truth edge {u} -> {v} is outside the {} types",
                    self.num_types
                )));
            }
            m.set(u, v, 1);
        }
        Ok(m)
    }
}

/// Loads a planted-generator description from TOML and validates it.
pub fn read_generator(path: &Path) -> Result<PlantedGenerator> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let gen: PlantedGenerator =
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    gen.validate()?;
    Ok(gen)
}

pub fn write_generator(path: &Path, gen: &PlantedGenerator) -> Result<()> {
    let text = toml::to_string_pretty(gen).map_err(|e| Error::parse(path, e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::PlantedEdge;
    use crate::train::TrainLogRecord;
    use tempfile::tempdir;

    fn sample_corpus() -> Vec<EventSequence> {
        vec![
            EventSequence::new(
                vec![Event { time: 0.5, kind: 0 }, Event { time: 1.25, kind: 2 }],
                3.0,
            ),
            EventSequence::new(vec![], 2.0),
        ]
    }

    #[test]
    fn corpus_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let corpus = sample_corpus();
        write_corpus(&path, &corpus).unwrap();
        let back = read_corpus(&path, 1.0).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn corpus_time_scale_multiplies_on_load() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_corpus(&path, &sample_corpus()).unwrap();
        let scaled = read_corpus(&path, 2.0).unwrap();
        assert_eq!(scaled[0].events[0].time, 1.0);
        assert_eq!(scaled[0].events[1].time, 2.5);
        assert_eq!(scaled[0].horizon, 6.0);
        assert!(read_corpus(&path, 0.0).is_err());
        assert!(read_corpus(&path, f64::NAN).is_err());
    }

    #[test]
    fn corpus_reads_the_documented_field_names() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("hand.jsonl");
        std::fs::write(
            &path,
            "{\"seq_id\":0,\"T\":5.0,\"events\":[{\"t\":1.5,\"k\":1}]}\n\n",
        )
        .unwrap();
        let corpus = read_corpus(&path, 1.0).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].horizon, 5.0);
        assert_eq!(corpus[0].events, vec![Event { time: 1.5, kind: 1 }]);
    }

    #[test]
    fn corpus_parse_errors_carry_the_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"seq_id\":0,\"T\":5.0,\"events\":[]}\nnot json\n").unwrap();
        match read_corpus(&path, 1.0) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("line 2")),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_files_surface_io_errors_with_the_path() {
        let err = read_corpus(Path::new("/nonexistent/corpus.jsonl"), 1.0);
        match err {
            Err(Error::Io { path, .. }) => assert!(path.contains("nonexistent")),
            other => panic!("expected an io error, got {other:?}"),
        }
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut hp = HyperParameters::defaults(3);
        hp.max_history = Some(25);
        hp.mask_by_dag = true;
        hp.variant = Variant::MultiOrderStatic;
        let params = ModelParameters::init(&hp, 7);
        save_checkpoint(&path, &params, &hp).unwrap();
        let (loaded, hp_back) = load_checkpoint(&path).unwrap();
        assert_eq!(hp_back, hp);
        let a = params.flatten();
        let b = loaded.flatten();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn checkpoint_rejects_bad_magic_and_versions() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let hp = HyperParameters::defaults(2);
        let params = ModelParameters::init(&hp, 1);
        save_checkpoint(&path, &params, &hp).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CorruptCheckpoint(_))
        ));

        let mut future = good.clone();
        future[4..8].copy_from_slice(&9u32.to_le_bytes());
        std::fs::write(&path, &future).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::VersionMismatch {
                found: 9,
                expected: 1
            })
        ));

        std::fs::write(&path, &good[..good.len() / 2]).unwrap();
        match load_checkpoint(&path) {
            Err(Error::CorruptCheckpoint(msg)) => {
                assert!(msg.contains("unexpected end of file"))
            }
            other => panic!("expected corruption, got {other:?}"),
        }

        let mut trailing = good.clone();
        trailing.push(0);
        std::fs::write(&path, &trailing).unwrap();
        match load_checkpoint(&path) {
            Err(Error::CorruptCheckpoint(msg)) => assert!(msg.contains("trailing")),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn generator_toml_round_trips_and_parses_hand_input() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("generator.toml");
        let gen = PlantedGenerator {
            num_types: 3,
            base_rates: vec![0.4, 0.3, 0.2],
            decay_rate: 2.0,
            horizon: 15.0,
            edges: vec![PlantedEdge { from: 0, to: 2, weight: 0.7 }],
        };
        write_generator(&path, &gen).unwrap();
        assert_eq!(read_generator(&path).unwrap(), gen);

        std::fs::write(
            &path,
            r#"
num_types = 2
base_rates = [0.5, 0.1]
decay_rate = 1.5
horizon = 10.0

[[edges]]
from = 0
to = 1
weight = 0.9
"#,
        )
        .unwrap();
        let hand = read_generator(&path).unwrap();
        assert_eq!(hand.num_types, 2);
        assert_eq!(hand.edges[0].weight, 0.9);

        // Loading validates: a cyclic description is rejected at read time.
        std::fs::write(
            &path,
            r#"
num_types = 2
base_rates = [0.5, 0.1]
decay_rate = 1.5
horizon = 10.0

[[edges]]
from = 0
to = 1
weight = 0.9

[[edges]]
from = 1
to = 0
weight = 0.2
"#,
        )
        .unwrap();
        assert!(read_generator(&path).is_err());
    }

    #[test]
    fn snapshots_round_trip_and_render_dot() {
        let weights = Mat::from_fn(2, 2, |u, v| if (u, v) == (0, 1) { 1.5 } else { 0.0 });
        let graph = crate::graph::threshold_graph(
            &crate::graph::StructuralWeights {
                time: 2.5,
                weights: weights.clone(),
            },
            &HyperParameters::defaults(2),
        );
        let record = GraphSnapshotRecord::from_graph(&graph, &weights, 1.0);
        assert_eq!(record.edges.len(), 1);
        assert_eq!(record.edges[0].from, 0);
        assert!(record.is_dag);

        let dir = tempdir().unwrap();
        let path = dir.path().join("graphs.jsonl");
        write_graph_snapshots(&path, &[record.clone()]).unwrap();
        let back = read_graph_snapshots(&path).unwrap();
        assert_eq!(back, vec![record.clone()]);

        let dot = dot_string(&record);
        assert!(dot.starts_with("digraph causal {"));
        assert!(dot.contains("n0 [label=\"type 0\"]"));
        let act = crate::graph::edge_activation(1.5, 1.0);
        assert!(dot.contains(&format!("n0 -> n1 [label=\"{act:.4}\"]")));
        assert!(!dot.contains("color=red"));

        // A self-loop is a cycle edge and gets the highlight.
        let loop_weights = Mat::from_fn(2, 2, |u, v| if u == v && u == 0 { 2.0 } else { 0.0 });
        let loop_graph = crate::graph::threshold_graph(
            &crate::graph::StructuralWeights {
                time: 0.0,
                weights: loop_weights.clone(),
            },
            &HyperParameters::defaults(2),
        );
        let loop_record = GraphSnapshotRecord::from_graph(&loop_graph, &loop_weights, 1.0);
        assert!(!loop_record.is_dag);
        assert!(dot_string(&loop_record).contains("color=red"));
    }

    #[test]
    fn jsonl_round_trips_train_logs() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let records = vec![TrainLogRecord {
            epoch: 0,
            split: "train".into(),
            nll: 1.5,
            acyclic: 0.1,
            sparse: 0.05,
            total: 1.65,
            wall_time_s: 0.25,
        }];
        write_jsonl(&path, &records).unwrap();
        let back: Vec<TrainLogRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn truth_adjacency_round_trips_through_matrices() {
        let m = Mat::from_fn(3, 3, |u, v| u8::from((u, v) == (0, 2) || (u, v) == (1, 2)));
        let truth = TruthAdjacency::from_matrix(&m);
        assert_eq!(truth.edges, vec![(0, 2), (1, 2)]);
        assert_eq!(truth.matrix().unwrap(), m);

        let bad = TruthAdjacency {
            num_types: 2,
            edges: vec![(0, 5)],
        };
        assert!(bad.matrix().is_err());
    }

    #[test]
    fn paths_json_round_trips() {
        use crate::eval::TypePath;
        let dir = tempdir().unwrap();
        let path = dir.path().join("paths.json");
        let paths = vec![TypePath {
            label: "chain".into(),
            types: vec![0, 1, 2],
        }];
        write_json(&path, &paths).unwrap();
        let back: Vec<TypePath> = read_json(&path).unwrap();
        assert_eq!(back, paths);

        std::fs::write(&path, "[{\"label\": \"p\", \"types\": [1, 0]}]").unwrap();
        let hand: Vec<TypePath> = read_json(&path).unwrap();
        assert_eq!(hand[0].types, vec![1, 0]);
    }
}
