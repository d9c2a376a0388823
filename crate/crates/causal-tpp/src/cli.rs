//! Command-line interface: training, evaluation, simulation, graph
//! extraction, path matching, gradient checking, and synthetic data
//! generation, with a stable exit-code convention.
//!
//! Exit codes: 0 success, 1 usage, 2 data or configuration problems, 3
//! numerical failures.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::eval::{self, EvalMetrics, PathMatch, TypePath};
use crate::graph::{structural_weights, threshold_graph};
use crate::io::{self, GraphSnapshotRecord, TruthAdjacency};
use crate::params::ModelParameters;
use crate::simulate::{self, SimulationConfig};
use crate::train::{self, TrainConfig};
use crate::types::HyperParameters;

#[derive(Parser)]
#[command(
    name = "causal-tpp",
    version,
    about = "Multivariate temporal point process with a learned time-varying causal graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit model parameters to an event corpus.
    Train(TrainArgs),
    /// Evaluate a trained model on a corpus.
    Eval(EvalArgs),
    /// Draw sequences from a trained model.
    Simulate(SimulateArgs),
    /// Extract thresholded causal graphs at chosen times.
    Graphs(GraphsArgs),
    /// Check declared causal chains against extracted graphs.
    MatchPaths(MatchPathsArgs),
    /// Compare analytic gradients against finite differences on toy data.
    Gradcheck(GradcheckArgs),
    /// Sample a corpus from a planted ground-truth generator.
    GenSynthetic(GenSyntheticArgs),
}

/// Entry point shared by the binary and in-process tests. Returns the
/// process exit code instead of exiting, so tests can assert on it.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Graphs(a) => cmd_graphs(a),
        Command::MatchPaths(a) => cmd_match_paths(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Event corpus in JSONL format.
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the trained checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-epoch loss log in JSONL format.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Resume from a checkpoint; its architecture settings take precedence.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Number of event types; inferred from the corpus when omitted.
    #[arg(long)]
    num_types: Option<usize>,
    /// Model family: hawkes_uni, hawkes_multi, multi_order_static, or
    /// full_dynamic.
    #[arg(long, default_value = "full_dynamic")]
    variant: String,
    /// Maximum influence order aggregated by the intensity.
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    embed_half_dim: Option<usize>,
    #[arg(long)]
    attn_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    acyclic_weight: Option<f64>,
    #[arg(long)]
    sparsity_weight: Option<f64>,
    /// Interior quadrature points per inter-event interval.
    #[arg(long)]
    substeps: Option<usize>,
    /// Cap on the most recent history events each query sees.
    #[arg(long)]
    max_history: Option<usize>,
    /// Reuse each interval's first influence graph across its quadrature
    /// points.
    #[arg(long)]
    frozen_grid_weights: bool,
    /// Multiplier applied to all times on load.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Epochs without held-out improvement before stopping.
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Fraction of sequences held out for early stopping.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    /// adam or sgd.
    #[arg(long, default_value = "adam")]
    optimizer: String,
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let corpus = io::read_corpus(&a.corpus, a.time_scale)?;
    let (init, hp) = match &a.init {
        Some(path) => io::load_checkpoint(path)?,
        None => {
            let observed = corpus
                .iter()
                .flat_map(|s| s.events.iter())
                .map(|e| e.kind + 1)
                .max()
                .unwrap_or(0);
            let num_types = a.num_types.unwrap_or(observed.max(2));
            let mut hp = HyperParameters::defaults(num_types);
            hp.variant = a.variant.parse()?;
            if let Some(v) = a.max_order {
                hp.max_order = v;
            }
            if let Some(v) = a.embed_half_dim {
                hp.embed_half_dim = v;
            }
            if let Some(v) = a.attn_dim {
                hp.attn_dim = v;
            }
            if let Some(v) = a.hidden_dim {
                hp.hidden_dim = v;
            }
            if let Some(v) = a.acyclic_weight {
                hp.acyclic_weight = v;
            }
            if let Some(v) = a.sparsity_weight {
                hp.sparsity_weight = v;
            }
            if let Some(v) = a.substeps {
                hp.integration_substeps = v;
            }
            hp.max_history = a.max_history;
            hp.frozen_grid_weights = a.frozen_grid_weights;
            hp.validate()?;
            (ModelParameters::init(&hp, a.seed), hp)
        }
    };
    let cfg = TrainConfig {
        learning_rate: a.lr,
        max_epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        optimizer: a.optimizer.parse()?,
        patience: a.patience,
        holdout_fraction: a.holdout,
        ..TrainConfig::default()
    };
    let outcome = train::fit(&corpus, &init, &hp, &cfg)?;
    io::save_checkpoint(&a.out, &outcome.params, &hp)?;
    if let Some(log) = &a.log {
        io::write_jsonl(log, &outcome.log)?;
    }
    println!(
        "trained {} epochs on {} sequences ({} types, variant {})",
        outcome.epochs_run,
        corpus.len(),
        hp.num_types,
        hp.variant.name()
    );
    println!(
        "best epoch {} with monitored loss {:.6}",
        outcome.best_epoch, outcome.best_monitored
    );
    println!("checkpoint written to {}", a.out.display());
    Ok(())
}

#[derive(Args)]
struct EvalArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Corpus to evaluate on.
    #[arg(long)]
    corpus: PathBuf,
    /// Optional JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-prediction JSONL destination.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Also run the time-rescaling goodness-of-fit test per sequence.
    #[arg(long)]
    rescaling: bool,
    /// Ground-truth adjacency JSON; adds an edge-recovery score.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

#[derive(Debug, Serialize)]
struct RescalingReport {
    sequences: usize,
    passed: usize,
    pass_fraction: f64,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    metrics: EvalMetrics,
    rescaling: Option<RescalingReport>,
    edge_recovery_auc: Option<f64>,
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let (params, hp) = io::load_checkpoint(&a.model)?;
    let corpus = io::read_corpus(&a.corpus, a.time_scale)?;
    let (metrics, records) = eval::evaluate(&corpus, &params, &hp)?;

    let rescaling = if a.rescaling {
        let mut sequences = 0;
        let mut passed = 0;
        for seq in corpus.iter().filter(|s| !s.is_empty()) {
            let residuals = simulate::time_rescaling_residuals(seq, &params, &hp)?;
            sequences += 1;
            if simulate::ks_exponential(&residuals).pass_1pct {
                passed += 1;
            }
        }
        Some(RescalingReport {
            sequences,
            passed,
            pass_fraction: passed as f64 / sequences.max(1) as f64,
        })
    } else {
        None
    };

    let edge_recovery_auc = match &a.truth {
        Some(path) => {
            let truth: TruthAdjacency = io::read_json(path)?;
            eval::edge_recovery_auc(&corpus, &params, &hp, &truth.matrix()?)?
        }
        None => None,
    };

    println!("predictions: {}", metrics.count);
    println!("time rmse: {:.6}", metrics.time_rmse);
    println!("type accuracy: {:.4}", metrics.kind_accuracy);
    println!("nll per event: {:.6}", metrics.nll_per_event);
    println!("truncated predictions: {}", metrics.truncated);
    if let Some(r) = &rescaling {
        println!(
            "rescaling: {}/{} sequences pass at the 1% level",
            r.passed, r.sequences
        );
    }
    if let Some(auc) = edge_recovery_auc {
        println!("edge recovery auc: {auc:.4}");
    }

    if let Some(path) = &a.records {
        io::write_jsonl(path, &records)?;
    }
    if let Some(path) = &a.out {
        io::write_json(
            path,
            &EvalReport {
                metrics,
                rescaling,
                edge_recovery_auc,
            },
        )?;
    }
    Ok(())
}

#[derive(Args)]
struct SimulateArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Where to write the simulated corpus.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hard cap on events per sequence.
    #[arg(long, default_value_t = 10_000)]
    max_events: usize,
    /// Inflation of the probed intensity bound.
    #[arg(long, default_value_t = 1.5)]
    safety: f64,
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let (params, hp) = io::load_checkpoint(&a.model)?;
    let cfg = SimulationConfig {
        horizon: a.horizon,
        count: a.count,
        seed: a.seed,
        max_events: a.max_events,
        safety: a.safety,
    };
    let corpus = simulate::simulate_model(&params, &hp, &cfg)?;
    let events: usize = corpus.iter().map(|s| s.len()).sum();
    io::write_corpus(&a.out, &corpus)?;
    println!(
        "simulated {} sequences with {} events over horizon {}",
        corpus.len(),
        events,
        a.horizon
    );
    println!("corpus written to {}", a.out.display());
    Ok(())
}

#[derive(Args)]
struct GraphsArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Corpus supplying the history; required unless --times is given.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Which sequence of the corpus provides the history.
    #[arg(long, default_value_t = 0)]
    seq: usize,
    /// Comma-separated query times; defaults to the sequence's event times.
    #[arg(long)]
    times: Option<String>,
    /// Snapshot JSONL destination.
    #[arg(long)]
    out: PathBuf,
    /// Directory for one DOT rendering per snapshot.
    #[arg(long)]
    dot_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

fn parse_times(text: &str) -> Result<Vec<f64>> {
    let times: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad query time `{p}`")))
        })
        .collect::<Result<_>>()?;
    if times.is_empty() {
        return Err(Error::InvalidConfig("no query times given".into()));
    }
    if let Some(&bad) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite query time {bad}")));
    }
    Ok(times)
}

fn cmd_graphs(a: GraphsArgs) -> Result<()> {
    let (params, hp) = io::load_checkpoint(&a.model)?;
    let corpus = match &a.corpus {
        Some(path) => io::read_corpus(path, a.time_scale)?,
        None => Vec::new(),
    };
    let history_seq = if corpus.is_empty() {
        None
    } else {
        if a.seq >= corpus.len() {
            return Err(Error::InvalidConfig(format!(
                "sequence {} requested, corpus has {}",
                a.seq,
                corpus.len()
            )));
        }
        Some(&corpus[a.seq])
    };
    let times = match (&a.times, history_seq) {
        (Some(text), _) => parse_times(text)?,
        (None, Some(seq)) => seq.events.iter().map(|e| e.time).collect(),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "need --times or --corpus to pick query times".into(),
            ))
        }
    };

    let mut snapshots = Vec::with_capacity(times.len());
    for &t in &times {
        let history = history_seq.map_or(&[][..], |s| s.before(t));
        let w = structural_weights(history, t, &params, &hp)?;
        let graph = threshold_graph(&w, &hp);
        snapshots.push(GraphSnapshotRecord::from_graph(&graph, &w.weights, hp.sharpness));
    }
    io::write_graph_snapshots(&a.out, &snapshots)?;
    if let Some(dir) = &a.dot_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, snap) in snapshots.iter().enumerate() {
            io::write_dot(&dir.join(format!("graph_{i:04}.dot")), snap)?;
        }
    }
    let acyclic = snapshots.iter().filter(|s| s.is_dag).count();
    println!(
        "extracted {} graphs ({} acyclic) to {}",
        snapshots.len(),
        acyclic,
        a.out.display()
    );
    Ok(())
}

#[derive(Args)]
struct MatchPathsArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Corpus whose events provide the checkpoints for each path.
    #[arg(long)]
    corpus: PathBuf,
    /// Declared paths as JSON: [{"label": ..., "types": [...]}].
    #[arg(long)]
    paths: PathBuf,
    /// Optional JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

fn cmd_match_paths(a: MatchPathsArgs) -> Result<()> {
    let (params, hp) = io::load_checkpoint(&a.model)?;
    let corpus = io::read_corpus(&a.corpus, a.time_scale)?;
    let paths: Vec<TypePath> = io::read_json(&a.paths)?;
    let matches: Vec<PathMatch> = eval::match_paths(&corpus, &paths, &params, &hp)?;
    for m in &matches {
        println!(
            "{}: {}/{} occurrences matched ({:.1}%)",
            m.label,
            m.matched,
            m.occurrences,
            100.0 * m.rate()
        );
    }
    if let Some(path) = &a.out {
        io::write_json(path, &matches)?;
    }
    Ok(())
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of event types for the toy problem.
    #[arg(long = "K", default_value_t = 3)]
    num_types: usize,
    /// Seeds checked; each draws fresh toy data and parameters.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Central-difference step. Small enough that the probe stays on one
    /// side of the relu and masking kinks near a typical query point.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest tolerated relative error per tensor.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Model family to check.
    #[arg(long, default_value = "full_dynamic")]
    variant: String,
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<()> {
    // A small architecture keeps the full finite-difference sweep quick
    // while exercising every parameter tensor.
    let mut hp = HyperParameters::defaults(a.num_types);
    hp.embed_half_dim = 3;
    hp.attn_dim = 3;
    hp.hidden_dim = 4;
    hp.max_order = 2.min(a.num_types.saturating_sub(1)).max(1);
    hp.variant = a.variant.parse()?;
    hp.validate()?;

    let mut worst = 0.0f64;
    for s in 0..a.seeds {
        let seed = a.seed + s as u64;
        let params = ModelParameters::init(&hp, seed);
        let batch = train::toy_batch(seed, hp.num_types, 5);
        let refs: Vec<&crate::types::EventSequence> = batch.iter().collect();
        let checks = train::gradient_check(&refs, &params, &hp, a.step)?;
        println!("seed {seed}:");
        for c in &checks {
            println!(
                "  {:<12} analytic {:>12.6e}  finite-diff {:>12.6e}  rel error {:>9.3e}",
                c.name, c.analytic_norm, c.fd_norm, c.rel_error
            );
            worst = worst.max(c.rel_error);
        }
    }
    println!("worst relative error: {worst:.3e} (tolerance {:.1e})", a.tol);
    if worst > a.tol {
        return Err(Error::ToleranceExceeded {
            what: "analytic gradient vs finite differences",
            worst,
            tolerance: a.tol,
        });
    }
    println!("gradient check passed");
    Ok(())
}

#[derive(Args)]
struct GenSyntheticArgs {
    /// Generator description in TOML.
    #[arg(long)]
    generator: PathBuf,
    /// Where to write the sampled corpus.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the generator's horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Also write the true adjacency as JSON.
    #[arg(long)]
    write_truth: Option<PathBuf>,
}

fn cmd_gen_synthetic(a: GenSyntheticArgs) -> Result<()> {
    let mut gen = io::read_generator(&a.generator)?;
    if let Some(h) = a.horizon {
        gen.horizon = h;
        gen.validate()?;
    }
    let corpus = gen.sample_corpus(a.count, a.seed)?;
    io::write_corpus(&a.out, &corpus)?;
    if let Some(path) = &a.write_truth {
        io::write_json(path, &TruthAdjacency::from_matrix(&gen.adjacency()))?;
    }
    let events: usize = corpus.iter().map(|s| s.len()).sum();
    println!(
        "sampled {} sequences with {} events ({} types)",
        corpus.len(),
        events,
        gen.num_types
    );
    println!("corpus written to {}", a.out.display());
    Ok(())
}
