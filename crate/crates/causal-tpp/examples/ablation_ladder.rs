//! Compares the four model variants on data whose generator separates them
//! by construction: a sparse cross-type chain that a uni-type model cannot
//! express, a second-order synergy term (close 0->1 pairs boost type 2)
//! that a purely pairwise model cannot express, and a history-gated edge
//! (1 excites 3 only while a type-2 event is recent) that a static graph
//! must average away. Each variant is fit on the same training split and
//! scored by held-out negative log-likelihood; richer variants should fit
//! no worse.

use causal_tpp::loss::batch_loss;
use causal_tpp::train::{fit, TrainConfig};
use causal_tpp::{Event, EventSequence, HyperParameters, ModelParameters, Result, Variant};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARIANTS: [Variant; 4] = [
    Variant::HawkesUni,
    Variant::HawkesMulti,
    Variant::MultiOrderStatic,
    Variant::FullDynamic,
];

const NUM_TYPES: usize = 4;
const BASE: f64 = 0.15;
const DECAY: f64 = 2.0;
const HORIZON: f64 = 10.0;
/// Direct edges 0->1, 1->2, 2->3.
const EDGES: [(usize, usize, f64); 3] = [(0, 1, 1.0), (1, 2, 0.8), (2, 3, 0.8)];
/// Chain 0->1 pairs add this much extra excitation to type 2, damped by
/// both the intra-pair gap and the lag since the pair completed.
const SYNERGY: f64 = 1.2;
/// Edge 1->3 strength while a type-2 event lies within GATE_WINDOW.
const GATED: f64 = 0.9;
const GATE_WINDOW: f64 = 1.5;

fn kernel(gap: f64) -> f64 {
    if gap > 0.0 { (-DECAY * gap).exp() } else { 0.0 }
}

/// All four intensities at time t given the events so far.
fn intensities(events: &[Event], t: f64) -> [f64; NUM_TYPES] {
    let mut lam = [BASE; NUM_TYPES];
    for (from, to, w) in EDGES {
        for e in events.iter().filter(|e| e.kind == from) {
            lam[to] += w * kernel(t - e.time);
        }
    }
    for (j, ej) in events.iter().enumerate() {
        if ej.kind != 1 {
            continue;
        }
        for ei in &events[..j] {
            if ei.kind == 0 {
                lam[2] += SYNERGY * kernel(ej.time - ei.time) * kernel(t - ej.time);
            }
        }
    }
    let gate_open = events
        .iter()
        .any(|e| e.kind == 2 && e.time < t && t - e.time < GATE_WINDOW);
    if gate_open {
        for e in events.iter().filter(|e| e.kind == 1) {
            lam[3] += GATED * kernel(t - e.time);
        }
    }
    lam
}

/// Thinning: every term decays or drops between events, so the total
/// intensity just after the latest event bounds the whole gap.
fn simulate_one(rng: &mut ChaCha8Rng) -> EventSequence {
    let mut events: Vec<Event> = Vec::new();
    let mut t = 0.0;
    while t < HORIZON {
        let bound: f64 = intensities(&events, t + 1e-12).iter().sum::<f64>() + 1e-9;
        let wait = -rng.random::<f64>().ln() / bound;
        let cand = t + wait;
        if cand >= HORIZON {
            break;
        }
        t = cand;
        let lam = intensities(&events, t);
        let total: f64 = lam.iter().sum();
        if rng.random::<f64>() * bound <= total {
            let mut pick = rng.random::<f64>() * total;
            let mut kind = NUM_TYPES - 1;
            for (k, &l) in lam.iter().enumerate() {
                if pick < l {
                    kind = k;
                    break;
                }
                pick -= l;
            }
            events.push(Event { time: t, kind });
        }
    }
    EventSequence::new(events, HORIZON)
}

fn sample_corpus(count: usize, seed: u64) -> Vec<EventSequence> {
    (0..count)
        .map(|i| simulate_one(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64))))
        .collect()
}

fn held_out_nll(
    held: &[EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<f64> {
    let refs: Vec<&EventSequence> = held.iter().collect();
    Ok(batch_loss(&refs, params, hp)?.nll)
}

fn main() -> Result<()> {
    let seeds: Vec<u64> = (0..5).collect();
    let mut means = [0.0f64; 4];
    println!("seed   hawkes_uni  hawkes_multi  multi_order_static  full_dynamic  events");
    for &seed in &seeds {
        let corpus = sample_corpus(100, 1000 * (seed + 1));
        let events: usize = corpus.iter().map(|s| s.len()).sum();
        let (train, held) = corpus.split_at(80);

        let mut row = [0.0f64; 4];
        for (vi, variant) in VARIANTS.iter().enumerate() {
            let mut hp = HyperParameters::defaults(NUM_TYPES);
            hp.embed_half_dim = 3;
            hp.attn_dim = 3;
            hp.hidden_dim = 6;
            hp.max_order = 2;
            hp.integration_substeps = 2;
            hp.variant = *variant;
            hp.frozen_grid_weights = true;
            hp.max_history = Some(40);
            let cfg = TrainConfig {
                max_epochs: 250,
                batch_size: 16,
                patience: 45,
                learning_rate: 2e-2,
                seed,
                ..TrainConfig::default()
            };
            let init = ModelParameters::init(&hp, seed);
            let outcome = fit(train, &init, &hp, &cfg)?;
            // Score pure likelihood on the shared held-out split.
            let mut hp_eval = hp.clone();
            hp_eval.frozen_grid_weights = false;
            row[vi] = held_out_nll(held, &outcome.params, &hp_eval)?;
            means[vi] += row[vi] / seeds.len() as f64;
        }
        println!(
            "{seed:>4}  {:>10.4}  {:>12.4}  {:>18.4}  {:>12.4}  {:>6.1}",
            row[0],
            row[1],
            row[2],
            row[3],
            events as f64 / corpus.len() as f64
        );
    }
    println!(
        "mean  {:>10.4}  {:>12.4}  {:>18.4}  {:>12.4}",
        means[0], means[1], means[2], means[3]
    );
    let ordered = means[3] <= means[2] && means[2] <= means[1] && means[1] <= means[0];
    println!(
        "ladder ordering (full_dynamic <= multi_order_static <= hawkes_multi <= hawkes_uni): {}",
        if ordered { "holds" } else { "violated" }
    );
    Ok(())
}
