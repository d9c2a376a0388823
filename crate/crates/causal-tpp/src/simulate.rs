//! Event generation by thinning, for both a planted ground-truth process and
//! the learned model, plus time-rescaling goodness-of-fit checks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::decay::decay;
use crate::error::{Error, Result};
use crate::intensity::{
    compose_intensities, effective_weights, history_window, order_intensities, terminal_decays,
    HistoryKernel,
};
use crate::mat::Mat;
use crate::params::ModelParameters;
use crate::types::{Event, EventSequence, HyperParameters};

/// Grid resolution when probing the decay curve for an upper bound.
const KAPPA_PROBE_POINTS: usize = 17;
/// The model bound stays valid for this fraction of the horizon before it
/// is recomputed.
const REFRESH_DIVISIONS: f64 = 64.0;
/// Slack for float roundoff when comparing an exact intensity against its
/// bound. Genuine bound violations exceed this by orders of magnitude.
const BOUND_SLACK: f64 = 1e-9;

/// An upper bound on the total intensity, valid from the current time until
/// `valid_until` as long as no event occurs.
struct BoundWindow {
    bound: f64,
    valid_until: f64,
}

/// Rejection sampler over [0, horizon). `bound` must dominate the total
/// intensity over its stated window; `lambdas` evaluates the exact per-type
/// intensities at a proposed time. A proposal past the bound's window
/// advances time and refreshes instead of sampling.
fn thin<FB, FL>(
    horizon: f64,
    max_events: usize,
    rng: &mut ChaCha8Rng,
    mut bound: FB,
    mut lambdas: FL,
) -> Result<Vec<Event>>
where
    FB: FnMut(&[Event], f64) -> Result<BoundWindow>,
    FL: FnMut(&[Event], f64) -> Result<Vec<f64>>,
{
    let mut events: Vec<Event> = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        if events.len() >= max_events {
            return Err(Error::NumericOverflow {
                context: "simulation event cap",
            });
        }
        let BoundWindow { bound, valid_until } = bound(&events, t)?;
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::NumericOverflow {
                context: "thinning bound",
            });
        }
        // u = 0 gives an infinite wait, which the refresh branch absorbs.
        let wait = -rng.random::<f64>().ln() / bound;
        let s = t + wait;
        let limit = valid_until.min(horizon);
        if s >= limit {
            if valid_until >= horizon {
                break;
            }
            t = limit;
            continue;
        }
        let lam = lambdas(&events, s)?;
        let total: f64 = lam.iter().sum();
        if total > bound * (1.0 + BOUND_SLACK) {
            return Err(Error::BoundViolation {
                time: s,
                intensity: total,
                bound,
            });
        }
        // One uniform decides both acceptance and, on accept, the type.
        let pick = rng.random::<f64>() * bound;
        if pick < total {
            let mut acc = 0.0;
            let mut kind = lam.len() - 1;
            for (i, &l) in lam.iter().enumerate() {
                acc += l;
                if pick < acc {
                    kind = i;
                    break;
                }
            }
            events.push(Event { time: s, kind });
        }
        t = s;
    }
    Ok(events)
}

/// One directed excitation edge of the planted process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEdge {
    pub from: usize,
    pub to: usize,
    /// Expected number of direct children one source event spawns.
    pub weight: f64,
}

/// Ground-truth generator: a Hawkes process with exponential kernels whose
/// excitation edges form a DAG over types. An event of type `from` adds
/// `weight * decay_rate * exp(-decay_rate * gap)` to the intensity of `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedGenerator {
    pub num_types: usize,
    pub base_rates: Vec<f64>,
    pub decay_rate: f64,
    pub horizon: f64,
    #[serde(default)]
    pub edges: Vec<PlantedEdge>,
}

impl PlantedGenerator {
    pub fn validate(&self) -> Result<()> {
        if self.num_types == 0 {
            return Err(Error::InvalidConfig("generator needs at least one type".into()));
        }
        if self.base_rates.len() != self.num_types {
            return Err(Error::TypeCountMismatch {
                context: "generator base rates",
                expected: self.num_types,
                found: self.base_rates.len(),
            });
        }
        if self.base_rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig("base rates must be finite and nonnegative".into()));
        }
        if self.base_rates.iter().all(|&r| r == 0.0) {
            return Err(Error::InvalidConfig("at least one base rate must be positive".into()));
        }
        if !(self.decay_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "decay rate must be positive, got {}",
                self.decay_rate
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        for e in &self.edges {
            if e.from >= self.num_types || e.to >= self.num_types {
                return Err(Error::InvalidConfig(format!(
                    "edge {} -> {} is outside the {} types",
                    e.from, e.to, self.num_types
                )));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "edge {} -> {} has invalid weight {}",
                    e.from, e.to, e.weight
                )));
            }
        }
        if self.has_cycle() {
            return Err(Error::InvalidConfig(
                "excitation edges must form a DAG".into(),
            ));
        }
        Ok(())
    }

    /// True adjacency over types: entry (u, v) set when u excites v.
    pub fn adjacency(&self) -> Mat<u8> {
        let mut a = Mat::filled(self.num_types, self.num_types, 0u8);
        for e in &self.edges {
            if e.weight > 0.0 {
                a.set(e.from, e.to, 1);
            }
        }
        a
    }

    fn has_cycle(&self) -> bool {
        let k = self.num_types;
        let a = self.adjacency();
        let mut reach = vec![vec![false; k]; k];
        for u in 0..k {
            for v in 0..k {
                reach[u][v] = a.at(u, v) != 0;
            }
        }
        for m in 0..k {
            for u in 0..k {
                for v in 0..k {
                    if reach[u][m] && reach[m][v] {
                        reach[u][v] = true;
                    }
                }
            }
        }
        (0..k).any(|u| reach[u][u])
    }

    /// Per-type intensities from the events strictly before `t`.
    pub fn intensities(&self, events: &[Event], t: f64) -> Vec<f64> {
        self.rates(events, t, false)
    }

    fn rates(&self, events: &[Event], t: f64, include_boundary: bool) -> Vec<f64> {
        let mut lam = self.base_rates.clone();
        for e in events {
            let gap = t - e.time;
            if gap < 0.0 || (gap == 0.0 && !include_boundary) {
                continue;
            }
            let kick = self.decay_rate * (-self.decay_rate * gap).exp();
            for edge in self.edges.iter().filter(|g| g.from == e.kind) {
                lam[edge.to] += edge.weight * kick;
            }
        }
        lam
    }

    /// Draws one sequence over `[0, horizon)`.
    ///
    /// Between events every excitation term decays, so the total intensity
    /// evaluated at the left edge of the current interval dominates the
    /// whole interval and serves as the thinning bound.
    pub fn simulate(&self, rng: &mut ChaCha8Rng) -> Result<EventSequence> {
        self.validate()?;
        let events = thin(
            self.horizon,
            usize::MAX,
            rng,
            |ev, t| {
                Ok(BoundWindow {
                    bound: self.rates(ev, t, true).iter().sum(),
                    valid_until: f64::INFINITY,
                })
            },
            |ev, s| Ok(self.intensities(ev, s)),
        )?;
        Ok(EventSequence::new(events, self.horizon))
    }

    /// Draws a corpus on independent generator streams, so sequence `i` is
    /// the same whatever the total count.
    pub fn sample_corpus(&self, count: usize, seed: u64) -> Result<Vec<EventSequence>> {
        (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.simulate(&mut rng)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub count: usize,
    pub seed: u64,
    /// Hard cap on events per sequence; exceeding it is reported as a
    /// numerical failure rather than silently truncating.
    pub max_events: usize,
    /// Multiplier on the probed decay maximum. Larger values make bound
    /// violations less likely at the cost of more rejected proposals.
    pub safety: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: 10.0,
            count: 1,
            seed: 0,
            max_events: 10_000,
            safety: 1.5,
        }
    }
}

/// A time-independent bound on the magnitude of any influence weight.
///
/// Attention rows are convex combinations of embedding rows, every sinusoid
/// lies in [-1, 1], and masking only zeroes entries, so projecting the
/// worst-case embedding magnitudes through the edge projection dominates
/// every entry the model can produce at any query time.
fn weight_bound(params: &ModelParameters) -> f64 {
    let e = params.dims.embed_dim;
    let k = params.dims.num_types;
    let col_max: Vec<f64> = (0..e)
        .map(|c| {
            (0..k)
                .map(|u| 1.0 + params.type_embed[u * e + c].abs())
                .fold(0.0, f64::max)
        })
        .collect();
    (0..k)
        .map(|target| {
            (0..e)
                .map(|c| params.edge_proj[target * e + c].abs() * col_max[c])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Largest decay the pair with the given minimum gap can reach during the
/// bound window, probed on a grid and inflated by the safety factor. The
/// decay is a sigmoid, so 1 caps it rigorously.
fn kappa_bound(gap_lo: f64, gap_hi: f64, params: &ModelParameters, safety: f64) -> f64 {
    let mut peak = 0.0f64;
    for j in 0..KAPPA_PROBE_POINTS {
        let frac = j as f64 / (KAPPA_PROBE_POINTS - 1) as f64;
        let gap = gap_lo + (gap_hi - gap_lo) * frac;
        peak = peak.max(decay(gap, params));
    }
    (peak * safety).min(1.0)
}

/// Simulates sequences from the learned model by thinning.
///
/// The bound replaces every hop weight by a global magnitude bound and every
/// decay to the query by its probed window maximum, then runs the same chain
/// recursion and composition as the exact intensity. Pair decays between
/// past events are exact and shared with the evaluation path through an
/// incrementally grown kernel. A probe that misses a sharp decay peak
/// surfaces as a bound violation error; raising `safety` resolves it.
pub fn simulate_model(
    params: &ModelParameters,
    hp: &HyperParameters,
    cfg: &SimulationConfig,
) -> Result<Vec<EventSequence>> {
    hp.validate()?;
    if params.dims.num_types != hp.num_types {
        return Err(Error::TypeCountMismatch {
            context: "simulation parameters",
            expected: hp.num_types,
            found: params.dims.num_types,
        });
    }
    if !(cfg.horizon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "horizon must be positive, got {}",
            cfg.horizon
        )));
    }
    if !(cfg.safety > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "safety factor must be positive, got {}",
            cfg.safety
        )));
    }
    let w_max = weight_bound(params);
    let refresh = cfg.horizon / REFRESH_DIVISIONS;
    let l_eff = hp.effective_order();

    (0..cfg.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let kernel = RefCell::new(HistoryKernel::empty());
            let sync = |kernel: &mut HistoryKernel<f64>, events: &[Event]| {
                while kernel.len() < events.len() {
                    let j = kernel.len();
                    kernel.push_event(&events[..j], events[j].time, params);
                }
            };

            let events = thin(
                cfg.horizon,
                cfg.max_events,
                &mut rng,
                |events, t| {
                    let mut k = kernel.borrow_mut();
                    sync(&mut k, events);
                    let window = history_window(events, t + refresh, hp.max_history);
                    let offset = events.len() - window.len();
                    let terminal: Vec<f64> = window
                        .iter()
                        .map(|e| kappa_bound(t - e.time, t + refresh - e.time, params, cfg.safety))
                        .collect();
                    let w = Mat::filled(hp.num_types, hp.num_types, w_max);
                    let per_order = order_intensities(window, offset, &k, &terminal, &w, l_eff, 0.0);
                    let per_type = compose_intensities(&per_order, params, hp);
                    Ok(BoundWindow {
                        bound: per_type.iter().sum(),
                        valid_until: t + refresh,
                    })
                },
                |events, s| {
                    let mut k = kernel.borrow_mut();
                    sync(&mut k, events);
                    let window = history_window(events, s, hp.max_history);
                    let offset = events.len() - window.len();
                    let terminal = terminal_decays(window, s, params);
                    let w = effective_weights(window, s, params, hp)?;
                    let per_order = order_intensities(window, offset, &k, &terminal, &w, l_eff, 0.0);
                    let lam = compose_intensities(&per_order, params, hp);
                    if lam.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NumericOverflow {
                            context: "simulated intensity",
                        });
                    }
                    Ok(lam)
                },
            )?;
            Ok(EventSequence::new(events, cfg.horizon))
        })
        .collect()
}

/// Compensator increments between consecutive events.
///
/// Each entry integrates the total intensity over one inter-event interval
/// with the same trapezoid grid and strict-history convention as the
/// likelihood, so under the true model the entries are independent unit
/// exponentials. Weight freezing is ignored here; the integrand always uses
/// the exact query-time weights.
pub fn time_rescaling_residuals(
    seq: &EventSequence,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<Vec<f64>> {
    crate::types::validate_sequence(seq, hp.num_types)?;
    let events = &seq.events;
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let kernel = HistoryKernel::build(events, params);
    let l_eff = hp.effective_order();
    let segments = hp.integration_substeps + 1;

    let total_at = |s: f64| -> Result<f64> {
        let window = history_window(events, s, hp.max_history);
        let offset = seq.before(s).len() - window.len();
        let terminal = terminal_decays(window, s, params);
        let w = effective_weights(window, s, params, hp)?;
        let per_order = order_intensities(window, offset, &kernel, &terminal, &w, l_eff, 0.0);
        let total: f64 = compose_intensities(&per_order, params, hp).iter().sum();
        if !total.is_finite() {
            return Err(Error::NumericOverflow {
                context: "residual intensity",
            });
        }
        Ok(total)
    };

    let mut out = Vec::with_capacity(events.len());
    let mut prev = 0.0;
    for e in events {
        let (a, b) = (prev, e.time);
        let mut acc = 0.0;
        if b > a {
            let mut s_prev = a;
            let mut lam_prev = total_at(a)?;
            for j in 1..=segments {
                let s = if j == segments {
                    b
                } else {
                    a + (b - a) * j as f64 / segments as f64
                };
                let lam = total_at(s)?;
                acc += 0.5 * (lam_prev + lam) * (s - s_prev);
                s_prev = s;
                lam_prev = lam;
            }
        }
        out.push(acc);
        prev = b;
    }
    Ok(out)
}

/// Critical value for the Stephens-modified Kolmogorov statistic at the 1%
/// level.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsOutcome {
    pub n: usize,
    /// Raw Kolmogorov distance between the empirical and uniform CDFs.
    pub statistic: f64,
    /// Stephens modification, comparable against a single critical value
    /// across sample sizes.
    pub modified: f64,
    pub pass_1pct: bool,
}

/// Kolmogorov test of samples against the uniform distribution on [0, 1].
/// An empty sample fails by convention.
pub fn ks_uniform(samples: &[f64]) -> KsOutcome {
    if samples.is_empty() {
        return KsOutcome {
            n: 0,
            statistic: 1.0,
            modified: f64::INFINITY,
            pass_1pct: false,
        };
    }
    let mut u = samples.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let statistic = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i as f64 + 1.0) / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    let modified = statistic * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    KsOutcome {
        n: u.len(),
        statistic,
        modified,
        pass_1pct: modified < KS_CRITICAL_1PCT,
    }
}

/// Kolmogorov test of residuals against the unit exponential, via the
/// probability integral transform.
pub fn ks_exponential(residuals: &[f64]) -> KsOutcome {
    let uniforms: Vec<f64> = residuals.iter().map(|&r| -(-r).exp_m1()).collect();
    ks_uniform(&uniforms)
}
