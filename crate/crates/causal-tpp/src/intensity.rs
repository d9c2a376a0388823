//! Conditional intensities aggregating multi-hop influence over the graph.
//!
//! An order-l contribution at query time t sums, over all length-l chains of
//! past events ending at the query, the product of hop weights and hop
//! decays. Chains share suffixes, so the sums satisfy a recursion over
//! history events that evaluates in O(N^2 L) instead of enumerating chains;
//! the enumeration survives here as an oracle the recursion is tested
//! against. All hop weights are taken from the influence matrix at the
//! query time; decays depend on the individual hop gaps.

use crate::autodiff::Real;
use crate::decay::decay;
use crate::error::{Error, Result};
use crate::graph::{influence_weights, threshold_graph, StructuralWeights};
use crate::mat::Mat;
use crate::params::{ModelParameters, ParamSet};
use crate::types::{Event, HyperParameters};

/// Pairwise decays within one history, stored lower-triangular: entry (j, i)
/// with i < j is the decay of the gap from event i to event j. Built once
/// per sequence and shared by every query against that history.
#[derive(Debug, Clone)]
pub struct HistoryKernel<R> {
    len: usize,
    pairs: Vec<R>,
}

impl<R: Real> HistoryKernel<R> {
    pub fn build(events: &[Event], params: &ParamSet<R>) -> Self {
        let n = events.len();
        let mut pairs = Vec::with_capacity(n.saturating_sub(1) * n / 2);
        for j in 1..n {
            for i in 0..j {
                pairs.push(decay(events[j].time - events[i].time, params));
            }
        }
        HistoryKernel { len: n, pairs }
    }

    pub fn empty() -> Self {
        HistoryKernel {
            len: 0,
            pairs: Vec::new(),
        }
    }

    /// Appends the decays of one more event against all earlier ones;
    /// `events` are the earlier events in order.
    pub fn push_event(&mut self, events: &[Event], new_time: f64, params: &ParamSet<R>) {
        debug_assert_eq!(events.len(), self.len);
        for e in events {
            self.pairs.push(decay(new_time - e.time, params));
        }
        self.len += 1;
    }

    #[inline]
    pub fn at(&self, j: usize, i: usize) -> R {
        debug_assert!(i < j && j < self.len);
        self.pairs[j * (j - 1) / 2 + i]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Decay of each history event's gap to the query time.
pub fn terminal_decays<R: Real>(window: &[Event], t: f64, params: &ParamSet<R>) -> Vec<R> {
    window.iter().map(|e| decay(t - e.time, params)).collect()
}

/// History visible to a query at `t`: events strictly before `t`, optionally
/// capped to the most recent `cap`.
pub fn history_window(events: &[Event], t: f64, cap: Option<usize>) -> &[Event] {
    let n = events.partition_point(|e| e.time < t);
    let start = cap.map_or(0, |c| n.saturating_sub(c));
    &events[start..n]
}

/// Single-hop influence of one past event on a query: weight times decay.
pub fn first_order_influence(
    source_kind: usize,
    target_kind: usize,
    gap: f64,
    w: &Mat<f64>,
    params: &ModelParameters,
) -> f64 {
    w.at(source_kind, target_kind) * decay(gap, params)
}

/// Influence of one explicit chain of events whose final element is the
/// virtual query occurrence: product of per-hop weight times decay.
pub fn chain_influence(chain: &[Event], w: &Mat<f64>, params: &ModelParameters) -> Result<f64> {
    if chain.len() < 2 {
        return Err(Error::NonIncreasingChain);
    }
    let mut product = 1.0;
    for pair in chain.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.time <= a.time {
            return Err(Error::NonIncreasingChain);
        }
        product *= first_order_influence(a.kind, b.kind, b.time - a.time, w, params);
    }
    Ok(product)
}

/// Chain-enumeration oracle for the order-l contribution toward type `k` at
/// time `t`: sums the influence of every strictly increasing chain of
/// exactly `l` history events. Exponential in l; for testing only.
pub fn order_intensity_bruteforce(
    events: &[Event],
    t: f64,
    k: usize,
    l: usize,
    w: &Mat<f64>,
    params: &ModelParameters,
) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn extend(
        window: &[Event],
        last: usize,
        picked: usize,
        l: usize,
        prefix: f64,
        t: f64,
        k: usize,
        w: &Mat<f64>,
        params: &ModelParameters,
        acc: &mut f64,
    ) {
        if picked == l {
            *acc += prefix
                * first_order_influence(window[last].kind, k, t - window[last].time, w, params);
            return;
        }
        for next in last + 1..window.len() {
            let hop = first_order_influence(
                window[last].kind,
                window[next].kind,
                window[next].time - window[last].time,
                w,
                params,
            );
            extend(window, next, picked + 1, l, prefix * hop, t, k, w, params, acc);
        }
    }

    if l == 0 {
        return 0.0;
    }
    let window: Vec<Event> = events.iter().copied().filter(|e| e.time < t).collect();
    let mut acc = 0.0;
    for first in 0..window.len() {
        extend(&window, first, 1, l, 1.0, t, k, w, params, &mut acc);
    }
    acc
}

/// Raw order contributions for every order and target type at one query.
///
/// `window` is the visible history, `offset` its first event's index in the
/// kernel's indexing, `terminal` the decays of each window event to the
/// query time. Row l-1 holds the order-l values. Equals the chain
/// enumeration exactly up to floating-point associativity.
pub fn order_intensities<R: Real>(
    window: &[Event],
    offset: usize,
    kernel: &HistoryKernel<R>,
    terminal: &[R],
    w: &Mat<R>,
    orders: usize,
    zero: R,
) -> Mat<R> {
    let n = window.len();
    let k = w.rows();
    debug_assert_eq!(terminal.len(), n);
    let mut out = Mat::filled(orders, k, zero);
    if n == 0 {
        return out;
    }

    // suffix[j] is the sum over chains of the current order that end at
    // window event j, excluding the final hop to the query.
    let mut suffix = vec![zero.lit(1.0); n];
    for l in 0..orders {
        if l > 0 {
            let prev = suffix.clone();
            for j in 0..n {
                let mut acc = zero;
                for i in 0..j {
                    let hop = w.at(window[i].kind, window[j].kind)
                        * kernel.at(offset + j, offset + i);
                    acc = acc + prev[i] * hop;
                }
                suffix[j] = acc;
            }
        }
        // Close each chain with the hop into the query type.
        let closed: Vec<R> = (0..n).map(|j| suffix[j] * terminal[j]).collect();
        for target in 0..k {
            let mut acc = zero;
            for j in 0..n {
                acc = acc + closed[j] * w.at(window[j].kind, target);
            }
            out.set(l, target, acc);
        }
    }
    out
}

/// Influence weights at the query under the variant, with the optional
/// inference-time mask that zeroes edges absent from the thresholded graph.
pub fn effective_weights<R: Real>(
    history: &[Event],
    t: f64,
    params: &ParamSet<R>,
    hp: &HyperParameters,
) -> Result<Mat<R>> {
    let mut w = influence_weights(history, t, params, hp)?;
    if hp.mask_by_dag {
        let snapshot = StructuralWeights {
            time: t,
            weights: w.map(|v| v.val()),
        };
        let g = threshold_graph(&snapshot, hp);
        for u in 0..w.rows() {
            for v in 0..w.cols() {
                if g.adjacency.at(u, v) == 0 {
                    w.set(u, v, params.lit(0.0));
                }
            }
        }
    }
    Ok(w)
}

/// Final per-type intensities from raw order contributions: positive base
/// rate plus positively weighted orders, mapped through softplus and
/// floored away from zero.
pub fn compose_intensities<R: Real>(
    orders_raw: &Mat<R>,
    params: &ParamSet<R>,
    hp: &HyperParameters,
) -> Vec<R> {
    let k = params.dims.num_types;
    let l_eff = hp.effective_order();
    debug_assert!(orders_raw.rows() >= l_eff);
    (0..k)
        .map(|target| {
            let mut pre = params.base_raw[target].softplus();
            for l in 0..l_eff {
                pre = pre + params.order_raw_at(target, l).softplus() * orders_raw.at(l, target);
            }
            pre.softplus().shift(hp.intensity_floor)
        })
        .collect()
}

/// Intensity of every type at one query time, with its additive pieces.
///
/// `base` holds the positive base rates, `by_order` the order-weighted
/// contributions; `total` is softplus(base + sum of contributions) plus the
/// configured floor, so it is positive but not the plain sum of the parts.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityBreakdown {
    pub time: f64,
    pub base: Vec<f64>,
    /// Row l-1, column k: order-l contribution toward type k, including its
    /// learned order weight.
    pub by_order: Mat<f64>,
    pub total: Vec<f64>,
}

/// Evaluates the full intensity once, building the pairwise kernel for the
/// visible history from scratch. Loops that query many times against one
/// sequence should instead share a kernel and call the pieces directly.
pub fn total_intensity(
    events: &[Event],
    t: f64,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<IntensityBreakdown> {
    let window = history_window(events, t, hp.max_history);
    let kernel = HistoryKernel::build(window, params);
    let terminal = terminal_decays(window, t, params);
    let w = effective_weights(window, t, params, hp)?;
    let l_eff = hp.effective_order();
    let orders_raw = order_intensities(window, 0, &kernel, &terminal, &w, l_eff, 0.0);
    let total = compose_intensities(&orders_raw, params, hp);
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow {
            context: "total intensity",
        });
    }
    let base: Vec<f64> = params
        .base_raw
        .iter()
        .map(|&r| crate::autodiff::softplus(r))
        .collect();
    let by_order = Mat::from_fn(l_eff, hp.num_types, |l, k| {
        crate::autodiff::softplus(params.order_raw_at(k, l)) * orders_raw.at(l, k)
    });
    Ok(IntensityBreakdown {
        time: t,
        base,
        by_order,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::softplus;
    use crate::types::Variant;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hp(k: usize) -> HyperParameters {
        HyperParameters::defaults(k)
    }

    fn params(k: usize, seed: u64) -> ModelParameters {
        ModelParameters::init(&hp(k), seed)
    }

    fn ev(time: f64, kind: usize) -> Event {
        Event { time, kind }
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        k: usize,
        n: usize,
    ) -> (Vec<Event>, f64, Mat<f64>) {
        let mut t = 0.0;
        let events: Vec<Event> = (0..n)
            .map(|_| {
                t += 0.05 + rng.random::<f64>();
                ev(t, rng.random_range(0..k))
            })
            .collect();
        let query = t + 0.1 + rng.random::<f64>();
        let w = Mat::from_fn(k, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        (events, query, w)
    }

    #[test]
    fn kernel_matches_direct_decay() {
        let p = params(3, 1);
        let events = [ev(0.2, 0), ev(0.9, 1), ev(1.7, 2)];
        let kern = HistoryKernel::build(&events, &p);
        for j in 1..3 {
            for i in 0..j {
                let expect = decay(events[j].time - events[i].time, &p);
                assert_eq!(kern.at(j, i), expect);
            }
        }
    }

    #[test]
    fn kernel_incremental_matches_batch() {
        let p = params(3, 2);
        let events = [ev(0.2, 0), ev(0.9, 1), ev(1.7, 2), ev(2.4, 0)];
        let batch = HistoryKernel::build(&events, &p);
        let mut inc = HistoryKernel::empty();
        for (idx, e) in events.iter().enumerate() {
            inc.push_event(&events[..idx], e.time, &p);
        }
        assert_eq!(batch.len(), inc.len());
        for j in 1..events.len() {
            for i in 0..j {
                assert_eq!(batch.at(j, i), inc.at(j, i));
            }
        }
    }

    #[test]
    fn history_window_respects_cap_and_strictness() {
        let events = [ev(1.0, 0), ev(2.0, 1), ev(3.0, 0)];
        assert_eq!(history_window(&events, 2.0, None).len(), 1);
        assert_eq!(history_window(&events, 3.5, None).len(), 3);
        let capped = history_window(&events, 3.5, Some(2));
        assert_eq!(capped.len(), 2);
        assert_eq!(capped[0].time, 2.0);
    }

    #[test]
    fn first_order_zero_weight_or_gap() {
        let p = params(2, 3);
        let w = Mat::from_rows(vec![vec![0.0, 2.0], vec![1.0, 0.0]]);
        assert_eq!(first_order_influence(0, 0, 1.0, &w, &p), 0.0);
        assert_eq!(first_order_influence(0, 1, 0.0, &w, &p), 0.0);
        assert_eq!(first_order_influence(0, 1, -1.0, &w, &p), 0.0);
        let v = first_order_influence(0, 1, 1.3, &w, &p);
        assert!((v - 2.0 * decay(1.3, &p)).abs() < 1e-15);
    }

    #[test]
    fn chain_influence_products_and_errors() {
        let p = params(3, 4);
        let w = Mat::from_fn(3, 3, |u, v| 0.3 + 0.1 * (u * 3 + v) as f64);

        // Single hop reduces to first-order influence.
        let single = chain_influence(&[ev(0.5, 1), ev(2.0, 2)], &w, &p).unwrap();
        assert!((single - first_order_influence(1, 2, 1.5, &w, &p)).abs() < 1e-15);

        // Three hops: product of per-hop terms.
        let chain = [ev(0.2, 0), ev(0.9, 1), ev(1.5, 2), ev(2.0, 0)];
        let got = chain_influence(&chain, &w, &p).unwrap();
        let expect = first_order_influence(0, 1, 0.7, &w, &p)
            * first_order_influence(1, 2, 0.6, &w, &p)
            * first_order_influence(2, 0, 0.5, &w, &p);
        assert!((got - expect).abs() < 1e-15);

        // A zero hop weight annihilates the chain.
        let mut wz = w.clone();
        wz.set(1, 2, 0.0);
        assert_eq!(chain_influence(&chain, &wz, &p).unwrap(), 0.0);

        // Non-increasing timestamps are rejected.
        assert!(matches!(
            chain_influence(&[ev(1.0, 0), ev(1.0, 1)], &w, &p),
            Err(Error::NonIncreasingChain)
        ));
        assert!(matches!(
            chain_influence(&[ev(1.0, 0)], &w, &p),
            Err(Error::NonIncreasingChain)
        ));
    }

    #[test]
    fn bruteforce_base_cases() {
        let p = params(2, 5);
        let w = Mat::from_fn(2, 2, |_, _| 0.7);
        assert_eq!(order_intensity_bruteforce(&[], 1.0, 0, 1, &w, &p), 0.0);
        let events = [ev(0.4, 1)];
        let got = order_intensity_bruteforce(&events, 1.0, 0, 1, &w, &p);
        assert!((got - first_order_influence(1, 0, 0.6, &w, &p)).abs() < 1e-15);
        // No chains of length 2 exist with a single event.
        assert_eq!(order_intensity_bruteforce(&events, 1.0, 0, 2, &w, &p), 0.0);
    }

    #[test]
    fn recursion_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..25 {
            let k = 2 + (trial % 3);
            let n = 2 + (trial % 7);
            let (events, t, w) = random_instance(&mut rng, k, n);
            let p = params(k, trial as u64);
            let kernel = HistoryKernel::build(&events, &p);
            let terminal = terminal_decays(&events, t, &p);
            let orders = 3.min(n);
            let dp = order_intensities(&events, 0, &kernel, &terminal, &w, orders, 0.0);
            for l in 1..=orders {
                for target in 0..k {
                    let brute = order_intensity_bruteforce(&events, t, target, l, &w, &p);
                    let got = dp.at(l - 1, target);
                    let scale = brute.abs().max(1e-12);
                    assert!(
                        (got - brute).abs() / scale < 1e-10,
                        "trial {trial} l={l} k={target}: {got} vs {brute}"
                    );
                }
            }
        }
    }

    #[test]
    fn order_one_is_weighted_decay_sum() {
        let p = params(3, 6);
        let events = [ev(0.3, 0), ev(0.8, 2), ev(1.4, 1)];
        let t = 2.0;
        let w = Mat::from_fn(3, 3, |u, v| 0.2 + 0.05 * (u as f64) - 0.03 * (v as f64));
        let kernel = HistoryKernel::build(&events, &p);
        let terminal = terminal_decays(&events, t, &p);
        let dp = order_intensities(&events, 0, &kernel, &terminal, &w, 1, 0.0);
        for target in 0..3 {
            let direct: f64 = events
                .iter()
                .map(|e| w.at(e.kind, target) * decay(t - e.time, &p))
                .sum();
            assert!((dp.at(0, target) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_terminal_gap_contributes_nothing() {
        let p = params(2, 7);
        let w = Mat::from_fn(2, 2, |_, _| 0.9);
        let events = [ev(0.5, 0), ev(1.0, 1)];
        // Query exactly at the second event: its terminal decay clamps to 0,
        // so order 2 (whose only chain ends at that event) vanishes.
        let t = 1.0;
        let visible = history_window(&events, t, None);
        assert_eq!(visible.len(), 1);
        let kernel = HistoryKernel::build(visible, &p);
        let terminal = terminal_decays(visible, t, &p);
        let dp = order_intensities(visible, 0, &kernel, &terminal, &w, 1, 0.0);
        assert!(dp.at(0, 0) > 0.0);

        // Include both events by querying just after, then check the chain
        // through the gap-zero terminal event is the only order-2 term.
        let t2 = 1.0 + 1e-9;
        let vis2 = history_window(&events, t2, None);
        assert_eq!(vis2.len(), 2);
        let kern2 = HistoryKernel::build(vis2, &p);
        let term2 = terminal_decays(vis2, t2, &p);
        let dp2 = order_intensities(vis2, 0, &kern2, &term2, &w, 2, 0.0);
        let brute = order_intensity_bruteforce(vis2, t2, 0, 2, &w, &p);
        assert!((dp2.at(1, 0) - brute).abs() < 1e-12);
    }

    #[test]
    fn orders_monotone_in_history_under_nonnegative_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = 3;
        let p = params(k, 10);
        let w = Mat::from_fn(k, k, |_, _| rng.random::<f64>());
        for _ in 0..10 {
            let (events, t, _) = random_instance(&mut rng, k, 6);
            let shorter = &events[..5];
            let kern_s = HistoryKernel::build(shorter, &p);
            let kern_f = HistoryKernel::build(&events, &p);
            let dp_s = order_intensities(
                shorter,
                0,
                &kern_s,
                &terminal_decays(shorter, t, &p),
                &w,
                2,
                0.0,
            );
            let dp_f = order_intensities(
                &events,
                0,
                &kern_f,
                &terminal_decays(&events, t, &p),
                &w,
                2,
                0.0,
            );
            for l in 0..2 {
                for target in 0..k {
                    assert!(dp_f.at(l, target) >= dp_s.at(l, target) - 1e-14);
                }
            }
        }
    }

    #[test]
    fn empty_history_yields_base_rate_only() {
        let k = 3;
        let p = params(k, 11);
        let out = total_intensity(&[], 1.0, &p, &hp(k)).unwrap();
        for target in 0..k {
            let expect = softplus(softplus(p.base_raw[target])) + hp(k).intensity_floor;
            assert_eq!(out.total[target], expect);
            assert!(out.by_order.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn disabled_order_weights_reduce_to_base_rate() {
        let k = 3;
        let mut p = params(k, 12);
        // softplus underflows to exactly 0 for very negative raw weights.
        p.order_raw.iter_mut().for_each(|v| *v = -1e3);
        let events = [ev(0.2, 0), ev(0.5, 1), ev(0.9, 2)];
        let out = total_intensity(&events, 1.5, &p, &hp(k)).unwrap();
        for target in 0..k {
            let expect = softplus(softplus(p.base_raw[target])) + hp(k).intensity_floor;
            assert_eq!(out.total[target], expect);
        }
    }

    #[test]
    fn breakdown_composition_matches_directly_composed_value() {
        let k = 4;
        let p = params(k, 13);
        let h = hp(k);
        let events = [ev(0.2, 0), ev(0.6, 3), ev(1.1, 1), ev(1.3, 2)];
        let t = 1.9;
        let out = total_intensity(&events, t, &p, &h).unwrap();

        let w = effective_weights(&events, t, &p, &h).unwrap();
        let kernel = HistoryKernel::build(&events, &p);
        let terminal = terminal_decays(&events, t, &p);
        let raw = order_intensities(&events, 0, &kernel, &terminal, &w, h.effective_order(), 0.0);
        for target in 0..k {
            let mut pre = softplus(p.base_raw[target]);
            for l in 0..h.effective_order() {
                pre += softplus(p.order_raw_at(target, l)) * raw.at(l, target);
            }
            let expect = softplus(pre) + h.intensity_floor;
            let scale = expect.abs().max(1e-12);
            assert!((out.total[target] - expect).abs() / scale < 1e-12);
            assert!(out.total[target] >= h.intensity_floor);
            // Reported per-order contributions carry the learned weights.
            for l in 0..h.effective_order() {
                let contrib = softplus(p.order_raw_at(target, l)) * raw.at(l, target);
                assert!((out.by_order.at(l, target) - contrib).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_hop_static_variant_reduces_to_weighted_decay_form() {
        let k = 3;
        let mut h = hp(k);
        h.variant = Variant::HawkesMulti;
        let p = params(k, 14);
        let events = [ev(0.4, 1), ev(0.9, 0), ev(1.6, 2)];
        let t = 2.2;
        let out = total_intensity(&events, t, &p, &h).unwrap();
        let w = effective_weights(&events, t, &p, &h).unwrap();
        for target in 0..k {
            let excitation: f64 = events
                .iter()
                .map(|e| w.at(e.kind, target) * decay(t - e.time, &p))
                .sum();
            let pre = softplus(p.base_raw[target])
                + softplus(p.order_raw_at(target, 0)) * excitation;
            let expect = softplus(pre) + h.intensity_floor;
            assert!((out.total[target] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dag_mask_zeroes_subthreshold_edges() {
        let k = 3;
        let p = params(k, 15);
        let mut masked_hp = hp(k);
        masked_hp.mask_by_dag = true;
        let events = [ev(0.3, 0), ev(0.7, 1), ev(1.2, 2)];
        let t = 1.8;

        let plain = effective_weights(&events, t, &p, &hp(k)).unwrap();
        let snapshot = StructuralWeights {
            time: t,
            weights: plain.clone(),
        };
        let g = threshold_graph(&snapshot, &masked_hp);
        let masked = effective_weights(&events, t, &p, &masked_hp).unwrap();
        for u in 0..k {
            for v in 0..k {
                if g.adjacency.at(u, v) == 0 {
                    assert_eq!(masked.at(u, v), 0.0);
                } else {
                    assert_eq!(masked.at(u, v), plain.at(u, v));
                }
            }
        }
    }
}
