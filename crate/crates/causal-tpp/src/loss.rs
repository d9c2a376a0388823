//! Training objective: negative log-likelihood plus structure penalties.
//!
//! The likelihood integral has no closed form, so it is approximated by the
//! trapezoidal rule on a grid of every event time plus a fixed number of
//! equally spaced interior points per inter-event interval. Event-time
//! intensities double as the log-likelihood terms. History at every grid
//! point is strictly before the point, so the intensity at an event time
//! does not see the event itself.
//!
//! Everything here is generic over the scalar: the same sweep produces
//! plain values for logging and tape-recorded values for gradients.

use crate::autodiff::{sum, GradientTape, Real};
use crate::error::{Error, Result};
use crate::graph::{acyclicity_penalty, sparsity_penalty};
use crate::intensity::{
    compose_intensities, effective_weights, history_window, order_intensities, terminal_decays,
    HistoryKernel,
};
use crate::params::{gradient_flat, ModelParameters, ParamSet};
use crate::types::{validate_sequence, EventSequence, HyperParameters};

/// Additive pieces of the objective. `total` is composed as
/// (nll + acyclic) + sparse, in that order, so reported parts always
/// reconstruct the reported total exactly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub nll: f64,
    pub acyclic: f64,
    pub sparse: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn compose(nll: f64, acyclic: f64, sparse: f64) -> Self {
        LossBreakdown {
            nll,
            acyclic,
            sparse,
            total: nll + acyclic + sparse,
        }
    }
}

struct GridPoint {
    time: f64,
    /// Events visible to this point (timestamps strictly before it).
    hist_len: usize,
    /// Set when this point is an event time; holds the event's type.
    event_kind: Option<usize>,
    /// Whether a frozen-weights sweep recomputes the influence graph here.
    recompute: bool,
}

/// Quadrature grid: 0, every event time, the horizon end, with `substeps`
/// equally spaced interior points inside each inter-event interval.
fn build_grid(seq: &EventSequence, substeps: usize) -> Vec<GridPoint> {
    let ev = &seq.events;
    let n = ev.len();
    let mut pts = Vec::with_capacity((n + 1) * (substeps + 1) + 1);
    let first_kind = if ev[0].time == 0.0 { Some(ev[0].kind) } else { None };
    pts.push(GridPoint {
        time: 0.0,
        hist_len: 0,
        event_kind: first_kind,
        recompute: true,
    });

    let mut boundaries: Vec<(f64, Option<usize>)> = ev
        .iter()
        .enumerate()
        .filter(|(_, e)| e.time > 0.0)
        .map(|(i, e)| (e.time, Some(i)))
        .collect();
    if seq.horizon > ev[n - 1].time {
        boundaries.push((seq.horizon, None));
    }

    let mut prev = 0.0;
    let mut done = usize::from(first_kind.is_some());
    for (bt, idx) in boundaries {
        for j in 1..=substeps {
            let time = prev + (bt - prev) * j as f64 / (substeps + 1) as f64;
            pts.push(GridPoint {
                time,
                hist_len: done,
                event_kind: None,
                recompute: false,
            });
        }
        match idx {
            Some(i) => {
                pts.push(GridPoint {
                    time: bt,
                    hist_len: i,
                    event_kind: Some(ev[i].kind),
                    recompute: true,
                });
                done = i + 1;
            }
            None => pts.push(GridPoint {
                time: bt,
                hist_len: done,
                event_kind: None,
                recompute: false,
            }),
        }
        prev = bt;
    }
    pts
}

struct SweepTerms<R> {
    integral: R,
    log_sum: R,
    acyclic: R,
    sparse: R,
}

impl<R: Real> SweepTerms<R> {
    fn nll(&self) -> R {
        self.integral - self.log_sum
    }
}

/// One pass over a sequence's grid producing the likelihood terms and, when
/// requested, the event-time structure penalties (unweighted).
fn sweep<R: Real>(
    seq: &EventSequence,
    params: &ParamSet<R>,
    hp: &HyperParameters,
    want_reg: bool,
) -> Result<SweepTerms<R>> {
    let events = &seq.events;
    let kernel = HistoryKernel::build(events, params);
    let zero = params.lit(0.0);
    let l_eff = hp.effective_order();
    let grid = build_grid(seq, hp.integration_substeps);

    let mut integral = zero;
    let mut log_sum = zero;
    let mut acyclic = zero;
    let mut sparse = zero;
    let mut prev: Option<(f64, R)> = None;
    let mut current_w = None;

    for point in &grid {
        let visible = &events[..point.hist_len];
        let window = history_window(visible, point.time, hp.max_history);
        let offset = point.hist_len - window.len();

        if current_w.is_none() || point.recompute || !hp.frozen_grid_weights {
            current_w = Some(effective_weights(window, point.time, params, hp)?);
        }
        let w = current_w.as_ref().unwrap();

        let terminal = terminal_decays(window, point.time, params);
        let raw = order_intensities(window, offset, &kernel, &terminal, w, l_eff, zero);
        let lam = compose_intensities(&raw, params, hp);
        let lam_sum = sum(&lam).expect("at least one type");

        if let Some((pt, psum)) = prev {
            integral = integral + (psum + lam_sum).scale(0.5 * (point.time - pt));
        }
        prev = Some((point.time, lam_sum));

        if let Some(kind) = point.event_kind {
            log_sum = log_sum + lam[kind].ln();
            if want_reg {
                acyclic = acyclic + acyclicity_penalty(&w)?;
                sparse = sparse + sparsity_penalty(&w);
            }
        }
    }
    Ok(SweepTerms {
        integral,
        log_sum,
        acyclic,
        sparse,
    })
}

fn check_sequence(seq: &EventSequence, hp: &HyperParameters) -> Result<()> {
    validate_sequence(seq, hp.num_types)?;
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(())
}

/// Negative log-likelihood of one sequence.
pub fn nll(seq: &EventSequence, params: &ModelParameters, hp: &HyperParameters) -> Result<f64> {
    check_sequence(seq, hp)?;
    sweep(seq, params, hp, false).map(|t| t.nll())
}

/// The two halves of the negative log-likelihood: the intensity integral
/// and the summed log-intensities at event times (nll = integral - log sum).
pub fn nll_decomposed(
    seq: &EventSequence,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<(f64, f64)> {
    check_sequence(seq, hp)?;
    let terms = sweep(seq, params, hp, false)?;
    Ok((terms.integral, terms.log_sum))
}

/// Weighted structure penalties of one sequence: the acyclicity and
/// sparsity of the influence graph snapshotted at every event time, each
/// scaled by its configured coefficient.
pub fn regularizers(
    seq: &EventSequence,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<(f64, f64)> {
    check_sequence(seq, hp)?;
    let mut acyclic = 0.0;
    let mut sparse = 0.0;
    for i in 0..seq.events.len() {
        let t = seq.events[i].time;
        let visible = &seq.events[..i];
        let window = history_window(visible, t, hp.max_history);
        let w = effective_weights(window, t, params, hp)?;
        acyclic += acyclicity_penalty(&w)?;
        sparse += sparsity_penalty(&w);
    }
    Ok((hp.acyclic_weight * acyclic, hp.sparsity_weight * sparse))
}

/// Full objective of one sequence.
pub fn sequence_loss(
    seq: &EventSequence,
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<LossBreakdown> {
    check_sequence(seq, hp)?;
    let terms = sweep(seq, params, hp, true)?;
    Ok(LossBreakdown::compose(
        terms.nll(),
        hp.acyclic_weight * terms.acyclic,
        hp.sparsity_weight * terms.sparse,
    ))
}

/// Mean objective over a batch; parts are per-sequence means and the total
/// is recomposed from the mean parts.
pub fn batch_loss(
    batch: &[&EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut nll_sum = 0.0;
    let mut acyclic_sum = 0.0;
    let mut sparse_sum = 0.0;
    for seq in batch {
        let b = sequence_loss(seq, params, hp)?;
        nll_sum += b.nll;
        acyclic_sum += b.acyclic;
        sparse_sum += b.sparse;
    }
    let inv = 1.0 / batch.len() as f64;
    let out = LossBreakdown::compose(nll_sum * inv, acyclic_sum * inv, sparse_sum * inv);
    if !out.total.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(out)
}

/// Mean objective and its exact gradient over a batch. The gradient layout
/// matches [`ModelParameters`]; values are identical to [`batch_loss`].
pub fn batch_loss_and_gradient(
    batch: &[&EventSequence],
    params: &ModelParameters,
    hp: &HyperParameters,
) -> Result<(LossBreakdown, ModelParameters)> {
    if batch.is_empty() {
        return Err(Error::EmptySequence);
    }
    for seq in batch {
        check_sequence(seq, hp)?;
    }
    let mut grad_sum = vec![0.0f64; params.flatten().len()];
    let mut nll_sum = 0.0;
    let mut acyclic_sum = 0.0;
    let mut sparse_sum = 0.0;
    let tape = GradientTape::new();
    for seq in batch {
        tape.clear();
        let lifted = params.lift(&tape);
        let terms = sweep(seq, &lifted, hp, true)?;
        let nll_v = terms.nll();
        let acyclic = terms.acyclic.scale(hp.acyclic_weight);
        let sparse = terms.sparse.scale(hp.sparsity_weight);
        let total = nll_v + acyclic + sparse;
        if !total.val().is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        nll_sum += nll_v.val();
        acyclic_sum += acyclic.val();
        sparse_sum += sparse.val();
        let grads = tape.gradient(total);
        for (dst, g) in grad_sum.iter_mut().zip(gradient_flat(&grads, &lifted)) {
            *dst += g;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad_sum.iter_mut().for_each(|g| *g *= inv);
    let breakdown =
        LossBreakdown::compose(nll_sum * inv, acyclic_sum * inv, sparse_sum * inv);
    if !breakdown.total.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((breakdown, ModelParameters::from_flat(params.dims, &grad_sum)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::softplus;
    use crate::types::Event;
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

    fn random_sequence(rng: &mut ChaCha8Rng, k: usize, n: usize, horizon: f64) -> EventSequence {
        let mut times: Vec<f64> = (0..n)
            .map(|_| rng.random::<f64>() * horizon * 0.95)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        EventSequence::new(
            times
                .into_iter()
                .map(|t| ev(t, rng.random_range(0..k)))
                .collect(),
            horizon,
        )
    }

    /// Forces constant intensities by disabling every order weight.
    fn poissonized(mut p: ModelParameters) -> ModelParameters {
        p.order_raw.iter_mut().for_each(|v| *v = -1e3);
        p
    }

    #[test]
    fn grid_covers_window_with_interior_points() {
        let seq = EventSequence::new(vec![ev(1.0, 0), ev(3.0, 1)], 4.0);
        let grid = build_grid(&seq, 2);
        let times: Vec<f64> = grid.iter().map(|p| p.time).collect();
        // Three intervals, two interior points each, plus all boundaries.
        let expect = [
            0.0,
            1.0 / 3.0,
            2.0 / 3.0,
            1.0,
            1.0 + 2.0 / 3.0,
            1.0 + 4.0 / 3.0,
            3.0,
            3.0 + 1.0 / 3.0,
            3.0 + 2.0 / 3.0,
            4.0,
        ];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(grid[3].event_kind, Some(0));
        assert_eq!(grid[3].hist_len, 0);
        assert_eq!(grid[4].hist_len, 1);
        assert_eq!(grid[6].event_kind, Some(1));
        assert_eq!(grid[6].hist_len, 1);
        assert_eq!(grid[9].hist_len, 2);
        assert!(grid[9].event_kind.is_none());
    }

    #[test]
    fn grid_handles_events_at_boundaries() {
        let seq = EventSequence::new(vec![ev(0.0, 1), ev(2.0, 0)], 2.0);
        let grid = build_grid(&seq, 1);
        assert_eq!(grid[0].time, 0.0);
        assert_eq!(grid[0].event_kind, Some(1));
        assert_eq!(grid[0].hist_len, 0);
        let last = grid.last().unwrap();
        assert_eq!(last.time, 2.0);
        assert_eq!(last.event_kind, Some(0));
        assert_eq!(last.hist_len, 1);
        assert_eq!(grid.len(), 3);
    }

    #[test]
    fn constant_intensity_nll_matches_closed_form() {
        let k = 3;
        let p = poissonized(params(k, 1));
        let h = hp(k);
        let rates: Vec<f64> = p
            .base_raw
            .iter()
            .map(|&r| softplus(softplus(r)) + h.intensity_floor)
            .collect();
        let seq = EventSequence::new(vec![ev(0.4, 0), ev(1.1, 2), ev(2.6, 1)], 3.5);
        let got = nll(&seq, &p, &h).unwrap();
        let expect = seq.horizon * rates.iter().sum::<f64>()
            - seq.events.iter().map(|e| rates[e.kind].ln()).sum::<f64>();
        let scale = expect.abs().max(1e-12);
        assert!(
            (got - expect).abs() / scale < 1e-10,
            "{got} vs {expect}"
        );
    }

    #[test]
    fn nll_decomposition_reconstructs_value() {
        let k = 3;
        let p = params(k, 2);
        let h = hp(k);
        let seq = EventSequence::new(vec![ev(0.3, 0), ev(0.9, 1), ev(1.7, 2)], 2.5);
        let (integral, log_sum) = nll_decomposed(&seq, &p, &h).unwrap();
        let direct = nll(&seq, &p, &h).unwrap();
        assert!((integral - log_sum - direct).abs() < 1e-12);
        assert!(integral > 0.0);
    }

    #[test]
    fn quadrature_close_to_high_resolution_reference() {
        let k = 3;
        let p = params(k, 3);
        let mut h = hp(k);
        let seq = EventSequence::new(vec![ev(0.5, 1), ev(1.2, 0)], 2.0);
        h.integration_substeps = 10;
        let (coarse, _) = nll_decomposed(&seq, &p, &h).unwrap();
        h.integration_substeps = 1000;
        let (fine, _) = nll_decomposed(&seq, &p, &h).unwrap();
        // The intensity jumps at each event and every knot takes the
        // strictly-before history, so the segment after a jump converges
        // first-order; tolerance sized accordingly.
        assert!(
            (coarse - fine).abs() / fine.abs().max(1e-12) < 5e-3,
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn doubling_substeps_changes_integral_below_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = 3;
        let p = params(k, 4);
        let mut h = hp(k);
        for _ in 0..3 {
            let seq = random_sequence(&mut rng, k, 6, 3.0);
            h.integration_substeps = 10;
            let (i10, _) = nll_decomposed(&seq, &p, &h).unwrap();
            h.integration_substeps = 20;
            let (i20, _) = nll_decomposed(&seq, &p, &h).unwrap();
            assert!(
                (i20 - i10).abs() / i10.abs().max(1e-12) < 0.01,
                "{i10} vs {i20}"
            );
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        let k = 2;
        let p = params(k, 5);
        let seq = EventSequence::new(vec![], 1.0);
        assert!(matches!(
            nll(&seq, &p, &hp(k)),
            Err(Error::EmptySequence)
        ));
        assert!(matches!(
            sequence_loss(&seq, &p, &hp(k)),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn zero_penalty_weights_zero_regularizers() {
        let k = 3;
        let p = params(k, 6);
        let mut h = hp(k);
        h.acyclic_weight = 0.0;
        h.sparsity_weight = 0.0;
        let seq = EventSequence::new(vec![ev(0.5, 0), ev(1.0, 1)], 2.0);
        let (a, s) = regularizers(&seq, &p, &h).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(s, 0.0);
        let b = sequence_loss(&seq, &p, &h).unwrap();
        assert_eq!(b.acyclic, 0.0);
        assert_eq!(b.sparse, 0.0);
        assert_eq!(b.total, b.nll);
    }

    #[test]
    fn zero_projection_means_zero_graph_and_zero_penalties() {
        let k = 3;
        let mut p = params(k, 7);
        p.edge_proj.iter_mut().for_each(|v| *v = 0.0);
        let seq = EventSequence::new(vec![ev(0.5, 0), ev(1.0, 1)], 2.0);
        let (a, s) = regularizers(&seq, &p, &hp(k)).unwrap();
        assert!(a.abs() < 1e-15);
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn standalone_regularizers_match_fused_sweep() {
        let k = 3;
        let p = params(k, 8);
        let h = hp(k);
        let seq = EventSequence::new(vec![ev(0.2, 2), ev(0.9, 0), ev(1.6, 1)], 2.0);
        let (a, s) = regularizers(&seq, &p, &h).unwrap();
        let b = sequence_loss(&seq, &p, &h).unwrap();
        assert!((b.acyclic - a).abs() < 1e-14);
        assert!((b.sparse - s).abs() < 1e-14);
        assert!((b.nll - nll(&seq, &p, &h).unwrap()).abs() < 1e-14);
        assert_eq!(b.total, b.nll + b.acyclic + b.sparse);
    }

    #[test]
    fn batch_parts_are_sequence_means() {
        let k = 3;
        let p = params(k, 9);
        let h = hp(k);
        let s1 = EventSequence::new(vec![ev(0.4, 0), ev(1.3, 1)], 2.0);
        let s2 = EventSequence::new(vec![ev(0.2, 2), ev(0.8, 0), ev(1.9, 1)], 2.5);
        let b1 = sequence_loss(&s1, &p, &h).unwrap();
        let b2 = sequence_loss(&s2, &p, &h).unwrap();
        let batch = batch_loss(&[&s1, &s2], &p, &h).unwrap();
        assert!((batch.nll - (b1.nll + b2.nll) / 2.0).abs() < 1e-14);
        assert!((batch.acyclic - (b1.acyclic + b2.acyclic) / 2.0).abs() < 1e-14);
        assert_eq!(batch.total, batch.nll + batch.acyclic + batch.sparse);
    }

    #[test]
    fn gradient_values_match_plain_evaluation_bitwise() {
        let k = 3;
        let p = params(k, 10);
        let h = hp(k);
        let s1 = EventSequence::new(vec![ev(0.4, 0), ev(1.3, 1)], 2.0);
        let s2 = EventSequence::new(vec![ev(0.6, 2), ev(1.1, 0)], 2.0);
        let (b_grad, _) = batch_loss_and_gradient(&[&s1, &s2], &p, &h).unwrap();
        let b_plain = batch_loss(&[&s1, &s2], &p, &h).unwrap();
        assert_eq!(b_grad.nll.to_bits(), b_plain.nll.to_bits());
        assert_eq!(b_grad.acyclic.to_bits(), b_plain.acyclic.to_bits());
        assert_eq!(b_grad.sparse.to_bits(), b_plain.sparse.to_bits());
        assert_eq!(b_grad.total.to_bits(), b_plain.total.to_bits());
    }

    #[test]
    fn identical_pair_batch_gradient_equals_single_gradient() {
        let k = 3;
        let p = params(k, 11);
        let h = hp(k);
        let s = EventSequence::new(vec![ev(0.5, 1), ev(1.4, 2)], 2.0);
        let (_, g1) = batch_loss_and_gradient(&[&s], &p, &h).unwrap();
        let (_, g2) = batch_loss_and_gradient(&[&s, &s], &p, &h).unwrap();
        let (f1, f2) = (g1.flatten(), g2.flatten());
        for (a, b) in f1.iter().zip(&f2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn excitation_parameters_get_zero_gradient_when_disabled() {
        // With order weights pushed into softplus underflow and penalties
        // off, the loss depends only on base rates; every excitation-path
        // parameter must then receive an exactly zero gradient.
        let k = 3;
        let p = poissonized(params(k, 12));
        let mut h = hp(k);
        h.acyclic_weight = 0.0;
        h.sparsity_weight = 0.0;
        let seq = EventSequence::new(vec![ev(0.5, 0), ev(1.0, 2), ev(1.5, 1)], 2.0);
        let (_, grad) = batch_loss_and_gradient(&[&seq], &p, &h).unwrap();
        assert!(grad.base_raw.iter().any(|&g| g != 0.0));
        for g in grad
            .attn_query
            .iter()
            .chain(&grad.attn_key)
            .chain(&grad.attn_vec)
            .chain(&grad.edge_proj)
            .chain(&grad.type_embed)
            .chain(&grad.decay_w1)
            .chain(&grad.decay_b1)
            .chain(&grad.decay_w2)
            .chain(&grad.decay_b2)
        {
            assert_eq!(*g, 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_on_toy_batch() {
        let k = 3;
        let mut h = hp(k);
        // Small sizes keep the finite-difference loop fast.
        h.embed_half_dim = 3;
        h.attn_dim = 3;
        h.hidden_dim = 4;
        let p = ModelParameters::init(&h, 13);
        let s1 = EventSequence::new(vec![ev(0.4, 0), ev(0.9, 2), ev(1.6, 1)], 2.0);
        let s2 = EventSequence::new(vec![ev(0.3, 1), ev(1.2, 0)], 2.0);
        let batch = [&s1, &s2];
        let (_, grad) = batch_loss_and_gradient(&batch, &p, &h).unwrap();
        let flat_grad = grad.flatten();
        let flat = p.flatten();
        let step = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += step;
            let mut minus = flat.clone();
            minus[i] -= step;
            let fp = batch_loss(&batch, &ModelParameters::from_flat(p.dims, &plus), &h)
                .unwrap()
                .total;
            let fm = batch_loss(&batch, &ModelParameters::from_flat(p.dims, &minus), &h)
                .unwrap()
                .total;
            let fd = (fp - fm) / (2.0 * step);
            worst = worst.max((flat_grad[i] - fd).abs() / (1.0 + fd.abs()));
        }
        assert!(worst < 1e-4, "worst relative gradient error {worst}");
    }

    #[test]
    fn frozen_grid_weights_reuse_interval_graph() {
        let k = 3;
        let p = params(k, 14);
        let mut h = hp(k);
        let seq = EventSequence::new(vec![ev(0.7, 0), ev(1.5, 1)], 2.0);
        let exact = nll(&seq, &p, &h).unwrap();
        h.frozen_grid_weights = true;
        let frozen = nll(&seq, &p, &h).unwrap();
        // Different quadrature integrand, same order of magnitude.
        assert_ne!(exact.to_bits(), frozen.to_bits());
        assert!((exact - frozen).abs() / exact.abs().max(1.0) < 0.2);

        // Static-graph variants are unaffected by freezing.
        let mut hs = hp(k);
        hs.variant = crate::types::Variant::MultiOrderStatic;
        let a = nll(&seq, &p, &hs).unwrap();
        hs.frozen_grid_weights = true;
        let b = nll(&seq, &p, &hs).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
