//! Residual analysis: sequences simulated from a model are transformed by
//! its own compensator into unit-exponential residuals, and the KS test
//! accepts them while rejecting a deliberately mis-specified model.

use causal_tpp::autodiff::{inverse_softplus, softplus};
use causal_tpp::simulate::{
    ks_exponential, simulate_model, time_rescaling_residuals, SimulationConfig,
};
use causal_tpp::{HyperParameters, ModelParameters, Result};

/// Worst-case magnitude an influence weight can reach, used to pin the
/// randomly initialized simulation model to a subcritical regime.
fn weight_bound(p: &ModelParameters, k: usize, e: usize) -> f64 {
    let col_max: Vec<f64> = (0..e)
        .map(|c| {
            (0..k)
                .map(|u| 1.0 + p.type_embed[u * e + c].abs())
                .fold(0.0, f64::max)
        })
        .collect();
    (0..k)
        .map(|t| {
            (0..e)
                .map(|c| p.edge_proj[t * e + c].abs() * col_max[c])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// A fixed simulation model with a decaying kernel and bounded cascades.
fn tamed_model(hp: &HyperParameters, seed: u64) -> ModelParameters {
    let mut p = ModelParameters::init(hp, seed);
    for v in &mut p.base_raw {
        *v = inverse_softplus(0.4);
    }
    let lo = hp.max_order;
    for k in 0..hp.num_types {
        p.order_raw[k * lo] = inverse_softplus(0.5);
        if lo > 1 {
            p.order_raw[k * lo + 1] = inverse_softplus(0.3);
        }
    }
    // At random init the kernel is near-flat, so influence never dies out.
    // Route the relu path through sin(gap / 21.5), monotone over the
    // horizon, giving kappa ~ sigmoid(1.5 - 1.39 gap).
    for v in &mut p.decay_w1 {
        *v = 0.0;
    }
    for v in &mut p.decay_b1 {
        *v = 0.0;
    }
    for v in &mut p.decay_w2 {
        *v = 0.0;
    }
    p.decay_w1[2] = 10.0;
    p.decay_w2[0] = -3.0;
    p.decay_b2[0] = 1.5;
    let e = 2 * hp.embed_half_dim;
    let scale = 0.35 / weight_bound(&p, hp.num_types, e);
    for v in &mut p.edge_proj {
        *v *= scale;
    }
    p
}

fn main() -> Result<()> {
    let mut hp = HyperParameters::defaults(3);
    hp.embed_half_dim = 2;
    hp.attn_dim = 2;
    hp.hidden_dim = 4;
    hp.max_order = 2;
    hp.max_history = Some(40);
    let params = tamed_model(&hp, 42);
    // Same model with every base rate multiplied by five.
    let mut misfit = params.clone();
    for v in &mut misfit.base_raw {
        *v = inverse_softplus(5.0 * softplus(*v));
    }

    let runs = 30usize;
    let mut well_pass = 0usize;
    let mut misfit_reject = 0usize;
    println!("run   events  ks_true  ks_x5base");
    for i in 0..runs {
        let sim = SimulationConfig {
            horizon: 15.0,
            count: 1,
            seed: 5000 + i as u64,
            max_events: 1500,
            ..SimulationConfig::default()
        };
        let seq = simulate_model(&params, &hp, &sim)?.remove(0);
        let good = ks_exponential(&time_rescaling_residuals(&seq, &params, &hp)?);
        let bad = ks_exponential(&time_rescaling_residuals(&seq, &misfit, &hp)?);
        well_pass += usize::from(good.pass_1pct);
        misfit_reject += usize::from(!bad.pass_1pct);
        if i < 8 {
            println!(
                "{i:>3}  {:>6}   {:.3} {}   {:.3} {}",
                seq.len(),
                good.modified,
                if good.pass_1pct { "pass" } else { "REJECT" },
                bad.modified,
                if bad.pass_1pct { "pass" } else { "REJECT" },
            );
        }
    }
    println!(
        "well-specified passed {well_pass}/{runs}; x5-base model rejected {misfit_reject}/{runs}"
    );
    Ok(())
}
