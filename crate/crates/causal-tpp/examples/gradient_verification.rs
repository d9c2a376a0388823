//! Compares analytic gradients of the training objective against central
//! finite differences, per parameter tensor, across model variants and
//! random seeds.

use causal_tpp::train::{gradient_check, toy_batch};
use causal_tpp::types::Variant;
use causal_tpp::{HyperParameters, ModelParameters, Result};

fn main() -> Result<()> {
    let variants = [
        Variant::HawkesUni,
        Variant::HawkesMulti,
        Variant::MultiOrderStatic,
        Variant::FullDynamic,
    ];
    // Small enough that probes stay on one side of relu and masking kinks.
    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for variant in variants {
        println!("variant {}", variant.name());
        for seed in 0..3u64 {
            let mut hp = HyperParameters::defaults(3);
            hp.embed_half_dim = 2;
            hp.attn_dim = 2;
            hp.hidden_dim = 4;
            hp.max_order = 2;
            hp.integration_substeps = 2;
            hp.variant = variant;
            let params = ModelParameters::init(&hp, 100 + seed);
            let batch = toy_batch(seed, hp.num_types, 6);
            let refs: Vec<_> = batch.iter().collect();
            let checks = gradient_check(&refs, &params, &hp, step)?;
            let seed_worst = checks
                .iter()
                .map(|c| c.rel_error)
                .fold(0.0f64, f64::max);
            println!("  seed {seed}: worst relative error {seed_worst:.3e}");
            for c in &checks {
                if seed == 0 {
                    println!(
                        "    {:<12} |analytic| {:>10.4e}  |fd| {:>10.4e}  rel {:.3e}",
                        c.name, c.analytic_norm, c.fd_norm, c.rel_error
                    );
                }
                if c.rel_error > worst {
                    worst = c.rel_error;
                    worst_at = format!("{} / seed {seed} / {}", variant.name(), c.name);
                }
            }
        }
    }
    println!("worst relative error overall: {worst:.3e} at {worst_at}");
    assert!(worst < 1e-4, "analytic gradient disagrees with finite differences");
    println!("all analytic gradients match finite differences");
    Ok(())
}
