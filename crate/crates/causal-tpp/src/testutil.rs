//! Shared helpers for unit tests: finite-difference verification of tape
//! gradients for scalar functions of the full parameter set.

use crate::autodiff::{GradientTape, Real, Var};
use crate::params::{gradient_flat, ModelParameters, ParamSet};

/// Compares the tape gradient of `tape_f` against central finite differences
/// of `plain_f` over every parameter coordinate. The two closures must be
/// the same function instantiated at `Var` and `f64`.
pub(crate) fn param_gradient_check<FT, FP>(
    params: &ModelParameters,
    tape_f: FT,
    plain_f: FP,
    step: f64,
    tol: f64,
) where
    FT: for<'t> Fn(&ParamSet<Var<'t>>) -> Var<'t>,
    FP: Fn(&ModelParameters) -> f64,
{
    let tape = GradientTape::new();
    let lifted = params.lift(&tape);
    let out = tape_f(&lifted);
    let grads = tape.gradient(out);
    let analytic = gradient_flat(&grads, &lifted);

    let flat = params.flatten();
    let mut worst = 0.0f64;
    let mut worst_idx = 0;
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += step;
        let mut minus = flat.clone();
        minus[i] -= step;
        let fp = plain_f(&ModelParameters::from_flat(params.dims, &plus));
        let fm = plain_f(&ModelParameters::from_flat(params.dims, &minus));
        let fd = (fp - fm) / (2.0 * step);
        let diff = (analytic[i] - fd).abs() / (1.0 + fd.abs());
        if diff > worst {
            worst = diff;
            worst_idx = i;
        }
    }
    assert!(
        worst <= tol,
        "gradient mismatch at flat index {worst_idx}: relative error {worst} exceeds {tol}"
    );
    // The recorded value must equal the plain evaluation bit for bit.
    assert_eq!(out.val().to_bits(), plain_f(params).to_bits());
}
