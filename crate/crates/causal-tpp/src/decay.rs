//! Learnable temporal decay shared by all type pairs.
//!
//! A two-layer network maps the sinusoidal encoding of an elapsed gap to a
//! value in (0, 1). Nonpositive gaps are clamped to exactly zero with zero
//! gradient, so influence never flows backward or instantaneously in time.

use crate::autodiff::Real;
use crate::encoding::positional_encoding;
use crate::params::ParamSet;

/// Decay factor for an elapsed gap; exactly 0 for `gap <= 0`.
pub fn decay<R: Real>(gap: f64, params: &ParamSet<R>) -> R {
    if gap <= 0.0 {
        return params.lit(0.0);
    }
    let e = params.dims.embed_dim;
    let h = params.dims.hidden_dim;
    let pe = positional_encoding(gap, e / 2);
    let mut out = params.decay_b2[0];
    for i in 0..h {
        let row = &params.decay_w1[i * e..(i + 1) * e];
        let mut acc = params.decay_b1[i];
        for (w, &x) in row.iter().zip(&pe) {
            acc = acc + w.scale(x);
        }
        out = out + params.decay_w2[i] * acc.relu();
    }
    out.sigmoid()
}
