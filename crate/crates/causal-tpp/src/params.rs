//! Model parameters: storage, seeded initialization, and the flat layout
//! shared by the optimizer, checkpoints, and finite-difference checks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{inverse_softplus, GradientTape, Gradients, Real, Var};
use crate::types::HyperParameters;

/// Tensor shapes implied by a hyperparameter choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamDims {
    pub num_types: usize,
    /// Embedding width, twice the positional half-width.
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub hidden_dim: usize,
    pub max_order: usize,
}

impl ParamDims {
    pub fn of(hp: &HyperParameters) -> Self {
        ParamDims {
            num_types: hp.num_types,
            embed_dim: 2 * hp.embed_half_dim,
            attn_dim: hp.attn_dim,
            hidden_dim: hp.hidden_dim,
            max_order: hp.max_order,
        }
    }
}

/// Name, length, and flat offset of one parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub len: usize,
    pub offset: usize,
}

/// Flat layout: tensor order is fixed and load-bearing for checkpoints,
/// optimizer state, and gradient layout.
pub fn tensor_specs(dims: ParamDims) -> Vec<TensorSpec> {
    let ParamDims {
        num_types: k,
        embed_dim: e,
        attn_dim: a,
        hidden_dim: h,
        max_order: l,
    } = dims;
    let lens = [
        ("base_raw", k),
        ("order_raw", k * l),
        ("type_embed", k * e),
        ("attn_query", a * e),
        ("attn_key", a * e),
        ("attn_vec", 2 * a),
        ("edge_proj", k * e),
        ("decay_w1", h * e),
        ("decay_b1", h),
        ("decay_w2", h),
        ("decay_b2", 1),
    ];
    let mut offset = 0;
    lens.iter()
        .map(|&(name, len)| {
            let spec = TensorSpec { name, len, offset };
            offset += len;
            spec
        })
        .collect()
}

pub fn total_len(dims: ParamDims) -> usize {
    tensor_specs(dims).iter().map(|s| s.len).sum()
}

/// All learnable tensors, generic over the scalar so one forward
/// implementation serves both plain evaluation and tape recording.
///
/// Base rates and order weights are stored pre-activation; softplus maps
/// them to the positive values used by the intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<R> {
    pub dims: ParamDims,
    /// K pre-activation base rates.
    pub base_raw: Vec<R>,
    /// K x L pre-activation order weights, row-major by type.
    pub order_raw: Vec<R>,
    /// K x embed_dim type embeddings.
    pub type_embed: Vec<R>,
    /// attn_dim x embed_dim source projection.
    pub attn_query: Vec<R>,
    /// attn_dim x embed_dim target projection.
    pub attn_key: Vec<R>,
    /// 2 x attn_dim scoring vector.
    pub attn_vec: Vec<R>,
    /// K x embed_dim projection from attention context to graph rows.
    pub edge_proj: Vec<R>,
    /// hidden_dim x embed_dim first decay layer.
    pub decay_w1: Vec<R>,
    pub decay_b1: Vec<R>,
    /// 1 x hidden_dim second decay layer.
    pub decay_w2: Vec<R>,
    pub decay_b2: Vec<R>,
}

pub type ModelParameters = ParamSet<f64>;

impl<R: Real> ParamSet<R> {
    /// A constant in the same evaluation context as the parameters.
    pub fn lit(&self, value: f64) -> R {
        self.base_raw[0].lit(value)
    }

    /// Pre-activation order weight for type `k`, order index `l` (0-based).
    #[inline]
    pub fn order_raw_at(&self, k: usize, l: usize) -> R {
        self.order_raw[k * self.dims.max_order + l]
    }

    fn tensors(&self) -> [&Vec<R>; 11] {
        [
            &self.base_raw,
            &self.order_raw,
            &self.type_embed,
            &self.attn_query,
            &self.attn_key,
            &self.attn_vec,
            &self.edge_proj,
            &self.decay_w1,
            &self.decay_b1,
            &self.decay_w2,
            &self.decay_b2,
        ]
    }

    /// Concatenation of all tensors in the fixed layout.
    pub fn flatten_with(&self, mut f: impl FnMut(R) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(total_len(self.dims));
        for t in self.tensors() {
            out.extend(t.iter().map(|&v| f(v)));
        }
        out
    }
}

fn split_flat(dims: ParamDims, flat: &[f64]) -> [Vec<f64>; 11] {
    let specs = tensor_specs(dims);
    assert_eq!(
        flat.len(),
        total_len(dims),
        "flat parameter vector has wrong length"
    );
    let mut out: [Vec<f64>; 11] = Default::default();
    for (dst, spec) in out.iter_mut().zip(&specs) {
        *dst = flat[spec.offset..spec.offset + spec.len].to_vec();
    }
    out
}

impl ModelParameters {
    /// Deterministic initialization: weight matrices are zero-mean normal
    /// with scale 1/sqrt(fan-in), biases zero, and raw rates chosen so the
    /// initial base rate is about 0.1 per type.
    pub fn init(hp: &HyperParameters, seed: u64) -> Self {
        let dims = ParamDims::of(hp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |len: usize, fan_in: usize| -> Vec<f64> {
            let scale = 1.0 / (fan_in as f64).sqrt();
            (0..len)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * scale
                })
                .collect()
        };
        let e = dims.embed_dim;
        ParamSet {
            dims,
            base_raw: vec![inverse_softplus(0.1); dims.num_types],
            order_raw: normal(dims.num_types * dims.max_order, dims.max_order),
            type_embed: normal(dims.num_types * e, e),
            attn_query: normal(dims.attn_dim * e, e),
            attn_key: normal(dims.attn_dim * e, e),
            attn_vec: normal(2 * dims.attn_dim, 2 * dims.attn_dim),
            edge_proj: normal(dims.num_types * e, e),
            decay_w1: normal(dims.hidden_dim * e, e),
            decay_b1: vec![0.0; dims.hidden_dim],
            decay_w2: normal(dims.hidden_dim, dims.hidden_dim),
            decay_b2: vec![0.0; 1],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.flatten_with(|v| v)
    }

    /// Rescales onto the canonical gauge without changing any intensity.
    ///
    /// Every structural weight is linear in `edge_proj`, and an order-l
    /// intensity term multiplies exactly l hop weights, so the map
    /// W -> c W, alpha^(l) -> alpha^(l) / c^l leaves the model invariant
    /// for any constant c. Left alone, training parks the excitation scale
    /// in the order weights and |W| drifts arbitrarily, making weight
    /// magnitudes incomparable across runs. Canonical form: the mean
    /// first-order scale softplus(order_raw[., 0]) equals 1, the factor
    /// absorbed into `edge_proj`, so a reported weight is the full
    /// first-order influence a source event exerts and can be compared
    /// against a fixed edge threshold.
    pub fn canonicalized(&self) -> Self {
        let k = self.dims.num_types;
        let c = (0..k)
            .map(|i| crate::autodiff::softplus(self.order_raw_at(i, 0)))
            .sum::<f64>()
            / k as f64;
        if !c.is_finite() || c <= 1e-12 {
            return self.clone();
        }
        let mut out = self.clone();
        for w in &mut out.edge_proj {
            *w *= c;
        }
        for i in 0..k {
            for l in 0..self.dims.max_order {
                let scale = c.powi(l as i32 + 1);
                let alpha = crate::autodiff::softplus(self.order_raw_at(i, l)) / scale;
                out.order_raw[i * self.dims.max_order + l] = inverse_softplus(alpha);
            }
        }
        out
    }

    pub fn from_flat(dims: ParamDims, flat: &[f64]) -> Self {
        let [base_raw, order_raw, type_embed, attn_query, attn_key, attn_vec, edge_proj, decay_w1, decay_b1, decay_w2, decay_b2] =
            split_flat(dims, flat);
        ParamSet {
            dims,
            base_raw,
            order_raw,
            type_embed,
            attn_query,
            attn_key,
            attn_vec,
            edge_proj,
            decay_w1,
            decay_b1,
            decay_w2,
            decay_b2,
        }
    }

    pub fn zeros(dims: ParamDims) -> Self {
        Self::from_flat(dims, &vec![0.0; total_len(dims)])
    }

    /// Records every parameter as a tape input, preserving layout.
    pub fn lift<'t>(&self, tape: &'t GradientTape) -> ParamSet<Var<'t>> {
        let lift_vec = |v: &Vec<f64>| v.iter().map(|&x| tape.input(x)).collect::<Vec<_>>();
        ParamSet {
            dims: self.dims,
            base_raw: lift_vec(&self.base_raw),
            order_raw: lift_vec(&self.order_raw),
            type_embed: lift_vec(&self.type_embed),
            attn_query: lift_vec(&self.attn_query),
            attn_key: lift_vec(&self.attn_key),
            attn_vec: lift_vec(&self.attn_vec),
            edge_proj: lift_vec(&self.edge_proj),
            decay_w1: lift_vec(&self.decay_w1),
            decay_b1: lift_vec(&self.decay_b1),
            decay_w2: lift_vec(&self.decay_w2),
            decay_b2: lift_vec(&self.decay_b2),
        }
    }
}

/// Flat gradient of a recorded scalar with respect to lifted parameters,
/// in the same layout as [`ModelParameters::flatten`].
pub fn gradient_flat(grads: &Gradients, lifted: &ParamSet<Var<'_>>) -> Vec<f64> {
    lifted.flatten_with(|v| grads.wrt(v))
}
