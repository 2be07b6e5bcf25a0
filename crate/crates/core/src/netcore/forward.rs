use nalgebra::{DMatrix, DVector};

use super::params::{ArchSpec, GruLayerParams, LayerParams, Layers, NetworkParams};
use crate::error::{Error, Result};
use crate::linalg::sigmoid;

/// Per-layer hidden state vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState(pub Vec<DVector<f64>>);

impl HiddenState {
    /// The conventional zero initial state.
    pub fn zeros(spec: &ArchSpec) -> Self {
        HiddenState(spec.layer_sizes.iter().map(|&n| DVector::zeros(n)).collect())
    }

    pub fn is_in_unit_box(&self) -> bool {
        self.0.iter().flatten().all(|x| (-1.0..=1.0).contains(x))
    }

    /// Infinity norm of the stacked state.
    pub fn inf_norm(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Result of one MGU layer update.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStep {
    pub h_next: DVector<f64>,
    pub forget: DVector<f64>,
    pub candidate: DVector<f64>,
}

/// One MGU layer update
/// `h+ = (1 - f) o h + f o c`, with
/// `f = sigmoid(W_f u + R_f h + b_f)` and `c = tanh(W_c u + R_c (f o h) + b_c)`.
pub fn layer_step(params: &LayerParams, h: &DVector<f64>, u: &DVector<f64>) -> Result<LayerStep> {
    params.validate()?;
    if h.len() != params.n_hidden() {
        return Err(Error::shape("hidden state", params.n_hidden(), h.len()));
    }
    if u.len() != params.n_input() {
        return Err(Error::shape("layer input", params.n_input(), u.len()));
    }
    if !h.iter().chain(u.iter()).all(|x| x.is_finite()) {
        return Err(Error::NonFinite {
            what: "layer_step arguments".into(),
        });
    }
    Ok(mgu_step(params, h, u))
}

pub(crate) fn mgu_step(p: &LayerParams, h: &DVector<f64>, u: &DVector<f64>) -> LayerStep {
    let forget = (&p.w_f * u + &p.r_f * h + &p.b_f).map(sigmoid);
    let gated = forget.component_mul(h);
    let candidate = (&p.w_c * u + &p.r_c * gated + &p.b_c).map(f64::tanh);
    // Written as an explicit convex combination so that |h+| <= 1 survives rounding.
    let h_next = DVector::from_fn(h.len(), |j, _| (1.0 - forget[j]) * h[j] + forget[j] * candidate[j]);
    LayerStep {
        h_next,
        forget,
        candidate,
    }
}

pub(crate) struct GruStep {
    h_next: DVector<f64>,
    update: DVector<f64>,
    reset: DVector<f64>,
    candidate: DVector<f64>,
}

/// Standard GRU update with the reset gate applied inside the recurrent term.
pub(crate) fn gru_step(p: &GruLayerParams, h: &DVector<f64>, u: &DVector<f64>) -> GruStep {
    let update = (&p.w_z * u + &p.r_z * h + &p.b_z).map(sigmoid);
    let reset = (&p.w_r * u + &p.r_r * h + &p.b_r).map(sigmoid);
    let candidate = (&p.w_c * u + &p.r_c * reset.component_mul(h) + &p.b_c).map(f64::tanh);
    let h_next = DVector::from_fn(h.len(), |j, _| (1.0 - update[j]) * h[j] + update[j] * candidate[j]);
    GruStep {
        h_next,
        update,
        reset,
        candidate,
    }
}

/// Everything a forward simulation produced, kept for backpropagation.
///
/// Indexing: `states[l][k]` is `h_k` of layer `l` (so `states[l][0]` is the
/// initial state and the vector has `N + 1` entries); `inputs[l][k]`,
/// `forget[l][k]`, `candidate[l][k]` belong to the update from `k` to `k + 1`.
#[derive(Clone, Debug)]
pub struct RolloutTrace {
    pub outputs: Vec<DVector<f64>>,
    pub states: Vec<Vec<DVector<f64>>>,
    pub inputs: Vec<Vec<DVector<f64>>>,
    /// Forget gate for MGU layers, update gate for GRU layers.
    pub forget: Vec<Vec<DVector<f64>>>,
    pub candidate: Vec<Vec<DVector<f64>>>,
    /// GRU reset gates; `None` for MGU networks.
    pub reset: Option<Vec<Vec<DVector<f64>>>>,
    /// Inverted-dropout input masks per layer (already scaled), if any.
    pub masks: Option<Vec<DVector<f64>>>,
}

impl RolloutTrace {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Outputs as an `n_y x N` matrix.
    pub fn outputs_matrix(&self) -> DMatrix<f64> {
        let n_y = self.outputs.first().map_or(0, |y| y.len());
        DMatrix::from_fn(n_y, self.outputs.len(), |i, k| self.outputs[k][i])
    }

    pub fn final_state(&self) -> HiddenState {
        HiddenState(self.states.iter().map(|s| s.last().expect("h0 present").clone()).collect())
    }
}

/// Simulates the network over `inputs` starting from `h0`.
///
/// Layer `l > 1` consumes the already-updated state `h_{k+1}^(l-1)` of the
/// layer below at the same step; `y_k = W_y h_{k+1}^(L) + b_y`.
pub fn network_rollout(theta: &NetworkParams, h0: &HiddenState, inputs: &[DVector<f64>]) -> Result<RolloutTrace> {
    rollout_with_masks(theta, h0, inputs, None)
}

/// [`network_rollout`] with optional per-layer multiplicative masks on the
/// layer inputs (used for inverted dropout during training).
pub fn rollout_with_masks(
    theta: &NetworkParams,
    h0: &HiddenState,
    inputs: &[DVector<f64>],
    masks: Option<&[DVector<f64>]>,
) -> Result<RolloutTrace> {
    theta.validate()?;
    let spec = theta.spec();
    let n_layers = spec.layer_sizes.len();
    if h0.0.len() != n_layers {
        return Err(Error::shape("initial state layers", n_layers, h0.0.len()));
    }
    for (l, h) in h0.0.iter().enumerate() {
        if h.len() != spec.layer_sizes[l] {
            return Err(Error::shape(format!("initial state of layer {}", l + 1), spec.layer_sizes[l], h.len()));
        }
    }
    if !h0.is_in_unit_box() {
        return Err(Error::Precondition("initial state must lie in [-1, 1]^n".into()));
    }
    for (k, u) in inputs.iter().enumerate() {
        if u.len() != spec.n_u {
            return Err(Error::shape(format!("input at step {k}"), spec.n_u, u.len()));
        }
    }
    if let Some(m) = masks {
        if m.len() != n_layers {
            return Err(Error::shape("dropout masks", n_layers, m.len()));
        }
        for l in 0..n_layers {
            if m[l].len() != spec.layer_input_width(l) {
                return Err(Error::shape(format!("mask of layer {}", l + 1), spec.layer_input_width(l), m[l].len()));
            }
        }
    }

    let n = inputs.len();
    let mut states: Vec<Vec<DVector<f64>>> = h0.0.iter().map(|h| {
        let mut v = Vec::with_capacity(n + 1);
        v.push(h.clone());
        v
    }).collect();
    let mut layer_inputs = vec![Vec::with_capacity(n); n_layers];
    let mut forget = vec![Vec::with_capacity(n); n_layers];
    let mut candidate = vec![Vec::with_capacity(n); n_layers];
    let mut reset = match theta.layers {
        Layers::Gru(_) => Some(vec![Vec::with_capacity(n); n_layers]),
        Layers::Mgu(_) => None,
    };
    let mut outputs = Vec::with_capacity(n);

    for (k, u) in inputs.iter().enumerate() {
        for l in 0..n_layers {
            let raw = if l == 0 { u.clone() } else { states[l - 1][k + 1].clone() };
            let x = match masks {
                Some(m) => raw.component_mul(&m[l]),
                None => raw,
            };
            let h = &states[l][k];
            match &theta.layers {
                Layers::Mgu(v) => {
                    let s = mgu_step(&v[l], h, &x);
                    states[l].push(s.h_next);
                    forget[l].push(s.forget);
                    candidate[l].push(s.candidate);
                }
                Layers::Gru(v) => {
                    let s = gru_step(&v[l], h, &x);
                    states[l].push(s.h_next);
                    forget[l].push(s.update);
                    candidate[l].push(s.candidate);
                    if let Some(r) = reset.as_mut() {
                        r[l].push(s.reset);
                    }
                }
            }
            layer_inputs[l].push(x);
        }
        outputs.push(&theta.w_y * &states[n_layers - 1][k + 1] + &theta.b_y);
    }

    Ok(RolloutTrace {
        outputs,
        states,
        inputs: layer_inputs,
        forget,
        candidate,
        reset,
        masks: masks.map(|m| m.to_vec()),
    })
}

/// Output-only simulation without retaining the trace (used for timing and
/// evaluation of long sequences).
pub fn simulate_outputs(theta: &NetworkParams, h0: &HiddenState, inputs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    theta.validate()?;
    let spec = theta.spec();
    if h0.0.len() != spec.layer_sizes.len() || !h0.is_in_unit_box() {
        return Err(Error::Precondition("initial state must match the layers and lie in [-1, 1]^n".into()));
    }
    let mut h = h0.0.clone();
    let mut out = Vec::with_capacity(inputs.len());
    for u in inputs {
        if u.len() != spec.n_u {
            return Err(Error::shape("input", spec.n_u, u.len()));
        }
        for l in 0..h.len() {
            let x = if l == 0 { u.clone() } else { h[l - 1].clone() };
            h[l] = match &theta.layers {
                Layers::Mgu(v) => mgu_step(&v[l], &h[l], &x).h_next,
                Layers::Gru(v) => gru_step(&v[l], &h[l], &x).h_next,
            };
        }
        out.push(&theta.w_y * h.last().expect("non-empty") + &theta.b_y);
    }
    Ok(out)
}
