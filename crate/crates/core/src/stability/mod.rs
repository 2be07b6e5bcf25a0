//! Parametric ISS / δISS certificates for MGU networks.
//!
//! For one layer with `σ̄_f = σ(‖[W_f R_f b_f]‖∞)` and `φ̄ = tanh(‖[W_c R_c b_c]‖∞)`:
//!
//! * ISS holds when `σ̄_f ‖R_c‖∞ < 1`;
//! * δISS holds when
//!   `α_δ = σ̄_f + σ̄_f² ‖R_c‖ + ¼ ‖R_f‖ (σ̄_f ‖R_c‖ + φ̄ + 1) < 1`,
//!   with input gain `β_δu = σ̄_f ‖W_c‖ + ¼ ‖W_f‖ (σ̄_f ‖R_c‖ + φ̄ + 1)`.
//!
//! The contraction rate `λ = 1 - (1 - σ̄_f)(1 - σ̄_f ‖R_c‖)` follows from the
//! lower bound `f ≥ 1 - σ̄_f` on the forget gate; it is a derived constant, not
//! a closed form taken from the stability proof, and reports flag it as such.

mod probe;
mod report;

pub use probe::{empirical_diss_probe, ProbeResult, ProbeWorstCase};
pub use report::{StabilityReport, STABILITY_REPORT_SCHEMA};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{inf_norm, sigmoid, stacked_inf_norm};
use crate::netcore::{LayerParams, NetworkParams};

/// Left-hand side of a strict `< 1` condition and its verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub lhs: f64,
    pub ok: bool,
}

impl Condition {
    fn strict(lhs: f64) -> Self {
        Self { lhs, ok: lhs < 1.0 }
    }
}

/// Incremental / ISS gains of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerGains {
    pub lambda: f64,
    pub beta_u: f64,
    pub beta_b: f64,
    pub alpha_delta: f64,
    pub beta_delta_u: f64,
    /// False when the ISS condition fails; `lambda` is then clipped to 1.
    pub contractive: bool,
}

/// All per-layer certificate quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerStability {
    pub sigma_bar_f: f64,
    pub phi_bar: f64,
    pub norm_w_f: f64,
    pub norm_r_f: f64,
    pub norm_w_c: f64,
    pub norm_r_c: f64,
    pub iss_lhs: f64,
    pub diss_lhs: f64,
    pub lambda: f64,
    pub beta_u: f64,
    pub beta_b: f64,
    pub beta_delta_u: f64,
    pub contractive: bool,
    pub iss_ok: bool,
    pub diss_ok: bool,
}

/// Network-level certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStability {
    pub layers: Vec<LayerStability>,
    /// Lower-triangular nonnegative cascade matrix.
    pub a_delta: DMatrix<f64>,
    pub b_delta_u: DVector<f64>,
    pub schur_stable: bool,
    /// `‖(I - A_δ)^{-1} B_δu‖∞`, or `+∞` when `A_δ` is not Schur stable.
    pub network_gain: f64,
    pub iss_ok: bool,
    pub diss_ok: bool,
}

/// `σ̄_f = σ(‖[W_f R_f b_f]‖∞)`.
pub fn forget_gate_bound(layer: &LayerParams) -> f64 {
    sigmoid(stacked_inf_norm(&[&layer.w_f, &layer.r_f], &layer.b_f))
}

/// `φ̄ = tanh(‖[W_c R_c b_c]‖∞)`.
pub fn candidate_bound(layer: &LayerParams) -> f64 {
    stacked_inf_norm(&[&layer.w_c, &layer.r_c], &layer.b_c).tanh()
}

pub fn iss_condition(layer: &LayerParams) -> Condition {
    Condition::strict(forget_gate_bound(layer) * inf_norm(&layer.r_c))
}

pub fn diss_condition(layer: &LayerParams) -> Condition {
    Condition::strict(layer_stability(layer).diss_lhs)
}

pub fn layer_gains(layer: &LayerParams) -> LayerGains {
    let s = layer_stability(layer);
    LayerGains {
        lambda: s.lambda,
        beta_u: s.beta_u,
        beta_b: s.beta_b,
        alpha_delta: s.diss_lhs,
        beta_delta_u: s.beta_delta_u,
        contractive: s.contractive,
    }
}

/// Closed-form δISS quantities from the four weight norms and the two bounds.
pub(crate) fn alpha_beta(s: f64, p: f64, rf: f64, rc: f64, wf: f64, wc: f64) -> (f64, f64) {
    let common = s * rc + p + 1.0;
    let alpha = s + s * s * rc + 0.25 * rf * common;
    let beta = s * wc + 0.25 * wf * common;
    (alpha, beta)
}

pub fn layer_stability(layer: &LayerParams) -> LayerStability {
    let s = forget_gate_bound(layer);
    let p = candidate_bound(layer);
    let (wf, rf, wc, rc) = (
        inf_norm(&layer.w_f),
        inf_norm(&layer.r_f),
        inf_norm(&layer.w_c),
        inf_norm(&layer.r_c),
    );
    let iss = Condition::strict(s * rc);
    let (alpha, beta) = alpha_beta(s, p, rf, rc, wf, wc);
    let lambda = if iss.ok { 1.0 - (1.0 - s) * (1.0 - s * rc) } else { 1.0 };
    LayerStability {
        sigma_bar_f: s,
        phi_bar: p,
        norm_w_f: wf,
        norm_r_f: rf,
        norm_w_c: wc,
        norm_r_c: rc,
        iss_lhs: iss.lhs,
        diss_lhs: alpha,
        lambda,
        beta_u: s * wc,
        beta_b: s,
        beta_delta_u: beta,
        contractive: iss.ok,
        iss_ok: iss.ok,
        diss_ok: alpha < 1.0,
    }
}

/// Cascade matrices: `A[l][l] = α_l`, `A[l][j] = α_j ∏_{i=j+1..=l} β_i` for `j < l`,
/// `B[l] = ∏_{i=0..=l} β_i`.
pub(crate) fn cascade(alpha: &[f64], beta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = alpha.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for l in 0..n {
        a[(l, l)] = alpha[l];
        for j in 0..l {
            a[(l, j)] = alpha[j] * beta[j + 1..=l].iter().product::<f64>();
        }
        b[l] = beta[..=l].iter().product();
    }
    (a, b)
}

/// Network certificate; GRU networks yield an unsupported-architecture error.
pub fn network_stability(theta: &NetworkParams) -> Result<NetworkStability> {
    let layers: Vec<LayerStability> = theta.mgu_layers()?.iter().map(layer_stability).collect();
    let alpha: Vec<f64> = layers.iter().map(|l| l.diss_lhs).collect();
    let beta: Vec<f64> = layers.iter().map(|l| l.beta_delta_u).collect();
    let (a_delta, b_delta_u) = cascade(&alpha, &beta);
    let schur_stable = alpha.iter().all(|&a| a < 1.0);
    let network_gain = if schur_stable {
        let n = alpha.len();
        let m = DMatrix::identity(n, n) - &a_delta;
        match m.solve_lower_triangular(&b_delta_u) {
            Some(x) => x.amax(),
            None => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };
    Ok(NetworkStability {
        iss_ok: layers.iter().all(|l| l.iss_ok),
        diss_ok: layers.iter().all(|l| l.diss_ok),
        layers,
        a_delta,
        b_delta_u,
        schur_stable,
        network_gain,
    })
}
