use nalgebra::DVector;
use rayon::prelude::*;

use super::penalty::penalty_subgradient;
use super::{Batch, GradientPack};
use crate::dataio::Sequence;
use crate::error::{Error, Result};
use crate::netcore::{rollout_with_masks, simulate_outputs, HiddenState, NetworkParams, RolloutTrace};

/// Mean over steps `k >= washout` of `‖y_k - ŷ_k‖²`.
pub fn sequence_mse(theta: &NetworkParams, seq: &Sequence, washout: usize, h0: &HiddenState) -> Result<f64> {
    let out = simulate_outputs(theta, h0, &seq.u)?;
    Ok(residual_mse(&out, &seq.y, washout))
}

fn residual_mse(out: &[DVector<f64>], target: &[DVector<f64>], washout: usize) -> f64 {
    let n = out.len() - washout;
    out[washout..]
        .iter()
        .zip(&target[washout..])
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        / n as f64
}

/// Batch MSE: per-sequence step-averaged squared error, averaged over sequences.
pub fn mse_loss(theta: &NetworkParams, batch: &Batch) -> Result<f64> {
    batch.validate(theta)?;
    let h0 = batch.initial_state(theta);
    let per: Vec<f64> = batch
        .sequences
        .par_iter()
        .map(|s| sequence_mse(theta, s, batch.washout, &h0))
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Exact gradient of `MSE + ρ Σ hinge(α_δ - (1 - μ))`.
pub fn grad_augmented(theta: &NetworkParams, batch: &Batch, rho: f64, mu: f64) -> Result<GradientPack> {
    grad_augmented_masked(theta, batch, rho, mu, None)
}

/// [`grad_augmented`] with per-sequence, per-layer input masks (dropout).
///
/// Per-sequence contributions are computed in parallel and reduced in
/// sequence order, so the result does not depend on thread scheduling.
pub fn grad_augmented_masked(
    theta: &NetworkParams,
    batch: &Batch,
    rho: f64,
    mu: f64,
    masks: Option<&[Vec<DVector<f64>>]>,
) -> Result<GradientPack> {
    theta.mgu_layers()?;
    batch.validate(theta)?;
    if let Some(m) = masks {
        if m.len() != batch.len() {
            return Err(Error::shape("dropout masks per sequence", batch.len(), m.len()));
        }
    }
    let h0 = batch.initial_state(theta);
    let scale = 1.0 / batch.len() as f64;
    let parts: Vec<(NetworkParams, f64)> = batch
        .sequences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mask = masks.map(|m| m[i].as_slice());
            let trace = rollout_with_masks(theta, &h0, &s.u, mask)?;
            sequence_backward(theta, &trace, &s.y, batch.washout, scale)
        })
        .collect::<Result<_>>()?;

    let mut grads = theta.zeros_like();
    let mut mse = 0.0;
    for (g, l) in &parts {
        for (acc, part) in grads.slices_mut().into_iter().zip(g.slices()) {
            acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        }
        mse += l;
    }
    mse *= scale;

    let (penalty_value, pg) = penalty_subgradient(theta, rho, mu)?;
    if penalty_value > 0.0 {
        for (acc, part) in grads.slices_mut().into_iter().zip(pg.slices()) {
            acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        }
    }
    Ok(GradientPack {
        grads,
        loss_value: mse + penalty_value,
        mse_value: mse,
        penalty_value,
    })
}

fn check(v: &DVector<f64>, step: usize, layer: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericAt { step, layer })
    }
}

/// Reverse pass over one sequence; returns the gradient of `scale * mse_seq`
/// and the unscaled sequence MSE.
fn sequence_backward(
    theta: &NetworkParams,
    trace: &RolloutTrace,
    target: &[DVector<f64>],
    washout: usize,
    scale: f64,
) -> Result<(NetworkParams, f64)> {
    let layers = theta.mgu_layers()?;
    let n_layers = layers.len();
    let n = trace.len();
    let mut g = theta.zeros_like();
    let loss = residual_mse(&trace.outputs, target, washout);
    let coeff = 2.0 * scale / (n - washout) as f64;

    // gradient w.r.t. h_{k+1}^(l) arriving from the recurrence at step k+1
    let mut carry: Vec<DVector<f64>> = layers.iter().map(|p| DVector::zeros(p.n_hidden())).collect();

    for k in (0..n).rev() {
        let mut from_above: Option<DVector<f64>> = None;
        if k >= washout {
            let dy = (&trace.outputs[k] - &target[k]) * coeff;
            let h_top = &trace.states[n_layers - 1][k + 1];
            g.w_y.ger(1.0, &dy, h_top, 1.0);
            g.b_y += &dy;
            from_above = Some(theta.w_y.tr_mul(&dy));
        }
        let grads = match &mut g.layers {
            crate::netcore::Layers::Mgu(v) => v,
            crate::netcore::Layers::Gru(_) => unreachable!("checked above"),
        };
        for l in (0..n_layers).rev() {
            let p = &layers[l];
            let gl = &mut grads[l];
            let mut dhp = std::mem::replace(&mut carry[l], DVector::zeros(0));
            if let Some(a) = from_above.take() {
                dhp += a;
            }
            let x = &trace.inputs[l][k];
            let h = &trace.states[l][k];
            let f = &trace.forget[l][k];
            let c = &trace.candidate[l][k];

            let mut df = dhp.component_mul(&(c - h));
            let mut dh = dhp.zip_map(f, |d, fj| d * (1.0 - fj));
            let da_c = DVector::from_fn(c.len(), |j, _| dhp[j] * f[j] * (1.0 - c[j] * c[j]));
            let gated = f.component_mul(h);
            gl.w_c.ger(1.0, &da_c, x, 1.0);
            gl.r_c.ger(1.0, &da_c, &gated, 1.0);
            gl.b_c += &da_c;
            let dgated = p.r_c.tr_mul(&da_c);
            df += dgated.component_mul(h);
            dh += dgated.component_mul(f);
            let mut dx = p.w_c.tr_mul(&da_c);

            let da_f = DVector::from_fn(f.len(), |j, _| df[j] * f[j] * (1.0 - f[j]));
            gl.w_f.ger(1.0, &da_f, x, 1.0);
            gl.r_f.ger(1.0, &da_f, h, 1.0);
            gl.b_f += &da_f;
            dh += p.r_f.tr_mul(&da_f);
            dx += p.w_f.tr_mul(&da_f);

            check(&dh, k, l + 1)?;
            check(&dx, k, l + 1)?;
            carry[l] = dh;
            if l > 0 {
                if let Some(m) = &trace.masks {
                    dx.component_mul_assign(&m[l]);
                }
                from_above = Some(dx);
            }
        }
    }
    Ok((g, loss))
}
