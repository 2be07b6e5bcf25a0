use nalgebra::{DMatrix, DVector};

use super::{diss_penalty, mse_loss, Batch, GradientPack};
use crate::error::{Error, Result};
use crate::linalg::stacked_row_abs_sums;
use crate::netcore::NetworkParams;
use crate::stability::layer_stability;

/// Denominator floor of [`max_relative_error`]: entries whose magnitude is
/// below it are compared absolutely against the floor.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

/// Central-difference gradient of `MSE + penalty`, one scalar at a time.
/// Meant as a test oracle: costs two full loss evaluations per parameter.
pub fn finite_diff_gradient(theta: &NetworkParams, batch: &Batch, rho: f64, mu: f64, step: f64) -> Result<GradientPack> {
    if !(step > 0.0) {
        return Err(Error::Precondition("finite-difference step must be positive".into()));
    }
    let objective = |t: &NetworkParams| -> Result<(f64, f64)> { Ok((mse_loss(t, batch)?, diss_penalty(t, rho, mu)?)) };
    let (mse0, pen0) = objective(theta)?;
    let base = theta.to_flat();
    let mut work = theta.clone();
    let mut flat = base.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        flat[i] = base[i] + step;
        work.set_flat(&flat)?;
        let (a, pa) = objective(&work)?;
        flat[i] = base[i] - step;
        work.set_flat(&flat)?;
        let (b, pb) = objective(&work)?;
        flat[i] = base[i];
        out.push(((a + pa) - (b + pb)) / (2.0 * step));
    }
    let mut grads = theta.zeros_like();
    grads.set_flat(&out)?;
    Ok(GradientPack {
        grads,
        loss_value: mse0 + pen0,
        mse_value: mse0,
        penalty_value: pen0,
    })
}

/// `max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)`.
pub fn max_relative_error(a: &NetworkParams, b: &NetworkParams, floor: f64) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

fn row_gap(sums: &[f64]) -> (usize, f64) {
    let mut idx: Vec<usize> = (0..sums.len()).collect();
    idx.sort_by(|&i, &j| sums[j].total_cmp(&sums[i]).then(i.cmp(&j)));
    let gap = if sums.len() > 1 { sums[idx[0]] - sums[idx[1]] } else { f64::INFINITY };
    (idx[0], gap)
}

fn min_nonzero_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values
        .into_iter()
        .filter(|x| **x != 0.0)
        .fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

fn norm_margin(blocks: &[&DMatrix<f64>], bias: Option<&DVector<f64>>) -> f64 {
    let mut sums = stacked_row_abs_sums(blocks);
    if let Some(b) = bias {
        sums.iter_mut().zip(b.iter()).for_each(|(s, x)| *s += x.abs());
    }
    let (row, gap) = row_gap(&sums);
    let mut entries: Vec<f64> = blocks.iter().flat_map(|m| m.row(row).iter().copied().collect::<Vec<_>>()).collect();
    if let Some(b) = bias {
        entries.push(b[row]);
    }
    gap.min(min_nonzero_abs(&entries))
}

/// Distance of `θ` from the kinks of the penalty: the smallest of the
/// top-two row-sum gaps of every infinity norm, the smallest nonzero entry
/// magnitude on each maximizing row, and `|α_δ - (1 - μ)|` per layer.
/// Finite differences agree with the analytic subgradient only when this
/// exceeds the difference step by a comfortable factor.
pub fn smoothness_margin(theta: &NetworkParams, mu: f64) -> Result<f64> {
    let mut m = f64::INFINITY;
    for p in theta.mgu_layers()? {
        m = m
            .min(norm_margin(&[&p.w_f, &p.r_f], Some(&p.b_f)))
            .min(norm_margin(&[&p.w_c, &p.r_c], Some(&p.b_c)))
            .min(norm_margin(&[&p.r_f], None))
            .min(norm_margin(&[&p.r_c], None))
            .min((layer_stability(p).diss_lhs - (1.0 - mu)).abs());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Sequence;
    use crate::gradients::grad_augmented;
    use crate::netcore::{init_standard, ArchKind, ArchSpec};

    #[test]
    fn zero_point_has_zero_gradient() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![2]);
        let theta = NetworkParams::zeros(&spec).unwrap();
        let s = Sequence::new(vec![DVector::zeros(1); 5], vec![DVector::zeros(1); 5]);
        let b = Batch::new([&s], 0);
        let fd = finite_diff_gradient(&theta, &b, 0.0, 0.01, 1e-6).unwrap();
        assert!(fd.max_abs() == 0.0);
        let an = grad_augmented(&theta, &b, 0.0, 0.01).unwrap();
        assert!(an.max_abs() == 0.0);
    }

    #[test]
    fn analytic_matches_finite_difference_on_small_net() {
        let spec = ArchSpec::new(ArchKind::Mgu, 2, 1, vec![3]);
        let theta = init_standard(&spec, 21).unwrap();
        let u: Vec<_> = (0..10).map(|k| DVector::from_vec(vec![(k as f64).sin(), (0.3 * k as f64).cos()])).collect();
        let y: Vec<_> = (0..10).map(|k| DVector::from_element(1, 0.1 * k as f64 - 0.4)).collect();
        let s = Sequence::new(u, y);
        let b = Batch::new([&s], 2);
        let an = grad_augmented(&theta, &b, 0.0, 0.01).unwrap();
        let fd = finite_diff_gradient(&theta, &b, 0.0, 0.01, 1e-6).unwrap();
        let err = max_relative_error(&an.grads, &fd.grads, REL_ERROR_FLOOR);
        assert!(err <= 1e-5, "relative error {err}");
    }

    #[test]
    fn penalty_subgradient_matches_at_smooth_point() {
        let spec = ArchSpec::new(ArchKind::Mgu, 2, 1, vec![3]);
        let theta = init_standard(&spec, 4).unwrap();
        assert!(smoothness_margin(&theta, 0.01).unwrap() > 1e-4);
        let s = Sequence::new(vec![DVector::zeros(2); 3], vec![DVector::zeros(1); 3]);
        let b = Batch::new([&s], 0);
        let an = grad_augmented(&theta, &b, 1.0, 0.01).unwrap();
        assert!(an.penalty_value > 0.0);
        let fd = finite_diff_gradient(&theta, &b, 1.0, 0.01, 1e-6).unwrap();
        let err = max_relative_error(&an.grads, &fd.grads, REL_ERROR_FLOOR);
        assert!(err <= 1e-5, "relative error {err}");
    }
}
