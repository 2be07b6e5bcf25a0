use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::alpha_partials;
use crate::netcore::{LayerParams, NetworkParams};
use crate::stability::layer_stability;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarmStartOptions {
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Initial width of the near-maximal row set used for the norm directions.
    pub active_width: f64,
}

impl Default for WarmStartOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            armijo_c: 1e-4,
            active_width: 1e-2,
        }
    }
}

/// Rows whose sum lies within `width` of the maximum, weighted so that every
/// selected row shrinks at the same rate along the direction.
fn active_rows(blocks: &[&DMatrix<f64>], bias: Option<&DVector<f64>>, width: f64) -> Vec<(usize, f64)> {
    let rows = blocks[0].nrows();
    let mut sums = vec![0.0; rows];
    let mut nnz = vec![0usize; rows];
    for i in 0..rows {
        for b in blocks {
            for x in b.row(i).iter() {
                sums[i] += x.abs();
                nnz[i] += usize::from(*x != 0.0);
            }
        }
        if let Some(b) = bias {
            sums[i] += b[i].abs();
            nnz[i] += usize::from(b[i] != 0.0);
        }
    }
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let picked: Vec<usize> = (0..rows).filter(|&i| sums[i] >= max - width && nnz[i] > 0).collect();
    let total: f64 = picked.iter().map(|&i| 1.0 / nnz[i] as f64).sum();
    picked.into_iter().map(|i| (i, 1.0 / nnz[i] as f64 / total)).collect()
}

fn push_rows(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, rows: &[(usize, f64)], scale: f64) {
    for &(i, w) in rows {
        for j in 0..src.ncols() {
            let x = src[(i, j)];
            if x != 0.0 {
                dst[(i, j)] += scale * w * x.signum();
            }
        }
    }
}

fn push_bias(dst: &mut DVector<f64>, src: &DVector<f64>, rows: &[(usize, f64)], scale: f64) {
    for &(i, w) in rows {
        if src[i] != 0.0 {
            dst[i] += scale * w * src[i].signum();
        }
    }
}

/// Ascent direction of `α_δ` built from near-maximal rows of every norm.
fn alpha_direction(p: &LayerParams, width: f64) -> LayerParams {
    let st = layer_stability(p);
    let (s, ph) = (st.sigma_bar_f, st.phi_bar);
    let [d_s, d_p, d_rf, d_rc] = alpha_partials(s, ph, st.norm_r_f, st.norm_r_c);
    let mut g = LayerParams::zeros(p.n_hidden(), p.n_input());

    let rows = active_rows(&[&p.w_f, &p.r_f], Some(&p.b_f), width);
    let k = d_s * s * (1.0 - s);
    push_rows(&mut g.w_f, &p.w_f, &rows, k);
    push_rows(&mut g.r_f, &p.r_f, &rows, k);
    push_bias(&mut g.b_f, &p.b_f, &rows, k);

    let rows = active_rows(&[&p.w_c, &p.r_c], Some(&p.b_c), width);
    let k = d_p * (1.0 - ph * ph);
    push_rows(&mut g.w_c, &p.w_c, &rows, k);
    push_rows(&mut g.r_c, &p.r_c, &rows, k);
    push_bias(&mut g.b_c, &p.b_c, &rows, k);

    let rows = active_rows(&[&p.r_f], None, width);
    push_rows(&mut g.r_f, &p.r_f, &rows, d_rf);
    let rows = active_rows(&[&p.r_c], None, width);
    push_rows(&mut g.r_c, &p.r_c, &rows, d_rc);
    g
}

const TARGET_MARGIN: f64 = 1e-9;

fn objective(p: &LayerParams, threshold: f64) -> f64 {
    (layer_stability(p).diss_lhs - threshold).max(0.0).powi(2)
}

/// `p - t d`, with every entry stopped at zero instead of crossing it. The
/// direction only ever shrinks magnitudes, so clipping keeps the path monotone
/// in every norm and makes arbitrarily long steps safe.
fn shrink(p: &LayerParams, t: f64, d: &LayerParams) -> LayerParams {
    let mut out = p.clone();
    for (o, x) in out.slices_mut().into_iter().zip(d.slices()) {
        o.iter_mut().zip(x).for_each(|(a, b)| {
            let next = *a - t * b;
            *a = if next * *a > 0.0 { next } else { 0.0 };
        });
    }
    out
}

fn dist2(a: &LayerParams, b: &LayerParams) -> f64 {
    a.slices()
        .iter()
        .zip(b.slices())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)))
        .sum()
}

/// Minimizes `max(α_δ - (1 - μ), 0)²` for one layer. Returns the layer and
/// the number of accepted steps, or the residual hinge on failure.
pub fn warm_start_layer(p0: &LayerParams, mu: f64, opts: &WarmStartOptions) -> std::result::Result<(LayerParams, usize), f64> {
    let threshold = 1.0 - mu;
    // Descend toward a slightly tighter target so the last steps are not lost
    // in roundoff once the hinge is near machine precision.
    let target = threshold - TARGET_MARGIN;
    let mut p = p0.clone();
    let mut j = objective(&p, target);
    let mut t = 1.0;
    let mut width = opts.active_width;
    let mut iters = 0;
    while objective(&p, threshold) > 0.0 {
        if iters >= opts.max_iters {
            return Err(objective(&p, threshold).sqrt());
        }
        let hinge = j.sqrt();
        let mut d = alpha_direction(&p, width);
        for s in d.slices_mut() {
            s.iter_mut().for_each(|x| *x *= 2.0 * hinge);
        }
        let dnorm2: f64 = d.slices().iter().flat_map(|s| s.iter()).map(|x| x * x).sum();
        if dnorm2 == 0.0 {
            return Err(objective(&p, threshold).sqrt());
        }
        let mut accepted = None;
        let mut trial = t;
        for _ in 0..80 {
            let cand = shrink(&p, trial, &d);
            let jc = objective(&cand, target);
            if jc <= j - opts.armijo_c * dist2(&p, &cand) / trial {
                accepted = Some((cand, jc));
                break;
            }
            trial *= 0.5;
        }
        if let Some((_, 0.0)) = accepted {
            // Feasible already: α_δ is monotone along the path, so pull the
            // step back to the boundary instead of overshooting into the interior.
            let (mut lo, mut hi) = (0.0, trial);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if objective(&shrink(&p, mid, &d), target) == 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok((shrink(&p, hi, &d), iters + 1));
        }
        match accepted {
            Some((cand, jc)) => {
                p = cand;
                j = jc;
                t = trial * 2.0;
                iters += 1;
            }
            None if width > 1e-12 => width *= 0.1,
            None => return Err(objective(&p, threshold).sqrt()),
        }
    }
    Ok((p, iters))
}

/// Moves every recurrent layer into the region `α_δ <= 1 - μ`, leaving
/// compliant layers and the readout untouched.
pub fn warm_start(theta0: &NetworkParams, mu: f64, opts: &WarmStartOptions) -> Result<NetworkParams> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Precondition(format!("mu must lie in (0, 1), got {mu}")));
    }
    let mut theta = theta0.clone();
    let mut residuals = Vec::new();
    let mut failed = false;
    for layer in theta.mgu_layers_mut()? {
        match warm_start_layer(layer, mu, opts) {
            Ok((p, _)) => {
                *layer = p;
                residuals.push(0.0);
            }
            Err(r) => {
                failed = true;
                residuals.push(r);
            }
        }
    }
    if failed {
        return Err(Error::WarmStartFailed { residuals });
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{init_standard, ArchKind, ArchSpec};

    #[test]
    fn compliant_layers_unchanged() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![3, 3]);
        let theta = NetworkParams::zeros(&spec).unwrap();
        let out = warm_start(&theta, 0.01, &WarmStartOptions::default()).unwrap();
        let bits = |t: &NetworkParams| t.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&out), bits(&theta));
        // boundary case: α = 0.5 = 1 - μ
        let out = warm_start(&theta, 0.5, &WarmStartOptions::default()).unwrap();
        assert_eq!(bits(&out), bits(&theta));
    }

    #[test]
    fn standard_init_reaches_compliance() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![7]);
        let theta = init_standard(&spec, 0).unwrap();
        assert!(layer_stability(&theta.mgu_layers().unwrap()[0]).diss_lhs > 0.99);
        let out = warm_start(&theta, 0.01, &WarmStartOptions::default()).unwrap();
        for p in out.mgu_layers().unwrap() {
            assert!(layer_stability(p).diss_lhs <= 0.99);
        }
        assert_eq!(out.w_y, theta.w_y);
        assert_eq!(out.b_y, theta.b_y);
    }

    #[test]
    fn failure_reports_residuals() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![5]);
        let theta = init_standard(&spec, 1).unwrap();
        let opts = WarmStartOptions {
            max_iters: 1,
            ..WarmStartOptions::default()
        };
        match warm_start(&theta, 0.01, &opts) {
            Err(Error::WarmStartFailed { residuals }) => assert!(residuals[0] > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
