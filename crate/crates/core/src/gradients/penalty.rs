use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{argmax_first, sign0, stacked_row_abs_sums};
use crate::netcore::{LayerParams, Layers, NetworkParams};
use crate::stability::layer_stability;

/// `ρ Σ_l max(α_δ^(l) - (1 - μ), 0)`.
pub fn diss_penalty(theta: &NetworkParams, rho: f64, mu: f64) -> Result<f64> {
    check_margins(rho, mu)?;
    Ok(rho
        * theta
            .mgu_layers()?
            .iter()
            .map(|p| (layer_stability(p).diss_lhs - (1.0 - mu)).max(0.0))
            .sum::<f64>())
}

fn check_margins(rho: f64, mu: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Precondition(format!("rho must be a finite nonnegative number, got {rho}")));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Precondition(format!("mu must lie in (0, 1), got {mu}")));
    }
    Ok(())
}

/// Smallest-index maximizing row of `[blocks | bias]` by absolute row sum.
pub(crate) fn argmax_row(blocks: &[&DMatrix<f64>], bias: Option<&DVector<f64>>) -> usize {
    let mut sums = stacked_row_abs_sums(blocks);
    if let Some(b) = bias {
        sums.iter_mut().zip(b.iter()).for_each(|(s, x)| *s += x.abs());
    }
    argmax_first(&sums).map_or(0, |(i, _)| i)
}

fn add_row_sign(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, row: usize, w: f64) {
    for j in 0..src.ncols() {
        dst[(row, j)] += w * sign0(src[(row, j)]);
    }
}

/// Partial derivatives of `α_δ` w.r.t. `(σ̄_f, φ̄, ‖R_f‖, ‖R_c‖)`.
pub(crate) fn alpha_partials(s: f64, p: f64, rf: f64, rc: f64) -> [f64; 4] {
    [
        1.0 + 2.0 * s * rc + 0.25 * rf * rc,
        0.25 * rf,
        0.25 * (s * rc + p + 1.0),
        s * s + 0.25 * rf * s,
    ]
}

/// Subgradient of `α_δ` for one layer, accumulated into `g` with weight `w`.
pub(crate) fn add_alpha_subgradient(p: &LayerParams, g: &mut LayerParams, w: f64) {
    let st = layer_stability(p);
    let (s, ph) = (st.sigma_bar_f, st.phi_bar);
    let [d_s, d_p, d_rf, d_rc] = alpha_partials(s, ph, st.norm_r_f, st.norm_r_c);

    let i_f = argmax_row(&[&p.w_f, &p.r_f], Some(&p.b_f));
    let wf = w * d_s * s * (1.0 - s);
    add_row_sign(&mut g.w_f, &p.w_f, i_f, wf);
    add_row_sign(&mut g.r_f, &p.r_f, i_f, wf);
    g.b_f[i_f] += wf * sign0(p.b_f[i_f]);

    let i_c = argmax_row(&[&p.w_c, &p.r_c], Some(&p.b_c));
    let wc = w * d_p * (1.0 - ph * ph);
    add_row_sign(&mut g.w_c, &p.w_c, i_c, wc);
    add_row_sign(&mut g.r_c, &p.r_c, i_c, wc);
    g.b_c[i_c] += wc * sign0(p.b_c[i_c]);

    let j_rf = argmax_row(&[&p.r_f], None);
    add_row_sign(&mut g.r_f, &p.r_f, j_rf, w * d_rf);
    let j_rc = argmax_row(&[&p.r_c], None);
    add_row_sign(&mut g.r_c, &p.r_c, j_rc, w * d_rc);
}

/// Penalty value and its subgradient (zero for layers on or inside the margin).
pub fn penalty_subgradient(theta: &NetworkParams, rho: f64, mu: f64) -> Result<(f64, NetworkParams)> {
    check_margins(rho, mu)?;
    let layers = theta.mgu_layers()?;
    let mut g = theta.zeros_like();
    let mut value = 0.0;
    if let Layers::Mgu(gl) = &mut g.layers {
        for (p, gp) in layers.iter().zip(gl.iter_mut()) {
            let excess = layer_stability(p).diss_lhs - (1.0 - mu);
            if excess > 0.0 {
                value += rho * excess;
                if rho > 0.0 {
                    add_alpha_subgradient(p, gp, rho);
                }
            }
        }
    }
    Ok((value, g))
}
