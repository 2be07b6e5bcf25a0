use crate::error::{Error, Result};
use crate::netcore::NetworkParams;

/// Threshold `τ` projecting the nonnegative vector `y` onto the simplex
/// `{x >= 0, Σx = a}` via `x = max(y - τ, 0)` (Condat's linear-time scheme).
fn simplex_threshold(y: &[f64], a: f64) -> f64 {
    let mut v = vec![y[0]];
    let mut v_tilde: Vec<f64> = Vec::new();
    let mut rho = y[0] - a;
    for &yn in &y[1..] {
        if yn > rho {
            rho += (yn - rho) / (v.len() as f64 + 1.0);
            if rho > yn - a {
                v.push(yn);
            } else {
                v_tilde.append(&mut v);
                v.push(yn);
                rho = yn - a;
            }
        }
    }
    for &yn in &v_tilde {
        if yn > rho {
            v.push(yn);
            rho += (yn - rho) / v.len() as f64;
        }
    }
    loop {
        let before = v.len();
        let mut i = 0;
        while i < v.len() {
            let yn = v[i];
            if yn <= rho {
                v.swap_remove(i);
                rho += (rho - yn) / v.len() as f64;
            } else {
                i += 1;
            }
        }
        if v.len() == before {
            break;
        }
    }
    rho
}

/// Euclidean projection of `v` onto the L1 ball of the given radius.
/// Feasible inputs are returned unchanged; otherwise soft-thresholding with
/// the unique `τ > 0` that lands on the sphere, signs preserved. The result
/// satisfies `Σ|x_i| <= radius` exactly in floating point.
pub fn project_row_l1(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "L1 radius must be positive");
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mag: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mut tau = simplex_threshold(&mag, radius).max(0.0);
    let shrink = |tau: f64| -> Vec<f64> { v.iter().map(|&x| x.signum() * (x.abs() - tau).max(0.0)).collect() };
    let mut out = shrink(tau);
    // rounding can leave the sum a few ulps above the radius
    loop {
        let s: f64 = out.iter().map(|x| x.abs()).sum();
        if s <= radius {
            return out;
        }
        let active = out.iter().filter(|x| **x != 0.0).count().max(1) as f64;
        tau = (tau + (s - radius) / active).max(tau.next_up());
        out = shrink(tau);
    }
}

/// Projects every row of every candidate recurrent matrix `R_c` onto the L1
/// ball of radius `1 - epsilon`, so `‖R_c‖∞ <= 1 - epsilon`; nothing else changes.
pub fn project_params(theta: &NetworkParams, epsilon: f64) -> Result<NetworkParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mut out = theta.clone();
    project_in_place(&mut out, epsilon)?;
    Ok(out)
}

pub(crate) fn project_in_place(theta: &mut NetworkParams, epsilon: f64) -> Result<()> {
    let radius = 1.0 - epsilon;
    for layer in theta.mgu_layers_mut()? {
        for i in 0..layer.r_c.nrows() {
            let row: Vec<f64> = layer.r_c.row(i).iter().copied().collect();
            let l1: f64 = row.iter().map(|x| x.abs()).sum();
            if l1 > radius {
                let p = project_row_l1(&row, radius);
                for (j, x) in p.into_iter().enumerate() {
                    layer.r_c[(i, j)] = x;
                }
            }
        }
    }
    Ok(())
}
