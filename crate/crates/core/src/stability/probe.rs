use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network_stability;
use crate::error::{Error, Result};
use crate::netcore::{mgu_step, NetworkParams};

/// Location of the largest observed `distance - bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeWorstCase {
    pub trial: usize,
    pub step: usize,
    pub layer: usize,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeResult {
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
    pub checks: usize,
    /// Maximum of `observed - bound`; `<= 0` means the bound held everywhere.
    pub max_violation: f64,
    pub worst_case: ProbeWorstCase,
}

/// Falsification run for the incremental bound
/// `η_k <= A^k η_0 + (I - A)^{-1} B max_{j<k} ‖u^a_j - u^b_j‖∞` (componentwise
/// over layers, `η^(l)_k = ‖h^(l),a_k - h^(l),b_k‖∞`).
///
/// Each trial draws two initial states in `[-1, 1]^n` and two input sequences
/// in `[-1, 1]^{n_u}`; odd trials use independent inputs, even trials a small
/// perturbation of the same input.
pub fn empirical_diss_probe(theta: &NetworkParams, trials: usize, horizon: usize, seed: u64) -> Result<ProbeResult> {
    let cert = network_stability(theta)?;
    if !cert.diss_ok {
        return Err(Error::Precondition("probe requires a network satisfying the δISS condition".into()));
    }
    let layers = theta.mgu_layers()?;
    let sizes = theta.layer_sizes();
    let n_layers = sizes.len();
    let a = &cert.a_delta;
    let n_l = DMatrix::identity(n_layers, n_layers) - a;
    let gain_vec = n_l
        .solve_lower_triangular(&cert.b_delta_u)
        .ok_or_else(|| Error::Precondition("cascade matrix is singular".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng, n: usize| DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let mut worst = ProbeWorstCase {
        trial: 0,
        step: 0,
        layer: 0,
        observed: 0.0,
        bound: 0.0,
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut checks = 0;

    for trial in 0..trials {
        let mut ha: Vec<DVector<f64>> = sizes.iter().map(|&n| unit(&mut rng, n)).collect();
        let mut hb: Vec<DVector<f64>> = if trial % 3 == 2 {
            // identical start, differences come from the inputs only
            ha.clone()
        } else {
            sizes.iter().map(|&n| unit(&mut rng, n)).collect()
        };
        let eta = |ha: &[DVector<f64>], hb: &[DVector<f64>]| {
            DVector::from_fn(n_layers, |l, _| (&ha[l] - &hb[l]).amax())
        };
        let mut decay = eta(&ha, &hb);
        let mut max_du: f64 = 0.0;
        for step in 0..=horizon {
            let observed = eta(&ha, &hb);
            let bound = &decay + &gain_vec * max_du;
            for l in 0..n_layers {
                let v = observed[l] - bound[l];
                checks += 1;
                if v > max_violation {
                    max_violation = v;
                    worst = ProbeWorstCase {
                        trial,
                        step,
                        layer: l,
                        observed: observed[l],
                        bound: bound[l],
                    };
                }
            }
            if step == horizon {
                break;
            }
            let ua = unit(&mut rng, theta.n_u);
            let ub = if trial % 2 == 0 {
                let scale = 0.1;
                DVector::from_fn(theta.n_u, |i, _| (ua[i] + scale * rng.random_range(-1.0..=1.0)).clamp(-1.0, 1.0))
            } else {
                unit(&mut rng, theta.n_u)
            };
            max_du = max_du.max((&ua - &ub).amax());
            for l in 0..n_layers {
                let (xa, xb) = if l == 0 { (ua.clone(), ub.clone()) } else { (ha[l - 1].clone(), hb[l - 1].clone()) };
                ha[l] = mgu_step(&layers[l], &ha[l], &xa).h_next;
                hb[l] = mgu_step(&layers[l], &hb[l], &xb).h_next;
            }
            decay = a * decay;
        }
    }
    if trials == 0 {
        max_violation = 0.0;
    }
    Ok(ProbeResult {
        trials,
        horizon,
        seed,
        checks,
        max_violation,
        worst_case: worst,
    })
}
