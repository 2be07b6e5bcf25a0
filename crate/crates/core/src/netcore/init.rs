use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::params::{ArchSpec, Layers, NetworkParams};
use crate::error::Result;

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Orthogonal `n x n` matrix: the Q factor of a standard-normal draw, with
/// column signs flipped so that R has a positive diagonal.
fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Standard initialization: Glorot-uniform input and readout weights,
/// orthogonal recurrent weights, forget/update-gate bias at one, other biases zero.
pub fn init_standard(spec: &ArchSpec, seed: u64) -> Result<NetworkParams> {
    let mut theta = NetworkParams::zeros(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &mut theta.layers {
        Layers::Mgu(v) => {
            for p in v.iter_mut() {
                let (n, m) = (p.n_hidden(), p.n_input());
                p.w_f = glorot(&mut rng, n, m);
                p.r_f = orthogonal(&mut rng, n);
                p.b_f.fill(1.0);
                p.w_c = glorot(&mut rng, n, m);
                p.r_c = orthogonal(&mut rng, n);
            }
        }
        Layers::Gru(v) => {
            for p in v.iter_mut() {
                let (n, m) = (p.n_hidden(), p.n_input());
                p.w_z = glorot(&mut rng, n, m);
                p.r_z = orthogonal(&mut rng, n);
                p.b_z.fill(1.0);
                p.w_r = glorot(&mut rng, n, m);
                p.r_r = orthogonal(&mut rng, n);
                p.w_c = glorot(&mut rng, n, m);
                p.r_c = orthogonal(&mut rng, n);
            }
        }
    }
    theta.w_y = glorot(&mut rng, spec.n_y, *spec.layer_sizes.last().expect("validated"));
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::params::ArchKind;

    #[test]
    fn forget_bias_is_one_and_recurrent_orthogonal() {
        for seed in [0, 1, 99] {
            let spec = ArchSpec::new(ArchKind::Mgu, 2, 1, vec![7, 4]);
            let theta = init_standard(&spec, seed).unwrap();
            for p in theta.mgu_layers().unwrap() {
                assert!(p.b_f.iter().all(|&b| b == 1.0));
                assert!(p.b_c.iter().all(|&b| b == 0.0));
                for r in [&p.r_f, &p.r_c] {
                    let n = r.nrows();
                    let err = (r.transpose() * r - DMatrix::<f64>::identity(n, n)).abs().max();
                    assert!(err < 1e-10, "orthogonality error {err}");
                }
            }
            assert!(theta.b_y.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ArchSpec::new(ArchKind::Gru, 1, 1, vec![5]);
        let a = init_standard(&spec, 7).unwrap();
        let b = init_standard(&spec, 7).unwrap();
        let c = init_standard(&spec, 8).unwrap();
        assert_eq!(a.to_flat(), b.to_flat());
        assert_ne!(a.to_flat(), c.to_flat());
    }

    #[test]
    fn glorot_bound_respected() {
        let spec = ArchSpec::new(ArchKind::Mgu, 3, 2, vec![6]);
        let theta = init_standard(&spec, 3).unwrap();
        let p = &theta.mgu_layers().unwrap()[0];
        let bound = (6.0f64 / 9.0).sqrt();
        assert!(p.w_f.iter().chain(p.w_c.iter()).all(|x| x.abs() <= bound));
        let by = (6.0f64 / 8.0).sqrt();
        assert!(theta.w_y.iter().all(|x| x.abs() <= by));
    }
}
