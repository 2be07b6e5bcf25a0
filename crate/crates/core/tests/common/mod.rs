#![allow(dead_code)]

use mgu::dataio::Sequence;
use mgu::netcore::{ArchKind, ArchSpec, LayerParams, NetworkParams};
use nalgebra::DVector;
use rand::Rng;

/// MGU network with every entry uniform in `[-scale, scale]`.
pub fn random_mgu(rng: &mut impl Rng, n_u: usize, n_y: usize, sizes: &[usize], scale: f64) -> NetworkParams {
    let mut theta = NetworkParams::zeros(&ArchSpec::new(ArchKind::Mgu, n_u, n_y, sizes.to_vec())).unwrap();
    for s in theta.slices_mut() {
        for x in s.iter_mut() {
            *x = rng.random_range(-scale..=scale);
        }
    }
    theta
}

pub fn random_layer(rng: &mut impl Rng, n_h: usize, n_in: usize, scale: f64) -> LayerParams {
    let mut p = LayerParams::zeros(n_h, n_in);
    for s in p.slices_mut() {
        for x in s.iter_mut() {
            *x = rng.random_range(-scale..=scale);
        }
    }
    p
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..=scale))
}

pub fn random_sequence(rng: &mut impl Rng, len: usize, n_u: usize, n_y: usize) -> Sequence {
    Sequence::new(
        (0..len).map(|_| random_vec(rng, n_u, 1.0)).collect(),
        (0..len).map(|_| random_vec(rng, n_y, 1.0)).collect(),
    )
}

/// `10^U(lo, hi)`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

/// Euclidean projection onto the L1 ball by bisection on the threshold.
pub fn project_l1_bisection(v: &[f64], radius: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.to_vec();
    }
    let excess = |t: f64| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>() - radius;
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
}
