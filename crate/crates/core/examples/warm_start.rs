//! Moves a standard-initialized (and δISS-violating) network into the region
//! `alpha_delta <= 1 - mu` before any training.

use mgu::netcore::{init_standard, ArchKind, ArchSpec};
use mgu::optimize::{warm_start, WarmStartOptions};
use mgu::stability::network_stability;

fn main() -> mgu::Result<()> {
    let mu = 0.01;
    for n_h in [5, 7, 9] {
        let theta0 = init_standard(&ArchSpec::new(ArchKind::Mgu, 1, 1, vec![n_h, n_h]), n_h as u64)?;
        let before: Vec<f64> = network_stability(&theta0)?.layers.iter().map(|l| l.diss_lhs).collect();
        let theta = warm_start(&theta0, mu, &WarmStartOptions::default())?;
        let after = network_stability(&theta)?;
        let moved = theta0.to_flat().iter().zip(theta.to_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "n_h {n_h}: alpha_delta {before:.4?} -> {:.4?}, diss_ok {}, max change {moved:.3}",
            after.layers.iter().map(|l| l.diss_lhs).collect::<Vec<_>>(),
            after.diss_ok
        );
    }
    Ok(())
}
