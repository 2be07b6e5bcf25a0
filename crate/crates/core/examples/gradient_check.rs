//! Compares the BPTT gradient of the augmented loss with central finite
//! differences on a small random network.

use mgu::dataio::Sequence;
use mgu::gradients::{finite_diff_gradient, grad_augmented, max_relative_error, smoothness_margin, Batch, REL_ERROR_FLOOR};
use mgu::netcore::{init_standard, ArchKind, ArchSpec};

fn main() -> mgu::Result<()> {
    let theta = init_standard(&ArchSpec::new(ArchKind::Mgu, 2, 1, vec![3]), 11)?;
    let seqs: Vec<Sequence> = (0..2)
        .map(|s| {
            let u: Vec<_> = (0..10).map(|k| nalgebra::dvector![(k + s) as f64 * 0.3, 0.5 - 0.1 * k as f64]).collect();
            let y: Vec<_> = (0..10).map(|k| nalgebra::dvector![(k as f64 * 0.2).cos()]).collect();
            Sequence::new(u, y)
        })
        .collect();
    let batch = Batch::new(&seqs, 2);
    let (rho, mu) = (0.5, 0.01);

    let exact = grad_augmented(&theta, &batch, rho, mu)?;
    let fd = finite_diff_gradient(&theta, &batch, rho, mu, 1e-6)?;
    println!(
        "loss {:.6} = mse {:.6} + penalty {:.6}",
        exact.loss_value, exact.mse_value, exact.penalty_value
    );
    println!("smoothness margin {:.3e}", smoothness_margin(&theta, mu)?);
    println!(
        "max relative error vs finite differences: {:.2e}",
        max_relative_error(&exact.grads, &fd.grads, REL_ERROR_FLOOR)
    );
    Ok(())
}
