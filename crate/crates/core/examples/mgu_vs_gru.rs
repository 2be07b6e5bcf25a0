//! Parameter counts and single-thread inference time of MGU and GRU cells of
//! equal width.

use std::time::Instant;

use mgu::netcore::{init_standard, param_count, simulate_outputs, ArchKind, ArchSpec, HiddenState};
use nalgebra::dvector;

fn ns_per_step(kind: ArchKind, n_h: usize, steps: usize) -> mgu::Result<f64> {
    let spec = ArchSpec::new(kind, 1, 1, vec![n_h]);
    let theta = init_standard(&spec, 0)?;
    let inputs: Vec<_> = (0..steps).map(|k| dvector![(k as f64 * 0.1).sin()]).collect();
    let h0 = HiddenState::zeros(&spec);
    for _ in 0..10 {
        simulate_outputs(&theta, &h0, &inputs)?;
    }
    let mut times: Vec<f64> = (0..51)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(simulate_outputs(&theta, &h0, &inputs).unwrap());
            t.elapsed().as_nanos() as f64 / steps as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

fn main() -> mgu::Result<()> {
    println!("n_h  mgu params  gru params  mgu ns/step  gru ns/step");
    for n_h in [5, 7, 9, 11, 13, 15] {
        let count = |k| param_count(&ArchSpec::new(k, 1, 1, vec![n_h]));
        println!(
            "{n_h:>3}  {:>10}  {:>10}  {:>11.1}  {:>11.1}",
            count(ArchKind::Mgu)?,
            count(ArchKind::Gru)?,
            ns_per_step(ArchKind::Mgu, n_h, 200)?,
            ns_per_step(ArchKind::Gru, n_h, 200)?
        );
    }
    Ok(())
}
