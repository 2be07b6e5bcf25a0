//! Simulates a randomly initialized two-layer MGU from rest and shows that the
//! hidden state stays inside the unit box even under huge inputs.

use mgu::netcore::{init_standard, network_rollout, ArchKind, ArchSpec, HiddenState};
use nalgebra::dvector;

fn main() -> mgu::Result<()> {
    let spec = ArchSpec::new(ArchKind::Mgu, 2, 1, vec![6, 4]);
    let theta = init_standard(&spec, 7)?;
    let inputs: Vec<_> = (0..200)
        .map(|k| {
            let t = k as f64 * 0.05;
            dvector![t.sin(), if k < 100 { 0.5 } else { 500.0 }]
        })
        .collect();

    let trace = network_rollout(&theta, &HiddenState::zeros(&spec), &inputs)?;
    for k in [0, 1, 10, 99, 100, 101, 199] {
        println!("k={k:>3}  y={:+.5}", trace.outputs[k][0]);
    }
    let worst = trace.states.iter().flatten().map(|h| h.abs().max()).fold(0.0, f64::max);
    println!("max |h| over the run: {worst:.6} (never above 1)");
    Ok(())
}
