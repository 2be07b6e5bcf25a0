//! Evaluates the ISS and δISS conditions of a few hand-built layers and the
//! network-level certificate of a small cascade, then checks the incremental
//! bound empirically.

use mgu::netcore::{ArchKind, ArchSpec, LayerParams, Layers, NetworkParams};
use mgu::stability::{diss_condition, empirical_diss_probe, iss_condition, StabilityReport};
use nalgebra::dmatrix;

fn show(name: &str, p: &LayerParams) {
    let (iss, diss) = (iss_condition(p), diss_condition(p));
    println!("{name:<22} iss {:.5} ({})  alpha_delta {:.5} ({})", iss.lhs, ok(iss.ok), diss.lhs, ok(diss.ok));
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

fn main() -> mgu::Result<()> {
    show("all zero", &LayerParams::zeros(2, 1));

    let mut p = LayerParams::zeros(2, 1);
    p.r_c = dmatrix![2.0, 0.0; 0.0, 2.0];
    show("R_c = 2I", &p);

    let mut p = LayerParams::zeros(1, 1);
    p.b_f[0] = 1.0;
    p.r_f[(0, 0)] = 2.0;
    p.w_c[(0, 0)] = 1.0;
    show("strong forget feedback", &p);

    // Two small layers: compliant, so the probe should never exceed the bound.
    let mut theta = NetworkParams::zeros(&ArchSpec::new(ArchKind::Mgu, 1, 1, vec![3, 2]))?;
    if let Layers::Mgu(layers) = &mut theta.layers {
        layers[0].w_c.fill(0.2);
        layers[0].r_c.fill(0.1);
        layers[1].w_c.fill(0.15);
        layers[1].b_f.fill(-0.5);
    }
    let probe = empirical_diss_probe(&theta, 20, 300, 1)?;
    let report = StabilityReport::build(&theta, Some(probe), None)?;
    println!("\ncascade A_delta {:?}", report.a_delta);
    println!("B_delta_u {:?}, gain {:?}", report.b_delta_u, report.network_gain);
    println!(
        "diss_ok {}; probe max violation {:.3e} over {} checks",
        report.diss_ok,
        report.probe.as_ref().map_or(f64::NAN, |p| p.max_violation),
        report.probe.as_ref().map_or(0, |p| p.checks)
    );
    Ok(())
}
