//! Two cascaded tanks with square-root outflow, a small open-loop-stable
//! nonlinear benchmark.
//!
//! ```text
//! s1+ = clamp(s1 + Ts (kp u - k1 sqrt(s1)))
//! s2+ = clamp(s2 + Ts (k1 sqrt(s1) - k2 sqrt(s2)))
//! y_k = s2 after the update
//! ```
//! Under a constant input the levels settle at `s1 = (kp u / k1)^2`,
//! `s2 = (kp u / k2)^2`, i.e. `(4, 6.25)` for `u = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    pub kp: f64,
    pub k1: f64,
    pub k2: f64,
    pub ts: f64,
    /// Upper clamp for both levels (the lower clamp is 0).
    pub s_max: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            kp: 0.5,
            k1: 0.25,
            k2: 0.2,
            ts: 1.0,
            s_max: 10.0,
        }
    }
}

/// Simulates the plant from `s0`, returning `y_k = s2_{k+1}` for every input sample.
pub fn plant_simulate(spec: &PlantSpec, u: &[f64], s0: [f64; 2]) -> Result<Vec<f64>> {
    if s0.iter().any(|s| !(0.0..=spec.s_max).contains(s)) {
        return Err(Error::Precondition(format!(
            "initial levels {s0:?} outside [0, {}]",
            spec.s_max
        )));
    }
    if let Some((k, x)) = u.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Precondition(format!("plant input {x} at step {k} outside [0, 1]")));
    }
    let [mut s1, mut s2] = s0;
    let clamp = |s: f64| s.clamp(0.0, spec.s_max);
    Ok(u.iter()
        .map(|&uk| {
            let q1 = spec.k1 * s1.sqrt();
            let n1 = clamp(s1 + spec.ts * (spec.kp * uk - q1));
            let n2 = clamp(s2 + spec.ts * (q1 - spec.k2 * s2.sqrt()));
            s1 = n1;
            s2 = n2;
            s2
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_input_stays_empty() {
        let y = plant_simulate(&PlantSpec::default(), &[0.0; 20], [0.0, 0.0]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_two_steps() {
        let y = plant_simulate(&PlantSpec::default(), &[1.0, 1.0], [0.0, 0.0]).unwrap();
        assert_eq!(y[0], 0.0);
        assert_relative_eq!(y[1], 0.176_776_695_296_636_88, max_relative = 1e-15);
    }

    #[test]
    fn steady_state_under_unit_input() {
        let y = plant_simulate(&PlantSpec::default(), &vec![1.0; 3000], [0.0, 0.0]).unwrap();
        assert!((y[2999] - 6.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(plant_simulate(&PlantSpec::default(), &[0.5], [11.0, 0.0]).is_err());
        assert!(plant_simulate(&PlantSpec::default(), &[1.5], [0.0, 0.0]).is_err());
    }

    #[test]
    fn larger_input_fills_faster() {
        let spec = PlantSpec::default();
        // s1 after one step is kp*u; observe it through a second step's outflow
        let a = plant_simulate(&spec, &[0.3, 0.0], [0.0, 0.0]).unwrap();
        let b = plant_simulate(&spec, &[0.6, 0.0], [0.0, 0.0]).unwrap();
        assert!(b[1] > a[1]);
    }
}
