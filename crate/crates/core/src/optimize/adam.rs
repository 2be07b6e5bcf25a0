use crate::error::{Error, Result};
use crate::netcore::NetworkParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates in canonical parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(theta: &NetworkParams) -> Self {
        let n = theta.num_values();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `theta` in place.
pub fn adam_step(state: &mut AdamState, theta: &mut NetworkParams, grads: &NetworkParams, lr: f64) -> Result<()> {
    if grads.num_values() != state.m.len() || theta.num_values() != state.m.len() {
        return Err(Error::shape("Adam state", state.m.len(), grads.num_values()));
    }
    state.t += 1;
    let bc1 = 1.0 - ADAM_BETA1.powf(state.t as f64);
    let bc2 = 1.0 - ADAM_BETA2.powf(state.t as f64);
    let mut i = 0;
    for (p, g) in theta.slices_mut().into_iter().zip(grads.slices()) {
        if p.len() != g.len() {
            return Err(Error::shape("gradient array", p.len(), g.len()));
        }
        for (x, &gi) in p.iter_mut().zip(g) {
            let m = &mut state.m[i];
            let v = &mut state.v[i];
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gi;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *x -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            i += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{ArchKind, ArchSpec};

    fn net() -> NetworkParams {
        NetworkParams::zeros(&ArchSpec::new(ArchKind::Mgu, 1, 1, vec![1])).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut theta = net();
        theta.b_y[0] = 0.7;
        let before = theta.clone();
        let mut st = AdamState::new(&theta);
        adam_step(&mut st, &mut theta, &before.zeros_like(), 1e-3).unwrap();
        assert_eq!(theta, before);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut theta = net();
        let mut g = theta.zeros_like();
        g.b_y[0] = 0.02;
        let mut st = AdamState::new(&theta);
        adam_step(&mut st, &mut theta, &g, 1e-3).unwrap();
        let expected = -1e-3 * 0.02 / (0.02 + 1e-8);
        assert!((theta.b_y[0] - expected).abs() < 1e-18);
        assert!((theta.b_y[0] + 1e-3).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let mut g = net().zeros_like();
        g.b_y[0] = -0.3;
        let (mut a, mut b) = (net(), net());
        let (mut sa, mut sb) = (AdamState::new(&a), AdamState::new(&b));
        for _ in 0..3 {
            adam_step(&mut sa, &mut a, &g, 0.01).unwrap();
            adam_step(&mut sb, &mut b, &g, 0.01).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }
}
