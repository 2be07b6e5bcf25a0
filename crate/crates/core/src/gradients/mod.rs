//! Losses and their exact gradients.
//!
//! The training objective is
//! `MSE(θ) + ρ Σ_l max(α_δ^(l)(θ) - (1 - μ), 0)`; the MSE part is
//! differentiated by backpropagation through the full unrolled recursion and
//! the penalty by an explicit subgradient of the infinity norms it contains.

mod bptt;
mod finite_diff;
mod penalty;

pub use bptt::{grad_augmented, grad_augmented_masked, mse_loss, sequence_mse};
pub use finite_diff::{finite_diff_gradient, max_relative_error, smoothness_margin, REL_ERROR_FLOOR};
pub use penalty::{diss_penalty, penalty_subgradient};
pub(crate) use penalty::alpha_partials;

use crate::dataio::Sequence;
use crate::error::{Error, Result};
use crate::netcore::{HiddenState, NetworkParams};

/// Sequences sharing a washout length, borrowed from a dataset.
#[derive(Clone, Debug)]
pub struct Batch<'a> {
    pub sequences: Vec<&'a Sequence>,
    /// Leading steps of every sequence excluded from the loss.
    pub washout: usize,
    /// Initial hidden state; zeros when `None`.
    pub h0: Option<HiddenState>,
}

impl<'a> Batch<'a> {
    pub fn new(sequences: impl IntoIterator<Item = &'a Sequence>, washout: usize) -> Self {
        Self {
            sequences: sequences.into_iter().collect(),
            washout,
            h0: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub(crate) fn validate(&self, theta: &NetworkParams) -> Result<()> {
        if self.sequences.is_empty() {
            return Err(Error::Precondition("empty batch".into()));
        }
        for (i, s) in self.sequences.iter().enumerate() {
            if s.u.len() != s.y.len() {
                return Err(Error::shape(format!("sequence {i} target length"), s.u.len(), s.y.len()));
            }
            if self.washout >= s.len() {
                return Err(Error::Precondition(format!(
                    "washout {} must be shorter than sequence {i} (length {})",
                    self.washout,
                    s.len()
                )));
            }
            if let Some(bad) = s.y.iter().find(|y| y.len() != theta.n_y) {
                return Err(Error::shape(format!("sequence {i} output width"), theta.n_y, bad.len()));
            }
            if let Some(bad) = s.u.iter().find(|u| u.len() != theta.n_u) {
                return Err(Error::shape(format!("sequence {i} input width"), theta.n_u, bad.len()));
            }
        }
        Ok(())
    }

    pub(crate) fn initial_state(&self, theta: &NetworkParams) -> HiddenState {
        self.h0.clone().unwrap_or_else(|| HiddenState::zeros(&theta.spec()))
    }
}

/// Gradient arrays shaped like the parameters, plus the objective terms.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPack {
    pub grads: NetworkParams,
    /// `mse + penalty`.
    pub loss_value: f64,
    pub mse_value: f64,
    pub penalty_value: f64,
}

impl GradientPack {
    pub fn max_abs(&self) -> f64 {
        self.grads.to_flat().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
