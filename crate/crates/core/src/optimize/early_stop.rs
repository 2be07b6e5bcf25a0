use crate::netcore::NetworkParams;

/// A validated parameter snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub val_mse: f64,
    pub theta: NetworkParams,
    pub epoch: usize,
    pub diss_ok: bool,
}

/// Early-stopping bookkeeping: the selected model and, for diagnostics, the
/// best model regardless of stability.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BestState {
    pub best: Option<Candidate>,
    pub best_unconstrained: Option<Candidate>,
}

impl BestState {
    /// True when stability-driven selection never saw a compliant candidate.
    pub fn no_stable_model(&self, stability_mode: bool) -> bool {
        stability_mode && self.best.is_none()
    }
}

fn improves(current: &Option<Candidate>, val_mse: f64) -> bool {
    !val_mse.is_nan() && current.as_ref().is_none_or(|c| val_mse < c.val_mse)
}

/// Offers a candidate. Without stability mode the lowest validation MSE wins;
/// with it, only candidates satisfying the δISS condition on every layer may
/// replace the selection.
pub fn early_stop_update(
    mut state: BestState,
    val_mse: f64,
    theta: &NetworkParams,
    epoch: usize,
    stability_mode: bool,
    diss_ok: bool,
) -> BestState {
    let cand = || Candidate {
        val_mse,
        theta: theta.clone(),
        epoch,
        diss_ok,
    };
    if improves(&state.best_unconstrained, val_mse) {
        state.best_unconstrained = Some(cand());
    }
    if (!stability_mode || diss_ok) && improves(&state.best, val_mse) {
        state.best = Some(cand());
    }
    state
}
