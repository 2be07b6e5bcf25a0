use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::early_stop::{early_stop_update, BestState};
use super::history::{EpochRecord, TrainHistory};
use super::minibatch::split_minibatches_with;
use super::projection::project_in_place;
use super::warm_start::{warm_start, WarmStartOptions};
use crate::dataio::{SequenceDataset, SplitTag};
use crate::error::{Error, Result};
use crate::gradients::{diss_penalty, grad_augmented_masked, mse_loss, Batch};
use crate::linalg::inf_norm;
use crate::netcore::NetworkParams;
use crate::stability::network_stability;

/// Named training variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainMode {
    /// Plain MSE, ordinary early stopping.
    #[serde(rename = "MSE")]
    Mse,
    /// Loss augmentation with the δISS penalty.
    #[serde(rename = "LA")]
    La,
    /// Loss augmentation plus warm-start.
    #[serde(rename = "WS")]
    Ws,
    /// Loss augmentation plus projection.
    #[serde(rename = "PGM")]
    Pgm,
    /// Loss augmentation, warm-start and projection.
    #[serde(rename = "PGM+WS")]
    PgmWs,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "MSE" => TrainMode::Mse,
            "LA" => TrainMode::La,
            "WS" => TrainMode::Ws,
            "PGM" => TrainMode::Pgm,
            "PGM+WS" | "PGM_WS" | "WS+PGM" => TrainMode::PgmWs,
            other => return Err(Error::Config(format!("unknown training mode '{other}'"))),
        })
    }
}

/// Optimizer, schedule and stability settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub e_max: usize,
    pub lr: f64,
    pub zeta: f64,
    pub e_dc: usize,
    /// Dropout probability on layer inputs.
    pub xi: f64,
    pub rho: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub n_mb: usize,
    /// Validation cadence in optimizer iterations; `None` means once per epoch.
    pub kappa_val: Option<usize>,
    pub loss_augmentation: bool,
    pub warm_start: bool,
    pub pgm: bool,
    pub seed: u64,
    pub warm_start_opts: WarmStartOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            e_max: 300,
            lr: 1e-3,
            zeta: 0.9,
            e_dc: 200,
            xi: 0.05,
            rho: 0.01,
            mu: 0.01,
            epsilon: 0.01,
            n_mb: 1,
            kappa_val: None,
            loss_augmentation: false,
            warm_start: false,
            pgm: false,
            seed: 0,
            warm_start_opts: WarmStartOptions::default(),
        }
    }
}

impl TrainConfig {
    /// Default configuration with the flags of `mode`.
    pub fn for_mode(mode: TrainMode) -> Self {
        let mut c = Self::default();
        c.set_mode(mode);
        c
    }

    pub fn set_mode(&mut self, mode: TrainMode) {
        let (la, ws, pgm) = match mode {
            TrainMode::Mse => (false, false, false),
            TrainMode::La => (true, false, false),
            TrainMode::Ws => (true, true, false),
            TrainMode::Pgm => (true, false, true),
            TrainMode::PgmWs => (true, true, true),
        };
        self.loss_augmentation = la;
        self.warm_start = ws;
        self.pgm = pgm;
    }

    /// Early stopping only accepts δISS-compliant candidates in this mode.
    pub fn stability_mode(&self) -> bool {
        self.loss_augmentation || self.warm_start || self.pgm
    }

    /// Penalty weight actually used (zero without loss augmentation).
    pub fn effective_rho(&self) -> f64 {
        if self.loss_augmentation {
            self.rho
        } else {
            0.0
        }
    }

    pub fn kappa(&self) -> usize {
        self.kappa_val.unwrap_or(self.n_mb)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0, 1)");
        }
        if self.e_dc == 0 {
            return bad("e_dc must be at least 1");
        }
        if !(0.0..1.0).contains(&self.xi) {
            return bad("xi must lie in [0, 1)");
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad("rho must be nonnegative");
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad("mu must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.n_mb == 0 {
            return bad("n_mb must be at least 1");
        }
        if self.kappa_val == Some(0) {
            return bad("kappa_val must be at least 1");
        }
        Ok(())
    }
}

/// `lr · ζ^⌊epoch / e_dc⌋`.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    config.lr * config.zeta.powi((epoch / config.e_dc) as i32)
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Early-stopping winner; with no compliant candidate in stability mode
    /// this is the best unconstrained model and `no_stable_model` is set.
    pub theta_star: NetworkParams,
    pub theta_final: NetworkParams,
    pub history: TrainHistory,
    pub no_stable_model: bool,
    pub best_epoch: Option<usize>,
}

/// Parameters after one optimizer step, handed to an observer.
pub struct StepInfo<'a> {
    pub epoch: usize,
    pub iteration: usize,
    pub theta: &'a NetworkParams,
    pub loss: f64,
}

/// Runs the full training loop; see [`train_with_observer`].
pub fn train(theta0: &NetworkParams, dataset: &SequenceDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(theta0, dataset, config, |_| {})
}

fn dropout_masks(rng: &mut ChaCha8Rng, widths: &[usize], xi: f64) -> Vec<DVector<f64>> {
    let keep = 1.0 / (1.0 - xi);
    widths
        .iter()
        .map(|&w| DVector::from_fn(w, |_, _| if rng.random::<f64>() < xi { 0.0 } else { keep }))
        .collect()
}

/// Training loop: optional warm-start, then per epoch a reshuffled mini-batch
/// pass of Adam steps on the (augmented) loss, optional projection after each
/// step, validation every `kappa_val` iterations feeding early stopping, and
/// one history record per epoch. `observer` sees every post-step state.
pub fn train_with_observer(
    theta0: &NetworkParams,
    dataset: &SequenceDataset,
    config: &TrainConfig,
    mut observer: impl FnMut(&StepInfo),
) -> Result<TrainOutcome> {
    config.validate()?;
    theta0.mgu_layers()?;
    let train_set = dataset.split(SplitTag::Train);
    let val_set = dataset.split(SplitTag::Val);
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Precondition("training needs non-empty train and validation splits".into()));
    }
    let washout = dataset.washout;
    let train_all = Batch::new(train_set.iter().copied(), washout);
    let val_all = Batch::new(val_set.iter().copied(), washout);
    train_all.validate(theta0)?;
    val_all.validate(theta0)?;

    let mut theta = theta0.clone();
    if config.warm_start {
        theta = warm_start(&theta, config.mu, &config.warm_start_opts)?;
    }
    if config.pgm {
        project_in_place(&mut theta, config.epsilon)?;
    }

    let spec = theta.spec();
    let widths: Vec<usize> = (0..spec.layer_sizes.len()).map(|l| spec.layer_input_width(l)).collect();
    let rho = config.effective_rho();
    let stability_mode = config.stability_mode();
    let kappa = config.kappa();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(&theta);
    let mut best = BestState::default();
    let mut history = TrainHistory {
        e_max: config.e_max,
        warm_started: config.warm_start,
        ..TrainHistory::default()
    };
    let mut iteration = 0usize;

    for epoch in 0..config.e_max {
        let lr = lr_schedule(epoch, config);
        let batches = split_minibatches_with(train_set.len(), config.n_mb, &mut rng)?;
        let masks: Option<Vec<Vec<DVector<f64>>>> = (config.xi > 0.0)
            .then(|| (0..train_set.len()).map(|_| dropout_masks(&mut rng, &widths, config.xi)).collect());
        let mut last_val: Option<f64> = None;
        for idx in &batches {
            let batch = Batch::new(idx.iter().map(|&i| train_set[i]), washout);
            let batch_masks: Option<Vec<Vec<DVector<f64>>>> =
                masks.as_ref().map(|m| idx.iter().map(|&i| m[i].clone()).collect());
            let gp = grad_augmented_masked(&theta, &batch, rho, config.mu, batch_masks.as_deref())?;
            if !gp.loss_value.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    history: Box::new(history),
                });
            }
            adam_step(&mut adam, &mut theta, &gp.grads, lr)?;
            if config.pgm {
                project_in_place(&mut theta, config.epsilon)?;
            }
            if theta.to_flat().iter().any(|x| !x.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    history: Box::new(history),
                });
            }
            iteration += 1;
            observer(&StepInfo {
                epoch,
                iteration,
                theta: &theta,
                loss: gp.loss_value,
            });
            if iteration.is_multiple_of(kappa) {
                let val = mse_loss(&theta, &val_all)?;
                let ok = network_stability(&theta)?.diss_ok;
                best = early_stop_update(best, val, &theta, epoch, stability_mode, ok);
                last_val = Some(val);
            }
        }

        let train_loss = mse_loss(&theta, &train_all)?;
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                history: Box::new(history),
            });
        }
        let val_mse = match last_val {
            Some(v) => v,
            None => mse_loss(&theta, &val_all)?,
        };
        let ns = network_stability(&theta)?;
        history.records.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            penalty: diss_penalty(&theta, rho, config.mu)?,
            val_mse,
            alpha_delta: ns.layers.iter().map(|l| l.diss_lhs).collect(),
            r_c_norm: theta.mgu_layers()?.iter().map(|p| inf_norm(&p.r_c)).collect(),
            diss_ok: ns.diss_ok,
        });
    }

    let no_stable_model = best.no_stable_model(stability_mode);
    let chosen = if no_stable_model { &best.best_unconstrained } else { &best.best };
    let (theta_star, best_epoch, best_val) = match chosen {
        Some(c) => (c.theta.clone(), Some(c.epoch), Some(c.val_mse)),
        None => (theta.clone(), None, None),
    };
    history.best_epoch = best_epoch;
    history.best_val_mse = best_val;
    history.no_stable_model = no_stable_model;
    Ok(TrainOutcome {
        theta_star,
        theta_final: theta,
        history,
        no_stable_model,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{split_dataset, Provenance, Sequence};
    use crate::netcore::{init_standard, ArchKind, ArchSpec};

    #[test]
    fn schedule_examples() {
        let c = TrainConfig::default();
        assert_eq!(lr_schedule(0, &c), 0.001);
        assert!((lr_schedule(200, &c) - 0.0009).abs() < 1e-18);
        assert!((lr_schedule(399, &c) - 0.0009).abs() < 1e-18);
        assert!((lr_schedule(400, &c) - 0.00081).abs() < 1e-18);
    }

    #[test]
    fn mode_flags() {
        let c = TrainConfig::for_mode(TrainMode::Mse);
        assert!(!c.stability_mode());
        assert_eq!(c.effective_rho(), 0.0);
        let c = TrainConfig::for_mode(TrainMode::PgmWs);
        assert!(c.pgm && c.warm_start && c.loss_augmentation);
        assert_eq!("pgm+ws".parse::<TrainMode>().unwrap(), TrainMode::PgmWs);
    }

    fn zero_dataset() -> SequenceDataset {
        let seqs = (0..4).map(|i| Sequence::from_scalars(&[0.1 * i as f64; 6], &[0.0; 6])).collect();
        split_dataset(SequenceDataset::new(seqs, 1, Provenance::default()), 3, 1, 0, 0).unwrap()
    }

    #[test]
    fn stationary_start_is_kept() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![2]);
        let theta0 = NetworkParams::zeros(&spec).unwrap();
        let cfg = TrainConfig {
            e_max: 1,
            xi: 0.0,
            ..TrainConfig::for_mode(TrainMode::Mse)
        };
        let out = train(&theta0, &zero_dataset(), &cfg).unwrap();
        assert_eq!(out.theta_star, theta0);
        assert_eq!(out.history.records[0].train_loss, 0.0);
    }

    #[test]
    fn pgm_stays_feasible_and_deterministic() {
        let spec = ArchSpec::new(ArchKind::Mgu, 1, 1, vec![4]);
        let theta0 = init_standard(&spec, 2).unwrap();
        let seqs = (0..4)
            .map(|i| {
                let u: Vec<f64> = (0..12).map(|k| ((k + i) as f64 * 0.5).sin()).collect();
                let y: Vec<f64> = u.iter().map(|x| 0.5 * x).collect();
                Sequence::from_scalars(&u, &y)
            })
            .collect();
        let ds = split_dataset(SequenceDataset::new(seqs, 2, Provenance::default()), 3, 1, 0, 0).unwrap();
        let cfg = TrainConfig {
            e_max: 5,
            n_mb: 3,
            lr: 0.05,
            ..TrainConfig::for_mode(TrainMode::Pgm)
        };
        let mut worst: f64 = 0.0;
        let a = train_with_observer(&theta0, &ds, &cfg, |s| {
            for p in s.theta.mgu_layers().unwrap() {
                worst = worst.max(inf_norm(&p.r_c));
            }
        })
        .unwrap();
        assert!(worst <= 0.99 + 1e-12);
        let b = train(&theta0, &ds, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.theta_star, b.theta_star);
    }
}
