use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metrics recorded at the end of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// MSE on the full training split at the end of the epoch (no dropout).
    pub train_loss: f64,
    pub penalty: f64,
    pub val_mse: f64,
    pub alpha_delta: Vec<f64>,
    pub r_c_norm: Vec<f64>,
    pub diss_ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub e_max: usize,
    pub best_epoch: Option<usize>,
    pub best_val_mse: Option<f64>,
    pub no_stable_model: bool,
    pub warm_started: bool,
}

impl TrainHistory {
    /// Fraction of the `e_max` epochs whose end-of-epoch parameters satisfy
    /// the δISS condition on every layer.
    pub fn in_range_rate(&self) -> f64 {
        if self.e_max == 0 {
            return 0.0;
        }
        self.records.iter().filter(|r| r.diss_ok).count() as f64 / self.e_max as f64
    }

    /// CSV with `# ` comment lines, then
    /// `epoch,lr,train_loss,penalty,val_mse,alpha_delta_1..L,diss_ok,r_c_norm_1..L`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let layers = self.records.first().map_or(0, |r| r.alpha_delta.len());
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let mut header = vec!["epoch".to_string(), "lr".into(), "train_loss".into(), "penalty".into(), "val_mse".into()];
        header.extend((1..=layers).map(|l| format!("alpha_delta_{l}")));
        header.push("diss_ok".into());
        header.extend((1..=layers).map(|l| format!("r_c_norm_{l}")));
        let _ = writeln!(s, "{}", header.join(","));
        for r in &self.records {
            let mut row = vec![r.epoch.to_string(), r.lr.to_string(), r.train_loss.to_string(), r.penalty.to_string(), r.val_mse.to_string()];
            row.extend(r.alpha_delta.iter().map(f64::to_string));
            row.push(r.diss_ok.to_string());
            row.extend(r.r_c_norm.iter().map(f64::to_string));
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(comments)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_and_csv() {
        let rec = |e, ok| EpochRecord {
            epoch: e,
            lr: 1e-3,
            train_loss: 0.5,
            penalty: 0.0,
            val_mse: 0.25,
            alpha_delta: vec![0.9, 0.8],
            r_c_norm: vec![0.5, 0.4],
            diss_ok: ok,
        };
        let h = TrainHistory {
            records: vec![rec(0, true), rec(1, false), rec(2, true), rec(3, true)],
            e_max: 4,
            ..TrainHistory::default()
        };
        assert_eq!(h.in_range_rate(), 0.75);
        let csv = h.to_csv(&["tool".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# tool");
        assert_eq!(lines[1], "epoch,lr,train_loss,penalty,val_mse,alpha_delta_1,alpha_delta_2,diss_ok,r_c_norm_1,r_c_norm_2");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[2], "0,0.001,0.5,0,0.25,0.9,0.8,true,0.5,0.4");
    }
}
