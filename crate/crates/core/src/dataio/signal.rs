use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multilevel pseudo-random signal settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MprsConfig {
    pub length: usize,
    pub n_channels: usize,
    /// Number of equispaced amplitude levels (at least 2).
    pub n_levels: usize,
    /// Inclusive range of hold durations in samples.
    pub hold_min: usize,
    pub hold_max: usize,
    /// Levels in `[0, 1]` instead of `[-1, 1]`.
    pub unipolar: bool,
}

impl Default for MprsConfig {
    fn default() -> Self {
        Self {
            length: 2500,
            n_channels: 1,
            n_levels: 11,
            hold_min: 10,
            hold_max: 60,
            unipolar: true,
        }
    }
}

/// Piecewise-constant random signal: each channel draws a level uniformly
/// from the level grid and holds it for a uniform random number of samples.
/// Channels use independent draws from one seeded stream.
pub fn mprs_generate(cfg: &MprsConfig, seed: u64) -> Result<Vec<DVector<f64>>> {
    if cfg.n_levels < 2 {
        return Err(Error::Precondition("MPRS needs at least two levels".into()));
    }
    if cfg.hold_min < 1 || cfg.hold_min > cfg.hold_max {
        return Err(Error::Precondition(format!(
            "invalid hold range [{}, {}]",
            cfg.hold_min, cfg.hold_max
        )));
    }
    if cfg.n_channels == 0 {
        return Err(Error::Precondition("MPRS needs at least one channel".into()));
    }
    let (lo, hi) = if cfg.unipolar { (0.0, 1.0) } else { (-1.0, 1.0) };
    let step = (hi - lo) / (cfg.n_levels - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![DVector::zeros(cfg.n_channels); cfg.length];
    for ch in 0..cfg.n_channels {
        let mut k = 0;
        while k < cfg.length {
            let level = rng.random_range(0..cfg.n_levels);
            let value = if level == cfg.n_levels - 1 { hi } else { lo + step * level as f64 };
            let hold = rng.random_range(cfg.hold_min..=cfg.hold_max);
            for sample in out.iter_mut().skip(k).take(hold) {
                sample[ch] = value;
            }
            k += hold;
        }
    }
    Ok(out)
}
