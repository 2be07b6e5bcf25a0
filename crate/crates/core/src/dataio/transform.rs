use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Sequence;
use crate::error::{Error, Result};

/// Observed range of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    /// Affine map `min -> -1`, `max -> 1`; a constant channel maps to 0.
    pub fn forward(&self, x: f64) -> f64 {
        if self.max > self.min {
            2.0 * (x - self.min) / (self.max - self.min) - 1.0
        } else {
            0.0
        }
    }

    pub fn inverse(&self, z: f64) -> f64 {
        if self.max > self.min {
            (z + 1.0) * 0.5 * (self.max - self.min) + self.min
        } else {
            self.min
        }
    }
}

/// Per-channel ranges for inputs and outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub u: Vec<ChannelRange>,
    pub y: Vec<ChannelRange>,
}

impl Normalization {
    pub fn denormalize_y(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(y.len(), |i, _| self.y[i].inverse(y[i]))
    }

    pub fn denormalize_u(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(u.len(), |i, _| self.u[i].inverse(u[i]))
    }
}

fn ranges<'a>(rows: impl Iterator<Item = &'a DVector<f64>>, width: usize) -> Vec<ChannelRange> {
    let mut r = vec![
        ChannelRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        width
    ];
    for v in rows {
        for (c, x) in r.iter_mut().zip(v.iter()) {
            c.min = c.min.min(*x);
            c.max = c.max.max(*x);
        }
    }
    r
}

/// Fits per-channel min/max over all sequences and maps every channel to `[-1, 1]`.
pub fn normalize_fit(seqs: &[Sequence]) -> Result<(Vec<Sequence>, Normalization)> {
    if seqs.iter().all(Sequence::is_empty) {
        return Err(Error::Precondition("cannot normalize an empty dataset".into()));
    }
    let n_u = seqs.iter().find(|s| !s.is_empty()).map_or(0, Sequence::n_u);
    let n_y = seqs.iter().find(|s| !s.is_empty()).map_or(0, Sequence::n_y);
    let norm = Normalization {
        u: ranges(seqs.iter().flat_map(|s| &s.u), n_u),
        y: ranges(seqs.iter().flat_map(|s| &s.y), n_y),
    };
    Ok((normalize_apply(seqs, &norm), norm))
}

/// Applies previously fitted ranges.
pub fn normalize_apply(seqs: &[Sequence], norm: &Normalization) -> Vec<Sequence> {
    let map = |v: &DVector<f64>, r: &[ChannelRange]| DVector::from_fn(v.len(), |i, _| r[i].forward(v[i]));
    seqs.iter()
        .map(|s| Sequence {
            u: s.u.iter().map(|v| map(v, &norm.u)).collect(),
            y: s.y.iter().map(|v| map(v, &norm.y)).collect(),
        })
        .collect()
}

/// Consecutive non-overlapping windows; a trailing remainder is dropped.
pub fn window_sequences(seq: &Sequence, window_len: usize) -> Vec<Sequence> {
    if window_len == 0 {
        return Vec::new();
    }
    (0..seq.len() / window_len)
        .map(|w| {
            let r = w * window_len..(w + 1) * window_len;
            Sequence {
                u: seq.u[r.clone()].to_vec(),
                y: seq.y[r].to_vec(),
            }
        })
        .collect()
}

/// `[u_k, u_{k-1}, ..., u_{k-n_lags+1}]`, padding missing history with `u_0`.
pub fn lag_augment(u: &[DVector<f64>], n_lags: usize) -> Result<Vec<DVector<f64>>> {
    if n_lags == 0 {
        return Err(Error::Precondition("n_lags must be at least 1".into()));
    }
    let n_u = u.first().map_or(0, |v| v.len());
    Ok((0..u.len())
        .map(|k| {
            let mut row = DVector::zeros(n_lags * n_u);
            for lag in 0..n_lags {
                let src = &u[k.saturating_sub(lag)];
                row.rows_mut(lag * n_u, n_u).copy_from(src);
            }
            row
        })
        .collect())
}
