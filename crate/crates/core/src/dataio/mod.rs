//! Excitation signals, a synthetic two-tank plant, dataset transforms,
//! CSV/manifest I/O and identification metrics.

mod csv_io;
mod manifest;
mod metrics;
mod noise;
mod plant;
mod signal;
mod split;
mod transform;

pub use csv_io::{load_csv_sequences, write_csv_sequences, CsvSchema};
pub use manifest::{load_dataset, save_dataset, DatasetManifest, Provenance, MANIFEST_SCHEMA};
pub use metrics::{channel_fits, fit_metric, rmse, rmse_pooled};
pub use noise::add_noise_snr;
pub use plant::{plant_simulate, PlantSpec};
pub use signal::{mprs_generate, MprsConfig};
pub use split::split_dataset;
pub use transform::{lag_augment, normalize_apply, normalize_fit, window_sequences, ChannelRange, Normalization};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// One input/output record; `u[k]` has width `n_u`, `y[k]` width `n_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

impl Sequence {
    pub fn new(u: Vec<DVector<f64>>, y: Vec<DVector<f64>>) -> Self {
        Self { u, y }
    }

    /// Builds a single-input single-output sequence from scalar samples.
    pub fn from_scalars(u: &[f64], y: &[f64]) -> Self {
        Self {
            u: u.iter().map(|&x| DVector::from_element(1, x)).collect(),
            y: y.iter().map(|&x| DVector::from_element(1, x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn n_u(&self) -> usize {
        self.u.first().map_or(0, |v| v.len())
    }

    pub fn n_y(&self) -> usize {
        self.y.first().map_or(0, |v| v.len())
    }

    /// Samples of output channel `i`.
    pub fn y_channel(&self, i: usize) -> Vec<f64> {
        self.y.iter().map(|v| v[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

/// Sequences with their split assignment and preprocessing metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceDataset {
    pub sequences: Vec<Sequence>,
    /// One tag per sequence; `None` before [`split_dataset`].
    pub tags: Option<Vec<SplitTag>>,
    pub normalization: Option<Normalization>,
    pub washout: usize,
    pub provenance: Provenance,
}

impl SequenceDataset {
    pub fn new(sequences: Vec<Sequence>, washout: usize, provenance: Provenance) -> Self {
        Self {
            sequences,
            tags: None,
            normalization: None,
            washout,
            provenance,
        }
    }

    pub fn n_u(&self) -> usize {
        self.sequences.first().map_or(0, Sequence::n_u)
    }

    pub fn n_y(&self) -> usize {
        self.sequences.first().map_or(0, Sequence::n_y)
    }

    /// Sequences carrying `tag`, in dataset order.
    pub fn split(&self, tag: SplitTag) -> Vec<&Sequence> {
        match &self.tags {
            Some(t) => self.sequences.iter().zip(t).filter(|(_, x)| **x == tag).map(|(s, _)| s).collect(),
            None => Vec::new(),
        }
    }

    pub fn split_indices(&self, tag: SplitTag) -> Vec<usize> {
        match &self.tags {
            Some(t) => t.iter().enumerate().filter(|(_, x)| **x == tag).map(|(i, _)| i).collect(),
            None => Vec::new(),
        }
    }
}
