use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_csv_sequences, write_csv_sequences, CsvSchema, MprsConfig, Normalization, PlantSpec, SequenceDataset, SplitTag};
use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA: u32 = 1;

/// Where a dataset came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// `"generated"` or `"csv"`.
    pub source: String,
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mprs: Option<MprsConfig>,
    #[serde(default)]
    pub plant: Option<PlantSpec>,
    #[serde(default)]
    pub snr: Option<f64>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    #[serde(default)]
    pub window_len: Option<usize>,
    #[serde(default)]
    pub n_lags: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitLists {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// JSON sidecar describing a CSV dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: u32,
    pub tool_version: String,
    pub config_hash: Option<String>,
    /// CSV file, relative to the manifest's directory.
    pub data_file: String,
    pub n_u: usize,
    pub n_y: usize,
    pub n_sequences: usize,
    pub washout: usize,
    pub splits: Option<SplitLists>,
    pub normalization: Option<Normalization>,
    pub provenance: Provenance,
}

/// Writes `sequences.csv` and `manifest.json` into `dir`; returns the manifest path.
pub fn save_dataset(dir: impl AsRef<Path>, ds: &SequenceDataset, config_hash: Option<&str>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut comments = vec![format!("mgu {}", crate::VERSION)];
    if let Some(h) = config_hash {
        comments.push(format!("config_hash {h}"));
    }
    write_csv_sequences(dir.join("sequences.csv"), &ds.sequences, &comments)?;
    let splits = ds.tags.as_ref().map(|_| SplitLists {
        train: ds.split_indices(SplitTag::Train),
        val: ds.split_indices(SplitTag::Val),
        test: ds.split_indices(SplitTag::Test),
    });
    let m = DatasetManifest {
        schema: MANIFEST_SCHEMA,
        tool_version: crate::VERSION.into(),
        config_hash: config_hash.map(str::to_string),
        data_file: "sequences.csv".into(),
        n_u: ds.n_u(),
        n_y: ds.n_y(),
        n_sequences: ds.sequences.len(),
        washout: ds.washout,
        splits,
        normalization: ds.normalization.clone(),
        provenance: ds.provenance.clone(),
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads a dataset from its manifest, restoring splits and normalization.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<SequenceDataset> {
    let mp = manifest_path.as_ref();
    let text = std::fs::read_to_string(mp).map_err(|e| Error::io(mp, e))?;
    let m: DatasetManifest = serde_json::from_str(&text)?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(Error::Schema(format!("unsupported manifest schema {}", m.schema)));
    }
    let data = mp.parent().unwrap_or(Path::new(".")).join(&m.data_file);
    let mut ds = load_csv_sequences(&data, &CsvSchema::default())?;
    if ds.sequences.len() != m.n_sequences || ds.n_u() != m.n_u || ds.n_y() != m.n_y {
        return Err(Error::Schema(format!(
            "{} does not match its manifest ({} sequences, n_u={}, n_y={})",
            data.display(),
            m.n_sequences,
            m.n_u,
            m.n_y
        )));
    }
    if let Some(s) = &m.splits {
        let mut tags = vec![None; m.n_sequences];
        for (list, tag) in [(&s.train, SplitTag::Train), (&s.val, SplitTag::Val), (&s.test, SplitTag::Test)] {
            for &i in list {
                match tags.get_mut(i) {
                    Some(slot @ None) => *slot = Some(tag),
                    _ => return Err(Error::Schema(format!("split index {i} is out of range or repeated"))),
                }
            }
        }
        ds.tags = Some(
            tags.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Schema("splits do not cover every sequence".into()))?,
        );
    }
    ds.washout = m.washout;
    ds.normalization = m.normalization;
    ds.provenance = m.provenance;
    Ok(ds)
}
