//! Versioned JSON checkpoint format.
//!
//! ```text
//! { "schema": 1, "arch_kind": "MGU" | "GRU", "n_u": .., "n_y": .., "layer_sizes": [..],
//!   "layers": [ { "W_f": [[..]], "R_f": .., "b_f": [..], "W_c": .., "R_c": .., "b_c": .. } ],
//!   "W_y": [[..]], "b_y": [..], "seed": 42 | null, "metadata": { .. } }
//! ```
//! Matrices are lists of rows. GRU layers use the keys `W_z R_z b_z W_r R_r b_r W_c R_c b_c`.
//! Floats are written in shortest round-trip decimal form, so load(save(x)) == x bitwise.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::params::{ArchKind, GruLayerParams, LayerParams, Layers, NetworkParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_SCHEMA: u32 = 1;

/// Network parameters plus free-form provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams,
    pub seed: Option<u64>,
    pub metadata: Map<String, Value>,
}

type Rows = Vec<Vec<f64>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct MguLayerDoc {
    W_f: Rows,
    R_f: Rows,
    b_f: Vec<f64>,
    W_c: Rows,
    R_c: Rows,
    b_c: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct GruLayerDoc {
    W_z: Rows,
    R_z: Rows,
    b_z: Vec<f64>,
    W_r: Rows,
    R_r: Rows,
    b_r: Vec<f64>,
    W_c: Rows,
    R_c: Rows,
    b_c: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct CheckpointDoc {
    schema: u32,
    arch_kind: ArchKind,
    n_u: usize,
    n_y: usize,
    layer_sizes: Vec<usize>,
    layers: Vec<Value>,
    W_y: Rows,
    b_y: Vec<f64>,
    seed: Option<u64>,
    #[serde(default)]
    metadata: Map<String, Value>,
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, r: &Rows) -> Result<DMatrix<f64>> {
    let ncols = r.first().map_or(0, Vec::len);
    if let Some(bad) = r.iter().find(|row| row.len() != ncols) {
        return Err(Error::Schema(format!(
            "{name}: ragged rows ({} vs {ncols} columns)",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(r.len(), ncols, |i, j| r[i][j]))
}

impl Checkpoint {
    pub fn new(params: NetworkParams) -> Self {
        Self {
            params,
            seed: None,
            metadata: Map::new(),
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        self.params.validate()?;
        let p = &self.params;
        let layers = match &p.layers {
            Layers::Mgu(v) => v
                .iter()
                .map(|l| {
                    serde_json::to_value(MguLayerDoc {
                        W_f: rows(&l.w_f),
                        R_f: rows(&l.r_f),
                        b_f: l.b_f.iter().copied().collect(),
                        W_c: rows(&l.w_c),
                        R_c: rows(&l.r_c),
                        b_c: l.b_c.iter().copied().collect(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
            Layers::Gru(v) => v
                .iter()
                .map(|l| {
                    serde_json::to_value(GruLayerDoc {
                        W_z: rows(&l.w_z),
                        R_z: rows(&l.r_z),
                        b_z: l.b_z.iter().copied().collect(),
                        W_r: rows(&l.w_r),
                        R_r: rows(&l.r_r),
                        b_r: l.b_r.iter().copied().collect(),
                        W_c: rows(&l.w_c),
                        R_c: rows(&l.r_c),
                        b_c: l.b_c.iter().copied().collect(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let doc = CheckpointDoc {
            schema: CHECKPOINT_SCHEMA,
            arch_kind: p.arch_kind(),
            n_u: p.n_u,
            n_y: p.n_y,
            layer_sizes: p.layer_sizes(),
            layers,
            W_y: rows(&p.w_y),
            b_y: p.b_y.iter().copied().collect(),
            seed: self.seed,
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: CheckpointDoc = serde_json::from_str(s)?;
        if doc.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Schema(format!(
                "unsupported checkpoint schema {} (expected {CHECKPOINT_SCHEMA})",
                doc.schema
            )));
        }
        if doc.layers.len() != doc.layer_sizes.len() {
            return Err(Error::shape("checkpoint layers", doc.layer_sizes.len(), doc.layers.len()));
        }
        let layers = match doc.arch_kind {
            ArchKind::Mgu => Layers::Mgu(
                doc.layers
                    .into_iter()
                    .map(|v| {
                        let d: MguLayerDoc = serde_json::from_value(v)?;
                        Ok(LayerParams {
                            w_f: matrix("W_f", &d.W_f)?,
                            r_f: matrix("R_f", &d.R_f)?,
                            b_f: DVector::from_vec(d.b_f),
                            w_c: matrix("W_c", &d.W_c)?,
                            r_c: matrix("R_c", &d.R_c)?,
                            b_c: DVector::from_vec(d.b_c),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            ArchKind::Gru => Layers::Gru(
                doc.layers
                    .into_iter()
                    .map(|v| {
                        let d: GruLayerDoc = serde_json::from_value(v)?;
                        Ok(GruLayerParams {
                            w_z: matrix("W_z", &d.W_z)?,
                            r_z: matrix("R_z", &d.R_z)?,
                            b_z: DVector::from_vec(d.b_z),
                            w_r: matrix("W_r", &d.W_r)?,
                            r_r: matrix("R_r", &d.R_r)?,
                            b_r: DVector::from_vec(d.b_r),
                            w_c: matrix("W_c", &d.W_c)?,
                            r_c: matrix("R_c", &d.R_c)?,
                            b_c: DVector::from_vec(d.b_c),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let params = NetworkParams {
            n_u: doc.n_u,
            n_y: doc.n_y,
            layers,
            w_y: matrix("W_y", &doc.W_y)?,
            b_y: DVector::from_vec(doc.b_y),
        };
        params.validate()?;
        if params.layer_sizes() != doc.layer_sizes {
            return Err(Error::Schema("layer_sizes disagree with the stored layer arrays".into()));
        }
        Ok(Self {
            params,
            seed: doc.seed,
            metadata: doc.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }
}
