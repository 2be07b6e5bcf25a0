use serde::{Deserialize, Serialize};

use super::{network_stability, LayerStability, ProbeResult};
use crate::error::{Error, Result};
use crate::netcore::NetworkParams;

pub const STABILITY_REPORT_SCHEMA: u32 = 1;

/// Serializable stability certificate (see `docs/formats.md`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityReport {
    pub schema: u32,
    pub tool_version: String,
    pub config_hash: Option<String>,
    /// Always `"derived"`: λ comes from the forget-gate lower bound.
    pub lambda_provenance: String,
    pub layers: Vec<LayerStability>,
    pub a_delta: Vec<Vec<f64>>,
    pub b_delta_u: Vec<f64>,
    pub schur_stable: bool,
    /// `null` when the cascade is not Schur stable (infinite gain).
    pub network_gain: Option<f64>,
    pub gain_infinite: bool,
    pub iss_ok: bool,
    pub diss_ok: bool,
    pub probe: Option<ProbeResult>,
}

impl StabilityReport {
    pub fn build(theta: &NetworkParams, probe: Option<ProbeResult>, config_hash: Option<String>) -> Result<Self> {
        let ns = network_stability(theta)?;
        let finite = ns.network_gain.is_finite();
        Ok(Self {
            schema: STABILITY_REPORT_SCHEMA,
            tool_version: crate::VERSION.to_string(),
            config_hash,
            lambda_provenance: "derived".into(),
            a_delta: ns.a_delta.row_iter().map(|r| r.iter().copied().collect()).collect(),
            b_delta_u: ns.b_delta_u.iter().copied().collect(),
            layers: ns.layers,
            schur_stable: ns.schur_stable,
            network_gain: finite.then_some(ns.network_gain),
            gain_infinite: !finite,
            iss_ok: ns.iss_ok,
            diss_ok: ns.diss_ok,
            probe,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and checks a report document against the published shape.
    pub fn validate_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema != STABILITY_REPORT_SCHEMA {
            return Err(Error::Schema(format!("unsupported report schema {}", r.schema)));
        }
        let n = r.layers.len();
        if r.a_delta.len() != n || r.a_delta.iter().any(|row| row.len() != n) || r.b_delta_u.len() != n {
            return Err(Error::Schema("A_delta / B_delta_u dimensions disagree with the layer list".into()));
        }
        if r.network_gain.is_none() != r.gain_infinite {
            return Err(Error::Schema("network_gain must be null exactly when gain_infinite".into()));
        }
        if r.diss_ok != r.layers.iter().all(|l| l.diss_ok) {
            return Err(Error::Schema("diss_ok disagrees with per-layer flags".into()));
        }
        Ok(r)
    }
}
