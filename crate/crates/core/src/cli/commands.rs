use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::{DataSource, RunConfig};
use crate::dataio::{
    add_noise_snr, channel_fits, lag_augment, load_csv_sequences, load_dataset, mprs_generate, normalize_apply,
    normalize_fit, plant_simulate, rmse_pooled, save_dataset, split_dataset, window_sequences, CsvSchema, Provenance,
    Sequence, SequenceDataset, SplitTag,
};
use crate::error::{Error, Result};
use crate::gradients::{mse_loss, Batch};
use crate::netcore::{init_standard, param_count, simulate_outputs, ArchKind, ArchSpec, Checkpoint, HiddenState, NetworkParams};
use crate::optimize::{train, TrainHistory};
use crate::stability::{empirical_diss_probe, StabilityReport};

/// Process exit status for an error.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success; for `check-stability`, the network is δISS-compliant |
/// | 1 | i/o or other failure |
/// | 2 | parse, schema or configuration error |
/// | 3 | precondition or shape error |
/// | 4 | not compliant, warm-start failure, or no stable model |
/// | 5 | numeric divergence |
/// | 6 | unsupported architecture |
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 1,
        Error::Parse { .. } | Error::Schema(_) | Error::Config(_) | Error::Json(_) => 2,
        Error::Precondition(_) | Error::Shape { .. } => 3,
        Error::WarmStartFailed { .. } => 4,
        Error::Diverged { .. } | Error::NumericAt { .. } | Error::NonFinite { .. } => 5,
        Error::UnsupportedArch(_) => 6,
    }
}

pub const EXIT_NOT_COMPLIANT: i32 = 4;

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Unnormalized windows plus provenance; `clean` skips the output noise.
fn raw_windows(cfg: &RunConfig, clean: bool) -> Result<(Vec<Sequence>, Provenance)> {
    let d = &cfg.data;
    let (full, mut prov) = match d.source {
        DataSource::Generate => {
            if d.mprs.n_channels != 1 {
                return Err(Error::Config("the benchmark plant takes exactly one input channel".into()));
            }
            let u = mprs_generate(&d.mprs, cfg.seed)?;
            let scalars: Vec<f64> = u.iter().map(|v| v[0]).collect();
            let y = plant_simulate(&d.plant, &scalars, [0.0, 0.0])?;
            let mut y: Vec<DVector<f64>> = y.into_iter().map(|v| DVector::from_element(1, v)).collect();
            let noise_seed = d.noise_seed.unwrap_or(cfg.seed);
            if let (Some(snr), false) = (d.snr, clean) {
                y = add_noise_snr(&[y], snr, noise_seed)?.remove(0);
            }
            let prov = Provenance {
                source: "generated".into(),
                seed: Some(cfg.seed),
                mprs: Some(d.mprs.clone()),
                plant: Some(d.plant.clone()),
                snr: if clean { None } else { d.snr },
                noise_seed: d.snr.filter(|_| !clean).map(|_| noise_seed),
                ..Provenance::default()
            };
            (vec![Sequence::new(u, y)], prov)
        }
        DataSource::Csv => {
            let path = d.path.as_deref().unwrap_or(Path::new(""));
            let ds = load_csv_sequences(path, &CsvSchema::default())?;
            let prov = Provenance {
                source: "csv".into(),
                file: Some(path.display().to_string()),
                ..Provenance::default()
            };
            (ds.sequences, prov)
        }
        DataSource::Manifest => unreachable!("manifest datasets are loaded whole"),
    };
    let mut seqs = Vec::new();
    for mut s in full {
        if cfg.arch.n_lags > 0 {
            s.u = lag_augment(&s.u, cfg.arch.n_lags)?;
        }
        if d.window == 0 {
            seqs.push(s);
        } else {
            seqs.extend(window_sequences(&s, d.window));
        }
    }
    prov.window_len = (d.window > 0).then_some(d.window);
    prov.n_lags = (cfg.arch.n_lags > 0).then_some(cfg.arch.n_lags);
    Ok((seqs, prov))
}

fn finish(cfg: &RunConfig, seqs: Vec<Sequence>, prov: Provenance) -> Result<SequenceDataset> {
    let d = &cfg.data;
    let (seqs, norm) = if d.normalize {
        let (s, n) = normalize_fit(&seqs)?;
        (s, Some(n))
    } else {
        (seqs, None)
    };
    let mut ds = SequenceDataset::new(seqs, d.washout, prov);
    ds.normalization = norm;
    split_dataset(ds, d.split[0], d.split[1], d.split[2], cfg.seed)
}

/// Builds the dataset described by `cfg.data`: generate or read, lag,
/// window, normalize, split.
pub fn build_dataset(cfg: &RunConfig) -> Result<SequenceDataset> {
    if cfg.data.source == DataSource::Manifest {
        return load_dataset(cfg.data.path.as_deref().unwrap_or(Path::new("")));
    }
    let (seqs, prov) = raw_windows(cfg, false)?;
    finish(cfg, seqs, prov)
}

/// Noise-free twin of [`build_dataset`] for a generated noisy dataset: same
/// windows and split, scaled with the normalization fitted on the noisy data.
pub fn build_clean_reference(cfg: &RunConfig) -> Result<SequenceDataset> {
    if cfg.data.source != DataSource::Generate {
        return Err(Error::Config("a clean reference needs a generated dataset".into()));
    }
    let noisy = build_dataset(cfg)?;
    let (clean, prov) = raw_windows(cfg, true)?;
    let seqs = match &noisy.normalization {
        Some(n) => normalize_apply(&clean, n),
        None => clean,
    };
    let mut ds = SequenceDataset::new(seqs, noisy.washout, prov);
    ds.normalization = noisy.normalization.clone();
    ds.tags = noisy.tags.clone();
    Ok(ds)
}

/// Standard initialization sized for `ds`.
pub fn init_for(cfg: &RunConfig, ds: &SequenceDataset) -> Result<NetworkParams> {
    let spec = ArchSpec::new(cfg.arch.kind, ds.n_u(), ds.n_y(), cfg.arch.layer_sizes.clone());
    init_standard(&spec, cfg.seed)
}

fn check_widths(theta: &NetworkParams, ds: &SequenceDataset) -> Result<()> {
    if theta.n_u != ds.n_u() {
        return Err(Error::shape("input width n_u (checkpoint vs dataset)", theta.n_u, ds.n_u()));
    }
    if theta.n_y != ds.n_y() {
        return Err(Error::shape("output width n_y (checkpoint vs dataset)", theta.n_y, ds.n_y()));
    }
    Ok(())
}

/// Mean channel Fit of `theta` on `seq`, simulated from rest, skipping the washout.
pub fn sequence_fit(theta: &NetworkParams, seq: &Sequence, washout: usize) -> Result<f64> {
    let y_hat = simulate_outputs(theta, &HiddenState::zeros(&theta.spec()), &seq.u)?;
    let fits = channel_fits(&seq.y[washout..], &y_hat[washout..])?;
    Ok(fits.iter().sum::<f64>() / fits.len() as f64)
}

/// Writes the dataset and its manifest into `out_dir`; returns the manifest path.
pub fn cmd_generate_data(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    if cfg.data.source != DataSource::Generate {
        return Err(Error::Config("generate-data needs data.source = \"generate\"".into()));
    }
    mkdir(out_dir)?;
    let ds = build_dataset(cfg)?;
    cfg.write_effective(out_dir)?;
    save_dataset(out_dir, &ds, Some(&cfg.config_hash()?))
}

/// What `train` reports in `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub tool_version: String,
    pub config_hash: String,
    pub mode: String,
    pub best_epoch: Option<usize>,
    pub no_stable_model: bool,
    /// δISS compliance of the selected parameters.
    pub diss_ok: bool,
    pub in_range_rate: f64,
    pub val_fit: Vec<f64>,
    pub val_mse: Option<f64>,
    pub final_train_loss: Option<f64>,
}

fn provenance_block(cfg: &RunConfig, epoch: Option<usize>, hash: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool_version".into(), json!(crate::VERSION));
    m.insert("config_hash".into(), json!(hash));
    m.insert("mode".into(), json!(cfg.mode));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("epoch".into(), json!(epoch));
    m
}

fn save_history(h: &TrainHistory, out_dir: &Path, stamp: &[String]) -> Result<()> {
    h.save_csv(out_dir.join("history.csv"), stamp)
}

/// Trains per `cfg` and writes `checkpoint.json` (selected parameters),
/// `final.json` (last iterate), `history.csv`, `summary.json` and `config.toml`.
///
/// On divergence the partial history is still written before the error returns.
pub fn cmd_train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainSummary> {
    mkdir(out_dir)?;
    cfg.write_effective(out_dir)?;
    let hash = cfg.config_hash()?;
    let stamp = cfg.stamp()?;
    let ds = build_dataset(cfg)?;
    let theta0 = init_for(cfg, &ds)?;
    let outcome = match train(&theta0, &ds, &cfg.train) {
        Ok(o) => o,
        Err(Error::Diverged { epoch, history }) => {
            save_history(&history, out_dir, &stamp)?;
            return Err(Error::Diverged { epoch, history });
        }
        Err(e) => return Err(e),
    };
    save_history(&outcome.history, out_dir, &stamp)?;

    let mut best = Checkpoint::new(outcome.theta_star.clone());
    best.seed = Some(cfg.seed);
    best.metadata = provenance_block(cfg, outcome.best_epoch, &hash);
    best.metadata.insert("no_stable_model".into(), json!(outcome.no_stable_model));
    best.save(out_dir.join("checkpoint.json"))?;
    let mut last = Checkpoint::new(outcome.theta_final.clone());
    last.seed = Some(cfg.seed);
    last.metadata = provenance_block(cfg, outcome.history.records.last().map(|r| r.epoch), &hash);
    last.save(out_dir.join("final.json"))?;

    let val_fit = ds
        .split(SplitTag::Val)
        .into_iter()
        .map(|s| sequence_fit(&outcome.theta_star, s, ds.washout))
        .collect::<Result<Vec<_>>>()?;
    let diss_ok = match outcome.theta_star.arch_kind() {
        ArchKind::Mgu => crate::stability::network_stability(&outcome.theta_star)?.diss_ok,
        ArchKind::Gru => false,
    };
    let summary = TrainSummary {
        tool_version: crate::VERSION.into(),
        config_hash: hash,
        mode: serde_json::to_value(cfg.mode)?.as_str().unwrap_or_default().to_string(),
        best_epoch: outcome.best_epoch,
        no_stable_model: outcome.no_stable_model,
        diss_ok,
        in_range_rate: outcome.history.in_range_rate(),
        val_fit,
        val_mse: outcome.history.best_val_mse,
        final_train_loss: outcome.history.records.last().map(|r| r.train_loss),
    };
    let path = out_dir.join("summary.json");
    write(&path, &serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    /// Index into the dataset.
    pub sequence: usize,
    pub fit: f64,
    pub rmse: f64,
    pub mse: f64,
    /// De-normalized metrics, when requested and available.
    pub fit_phys: Option<f64>,
    pub rmse_phys: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: SplitTag,
    pub rows: Vec<SequenceMetrics>,
    /// Washout-respecting MSE over the split, as the training loss defines it.
    pub mse: f64,
    pub rmse_pooled: f64,
    pub rmse_pooled_phys: Option<f64>,
}

/// Per-sequence Fit, RMSE and MSE of a checkpoint on one split, written as
/// CSV to `out`. Predictions start from rest and skip the washout.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    checkpoint: &Path,
    split: SplitTag,
    denormalize: bool,
    out: &Path,
) -> Result<EvalReport> {
    let theta = Checkpoint::load(checkpoint)?.params;
    let ds = build_dataset(cfg)?;
    check_widths(&theta, &ds)?;
    let w = ds.washout;
    let norm = ds.normalization.as_ref().filter(|_| denormalize);
    let idx = ds.split_indices(split);
    let mut rows = Vec::new();
    let (mut ys, mut yhs, mut ys_p, mut yhs_p) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &i in &idx {
        let seq = &ds.sequences[i];
        if seq.len() <= w {
            return Err(Error::Precondition(format!("sequence {i} is not longer than the washout")));
        }
        let y_hat = simulate_outputs(&theta, &HiddenState::zeros(&theta.spec()), &seq.u)?;
        let (y, yh) = (&seq.y[w..], &y_hat[w..]);
        let fits = channel_fits(y, yh)?;
        let rmse = rmse_pooled(y, yh)?;
        let (mut fit_phys, mut rmse_phys) = (None, None);
        if let Some(n) = norm {
            let yp: Vec<DVector<f64>> = y.iter().map(|v| n.denormalize_y(v)).collect();
            let yhp: Vec<DVector<f64>> = yh.iter().map(|v| n.denormalize_y(v)).collect();
            let f = channel_fits(&yp, &yhp)?;
            fit_phys = Some(f.iter().sum::<f64>() / f.len() as f64);
            rmse_phys = Some(rmse_pooled(&yp, &yhp)?);
            ys_p.extend(yp);
            yhs_p.extend(yhp);
        }
        rows.push(SequenceMetrics {
            sequence: i,
            fit: fits.iter().sum::<f64>() / fits.len() as f64,
            rmse,
            mse: rmse * rmse,
            fit_phys,
            rmse_phys,
        });
        ys.extend_from_slice(y);
        yhs.extend(yh.iter().cloned());
    }
    let batch = Batch::new(idx.iter().map(|&i| &ds.sequences[i]), w);
    let mse = if batch.is_empty() { f64::NAN } else { mse_loss(&theta, &batch)? };
    let report = EvalReport {
        split,
        mse,
        rmse_pooled: rmse_pooled(&ys, &yhs)?,
        rmse_pooled_phys: norm.map(|_| rmse_pooled(&ys_p, &yhs_p)).transpose()?,
        rows,
    };

    let mut s = String::new();
    for l in cfg.stamp()? {
        let _ = writeln!(s, "# {l}");
    }
    let _ = writeln!(s, "# checkpoint {}", checkpoint.display());
    let phys = norm.is_some();
    let _ = writeln!(s, "sequence,fit,rmse,mse{}", if phys { ",fit_phys,rmse_phys" } else { "" });
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.rows {
        let _ = write!(s, "{},{},{},{}", r.sequence, r.fit, r.rmse, r.mse);
        if phys {
            let _ = write!(s, ",{},{}", opt(r.fit_phys), opt(r.rmse_phys));
        }
        s.push('\n');
    }
    let _ = write!(s, "pooled,,{},{}", report.rmse_pooled, report.mse);
    if phys {
        let _ = write!(s, ",,{}", opt(report.rmse_pooled_phys));
    }
    s.push('\n');
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write(out, &s)?;
    Ok(report)
}

/// Builds the stability report for a checkpoint (with the empirical probe
/// when the network is compliant and probing is enabled) and writes it to `out`.
pub fn cmd_check_stability(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<StabilityReport> {
    let theta = Checkpoint::load(checkpoint)?.params;
    if theta.arch_kind() != ArchKind::Mgu {
        return Err(Error::UnsupportedArch(
            "stability certificates are defined for MGU networks only; this checkpoint is a GRU".into(),
        ));
    }
    let hash = Some(cfg.config_hash()?);
    let mut report = StabilityReport::build(&theta, None, hash)?;
    let st = &cfg.stability;
    if report.diss_ok && st.probe_trials > 0 {
        report.probe = Some(empirical_diss_probe(&theta, st.probe_trials, st.probe_horizon, cfg.seed)?);
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write(out, &report.to_json()?)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n_h: usize,
    pub arch: ArchKind,
    pub params: usize,
    /// Entries of the recurrent matrices only.
    pub recurrent_params: usize,
    pub ns_per_step: f64,
    /// `ns_per_step` divided by the slowest configuration in the sweep.
    pub normalized_time: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// MGU vs GRU parameter counts and inference timing for each hidden size,
/// written as CSV to `out`. Timings are wall-clock and tagged nondeterministic.
pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<Vec<CompareRow>> {
    let c = &cfg.compare;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inputs: Vec<DVector<f64>> =
        (0..c.steps).map(|_| DVector::from_fn(c.n_u, |_, _| rng.random_range(-1.0..1.0))).collect();
    let mut rows = Vec::new();
    for &n_h in &c.hidden_sizes {
        for kind in [ArchKind::Mgu, ArchKind::Gru] {
            let spec = ArchSpec::new(kind, c.n_u, c.n_y, vec![n_h]);
            let theta = init_standard(&spec, cfg.seed)?;
            let h0 = HiddenState::zeros(&spec);
            for _ in 0..10 {
                std::hint::black_box(simulate_outputs(&theta, &h0, &inputs)?);
            }
            let mut times = Vec::with_capacity(c.repetitions);
            for _ in 0..c.repetitions {
                let t = Instant::now();
                let y = simulate_outputs(&theta, &h0, &inputs)?;
                let dt = t.elapsed().as_nanos() as f64;
                std::hint::black_box(y);
                times.push(dt / c.steps as f64);
            }
            rows.push(CompareRow {
                n_h,
                arch: kind,
                params: param_count(&spec)?,
                recurrent_params: kind.gate_count() * n_h * n_h,
                ns_per_step: median(times),
                normalized_time: 0.0,
            });
        }
    }
    let slowest = rows.iter().map(|r| r.ns_per_step).fold(0.0, f64::max);
    for r in &mut rows {
        r.normalized_time = if slowest > 0.0 { r.ns_per_step / slowest } else { 1.0 };
    }

    let mut s = String::new();
    for l in cfg.stamp()? {
        let _ = writeln!(s, "# {l}");
    }
    let _ = writeln!(s, "# ns_per_step and normalized_time are wall-clock medians over {} runs", c.repetitions);
    let _ = writeln!(s, "n_h,arch,params,recurrent_params,ns_per_step,normalized_time,timing");
    for r in &rows {
        let arch = serde_json::to_value(r.arch)?;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},nondeterministic",
            r.n_h,
            arch.as_str().unwrap_or_default(),
            r.params,
            r.recurrent_params,
            r.ns_per_step,
            r.normalized_time
        );
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write(out, &s)?;
    Ok(rows)
}
