//! Subcommands end to end: the library entry points plus the `mgu` binary.

use std::path::Path;
use std::process::Command;

use mgu::cli::{cmd_check_stability, cmd_compare, cmd_evaluate, cmd_generate_data, cmd_train, RunConfig};
use mgu::dataio::{load_dataset, DatasetManifest, SplitTag};
use mgu::netcore::{ArchKind, ArchSpec, Checkpoint, NetworkParams};
use mgu::stability::StabilityReport;
use tempfile::tempdir;

fn cfg(overrides: &[&str]) -> RunConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(None, &o).unwrap()
}

fn mgu(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mgu")).args(args).current_dir(cwd).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn save_zero(path: &Path, kind: ArchKind) {
    Checkpoint::new(NetworkParams::zeros(&ArchSpec::new(kind, 1, 1, vec![4])).unwrap()).save(path).unwrap();
}

#[test]
fn generate_data_is_reproducible() {
    let dir = tempdir().unwrap();
    let c = cfg(&[]);
    let m1 = cmd_generate_data(&c, &dir.path().join("a")).unwrap();
    let m2 = cmd_generate_data(&c, &dir.path().join("b")).unwrap();
    let ds = load_dataset(&m1).unwrap();
    assert_eq!(ds.sequences.len(), 10);
    assert!(ds.sequences.iter().all(|s| s.len() == 250));
    assert_eq!(ds.split(SplitTag::Train).len(), 8);
    assert_eq!(ds.split(SplitTag::Val).len(), 2);
    for f in ["sequences.csv", "manifest.json"] {
        let a = std::fs::read(m1.with_file_name(f)).unwrap();
        let b = std::fs::read(m2.with_file_name(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn noise_settings_are_recorded() {
    let dir = tempdir().unwrap();
    let m = cmd_generate_data(&cfg(&["data.snr=10", "data.noise_seed=3"]), dir.path()).unwrap();
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(m).unwrap()).unwrap();
    assert_eq!(manifest.provenance.snr, Some(10.0));
    assert_eq!(manifest.provenance.noise_seed, Some(3));
    assert!(manifest.config_hash.is_some());
}

#[test]
fn train_then_evaluate_reproduces_the_training_loss() {
    let dir = tempdir().unwrap();
    let c = cfg(&["mode=\"MSE\"", "train.e_max=4", "train.xi=0.0"]);
    let summary = cmd_train(&c, dir.path()).unwrap();
    for f in ["checkpoint.json", "final.json", "history.csv", "summary.json", "config.toml"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(history.starts_with("# mgu "));
    assert_eq!(history.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);

    let out = dir.path().join("metrics.csv");
    let r = cmd_evaluate(&c, &dir.path().join("final.json"), SplitTag::Train, true, &out).unwrap();
    assert_eq!(r.rows.len(), 8);
    let loss = summary.final_train_loss.unwrap();
    assert!((r.mse - loss).abs() <= 1e-10, "evaluate {} vs history {loss}", r.mse);
    assert!(r.rows.iter().all(|m| m.fit_phys.is_some() && m.rmse_phys.is_some()));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("sequence,fit,rmse,mse,fit_phys,rmse_phys")));
    assert!(text.lines().last().unwrap().starts_with("pooled"));
}

#[test]
fn stability_mode_selects_a_compliant_checkpoint() {
    let dir = tempdir().unwrap();
    let c = cfg(&["mode=\"PGM+WS\"", "train.e_max=5"]);
    let summary = cmd_train(&c, dir.path()).unwrap();
    assert!(!summary.no_stable_model);
    assert!(summary.diss_ok);
    let r = cmd_check_stability(&c, &dir.path().join("checkpoint.json"), &dir.path().join("st.json")).unwrap();
    assert!(r.diss_ok);
    assert!(r.probe.as_ref().unwrap().max_violation <= 0.0);
}

#[test]
fn training_reads_a_generated_manifest() {
    let dir = tempdir().unwrap();
    let m = cmd_generate_data(&cfg(&[]), &dir.path().join("data")).unwrap();
    let c = cfg(&["data.source=\"manifest\"", &format!("data.path={:?}", m.to_str().unwrap()), "train.e_max=2"]);
    let s = cmd_train(&c, &dir.path().join("run")).unwrap();
    assert_eq!(s.val_fit.len(), 2);
}

#[test]
fn zero_network_certificate() {
    let dir = tempdir().unwrap();
    let ck = dir.path().join("zero.json");
    save_zero(&ck, ArchKind::Mgu);
    let out = dir.path().join("report.json");
    let r = cmd_check_stability(&cfg(&["stability.probe_trials=3", "stability.probe_horizon=50"]), &ck, &out).unwrap();
    assert_eq!(r.layers[0].diss_lhs, 0.5);
    assert!(r.diss_ok && r.iss_ok && r.schur_stable);
    assert_eq!(r.network_gain, Some(0.0));
    let back = StabilityReport::validate_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn gru_has_no_certificate() {
    let dir = tempdir().unwrap();
    let ck = dir.path().join("gru.json");
    save_zero(&ck, ArchKind::Gru);
    let err = cmd_check_stability(&cfg(&[]), &ck, &dir.path().join("r.json")).unwrap_err();
    assert!(matches!(err, mgu::Error::UnsupportedArch(_)));
}

#[test]
fn compare_lists_both_cells_per_size() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("compare.csv");
    let rows = cmd_compare(&cfg(&["compare.steps=20", "compare.repetitions=100"]), &out).unwrap();
    assert_eq!(rows.len(), 12);
    let at7: Vec<usize> = rows.iter().filter(|r| r.n_h == 7).map(|r| r.params).collect();
    assert_eq!(at7, vec![134, 197]);
    for pair in rows.chunks(2) {
        assert_eq!(3 * pair[0].recurrent_params, 2 * pair[1].recurrent_params);
    }
    assert!(std::fs::read_to_string(out).unwrap().contains("nondeterministic"));
}

#[test]
fn binary_exit_codes() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    save_zero(&p.join("zero.json"), ArchKind::Mgu);
    save_zero(&p.join("gru.json"), ArchKind::Gru);
    let mut bad = Checkpoint::new(NetworkParams::zeros(&ArchSpec::new(ArchKind::Mgu, 1, 1, vec![2])).unwrap());
    bad.params.mgu_layers_mut().unwrap()[0].r_c[(0, 0)] = 3.0;
    bad.save(p.join("bad.json")).unwrap();

    let cases: &[(&[&str], i32)] = &[
        (&["check-stability", "--checkpoint", "zero.json", "--set", "stability.probe_trials=0"], 0),
        (&["check-stability", "--checkpoint", "missing.json"], 1),
        (&["check-stability", "--checkpoint", "zero.json", "--set", "bogus.key=1"], 2),
        (&["generate-data", "--set", "data.mprs.hold_min=0"], 3),
        (&["check-stability", "--checkpoint", "bad.json"], 4),
        (&["check-stability", "--checkpoint", "gru.json"], 6),
    ];
    for (args, code) in cases {
        let (got, _, err) = mgu(args, p);
        assert_eq!(got, *code, "{args:?}: {err}");
        if *code != 0 {
            assert!(err.starts_with("error: ") || *code == 4, "{args:?}: {err}");
        }
    }
}

#[test]
fn binary_trains_several_seeds() {
    let dir = tempdir().unwrap();
    let (code, stdout, err) = mgu(
        &["train", "--out", "runs", "--seeds", "1,2", "--set", "train.e_max=2", "--set", "mode=\"MSE\""],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("config_hash"));
    for s in [1, 2] {
        let cfg = std::fs::read_to_string(dir.path().join(format!("runs/seed-{s}/config.toml"))).unwrap();
        assert!(cfg.contains(&format!("seed = {s}")));
    }
}
