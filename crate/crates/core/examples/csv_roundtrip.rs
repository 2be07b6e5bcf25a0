//! Generates plant data, writes it as CSV plus a JSON manifest, reads it back
//! and checks that nothing changed.

use mgu::cli::{build_dataset, RunConfig};
use mgu::dataio::{load_dataset, save_dataset};

fn main() -> mgu::Result<()> {
    let cfg = RunConfig::load(None, &["data.snr=20".into()])?;
    let ds = build_dataset(&cfg)?;
    let dir = std::env::temp_dir().join("mgu-csv-roundtrip");
    let manifest = save_dataset(&dir, &ds, Some(&cfg.config_hash()?))?;
    let back = load_dataset(&manifest)?;

    let worst = ds
        .sequences
        .iter()
        .zip(&back.sequences)
        .flat_map(|(a, b)| a.u.iter().chain(&a.y).zip(b.u.iter().chain(&b.y)))
        .map(|(x, y)| (x - y).abs().max())
        .fold(0.0, f64::max);
    println!("wrote {} sequences to {}", ds.sequences.len(), manifest.display());
    println!("max abs difference after reload: {worst:e}");
    println!("splits preserved: {}", ds.tags == back.tags);
    println!("normalization preserved: {}", ds.normalization == back.normalization);
    Ok(())
}
