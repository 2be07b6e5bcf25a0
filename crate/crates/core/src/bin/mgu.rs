use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgu::cli::{
    cmd_check_stability, cmd_compare, cmd_evaluate, cmd_generate_data, cmd_train, exit_code, RunConfig,
    EXIT_NOT_COMPLIANT,
};
use mgu::dataio::SplitTag;

#[derive(Parser)]
#[command(name = "mgu", version, about = "MGU system identification with stability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.lr=0.002` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the benchmark plant and write sequences.csv + manifest.json.
    GenerateData {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, default_value = "data")]
        out: PathBuf,
    },
    /// Train and write checkpoint, history and summary.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, default_value = "run")]
        out: PathBuf,
        /// Repeat for each seed, writing into `<out>/seed-<n>`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Per-sequence Fit and RMSE of a checkpoint.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "val", value_parser = parse_split)]
        split: SplitTag,
        /// Also report metrics in physical units.
        #[arg(long)]
        denormalize: bool,
        #[arg(short, long, default_value = "metrics.csv")]
        out: PathBuf,
    },
    /// Stability report of a checkpoint; exits 0 only if δISS-compliant.
    CheckStability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(short, long, default_value = "stability.json")]
        out: PathBuf,
    },
    /// MGU vs GRU parameter counts and inference timing.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, default_value = "compare.csv")]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<SplitTag, String> {
    match s {
        "train" => Ok(SplitTag::Train),
        "val" => Ok(SplitTag::Val),
        "test" => Ok(SplitTag::Test),
        _ => Err(format!("unknown split '{s}' (train, val or test)")),
    }
}

fn config(c: &Common) -> mgu::Result<RunConfig> {
    RunConfig::load(c.config.as_deref(), &c.overrides)
}

fn run(cli: Cli) -> mgu::Result<i32> {
    match cli.command {
        Command::GenerateData { common, out } => {
            let manifest = cmd_generate_data(&config(&common)?, &out)?;
            println!("{}", manifest.display());
            Ok(0)
        }
        Command::Train { common, out, seeds } => {
            let base = config(&common)?;
            let runs: Vec<(RunConfig, PathBuf)> = if seeds.is_empty() {
                vec![(base, out)]
            } else {
                let mut v = Vec::new();
                for s in seeds {
                    let mut o = common.overrides.clone();
                    o.push(format!("seed={s}"));
                    v.push((RunConfig::load(common.config.as_deref(), &o)?, out.join(format!("seed-{s}"))));
                }
                v
            };
            let mut code = 0;
            for (cfg, dir) in runs {
                let summary = cmd_train(&cfg, &dir)?;
                println!("{}", serde_json::to_string_pretty(&summary)?);
                if summary.no_stable_model {
                    eprintln!("{}: no δISS-compliant model was found; checkpoint holds the best unconstrained one", dir.display());
                    code = EXIT_NOT_COMPLIANT;
                }
            }
            Ok(code)
        }
        Command::Evaluate { common, checkpoint, split, denormalize, out } => {
            let r = cmd_evaluate(&config(&common)?, &checkpoint, split, denormalize, &out)?;
            for row in &r.rows {
                println!("sequence {}: fit {:.3} rmse {:.6}", row.sequence, row.fit, row.rmse);
            }
            println!("pooled rmse {:.6}, mse {:.6}", r.rmse_pooled, r.mse);
            Ok(0)
        }
        Command::CheckStability { common, checkpoint, out } => {
            let r = cmd_check_stability(&config(&common)?, &checkpoint, &out)?;
            for (l, layer) in r.layers.iter().enumerate() {
                println!("layer {}: alpha_delta {:.6} iss_ok {} diss_ok {}", l + 1, layer.diss_lhs, layer.iss_ok, layer.diss_ok);
            }
            Ok(if r.diss_ok { 0 } else { EXIT_NOT_COMPLIANT })
        }
        Command::Compare { common, out } => {
            for r in cmd_compare(&config(&common)?, &out)? {
                println!("n_h {:>2} {:?}: {} params, {:.1} ns/step", r.n_h, r.arch, r.params, r.ns_per_step);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
