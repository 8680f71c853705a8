use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iaware::cli::{self, RunConfig};
use iaware::metrics::OspaParams;

/// Like `println!`, but a closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "iaware", version, about = "Interaction-aware LMB tracking: simulate, track, evaluate, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and measurement scans.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the filter on a scan file.
    Track {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a tracks file against ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        tracks: PathBuf,
        /// Optional run config supplying the metrics.* keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Baseline vs interaction-aware filter on one shared scan stream.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(config: &Path, seed: Option<u64>) -> iaware::Result<RunConfig> {
    let cfg = RunConfig::from_file(config)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> iaware::Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let dir = out_dir(out, Some(&cfg));
            let s = cli::cmd_simulate(&cfg, &dir)?;
            say!(
                "frames={} targets={} target_frames={} measurements={}",
                s.frames, s.targets, s.target_frames, s.measurements
            );
        }
        Command::Track {
            config,
            scans,
            out,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let dir = out_dir(out, Some(&cfg));
            let r = cli::cmd_track(&cfg, &scans, &dir)?;
            let estimates: usize = r.estimates.frames.values().map(Vec::len).sum();
            say!("frames={} estimates={estimates}", r.diagnostics.len());
        }
        Command::Evaluate {
            truth,
            tracks,
            config,
            out,
        } => {
            let cfg = config.map(|c| load(&c, None)).transpose()?;
            let params = cfg.as_ref().map_or_else(OspaParams::default, |c| c.metrics);
            let dir = out_dir(out, cfg.as_ref());
            let rows = cli::cmd_evaluate(&truth, &tracks, &params, &dir)?;
            let m = cli::MetricMeans::of(&rows);
            say!(
                "frames={} mean_ospa={:.4} mean_ospa2={:.4} mean_abs_card_error={:.4}",
                rows.len(),
                m.ospa_total,
                m.ospa2_total,
                m.abs_card_error
            );
        }
        Command::Compare { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let dir = out_dir(out, Some(&cfg));
            let s = cli::cmd_compare(&cfg, &dir)?;
            say!(
                "mean_ospa baseline={:.4} interaction={:.4} difference={:.4}",
                s.baseline.ospa_total,
                s.interaction.ospa_total,
                s.ospa_difference()
            );
            say!(
                "mean_abs_card_error baseline={:.4} interaction={:.4} difference={:.4}",
                s.baseline.abs_card_error,
                s.interaction.abs_card_error,
                s.baseline.abs_card_error - s.interaction.abs_card_error
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IAWARE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
