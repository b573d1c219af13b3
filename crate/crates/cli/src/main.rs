use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lowshot_bench::{emit_report, read_pool, run_trials, synth_generate, write_pool, BenchConfig, ReportFormat, SynthConfig};
use lowshot_core::baselines::TrajectoryPoint;
use lowshot_core::{estimate, exact_fscore, AcisConfig, Alpha, Method};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lowshot", version, about = "Label-efficient F-score estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method over repeated trials on a synthetic pool.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Overrides the master seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic pool with ground-truth labels.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the F-score of a labeled pool file with one method.
    Estimate {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value = "acis")]
        method: Method,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the labeling service.
    Serve {
        #[arg(long, env = "LOWSHOT_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "LOWSHOT_DATA_DIR", default_value = "sessions")]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Serialize)]
struct EstimateOutput {
    method: Method,
    budget: usize,
    alpha: f64,
    seed: u64,
    g: f64,
    var: Option<f64>,
    labels_used: usize,
    exact: f64,
    trajectory: Vec<TrajectoryPoint>,
}

/// Accepts either a bare synthetic config or a bench config with a `synth` section.
fn load_synth(path: &Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let section = match value.get("synth") {
        Some(s) => s.clone(),
        None => value,
    };
    Ok(serde_json::from_value(section)?)
}

fn bench(config: &Path, out: &Path, format: ReportFormat, seed: Option<u64>) -> Result<()> {
    let mut cfg = BenchConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let pool = Arc::new(synth_generate(&cfg.synth)?);
    log::info!(
        "pool of {} items, {} predicted positive",
        pool.len(),
        pool.positive_predictions()
    );
    let reports = run_trials(&pool, &cfg.trial_spec()?)?;
    emit_report(&reports, format, out)?;
    log::info!("wrote {} rows to {}", reports.len(), out.display());
    Ok(())
}

fn run_estimate(pool: &Path, method: Method, budget: usize, alpha: f64, seed: u64) -> Result<()> {
    let pool = read_pool(pool).with_context(|| format!("reading {}", pool.display()))?;
    if !pool.has_oracle() {
        bail!("estimate needs a label for every pool item");
    }
    let oracle = pool.oracle_labels()?;
    let alpha = Alpha::new(alpha)?;
    let exact = exact_fscore(&oracle, &pool.predicted(), alpha)?;
    let config = AcisConfig {
        alpha,
        budget,
        seed,
        ..AcisConfig::default()
    };
    let pool = Arc::new(pool);
    let r = estimate(method, &pool, &oracle, &config)?;
    let out = EstimateOutput {
        method,
        budget,
        alpha: alpha.get(),
        seed,
        g: r.g_hat,
        var: r.variance,
        labels_used: r.labels_used.len(),
        exact,
        trajectory: r.trajectory,
    };
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    Ok(())
}

async fn serve(host: &str, port: u16, data_dir: PathBuf) -> Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .with_context(|| format!("binding {host}:{port}"))?;
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    };
    lowshot_service::serve(listener, data_dir, shutdown).await?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Bench {
            config,
            out,
            format,
            seed,
        } => bench(&config, &out, format, seed),
        Command::Gen { config, out } => {
            let pool = synth_generate(&load_synth(&config)?)?;
            write_pool(&pool, &out).with_context(|| format!("writing {}", out.display()))?;
            log::info!("wrote {} items to {}", pool.len(), out.display());
            Ok(())
        }
        Command::Estimate {
            pool,
            method,
            budget,
            alpha,
            seed,
        } => run_estimate(&pool, method, budget, alpha, seed),
        Command::Serve { port, data_dir, host } => tokio::runtime::Runtime::new()?.block_on(serve(&host, port, data_dir)),
    }
}
