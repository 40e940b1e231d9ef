//! Command-line front end for the `adamuon` toolkit: `run`, `check`,
//! `sweep` and `plot`.

pub mod check;
pub mod config;
pub mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adamuon::harness::{run_experiment, run_many, write_csv, ExperimentConfig, RunResult};
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "adamuon",
    version,
    about = "Train toy problems with AdaMuon and its baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one experiment and write `<run_name>.csv` into the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant battery.
    Check {
        /// Shift every Quintic coefficient by this amount (fault injection).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        perturb_quintic: Option<f64>,
    },
    /// Run one config per learning rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated learning rates.
        #[arg(long, allow_hyphen_values = true)]
        lrs: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render loss curves from run CSVs as SVG.
    Plot {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
    },
}

/// Dispatches `cli`, returning the process exit status.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Run { config, out: dir } => cmd_run(&config, &dir, out),
        Command::Check { perturb_quintic } => Ok(cmd_check(perturb_quintic, out)),
        Command::Sweep {
            config,
            lrs,
            out: dir,
        } => cmd_sweep(&config, &lrs, &dir, out),
        Command::Plot { out: path, csvs } => cmd_plot(&csvs, &path, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn fmt_steps(s: Option<usize>) -> String {
    s.map_or_else(|| "none".to_string(), |s| s.to_string())
}

fn converged(config: &ExperimentConfig, r: &RunResult) -> bool {
    !r.diverged
        && r.final_loss.is_finite()
        && (config.threshold.is_none() || r.steps_to_threshold.is_some())
}

pub fn cmd_run(config_path: &Path, out_dir: &Path, out: &mut dyn Write) -> anyhow::Result<u8> {
    let config =
        config::load(config_path).with_context(|| format!("config {}", config_path.display()))?;
    let result = run_experiment(&config)?;
    ensure_dir(out_dir)?;
    let csv = out_dir.join(format!("{}.csv", config.run_name));
    write_csv(&result.records, &csv)?;
    writeln!(
        out,
        "{}: final_loss={} steps_to_threshold={} diverged={} csv={}",
        config.run_name,
        result.final_loss,
        fmt_steps(result.steps_to_threshold),
        result.diverged,
        csv.display()
    )?;
    Ok(if result.diverged {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    })
}

pub fn cmd_check(perturb_quintic: Option<f64>, out: &mut dyn Write) -> u8 {
    let battery = match perturb_quintic {
        Some(d) => check::Battery::with_quintic_offset(d),
        None => check::Battery::default(),
    };
    let lines = battery.run();
    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in &lines {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "{} passed, {} failed", lines.len() - failed, failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}

pub fn parse_lrs(text: &str) -> anyhow::Result<Vec<f64>> {
    let mut lrs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let lr: f64 = part
            .parse()
            .with_context(|| format!("bad learning rate `{part}`"))?;
        if !(lr.is_finite() && lr > 0.0) {
            bail!("learning rate must be finite and > 0, got `{part}`");
        }
        lrs.push(lr);
    }
    if lrs.is_empty() {
        bail!("empty learning-rate list");
    }
    lrs.sort_by(f64::total_cmp);
    lrs.dedup();
    Ok(lrs)
}

pub fn cmd_sweep(
    config_path: &Path,
    lrs: &str,
    out_dir: &Path,
    out: &mut dyn Write,
) -> anyhow::Result<u8> {
    let lrs = parse_lrs(lrs)?;
    let base =
        config::load(config_path).with_context(|| format!("config {}", config_path.display()))?;
    let configs: Vec<ExperimentConfig> = lrs
        .iter()
        .map(|&lr| {
            let mut c = base.clone();
            c.hyper.eta = lr;
            c.schedule.base_lr = lr;
            c.schedule.min_lr = c.schedule.min_lr.min(lr);
            c.run_name = format!("{}_lr{}", base.run_name, lr);
            c
        })
        .collect();
    let results = run_many(&configs);
    ensure_dir(out_dir)?;

    let mut summary = String::from("lr,final_loss,steps_to_threshold,diverged\n");
    let mut any_converged = false;
    for ((cfg, lr), result) in configs.iter().zip(&lrs).zip(results) {
        let r = result.with_context(|| format!("run at lr {lr}"))?;
        write_csv(&r.records, &out_dir.join(format!("{}.csv", cfg.run_name)))?;
        let steps = r
            .steps_to_threshold
            .map_or(String::new(), |s| s.to_string());
        summary.push_str(&format!("{lr},{},{steps},{}\n", r.final_loss, r.diverged));
        writeln!(
            out,
            "lr={lr}: final_loss={} steps_to_threshold={} diverged={}",
            r.final_loss,
            fmt_steps(r.steps_to_threshold),
            r.diverged
        )?;
        any_converged |= converged(cfg, &r);
    }
    let path = out_dir.join("sweep_summary.csv");
    fs::write(&path, summary).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(if any_converged { EXIT_OK } else { EXIT_ERROR })
}

pub fn cmd_plot(csvs: &[PathBuf], out_path: &Path, out: &mut dyn Write) -> anyhow::Result<u8> {
    let series = plot::load_series(csvs)?;
    let svg = plot::render_svg(&series)?;
    fs::write(out_path, svg).with_context(|| format!("cannot write {}", out_path.display()))?;
    writeln!(out, "wrote {}", out_path.display())?;
    Ok(EXIT_OK)
}
