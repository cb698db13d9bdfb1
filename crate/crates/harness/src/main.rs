//! Command-line front end for the verification catalog.
//!
//! Exit codes: 0 when everything requested passed, 1 when a check ran but
//! failed an assertion, 2 for usage, configuration, or i/o errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geometry::{Manifold, RotationGroup, Sphere};
use sde_engine::{integrate, BrownianDriver, TimeGrid};

use harness::checks::{self, flow_checks};
use harness::config::{ConfigError, ExperimentConfig, ModelKind, OutputFormat};
use harness::report::{report_from_json, summary_csv, CheckReport};

#[derive(Parser)]
#[command(
    name = "pathspace",
    about = "Stochastic-flow verification toolkit for compact state spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: CommonOpts,
}

#[derive(Args)]
struct CommonOpts {
    /// State space: sphere or group.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Number of time steps on the unit horizon.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Number of Monte Carlo paths (or seeds, where a check uses few).
    #[arg(long, global = true)]
    paths: Option<u64>,
    /// Number of conditional resamples per base path.
    #[arg(long, global = true)]
    resamples: Option<u32>,
    /// Master seed; the PATHSPACE_SEED environment variable overrides this.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports and path dumps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: json, csv, or both.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Multiplies statistical and upper tolerances (divides lower bounds).
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
    /// Key=value config file; defaults to ./pathspace.conf when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a few sample paths and write them as CSV.
    Simulate,
    /// Run one named check and write its report.
    Check { id: String },
    /// Run the whole catalog and write a summary table.
    Suite,
    /// Run a refinement ladder for a sweepable experiment.
    Sweep { id: String },
    /// Re-emit stored reports from their JSON files.
    Report { ids: Vec<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli.opts) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Check { id } => check(&cfg, &id),
        Command::Suite => suite(&cfg),
        Command::Sweep { id } => sweep(&cfg, &id),
        Command::Report { ids } => reemit(&cfg, &ids),
    };
    match outcome {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Defaults, then the config file, then command-line flags, then the
/// environment; validated last so every source is subject to the caps.
fn resolve_config(opts: &CommonOpts) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => {
            let local = Path::new("pathspace.conf");
            if local.is_file() {
                ExperimentConfig::from_file(local)?
            } else {
                ExperimentConfig::default()
            }
        }
    };
    if let Some(m) = &opts.model {
        cfg.model = Some(
            ModelKind::parse(m).ok_or_else(|| ConfigError(format!("invalid model: {m:?}")))?,
        );
    }
    if let Some(s) = opts.steps {
        cfg.steps = Some(s);
    }
    if let Some(p) = opts.paths {
        cfg.paths = Some(p);
    }
    if let Some(r) = opts.resamples {
        cfg.resamples = Some(r);
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &opts.format {
        cfg.format =
            OutputFormat::parse(f).ok_or_else(|| ConfigError(format!("invalid format: {f:?}")))?;
    }
    if let Some(t) = opts.tol_scale {
        cfg.tol_scale = t;
    }
    cfg.apply_env()?;
    cfg.validate()?;
    Ok(cfg)
}

fn check(cfg: &ExperimentConfig, id: &str) -> Result<bool, String> {
    let report = checks::run_check(cfg, id).map_err(|e| e.to_string())?;
    persist(&report, cfg)?;
    println!("{}", report.summary_line());
    Ok(report.verdict())
}

fn persist(report: &CheckReport, cfg: &ExperimentConfig) -> Result<(), String> {
    report
        .write(&cfg.out, cfg.format)
        .map_err(|e| format!("cannot store the {} report under {}: {e}", report.check_id, cfg.out.display()))?;
    Ok(())
}

fn suite(cfg: &ExperimentConfig) -> Result<bool, String> {
    let mut reports = Vec::with_capacity(checks::CHECK_IDS.len());
    let mut all = true;
    for id in checks::CHECK_IDS {
        let report = checks::run_check(cfg, id).map_err(|e| e.to_string())?;
        persist(&report, cfg)?;
        println!("{}", report.summary_line());
        all &= report.verdict();
        reports.push(report);
    }
    let summary_path = cfg.out.join("suite_summary.csv");
    std::fs::write(&summary_path, summary_csv(&reports))
        .map_err(|e| format!("cannot write {}: {e}", summary_path.display()))?;
    println!("summary table: {}", summary_path.display());
    Ok(all)
}

fn sweep(cfg: &ExperimentConfig, id: &str) -> Result<bool, String> {
    let report = match id {
        "heat-kernel-moment" | "heat-weak-order" => flow_checks::heat_weak_order(cfg).0,
        "bismut-covariant" | "group-intertwining" | "intertwine-group" | "pullback-consistency" => {
            checks::run_check(cfg, id).map_err(|e| e.to_string())?
        }
        other => {
            return Err(format!(
                "check {other:?} has no refinement ladder; sweepable: \
                 heat-kernel-moment, bismut-covariant, group-intertwining, pullback-consistency"
            ));
        }
    };
    for note in &report.notes {
        println!("{note}");
    }
    persist(&report, cfg)?;
    println!("{}", report.summary_line());
    Ok(report.verdict())
}

fn reemit(cfg: &ExperimentConfig, ids: &[String]) -> Result<bool, String> {
    let files: Vec<PathBuf> = if ids.is_empty() {
        let mut found = Vec::new();
        let entries = std::fs::read_dir(&cfg.out)
            .map_err(|e| format!("cannot list {}: {e}", cfg.out.display()))?;
        for entry in entries {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|x| x == "json") {
                found.push(path);
            }
        }
        found.sort();
        if found.is_empty() {
            return Err(format!("no stored reports under {}", cfg.out.display()));
        }
        found
    } else {
        ids.iter().map(|id| cfg.out.join(format!("{id}.json"))).collect()
    };

    let mut all = true;
    for path in files {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
        let report: CheckReport =
            report_from_json(&value).map_err(|e| format!("{}: {e}", path.display()))?;
        persist(&report, cfg)?;
        println!("{}", report.summary_line());
        all &= report.verdict();
    }
    Ok(all)
}

fn push_row<'a>(text: &mut String, p: u64, k: usize, t: f64, coords: impl Iterator<Item = &'a f64>) {
    let joined = coords.map(|c| format!("{c:.16e}")).collect::<Vec<_>>().join(",");
    text.push_str(&format!("{p},{k},{t:.6},{joined}\n"));
}

fn simulate(cfg: &ExperimentConfig) -> Result<bool, String> {
    let steps = cfg.steps_or(1000);
    let paths = cfg.paths_or(4);
    let grid = TimeGrid::unit(steps);
    let model = cfg.model.unwrap_or(ModelKind::Sphere);

    let mut text = String::from("path,node,t,coords\n");
    for p in 0..paths {
        let driver = BrownianDriver::sample(grid, cfg.seed, p);
        match model {
            ModelKind::Sphere => {
                let path = integrate::<Sphere>(&Sphere::base_point(), &driver);
                for (k, x) in path.points.iter().enumerate() {
                    push_row(&mut text, p, k, grid.node_time(k), x.iter());
                }
            }
            ModelKind::Group => {
                let path = integrate::<RotationGroup>(&RotationGroup::base_point(), &driver);
                for (k, x) in path.points.iter().enumerate() {
                    push_row(&mut text, p, k, grid.node_time(k), x.iter());
                }
            }
        }
    }

    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| format!("cannot create {}: {e}", cfg.out.display()))?;
    let file = cfg.out.join(format!("paths_{}.csv", model.name()));
    std::fs::write(&file, text).map_err(|e| format!("cannot write {}: {e}", file.display()))?;
    println!("wrote {paths} paths at {steps} steps to {}", file.display());
    Ok(true)
}
