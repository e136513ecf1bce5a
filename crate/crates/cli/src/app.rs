use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands;
use crate::config::{parse_config, ResolvedConfig};
use crate::error::CliError;
use crate::format::to_json;

#[derive(Debug, Parser)]
#[command(name = "ottokz", version, about = "Quantum Otto cycles with a transverse-Ising working medium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one cycle; writes run.json and modes.csv.
    Run(Common),
    /// Sweep tau2 or h2 as set in [sweep]; writes sweep.csv.
    Sweep(Common),
    /// Fit the Kibble-Zurek exponent to a tau2 sweep; writes fit.json.
    Fit(FitArgs),
    /// Evaluate the efficiency bound; writes bound.json.
    Bound(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "OTTOKZ_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sweep CSV to fit (default: OUT/sweep.csv).
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Fail with exit code 4 when |fitted - predicted| exceeds --tol.
    #[arg(long = "assert", requires = "tol")]
    pub check: bool,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    /// SHA-256 of the resolved configuration.
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

pub fn config_hash(cfg: &ResolvedConfig) -> String {
    format!("{:x}", Sha256::digest(cfg.canonical().as_bytes()))
}

pub fn load(path: &Path) -> Result<ResolvedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
        log::info!("wrote {}", path.display());
        self.written.push(path.display().to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, config_path: &Path, cfg: &ResolvedConfig) -> Result<(), CliError> {
        self.write(&format!("{command}.resolved.cfg"), cfg.canonical().as_bytes())?;
        let manifest = RunManifest {
            command: command.into(),
            config: config_path.display().to_string(),
            config_hash: config_hash(cfg),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.written.clone(),
        };
        self.write(&format!("{command}.manifest.json"), to_json(&manifest)?.as_bytes())
    }
}

/// Runs one parsed invocation, writing its outputs and printing the JSON
/// summary (if any) to stdout.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load(&c.config)?;
            let (record, report) = commands::with_jobs(c.jobs, || commands::run(&cfg))??;
            let json = to_json(&report)?;
            let mut out = Outputs::new(&c.out)?;
            out.write("run.json", json.as_bytes())?;
            out.write("modes.csv", &commands::modes_csv(&record)?)?;
            out.finish("run", &c.config, &cfg)?;
            print!("{json}");
        }
        Command::Sweep(c) => {
            let cfg = load(&c.config)?;
            let (axis, rows) = commands::sweep(&cfg, c.jobs)?;
            let failed = rows.iter().filter(|r| r.totals.is_err()).count();
            let mut out = Outputs::new(&c.out)?;
            out.write("sweep.csv", &commands::sweep_csv(axis, &rows)?)?;
            out.finish("sweep", &c.config, &cfg)?;
            if failed == rows.len() {
                return Err(CliError::Simulation(ottokz_core::Error::InvalidParameter {
                    name: "sweep",
                    reason: "every grid point failed; see the error column".into(),
                }));
            }
            if failed > 0 {
                log::warn!("{failed} of {} sweep points failed; see the error column", rows.len());
            }
        }
        Command::Fit(a) => {
            let c = &a.common;
            let cfg = load(&c.config)?;
            let csv_path = a.csv.clone().unwrap_or_else(|| c.out.join("sweep.csv"));
            let data = fs::read(&csv_path).map_err(|source| CliError::Io {
                path: csv_path.clone(),
                source,
            })?;
            let points = commands::read_sweep_points(&data)?;
            let report = commands::with_jobs(c.jobs, || commands::fit(&cfg, &points))??;
            let json = to_json(&report)?;
            let mut out = Outputs::new(&c.out)?;
            out.write("fit.json", json.as_bytes())?;
            out.finish("fit", &c.config, &cfg)?;
            print!("{json}");
            if let (true, Some(tol)) = (a.check, a.tol) {
                if !(report.deviation <= tol) {
                    return Err(CliError::AssertFailed {
                        fitted: report.fit.exponent,
                        predicted: report.fit.predicted,
                        deviation: report.deviation,
                        tol,
                    });
                }
            }
        }
        Command::Bound(c) => {
            let cfg = load(&c.config)?;
            let bound = commands::bound(&cfg)?;
            let json = to_json(&bound)?;
            let mut out = Outputs::new(&c.out)?;
            out.write("bound.json", json.as_bytes())?;
            out.finish("bound", &c.config, &cfg)?;
            print!("{json}");
        }
    }
    Ok(())
}
