//! Command-line front end: `scan` writes spectra, `report` prints the trap
//! and cooling table.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{rad_to_mhz, AtomicBasis, ModeCount, RunConfig};
use crate::cooling;
use crate::error::Error;
use crate::spectroscopy::{scan, PeakReport, ScanGrid};
use crate::trap::{enumerate_wells, wells_csv};

#[derive(Debug, Parser)]
#[command(name = "cavity-rabi", version, about = "Vacuum-Rabi transmission spectra of a trapped atom in a two-mode cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the averaged transmission spectrum.
    Scan(ScanArgs),
    /// Print trap frequencies, localization widths and critical numbers.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReductionArg {
    TwoLevel,
    ZeemanFull,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: output.dir from the config, else ./out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// MHz
    #[arg(long, allow_hyphen_values = true)]
    pub scan_min: Option<f64>,
    /// MHz
    #[arg(long, allow_hyphen_values = true)]
    pub scan_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub temperature_fraction: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, value_enum)]
    pub reduction: Option<ReductionArg>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub modes: Option<u8>,
    /// Add the closed-form linear-response column
    #[arg(long)]
    pub oracle: bool,
    /// Worker threads [default: logical cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub temperature_fraction: Option<f64>,
    /// Machine-readable output only
    #[arg(long)]
    pub csv: bool,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => 1,
        Error::Io(_) => 3,
        Error::Solver { .. } | Error::Contract(_) | Error::DimensionLimit { .. } | Error::DimensionMismatch { .. } => 2,
    }
}

impl ScanArgs {
    /// Config file with every flag applied on top.
    pub fn resolve(&self) -> crate::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(v) = self.scan_min {
            cfg.scan.min_mhz = v;
        }
        if let Some(v) = self.scan_max {
            cfg.scan.max_mhz = v;
        }
        if let Some(v) = self.points {
            cfg.scan.points = v;
        }
        if let Some(v) = self.temperature_fraction {
            cfg.system.temperature_fraction = v;
        }
        if let Some(v) = self.threshold {
            cfg.ensemble.threshold = v;
        }
        if let Some(v) = self.nmax {
            cfg.reduction.photon_cutoff = v;
        }
        if let Some(r) = self.reduction {
            cfg.reduction.atomic_basis = match r {
                ReductionArg::TwoLevel => AtomicBasis::TwoLevel,
                ReductionArg::ZeemanFull => AtomicBasis::ZeemanFull,
            };
        }
        if let Some(m) = self.modes {
            cfg.reduction.mode_count = ModeCount::try_from(m).map_err(Error::Config)?;
        }
        if self.oracle {
            cfg.output.oracle = true;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.to_string_lossy().into_owned();
        }
        Ok(cfg)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> crate::Result<Value> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(json!({
        "path": path.to_string_lossy(),
        "sha256": sha256_hex(contents.as_bytes()),
        "bytes": contents.len(),
    }))
}

fn ms(since: Instant) -> f64 {
    (since.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    match jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        _ => Ok(f()),
    }
}

pub fn run_scan(args: &ScanArgs, out: &mut dyn Write) -> crate::Result<()> {
    let start = Instant::now();
    let cfg = args.resolve()?;
    let params = cfg.validate()?;
    let grid = ScanGrid::from_config(&cfg.scan)?;
    let census = enumerate_wells(&params, cfg.ensemble.threshold)?;
    let setup_ms = ms(start);

    let solve_start = Instant::now();
    let spectrum = with_jobs(args.jobs, || {
        scan(&params, &cfg.reduction, &grid, &cfg.ensemble, cfg.output.oracle)
    })??;
    let solve_ms = ms(solve_start);

    let write_start = Instant::now();
    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    let spectrum_entry = write_artifact(&dir, "spectrum.csv", &spectrum.to_csv())?;
    let wells_entry = write_artifact(&dir, "wells.csv", &wells_csv(&census))?;

    let mut summary = Map::new();
    summary.insert("wells_averaged".into(), json!(spectrum.well_indices));
    summary.insert("wells_selected".into(), json!(census.iter().filter(|w| w.selected).count()));
    summary.insert("wells_total".into(), json!(census.len()));
    match spectrum.peaks()? {
        PeakReport::Resolved { positions, heights, central_minimum } => {
            summary.insert("peak_positions_mhz".into(), json!(positions.map(rad_to_mhz)));
            summary.insert("peak_heights".into(), json!(heights));
            summary.insert("central_minimum".into(), json!(central_minimum));
        }
        PeakReport::Unresolved { maxima } => {
            summary.insert("unresolved_maxima".into(), json!(maxima));
        }
    }
    if let Some(diff) = spectrum.max_oracle_difference() {
        summary.insert("max_oracle_difference".into(), json!(diff));
    }
    let write_ms = ms(write_start);

    let manifest = json!({
        "config_echo": serde_json::to_value(&cfg).expect("config serializes"),
        "version": env!("CARGO_PKG_VERSION"),
        "params_digest": spectrum.params_digest,
        "timings_ms": { "setup": setup_ms, "solve": solve_ms, "write": write_ms, "total": ms(start) },
        "outputs": { "spectrum.csv": spectrum_entry, "wells.csv": wells_entry },
        "summary": summary,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(dir.join("manifest.json"), text)?;

    writeln!(out, "wrote {} ({} points, {} wells averaged)", dir.join("spectrum.csv").display(), grid.len(), spectrum.well_indices.len())?;
    if let Some(diff) = spectrum.max_oracle_difference() {
        writeln!(out, "max |t1_mean - t1_oracle| = {diff:.3e}")?;
    }
    match spectrum.peaks()? {
        PeakReport::Resolved { positions, heights, central_minimum } => writeln!(
            out,
            "peaks at {:.2} / {:.2} MHz, heights {:.4} / {:.4}, central minimum {:.3e}",
            rad_to_mhz(positions[0]),
            rad_to_mhz(positions[1]),
            heights[0],
            heights[1],
            central_minimum
        )?,
        PeakReport::Unresolved { maxima } => writeln!(out, "spectrum unresolved ({maxima} interior maxima)")?,
    }
    Ok(())
}

pub fn run_report(args: &ReportArgs, out: &mut dyn Write) -> crate::Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(v) = args.temperature_fraction {
        cfg.system.temperature_fraction = v;
    }
    let params = cfg.validate()?;
    let table = cooling::report(&params)?;
    if args.csv {
        out.write_all(table.to_csv().as_bytes())?;
    } else {
        writeln!(out, "Trap, cooling and coupling parameters (k_B T = {} |U0|)", params.temperature_fraction)?;
        out.write_all(table.to_text().as_bytes())?;
    }
    Ok(())
}

/// Parses `args` and runs the chosen command; returns the exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Scan(a) => run_scan(a, out),
        Command::Report(a) => run_report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
