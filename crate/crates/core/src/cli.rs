//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for bad input or configuration, 3 when a run
//! breaks a safety invariant (collision, red-light crossing), 1 otherwise.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::controller::{ControlMode, ScheduleRecord};
use crate::flow_model::{fit_speed_density, read_samples, FlowModelError};
use crate::metrics::{self, ComparisonRow, MetricsError, MetricsReport};
use crate::road::LaneId;
use crate::sensing::{read_tracks, realtime_flow, CounterState, MeasurementWindow, SectorLayout, SensingError};
use crate::simulator::{run, RunOutput, ScenarioConfig, SimError};

#[derive(Debug, Parser)]
#[command(name = "adaptive-signal", version, about = "Two-ring intersection simulator with adaptive signal timing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a speed-density line and write the flow-model parameters.
    Calibrate {
        /// `density_vpkm,speed_kph` rows.
        samples: PathBuf,
        /// Parameter file to write; printed only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario and write its trace, logs and report.
    Simulate {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<ControlMode>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a track file through the sector counter.
    Count {
        tracks: PathBuf,
        /// Length of each counting sector, m.
        #[arg(long, default_value_t = 15.0)]
        sector_length: f64,
        #[arg(long, default_value_t = 5.0)]
        frame_rate: f64,
    },
    /// Tabulate time saved between matching fixed and adaptive reports.
    Compare {
        fixed: PathBuf,
        adaptive: PathBuf,
        /// CSV file to write; printed only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both scenario grids under both controllers.
    Sweep {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the simulated span of every scenario, s.
        #[arg(long)]
        duration: Option<f64>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    FlowModel(#[from] FlowModelError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(e) if e.is_runtime_breach() => 3,
            CliError::Sim(SimError::Io(_)) | CliError::Io(_) | CliError::File { .. } => 1,
            CliError::FlowModel(FlowModelError::Io(_)) | CliError::Sensing(SensingError::Io(_)) => 1,
            CliError::Metrics(MetricsError::Io(_)) => 1,
            _ => 2,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        // output piped into something that stopped reading
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute<W: Write>(command: Command, out: &mut W) -> Result<(), CliError> {
    match command {
        Command::Calibrate { samples, out: file } => cmd_calibrate(&samples, file.as_deref(), out),
        Command::Simulate { scenario, seed, mode, out: dir } => {
            let config = load_scenario(scenario.as_deref(), seed, mode)?;
            let report = cmd_simulate(&config, &dir)?;
            writeln!(out, "{report}")?;
            Ok(())
        }
        Command::Count { tracks, sector_length, frame_rate } => cmd_count(&tracks, sector_length, frame_rate, out),
        Command::Compare { fixed, adaptive, out: file } => cmd_compare(&fixed, &adaptive, file.as_deref(), out),
        Command::Sweep { out: dir, seed, duration } => cmd_sweep(&dir, seed, duration, out),
    }
}

pub fn cmd_calibrate<W: Write>(samples: &Path, file: Option<&Path>, out: &mut W) -> Result<(), CliError> {
    let params = fit_speed_density(&read_samples(open(samples)?)?)?;
    if let Some(path) = file {
        let mut w = create(path)?;
        write!(w, "{params}")?;
        w.flush()?;
    }
    write!(out, "{params}")?;
    Ok(())
}

/// Reads a scenario file (defaults when `None`) and applies overrides.
pub fn load_scenario(
    path: Option<&Path>,
    seed: Option<u64>,
    mode: Option<ControlMode>,
) -> Result<ScenarioConfig, CliError> {
    let mut config = match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|source| CliError::File { path: p.to_path_buf(), source })?
            .parse::<ScenarioConfig>()?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    config.validate()?;
    Ok(config)
}

/// Runs a scenario and writes its artifacts into `dir`.
pub fn cmd_simulate(config: &ScenarioConfig, dir: &Path) -> Result<MetricsReport, CliError> {
    let output = run(config)?;
    let report = MetricsReport::from_run(&output)?;
    write_run(&output, &report, dir)?;
    Ok(report)
}

fn write_run(output: &RunOutput, report: &MetricsReport, dir: &Path) -> Result<(), CliError> {
    mkdir(dir)?;
    let mut w = create(&dir.join("scenario.txt"))?;
    write!(w, "{}", output.config)?;
    w.flush()?;

    let mut w = create(&dir.join("trace.csv"))?;
    output.trace.write_csv(&mut w)?;
    w.flush()?;

    let mut w = create(&dir.join("schedule.csv"))?;
    writeln!(w, "{}", ScheduleRecord::CSV_HEADER)?;
    for r in &output.schedule_log {
        writeln!(w, "{}", r.to_csv_row())?;
    }
    w.flush()?;

    let mut w = create(&dir.join("windows.csv"))?;
    writeln!(w, "{}", MeasurementWindow::CSV_HEADER)?;
    for win in &output.windows {
        writeln!(w, "{}", win.to_csv_row())?;
    }
    w.flush()?;

    let mut w = create(&dir.join("report.json"))?;
    metrics::write_reports(&mut w, std::slice::from_ref(report))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_count<W: Write>(tracks: &Path, sector_length: f64, frame_rate: f64, out: &mut W) -> Result<(), CliError> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(SensingError::InvalidCamera("frame rate must be positive").into());
    }
    let mut obs = read_tracks(open(tracks)?)?;
    // stable: keeps file order within a frame
    obs.sort_by_key(|o| (o.lane_id, o.frame_index));

    let mut total = 0;
    for lane in LaneId::ALL {
        let lane_obs: Vec<_> = obs.iter().filter(|o| o.lane_id == lane).copied().collect();
        if lane_obs.is_empty() {
            continue;
        }
        let layout = SectorLayout::at_stop_line(lane, sector_length)?;
        let mut counter = CounterState::new(frame_rate);
        for frame in lane_obs.chunk_by(|a, b| a.frame_index == b.frame_index) {
            counter.update(&layout, frame, frame[0].frame_index);
        }
        writeln!(out, "lane {lane}: count {}", counter.count)?;
        total += counter.count;
    }

    let first = obs.iter().map(|o| o.frame_index).min().unwrap_or(0);
    let last = obs.iter().map(|o| o.frame_index).max().unwrap_or(0);
    let span = (last - first) as f64 / frame_rate;
    writeln!(out, "total count {total}")?;
    match realtime_flow(total, 0.0, span) {
        Ok(flow) => writeln!(out, "flow {flow} veh/s over {span} s")?,
        Err(_) => writeln!(out, "flow undefined: file spans {span} s")?,
    }
    Ok(())
}

pub fn cmd_compare<W: Write>(
    fixed: &Path,
    adaptive: &Path,
    file: Option<&Path>,
    out: &mut W,
) -> Result<(), CliError> {
    let f = metrics::read_reports(open(fixed)?)?;
    let a = metrics::read_reports(open(adaptive)?)?;
    let rows = metrics::comparison_rows(&f, &a)?;
    if let Some(path) = file {
        let mut w = create(path)?;
        metrics::write_comparison_csv(&mut w, &rows)?;
        w.flush()?;
    }
    metrics::write_comparison_csv(out, &rows)?;
    Ok(())
}

/// File-system friendly form of a scenario label.
pub fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect();
    s.trim_matches('-').to_string()
}

pub fn cmd_sweep<W: Write>(dir: &Path, seed: Option<u64>, duration: Option<f64>, out: &mut W) -> Result<(), CliError> {
    let grids = [("equal_flow", ScenarioConfig::equal_flow_grid()), ("flow_ratio", ScenarioConfig::split_flow_grid())];
    let mut jobs = Vec::new();
    for (_, grid) in &grids {
        for base in grid {
            for mode in [ControlMode::Fixed, ControlMode::Adaptive] {
                let mut c = base.clone();
                c.mode = mode;
                if let Some(s) = seed {
                    c.seed = s;
                }
                if let Some(d) = duration {
                    c.duration = d;
                }
                c.validate()?;
                jobs.push(c);
            }
        }
    }
    mkdir(dir)?;
    let reports: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|c| cmd_simulate(c, &dir.join(format!("{}-{}", slug(&c.label), c.mode))))
        .collect::<Result<_, _>>()?;

    let (fixed, adaptive): (Vec<_>, Vec<_>) = reports.into_iter().partition(|r| r.mode == ControlMode::Fixed);
    for (name, reps) in [("reports_fixed.json", &fixed), ("reports_adaptive.json", &adaptive)] {
        let mut w = create(&dir.join(name))?;
        metrics::write_reports(&mut w, reps)?;
        writeln!(w)?;
        w.flush()?;
    }
    let rows = metrics::comparison_rows(&fixed, &adaptive)?;
    let mut offset = 0;
    for (name, grid) in &grids {
        let part: &[ComparisonRow] = &rows[offset..offset + grid.len()];
        offset += grid.len();
        let mut w = create(&dir.join(format!("{name}.csv")))?;
        metrics::write_comparison_csv(&mut w, part)?;
        w.flush()?;
    }
    metrics::write_comparison_csv(out, &rows)?;
    Ok(())
}
