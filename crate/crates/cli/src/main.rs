use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridfsw_core::analyzer::{read_mission_log, read_resource_log, read_vision_log, AnalyzerError, CoreStats};
use hybridfsw_core::bench::{run_bench, BenchError, BenchTransport};
use hybridfsw_core::mission::{run_mission, write_outputs, MissionConfig, MissionError};
use hybridfsw_core::{build_report, ReportInputs};

const EXIT_BAD_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hybridfsw",
    version,
    about = "Run seeded missions, analyze flight logs, benchmark the bridge"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a mission config in virtual time and write its logs.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze mission logs and write a JSON report.
    Analyze {
        vision: PathBuf,
        #[arg(long)]
        mission: Option<PathBuf>,
        #[arg(long)]
        resource: Option<PathBuf>,
        #[arg(long)]
        core_stats: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Histogram CSV; defaults to latency_hist.csv next to the report.
        #[arg(long)]
        hist: Option<PathBuf>,
        /// Active window in seconds relative to the first vision sample.
        #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
        window: Option<Vec<f64>>,
        #[arg(long)]
        circular_yaw: bool,
    },
    /// Time pose-frame round trips through a loopback pair.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        frames: u64,
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
        #[arg(long, default_value = "sim")]
        transport: BenchTransport,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn bad_input(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_BAD_INPUT,
            message: e.to_string(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

fn mission_failure(e: MissionError) -> Failure {
    match e {
        MissionError::BadConfig(_) => Failure::bad_input(e),
        MissionError::Io { .. } => Failure::bad_input(e),
        other => Failure::internal(other),
    }
}

fn analyzer_failure(e: AnalyzerError) -> Failure {
    Failure::bad_input(e)
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = MissionConfig::from_path(config).map_err(mission_failure)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let output = run_mission(&cfg).map_err(mission_failure)?;
    write_outputs(&output, &dir).map_err(Failure::internal)?;
    let c = &output.core_stats.commands;
    println!(
        "{}: {} vision samples, {} mission entries, {} resource samples, commands {}/{} succeeded",
        dir.display(),
        output.vision_log.len(),
        output.mission_log.len(),
        output.resource_log.len(),
        c.succeeded,
        c.sent
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    vision: &Path,
    mission: Option<PathBuf>,
    resource: Option<PathBuf>,
    core_stats: Option<PathBuf>,
    report: &Path,
    hist: Option<PathBuf>,
    window: Option<Vec<f64>>,
    circular_yaw: bool,
) -> Result<(), Failure> {
    let with_path = |p: &Path, e: AnalyzerError| match e {
        AnalyzerError::Io { .. } => analyzer_failure(e),
        other => Failure::bad_input(format!("{}: {other}", p.display())),
    };
    let vision_log = read_vision_log(vision).map_err(|e| with_path(vision, e))?;
    let mission_log = mission
        .as_deref()
        .map(|p| read_mission_log(p).map_err(|e| with_path(p, e)))
        .transpose()?;
    let resource_log = resource
        .as_deref()
        .map(|p| read_resource_log(p).map_err(|e| with_path(p, e)))
        .transpose()?;
    let stats = core_stats
        .as_deref()
        .map(|p| CoreStats::read(p).map_err(|e| with_path(p, e)))
        .transpose()?;
    let built = build_report(&ReportInputs {
        vision: Some(&vision_log),
        mission: mission_log.as_ref(),
        resources: resource_log.as_ref(),
        core_stats: stats.as_ref(),
        window: window.map(|w| (w[0], w[1])),
        circular_yaw,
    })
    .map_err(analyzer_failure)?;
    let hist = hist.unwrap_or_else(|| report.with_file_name("latency_hist.csv"));
    built.write(report, Some(&hist)).map_err(Failure::internal)?;
    println!("{}", built.summary_line());
    Ok(())
}

fn bench(frames: u64, rate: f64, transport: BenchTransport) -> Result<(), Failure> {
    let r = run_bench(frames, rate, transport).map_err(|e| match e {
        BenchError::NoFrames | BenchError::BadRate => Failure::bad_input(e),
        other => Failure::internal(other),
    })?;
    let m = r.rtt;
    println!(
        "{frames} frames over {}: {} returned, rtt ms mean {:.4} median {:.4} std {:.4} min {:.4} max {:.4} p95 {:.4} p99 {:.4}",
        r.transport, r.frames_returned, m.mean, m.median, m.std, m.min, m.max, m.p95, m.p99
    );
    println!(
        "offered {:.2} kbps, achieved {:.2} kbps ({} byte frames)",
        r.offered_kbps, r.achieved_kbps, r.frame_bytes
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Simulate { config, out } => simulate(&config, out),
        Cmd::Analyze {
            vision,
            mission,
            resource,
            core_stats,
            report,
            hist,
            window,
            circular_yaw,
        } => analyze(
            &vision,
            mission,
            resource,
            core_stats,
            &report,
            hist,
            window,
            circular_yaw,
        ),
        Cmd::Bench {
            frames,
            rate,
            transport,
        } => bench(frames, rate, transport),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
