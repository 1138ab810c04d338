//! `rtsched`: analyse, simulate and cross-check real-time control models.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rtsched_core::io::{check, parse_model_file, render_report, CheckConfig, LoadError, ReportFormat};
use rtsched_core::sim::{simulate, JitterMode, Phasing, SimConfig};
use rtsched_core::{analyze_system, SystemModel, Time};

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "rtsched", version, about = "Worst-case response-time analysis for run-to-completion real-time models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute worst-case response times and the feasibility verdict.
    Analyze {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the discrete-event simulator and summarise observed responses.
    Simulate {
        model: PathBuf,
        /// Simulated time; releases up to and including it are generated.
        #[arg(long, value_parser = positive)]
        duration: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PhasingArg::Critical)]
        phasing: PhasingArg,
        #[arg(long, value_enum, default_value_t = JitterArg::Max)]
        jitter: JitterArg,
        /// Write the event trace as CSV; `-` for standard output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare analysed bounds with simulated responses.
    Check {
        model: PathBuf,
        /// Simulation runs: one at the critical instant, the rest random.
        #[arg(long, default_value_t = 20, value_parser = positive_runs)]
        runs: u32,
        /// Simulated time per run [default: 10 x longest outer period]
        #[arg(long, value_parser = positive)]
        duration: Option<u64>,
        /// Seed of the first run; run k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true, default_value_t = 0)]
        lower_bounds_by: u64,
    },
}

fn positive(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_runs(s: &str) -> Result<u32, String> {
    let v = positive(s)?;
    u32::try_from(v).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhasingArg {
    Critical,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum JitterArg {
    Max,
    Random,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn other(message: impl ToString) -> Self {
        Failure { code: EXIT_FAILURE, message: message.to_string() }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = if matches!(e, LoadError::Io { .. }) { EXIT_NO_INPUT } else { EXIT_FAILURE };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Analyze { model, format, out } => analyze(&model, format, out.as_deref()),
        Command::Simulate { model, duration, seed, phasing, jitter, trace } => {
            let cfg = SimConfig {
                duration: Time::new(duration),
                seed,
                phasing: match phasing {
                    PhasingArg::Critical => Phasing::CriticalInstant,
                    PhasingArg::Random => Phasing::RandomOffsets,
                },
                jitter: match jitter {
                    JitterArg::Max => JitterMode::MaxAlways,
                    JitterArg::Random => JitterMode::RandomPerRelease,
                },
            };
            run_simulation(&model, &cfg, trace.as_deref())
        }
        Command::Check { model, runs, duration, seed, lower_bounds_by } => {
            let cfg = CheckConfig { runs, duration: duration.map(Time::new), seed, lower_bounds_by };
            run_check(&model, &cfg)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<SystemModel, Failure> {
    Ok(parse_model_file(path)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::other(format!("cannot write `{}`: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Failure::other),
    }
}

fn analyze(path: &Path, format: Format, out: Option<&Path>) -> Result<u8, Failure> {
    let model = load(path)?;
    let report = analyze_system(&model).map_err(Failure::other)?;
    let format = match format {
        Format::Text => ReportFormat::Text,
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    emit(&render_report(&report, format), out)?;
    if format == ReportFormat::Csv {
        for d in &report.diagnostics {
            eprintln!("note: {d}");
        }
    }
    Ok(if report.system_feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn run_simulation(path: &Path, cfg: &SimConfig, trace_out: Option<&Path>) -> Result<u8, Failure> {
    let model = load(path)?;
    let trace = simulate(&model, cfg).map_err(Failure::other)?;

    let mut summary = String::from("action  max_observed  responses\n");
    let mut ids: Vec<_> = model.actions.iter().map(|a| (&a.transaction, &a.id)).collect();
    ids.sort_by(|x, y| {
        SystemModel::id_order(x.0.as_str(), y.0.as_str()).then_with(|| SystemModel::id_order(x.1.as_str(), y.1.as_str()))
    });
    for (_, id) in ids {
        let count = trace.responses().filter(|(a, _, _)| *a == id).count();
        let max = trace.max_observed(id.as_str()).map(|t| t.to_string()).unwrap_or_else(|_| "-".into());
        let _ = writeln!(summary, "{id}  {max}  {count}");
    }

    match trace_out {
        Some(p) if p.as_os_str() == "-" => {
            let stdout = io::stdout();
            trace.write_csv(stdout.lock()).map_err(Failure::other)?;
            eprint!("{summary}");
        }
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| Failure::other(format!("cannot write `{}`: {e}", p.display())))?;
            trace.write_csv(io::BufWriter::new(file)).map_err(Failure::other)?;
            emit(&summary, None)?;
        }
        None => emit(&summary, None)?,
    }
    Ok(EXIT_OK)
}

fn run_check(path: &Path, cfg: &CheckConfig) -> Result<u8, Failure> {
    let model = load(path)?;
    let outcome = check(&model, cfg).map_err(Failure::other)?;
    let mut out = String::new();
    for note in &outcome.notes {
        let _ = writeln!(out, "note: {note}");
    }
    if outcome.runs > 0 {
        let _ = writeln!(out, "{} runs of {} ticks, seeds from {}", outcome.runs, outcome.duration, cfg.seed);
        let _ = writeln!(out, "action  observed  bound");
        for (id, seen, bound) in &outcome.observed {
            let show = |t: &Option<Time>| t.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{id}  {}  {}", show(seen), show(bound));
        }
    }
    for c in &outcome.counterexamples {
        let _ = writeln!(out, "VIOLATION {c}");
    }
    let _ = writeln!(out, "{}", if outcome.passed() { "check: pass" } else { "check: FAIL" });
    emit(&out, None)?;
    Ok(if outcome.passed() { EXIT_OK } else { EXIT_VIOLATION })
}
