//! `dobinski`: command-line front end for the toolkit.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 domain error, 3 exponent
//! cap or precision limit.

mod commands;
mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dobinski::ErrorKind;
use serde::Serialize;
use serde_json::json;

/// Version tag carried by every JSON report.
const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "dobinski", version, about = "Exact computations around the Dobinski product identity")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Global {
    /// Certified significant decimal digits (at least 10).
    #[arg(long, global = true, default_value_t = 30)]
    precision: u32,
    /// Largest radius exponent that is materialized (at least 2^10).
    #[arg(long, global = true, default_value_t = 1 << 20)]
    exponent_cap: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Include wall-clock timings in JSON output.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Digits, run lengths, nearest dyadics and exact distances.
    Expand(commands::ExpandArgs),
    /// Partial products of the tangent product with tail and target.
    Product(commands::ProductArgs),
    /// Membership in the Dobinski set, or in one stage of a limsup set.
    Classify(commands::ClassifyArgs),
    /// Measure, overlap and covering sum of one stage family.
    Cover(commands::CoverArgs),
    /// Convergence verdicts and critical exponents.
    Series(commands::SeriesArgs),
    /// Quasi-independence ratios of the uniform grid families.
    Quasi(commands::QuasiArgs),
    /// Willow-set schedules, trees and Frostman audits.
    #[command(subcommand)]
    Willow(commands::WillowCommand),
    /// Box-counting dimension estimates of stage families.
    Boxdim(commands::BoxdimArgs),
    /// Bell numbers by recurrence or by the Dobinski series.
    Bell(commands::BellArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Expand(_) => "expand",
            Command::Product(_) => "product",
            Command::Classify(_) => "classify",
            Command::Cover(_) => "cover",
            Command::Series(_) => "series",
            Command::Quasi(_) => "quasi",
            Command::Willow(w) => w.name(),
            Command::Boxdim(_) => "boxdim",
            Command::Bell(_) => "bell",
        }
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Parse => 1,
        ErrorKind::Domain => 2,
        ErrorKind::Resource => 3,
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = &cli.global;
    if g.precision < 10 {
        return usage("--precision must be at least 10");
    }
    if g.exponent_cap < 1 << 10 {
        return usage("--exponent-cap must be at least 1024");
    }
    let ctx = commands::Context {
        digits: g.precision,
        limits: dobinski::limsup::Limits {
            exponent_cap: g.exponent_cap,
            ..Default::default()
        },
        seed: g.seed,
    };
    let start = Instant::now();
    let report = match commands::run(&cli.command, &ctx) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(e.kind()));
        }
    };
    let elapsed = start.elapsed();

    let mut sink: Box<dyn Write> = match &g.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => return usage(&format!("cannot create {}: {e}", path.display())),
        },
        None => Box::new(io::stdout().lock()),
    };
    let written = match g.format {
        Format::Csv => report::write_csv(&report, &mut sink),
        Format::Json => {
            let mut doc = json!({
                "schema": format!("dobinski.{}/{}", cli.command.name(), SCHEMA_VERSION),
                "command": cli.command.name(),
                "config": { "global": g, "args": &cli.command },
                "results": report.results(),
            });
            if g.timings {
                doc["timings"] = json!({ "elapsed_ms": elapsed.as_secs_f64() * 1e3 });
            }
            let text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
            writeln!(sink, "{text}")
        }
    };
    match written.and_then(|_| sink.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => usage(&format!("write failed: {e}")),
    }
}
