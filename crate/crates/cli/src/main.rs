//! `eigenkit`: batch front-end over the core library.
//!
//! Exit status: 0 success, 2 invalid configuration, 3 precision could not
//! be certified, 4 internal invariant violated.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use eigenkit_core::padic::GUARD_DIGITS;
use eigenkit_core::ErrorClass;
use serde::Serialize;

use commands::{CommandError, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "eigenkit", version, about = "p-adic spectral computations in batch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML or key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    e: Option<u32>,
    /// Precision m in p-adic digits.
    #[arg(long, global = true)]
    prec: Option<u32>,
    #[arg(long, global = true)]
    g: Option<usize>,
    /// Truncation degree D.
    #[arg(long, global = true)]
    deg: Option<u32>,
    /// Truncation degree of affinoid bases.
    #[arg(long = "deg-a", global = true)]
    deg_a: Option<u32>,
    /// Algebraic weight, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    weight: Option<String>,
    /// Slope cut (integer or a/b).
    #[arg(long, global = true)]
    h: Option<String>,
    /// Fredholm truncation N.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    side: Option<String>,
    #[arg(long, global = true)]
    rank: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    out: OutputFormat,
    #[arg(long = "out-file", global = true)]
    out_file: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Kernel of the BGG operators on the truncated induction module.
    Bgg,
    /// Fredholm series and Newton slopes of the δ-product model.
    Slopes,
    /// Slope factorization, projector and eigensystems.
    Factor,
    /// Eigenfamily lift over a one-variable base.
    Family,
    /// Čech exactness and glueing on the Laurent cover.
    Cech,
    /// Character evaluation and universal-character bounds.
    Weights,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bgg => "bgg",
            Command::Slopes => "slopes",
            Command::Factor => "factor",
            Command::Family => "family",
            Command::Cech => "cech",
            Command::Weights => "weights",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Certificates {
    working_precision_pi: i64,
    certified_pi: i64,
    guard_digits: u32,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    payload: serde_json::Value,
    certificates: Certificates,
}

fn resolve(cli: &Cli) -> Result<RunConfig, config::ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config::ConfigError(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| config::ConfigError(format!("--set expects KEY=VALUE, got {kv}")))?;
        cfg.set(k, v)?;
    }
    let flags: [(&str, Option<String>); 11] = [
        ("p", cli.p.map(|x| x.to_string())),
        ("e", cli.e.map(|x| x.to_string())),
        ("prec", cli.prec.map(|x| x.to_string())),
        ("g", cli.g.map(|x| x.to_string())),
        ("deg", cli.deg.map(|x| x.to_string())),
        ("deg_a", cli.deg_a.map(|x| x.to_string())),
        ("weight", cli.weight.clone()),
        ("h", cli.h.clone()),
        ("n", cli.n.map(|x| x.to_string())),
        ("side", cli.side.clone()),
        ("rank", cli.rank.map(|x| x.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CommandError> {
    match cmd {
        Command::Bgg => commands::bgg(cfg),
        Command::Slopes => commands::slopes(cfg),
        Command::Factor => commands::factor(cfg),
        Command::Family => commands::family(cfg),
        Command::Cech => commands::cech(cfg),
        Command::Weights => commands::weights(cfg),
    }
}

fn render(cmd: Command, cfg: &RunConfig, out: Outcome, format: OutputFormat) -> Result<String, CommandError> {
    let cap = cfg.e as i64 * cfg.prec as i64;
    if out.certified_pi > cap {
        return Err(CommandError {
            class: ErrorClass::Invariant,
            message: format!("payload claims {} π-digits beyond the cap {cap}", out.certified_pi),
        });
    }
    match format {
        OutputFormat::Json => {
            let env = Envelope {
                command: cmd.name(),
                version: env!("CARGO_PKG_VERSION"),
                config: cfg,
                payload: out.payload,
                certificates: Certificates {
                    working_precision_pi: cap,
                    certified_pi: out.certified_pi,
                    guard_digits: GUARD_DIGITS,
                },
            };
            let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| CommandError { class: ErrorClass::Invariant, message: e.to_string() };
            w.write_record(&out.header).map_err(fail)?;
            for row in &out.rows {
                w.write_record(row).map_err(fail)?;
            }
            let bytes = w.into_inner().map_err(|e| CommandError { class: ErrorClass::Invariant, message: e.to_string() })?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Precision => 3,
        ErrorClass::Invariant => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cmd = cli.command;
    let result = resolve(&cli)
        .map_err(CommandError::from)
        .and_then(|cfg| run(cmd, &cfg).and_then(|out| render(cmd, &cfg, out, cli.out)));
    let elapsed = start.elapsed();
    let code = match result {
        Ok(text) => {
            let written = match &cli.out_file {
                Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            exit_code(e.class)
        }
    };
    eprintln!("eigenkit {}: wall time {:.3} s", cmd.name(), elapsed.as_secs_f64());
    ExitCode::from(code)
}
