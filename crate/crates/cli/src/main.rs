//! `basisc`: check, run, lower and evaluate basis-oriented quantum programs,
//! and drive the example corpus end to end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use basisc_core::drivers::{run_driver, DriverConfig, DriverReport};
use basisc_core::error::{Error, ErrorCode, TypeError};
use basisc_core::host::{evaluate, lower_expression, lower_kernel};
use basisc_core::linalg::Matrix;
use basisc_core::post::{
    as_bin_frac, cfrac_convergents, gcd, gf2_solve_nullspace, grover_iterations, lcm, modinv, BitString, Rational,
};
use basisc_core::sim::{run, Plan, RunResult, SimOptions};
use basisc_core::typecheck::{compile, Bindings};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "basisc", version, about = "Toolchain for a basis-oriented quantum programming language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, monomorphize and type check a program.
    Check {
        file: PathBuf,
        #[command(flatten)]
        cfg: Config,
    },
    /// Simulate the entry kernel and print the histogram.
    Run {
        file: PathBuf,
        #[command(flatten)]
        cfg: Config,
    },
    /// Print the unitary of a reversible expression or kernel as JSON.
    Lower {
        /// An expression, or a kernel name when `--file` is given.
        target: String,
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        cfg: Config,
    },
    /// Evaluate a classical function on a bit string.
    Eval {
        file: PathBuf,
        function: String,
        input: String,
        #[command(flatten)]
        cfg: Config,
    },
    /// Classical post-processing helpers.
    Post {
        #[command(subcommand)]
        op: PostOp,
    },
    /// Run a built-in algorithm driver over the example corpus.
    Driver {
        name: String,
        /// Program to drive instead of the built-in example.
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        cfg: Config,
    },
}

#[derive(Subcommand)]
enum PostOp {
    /// Bit string as a binary fraction.
    BinFrac { bits: String },
    /// Continued-fraction convergents of `p/q`.
    Convergents { x: String },
    /// Hidden string orthogonal to the given rows.
    Nullspace { rows: Vec<String> },
    /// Grover iteration count for `answers` marked items among 2^qubits.
    GroverIterations { qubits: u32, answers: u64 },
    Gcd { a: i64, b: i64 },
    Lcm { a: i64, b: i64 },
    Modinv { a: i64, m: i64 },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Config {
    /// Entry kernel name.
    #[arg(long)]
    entry: Option<String>,
    /// Dimension binding `NAME=INT`.
    #[arg(long = "set", value_name = "NAME=INT")]
    set: Vec<String>,
    /// Capture binding `NAME=BITS` or `NAME=FUNCTION`.
    #[arg(long = "arg", value_name = "NAME=VALUE")]
    arg: Vec<String>,
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    max_qubits: usize,
    /// JSON array of phase angles in radians.
    #[arg(long, value_name = "FILE")]
    phases: Option<PathBuf>,
    /// Output format; `json` by default, `text` for drivers.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Config {
    fn bindings(&self) -> Result<Bindings, Error> {
        let mut b = Bindings::default();
        for kv in &self.set {
            let (k, v) = split_kv(kv)?;
            let v: i64 = v
                .parse()
                .map_err(|_| Error::Type(TypeError::new(ErrorCode::DimMismatch, format!("`{v}` is not an integer"))))?;
            b = b.dim(k, v);
        }
        for kv in &self.arg {
            let (k, v) = split_kv(kv)?;
            b = b.arg(k, v);
        }
        if let Some(path) = &self.phases {
            let text = read(path)?;
            let phases: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| Error::Io(format!("{}: expected a JSON array of radians: {e}", path.display())))?;
            b = b.phases(phases);
        }
        Ok(b)
    }

    fn opts(&self) -> SimOptions {
        SimOptions { max_qubits: self.max_qubits, tol: self.tol }
    }
}

fn split_kv(kv: &str) -> Result<(&str, &str), Error> {
    kv.split_once('=').ok_or_else(|| Error::Io(format!("expected NAME=VALUE, got `{kv}`")))
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<String, Error> {
    match cmd {
        Command::Check { file, cfg } => {
            let c = compile(&read(&file)?, cfg.entry.as_deref(), &cfg.bindings()?)?;
            Ok(match cfg.format.unwrap_or(Format::Json) {
                Format::Json => json_line(&serde_json::json!({"ok": true, "entry": c.mono.entry})),
                Format::Text => format!("ok: {}\n", c.mono.entry),
            })
        }
        Command::Run { file, cfg } => {
            let c = compile(&read(&file)?, cfg.entry.as_deref(), &cfg.bindings()?)?;
            let plan = Plan::new(&c, cfg.opts())?;
            let r = run(&plan, cfg.shots, cfg.seed)?;
            Ok(match cfg.format.unwrap_or(Format::Json) {
                Format::Json => json_line(&r),
                Format::Text => histogram_text(&r),
            })
        }
        Command::Lower { target, file, cfg } => {
            let m = lower(&target, file.as_deref(), &cfg)?;
            Ok(match cfg.format.unwrap_or(Format::Json) {
                Format::Json => json_line(&MatrixJson::from(&m)),
                Format::Text => matrix_text(&m),
            })
        }
        Command::Eval { file, function, input, cfg } => {
            let out = evaluate(&read(&file)?, &function, &input, &cfg.bindings()?)?;
            Ok(format!("{out}\n"))
        }
        Command::Post { op } => post(op).map(|s| format!("{s}\n")),
        Command::Driver { name, file, cfg } => {
            let source = file.as_deref().map(read).transpose()?;
            let dc = DriverConfig {
                bindings: cfg.bindings()?,
                seed: cfg.seed,
                shots: cfg.shots,
                opts: cfg.opts(),
                source,
            };
            let rep = run_driver(&name, &dc)?;
            Ok(match cfg.format.unwrap_or(Format::Text) {
                Format::Json => json_line(&rep),
                Format::Text => driver_text(&rep),
            })
        }
    }
}

fn json_line<T: Serialize>(v: &T) -> String {
    format!("{}\n", serde_json::to_string(v).expect("serializable"))
}

fn histogram_text(r: &RunResult) -> String {
    let width = r.counts.keys().map(String::len).max().unwrap_or(0).max(7);
    let mut s = format!("{:<width$}  {:>8}  {:>8}\n", "outcome", "count", "freq");
    for (k, c) in &r.counts {
        s.push_str(&format!("{k:<width$}  {c:>8}  {:>8.4}\n", *c as f64 / r.shots as f64));
    }
    s.push_str(&format!("shots {} seed {}\n", r.shots, r.seed));
    s
}

fn driver_text(r: &DriverReport) -> String {
    let mut s = format!("{}\n", r.answer);
    if !r.counts.is_empty() {
        for (k, c) in &r.counts {
            s.push_str(&format!("  {k}  {c}\n"));
        }
    }
    s
}

/// Row-major complex pairs plus the qubit count.
#[derive(Serialize)]
struct MatrixJson {
    qubits: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        let matrix = (0..m.dim).map(|r| (0..m.dim).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect()).collect();
        MatrixJson { qubits: m.dim.trailing_zeros() as usize, matrix }
    }
}

fn matrix_text(m: &Matrix) -> String {
    let mut s = String::new();
    for r in 0..m.dim {
        let row: Vec<String> = (0..m.dim).map(|c| format!("{:.6}", m.get(r, c))).collect();
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    s
}

fn lower(target: &str, file: Option<&Path>, cfg: &Config) -> Result<Matrix, Error> {
    match file {
        Some(path) => lower_kernel(&read(path)?, target, &cfg.bindings()?, cfg.opts()),
        None => lower_expression(target, cfg.opts()),
    }
}

fn post(op: PostOp) -> Result<String, Error> {
    let bits = |s: &str| -> Result<BitString, Error> { Ok(s.parse()?) };
    Ok(match op {
        PostOp::BinFrac { bits: b } => as_bin_frac(&bits(&b)?).to_string(),
        PostOp::Convergents { x } => {
            let r: Rational = x.parse().map_err(|_| Error::Io(format!("`{x}` is not a fraction p/q")))?;
            cfrac_convergents(r).iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        }
        PostOp::Nullspace { rows } => {
            let rows = rows.iter().map(|r| bits(r)).collect::<Result<Vec<_>, _>>()?;
            gf2_solve_nullspace(&rows)?.to_string()
        }
        PostOp::GroverIterations { qubits, answers } => grover_iterations(qubits, answers)?.to_string(),
        PostOp::Gcd { a, b } => gcd(a, b).to_string(),
        PostOp::Lcm { a, b } => lcm(a, b).to_string(),
        PostOp::Modinv { a, m } => modinv(a, m)?.to_string(),
    })
}
