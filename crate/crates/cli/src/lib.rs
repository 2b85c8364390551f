//! Command-line front end: `svd`, `schmidt` and `verify` over matrix and
//! state files.
//!
//! Every command runs to completion into buffers before anything is
//! printed, so a failing run never leaves partial output on stdout.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasesvd::{
    emit_result, format_real, parse_matrix, parse_state_with_dims, schmidt_decompose, svd,
    ComplexMatrix, Decomposition, Error, OutputFormat, PhaseConvention, SvdFactorization,
    DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Relative threshold used by `verify`.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "phasesvd",
    version,
    about = "Phase-consistent complex SVD and Schmidt decomposition"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a matrix file as U D V^dagger.
    Svd(CommonArgs),
    /// Schmidt-decompose a bipartite state file.
    Schmidt {
        #[command(flatten)]
        common: CommonArgs,
        /// State dimensions as AxB, for files without a header line.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<(usize, usize)>,
    },
    /// Run all three conventions on a matrix file and check the reconstructions.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ConventionArg::U)]
    pub convention: ConventionArg,
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = OutputArg::Text)]
    pub output: OutputArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    U,
    V,
    Split,
}

impl From<ConventionArg> for PhaseConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::U => PhaseConvention::AllInU,
            ConventionArg::V => PhaseConvention::AllInV,
            ConventionArg::Split => PhaseConvention::HalfHalf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Text,
    Json,
}

impl From<OutputArg> for OutputFormat {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Text => OutputFormat::Text,
            OutputArg::Json => OutputFormat::Json,
        }
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(format!("tolerance must be positive and finite, got {s}"))
    }
}

/// Accepts `3x4`, `3X4` or `3,4`.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| format!("expected dims like 2x3, got '{s}'"))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad dimension '{a}'"))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad dimension '{b}'"))?;
    if a == 0 || b == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((a, b))
}

/// Flattened view of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: CommandKind,
    pub input_path: PathBuf,
    pub convention: PhaseConvention,
    pub tol: f64,
    pub output: OutputFormat,
    pub dims: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Svd,
    Schmidt,
    Verify,
}

impl From<Cli> for CliConfig {
    fn from(cli: Cli) -> Self {
        let (command, common, dims) = match cli.command {
            Command::Svd(c) => (CommandKind::Svd, c, None),
            Command::Schmidt { common, dims } => (CommandKind::Schmidt, common, dims),
            Command::Verify(c) => (CommandKind::Verify, c, None),
        };
        CliConfig {
            command,
            input_path: common.input,
            convention: common.convention.into(),
            tol: common.tol,
            output: common.output.into(),
            dims,
        }
    }
}

/// Exit status plus the text destined for stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn failed(code: i32, message: String) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: message,
        }
    }

    fn from_error(err: &Error) -> Self {
        Self::failed(exit_code_for(err), format!("error: {err}\n"))
    }
}

/// 3 for failures of the numerical pipeline, 2 for everything the input is to blame for.
pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

pub fn run(config: &CliConfig) -> Outcome {
    match config.command {
        CommandKind::Svd => run_svd(config),
        CommandKind::Schmidt => run_schmidt(config),
        CommandKind::Verify => run_verify(config),
    }
}

fn read_input(config: &CliConfig) -> Result<String, Outcome> {
    std::fs::read_to_string(&config.input_path).map_err(|e| {
        Outcome::failed(
            EXIT_INPUT,
            format!("error: cannot read {}: {e}\n", config.input_path.display()),
        )
    })
}

fn load_matrix(config: &CliConfig) -> Result<ComplexMatrix, Outcome> {
    let text = read_input(config)?;
    parse_matrix(&text).map_err(|e| Outcome::from_error(&e))
}

pub fn run_svd(config: &CliConfig) -> Outcome {
    let a = match load_matrix(config) {
        Ok(a) => a,
        Err(out) => return out,
    };
    match svd(&a, config.convention.clone(), config.tol) {
        Ok(f) => Outcome::ok(emit_result(Decomposition::Svd(&f), config.output)),
        Err(e) => Outcome::from_error(&e),
    }
}

pub fn run_schmidt(config: &CliConfig) -> Outcome {
    let text = match read_input(config) {
        Ok(t) => t,
        Err(out) => return out,
    };
    let result = parse_state_with_dims(&text, config.dims)
        .and_then(|psi| schmidt_decompose(&psi, config.convention.clone(), config.tol));
    match result {
        Ok(sd) => Outcome::ok(emit_result(Decomposition::Schmidt(&sd), config.output)),
        Err(e) => Outcome::from_error(&e),
    }
}

/// Residuals of the three named conventions and their worst pairwise
/// reconstruction gap, all in absolute Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub residuals: Vec<(PhaseConvention, f64)>,
    pub max_discrepancy: f64,
    pub threshold: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|(_, r)| *r <= self.threshold)
            && self.max_discrepancy <= self.threshold
    }
}

pub fn verify_matrix(a: &ComplexMatrix, tol: f64) -> phasesvd::Result<VerifyReport> {
    let runs: Vec<SvdFactorization> = PhaseConvention::named()
        .into_iter()
        .map(|c| svd(a, c, tol))
        .collect::<phasesvd::Result<_>>()?;
    let rebuilt: Vec<ComplexMatrix> = runs.iter().map(|f| f.reconstruct()).collect();
    let mut max_discrepancy = 0.0f64;
    for (i, x) in rebuilt.iter().enumerate() {
        for y in &rebuilt[i + 1..] {
            max_discrepancy = max_discrepancy.max(x.sub(y)?.frobenius_norm());
        }
    }
    Ok(VerifyReport {
        residuals: runs
            .iter()
            .map(|f| (f.convention.clone(), f.residual))
            .collect(),
        max_discrepancy,
        threshold: VERIFY_TOL * a.frobenius_norm().max(1.0),
    })
}

pub fn run_verify(config: &CliConfig) -> Outcome {
    let a = match load_matrix(config) {
        Ok(a) => a,
        Err(out) => return out,
    };
    let report = match verify_matrix(&a, config.tol) {
        Ok(r) => r,
        Err(e) => return Outcome::from_error(&e),
    };
    let passed = report.passed();
    let stdout = match config.output {
        OutputFormat::Text => verify_text(&report),
        OutputFormat::Json => verify_json(&report),
    };
    if passed {
        Outcome::ok(stdout)
    } else {
        Outcome {
            code: EXIT_VERIFY_FAILED,
            stdout,
            stderr: "verification failed: residual above threshold\n".into(),
        }
    }
}

fn verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    for (conv, res) in &r.residuals {
        let _ = writeln!(out, "residual[{conv}]: {}", format_real(*res));
    }
    let _ = writeln!(out, "max_discrepancy: {}", format_real(r.max_discrepancy));
    let _ = writeln!(out, "threshold: {}", format_real(r.threshold));
    let _ = writeln!(out, "status: {}", if r.passed() { "ok" } else { "FAIL" });
    out
}

fn verify_json(r: &VerifyReport) -> String {
    let residuals: Vec<String> = r
        .residuals
        .iter()
        .map(|(conv, res)| format!("\"{conv}\":{}", format_real(*res)))
        .collect();
    format!(
        "{{\"residuals\":{{{}}},\"max_discrepancy\":{},\"threshold\":{},\"passed\":{}}}\n",
        residuals.join(","),
        format_real(r.max_discrepancy),
        format_real(r.threshold),
        r.passed()
    )
}
