//! `parisian`: batch front end for parisian-core.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 for
//! configuration errors (bad flags, unreadable or invalid input files).

mod artifact;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use parisian_core::numerics::{parse_rational, Rational};
use parisian_core::selection::Mode;
use serde::{Serialize, Serializer};

#[derive(Parser)]
#[command(name = "parisian", version, about = "Parisian sets, exact Fourier coefficients and Riesz spectra")]
struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Least admissible sequence N_1 < N_2 < … as params JSON.
    GenSeq(GenSeqArgs),
    /// Stage families D_1..D_k as JSON plus a summary CSV.
    Build(BuildArgs),
    /// Closed-form Fourier coefficients of a measure file as CSV.
    Fourier(FourierArgs),
    /// Enumerate Ω((n_j)) as CSV.
    Omega(OmegaArgs),
    /// Riesz-product coefficients against quadrature of the partial product.
    Riesz(RieszArgs),
    /// Frequency selection certificate as JSON.
    Select(SelectArgs),
    /// Mass-distribution audit of a built stage.
    DimAudit(DimAuditArgs),
    /// Run the acceptance checks.
    SelfTest(SelfTestArgs),
}

/// A rational given as `p/q` or an integer; recorded in reduced form.
#[derive(Clone, Debug)]
pub struct Exact(pub Rational);

impl FromStr for Exact {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(Exact).map_err(|e| e.to_string())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// A decimal big integer, recorded as a string.
#[derive(Clone, Debug)]
pub struct Int(pub BigInt);

impl FromStr for Int {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        BigInt::from_str(s.trim()).map(Int).map_err(|e| format!("{s:?}: {e}"))
    }
}

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

fn serialize_mode<S: Serializer>(m: &Mode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&m.to_string())
}

#[derive(Args, Serialize)]
pub struct GenSeqArgs {
    #[arg(long)]
    pub alpha: Exact,
    #[arg(long)]
    pub n1: Int,
    #[arg(long)]
    pub depth: usize,
    /// Refuse terms longer than this many bits.
    #[arg(long)]
    pub max_bits: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct BuildArgs {
    /// Params JSON from `gen-seq`.
    #[arg(long)]
    pub params: PathBuf,
    /// Last stage to build; defaults to the params depth.
    #[arg(long)]
    pub stage: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<PathBuf>,
    /// Also write the natural measure of the last stage.
    #[arg(long)]
    #[serde(skip)]
    pub measure_out: Option<PathBuf>,
}

/// Either an explicit list or an inclusive range.
#[derive(Args, Serialize, Clone)]
pub struct Frequencies {
    #[arg(long = "freq", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub list: Vec<Int>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<Int>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<Int>,
}

#[derive(Args, Serialize)]
pub struct FourierArgs {
    /// Measure JSON (bare, or an artifact with a `measure` key).
    #[arg(long)]
    pub measure: PathBuf,
    #[command(flatten)]
    pub freqs: Frequencies,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct OmegaArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub terms: Vec<Int>,
    /// Defaults to the number of terms.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct RieszArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub terms: Vec<Int>,
    /// Amplitudes a_j; all 1 when omitted.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Vec<Exact>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[command(flatten)]
    pub freqs: Frequencies,
    /// Largest accepted |exact − quadrature|.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value = "lemma1")]
    #[serde(serialize_with = "serialize_mode")]
    pub mode: Mode,
    #[arg(long)]
    pub depth: usize,
    /// δ; taken from `--params` when omitted.
    #[arg(long)]
    pub delta: Option<Exact>,
    /// Construction params, required in lemma2 mode.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Explicit candidate frequencies.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<Int>,
    /// Candidates base^1..base^count.
    #[arg(long)]
    pub candidate_base: Option<u64>,
    #[arg(long, default_value_t = 24)]
    pub candidate_count: u32,
    #[arg(long)]
    pub shift_radius: Option<u64>,
    #[arg(long)]
    pub shift_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also write the coefficient table as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct DimAuditArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Stage to audit; defaults to the params depth.
    #[arg(long)]
    pub stage: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<Exact>,
    /// Finest scanned interval length; defaults to 1/N_k.
    #[arg(long)]
    pub finest: Option<Exact>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SelfTestArgs {
    /// Criteria to run; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = commands::exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    artifact::check_guard_env()?;
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::GenSeq(a) => commands::gen_seq(&a),
        Command::Build(a) => commands::build(&a),
        Command::Fourier(a) => commands::fourier(&a),
        Command::Omega(a) => commands::omega(&a),
        Command::Riesz(a) => commands::riesz(&a),
        Command::Select(a) => commands::select(&a),
        Command::DimAudit(a) => commands::dim_audit(&a),
        Command::SelfTest(a) => commands::self_test(&a),
    }
}
