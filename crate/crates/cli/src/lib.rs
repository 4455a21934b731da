pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use verify::{run_verify, Fault, Scope, VerifyOptions, VerifyReport};

pub const SCHEMA: &str = "kuznetsov-cli/1";
pub const CACHE_ENV: &str = "KUZNETSOV_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "kuznetsov", version, about = "Kuznetsov formula toolkit over Q and quadratic fields")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every randomized step; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML file whose keys mirror the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariants of a number field.
    Field(FieldArgs),
    /// Canonical form, norm and factorization of an ideal.
    Ideal(IdealArgs),
    /// A generalized Kloosterman sum.
    Kloosterman(KloostermanArgs),
    /// Point evaluation of a special function.
    Specialfun(SpecialfunArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// The Bessel transform of the weight function h.
    Transform(TransformArgs),
    /// Delta and Kloosterman terms of a formula instance.
    GeometricSide(GeometricArgs),
    /// Spectral side against the geometric side over a family of weights.
    Residual(ResidualArgs),
    /// Download a coefficient dataset into the local cache.
    Fetch(FetchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Field(_) => "field",
            Command::Ideal(_) => "ideal",
            Command::Kloosterman(_) => "kloosterman",
            Command::Specialfun(_) => "specialfun",
            Command::Verify(_) => "verify",
            Command::Transform(_) => "transform",
            Command::GeometricSide(_) => "geometric-side",
            Command::Residual(_) => "residual",
            Command::Fetch(_) => "fetch",
        }
    }
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// "Q" or "Q(sqrt(d))".
    #[arg(long)]
    pub field: String,
}

#[derive(Debug, Args)]
pub struct IdealArgs {
    #[arg(long)]
    pub field: String,
    /// Generator as basis coordinates "a" or "a,b" (repeatable).
    #[arg(long = "gen")]
    pub gens: Vec<String>,
    /// Canonical ideal key, instead of generators.
    #[arg(long, conflicts_with = "gens")]
    pub key: Option<String>,
}

#[derive(Debug, Args)]
pub struct KloostermanArgs {
    #[arg(long)]
    pub field: String,
    #[arg(long)]
    pub alpha1: String,
    #[arg(long)]
    pub alpha2: String,
    #[arg(long)]
    pub c: String,
    /// Ideal keys; the unit ideal when omitted.
    #[arg(long, visible_alias = "a1")]
    pub frak_a1: Option<String>,
    #[arg(long, visible_alias = "a2")]
    pub frak_a2: Option<String>,
    #[arg(long)]
    pub frak_c: Option<String>,
    #[arg(long, default_value_t = kuznetsov::kloosterman::DEFAULT_TERM_CAP)]
    pub term_cap: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialFunction {
    #[value(alias = "kernel_real")]
    KernelReal,
    #[value(alias = "kernel_complex")]
    KernelComplex,
    #[value(alias = "bessel_k")]
    BesselK,
    #[value(alias = "bessel_i")]
    BesselI,
    #[value(alias = "bessel_j")]
    BesselJ,
    #[value(alias = "whittaker_w")]
    WhittakerW,
    #[value(alias = "whittaker_real")]
    WhittakerReal,
    #[value(alias = "whittaker_complex")]
    WhittakerComplex,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Eval,
}

#[derive(Debug, Args)]
pub struct SpecialfunArgs {
    /// Optional verb; `specialfun eval ...` and `specialfun ...` are the same.
    #[arg(value_enum)]
    pub mode: Option<EvalMode>,
    #[arg(long, visible_alias = "fn", value_enum)]
    pub function: SpecialFunction,
    /// Spectral parameter or order, e.g. "0.3", "2i", "0.1-1.5i".
    #[arg(long, default_value = "0")]
    pub nu: String,
    /// Whittaker index k.
    #[arg(long, default_value = "0")]
    pub k: String,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub p: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub q: i64,
    #[arg(long, default_value_t = 0)]
    pub l: i64,
    /// Evaluation points (repeatable).
    #[arg(long, required = true, allow_negative_numbers = true)]
    pub z: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run, as a positional alternative to --scope.
    #[arg(value_enum, conflicts_with = "scope")]
    pub suite: Option<Scope>,
    /// Suite to run [default: all].
    #[arg(long, value_enum)]
    pub scope: Option<Scope>,
    /// Replaces the tolerance of every check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
    /// Single identity check at one weight instead of the gw suite.
    #[arg(long, requires = "nu")]
    pub l: Option<i64>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub q: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub p: i64,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long, default_value = "0")]
    pub omega1: String,
    #[arg(long, default_value = "1")]
    pub omega2: String,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Field whose archimedean places carry the weight.
    #[arg(long, conflicts_with = "places")]
    pub field: Option<String>,
    /// Place kinds, e.g. "real,complex"; inferred from the first --z
    /// (non-real coordinate means complex place) when neither this nor
    /// --field is given.
    #[arg(long, value_delimiter = ',')]
    pub places: Vec<String>,
    /// Weight parameter per archimedean place.
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    /// Point with one coordinate per place, comma-separated (repeatable).
    #[arg(long, required = true, allow_negative_numbers = true)]
    pub z: Vec<String>,
    #[arg(long, default_value_t = 1e-12)]
    pub measure_tol: f64,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GeometricArgs {
    /// JSON formula instance.
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Coefficient dataset (JSON schema v1).
    #[arg(long)]
    pub data: PathBuf,
    /// Weight parameters of one family member, one per place (repeatable).
    /// Defaults to the instance's own weight.
    #[arg(long)]
    pub family: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub base_url: String,
    #[arg(long)]
    pub field: String,
    #[arg(long, default_value = "1")]
    pub level: String,
    #[arg(long, default_value_t = 0.0)]
    pub t_min: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, env = CACHE_ENV)]
    pub cache_dir: PathBuf,
    /// Serve from the cache only.
    #[arg(long)]
    pub offline: bool,
    /// Ask the server again even when cached.
    #[arg(long)]
    pub refresh: bool,
}

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub result: T,
}

/// Process outcome: rendered text for stdout, diagnostics for stderr, and
/// the exit status.
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub status: i32,
}

pub fn run(cli: &Cli) -> Outcome {
    let name = cli.command.name();
    match commands::dispatch(cli) {
        Ok((value, status, notice)) => {
            let envelope = Envelope { schema: SCHEMA, command: name, seed: cli.seed, result: value };
            match output::render(&envelope, cli.format) {
                Ok(text) => Outcome { stdout: text, stderr: notice.unwrap_or_default(), status },
                Err(e) => error_outcome(name, cli.seed, &e, cli.format),
            }
        }
        Err(e) => error_outcome(name, cli.seed, &e, cli.format),
    }
}

fn error_outcome(command: &'static str, seed: u64, e: &kuznetsov::Error, format: Format) -> Outcome {
    let body = serde_json::json!({ "kind": output::error_kind(e), "message": e.to_string() });
    let envelope = Envelope { schema: SCHEMA, command, seed, result: serde_json::json!({ "error": body }) };
    let text = output::render(&envelope, format).unwrap_or_else(|_| e.to_string());
    Outcome { stdout: String::new(), stderr: text, status: 2 }
}
