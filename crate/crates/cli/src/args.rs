//! Command-line arguments.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "llcp",
    version,
    about = "Solve and differentiate parametrized log-log convex programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the DGP rules; exit 1 with diagnostics on failure.
    Check(CheckArgs),
    /// Solve and print the optimal variable values.
    Solve(SolveCmd),
    /// Predict the change of the solution for a parameter perturbation.
    Sensitivity(SensitivityArgs),
    /// Gradient of a linear function of the solution with respect to the parameters.
    Backward(BackwardArgs),
    /// Fit the sorted monomial regression model on synthetic data.
    FitRegression(FitArgs),
    /// Print a bundled example as a problem file.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    Hello,
    Queuing,
    Benchmark,
}

/// `name=v1,v2,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let (name, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=V1,V2,..., got `{s}`"))?;
    let values = rest
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{v}` in `{s}`: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Assignment {
        name: name.trim().to_string(),
        values,
    })
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("source").required(true).args(["file", "example"])))]
pub struct SourceArgs {
    /// Problem file (JSON).
    pub file: Option<PathBuf>,
    /// Use a bundled example instead of a file.
    #[arg(long, value_enum)]
    pub example: Option<ExampleName>,
    /// Benchmark size: number of variables.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Benchmark size: number of monomials.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Benchmark generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Set a parameter value; values from a problem file take precedence.
    #[arg(long = "param", value_name = "NAME=V1,V2,...", value_parser = parse_assignment)]
    pub params: Vec<Assignment>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Residual and gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Start re-solves from the previous solution.
    #[arg(long)]
    pub warm_start: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Print a JSON document on stdout instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SolveCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Perturbation of one parameter.
    #[arg(long = "delta", value_name = "NAME=V1,V2,...", value_parser = parse_assignment)]
    pub deltas: Vec<Assignment>,
    /// Perturb every parameter by this fraction of its value (explicit
    /// `--delta` entries take precedence).
    #[arg(long)]
    pub rel_delta: Option<f64>,
    /// Re-solve at the perturbed parameters and report the actual change.
    #[arg(long)]
    pub verify: bool,
    /// Report the derivative of every variable with respect to every
    /// parameter entry.
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Debug)]
pub struct BackwardArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Gradient with respect to one variable (default all ones).
    #[arg(long = "grad", value_name = "NAME=V1,V2,...", value_parser = parse_assignment)]
    pub grads: Vec<Assignment>,
    /// Take a gradient step of this size on `f(x) = ½‖x‖²` and compare the
    /// predicted and actual decrease.
    #[arg(long, conflicts_with = "grads")]
    pub descent: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Training pairs.
    #[arg(long = "N", default_value_t = 30)]
    pub n_train: usize,
    /// Validation pairs (default: the number of training pairs).
    #[arg(long)]
    pub validation: Option<usize>,
    /// Input dimension.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Output dimension.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write validation predictions as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub example: ExampleName,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
