//! Subcommand implementations. Each returns a [`Report`] holding the exit
//! code, a JSON document and a text rendering.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use llcp::models::{benchmark, hello_world, queuing};
use llcp::{Error, Parameter, Problem, Settings, SolveOptions, Status, Variable};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    Assignment, BackwardArgs, CheckArgs, Cli, Command, ExampleName, ExportArgs, FitArgs,
    SensitivityArgs, SolveCmd, SolverArgs, SourceArgs,
};
use crate::file::ProblemFile;
use crate::regression::{fit, FitConfig, IterationLog, Weights};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NON_OPTIMAL: i32 = 2;

/// Output of a subcommand.
#[derive(Clone, Debug)]
pub struct Report {
    pub code: i32,
    pub json: Value,
    pub text: String,
}

/// A failure before a result could be produced.
#[derive(Clone, Debug)]
pub struct CliError {
    pub code: i32,
    pub location: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            location: None,
            message: message.into(),
        }
    }

    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            location: Some(location.into()),
            message: message.into(),
        }
    }

    fn report(&self, command: &str) -> Report {
        let text = match &self.location {
            Some(l) => format!("error: {l}: {}\n", self.message),
            None => format!("error: {}\n", self.message),
        };
        Report {
            code: self.code,
            json: json!({
                "command": command,
                "error": {"location": self.location, "message": self.message},
            }),
            text,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonOptimal(_)
            | Error::Factorization(_)
            | Error::LsqrNoConvergence { .. }
            | Error::NoDerivativeState => EXIT_NON_OPTIMAL,
            _ => EXIT_INVALID,
        };
        CliError {
            code,
            location: None,
            message: e.to_string(),
        }
    }
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Check(_) => "check",
        Command::Solve(_) => "solve",
        Command::Sensitivity(_) => "sensitivity",
        Command::Backward(_) => "backward",
        Command::FitRegression(_) => "fit-regression",
        Command::Export(_) => "export",
    }
}

pub fn run(cli: &Cli) -> Report {
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Solve(a) => solve(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Backward(a) => backward(a),
        Command::FitRegression(a) => fit_regression(a),
        Command::Export(a) => export(a),
    };
    result.unwrap_or_else(|e| e.report(command_name(&cli.command)))
}

/// A loaded problem.
pub struct Source {
    pub problem: Problem,
    /// Parameters whose value came from a problem file.
    pub file_values: HashSet<String>,
}

fn example(name: ExampleName, n: usize, m: usize, seed: u64) -> Result<Problem, CliError> {
    Ok(match name {
        ExampleName::Hello => hello_world()?.problem,
        ExampleName::Queuing => queuing()?.problem,
        ExampleName::Benchmark => {
            if n == 0 || m == 0 {
                return Err(CliError::invalid(
                    "benchmark sizes --n and --m must be positive",
                ));
            }
            benchmark(n, m, seed)?.problem
        }
    })
}

/// Load the problem and apply `--param` assignments.
pub fn load(src: &SourceArgs) -> Result<Source, CliError> {
    let mut source = match (&src.file, src.example) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::at(path.display().to_string(), e.to_string()))?;
            let file =
                ProblemFile::parse(&text).map_err(|e| CliError::at(e.location, e.message))?;
            let loaded = file
                .build()
                .map_err(|e| CliError::at(e.location, e.message))?;
            Source {
                problem: loaded.problem,
                file_values: loaded.with_values,
            }
        }
        (None, Some(name)) => Source {
            problem: example(name, src.n, src.m, src.seed)?,
            file_values: HashSet::new(),
        },
        (None, None) => return Err(CliError::invalid("give a problem file or --example")),
    };
    for a in &src.params {
        let p = source
            .problem
            .parameter(&a.name)
            .ok_or_else(|| CliError::at(format!("--param {}", a.name), "unknown parameter"))?;
        if source.file_values.contains(&a.name) {
            warn!(
                "parameter `{}`: the value in the problem file takes precedence over --param",
                a.name
            );
            continue;
        }
        source
            .problem
            .set_value(&p, a.values.clone())
            .map_err(|e| CliError::at(format!("--param {}", a.name), e.to_string()))?;
    }
    Ok(source)
}

fn require_dgp(problem: &Problem) -> Result<(), CliError> {
    let report = problem.is_dgp();
    if report.is_dgp() {
        return Ok(());
    }
    Err(CliError::invalid(format!(
        "problem is not DGP: {}",
        report.messages().join("; ")
    )))
}

fn require_values(problem: &Problem) -> Result<(), CliError> {
    for p in problem.parameters() {
        if problem.param_value(&p).is_none() {
            return Err(CliError::at(
                format!("parameter {}", p.name()),
                format!("no value; pass --param {}=V1,V2,...", p.name()),
            ));
        }
    }
    Ok(())
}

fn options(s: &SolverArgs, derivatives: bool) -> Result<SolveOptions, CliError> {
    if !(s.eps > 0.0) {
        return Err(CliError::at("--eps", "must be positive"));
    }
    if s.max_iters == 0 {
        return Err(CliError::at("--max-iters", "must be positive"));
    }
    Ok(SolveOptions {
        settings: Settings {
            eps: s.eps,
            max_iters: s.max_iters,
            warm_start: s.warm_start,
            ..Settings::default()
        },
        derivatives,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedVector {
    pub name: String,
    pub value: Vec<f64>,
}

fn variable_values(problem: &Problem) -> Vec<NamedVector> {
    problem
        .variables()
        .iter()
        .filter_map(|v| {
            problem.var_value(v).map(|x| NamedVector {
                name: v.name().to_string(),
                value: x.to_vec(),
            })
        })
        .collect()
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("[{}]", parts.join(", "))
    }
}

fn exit_for(status: Status) -> i32 {
    if status == Status::Optimal {
        EXIT_OK
    } else {
        EXIT_NON_OPTIMAL
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticOut {
    pub path: String,
    pub node: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub command: &'static str,
    pub dgp: bool,
    pub diagnostics: Vec<DiagnosticOut>,
}

pub fn check(a: &CheckArgs) -> Result<Report, CliError> {
    let src = load(&a.source)?;
    let report = src.problem.is_dgp();
    let out = CheckReport {
        command: "check",
        dgp: report.is_dgp(),
        diagnostics: report
            .diagnostics
            .iter()
            .map(|d| DiagnosticOut {
                path: d.path_string(),
                node: d.node.clone(),
                message: d.message.clone(),
            })
            .collect(),
    };
    let mut text = String::new();
    if out.dgp {
        text.push_str("problem is DGP\n");
    } else {
        text.push_str("problem is not DGP\n");
        for d in &out.diagnostics {
            let _ = writeln!(text, "  {}: `{}` {}", d.path, d.node, d.message);
        }
    }
    Ok(Report {
        code: if out.dgp { EXIT_OK } else { EXIT_INVALID },
        json: to_json(&out),
        text,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub command: &'static str,
    pub status: String,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub solve_seconds: f64,
    pub solver_seconds: f64,
    pub variables: Vec<NamedVector>,
}

fn solve_report(
    problem: &Problem,
    status: Status,
    objective: Option<f64>,
    iterations: usize,
) -> SolveReport {
    let stats = problem.stats();
    SolveReport {
        command: "solve",
        status: status.name().to_string(),
        objective,
        iterations,
        solve_seconds: stats.last_total.as_secs_f64(),
        solver_seconds: stats.last_solver.as_secs_f64(),
        variables: if status == Status::Optimal {
            variable_values(problem)
        } else {
            Vec::new()
        },
    }
}

fn render_solve(r: &SolveReport) -> String {
    let mut text = format!("status: {}\n", r.status);
    if let Some(v) = r.objective {
        let _ = writeln!(text, "objective: {v:.8}");
    }
    let _ = writeln!(text, "iterations: {}", r.iterations);
    for v in &r.variables {
        let _ = writeln!(text, "{} = {}", v.name, fmt_vec(&v.value));
    }
    text
}

fn prepare(src: &SourceArgs) -> Result<Problem, CliError> {
    let s = load(src)?;
    require_dgp(&s.problem)?;
    require_values(&s.problem)?;
    Ok(s.problem)
}

pub fn solve(a: &SolveCmd) -> Result<Report, CliError> {
    let mut problem = prepare(&a.source)?;
    let opts = options(&a.solver, false)?;
    let sum = problem.solve(&opts)?;
    info!("solved in {} iterations", sum.iterations);
    let r = solve_report(&problem, sum.status, sum.value, sum.iterations);
    Ok(Report {
        code: exit_for(sum.status),
        text: render_solve(&r),
        json: to_json(&r),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VariableSensitivity {
    pub name: String,
    pub value: Vec<f64>,
    pub delta: Vec<f64>,
    pub predicted: Vec<f64>,
    pub predicted_percent: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual_percent: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub parameter: String,
    pub index: usize,
    pub derivatives: Vec<NamedVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    pub command: &'static str,
    pub status: String,
    pub objective: Option<f64>,
    pub nonsmooth: bool,
    pub residual: f64,
    pub parameter_deltas: Vec<NamedVector>,
    pub variables: Vec<VariableSensitivity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TableRow>>,
}

/// Largest number of parameter entries for `--table`.
pub const TABLE_LIMIT: usize = 200;

fn percent(delta: &[f64], base: &[f64]) -> Vec<f64> {
    delta.iter().zip(base).map(|(d, b)| 100.0 * d / b).collect()
}

fn lookup_param(problem: &Problem, a: &Assignment, flag: &str) -> Result<Parameter, CliError> {
    let p = problem
        .parameter(&a.name)
        .ok_or_else(|| CliError::at(format!("{flag} {}", a.name), "unknown parameter"))?;
    if a.values.len() != p.len() {
        return Err(CliError::at(
            format!("{flag} {}", a.name),
            format!("expected {} values, got {}", p.len(), a.values.len()),
        ));
    }
    Ok(p)
}

fn lookup_var(problem: &Problem, a: &Assignment, flag: &str) -> Result<Variable, CliError> {
    let v = problem
        .variable(&a.name)
        .ok_or_else(|| CliError::at(format!("{flag} {}", a.name), "unknown variable"))?;
    if a.values.len() != v.len() {
        return Err(CliError::at(
            format!("{flag} {}", a.name),
            format!("expected {} values, got {}", v.len(), a.values.len()),
        ));
    }
    Ok(v)
}

fn non_optimal(status: Status, value: Option<f64>, command: &'static str) -> Report {
    let r = json!({"command": command, "status": status.name(), "objective": value});
    Report {
        code: EXIT_NON_OPTIMAL,
        json: r,
        text: format!("status: {status}\n"),
    }
}

pub fn sensitivity(a: &SensitivityArgs) -> Result<Report, CliError> {
    let mut problem = prepare(&a.source)?;
    let opts = options(&a.solver, true)?;
    let params = problem.parameters();
    let mut deltas: Vec<Vec<f64>> = params
        .iter()
        .map(|p| {
            let v = problem.param_value(p).expect("checked values");
            match a.rel_delta {
                Some(r) => v.iter().map(|x| r * x).collect(),
                None => vec![0.0; p.len()],
            }
        })
        .collect();
    for d in &a.deltas {
        let p = lookup_param(&problem, d, "--delta")?;
        let i = params
            .iter()
            .position(|q| q.name() == p.name())
            .expect("known parameter");
        deltas[i] = d.values.clone();
    }
    if a.table && problem.n_param_entries() > TABLE_LIMIT {
        return Err(CliError::at(
            "--table",
            format!(
                "{} parameter entries exceed the limit of {TABLE_LIMIT}",
                problem.n_param_entries()
            ),
        ));
    }

    let sum = problem.solve(&opts)?;
    if sum.status != Status::Optimal {
        return Ok(non_optimal(sum.status, sum.value, "sensitivity"));
    }
    for (p, d) in params.iter().zip(&deltas) {
        problem.set_delta(p, d.clone())?;
    }
    let info = problem.derivative()?;
    if info.nonsmooth {
        warn!("the solution is at a nonsmooth point; derivatives are a least-squares estimate");
    }
    let vars = problem.variables();
    let mut rows: Vec<VariableSensitivity> = vars
        .iter()
        .map(|v| {
            let x = problem.var_value(v).expect("optimal").to_vec();
            let dx = problem.var_delta(v).expect("derivative").to_vec();
            VariableSensitivity {
                name: v.name().to_string(),
                predicted: x.iter().zip(&dx).map(|(a, b)| a + b).collect(),
                predicted_percent: percent(&dx, &x),
                value: x,
                delta: dx,
                actual: None,
                actual_percent: None,
            }
        })
        .collect();

    let table = if a.table {
        let k = problem.n_param_entries();
        let mut out = Vec::with_capacity(k);
        let mut offset = 0;
        for p in &params {
            for j in 0..p.len() {
                let mut e = vec![0.0; k];
                e[offset + j] = 1.0;
                let (dx, _) = problem.apply_derivative(&e)?;
                let mut off = 0;
                let derivatives = vars
                    .iter()
                    .map(|v| {
                        let nv = NamedVector {
                            name: v.name().to_string(),
                            value: dx[off..off + v.len()].to_vec(),
                        };
                        off += v.len();
                        nv
                    })
                    .collect();
                out.push(TableRow {
                    parameter: p.name().to_string(),
                    index: j,
                    derivatives,
                });
            }
            offset += p.len();
        }
        Some(out)
    } else {
        None
    };

    let mut verify_status = None;
    let mut code = EXIT_OK;
    if a.verify {
        for (p, d) in params.iter().zip(&deltas) {
            let v: Vec<f64> = problem
                .param_value(p)
                .expect("checked values")
                .iter()
                .zip(d)
                .map(|(x, y)| x + y)
                .collect();
            problem.set_value(p, v).map_err(|e| {
                CliError::at(
                    format!("--delta {}", p.name()),
                    format!("perturbed value: {e}"),
                )
            })?;
        }
        let opts = SolveOptions {
            derivatives: false,
            ..opts
        };
        let again = problem.solve(&opts)?;
        verify_status = Some(again.status.name().to_string());
        code = exit_for(again.status);
        if again.status == Status::Optimal {
            for (row, v) in rows.iter_mut().zip(&vars) {
                let x = problem.var_value(v).expect("optimal").to_vec();
                let d: Vec<f64> = x.iter().zip(&row.value).map(|(a, b)| a - b).collect();
                row.actual_percent = Some(percent(&d, &row.value));
                row.actual = Some(x);
            }
        }
    }

    let r = SensitivityReport {
        command: "sensitivity",
        status: sum.status.name().to_string(),
        objective: sum.value,
        nonsmooth: info.nonsmooth,
        residual: info.residual,
        parameter_deltas: params
            .iter()
            .zip(&deltas)
            .map(|(p, d)| NamedVector {
                name: p.name().to_string(),
                value: d.clone(),
            })
            .collect(),
        variables: rows,
        verify_status,
        table,
    };
    Ok(Report {
        code,
        text: render_sensitivity(&r),
        json: to_json(&r),
    })
}

fn render_sensitivity(r: &SensitivityReport) -> String {
    let mut text = format!("status: {}\n", r.status);
    if r.nonsmooth {
        text.push_str("warning: nonsmooth point\n");
    }
    for v in &r.variables {
        let _ = writeln!(text, "{}:", v.name);
        let _ = writeln!(text, "  value      {}", fmt_vec(&v.value));
        let _ = writeln!(
            text,
            "  predicted  {}  ({} %)",
            fmt_vec(&v.predicted),
            fmt_vec(&v.predicted_percent)
        );
        if let (Some(a), Some(p)) = (&v.actual, &v.actual_percent) {
            let _ = writeln!(text, "  actual     {}  ({} %)", fmt_vec(a), fmt_vec(p));
        }
    }
    if let Some(s) = &r.verify_status {
        if s != "optimal" {
            let _ = writeln!(text, "verification solve: {s}");
        }
    }
    if let Some(table) = &r.table {
        text.push_str("derivatives:\n");
        for row in table {
            let cols: Vec<String> = row
                .derivatives
                .iter()
                .map(|d| format!("d{} = {}", d.name, fmt_vec(&d.value)))
                .collect();
            let _ = writeln!(
                text,
                "  {}[{}]: {}",
                row.parameter,
                row.index,
                cols.join("  ")
            );
        }
    }
    text
}

#[derive(Clone, Debug, Serialize)]
pub struct Descent {
    pub eta: f64,
    pub original: f64,
    pub predicted: f64,
    pub actual: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BackwardReport {
    pub command: &'static str,
    pub status: String,
    pub objective: Option<f64>,
    pub nonsmooth: bool,
    pub residual: f64,
    pub gradients: Vec<NamedVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<Descent>,
}

fn half_square(problem: &Problem) -> f64 {
    problem
        .solution()
        .expect("optimal")
        .iter()
        .map(|x| 0.5 * x * x)
        .sum()
}

pub fn backward(a: &BackwardArgs) -> Result<Report, CliError> {
    let mut problem = prepare(&a.source)?;
    let opts = options(&a.solver, true)?;
    let vars = problem.variables();
    let mut grads: Option<Vec<Vec<f64>>> = None;
    if !a.grads.is_empty() {
        let mut g: Vec<Vec<f64>> = vars.iter().map(|v| vec![0.0; v.len()]).collect();
        for asg in &a.grads {
            let v = lookup_var(&problem, asg, "--grad")?;
            let i = vars
                .iter()
                .position(|w| w.name() == v.name())
                .expect("known variable");
            g[i] = asg.values.clone();
        }
        grads = Some(g);
    }
    if let Some(eta) = a.descent {
        if !(eta > 0.0) {
            return Err(CliError::at("--descent", "step must be positive"));
        }
    }

    let sum = problem.solve(&opts)?;
    if sum.status != Status::Optimal {
        return Ok(non_optimal(sum.status, sum.value, "backward"));
    }
    if a.descent.is_some() {
        let g: Vec<Vec<f64>> = vars
            .iter()
            .map(|v| problem.var_value(v).expect("optimal").to_vec())
            .collect();
        grads = Some(g);
    }
    if let Some(g) = &grads {
        for (v, gv) in vars.iter().zip(g) {
            problem.set_gradient(v, gv.clone())?;
        }
    }
    let info = problem.backward()?;
    if info.nonsmooth {
        warn!("the solution is at a nonsmooth point; gradients are a least-squares estimate");
    }
    let params = problem.parameters();
    let gradients: Vec<NamedVector> = params
        .iter()
        .map(|p| NamedVector {
            name: p.name().to_string(),
            value: problem.param_gradient(p).expect("backward").to_vec(),
        })
        .collect();

    let mut code = EXIT_OK;
    let descent = match a.descent {
        Some(eta) => {
            let original = half_square(&problem);
            let norm2: f64 = gradients.iter().flat_map(|g| &g.value).map(|x| x * x).sum();
            let predicted = original - eta * norm2;
            for (p, g) in params.iter().zip(&gradients) {
                let v: Vec<f64> = problem
                    .param_value(p)
                    .expect("checked values")
                    .iter()
                    .zip(&g.value)
                    .map(|(x, d)| x - eta * d)
                    .collect();
                problem
                    .set_value(p, v)
                    .map_err(|e| CliError::at("--descent", format!("updated parameter: {e}")))?;
            }
            let again = problem.solve(&SolveOptions {
                derivatives: false,
                ..opts
            })?;
            code = exit_for(again.status);
            Some(Descent {
                eta,
                original,
                predicted,
                actual: (again.status == Status::Optimal).then(|| half_square(&problem)),
                status: again.status.name().to_string(),
            })
        }
        None => None,
    };

    let r = BackwardReport {
        command: "backward",
        status: sum.status.name().to_string(),
        objective: sum.value,
        nonsmooth: info.nonsmooth,
        residual: info.residual,
        gradients,
        descent,
    };
    let mut text = format!("status: {}\n", r.status);
    for g in &r.gradients {
        let _ = writeln!(text, "d/d{} = {}", g.name, fmt_vec(&g.value));
    }
    if let Some(d) = &r.descent {
        let _ = writeln!(text, "descent step {}:", d.eta);
        let _ = writeln!(text, "  original   {:.6}", d.original);
        let _ = writeln!(text, "  predicted  {:.6}", d.predicted);
        match d.actual {
            Some(v) => {
                let _ = writeln!(text, "  actual     {v:.6}");
            }
            None => {
                let _ = writeln!(text, "  actual     ({})", d.status);
            }
        }
    }
    Ok(Report {
        code,
        json: to_json(&r),
        text,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub command: &'static str,
    #[serde(rename = "N")]
    pub n_train: usize,
    pub validation: usize,
    pub n: usize,
    pub m: usize,
    pub iters: usize,
    pub step: f64,
    pub seed: u64,
    pub lstsq_validation_loss: f64,
    pub log: Vec<IterationLog>,
    pub initial_weights: Weights,
    pub weights: Weights,
    pub predictions_sorted: bool,
}

/// Validation predictions as CSV: one row per sample with `x`, `y` and the
/// model's prediction `yhat` (empty when the solve failed).
pub fn predictions_csv(
    n: usize,
    m: usize,
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    pred: &[Option<Vec<f64>>],
) -> String {
    let mut out = String::from("sample");
    for j in 0..n {
        let _ = write!(out, ",x{j}");
    }
    for j in 0..m {
        let _ = write!(out, ",y{j}");
    }
    for j in 0..m {
        let _ = write!(out, ",yhat{j}");
    }
    out.push('\n');
    for (i, ((xi, yi), pi)) in x.iter().zip(y).zip(pred).enumerate() {
        let _ = write!(out, "{i}");
        for v in xi.iter().chain(yi) {
            let _ = write!(out, ",{v}");
        }
        match pi {
            Some(p) => p.iter().for_each(|v| {
                let _ = write!(out, ",{v}");
            }),
            None => (0..m).for_each(|_| out.push(',')),
        }
        out.push('\n');
    }
    out
}

pub fn fit_regression(a: &FitArgs) -> Result<Report, CliError> {
    if a.n_train == 0 || a.n == 0 || a.m == 0 {
        return Err(CliError::invalid("--N, --n and --m must be positive"));
    }
    if !(a.step > 0.0) {
        return Err(CliError::at("--step", "must be positive"));
    }
    let validation = a.validation.unwrap_or(a.n_train);
    let cfg = FitConfig {
        n_train: a.n_train,
        n_valid: validation,
        n: a.n,
        m: a.m,
        iters: a.iters,
        step: a.step,
        seed: a.seed,
    };
    let start = Instant::now();
    let res = fit(&cfg);
    info!("fit finished in {:.2} s", start.elapsed().as_secs_f64());
    let predictions_sorted = res.predictions.iter().flatten().all(|p| {
        p.windows(2)
            .all(|w| w[0] <= w[1] + 1e-6 * w[1].abs().max(1.0))
    });
    if let Some(path) = &a.csv {
        let csv = predictions_csv(a.n, a.m, &res.valid.x, &res.valid.y, &res.predictions);
        std::fs::write(path, csv)
            .map_err(|e| CliError::at(path.display().to_string(), e.to_string()))?;
    }
    let r = FitSummary {
        command: "fit-regression",
        n_train: a.n_train,
        validation,
        n: a.n,
        m: a.m,
        iters: a.iters,
        step: a.step,
        seed: a.seed,
        lstsq_validation_loss: res.lstsq_validation_loss,
        log: res.log,
        initial_weights: res.initial,
        weights: res.weights,
        predictions_sorted,
    };
    let mut text = format!(
        "least-squares validation loss: {:.6}\n",
        r.lstsq_validation_loss
    );
    text.push_str("iteration,train_loss,validation_loss,skipped\n");
    for l in &r.log {
        let _ = writeln!(
            text,
            "{},{:.6},{:.6},{}",
            l.iteration, l.train_loss, l.validation_loss, l.skipped
        );
    }
    Ok(Report {
        code: EXIT_OK,
        json: to_json(&r),
        text,
    })
}

pub fn export(a: &ExportArgs) -> Result<Report, CliError> {
    let problem = example(a.example, a.n, a.m, a.seed)?;
    let file =
        ProblemFile::from_problem(&problem).map_err(|e| CliError::at(e.location, e.message))?;
    let text = file.to_json_pretty() + "\n";
    Ok(Report {
        code: EXIT_OK,
        json: file.to_value(),
        text,
    })
}
