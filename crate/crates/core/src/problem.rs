//! Parametrized log-log convex problems: solve, derivative and backward.
//!
//! The solution map is `S = R ∘ φ ∘ C`: the parameter map `C`, the solution
//! map `φ` of the compiled cone program, and the recovery map `R = exp` on
//! the `x̂` block. Canonicalization and compilation run once; later solves
//! only evaluate `C` and the cached affine data map.

use std::sync::Arc;
use std::time::{Duration, Instant};

use log::debug;

use crate::canon::{canonicalize, Canonical};
use crate::compile::{compile, ConeProgram, ParamToDataMap};
use crate::curvature::{check_dgp, DgpReport};
use crate::diff::ResidualPoint;
use crate::error::{Error, Result};
use crate::expr::{Expr, Parameter, Variable};
use crate::solver::{ConeSolution, Settings, Solver, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct Objective {
    pub sense: Sense,
    pub expr: Expr,
}

impl Objective {
    pub fn minimize(expr: Expr) -> Self {
        Objective {
            sense: Sense::Minimize,
            expr,
        }
    }

    pub fn maximize(expr: Expr) -> Self {
        Objective {
            sense: Sense::Maximize,
            expr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `lhs ≤ rhs`.
    Leq,
    /// `lhs = rhs`.
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Constraint {
    pub fn leq(lhs: &Expr, rhs: &Expr) -> Self {
        Constraint {
            kind: ConstraintKind::Leq,
            lhs: lhs.clone(),
            rhs: rhs.clone(),
        }
    }

    pub fn geq(lhs: &Expr, rhs: &Expr) -> Self {
        Self::leq(rhs, lhs)
    }

    pub fn eq(lhs: &Expr, rhs: &Expr) -> Self {
        Constraint {
            kind: ConstraintKind::Eq,
            lhs: lhs.clone(),
            rhs: rhs.clone(),
        }
    }
}

/// Canonicalized and compiled form of a problem, shared between solves.
#[derive(Clone, Debug)]
pub struct CompiledProblem {
    pub canonical: Canonical,
    pub data: ParamToDataMap,
}

#[derive(Clone, Debug)]
struct VariableRecord {
    var: Variable,
    value: Option<Vec<f64>>,
    delta: Vec<f64>,
    gradient: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct ParameterRecord {
    param: Parameter,
    value: Option<Vec<f64>>,
    delta: Vec<f64>,
    gradient: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub settings: Settings,
    /// Keep the state needed by [`Problem::derivative`] and
    /// [`Problem::backward`].
    pub derivatives: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            settings: Settings::default(),
            derivatives: true,
        }
    }
}

/// Outcome of [`Problem::solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolveSummary {
    pub status: Status,
    /// Optimal objective value of the log-log convex problem.
    pub value: Option<f64>,
    pub iterations: usize,
}

/// Instrumentation counters and timings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stats {
    /// Expression-tree canonicalizations performed.
    pub canonicalizations: usize,
    pub solves: usize,
    /// Wall time of the last `solve` call.
    pub last_total: Duration,
    /// Time spent inside the cone solver during the last `solve` call.
    pub last_solver: Duration,
    /// Numeric factorizations performed by the cone solver.
    pub factorizations: usize,
}

struct DerivativeState {
    alpha: Vec<f64>,
    xhat: Vec<f64>,
    point: Option<ResidualPoint>,
    cone_sol: ConeSolution,
    program: ConeProgram,
}

/// Flags reported by derivative computations.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeInfo {
    /// The solution sits at a point where the cone projection is not
    /// differentiable; the returned values are a least-squares heuristic.
    pub nonsmooth: bool,
    /// Relative residual of the implicit linear system.
    pub residual: f64,
}

/// A parametrized log-log convex program.
pub struct Problem {
    objective: Objective,
    constraints: Vec<Constraint>,
    variables: Vec<VariableRecord>,
    parameters: Vec<ParameterRecord>,
    compiled: Option<Arc<CompiledProblem>>,
    program: Option<ConeProgram>,
    solver: Solver,
    state: Option<DerivativeState>,
    last_solution: Option<ConeSolution>,
    status: Option<Status>,
    value: Option<f64>,
    stats: Stats,
}

fn collect_names<T: Clone>(found: &mut Vec<T>, items: Vec<T>, same: impl Fn(&T, &T) -> bool) {
    for it in items {
        if !found.iter().any(|f| same(f, &it)) {
            found.push(it);
        }
    }
}

impl Problem {
    /// Build a problem; variables and parameters are collected in
    /// first-appearance order (objective first, then constraints).
    pub fn new(objective: Objective, constraints: Vec<Constraint>) -> Result<Self> {
        let mut vars: Vec<Variable> = Vec::new();
        let mut params: Vec<Parameter> = Vec::new();
        let exprs = std::iter::once(&objective.expr)
            .chain(constraints.iter().flat_map(|c| [&c.lhs, &c.rhs]));
        for e in exprs {
            collect_names(&mut vars, e.variables(), |a, b| a.id() == b.id());
            collect_names(&mut params, e.parameters(), |a, b| a.id() == b.id());
        }
        let mut names: Vec<&str> = vars
            .iter()
            .map(Variable::name)
            .chain(params.iter().map(Parameter::name))
            .collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateName(w[0].to_string()));
        }
        Ok(Problem {
            objective,
            constraints,
            variables: vars
                .into_iter()
                .map(|v| VariableRecord {
                    delta: vec![0.0; v.len()],
                    var: v,
                    value: None,
                    gradient: None,
                })
                .collect(),
            parameters: params
                .into_iter()
                .map(|p| ParameterRecord {
                    delta: vec![0.0; p.len()],
                    gradient: vec![0.0; p.len()],
                    param: p,
                    value: None,
                })
                .collect(),
            compiled: None,
            program: None,
            solver: Solver::new(),
            state: None,
            last_solution: None,
            status: None,
            value: None,
            stats: Stats::default(),
        })
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn variables(&self) -> Vec<Variable> {
        self.variables.iter().map(|r| r.var.clone()).collect()
    }

    pub fn parameters(&self) -> Vec<Parameter> {
        self.parameters.iter().map(|r| r.param.clone()).collect()
    }

    pub fn variable(&self, name: &str) -> Option<Variable> {
        self.variables
            .iter()
            .find(|r| r.var.name() == name)
            .map(|r| r.var.clone())
    }

    pub fn parameter(&self, name: &str) -> Option<Parameter> {
        self.parameters
            .iter()
            .find(|r| r.param.name() == name)
            .map(|r| r.param.clone())
    }

    pub fn is_dgp(&self) -> DgpReport {
        check_dgp(&self.objective, &self.constraints)
    }

    pub fn stats(&self) -> Stats {
        Stats {
            factorizations: self.solver.factorizations(),
            ..self.stats.clone()
        }
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    fn var_rec(&self, v: &Variable) -> Result<usize> {
        self.variables
            .iter()
            .position(|r| r.var.id() == v.id())
            .ok_or_else(|| Error::UnknownName(v.name().to_string()))
    }

    fn param_rec(&self, p: &Parameter) -> Result<usize> {
        self.parameters
            .iter()
            .position(|r| r.param.id() == p.id())
            .ok_or_else(|| Error::UnknownName(p.name().to_string()))
    }

    fn check_len(name: &str, want: usize, got: usize) -> Result<()> {
        if want != got {
            return Err(Error::Dimension(format!(
                "`{name}` has length {want}, got {got} values"
            )));
        }
        Ok(())
    }

    pub fn set_value(&mut self, p: &Parameter, value: Vec<f64>) -> Result<()> {
        let i = self.param_rec(p)?;
        Self::check_len(p.name(), p.len(), value.len())?;
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "parameter `{}` has non-finite entries",
                p.name()
            )));
        }
        if p.is_positive() && value.iter().any(|v| *v <= 0.0) {
            return Err(Error::Domain(format!(
                "positive parameter `{}` needs positive values",
                p.name()
            )));
        }
        self.parameters[i].value = Some(value);
        Ok(())
    }

    pub fn param_value(&self, p: &Parameter) -> Option<&[f64]> {
        self.param_rec(p)
            .ok()
            .and_then(|i| self.parameters[i].value.as_deref())
    }

    /// Optimal value of a variable after a successful solve.
    pub fn var_value(&self, v: &Variable) -> Option<&[f64]> {
        self.var_rec(v)
            .ok()
            .and_then(|i| self.variables[i].value.as_deref())
    }

    pub fn set_delta(&mut self, p: &Parameter, delta: Vec<f64>) -> Result<()> {
        let i = self.param_rec(p)?;
        Self::check_len(p.name(), p.len(), delta.len())?;
        self.parameters[i].delta = delta;
        Ok(())
    }

    /// Predicted change of a variable, written by [`Problem::derivative`].
    pub fn var_delta(&self, v: &Variable) -> Option<&[f64]> {
        self.var_rec(v)
            .ok()
            .map(|i| self.variables[i].delta.as_slice())
    }

    pub fn set_gradient(&mut self, v: &Variable, gradient: Vec<f64>) -> Result<()> {
        let i = self.var_rec(v)?;
        Self::check_len(v.name(), v.len(), gradient.len())?;
        self.variables[i].gradient = Some(gradient);
        Ok(())
    }

    /// Gradient with respect to a parameter, written by [`Problem::backward`].
    pub fn param_gradient(&self, p: &Parameter) -> Option<&[f64]> {
        self.param_rec(p)
            .ok()
            .map(|i| self.parameters[i].gradient.as_slice())
    }

    /// Flat parameter vector α in table order.
    pub fn alpha(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for r in &self.parameters {
            let v = r
                .value
                .as_ref()
                .ok_or_else(|| Error::MissingValue(r.param.name().to_string()))?;
            out.extend_from_slice(v);
        }
        Ok(out)
    }

    /// Set all parameter values from a flat vector in table order.
    pub fn set_alpha(&mut self, alpha: &[f64]) -> Result<()> {
        let k: usize = self.parameters.iter().map(|r| r.param.len()).sum();
        Self::check_len("parameters", k, alpha.len())?;
        let mut off = 0;
        for i in 0..self.parameters.len() {
            let p = self.parameters[i].param.clone();
            self.set_value(&p, alpha[off..off + p.len()].to_vec())?;
            off += p.len();
        }
        Ok(())
    }

    /// Flat variable values in table order.
    pub fn solution(&self) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for r in &self.variables {
            out.extend_from_slice(r.value.as_ref()?);
        }
        Some(out)
    }

    pub fn n_param_entries(&self) -> usize {
        self.parameters.iter().map(|r| r.param.len()).sum()
    }

    pub fn n_var_entries(&self) -> usize {
        self.variables.iter().map(|r| r.var.len()).sum()
    }

    /// Canonicalize and compile, or return the cached result.
    pub fn compiled(&mut self) -> Result<Arc<CompiledProblem>> {
        if let Some(c) = &self.compiled {
            return Ok(c.clone());
        }
        let canonical = canonicalize(
            &self.variables(),
            &self.parameters(),
            &self.objective,
            &self.constraints,
        )?;
        self.stats.canonicalizations += 1;
        let data = compile(&canonical.problem)?;
        debug!(
            "compiled: {} columns, {} rows, {} beta entries, cones {:?}",
            data.n_cols(),
            data.n_rows(),
            data.n_beta(),
            data.layout()
        );
        let c = Arc::new(CompiledProblem { canonical, data });
        self.compiled = Some(c.clone());
        Ok(c)
    }

    /// The cone program for the current parameter values.
    pub fn cone_program(&mut self) -> Result<ConeProgram> {
        let c = self.compiled()?;
        let beta = c.canonical.map.eval(&self.alpha()?)?;
        c.data.instantiate(&beta)
    }

    pub fn solve(&mut self, opts: &SolveOptions) -> Result<SolveSummary> {
        let start = Instant::now();
        let compiled = self.compiled()?;
        let alpha = self.alpha()?;
        let beta = compiled.canonical.map.eval(&alpha)?;
        match &mut self.program {
            Some(p) => compiled.data.update(&beta, p)?,
            None => self.program = Some(compiled.data.instantiate(&beta)?),
        }
        let program = self.program.as_ref().unwrap();
        let warm = if opts.settings.warm_start {
            self.last_solution.as_ref()
        } else {
            None
        };
        let t0 = Instant::now();
        let sol = self.solver.solve(program, &opts.settings, warm)?;
        let solver_time = t0.elapsed();
        self.state = None;
        self.status = Some(sol.status);
        self.stats.solves += 1;
        let summary = if sol.is_optimal() {
            let xhat = compiled.data.retrieve(&sol.x)[..compiled.canonical.recovery.len()].to_vec();
            let x = compiled.canonical.recovery.recover(&xhat);
            let mut off = 0;
            for r in &mut self.variables {
                let n = r.var.len();
                r.value = Some(x[off..off + n].to_vec());
                r.delta = vec![0.0; n];
                off += n;
            }
            let value = match self.objective.sense {
                Sense::Minimize => sol.objective.exp(),
                Sense::Maximize => (-sol.objective).exp(),
            };
            self.value = Some(value);
            if opts.derivatives {
                self.state = Some(DerivativeState {
                    alpha,
                    xhat,
                    point: None,
                    cone_sol: sol.clone(),
                    program: program.clone(),
                });
            }
            self.last_solution = Some(sol.clone());
            SolveSummary {
                status: sol.status,
                value: Some(value),
                iterations: sol.iterations,
            }
        } else {
            for r in &mut self.variables {
                r.value = None;
            }
            self.value = None;
            self.last_solution = None;
            SolveSummary {
                status: sol.status,
                value: None,
                iterations: sol.iterations,
            }
        };
        self.stats.last_solver = solver_time;
        self.stats.last_total = start.elapsed();
        Ok(summary)
    }

    fn state(&mut self) -> Result<(&DerivativeState, Arc<CompiledProblem>)> {
        let compiled = self.compiled.clone().ok_or(Error::NoDerivativeState)?;
        let st = self.state.as_mut().ok_or(Error::NoDerivativeState)?;
        if st.point.is_none() {
            st.point = Some(ResidualPoint::new(&st.program, &st.cone_sol)?);
        }
        Ok((self.state.as_ref().unwrap(), compiled))
    }

    /// `DS(α) dα` for a flat parameter perturbation.
    pub fn apply_derivative(&mut self, dalpha: &[f64]) -> Result<(Vec<f64>, DerivativeInfo)> {
        let (st, c) = self.state()?;
        let dbeta = c.canonical.map.apply_dc(&st.alpha, dalpha)?;
        let ddata = c.data.apply_t(&dbeta)?;
        let out = st.point.as_ref().unwrap().dphi(&ddata)?;
        let dx: Vec<f64> = st
            .xhat
            .iter()
            .zip(&out.value)
            .map(|(xh, d)| xh.exp() * d)
            .collect();
        Ok((
            dx,
            DerivativeInfo {
                nonsmooth: out.nonsmooth,
                residual: out.residual,
            },
        ))
    }

    /// `DS(α)ᵀ dx` for a flat variable perturbation.
    pub fn apply_adjoint(&mut self, dx: &[f64]) -> Result<(Vec<f64>, DerivativeInfo)> {
        let (st, c) = self.state()?;
        if dx.len() != st.xhat.len() {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                st.xhat.len(),
                dx.len()
            )));
        }
        let point = st.point.as_ref().unwrap();
        let mut du = vec![0.0; point.n()];
        for (i, (xh, d)) in st.xhat.iter().zip(dx).enumerate() {
            du[i] = xh.exp() * d;
        }
        let out = point.dphi_adjoint(&du)?;
        let dbeta = c.data.apply_t_adjoint(&out.value)?;
        let dalpha = c.canonical.map.apply_dc_adjoint(&st.alpha, &dbeta)?;
        Ok((
            dalpha,
            DerivativeInfo {
                nonsmooth: out.nonsmooth,
                residual: out.residual,
            },
        ))
    }

    /// Forward sensitivity: reads parameter deltas, writes variable deltas.
    pub fn derivative(&mut self) -> Result<DerivativeInfo> {
        let dalpha: Vec<f64> = self
            .parameters
            .iter()
            .flat_map(|r| r.delta.iter().copied())
            .collect();
        let (dx, info) = self.apply_derivative(&dalpha)?;
        let mut off = 0;
        for r in &mut self.variables {
            let n = r.var.len();
            r.delta = dx[off..off + n].to_vec();
            off += n;
        }
        Ok(info)
    }

    /// Adjoint sensitivity: reads variable gradients (default all ones),
    /// writes parameter gradients.
    pub fn backward(&mut self) -> Result<DerivativeInfo> {
        let dx: Vec<f64> = self
            .variables
            .iter()
            .flat_map(|r| r.gradient.clone().unwrap_or_else(|| vec![1.0; r.var.len()]))
            .collect();
        let (dalpha, info) = self.apply_adjoint(&dx)?;
        let mut off = 0;
        for r in &mut self.parameters {
            let n = r.param.len();
            r.gradient = dalpha[off..off + n].to_vec();
            off += n;
        }
        Ok(info)
    }

    /// Reset every variable gradient to the default.
    pub fn clear_gradients(&mut self) {
        for r in &mut self.variables {
            r.gradient = None;
        }
    }

    /// Cone-solver state of the last optimal solve.
    pub fn cone_solution(&self) -> Option<&ConeSolution> {
        self.last_solution.as_ref()
    }
}
