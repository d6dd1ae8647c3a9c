//! Log-log canonicalization.
//!
//! A DGP problem over positive variables `x` becomes a convex problem over
//! `u = (x̂, s)`, where `x̂ = log x` and `s` are epigraph/hypograph slacks
//! introduced in post-order, one per non-affine atom occurrence. Positive
//! parameters used as atom arguments enter as `β = log α` ([`Tag::Log`]);
//! parameters used as power exponents enter unchanged ([`Tag::Passthrough`]).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::curvature::check_dgp;
use crate::error::{Error, Result};
use crate::expr::{Atom, Exponent, Expr, Node, ParamId, Parameter, Valuation, VarId, Variable};
use crate::problem::{Constraint, ConstraintKind, Objective, Sense};

/// Provenance of a convex-problem parameter entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    /// `β_i = log α_j`.
    Log,
    /// `β_i = α_j`.
    Passthrough,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BetaEntry {
    /// Flat index `j` into the LLCP parameter vector α.
    pub source: usize,
    pub tag: Tag,
}

/// The parameter map `β = C(α)`, a tagged relabeling of α.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonMap {
    k: usize,
    entries: Vec<BetaEntry>,
}

impl CanonMap {
    pub fn new(k: usize, entries: Vec<BetaEntry>) -> Self {
        assert!(
            entries.iter().all(|e| e.source < k),
            "beta source out of range"
        );
        CanonMap { k, entries }
    }

    /// Number of LLCP parameter entries.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of convex parameter entries.
    pub fn p(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[BetaEntry] {
        &self.entries
    }

    fn check(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.k {
            return Err(Error::Dimension(format!(
                "expected {} parameter entries, got {}",
                self.k,
                alpha.len()
            )));
        }
        for e in &self.entries {
            let a = alpha[e.source];
            if e.tag == Tag::Log && !(a > 0.0) {
                return Err(Error::Domain(format!(
                    "parameter entry {} must be positive, got {a}",
                    e.source
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.check(alpha)?;
        Ok(self
            .entries
            .iter()
            .map(|e| match e.tag {
                Tag::Log => alpha[e.source].ln(),
                Tag::Passthrough => alpha[e.source],
            })
            .collect())
    }

    /// `dβ = DC(α) dα`.
    pub fn apply_dc(&self, alpha: &[f64], dalpha: &[f64]) -> Result<Vec<f64>> {
        self.check(alpha)?;
        if dalpha.len() != self.k {
            return Err(Error::Dimension(format!(
                "expected {} perturbation entries, got {}",
                self.k,
                dalpha.len()
            )));
        }
        Ok(self
            .entries
            .iter()
            .map(|e| match e.tag {
                Tag::Log => dalpha[e.source] / alpha[e.source],
                Tag::Passthrough => dalpha[e.source],
            })
            .collect())
    }

    /// `dα = DC(α)ᵀ dβ`.
    pub fn apply_dc_adjoint(&self, alpha: &[f64], dbeta: &[f64]) -> Result<Vec<f64>> {
        self.check(alpha)?;
        if dbeta.len() != self.p() {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                self.p(),
                dbeta.len()
            )));
        }
        let mut out = vec![0.0; self.k];
        for (e, d) in self.entries.iter().zip(dbeta) {
            out[e.source] += match e.tag {
                Tag::Log => d / alpha[e.source],
                Tag::Passthrough => *d,
            };
        }
        Ok(out)
    }
}

/// Key of an affine term: optional variable column times optional β entry.
pub type TermKey = (Option<usize>, Option<usize>);

/// A scalar expression `Σ coef · β? · u?`, affine in `u` for fixed β and
/// affine in β for fixed `u`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineForm {
    terms: BTreeMap<TermKey, f64>,
}

impl AffineForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut f = Self::zero();
        f.add_term(None, None, c);
        f
    }

    pub fn column(col: usize) -> Self {
        let mut f = Self::zero();
        f.add_term(Some(col), None, 1.0);
        f
    }

    pub fn beta(b: usize) -> Self {
        let mut f = Self::zero();
        f.add_term(None, Some(b), 1.0);
        f
    }

    pub fn add_term(&mut self, col: Option<usize>, beta: Option<usize>, coef: f64) {
        let slot = self.terms.entry((col, beta)).or_insert(0.0);
        *slot += coef;
        if *slot == 0.0 {
            self.terms.remove(&(col, beta));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (TermKey, f64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn plus(&self, other: &AffineForm) -> AffineForm {
        let mut out = self.clone();
        for ((c, b), v) in other.terms() {
            out.add_term(c, b, v);
        }
        out
    }

    pub fn minus(&self, other: &AffineForm) -> AffineForm {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> AffineForm {
        let mut out = Self::zero();
        for ((c, b), v) in self.terms() {
            out.add_term(c, b, s * v);
        }
        out
    }

    pub fn has_beta(&self) -> bool {
        self.terms.keys().any(|(_, b)| b.is_some())
    }

    /// Multiply by a β entry; the form must be free of β.
    pub fn times_beta(&self, b: usize) -> Result<AffineForm> {
        if self.has_beta() {
            return Err(Error::PowerRule);
        }
        let mut out = Self::zero();
        for ((c, _), v) in self.terms() {
            out.add_term(c, Some(b), v);
        }
        Ok(out)
    }

    pub fn eval(&self, u: &[f64], beta: &[f64]) -> f64 {
        self.terms()
            .map(|((c, b), v)| v * c.map_or(1.0, |c| u[c]) * b.map_or(1.0, |b| beta[b]))
            .sum()
    }

    /// Split into the coefficients of each column and the constant part,
    /// both as affine functions of β: `(col, β?, coef)` and `(β?, coef)`.
    pub fn split(&self) -> (Vec<(usize, Option<usize>, f64)>, Vec<(Option<usize>, f64)>) {
        let mut lin = Vec::new();
        let mut cst = Vec::new();
        for ((c, b), v) in self.terms() {
            match c {
                Some(c) => lin.push((c, b, v)),
                None => cst.push((b, v)),
            }
        }
        (lin, cst)
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((c, b), v)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{v}")?;
            if let Some(b) = b {
                write!(f, "*b{b}")?;
            }
            if let Some(c) = c {
                write!(f, "*u{c}")?;
            }
        }
        Ok(())
    }
}

/// Convex constraints over `u`, all with affine arguments.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexConstraint {
    /// `f = 0`.
    Zero(AffineForm),
    /// `f ≤ 0`.
    NonPos(AffineForm),
    /// `log Σ exp(args) ≤ bound`.
    LogSumExp {
        args: Vec<AffineForm>,
        bound: AffineForm,
    },
    /// `(x, y, z)` in the exponential cone: `y exp(x / y) ≤ z`, `y > 0`.
    ExpCone {
        x: AffineForm,
        y: AffineForm,
        z: AffineForm,
    },
}

impl ConvexConstraint {
    fn forms(&self) -> Vec<&AffineForm> {
        match self {
            ConvexConstraint::Zero(f) | ConvexConstraint::NonPos(f) => vec![f],
            ConvexConstraint::LogSumExp { args, bound } => {
                args.iter().chain(std::iter::once(bound)).collect()
            }
            ConvexConstraint::ExpCone { x, y, z } => vec![x, y, z],
        }
    }

    /// Largest violation at `(u, β)`; nonpositive when satisfied.
    pub fn violation(&self, u: &[f64], beta: &[f64]) -> f64 {
        match self {
            ConvexConstraint::Zero(f) => f.eval(u, beta).abs(),
            ConvexConstraint::NonPos(f) => f.eval(u, beta),
            ConvexConstraint::LogSumExp { args, bound } => {
                let v: Vec<f64> = args.iter().map(|a| a.eval(u, beta)).collect();
                log_sum_exp(&v) - bound.eval(u, beta)
            }
            ConvexConstraint::ExpCone { x, y, z } => {
                let (x, y, z) = (x.eval(u, beta), y.eval(u, beta), z.eval(u, beta));
                (y * (x / y).exp() - z).max(-y)
            }
        }
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The canonicalized convex problem: minimize `objective` subject to
/// `constraints`, over `u = (x̂, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexProblem {
    pub n_log_vars: usize,
    pub n_slacks: usize,
    pub n_beta: usize,
    pub objective: AffineForm,
    pub constraints: Vec<ConvexConstraint>,
}

impl ConvexProblem {
    pub fn n_cols(&self) -> usize {
        self.n_log_vars + self.n_slacks
    }

    pub fn column_name(&self, col: usize) -> String {
        if col < self.n_log_vars {
            format!("xhat{col}")
        } else {
            format!("s{}", col - self.n_log_vars)
        }
    }

    /// Parametrized DCP check: every form is affine in `u` with at most one
    /// β factor per term, every index is in range and every coefficient is
    /// finite. Cone arguments are affine by construction.
    pub fn verify_dcp(&self) -> Result<()> {
        let m = self.n_cols();
        let check = |f: &AffineForm| -> Result<()> {
            for ((c, b), v) in f.terms() {
                if !v.is_finite() {
                    return Err(Error::Data);
                }
                if c.is_some_and(|c| c >= m) || b.is_some_and(|b| b >= self.n_beta) {
                    return Err(Error::Dimension(format!(
                        "term ({c:?}, {b:?}) out of range"
                    )));
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            for f in c.forms() {
                check(f)?;
            }
            if let ConvexConstraint::LogSumExp { args, .. } = c {
                if args.is_empty() {
                    return Err(Error::Unsupported("empty log-sum-exp".into()));
                }
            }
        }
        Ok(())
    }
}

/// Positions of each LLCP variable's entries inside `x̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryIndexMap {
    blocks: Vec<(VarId, usize, usize)>,
    n: usize,
}

impl RecoveryIndexMap {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `(offset, len)` of a variable inside `x̂`.
    pub fn block(&self, id: VarId) -> Option<(usize, usize)> {
        self.blocks.iter().find(|b| b.0 == id).map(|b| (b.1, b.2))
    }

    /// The recovery map `x = exp(x̂)` applied to the leading entries of `u`.
    pub fn recover(&self, u: &[f64]) -> Vec<f64> {
        u[..self.n].iter().map(|v| v.exp()).collect()
    }
}

/// Output of [`canonicalize`].
#[derive(Clone, Debug)]
pub struct Canonical {
    pub problem: ConvexProblem,
    pub map: CanonMap,
    pub recovery: RecoveryIndexMap,
}

struct Canonicalizer {
    var_cols: HashMap<VarId, usize>,
    param_src: HashMap<ParamId, usize>,
    beta_index: HashMap<(usize, Tag), usize>,
    entries: Vec<BetaEntry>,
    n_log_vars: usize,
    n_slacks: usize,
    constraints: Vec<ConvexConstraint>,
}

fn at(v: &[AffineForm], i: usize) -> &AffineForm {
    if v.len() == 1 {
        &v[0]
    } else {
        &v[i]
    }
}

impl Canonicalizer {
    fn beta(&mut self, source: usize, tag: Tag) -> usize {
        let next = self.entries.len();
        *self.beta_index.entry((source, tag)).or_insert_with(|| {
            self.entries.push(BetaEntry { source, tag });
            next
        })
    }

    fn param_offset(&self, p: &Parameter) -> Result<usize> {
        self.param_src
            .get(&p.id())
            .copied()
            .ok_or_else(|| Error::UnknownName(p.name().to_string()))
    }

    fn slack(&mut self) -> AffineForm {
        let col = self.n_log_vars + self.n_slacks;
        self.n_slacks += 1;
        AffineForm::column(col)
    }

    fn expr(&mut self, e: &Expr) -> Result<Vec<AffineForm>> {
        if e.is_constant() {
            let v = e.eval(&Valuation::new())?;
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
                return Err(Error::NonPositiveConstant(*bad));
            }
            return Ok(v.iter().map(|x| AffineForm::constant(x.ln())).collect());
        }
        let n = e.len();
        match e.node() {
            Node::Variable(v) => {
                let off = *self
                    .var_cols
                    .get(&v.id())
                    .ok_or_else(|| Error::UnknownName(v.name().to_string()))?;
                Ok((0..v.len()).map(|i| AffineForm::column(off + i)).collect())
            }
            Node::Parameter(p) => self.log_param(p, &(0..p.len()).collect::<Vec<_>>()),
            Node::Constant(_) => unreachable!("constants are folded"),
            Node::Index { arg, indices } => {
                if let Node::Parameter(p) = arg.node() {
                    return self.log_param(p, indices);
                }
                let inner = self.expr(arg)?;
                Ok(indices.iter().map(|&i| inner[i].clone()).collect())
            }
            Node::Apply {
                atom,
                args,
                exponent,
            } => {
                let forms = args
                    .iter()
                    .map(|a| self.expr(a))
                    .collect::<Result<Vec<_>>>()?;
                self.apply(*atom, &forms, exponent.as_ref(), n)
            }
        }
    }

    fn log_param(&mut self, p: &Parameter, indices: &[usize]) -> Result<Vec<AffineForm>> {
        if !p.is_positive() {
            return Err(Error::NotDgp(vec![format!(
                "parameter `{}` of undeclared sign used outside a power exponent",
                p.name()
            )]));
        }
        let off = self.param_offset(p)?;
        Ok(indices
            .iter()
            .map(|&i| AffineForm::beta(self.beta(off + i, Tag::Log)))
            .collect())
    }

    fn apply(
        &mut self,
        atom: Atom,
        f: &[Vec<AffineForm>],
        exponent: Option<&Exponent>,
        n: usize,
    ) -> Result<Vec<AffineForm>> {
        let mut out = Vec::with_capacity(n);
        match atom {
            Atom::Mul => {
                for i in 0..n {
                    out.push(
                        f.iter()
                            .fold(AffineForm::zero(), |acc, a| acc.plus(at(a, i))),
                    );
                }
            }
            Atom::Prod => out.push(f[0].iter().fold(AffineForm::zero(), |acc, a| acc.plus(a))),
            Atom::Ratio => {
                for i in 0..n {
                    out.push(at(&f[0], i).minus(at(&f[1], i)));
                }
            }
            Atom::Power => match exponent {
                Some(Exponent::Literal(p)) => {
                    for i in 0..n {
                        let pi = if p.len() == 1 { p[0] } else { p[i] };
                        out.push(at(&f[0], i).scaled(pi));
                    }
                }
                Some(e @ Exponent::Param(_)) => {
                    let (param, idx) = e
                        .param_entries()
                        .ok_or_else(|| Error::Exponent("malformed parameter exponent".into()))?;
                    let off = self.param_offset(param)?;
                    for i in 0..n {
                        let j = if idx.len() == 1 { idx[0] } else { idx[i] };
                        let b = self.beta(off + j, Tag::Passthrough);
                        out.push(at(&f[0], i).times_beta(b)?);
                    }
                }
                None => return Err(Error::Exponent("power requires an exponent".into())),
            },
            Atom::Add | Atom::Sum => {
                let groups: Vec<Vec<AffineForm>> = if atom == Atom::Sum {
                    vec![f[0].clone()]
                } else {
                    (0..n)
                        .map(|i| f.iter().map(|a| at(a, i).clone()).collect())
                        .collect()
                };
                for args in groups {
                    if args.len() == 1 {
                        out.push(args.into_iter().next().unwrap());
                        continue;
                    }
                    let t = self.slack();
                    self.constraints.push(ConvexConstraint::LogSumExp {
                        args,
                        bound: t.clone(),
                    });
                    out.push(t);
                }
            }
            Atom::Maximum | Atom::Minimum => {
                for i in 0..n {
                    if f.len() == 1 {
                        out.push(at(&f[0], i).clone());
                        continue;
                    }
                    let t = self.slack();
                    for a in f {
                        let g = if atom == Atom::Maximum {
                            at(a, i).minus(&t)
                        } else {
                            t.minus(at(a, i))
                        };
                        self.constraints.push(ConvexConstraint::NonPos(g));
                    }
                    out.push(t);
                }
            }
            Atom::DiffPos => {
                for i in 0..n {
                    let t = self.slack();
                    self.constraints.push(ConvexConstraint::LogSumExp {
                        args: vec![t.clone(), at(&f[1], i).clone()],
                        bound: at(&f[0], i).clone(),
                    });
                    out.push(t);
                }
            }
            Atom::Exp => {
                for a in &f[0] {
                    let t = self.slack();
                    self.constraints.push(ConvexConstraint::ExpCone {
                        x: a.clone(),
                        y: AffineForm::constant(1.0),
                        z: t.clone(),
                    });
                    out.push(t);
                }
            }
            Atom::Log => {
                for a in &f[0] {
                    let t = self.slack();
                    self.constraints.push(ConvexConstraint::ExpCone {
                        x: t.clone(),
                        y: AffineForm::constant(1.0),
                        z: a.clone(),
                    });
                    out.push(t);
                }
            }
            Atom::One => out.push(AffineForm::zero()),
        }
        Ok(out)
    }
}

/// Canonicalize a DGP problem. `variables` and `parameters` fix the column
/// order of `x̂` and the flat layout of α.
pub fn canonicalize(
    variables: &[Variable],
    parameters: &[Parameter],
    objective: &Objective,
    constraints: &[Constraint],
) -> Result<Canonical> {
    let report = check_dgp(objective, constraints);
    if !report.is_dgp() {
        return Err(Error::NotDgp(report.messages()));
    }
    let mut var_cols = HashMap::new();
    let mut blocks = Vec::new();
    let mut n = 0;
    for v in variables {
        var_cols.insert(v.id(), n);
        blocks.push((v.id(), n, v.len()));
        n += v.len();
    }
    let mut param_src = HashMap::new();
    let mut k = 0;
    for p in parameters {
        param_src.insert(p.id(), k);
        k += p.len();
    }
    let mut cz = Canonicalizer {
        var_cols,
        param_src,
        beta_index: HashMap::new(),
        entries: Vec::new(),
        n_log_vars: n,
        n_slacks: 0,
        constraints: Vec::new(),
    };
    let obj = cz.expr(&objective.expr)?.remove(0);
    let obj = match objective.sense {
        Sense::Minimize => obj,
        Sense::Maximize => obj.scaled(-1.0),
    };
    for c in constraints {
        let l = cz.expr(&c.lhs)?;
        let r = cz.expr(&c.rhs)?;
        let len = l.len().max(r.len());
        for i in 0..len {
            let d = at(&l, i).minus(at(&r, i));
            cz.constraints.push(match c.kind {
                ConstraintKind::Leq => ConvexConstraint::NonPos(d),
                ConstraintKind::Eq => ConvexConstraint::Zero(d),
            });
        }
    }
    let problem = ConvexProblem {
        n_log_vars: n,
        n_slacks: cz.n_slacks,
        n_beta: cz.entries.len(),
        objective: obj,
        constraints: cz.constraints,
    };
    problem.verify_dcp()?;
    Ok(Canonical {
        problem,
        map: CanonMap::new(k, cz.entries),
        recovery: RecoveryIndexMap { blocks, n },
    })
}
