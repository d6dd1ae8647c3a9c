//! Expression trees over positive variables, parameters and constants.
//!
//! Trees are immutable and reference counted, so subexpressions can be shared
//! freely between problems and threads. Every node is a vector of length
//! `len()`; scalars have length one and broadcast against vectors in
//! elementwise atoms.

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

static NEXT_ID: AtomicUsize = AtomicUsize::new(1);

fn next_id() -> usize {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

/// A positive decision variable.
#[derive(Clone, Debug)]
pub struct Variable {
    id: VarId,
    name: Arc<str>,
    len: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, len: usize) -> Self {
        assert!(len > 0, "variable length must be positive");
        Variable {
            id: VarId(next_id()),
            name: name.into().into(),
            len,
        }
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        Self::new(name, 1)
    }

    pub fn id(&self) -> VarId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn expr(&self) -> Expr {
        Expr::from_node(Node::Variable(self.clone()))
    }
}

impl PartialEq for Variable {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// A parameter. Positive parameters are log-log affine; parameters of
/// undeclared sign may only appear as power exponents.
#[derive(Clone, Debug)]
pub struct Parameter {
    id: ParamId,
    name: Arc<str>,
    len: usize,
    positive: bool,
}

impl Parameter {
    pub fn positive(name: impl Into<String>, len: usize) -> Self {
        Self::with_sign(name, len, true)
    }

    pub fn real(name: impl Into<String>, len: usize) -> Self {
        Self::with_sign(name, len, false)
    }

    pub fn with_sign(name: impl Into<String>, len: usize, positive: bool) -> Self {
        assert!(len > 0, "parameter length must be positive");
        Parameter {
            id: ParamId(next_id()),
            name: name.into().into(),
            len,
            positive,
        }
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn expr(&self) -> Expr {
        Expr::from_node(Node::Parameter(self.clone()))
    }
}

impl PartialEq for Parameter {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// The fixed atom library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Elementwise product of any number of arguments.
    Mul,
    /// Elementwise sum of any number of arguments.
    Add,
    /// Sum of the entries of a single vector argument.
    Sum,
    /// Product of the entries of a single vector argument.
    Prod,
    /// Elementwise power with a literal or parameter exponent.
    Power,
    Maximum,
    Minimum,
    /// `ratio(x, y) = x / y`.
    Ratio,
    /// `diff_pos(y, x) = y - x`, defined for `x < y`.
    DiffPos,
    Exp,
    /// Natural logarithm, positive for arguments above one.
    Log,
    /// The constant one.
    One,
}

impl Atom {
    pub const ALL: [Atom; 12] = [
        Atom::Mul,
        Atom::Add,
        Atom::Sum,
        Atom::Prod,
        Atom::Power,
        Atom::Maximum,
        Atom::Minimum,
        Atom::Ratio,
        Atom::DiffPos,
        Atom::Exp,
        Atom::Log,
        Atom::One,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Atom::Mul => "mul",
            Atom::Add => "add",
            Atom::Sum => "sum",
            Atom::Prod => "prod",
            Atom::Power => "power",
            Atom::Maximum => "maximum",
            Atom::Minimum => "minimum",
            Atom::Ratio => "ratio",
            Atom::DiffPos => "diff_pos",
            Atom::Exp => "exp",
            Atom::Log => "log",
            Atom::One => "one",
        }
    }

    pub fn from_name(name: &str) -> Option<Atom> {
        Atom::ALL.into_iter().find(|a| a.name() == name)
    }

    fn arity(self) -> (usize, Option<usize>, &'static str) {
        match self {
            Atom::Mul | Atom::Add | Atom::Maximum | Atom::Minimum => (1, None, "at least 1"),
            Atom::Sum | Atom::Prod | Atom::Power | Atom::Exp | Atom::Log => {
                (1, Some(1), "exactly 1")
            }
            Atom::Ratio | Atom::DiffPos => (2, Some(2), "exactly 2"),
            Atom::One => (0, Some(0), "no"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exponent of a power atom. Never an atom application.
#[derive(Clone, Debug)]
pub enum Exponent {
    /// Literal exponent, scalar or one entry per base entry.
    Literal(Vec<f64>),
    /// A parameter, or an indexed selection of one.
    Param(Expr),
}

impl Exponent {
    pub fn len(&self) -> usize {
        match self {
            Exponent::Literal(v) => v.len(),
            Exponent::Param(e) => e.len(),
        }
    }

    /// The parameter referenced by a parameter exponent, with the flat
    /// parameter entry used for each exponent entry.
    pub fn param_entries(&self) -> Option<(&Parameter, Vec<usize>)> {
        match self {
            Exponent::Literal(_) => None,
            Exponent::Param(e) => match e.node() {
                Node::Parameter(p) => Some((p, (0..p.len()).collect())),
                Node::Index { arg, indices } => match arg.node() {
                    Node::Parameter(p) => Some((p, indices.clone())),
                    _ => None,
                },
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    Variable(Variable),
    Parameter(Parameter),
    Constant(Vec<f64>),
    /// Gather of entries of `arg`.
    Index {
        arg: Expr,
        indices: Vec<usize>,
    },
    Apply {
        atom: Atom,
        args: Vec<Expr>,
        exponent: Option<Exponent>,
    },
}

struct Inner {
    node: Node,
    len: usize,
    parametrized: bool,
    has_variables: bool,
}

/// An immutable, shareable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Variable(v) => f.write_str(v.name()),
            Node::Parameter(p) => f.write_str(p.name()),
            Node::Constant(c) if c.len() == 1 => write!(f, "{}", c[0]),
            Node::Constant(c) => write!(f, "{c:?}"),
            Node::Index { arg, indices } if indices.len() == 1 => {
                write!(f, "{arg}[{}]", indices[0])
            }
            Node::Index { arg, indices } => write!(f, "{arg}{indices:?}"),
            Node::Apply {
                atom,
                args,
                exponent,
            } => {
                write!(f, "{atom}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                match exponent {
                    Some(Exponent::Literal(p)) if p.len() == 1 => write!(f, ", {}", p[0])?,
                    Some(Exponent::Literal(p)) => write!(f, ", {p:?}")?,
                    Some(Exponent::Param(e)) => write!(f, ", {e}")?,
                    None => {}
                }
                f.write_str(")")
            }
        }
    }
}

fn broadcast_len(context: &str, lens: &[usize]) -> Result<usize> {
    let n = lens.iter().copied().max().unwrap_or(1);
    if lens.iter().all(|&l| l == 1 || l == n) {
        Ok(n)
    } else {
        Err(Error::Shape {
            context: context.to_string(),
            lengths: lens.to_vec(),
        })
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let (len, parametrized, has_variables) = match &node {
            Node::Variable(v) => (v.len(), false, true),
            Node::Parameter(p) => (p.len(), true, false),
            Node::Constant(c) => (c.len(), false, false),
            Node::Index { arg, indices } => {
                (indices.len(), arg.is_parametrized(), arg.has_variables())
            }
            // Length of applications is filled in by `build_atom`.
            Node::Apply { .. } => (0, false, false),
        };
        Expr(Arc::new(Inner {
            node,
            len,
            parametrized,
            has_variables,
        }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn len(&self) -> usize {
        self.0.len
    }

    pub fn is_scalar(&self) -> bool {
        self.0.len == 1
    }

    /// Does the subtree reference a parameter (including power exponents)?
    pub fn is_parametrized(&self) -> bool {
        self.0.parametrized
    }

    pub fn has_variables(&self) -> bool {
        self.0.has_variables
    }

    /// True when the subtree contains neither variables nor parameters.
    pub fn is_constant(&self) -> bool {
        !self.0.parametrized && !self.0.has_variables
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// A positive scalar constant.
    pub fn constant(value: f64) -> Result<Expr> {
        Self::constant_vec(vec![value])
    }

    /// A vector of positive constants.
    pub fn constant_vec(values: Vec<f64>) -> Result<Expr> {
        if values.is_empty() {
            return Err(Error::Dimension("empty constant".into()));
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveConstant(bad));
        }
        Ok(Expr::from_node(Node::Constant(values)))
    }

    /// Select a single entry.
    pub fn index(&self, i: usize) -> Result<Expr> {
        self.gather(&[i])
    }

    /// Select entries by position.
    pub fn gather(&self, indices: &[usize]) -> Result<Expr> {
        if indices.is_empty() {
            return Err(Error::Dimension("empty index list".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Index {
                index: bad,
                len: self.len(),
            });
        }
        Ok(Expr::from_node(Node::Index {
            arg: self.clone(),
            indices: indices.to_vec(),
        }))
    }

    /// Raise to a literal power.
    pub fn pow(&self, p: f64) -> Result<Expr> {
        build_atom(
            Atom::Power,
            vec![self.clone()],
            Some(Exponent::Literal(vec![p])),
        )
    }

    /// Raise to a parameter power (a parameter or an indexed parameter).
    pub fn pow_param(&self, exponent: &Expr) -> Result<Expr> {
        build_atom(
            Atom::Power,
            vec![self.clone()],
            Some(Exponent::Param(exponent.clone())),
        )
    }

    /// Children in evaluation order (the exponent, if any, is not a child).
    pub fn children(&self) -> &[Expr] {
        match self.node() {
            Node::Apply { args, .. } => args,
            Node::Index { arg, .. } => std::slice::from_ref(arg),
            _ => &[],
        }
    }

    /// Collect the variables referenced by this tree in first-visit order.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Node::Variable(v) = e.node() {
                if !out.iter().any(|w: &Variable| w.id == v.id) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    /// Collect the parameters referenced by this tree (including exponents).
    pub fn parameters(&self) -> Vec<Parameter> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Node::Parameter(p) = e.node() {
                if !out.iter().any(|q: &Parameter| q.id == p.id) {
                    out.push(p.clone());
                }
            }
        });
        out
    }

    /// Pre-order visit of every node, descending into parameter exponents.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        if let Node::Apply {
            exponent: Some(Exponent::Param(e)),
            ..
        } = self.node()
        {
            e.visit(f);
        }
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Replace every parameter by a constant with its current value; parameter
    /// exponents become literal exponents.
    pub fn substitute_params(&self, values: &Valuation) -> Result<Expr> {
        if !self.is_parametrized() {
            return Ok(self.clone());
        }
        match self.node() {
            Node::Parameter(p) => {
                let v = values
                    .param(p.id())
                    .ok_or_else(|| Error::MissingValue(p.name().to_string()))?;
                Expr::constant_vec(v.to_vec())
            }
            Node::Index { arg, indices } => arg.substitute_params(values)?.gather(indices),
            Node::Apply {
                atom,
                args,
                exponent,
            } => {
                let args = args
                    .iter()
                    .map(|a| a.substitute_params(values))
                    .collect::<Result<Vec<_>>>()?;
                let exponent = match exponent {
                    Some(ex @ Exponent::Param(_)) => {
                        let (p, idx) = ex.param_entries().ok_or_else(|| {
                            Error::Exponent("malformed parameter exponent".into())
                        })?;
                        let v = values
                            .param(p.id())
                            .ok_or_else(|| Error::MissingValue(p.name().to_string()))?;
                        Some(Exponent::Literal(idx.iter().map(|&i| v[i]).collect()))
                    }
                    other => other.clone(),
                };
                build_atom(*atom, args, exponent)
            }
            _ => Ok(self.clone()),
        }
    }

    /// Numerically evaluate the expression.
    pub fn eval(&self, values: &Valuation) -> Result<Vec<f64>> {
        match self.node() {
            Node::Variable(v) => values
                .var(v.id())
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::MissingValue(v.name().to_string())),
            Node::Parameter(p) => values
                .param(p.id())
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::MissingValue(p.name().to_string())),
            Node::Constant(c) => Ok(c.clone()),
            Node::Index { arg, indices } => {
                let v = arg.eval(values)?;
                Ok(indices.iter().map(|&i| v[i]).collect())
            }
            Node::Apply {
                atom,
                args,
                exponent,
            } => {
                let vals = args
                    .iter()
                    .map(|a| a.eval(values))
                    .collect::<Result<Vec<_>>>()?;
                let n = self.len();
                let at = |k: usize, i: usize| {
                    let v = &vals[k];
                    if v.len() == 1 {
                        v[0]
                    } else {
                        v[i]
                    }
                };
                let out = match atom {
                    Atom::Mul => (0..n)
                        .map(|i| (0..vals.len()).map(|k| at(k, i)).product())
                        .collect(),
                    Atom::Add => (0..n)
                        .map(|i| (0..vals.len()).map(|k| at(k, i)).sum())
                        .collect(),
                    Atom::Maximum => (0..n)
                        .map(|i| {
                            (0..vals.len())
                                .map(|k| at(k, i))
                                .fold(f64::NEG_INFINITY, f64::max)
                        })
                        .collect(),
                    Atom::Minimum => (0..n)
                        .map(|i| {
                            (0..vals.len())
                                .map(|k| at(k, i))
                                .fold(f64::INFINITY, f64::min)
                        })
                        .collect(),
                    Atom::Sum => vec![vals[0].iter().sum()],
                    Atom::Prod => vec![vals[0].iter().product()],
                    Atom::Ratio => (0..n).map(|i| at(0, i) / at(1, i)).collect(),
                    Atom::DiffPos => {
                        let d: Vec<f64> = (0..n).map(|i| at(0, i) - at(1, i)).collect();
                        if let Some(bad) = d.iter().find(|v| **v <= 0.0) {
                            return Err(Error::Domain(format!(
                                "diff_pos argument difference {bad} is not positive"
                            )));
                        }
                        d
                    }
                    Atom::Exp => vals[0].iter().map(|v| v.exp()).collect(),
                    Atom::Log => {
                        if let Some(bad) = vals[0].iter().find(|v| **v <= 1.0) {
                            return Err(Error::Domain(format!(
                                "log argument {bad} is not above one"
                            )));
                        }
                        vals[0].iter().map(|v| v.ln()).collect()
                    }
                    Atom::One => vec![1.0],
                    Atom::Power => {
                        let p = match exponent {
                            Some(Exponent::Literal(p)) => p.clone(),
                            Some(Exponent::Param(e)) => e.eval(values)?,
                            None => return Err(Error::Exponent("power without exponent".into())),
                        };
                        (0..n)
                            .map(|i| {
                                let pi = if p.len() == 1 { p[0] } else { p[i] };
                                at(0, i).powf(pi)
                            })
                            .collect()
                    }
                };
                Ok(out)
            }
        }
    }
}

/// Numeric values for variables and parameters.
#[derive(Clone, Debug, Default)]
pub struct Valuation {
    vars: HashMap<VarId, Vec<f64>>,
    params: HashMap<ParamId, Vec<f64>>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_var(&mut self, v: &Variable, values: Vec<f64>) -> &mut Self {
        assert_eq!(v.len(), values.len(), "value length for `{}`", v.name());
        self.vars.insert(v.id(), values);
        self
    }

    pub fn set_param(&mut self, p: &Parameter, values: Vec<f64>) -> &mut Self {
        assert_eq!(p.len(), values.len(), "value length for `{}`", p.name());
        self.params.insert(p.id(), values);
        self
    }

    pub fn var(&self, id: VarId) -> Option<&[f64]> {
        self.vars.get(&id).map(Vec::as_slice)
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.get(&id).map(Vec::as_slice)
    }
}

/// Build an atom application, validating arity, shapes and the power rule.
pub fn build_atom(atom: Atom, args: Vec<Expr>, exponent: Option<Exponent>) -> Result<Expr> {
    let (lo, hi, expected) = atom.arity();
    if args.len() < lo || hi.is_some_and(|h| args.len() > h) {
        return Err(Error::Arity {
            atom: atom.name(),
            expected,
            got: args.len(),
        });
    }
    if atom != Atom::Power && exponent.is_some() {
        return Err(Error::Exponent(format!("`{atom}` takes no exponent")));
    }
    let lens: Vec<usize> = args.iter().map(Expr::len).collect();
    let len = match atom {
        Atom::Sum | Atom::Prod | Atom::One => 1,
        Atom::Exp | Atom::Log => lens[0],
        Atom::Power => {
            let exponent = exponent
                .as_ref()
                .ok_or_else(|| Error::Exponent("power requires an exponent".into()))?;
            check_exponent(exponent)?;
            if let Exponent::Param(_) = exponent {
                if args[0].is_parametrized() {
                    return Err(Error::PowerRule);
                }
            }
            broadcast_len("power", &[lens[0], exponent.len()])?
        }
        _ => broadcast_len(atom.name(), &lens)?,
    };
    let parametrized =
        args.iter().any(Expr::is_parametrized) || matches!(exponent, Some(Exponent::Param(_)));
    let has_variables = args.iter().any(Expr::has_variables);
    Ok(Expr(Arc::new(Inner {
        node: Node::Apply {
            atom,
            args,
            exponent,
        },
        len,
        parametrized,
        has_variables,
    })))
}

fn check_exponent(exponent: &Exponent) -> Result<()> {
    match exponent {
        Exponent::Literal(p) => {
            if p.is_empty() || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Exponent("literal exponents must be finite".into()));
            }
            Ok(())
        }
        Exponent::Param(_) => {
            if exponent.param_entries().is_none() {
                return Err(Error::Exponent(
                    "exponent must be a literal or a (possibly indexed) parameter".into(),
                ));
            }
            Ok(())
        }
    }
}

pub fn mul(args: impl IntoIterator<Item = Expr>) -> Result<Expr> {
    build_atom(Atom::Mul, args.into_iter().collect(), None)
}

pub fn add(args: impl IntoIterator<Item = Expr>) -> Result<Expr> {
    build_atom(Atom::Add, args.into_iter().collect(), None)
}

pub fn maximum(args: impl IntoIterator<Item = Expr>) -> Result<Expr> {
    build_atom(Atom::Maximum, args.into_iter().collect(), None)
}

pub fn minimum(args: impl IntoIterator<Item = Expr>) -> Result<Expr> {
    build_atom(Atom::Minimum, args.into_iter().collect(), None)
}

pub fn sum(x: &Expr) -> Result<Expr> {
    build_atom(Atom::Sum, vec![x.clone()], None)
}

pub fn prod(x: &Expr) -> Result<Expr> {
    build_atom(Atom::Prod, vec![x.clone()], None)
}

pub fn ratio(num: &Expr, den: &Expr) -> Result<Expr> {
    build_atom(Atom::Ratio, vec![num.clone(), den.clone()], None)
}

/// `y - x`, log-log concave on `x < y`.
pub fn diff_pos(y: &Expr, x: &Expr) -> Result<Expr> {
    build_atom(Atom::DiffPos, vec![y.clone(), x.clone()], None)
}

pub fn exp(x: &Expr) -> Result<Expr> {
    build_atom(Atom::Exp, vec![x.clone()], None)
}

pub fn log(x: &Expr) -> Result<Expr> {
    build_atom(Atom::Log, vec![x.clone()], None)
}

pub fn one() -> Expr {
    build_atom(Atom::One, vec![], None).expect("one() is well formed")
}

// Operator sugar for building trees in code. These panic on shape errors,
// like slice indexing; use the fallible builders for untrusted input.

impl ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        mul([self.clone(), rhs.clone()]).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        ratio(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        add([self.clone(), rhs.clone()]).unwrap_or_else(|e| panic!("{e}"))
    }
}
