//! JSON problem files.
//!
//! ```json
//! {
//!   "variables":   [{"name": "x", "len": 1, "pos": true}],
//!   "parameters":  [{"name": "c", "len": 1, "pos": true, "value": [2.0]}],
//!   "objective":   {"sense": "minimize", "expr": {"atom": "ratio", "args": [{"atom": "one"}, {"ref": "x"}]}},
//!   "constraints": [{"kind": "leq", "lhs": {"ref": "x"}, "rhs": {"ref": "c"}}]
//! }
//! ```
//!
//! Expression nodes are `{"atom": id, "args": [...], "attrs": {...}}`,
//! `{"ref": name}` with an optional `"index"` (an integer or a list), or
//! `{"const": number}` (a number or a list). The only attribute is the
//! exponent `"p"` of `power`: a number, a list, or a parameter reference.

use std::collections::{HashMap, HashSet};
use std::fmt;

use llcp::expr::{build_atom, Exponent, Node};
use llcp::{
    Atom, Constraint, ConstraintKind, Expr, Objective, Parameter, Problem, Sense, Variable,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// A problem-file error with its position: a line and column for syntax
/// errors, a field path such as `constraints[0].lhs.args[1]` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileError {
    pub location: String,
    pub message: String,
}

impl FileError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        FileError {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for FileError {}

fn default_len() -> usize {
    1
}

fn default_pos() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDecl {
    pub name: String,
    #[serde(default = "default_len")]
    pub len: usize,
    #[serde(default = "default_pos")]
    pub pos: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterDecl {
    pub name: String,
    #[serde(default = "default_len")]
    pub len: usize,
    #[serde(default = "default_pos")]
    pub pos: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseDecl {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDecl {
    Leq,
    Eq,
}

/// An expression node of a problem file.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode {
    Apply {
        atom: String,
        args: Vec<ExprNode>,
        exponent: Option<ExponentNode>,
    },
    Ref {
        name: String,
        index: Option<Vec<usize>>,
    },
    Const(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExponentNode {
    Literal(Vec<f64>),
    Ref {
        name: String,
        index: Option<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveDecl {
    pub sense: SenseDecl,
    pub expr: ExprNode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintDecl {
    pub kind: KindDecl,
    pub lhs: ExprNode,
    pub rhs: ExprNode,
}

/// A parsed problem file.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub variables: Vec<VariableDecl>,
    pub parameters: Vec<ParameterDecl>,
    pub objective: ObjectiveDecl,
    pub constraints: Vec<ConstraintDecl>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    sense: SenseDecl,
    expr: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    kind: KindDecl,
    lhs: Value,
    rhs: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    variables: Vec<VariableDecl>,
    #[serde(default)]
    parameters: Vec<ParameterDecl>,
    objective: RawObjective,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>, FileError> {
    match v {
        Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        Value::Array(items) if !items.is_empty() => items
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_f64()
                    .ok_or_else(|| FileError::at(format!("{path}[{i}]"), "expected a number"))
            })
            .collect(),
        _ => Err(FileError::at(
            path,
            "expected a number or a non-empty list of numbers",
        )),
    }
}

fn indices(v: &Value, path: &str) -> Result<Vec<usize>, FileError> {
    let one = |x: &Value, p: String| {
        x.as_u64()
            .map(|i| i as usize)
            .ok_or_else(|| FileError::at(p, "expected a non-negative integer"))
    };
    match v {
        Value::Array(items) if !items.is_empty() => items
            .iter()
            .enumerate()
            .map(|(i, x)| one(x, format!("{path}[{i}]")))
            .collect(),
        Value::Array(_) => Err(FileError::at(path, "empty index list")),
        x => Ok(vec![one(x, path.to_string())?]),
    }
}

fn object<'a>(
    v: &'a Value,
    path: &str,
    allowed: &[&str],
) -> Result<&'a Map<String, Value>, FileError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FileError::at(path, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(FileError::at(path, format!("unknown field `{k}`")));
    }
    Ok(obj)
}

fn reference(
    obj: &Map<String, Value>,
    path: &str,
) -> Result<(String, Option<Vec<usize>>), FileError> {
    let name = obj["ref"]
        .as_str()
        .ok_or_else(|| FileError::at(format!("{path}.ref"), "expected a name"))?
        .to_string();
    let index = obj
        .get("index")
        .map(|v| indices(v, &format!("{path}.index")))
        .transpose()?;
    Ok((name, index))
}

impl ExprNode {
    /// Parse an expression node; `path` locates it in the file.
    pub fn from_value(v: &Value, path: &str) -> Result<ExprNode, FileError> {
        let obj = v
            .as_object()
            .ok_or_else(|| FileError::at(path, "expected an expression object"))?;
        if obj.contains_key("atom") {
            let obj = object(v, path, &["atom", "args", "attrs"])?;
            let atom = obj["atom"]
                .as_str()
                .ok_or_else(|| FileError::at(format!("{path}.atom"), "expected an atom id"))?;
            if Atom::from_name(atom).is_none() {
                let known: Vec<&str> = Atom::ALL.iter().map(|a| a.name()).collect();
                return Err(FileError::at(
                    format!("{path}.atom"),
                    format!("unknown atom `{atom}` (known: {})", known.join(", ")),
                ));
            }
            let args = match obj.get("args") {
                None => Vec::new(),
                Some(Value::Array(items)) => items
                    .iter()
                    .enumerate()
                    .map(|(i, a)| ExprNode::from_value(a, &format!("{path}.args[{i}]")))
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(FileError::at(format!("{path}.args"), "expected a list")),
            };
            let exponent = match obj.get("attrs") {
                None => None,
                Some(attrs) => {
                    let apath = format!("{path}.attrs");
                    let attrs = object(attrs, &apath, &["p"])?;
                    attrs
                        .get("p")
                        .map(|p| ExponentNode::from_value(p, &format!("{apath}.p")))
                        .transpose()?
                }
            };
            Ok(ExprNode::Apply {
                atom: atom.to_string(),
                args,
                exponent,
            })
        } else if obj.contains_key("ref") {
            let obj = object(v, path, &["ref", "index"])?;
            let (name, index) = reference(obj, path)?;
            Ok(ExprNode::Ref { name, index })
        } else if obj.contains_key("const") {
            let obj = object(v, path, &["const"])?;
            Ok(ExprNode::Const(numbers(
                &obj["const"],
                &format!("{path}.const"),
            )?))
        } else {
            Err(FileError::at(
                path,
                "expected one of `atom`, `ref` or `const`",
            ))
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            ExprNode::Apply {
                atom,
                args,
                exponent,
            } => {
                let mut obj = Map::new();
                obj.insert("atom".into(), json!(atom));
                if !args.is_empty() {
                    obj.insert(
                        "args".into(),
                        Value::Array(args.iter().map(ExprNode::to_value).collect()),
                    );
                }
                if let Some(e) = exponent {
                    obj.insert("attrs".into(), json!({ "p": e.to_value() }));
                }
                Value::Object(obj)
            }
            ExprNode::Ref { name, index } => ref_value(name, index),
            ExprNode::Const(v) => json!({ "const": number_value(v) }),
        }
    }
}

impl ExponentNode {
    fn from_value(v: &Value, path: &str) -> Result<ExponentNode, FileError> {
        if v.is_object() {
            let obj = object(v, path, &["ref", "index"])?;
            if !obj.contains_key("ref") {
                return Err(FileError::at(
                    path,
                    "exponent must be a number, a list or a parameter reference",
                ));
            }
            let (name, index) = reference(obj, path)?;
            Ok(ExponentNode::Ref { name, index })
        } else {
            Ok(ExponentNode::Literal(numbers(v, path)?))
        }
    }

    fn to_value(&self) -> Value {
        match self {
            ExponentNode::Literal(v) => number_value(v),
            ExponentNode::Ref { name, index } => ref_value(name, index),
        }
    }
}

fn number_value(v: &[f64]) -> Value {
    if v.len() == 1 {
        json!(v[0])
    } else {
        json!(v)
    }
}

fn ref_value(name: &str, index: &Option<Vec<usize>>) -> Value {
    match index {
        None => json!({ "ref": name }),
        Some(ix) if ix.len() == 1 => json!({ "ref": name, "index": ix[0] }),
        Some(ix) => json!({ "ref": name, "index": ix }),
    }
}

impl ProblemFile {
    /// Parse a problem file from JSON text.
    pub fn parse(text: &str) -> Result<ProblemFile, FileError> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| {
            FileError::at(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        ProblemFile::from_raw(raw)
    }

    pub fn from_value(value: Value) -> Result<ProblemFile, FileError> {
        let raw: RawFile =
            serde_json::from_value(value).map_err(|e| FileError::at("file", e.to_string()))?;
        ProblemFile::from_raw(raw)
    }

    fn from_raw(raw: RawFile) -> Result<ProblemFile, FileError> {
        let objective = ObjectiveDecl {
            sense: raw.objective.sense,
            expr: ExprNode::from_value(&raw.objective.expr, "objective.expr")?,
        };
        let constraints = raw
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(ConstraintDecl {
                    kind: c.kind,
                    lhs: ExprNode::from_value(&c.lhs, &format!("constraints[{i}].lhs"))?,
                    rhs: ExprNode::from_value(&c.rhs, &format!("constraints[{i}].rhs"))?,
                })
            })
            .collect::<Result<_, FileError>>()?;
        Ok(ProblemFile {
            variables: raw.variables,
            parameters: raw.parameters,
            objective,
            constraints,
        })
    }

    pub fn to_value(&self) -> Value {
        json!({
            "variables": self.variables,
            "parameters": self.parameters,
            "objective": {
                "sense": self.objective.sense,
                "expr": self.objective.expr.to_value(),
            },
            "constraints": self.constraints.iter().map(|c| json!({
                "kind": c.kind,
                "lhs": c.lhs.to_value(),
                "rhs": c.rhs.to_value(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }

    /// Build the problem. Parameters with a value in the file are set.
    pub fn build(&self) -> Result<Loaded, FileError> {
        let mut vars: HashMap<&str, Variable> = HashMap::new();
        let mut params: HashMap<&str, Parameter> = HashMap::new();
        let mut seen = HashSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            let path = format!("variables[{i}]");
            if !seen.insert(v.name.as_str()) {
                return Err(FileError::at(path, format!("duplicate name `{}`", v.name)));
            }
            if !v.pos {
                return Err(FileError::at(
                    format!("{path}.pos"),
                    "variables of a log-log convex program are positive",
                ));
            }
            if v.len == 0 {
                return Err(FileError::at(
                    format!("{path}.len"),
                    "length must be positive",
                ));
            }
            vars.insert(&v.name, Variable::new(&v.name, v.len));
        }
        for (i, p) in self.parameters.iter().enumerate() {
            let path = format!("parameters[{i}]");
            if !seen.insert(p.name.as_str()) {
                return Err(FileError::at(path, format!("duplicate name `{}`", p.name)));
            }
            if p.len == 0 {
                return Err(FileError::at(
                    format!("{path}.len"),
                    "length must be positive",
                ));
            }
            params.insert(&p.name, Parameter::with_sign(&p.name, p.len, p.pos));
        }
        let scope = Scope {
            vars: &vars,
            params: &params,
        };
        let obj_expr = scope.expr(&self.objective.expr, "objective.expr")?;
        let objective = match self.objective.sense {
            SenseDecl::Minimize => Objective::minimize(obj_expr),
            SenseDecl::Maximize => Objective::maximize(obj_expr),
        };
        let mut constraints = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs = scope.expr(&c.lhs, &format!("constraints[{i}].lhs"))?;
            let rhs = scope.expr(&c.rhs, &format!("constraints[{i}].rhs"))?;
            constraints.push(match c.kind {
                KindDecl::Leq => Constraint::leq(&lhs, &rhs),
                KindDecl::Eq => Constraint::eq(&lhs, &rhs),
            });
        }
        let mut problem = Problem::new(objective, constraints)
            .map_err(|e| FileError::at("file", e.to_string()))?;
        let mut with_values = HashSet::new();
        for (i, p) in self.parameters.iter().enumerate() {
            let Some(value) = &p.value else { continue };
            // parameters that appear nowhere are not part of the problem
            let Some(par) = problem.parameter(&p.name) else {
                continue;
            };
            problem
                .set_value(&par, value.clone())
                .map_err(|e| FileError::at(format!("parameters[{i}].value"), e.to_string()))?;
            with_values.insert(p.name.clone());
        }
        Ok(Loaded {
            problem,
            with_values,
        })
    }

    /// The canonical file for a problem: declarations in table order and
    /// current parameter values.
    pub fn from_problem(problem: &Problem) -> Result<ProblemFile, FileError> {
        let variables = problem
            .variables()
            .iter()
            .map(|v| VariableDecl {
                name: v.name().to_string(),
                len: v.len(),
                pos: true,
            })
            .collect();
        let parameters = problem
            .parameters()
            .iter()
            .map(|p| ParameterDecl {
                name: p.name().to_string(),
                len: p.len(),
                pos: p.is_positive(),
                value: problem.param_value(p).map(<[f64]>::to_vec),
            })
            .collect();
        let obj = problem.objective();
        Ok(ProblemFile {
            variables,
            parameters,
            objective: ObjectiveDecl {
                sense: match obj.sense {
                    Sense::Minimize => SenseDecl::Minimize,
                    Sense::Maximize => SenseDecl::Maximize,
                },
                expr: node_of(&obj.expr, "objective.expr")?,
            },
            constraints: problem
                .constraints()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    Ok(ConstraintDecl {
                        kind: match c.kind {
                            ConstraintKind::Leq => KindDecl::Leq,
                            ConstraintKind::Eq => KindDecl::Eq,
                        },
                        lhs: node_of(&c.lhs, &format!("constraints[{i}].lhs"))?,
                        rhs: node_of(&c.rhs, &format!("constraints[{i}].rhs"))?,
                    })
                })
                .collect::<Result<_, FileError>>()?,
        })
    }
}

fn leaf_name(e: &Expr) -> Option<String> {
    match e.node() {
        Node::Variable(v) => Some(v.name().to_string()),
        Node::Parameter(p) => Some(p.name().to_string()),
        _ => None,
    }
}

fn node_of(e: &Expr, path: &str) -> Result<ExprNode, FileError> {
    match e.node() {
        Node::Variable(_) | Node::Parameter(_) => Ok(ExprNode::Ref {
            name: leaf_name(e).unwrap(),
            index: None,
        }),
        Node::Constant(c) => Ok(ExprNode::Const(c.clone())),
        Node::Index { arg, indices } => Ok(ExprNode::Ref {
            name: leaf_name(arg).ok_or_else(|| {
                FileError::at(path, "only variables and parameters can be indexed")
            })?,
            index: Some(indices.clone()),
        }),
        Node::Apply {
            atom,
            args,
            exponent,
        } => Ok(ExprNode::Apply {
            atom: atom.name().to_string(),
            args: args
                .iter()
                .enumerate()
                .map(|(i, a)| node_of(a, &format!("{path}.args[{i}]")))
                .collect::<Result<_, _>>()?,
            exponent: match exponent {
                None => None,
                Some(Exponent::Literal(v)) => Some(ExponentNode::Literal(v.clone())),
                Some(Exponent::Param(p)) => match node_of(p, &format!("{path}.attrs.p"))? {
                    ExprNode::Ref { name, index } => Some(ExponentNode::Ref { name, index }),
                    _ => return Err(FileError::at(path, "malformed parameter exponent")),
                },
            },
        }),
    }
}

struct Scope<'a> {
    vars: &'a HashMap<&'a str, Variable>,
    params: &'a HashMap<&'a str, Parameter>,
}

impl Scope<'_> {
    fn reference(
        &self,
        name: &str,
        index: &Option<Vec<usize>>,
        path: &str,
    ) -> Result<Expr, FileError> {
        let base = if let Some(v) = self.vars.get(name) {
            v.expr()
        } else if let Some(p) = self.params.get(name) {
            p.expr()
        } else {
            return Err(FileError::at(
                format!("{path}.ref"),
                format!("undeclared name `{name}`"),
            ));
        };
        match index {
            None => Ok(base),
            Some(ix) => base
                .gather(ix)
                .map_err(|e| FileError::at(format!("{path}.index"), e.to_string())),
        }
    }

    fn expr(&self, node: &ExprNode, path: &str) -> Result<Expr, FileError> {
        match node {
            ExprNode::Ref { name, index } => self.reference(name, index, path),
            ExprNode::Const(v) => Expr::constant_vec(v.clone())
                .map_err(|e| FileError::at(format!("{path}.const"), e.to_string())),
            ExprNode::Apply {
                atom,
                args,
                exponent,
            } => {
                let atom = Atom::from_name(atom).ok_or_else(|| {
                    FileError::at(format!("{path}.atom"), format!("unknown atom `{atom}`"))
                })?;
                let args = args
                    .iter()
                    .enumerate()
                    .map(|(i, a)| self.expr(a, &format!("{path}.args[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let exponent = match exponent {
                    None => None,
                    Some(ExponentNode::Literal(v)) => Some(Exponent::Literal(v.clone())),
                    Some(ExponentNode::Ref { name, index }) => {
                        let ppath = format!("{path}.attrs.p");
                        if !self.params.contains_key(name.as_str()) {
                            return Err(FileError::at(
                                format!("{ppath}.ref"),
                                format!("`{name}` is not a declared parameter"),
                            ));
                        }
                        Some(Exponent::Param(self.reference(name, index, &ppath)?))
                    }
                };
                build_atom(atom, args, exponent).map_err(|e| FileError::at(path, e.to_string()))
            }
        }
    }
}

/// A problem built from a file, with the names of parameters whose value
/// came from the file.
pub struct Loaded {
    pub problem: Problem,
    pub with_values: HashSet<String>,
}
