//! Log-log curvature analysis.
//!
//! A function is log-log convex when `F(u) = log f(exp(u))` is convex. The
//! analysis applies the composition rule over the atom signatures below; it is
//! sound but incomplete, so a semantically log-log convex expression may still
//! be reported as [`Curvature::Unknown`].

use std::fmt;

use crate::expr::{Atom, Exponent, Expr, Node};
use crate::problem::{Constraint, ConstraintKind, Objective, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Curvature {
    Constant,
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    fn rank(self) -> u8 {
        match self {
            Curvature::Constant => 0,
            Curvature::Affine => 1,
            Curvature::Convex | Curvature::Concave => 2,
            Curvature::Unknown => 3,
        }
    }

    /// Partial order `self ⊑ other`.
    pub fn le(self, other: Curvature) -> bool {
        self == other || self.rank() < other.rank() && !(self.rank() == 2 && other.rank() == 2)
    }

    /// Least upper bound.
    pub fn join(self, other: Curvature) -> Curvature {
        if self.le(other) {
            other
        } else if other.le(self) {
            self
        } else {
            Curvature::Unknown
        }
    }

    /// Greatest lower bound.
    pub fn meet(self, other: Curvature) -> Curvature {
        if self.le(other) {
            self
        } else if other.le(self) {
            other
        } else {
            Curvature::Affine
        }
    }

    pub fn is_convex(self) -> bool {
        self.le(Curvature::Convex)
    }

    pub fn is_concave(self) -> bool {
        self.le(Curvature::Concave)
    }

    pub fn is_affine(self) -> bool {
        self.le(Curvature::Affine)
    }

    pub fn name(self) -> &'static str {
        match self {
            Curvature::Constant => "log-log constant",
            Curvature::Affine => "log-log affine",
            Curvature::Convex => "log-log convex",
            Curvature::Concave => "log-log concave",
            Curvature::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Curvature together with the parametrization flag of the subtree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurvatureInfo {
    pub curvature: Curvature,
    pub parametrized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    Unspecified,
}

/// Static description of an atom: intrinsic curvature and per-argument
/// monotonicity.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSignature {
    pub atom: Atom,
    pub curvature: Curvature,
    pub monotonicity: Vec<Monotonicity>,
    pub domain: &'static str,
}

impl AtomSignature {
    pub fn arg_monotonicity(&self, i: usize) -> Monotonicity {
        // n-ary atoms repeat their single entry
        self.monotonicity
            .get(i)
            .or(self.monotonicity.last())
            .copied()
            .unwrap_or(Monotonicity::Unspecified)
    }
}

/// Signature of `atom`; the power atom's monotonicity depends on its exponent.
pub fn signature(atom: Atom, exponent: Option<&Exponent>) -> AtomSignature {
    use Monotonicity::*;
    let (curvature, monotonicity, domain) = match atom {
        Atom::Mul | Atom::Prod => (Curvature::Affine, vec![Nondecreasing], "positive"),
        Atom::Add | Atom::Sum => (Curvature::Convex, vec![Nondecreasing], "positive"),
        Atom::Maximum => (Curvature::Convex, vec![Nondecreasing], "positive"),
        Atom::Minimum => (Curvature::Concave, vec![Nondecreasing], "positive"),
        Atom::Ratio => (
            Curvature::Affine,
            vec![Nondecreasing, Nonincreasing],
            "positive",
        ),
        Atom::DiffPos => (
            Curvature::Concave,
            vec![Nondecreasing, Nonincreasing],
            "x < y",
        ),
        Atom::Exp => (Curvature::Convex, vec![Nondecreasing], "positive"),
        Atom::Log => (Curvature::Concave, vec![Nondecreasing], "x > 1"),
        Atom::One => (Curvature::Constant, vec![], "none"),
        Atom::Power => {
            let mono = match exponent {
                Some(Exponent::Literal(p)) if p.iter().all(|v| *v >= 0.0) => Nondecreasing,
                Some(Exponent::Literal(p)) if p.iter().all(|v| *v <= 0.0) => Nonincreasing,
                Some(e @ Exponent::Param(_)) => match e.param_entries() {
                    Some((p, _)) if p.is_positive() => Nondecreasing,
                    _ => Unspecified,
                },
                _ => Unspecified,
            };
            (Curvature::Affine, vec![mono], "positive")
        }
    };
    AtomSignature {
        atom,
        curvature,
        monotonicity,
        domain,
    }
}

/// Tightest curvature derivable by the composition rule.
pub fn curvature(e: &Expr) -> Curvature {
    curvature_info(e).curvature
}

pub fn curvature_info(e: &Expr) -> CurvatureInfo {
    let curvature = match e.node() {
        Node::Variable(_) => Curvature::Affine,
        Node::Parameter(p) if p.is_positive() => Curvature::Affine,
        Node::Parameter(_) => Curvature::Unknown,
        Node::Constant(_) => Curvature::Constant,
        Node::Index { arg, .. } => curvature(arg),
        Node::Apply {
            atom,
            args,
            exponent,
        } => {
            let sig = signature(*atom, exponent.as_ref());
            let arg_curv: Vec<Curvature> = args.iter().map(curvature).collect();
            compose(&sig, &arg_curv, e.is_constant())
        }
    };
    CurvatureInfo {
        curvature,
        parametrized: e.is_parametrized(),
    }
}

fn compose(sig: &AtomSignature, args: &[Curvature], constant: bool) -> Curvature {
    if args.contains(&Curvature::Unknown) {
        return Curvature::Unknown;
    }
    if constant {
        return Curvature::Constant;
    }
    let fits = |want_convex: bool| {
        args.iter()
            .enumerate()
            .all(|(i, &c)| match sig.arg_monotonicity(i) {
                Monotonicity::Nondecreasing if want_convex => c.is_convex(),
                Monotonicity::Nondecreasing => c.is_concave(),
                Monotonicity::Nonincreasing if want_convex => c.is_concave(),
                Monotonicity::Nonincreasing => c.is_convex(),
                Monotonicity::Unspecified => c.is_affine(),
            })
    };
    let convex = sig.curvature.is_convex() && fits(true);
    let concave = sig.curvature.is_concave() && fits(false);
    match (convex, concave) {
        (true, true) => Curvature::Affine,
        (true, false) => Curvature::Convex,
        (false, true) => Curvature::Concave,
        (false, false) => Curvature::Unknown,
    }
}

/// A DGP rule violation, located by a path of child indices from the root of
/// the named expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub location: String,
    pub path: Vec<usize>,
    pub node: String,
    pub message: String,
}

impl Diagnostic {
    pub fn path_string(&self) -> String {
        let mut s = self.location.clone();
        for i in &self.path {
            s.push_str(&format!(".args[{i}]"));
        }
        s
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: `{}` {}",
            self.path_string(),
            self.node,
            self.message
        )
    }
}

/// Outcome of the DGP check.
#[derive(Clone, Debug, PartialEq)]
pub struct DgpReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl DgpReport {
    pub fn is_dgp(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.diagnostics.iter().map(ToString::to_string).collect()
    }
}

fn short(e: &Expr) -> String {
    let s = e.to_string();
    if s.chars().count() > 60 {
        let head: String = s.chars().take(57).collect();
        format!("{head}...")
    } else {
        s
    }
}

/// Find the deepest node whose arguments all have curvature but whose
/// composition does not.
fn locate_unknown(e: &Expr, path: &mut Vec<usize>) -> (Vec<usize>, Expr, String) {
    for (i, c) in e.children().iter().enumerate() {
        if curvature(c) == Curvature::Unknown {
            path.push(i);
            return locate_unknown(c, path);
        }
    }
    let msg = match e.node() {
        Node::Parameter(_) => {
            "is a parameter of undeclared sign used outside a power exponent".to_string()
        }
        Node::Apply {
            atom,
            args,
            exponent,
        } => {
            let sig = signature(*atom, exponent.as_ref());
            let parts: Vec<String> = args
                .iter()
                .enumerate()
                .map(|(i, a)| format!("argument {i} is {}", curvature(a)))
                .collect();
            let mono: Vec<String> = (0..args.len())
                .map(|i| format!("{:?}", sig.arg_monotonicity(i)).to_lowercase())
                .collect();
            format!(
                "has unknown log-log curvature: `{atom}` is {} with monotonicity [{}], but {}",
                sig.curvature,
                mono.join(", "),
                parts.join(", ")
            )
        }
        _ => "has unknown log-log curvature".to_string(),
    };
    (path.clone(), e.clone(), msg)
}

fn require(
    diags: &mut Vec<Diagnostic>,
    location: String,
    e: &Expr,
    ok: fn(Curvature) -> bool,
    want: &str,
) {
    let c = curvature(e);
    if ok(c) {
        return;
    }
    if c == Curvature::Unknown {
        let (path, node, message) = locate_unknown(e, &mut Vec::new());
        diags.push(Diagnostic {
            location,
            path,
            node: short(&node),
            message,
        });
    } else {
        diags.push(Diagnostic {
            location,
            path: vec![],
            node: short(e),
            message: format!("is {c}, expected {want}"),
        });
    }
}

/// Check the DGP problem rules: minimize log-log convex (or maximize log-log
/// concave), `convex <= concave` inequalities, `affine == affine` equalities.
pub fn check_dgp(objective: &Objective, constraints: &[Constraint]) -> DgpReport {
    let mut diags = Vec::new();
    match objective.sense {
        Sense::Minimize => require(
            &mut diags,
            "objective".into(),
            &objective.expr,
            Curvature::is_convex,
            "log-log convex",
        ),
        Sense::Maximize => require(
            &mut diags,
            "objective".into(),
            &objective.expr,
            Curvature::is_concave,
            "log-log concave",
        ),
    }
    if objective.expr.len() != 1 {
        diags.push(Diagnostic {
            location: "objective".into(),
            path: vec![],
            node: short(&objective.expr),
            message: format!("must be scalar, has length {}", objective.expr.len()),
        });
    }
    for (i, c) in constraints.iter().enumerate() {
        match c.kind {
            ConstraintKind::Leq => {
                require(
                    &mut diags,
                    format!("constraints[{i}].lhs"),
                    &c.lhs,
                    Curvature::is_convex,
                    "log-log convex",
                );
                require(
                    &mut diags,
                    format!("constraints[{i}].rhs"),
                    &c.rhs,
                    Curvature::is_concave,
                    "log-log concave",
                );
            }
            ConstraintKind::Eq => {
                require(
                    &mut diags,
                    format!("constraints[{i}].lhs"),
                    &c.lhs,
                    Curvature::is_affine,
                    "log-log affine",
                );
                require(
                    &mut diags,
                    format!("constraints[{i}].rhs"),
                    &c.rhs,
                    Curvature::is_affine,
                    "log-log affine",
                );
            }
        }
    }
    DgpReport { diagnostics: diags }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::*;

    fn var(n: &str) -> Expr {
        Variable::scalar(n).expr()
    }

    #[test]
    fn lattice() {
        use Curvature::*;
        assert_eq!(Convex.join(Concave), Unknown);
        assert_eq!(Convex.meet(Concave), Affine);
        assert_eq!(Constant.join(Affine), Affine);
        assert_eq!(Affine.join(Convex), Convex);
        assert_eq!(Unknown.meet(Concave), Concave);
        assert!(Constant.le(Convex) && Affine.le(Concave) && !Convex.le(Concave));
        for a in [Constant, Affine, Convex, Concave, Unknown] {
            for b in [Constant, Affine, Convex, Concave, Unknown] {
                assert!(a.le(a.join(b)) && b.le(a.join(b)));
                assert!(a.meet(b).le(a) && a.meet(b).le(b));
            }
        }
    }

    #[test]
    fn parametrized_monomial_is_affine() {
        let n = 4;
        let x = Variable::new("x", n).expr();
        let a = Parameter::real("a", n).expr();
        let c = Parameter::positive("c", 1).expr();
        let mono = mul([c, prod(&x.pow_param(&a).unwrap()).unwrap()]).unwrap();
        assert_eq!(curvature(&mono), Curvature::Affine);
        assert!(curvature_info(&mono).parametrized);
    }

    #[test]
    fn log_of_inner_product_has_no_curvature() {
        let x = Variable::new("x", 3).expr();
        let c = Parameter::positive("c", 3).expr();
        let inner = sum(&mul([c.clone(), x.clone()]).unwrap()).unwrap();
        assert_eq!(curvature(&inner), Curvature::Convex);
        assert_eq!(curvature(&log(&inner).unwrap()), Curvature::Unknown);
        assert_eq!(curvature(&exp(&inner).unwrap()), Curvature::Convex);
        let cx = mul([c, x]).unwrap();
        assert_eq!(curvature(&exp(&cx).unwrap()), Curvature::Convex);
        assert_eq!(curvature(&log(&cx).unwrap()), Curvature::Concave);
    }

    #[test]
    fn single_variable_is_affine() {
        assert_eq!(curvature(&var("x")), Curvature::Affine);
        assert_eq!(
            curvature(&Expr::constant(2.0).unwrap()),
            Curvature::Constant
        );
        assert_eq!(curvature(&one()), Curvature::Constant);
    }

    #[test]
    fn real_parameter_outside_exponent_is_unknown() {
        let a = Parameter::real("a", 1).expr();
        assert_eq!(curvature(&mul([a, var("x")]).unwrap()), Curvature::Unknown);
    }

    #[test]
    fn reciprocal_flips_concave_to_convex() {
        let x = var("x");
        let y = var("y");
        let d = diff_pos(&y, &x).unwrap();
        assert_eq!(curvature(&d), Curvature::Concave);
        let inv = ratio(&one(), &d).unwrap();
        assert_eq!(curvature(&inv), Curvature::Convex);
        let m = minimum([x.clone(), y.clone()]).unwrap();
        assert_eq!(
            curvature(&ratio(&Expr::constant(2.0).unwrap(), &m).unwrap()),
            Curvature::Convex
        );
    }

    #[test]
    fn power_monotonicity() {
        let x = var("x");
        let y = var("y");
        let s = add([x.clone(), y.clone()]).unwrap();
        assert_eq!(curvature(&s.pow(2.0).unwrap()), Curvature::Convex);
        assert_eq!(curvature(&s.pow(-1.0).unwrap()), Curvature::Concave);
        let real = Parameter::real("a", 1).expr();
        let pos = Parameter::positive("b", 1).expr();
        assert_eq!(curvature(&s.pow_param(&real).unwrap()), Curvature::Unknown);
        assert_eq!(curvature(&s.pow_param(&pos).unwrap()), Curvature::Convex);
    }

    #[test]
    fn diagnostics_point_at_offending_node() {
        let x = Variable::new("x", 2).expr();
        let c = Parameter::positive("c", 2).expr();
        let bad = log(&sum(&mul([c, x.clone()]).unwrap()).unwrap()).unwrap();
        let obj = Objective::minimize(sum(&x).unwrap());
        let cons = vec![Constraint::leq(
            &mul([bad.clone(), Expr::constant(2.0).unwrap()]).unwrap(),
            &one(),
        )];
        let report = check_dgp(&obj, &cons);
        assert!(!report.is_dgp());
        let d = &report.diagnostics[0];
        assert_eq!(d.location, "constraints[0].lhs");
        assert_eq!(d.path, vec![0]);
        assert!(d.node.starts_with("log("), "{}", d.node);
    }
}
