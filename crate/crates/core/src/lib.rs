//! Parametrized log-log convex programs.
//!
//! Problems are written in the disciplined geometric programming grammar
//! over positive variables and parameters, verified with the log-log
//! curvature rules, canonicalized into a convex problem, compiled to a cone
//! program whose data depend affinely on the parameters, and solved with an
//! operator-splitting cone solver. The solution map can be differentiated
//! forward ([`Problem::derivative`]) and in reverse ([`Problem::backward`]).
//!
//! ```
//! use llcp::prelude::*;
//!
//! let x = Variable::scalar("x");
//! let y = Variable::scalar("y");
//! let c = Parameter::positive("c", 1);
//! let obj = Objective::minimize(ratio(&one(), &(&x.expr() * &y.expr())).unwrap());
//! let cons = vec![Constraint::leq(&add([x.expr(), y.expr()]).unwrap(), &c.expr())];
//! let mut p = Problem::new(obj, cons).unwrap();
//! p.set_value(&c, vec![2.0]).unwrap();
//! let sol = p.solve(&SolveOptions::default()).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((p.var_value(&x).unwrap()[0] - 1.0).abs() < 1e-5);
//! ```

pub mod canon;
pub mod compile;
pub mod cones;
pub mod curvature;
pub mod diff;
pub mod error;
pub mod expr;
pub mod ldl;
pub mod lsqr;
pub mod models;
pub mod problem;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use expr::{Atom, Expr, Parameter, Valuation, Variable};
pub use problem::{Constraint, ConstraintKind, Objective, Problem, Sense, SolveOptions};
pub use solver::{Settings, Status};

/// Common imports for building and solving problems.
pub mod prelude {
    pub use crate::curvature::{curvature, Curvature};
    pub use crate::expr::{add, diff_pos, exp, log, maximum, minimum, mul, one, prod, ratio, sum};
    pub use crate::expr::{Expr, Parameter, Variable};
    pub use crate::problem::{Constraint, Objective, Problem, Sense, SolveOptions};
    pub use crate::solver::{Settings, Status};
}
