//! Bundled example problems.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::Result;
use crate::expr::{add, diff_pos, mul, one, prod, ratio, sum, Expr, Parameter, Variable};
use crate::problem::{Constraint, Objective, Problem};

/// `minimize 1/(xyz)  s.t.  a(xy + xz + yz) ≤ b,  x ≥ y^c`.
pub struct HelloWorld {
    pub problem: Problem,
    pub x: Variable,
    pub y: Variable,
    pub z: Variable,
    pub a: Parameter,
    pub b: Parameter,
    pub c: Parameter,
}

/// The hello-world problem with `a = 2`, `b = 1`, `c = 0.5`.
pub fn hello_world() -> Result<HelloWorld> {
    let x = Variable::scalar("x");
    let y = Variable::scalar("y");
    let z = Variable::scalar("z");
    let a = Parameter::positive("a", 1);
    let b = Parameter::positive("b", 1);
    let c = Parameter::real("c", 1);
    let (xe, ye, ze) = (x.expr(), y.expr(), z.expr());
    let objective =
        Objective::minimize(ratio(&one(), &mul([xe.clone(), ye.clone(), ze.clone()])?)?);
    let pairs = add([&xe * &ye, &xe * &ze, &ye * &ze])?;
    let constraints = vec![
        Constraint::leq(&mul([a.expr(), pairs])?, &b.expr()),
        Constraint::geq(&xe, &ye.pow_param(&c.expr())?),
    ];
    let mut problem = Problem::new(objective, constraints)?;
    problem.set_value(&a, vec![2.0])?;
    problem.set_value(&b, vec![1.0])?;
    problem.set_value(&c, vec![0.5])?;
    Ok(HelloWorld {
        problem,
        x,
        y,
        z,
        a,
        b,
        c,
    })
}

/// Service-rate design for a system of two queues.
pub struct Queuing {
    pub problem: Problem,
    /// Arrival rates λ.
    pub lam: Variable,
    /// Service rates μ.
    pub mu: Variable,
    pub gamma: Parameter,
    pub q_max: Parameter,
    pub w_max: Parameter,
    pub d_max: Parameter,
    pub lam_min: Parameter,
    pub mu_max: Parameter,
}

impl Queuing {
    pub fn parameters(&self) -> [&Parameter; 6] {
        [
            &self.gamma,
            &self.q_max,
            &self.w_max,
            &self.d_max,
            &self.lam_min,
            &self.mu_max,
        ]
    }
}

/// The two-queue instance with `γ = (1, 2)`, `q_max = (4, 5)`,
/// `w_max = (2.5, 3)`, `d_max = (2, 2)`, `λ_min = (0.5, 0.8)`, `μ_max = 3`.
pub fn queuing() -> Result<Queuing> {
    let n = 2;
    let lam = Variable::new("lam", n);
    let mu = Variable::new("mu", n);
    let gamma = Parameter::positive("gamma", n);
    let q_max = Parameter::positive("q_max", n);
    let w_max = Parameter::positive("w_max", n);
    let d_max = Parameter::positive("d_max", n);
    let lam_min = Parameter::positive("lam_min", n);
    let mu_max = Parameter::positive("mu_max", 1);
    let (l, m) = (lam.expr(), mu.expr());
    // service load ℓ = μ/λ
    let load = ratio(&m, &l)?;
    // q = ℓ⁻² / (1 - ℓ⁻¹) with ℓ⁻¹ = λ/μ
    let q = ratio(&load.pow(-2.0)?, &diff_pos(&one(), &ratio(&l, &m)?)?)?;
    let w = add([ratio(&q, &l)?, m.pow(-1.0)?])?;
    let d = diff_pos(&m, &l)?.pow(-1.0)?;
    let objective = Objective::minimize(sum(&mul([gamma.expr(), load])?)?);
    let constraints = vec![
        Constraint::leq(&q, &q_max.expr()),
        Constraint::leq(&w, &w_max.expr()),
        Constraint::leq(&d, &d_max.expr()),
        Constraint::geq(&l, &lam_min.expr()),
        Constraint::leq(&sum(&m)?, &mu_max.expr()),
    ];
    let mut problem = Problem::new(objective, constraints)?;
    problem.set_value(&gamma, vec![1.0, 2.0])?;
    problem.set_value(&q_max, vec![4.0, 5.0])?;
    problem.set_value(&w_max, vec![2.5, 3.0])?;
    problem.set_value(&d_max, vec![2.0, 2.0])?;
    problem.set_value(&lam_min, vec![0.5, 0.8])?;
    problem.set_value(&mu_max, vec![3.0])?;
    Ok(Queuing {
        problem,
        lam,
        mu,
        gamma,
        q_max,
        w_max,
        d_max,
        lam_min,
        mu_max,
    })
}

/// The geometric program
///
/// ```text
/// minimize    Πⱼ xⱼ^A₀ⱼ
/// subject to  Σᵢ cᵢ Πⱼ xⱼ^Aᵢⱼ ≤ 1,   l ≤ x ≤ u
/// ```
///
/// with `A` stored row-major in one parameter of length `m·n`.
pub struct Benchmark {
    pub problem: Problem,
    pub x: Variable,
    pub a: Parameter,
    pub c: Parameter,
    pub l: Parameter,
    pub u: Parameter,
}

/// Random parameter values for [`benchmark`]: `Aᵢⱼ ~ N(0, 1/n)`,
/// `c` positive with `Σ c = 1/2`, `l ∈ [0.5, 0.9]`, `u ∈ [1.1, 2]`. Since
/// `x = 1` satisfies every constraint strictly, the instance is feasible.
pub fn benchmark_values(n: usize, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (n as f64).sqrt()).expect("valid normal");
    let a: Vec<f64> = (0..m * n).map(|_| normal.sample(&mut rng)).collect();
    let w = Uniform::new(0.5, 1.5).expect("valid range");
    let raw: Vec<f64> = (0..m).map(|_| w.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let c = raw.iter().map(|v| 0.5 * v / total).collect();
    let lo = Uniform::new(0.5, 0.9).expect("valid range");
    let hi = Uniform::new(1.1, 2.0).expect("valid range");
    let l = (0..n).map(|_| lo.sample(&mut rng)).collect();
    let u = (0..n).map(|_| hi.sample(&mut rng)).collect();
    (a, c, l, u)
}

pub fn benchmark(n: usize, m: usize, seed: u64) -> Result<Benchmark> {
    let x = Variable::new("x", n);
    let a = Parameter::real("A", m * n);
    let c = Parameter::positive("c", m);
    let l = Parameter::positive("l", n);
    let u = Parameter::positive("u", n);
    let xe = x.expr();
    let monomial = |i: usize| -> Result<Expr> {
        let row: Vec<usize> = (i * n..(i + 1) * n).collect();
        prod(&xe.pow_param(&a.expr().gather(&row)?)?)
    };
    let objective = Objective::minimize(monomial(0)?);
    let terms = (0..m)
        .map(|i| mul([c.expr().index(i)?, monomial(i)?]))
        .collect::<Result<Vec<_>>>()?;
    let constraints = vec![
        Constraint::leq(&add(terms)?, &one()),
        Constraint::leq(&l.expr(), &xe),
        Constraint::leq(&xe, &u.expr()),
    ];
    let mut problem = Problem::new(objective, constraints)?;
    let (av, cv, lv, uv) = benchmark_values(n, m, seed);
    problem.set_value(&a, av)?;
    problem.set_value(&c, cv)?;
    problem.set_value(&l, lv)?;
    problem.set_value(&u, uv)?;
    Ok(Benchmark {
        problem,
        x,
        a,
        c,
        l,
        u,
    })
}

/// Parameters of the sorted monomial regression model, shared between the
/// per-sample problems.
#[derive(Clone)]
pub struct RegressionParams {
    /// Exponents, `m × n` row-major.
    pub a: Parameter,
    /// Positive coefficients, length `m`.
    pub c: Parameter,
    pub n: usize,
    pub m: usize,
}

impl RegressionParams {
    pub fn new(n: usize, m: usize) -> Self {
        RegressionParams {
            a: Parameter::real("A", m * n),
            c: Parameter::positive("c", m),
            n,
            m,
        }
    }
}

/// One prediction problem of the regression model for input `x`:
///
/// ```text
/// minimize    Σ (zᵢ/yᵢ + yᵢ/zᵢ)
/// subject to  yᵢ ≤ yᵢ₊₁,   zᵢ = cᵢ Πⱼ xⱼ^Aᵢⱼ
/// ```
///
/// The prediction is the optimal `y`.
pub struct RegressionModel {
    pub problem: Problem,
    pub y: Variable,
    pub z: Variable,
}

pub fn regression_model(params: &RegressionParams, x: &[f64]) -> Result<RegressionModel> {
    let (n, m) = (params.n, params.m);
    assert_eq!(x.len(), n, "input length");
    let y = Variable::new("y", m);
    let z = Variable::new("z", m);
    let (ye, ze) = (y.expr(), z.expr());
    let xc = Expr::constant_vec(x.to_vec())?;
    let objective = Objective::minimize(sum(&add([ratio(&ze, &ye)?, ratio(&ye, &ze)?])?)?);
    let mut constraints = Vec::new();
    for i in 0..m.saturating_sub(1) {
        constraints.push(Constraint::leq(&ye.index(i)?, &ye.index(i + 1)?));
    }
    for i in 0..m {
        let row: Vec<usize> = (i * n..(i + 1) * n).collect();
        let mono = mul([
            params.c.expr().index(i)?,
            prod(&xc.pow_param(&params.a.expr().gather(&row)?)?)?,
        ])?;
        constraints.push(Constraint::eq(&ze.index(i)?, &mono));
    }
    Ok(RegressionModel {
        problem: Problem::new(objective, constraints)?,
        y,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_are_dgp() {
        assert!(hello_world().unwrap().problem.is_dgp().is_dgp());
        assert!(queuing().unwrap().problem.is_dgp().is_dgp());
        assert!(benchmark(5, 2, 0).unwrap().problem.is_dgp().is_dgp());
        let p = RegressionParams::new(3, 2);
        assert!(regression_model(&p, &[1.0, 2.0, 0.5])
            .unwrap()
            .problem
            .is_dgp()
            .is_dgp());
    }
}
