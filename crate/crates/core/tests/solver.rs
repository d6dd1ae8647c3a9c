use llcp::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{dot, normals};

/// `Πⱼ xⱼ^aⱼ` over scalar variables.
fn monomial(xs: &[Expr], a: &[f64]) -> Expr {
    mul(xs
        .iter()
        .zip(a)
        .map(|(x, &p)| x.pow(p).unwrap())
        .collect::<Vec<_>>())
    .unwrap()
}

fn posynomial(xs: &[Expr], coefs: &[f64], exps: &[Vec<f64>]) -> Expr {
    add(coefs
        .iter()
        .zip(exps)
        .map(|(&c, a)| mul([Expr::constant(c).unwrap(), monomial(xs, a)]).unwrap())
        .collect::<Vec<_>>())
    .unwrap()
}

/// A geometric program whose KKT conditions hold at a chosen `u* = log x*`
/// with every constraint active and positive multipliers, together with its
/// optimal value.
fn planted_gp(rng: &mut ChaCha8Rng) -> (Problem, f64) {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=3);
    let vars: Vec<Variable> = (0..n).map(|j| Variable::scalar(format!("x{j}"))).collect();
    let xs: Vec<Expr> = vars.iter().map(Variable::expr).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut cons = Vec::new();
    let mut grad = vec![0.0; n];
    for _ in 0..m {
        let terms = rng.random_range(1..=3);
        let exps: Vec<Vec<f64>> = (0..terms).map(|_| normals(rng, n)).collect();
        let w: Vec<f64> = (0..terms).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        // term k contributes weight w_k / Σw at u*, so the posynomial is one there
        let coefs: Vec<f64> = exps
            .iter()
            .zip(&w)
            .map(|(a, wk)| wk / total * (-dot(a, &u)).exp())
            .collect();
        let lam = rng.random_range(0.5..2.0);
        for (a, wk) in exps.iter().zip(&w) {
            for j in 0..n {
                grad[j] += lam * wk / total * a[j];
            }
        }
        cons.push(Constraint::leq(&posynomial(&xs, &coefs, &exps), &one()));
    }
    // objective gradient at u* must be -Σ λᵢ ∇Fᵢ(u*)
    let target: Vec<f64> = grad.iter().map(|g| -g).collect();
    let a1 = normals(rng, n);
    let a2: Vec<f64> = target.iter().zip(&a1).map(|(t, a)| 2.0 * t - a).collect();
    let k: f64 = rng.random_range(0.5..3.0);
    let coefs = [
        0.5 * k * (-dot(&a1, &u)).exp(),
        0.5 * k * (-dot(&a2, &u)).exp(),
    ];
    let obj = Objective::minimize(posynomial(&xs, &coefs, &[a1, a2]));
    (Problem::new(obj, cons).unwrap(), k)
}

#[test]
fn planted_geometric_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..50 {
        let (mut p, want) = planted_gp(&mut rng);
        let sol = p.solve(&SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "trial {trial}");
        let got = sol.value.unwrap();
        assert!(
            (got - want).abs() <= 1e-6 * want,
            "trial {trial}: {got} vs {want}"
        );
    }
}

#[test]
fn warm_start_after_small_change_is_cheaper() {
    let mut h = llcp::models::hello_world().unwrap();
    let cold = h.problem.solve(&SolveOptions::default()).unwrap();
    h.problem.set_value(&h.a, vec![2.02]).unwrap();
    let warm = h.problem.solve(&SolveOptions::default()).unwrap();
    assert_eq!(warm.status, Status::Optimal);
    assert!(
        warm.iterations < cold.iterations,
        "{} vs {}",
        warm.iterations,
        cold.iterations
    );
}

#[test]
fn infeasible_problem_is_reported() {
    let x = Variable::scalar("x");
    let obj = Objective::minimize(x.expr());
    let cons = vec![
        Constraint::leq(&x.expr(), &Expr::constant(1.0).unwrap()),
        Constraint::geq(&x.expr(), &Expr::constant(2.0).unwrap()),
    ];
    let mut p = Problem::new(obj, cons).unwrap();
    let sol = p.solve(&SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
    assert!(p.var_value(&x).is_none());
}

#[test]
fn unbounded_problem_is_reported() {
    let x = Variable::scalar("x");
    let obj = Objective::minimize(x.expr());
    let cons = vec![Constraint::leq(&x.expr(), &Expr::constant(1.0).unwrap())];
    let mut p = Problem::new(obj, cons).unwrap();
    assert_eq!(
        p.solve(&SolveOptions::default()).unwrap().status,
        Status::Unbounded
    );
}
