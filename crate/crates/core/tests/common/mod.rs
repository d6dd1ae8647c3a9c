#![allow(dead_code)]

use llcp::compile::{ConeLayout, ConeProgram, DataDelta};
use llcp::prelude::*;
use llcp::sparse::CscMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub mod exp_oracle;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// A random cone program with a planted primal-dual solution
/// `b = Ax + s`, `c = -Aᵀy`, `s ∈ K`, `y ∈ K*`, `⟨s, y⟩ = 0`.
pub struct Planted {
    pub program: ConeProgram,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> CscMatrix {
    let mut trip = Vec::new();
    for j in 0..n {
        // a diagonal-ish entry keeps the columns independent
        trip.push((j % m, j, 1.0 + normal(rng).abs()));
        for i in 0..m {
            if i != j % m && rng.random::<f64>() < density {
                trip.push((i, j, normal(rng)));
            }
        }
    }
    CscMatrix::from_triplets(m, n, &trip)
}

/// Strictly complementary planted program: every exp cone pairs a boundary
/// point `t·(ρ, 1, e^ρ)` with its orthogonal dual ray, and exactly
/// `n - zero - exp` nonnegative rows are active, so the solution is unique
/// and the solution map is differentiable.
pub fn planted_program(
    rng: &mut ChaCha8Rng,
    n: usize,
    layout: ConeLayout,
    density: f64,
) -> Planted {
    assert!(layout.zero + layout.exp <= n && layout.nonneg + layout.zero + layout.exp >= n);
    let m = layout.rows();
    let a = random_matrix(rng, m, n, density);
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    for i in 0..layout.zero {
        y[i] = normal(rng);
    }
    let active = n - layout.zero - layout.exp;
    for k in 0..layout.nonneg {
        let i = layout.zero + k;
        if k < active {
            y[i] = rng.random_range(0.5..2.0);
        } else {
            s[i] = rng.random_range(0.5..2.0);
        }
    }
    for k in 0..layout.exp {
        let i = layout.zero + layout.nonneg + 3 * k;
        let rho: f64 = rng.random_range(-1.0..1.0);
        let t = rng.random_range(0.5..2.0);
        let lam = rng.random_range(0.5..2.0);
        let e = rho.exp();
        s[i..i + 3].copy_from_slice(&[t * rho, t, t * e]);
        y[i..i + 3].copy_from_slice(&[-lam * e, lam * (rho - 1.0) * e, lam]);
    }
    let x = normals(rng, n);
    let ax = a.mul_vec(&x);
    let b = ax.iter().zip(&s).map(|(a, s)| a + s).collect();
    let c = a.mul_t_vec(&y).iter().map(|v| -v).collect();
    Planted {
        program: ConeProgram::new(a, b, c, layout).unwrap(),
        x,
        y,
        s,
    }
}

pub fn random_delta(rng: &mut ChaCha8Rng, p: &ConeProgram) -> DataDelta {
    DataDelta {
        da: normals(rng, p.a.nnz()),
        db: normals(rng, p.m()),
        dc: normals(rng, p.n()),
        doffset: 0.0,
    }
}

/// Random delta with the shape of `like`.
pub fn random_like(rng: &mut ChaCha8Rng, like: &DataDelta) -> DataDelta {
    DataDelta {
        da: normals(rng, like.da.len()),
        db: normals(rng, like.db.len()),
        dc: normals(rng, like.dc.len()),
        doffset: normal(rng),
    }
}

pub fn perturbed(p: &ConeProgram, d: &DataDelta, h: f64) -> ConeProgram {
    let mut q = p.clone();
    for (v, dv) in q.a.nzval.iter_mut().zip(&d.da) {
        *v += h * dv;
    }
    for (v, dv) in q.b.iter_mut().zip(&d.db) {
        *v += h * dv;
    }
    for (v, dv) in q.c.iter_mut().zip(&d.dc) {
        *v += h * dv;
    }
    q
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const EXPONENTS: [f64; 7] = [-2.0, -1.0, -0.5, 0.5, 1.5, 2.0, 3.0];

/// Random expression tree over `vars`, built from the atom library.
pub fn random_expr(rng: &mut ChaCha8Rng, vars: &[Expr], depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.85) {
            vars[rng.random_range(0..vars.len())].clone()
        } else {
            Expr::constant(rng.random_range(0.5..2.0)).unwrap()
        };
    }
    let child = |rng: &mut ChaCha8Rng| random_expr(rng, vars, depth - 1);
    let k = rng.random_range(2..4);
    match rng.random_range(0..9) {
        0 => mul((0..k).map(|_| child(rng)).collect::<Vec<_>>()).unwrap(),
        1 => add((0..k).map(|_| child(rng)).collect::<Vec<_>>()).unwrap(),
        2 => maximum((0..k).map(|_| child(rng)).collect::<Vec<_>>()).unwrap(),
        3 => minimum((0..k).map(|_| child(rng)).collect::<Vec<_>>()).unwrap(),
        4 => ratio(&child(rng), &child(rng)).unwrap(),
        5 => child(rng)
            .pow(EXPONENTS[rng.random_range(0..EXPONENTS.len())])
            .unwrap(),
        6 => diff_pos(
            &Expr::constant(rng.random_range(2.0..20.0)).unwrap(),
            &child(rng),
        )
        .unwrap(),
        7 => exp(&child(rng)).unwrap(),
        _ => log(&add([Expr::constant(1.0).unwrap(), child(rng)]).unwrap()).unwrap(),
    }
}

/// Random non-constant expression whose analyzed curvature satisfies `want`.
pub fn random_expr_with(
    rng: &mut ChaCha8Rng,
    vars: &[Expr],
    depth: usize,
    want: fn(Curvature) -> bool,
) -> Expr {
    loop {
        let e = random_expr(rng, vars, depth);
        let c = curvature(&e);
        if want(c) && c != Curvature::Constant {
            return e;
        }
    }
}

/// A random geometric program in `n` scalar variables:
///
/// ```text
/// minimize    Σₖ c0ₖ Πⱼ xⱼ^e0ₖⱼ
/// subject to  Σₖ c1ₖ Πⱼ xⱼ^a1ₖⱼ ≤ 1,   l ≤ x ≤ u
/// ```
///
/// with every coefficient, exponent and bound a parameter.
pub struct RandomGp {
    pub problem: Problem,
    pub x: Variable,
    pub params: Vec<Parameter>,
}

fn posynomial(x: &Expr, n: usize, terms: usize, c: &Parameter, e: &Parameter) -> Expr {
    add((0..terms)
        .map(|k| {
            let row: Vec<usize> = (k * n..(k + 1) * n).collect();
            mul([
                c.expr().index(k).unwrap(),
                prod(&x.pow_param(&e.expr().gather(&row).unwrap()).unwrap()).unwrap(),
            ])
            .unwrap()
        })
        .collect::<Vec<_>>())
    .unwrap()
}

pub fn random_gp(rng: &mut ChaCha8Rng, n: usize) -> RandomGp {
    let terms = 2;
    let x = Variable::new("x", n);
    let c0 = Parameter::positive("c0", terms);
    let e0 = Parameter::real("e0", terms * n);
    let c1 = Parameter::positive("c1", terms);
    let a1 = Parameter::real("a1", terms * n);
    let l = Parameter::positive("l", n);
    let u = Parameter::positive("u", n);
    let xe = x.expr();
    let objective = Objective::minimize(posynomial(&xe, n, terms, &c0, &e0));
    let constraints = vec![
        Constraint::leq(&posynomial(&xe, n, terms, &c1, &a1), &one()),
        Constraint::leq(&l.expr(), &xe),
        Constraint::leq(&xe, &u.expr()),
    ];
    let mut problem = Problem::new(objective, constraints).unwrap();
    let uniform = |rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..k).map(|_| rng.random_range(lo..hi)).collect()
    };
    let v = uniform(rng, terms, 0.5, 2.0);
    problem.set_value(&c0, v).unwrap();
    problem.set_value(&e0, normals(rng, terms * n)).unwrap();
    let v = uniform(rng, terms, 0.1, 0.4);
    problem.set_value(&c1, v).unwrap();
    problem.set_value(&a1, normals(rng, terms * n)).unwrap();
    let v = uniform(rng, n, 0.3, 0.7);
    problem.set_value(&l, v).unwrap();
    let v = uniform(rng, n, 1.5, 3.0);
    problem.set_value(&u, v).unwrap();
    RandomGp {
        problem,
        x,
        params: vec![c0, e0, c1, a1, l, u],
    }
}
