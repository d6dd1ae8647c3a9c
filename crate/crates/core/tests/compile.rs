use llcp::compile::ConeLayout;
use llcp::models::{benchmark, hello_world, queuing};
use llcp::prelude::*;
use llcp::Valuation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{dot, normals, random_gp, random_like};

fn sample_problems() -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut out = vec![
        hello_world().unwrap().problem,
        queuing().unwrap().problem,
        benchmark(6, 3, 1).unwrap().problem,
    ];
    out.extend((0..10).map(|i| random_gp(&mut rng, 1 + i % 3).problem));
    out
}

#[test]
fn t_adjoint_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for mut p in sample_problems() {
        let c = p.compiled().unwrap();
        let data = &c.data;
        let db = normals(&mut rng, data.n_beta());
        let fwd = data.apply_t(&db).unwrap();
        let w = random_like(&mut rng, &fwd);
        let lhs = dot(&fwd.to_flat(), &w.to_flat());
        let rhs = dot(&db, &data.apply_t_adjoint(&w).unwrap());
        assert!(
            (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
            "{lhs} vs {rhs}"
        );
    }
}

#[test]
fn in_place_update_matches_fresh_instantiation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for mut p in sample_problems() {
        let c = p.compiled().unwrap();
        let data = &c.data;
        let b1 = normals(&mut rng, data.n_beta());
        let b2 = normals(&mut rng, data.n_beta());
        let mut prog = data.instantiate(&b1).unwrap();
        data.update(&b2, &mut prog).unwrap();
        assert_eq!(prog, data.instantiate(&b2).unwrap());
    }
}

/// The same problem with every parameter replaced by a constant of equal
/// value.
fn substituted(p: &Problem) -> Problem {
    let mut val = Valuation::new();
    for par in p.parameters() {
        val.set_param(&par, p.param_value(&par).unwrap().to_vec());
    }
    let obj = Objective {
        sense: p.objective().sense,
        expr: p.objective().expr.substitute_params(&val).unwrap(),
    };
    let cons = p
        .constraints()
        .iter()
        .map(|c| Constraint {
            kind: c.kind,
            lhs: c.lhs.substitute_params(&val).unwrap(),
            rhs: c.rhs.substitute_params(&val).unwrap(),
        })
        .collect();
    Problem::new(obj, cons).unwrap()
}

#[test]
fn instantiation_matches_recompiling_with_constants() {
    for mut p in sample_problems() {
        let prog = p.cone_program().unwrap();
        let mut q = substituted(&p);
        assert_eq!(q.n_param_entries(), 0);
        let fixed = q.cone_program().unwrap();
        assert_eq!(prog.layout, fixed.layout);
        assert_eq!(prog.a.nrows, fixed.a.nrows);
        assert_eq!(prog.a.ncols, fixed.a.ncols);
        let (da, df) = (prog.a.to_dense(), fixed.a.to_dense());
        for (ra, rf) in da.iter().zip(&df) {
            for (x, y) in ra.iter().zip(rf) {
                assert!(
                    (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
                    "A entry {x} vs {y}"
                );
            }
        }
        for (x, y) in prog
            .b
            .iter()
            .zip(&fixed.b)
            .chain(prog.c.iter().zip(&fixed.c))
        {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}");
        }
        assert!((prog.offset - fixed.offset).abs() <= 1e-12 * (1.0 + prog.offset.abs()));
    }
}

#[test]
fn each_beta_touches_only_its_t_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for mut p in sample_problems() {
        let c = p.compiled().unwrap();
        let data = &c.data;
        let beta = normals(&mut rng, data.n_beta());
        let base = data.instantiate(&beta).unwrap();
        let base_flat = flat(&base);
        for j in 0..data.n_beta() {
            let mut b = beta.clone();
            b[j] += 1.0;
            let moved = flat(&data.instantiate(&b).unwrap());
            let (rows, vals) = data.t().col(j);
            for (i, (x, y)) in base_flat.iter().zip(&moved).enumerate() {
                let want = rows.iter().position(|&r| r == i).map_or(0.0, |k| vals[k]);
                assert!((y - x - want).abs() <= 1e-12, "β {j}, slot {i}");
            }
        }
    }
}

fn flat(p: &llcp::compile::ConeProgram) -> Vec<f64> {
    let mut v = p.a.nzval.clone();
    v.extend_from_slice(&p.b);
    v.extend_from_slice(&p.c);
    v.push(p.offset);
    v
}

#[test]
fn two_term_posynomial_uses_two_exp_cones_and_one_row() {
    let x = Variable::scalar("x");
    let y = Variable::scalar("y");
    let obj = Objective::minimize(ratio(&one(), &(&x.expr() * &y.expr())).unwrap());
    let cons = vec![Constraint::leq(&add([x.expr(), y.expr()]).unwrap(), &one())];
    let mut p = Problem::new(obj, cons).unwrap();
    let data = &p.compiled().unwrap().data;
    // one row for the log-sum-exp, one for the constraint on its slack
    assert_eq!(
        data.layout(),
        ConeLayout {
            zero: 0,
            nonneg: 2,
            exp: 2
        }
    );
    // x̂, ŷ, the epigraph slack of x + y and one auxiliary column per term
    assert_eq!(data.n_cols(), 5);
}

#[test]
fn compilation_is_deterministic() {
    for (mut a, mut b) in [
        (
            hello_world().unwrap().problem,
            hello_world().unwrap().problem,
        ),
        (queuing().unwrap().problem, queuing().unwrap().problem),
        (
            benchmark(20, 3, 0).unwrap().problem,
            benchmark(20, 3, 0).unwrap().problem,
        ),
    ] {
        let (ca, cb) = (a.compiled().unwrap(), b.compiled().unwrap());
        assert_eq!(ca.data, cb.data);
        assert_eq!(ca.canonical.problem, cb.canonical.problem);
        assert_eq!(
            a.cone_program().unwrap().dump(),
            b.cone_program().unwrap().dump()
        );
    }
}
