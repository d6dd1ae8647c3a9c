//! Acceptance suite: one PASS/FAIL line per criterion, details indented
//! below. Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use llcp::cones::{project_exp, ConeBlock};
use llcp::models::{benchmark, hello_world, queuing};
use llcp::prelude::*;
use llcp::Error;
use llcp_cli::regression::{fit, FitConfig};
use llcp_cli::{run, Cli};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

#[path = "../../core/tests/common/mod.rs"]
mod common;
use common::exp_oracle::{dist, oracle};
use common::{dot, normals, random_gp, rel_err};

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.pass &= ok;
        self.details
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, detail: String) {
        self.details.push(format!("     {detail}"));
    }
}

fn close(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn cli(args: &[&str]) -> Value {
    let cli = Cli::try_parse_from(std::iter::once("llcp").chain(args.iter().copied()))
        .expect("valid arguments");
    let report = run(&cli);
    assert_eq!(report.code, 0, "{args:?}: {}", report.text);
    report.json
}

fn array(v: &Value) -> Vec<f64> {
    v.as_array()
        .expect("array")
        .iter()
        .map(|x| x.as_f64().expect("number"))
        .collect()
}

fn named<'a>(doc: &'a Value, key: &str, name: &str) -> &'a Value {
    doc[key]
        .as_array()
        .expect("array")
        .iter()
        .find(|v| v["name"] == name)
        .expect("named entry")
}

fn hello_solve() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut h = hello_world().expect("hello");
    let sol = h.problem.solve(&SolveOptions::default()).expect("solve");
    let elapsed = start.elapsed();
    let got: Vec<f64> = [&h.x, &h.y, &h.z]
        .iter()
        .map(|v| h.problem.var_value(v).expect("value")[0])
        .collect();
    let want = [0.5612147, 0.3149620, 0.3689206];
    out.check(
        sol.status == Status::Optimal,
        format!("status {}", sol.status),
    );
    out.check(
        close(&got, &want, 1e-4),
        format!("x, y, z = {} vs {} (tol 1e-4)", fmt(&got), fmt(&want)),
    );
    out.check(
        elapsed < Duration::from_secs(1),
        format!("runtime {:.3} s (< 1 s)", elapsed.as_secs_f64()),
    );
    out
}

fn hello_sensitivity() -> Outcome {
    let mut out = Outcome::new();
    let doc = cli(&[
        "sensitivity",
        "--example",
        "hello",
        "--delta",
        "a=0.01",
        "--delta",
        "b=0.01",
        "--delta",
        "c=0.01",
        "--verify",
        "--json",
    ]);
    let pick = |field: &str| -> Vec<f64> {
        ["x", "y", "z"]
            .iter()
            .map(|n| array(&named(&doc, "variables", n)[field])[0])
            .collect()
    };
    let (pred, actual) = (pick("predicted"), pick("actual"));
    let want_pred = [0.55729, 0.31783, 0.37179];
    let want_actual = [0.55732, 0.31781, 0.37178];
    out.check(
        close(&pred, &want_pred, 5e-4),
        format!("predicted {} vs {} (tol 5e-4)", fmt(&pred), fmt(&want_pred)),
    );
    out.check(
        close(&actual, &want_actual, 5e-4),
        format!(
            "actual {} vs {} (tol 5e-4)",
            fmt(&actual),
            fmt(&want_actual)
        ),
    );
    out
}

fn hello_backward() -> Outcome {
    let mut out = Outcome::new();
    let doc = cli(&[
        "backward",
        "--example",
        "hello",
        "--descent",
        "0.5",
        "--json",
    ]);
    let d = &doc["descent"];
    for (key, want) in [
        ("original", 0.27513),
        ("predicted", 0.22709),
        ("actual", 0.22942),
    ] {
        let got = d[key].as_f64().unwrap_or(f64::NAN);
        out.check(
            (got - want).abs() <= 2e-3,
            format!("{key} {got:.6} vs {want} (tol 2e-3)"),
        );
    }
    out
}

/// Derivative of the queuing solution along a unit parameter direction, as
/// (λ, μ, ℓ = μ/λ) with the ℓ derivative from the chain rule.
fn queuing_column(p: &mut Problem, name: &str, j: usize) -> [Vec<f64>; 3] {
    let k = p.n_param_entries();
    let mut off = 0;
    for par in p.parameters() {
        if par.name() == name {
            break;
        }
        off += par.len();
    }
    let mut da = vec![0.0; k];
    da[off + j] = 1.0;
    let (dx, _) = p.apply_derivative(&da).expect("derivative");
    let vars = p.variables();
    let (mut lam, mut dlam, mut mu, mut dmu) = (vec![], vec![], vec![], vec![]);
    let mut o = 0;
    for v in &vars {
        let x = p.var_value(v).expect("value").to_vec();
        let d = dx[o..o + v.len()].to_vec();
        o += v.len();
        match v.name() {
            "lam" => (lam, dlam) = (x, d),
            "mu" => (mu, dmu) = (x, d),
            _ => unreachable!(),
        }
    }
    let dl: Vec<f64> = (0..2)
        .map(|i| (dmu[i] * lam[i] - mu[i] * dlam[i]) / (lam[i] * lam[i]))
        .collect();
    [dlam, dmu, dl]
}

fn queuing_criterion() -> Outcome {
    let mut out = Outcome::new();
    let mut q = queuing().expect("queuing");
    let sol = q.problem.solve(&SolveOptions::default()).expect("solve");
    out.check(
        sol.status == Status::Optimal,
        format!("status {}", sol.status),
    );
    let lam = q.problem.var_value(&q.lam).expect("value").to_vec();
    let mu = q.problem.var_value(&q.mu).expect("value").to_vec();
    out.check(
        close(&lam, &[0.828, 1.172], 1e-2),
        format!("lambda {} vs (0.828, 1.172) (tol 1e-2)", fmt(&lam)),
    );
    out.check(
        close(&mu, &[1.328, 1.672], 1e-2),
        format!("mu {} vs (1.328, 1.672) (tol 1e-2)", fmt(&mu)),
    );

    // reference derivatives: rows lambda, mu, l; entry (i, j) = d var_i / d param_j
    let reference: [(&str, usize, [[f64; 2]; 3], [[f64; 2]; 3]); 3] = [
        (
            "d_max",
            2,
            [[-0.028, 0.028], [-0.28, 0.28], [-0.28, -0.10]],
            [[0.30, -0.052], [0.30, -0.30], [-0.22, -0.20]],
        ),
        (
            "mu_max",
            1,
            [[0.46, 0.54], [0.46, 0.54], [-0.33, -0.20]],
            [[0.0; 2]; 3],
        ),
        (
            "gamma",
            2,
            [[0.34, -0.34], [0.34, -0.34], [-0.24, 0.12]],
            [[-0.17, 0.17], [-0.17, 0.17], [0.12, -0.061]],
        ),
    ];
    let rows = ["lambda", "mu", "l"];
    let mut matched = 0;
    let mut total = 0;
    for (param, cols, first, second) in reference {
        for j in 0..cols {
            let col = queuing_column(&mut q.problem, param, j);
            let want = if j == 0 { first } else { second };
            for r in 0..3 {
                total += 2;
                let ok = close(&col[r], &want[r], 0.02);
                matched += col[r]
                    .iter()
                    .zip(&want[r])
                    .filter(|(g, w)| (*g - *w).abs() <= 0.02)
                    .count();
                let label = format!(
                    "d {}/d {param}[{j}] = {} vs reference {}",
                    rows[r],
                    fmt(&col[r]),
                    fmt(&want[r])
                );
                if ok {
                    out.note(label);
                } else {
                    out.note(format!("{label} (outside 0.02)"));
                }
            }
        }
    }
    out.check(
        matched == total,
        format!("table entries within 0.02: {matched}/{total}"),
    );

    let mut worst: f64 = 0.0;
    for name in ["w_max", "q_max", "lam_min"] {
        for j in 0..2 {
            let col = queuing_column(&mut q.problem, name, j);
            worst = col[..2].iter().flatten().fold(worst, |m, x| m.max(x.abs()));
        }
    }
    out.check(
        worst <= 1e-6,
        format!("max |derivative| wrt w_max, q_max, lam_min = {worst:.2e} (<= 1e-6)"),
    );

    let doc = cli(&[
        "sensitivity",
        "--example",
        "queuing",
        "--rel-delta",
        "0.01",
        "--verify",
        "--json",
    ]);
    let reference_pct = [
        ("lam", "predicted_percent", [2.3, 1.8]),
        ("lam", "actual_percent", [2.0, 2.0]),
        ("mu", "predicted_percent", [1.1, 0.9]),
        ("mu", "actual_percent", [0.9, 1.1]),
    ];
    for (var, field, want) in reference_pct {
        let got = array(&named(&doc, "variables", var)[field]);
        let diff = got
            .iter()
            .zip(&want)
            .fold(0.0f64, |m, (g, w)| m.max((g - w).abs()));
        out.check(
            diff <= 0.3,
            format!(
                "{var} {field} {} vs {} (max diff {diff:.3} pp, tol 0.3)",
                fmt(&got),
                fmt(&want)
            ),
        );
    }
    out
}

fn tight() -> SolveOptions {
    SolveOptions {
        settings: Settings {
            eps: 1e-11,
            ..Settings::default()
        },
        derivatives: true,
    }
}

fn chain_rule_error(p: &mut Problem, rng: &mut ChaCha8Rng) -> Result<f64, Error> {
    let sol = p.solve(&tight())?;
    if sol.status != Status::Optimal {
        return Err(Error::NonOptimal(sol.status));
    }
    let alpha = p.alpha()?;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let da: Vec<f64> = alpha
            .iter()
            .map(|a| a.abs().max(0.1) * rng.random_range(-1.0..1.0))
            .collect();
        p.solve(&tight())?;
        let (pred, _) = p.apply_derivative(&da)?;
        let h = 1e-5;
        let mut at = |s: f64| -> Result<Vec<f64>, Error> {
            let a: Vec<f64> = alpha.iter().zip(&da).map(|(a, d)| a + s * d).collect();
            p.set_alpha(&a)?;
            let sol = p.solve(&tight())?;
            if sol.status != Status::Optimal {
                return Err(Error::NonOptimal(sol.status));
            }
            Ok(p.solution().expect("optimal"))
        };
        let (plus, minus) = (at(h)?, at(-h)?);
        p.set_alpha(&alpha)?;
        let fd: Vec<f64> = plus
            .iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        worst = worst.max(rel_err(&pred, &fd));
    }
    Ok(worst)
}

fn derivative_suite() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut problems = vec![
        ("hello".to_string(), hello_world().expect("hello").problem),
        ("queuing".to_string(), queuing().expect("queuing").problem),
    ];
    for i in 0..30 {
        problems.push((
            format!("random {i}"),
            random_gp(&mut rng, 1 + i % 3).problem,
        ));
    }
    let mut worst_fd: f64 = 0.0;
    let mut worst_adj: f64 = 0.0;
    let mut failures = Vec::new();
    for (label, p) in problems.iter_mut() {
        match chain_rule_error(p, &mut rng) {
            Ok(e) => worst_fd = worst_fd.max(e),
            Err(e) => failures.push(format!("{label}: {e}")),
        }
        if p.solve(&SolveOptions::default()).map(|s| s.status) != Ok(Status::Optimal) {
            failures.push(format!("{label}: adjoint solve not optimal"));
            continue;
        }
        for _ in 0..3 {
            let da = normals(&mut rng, p.n_param_entries());
            let dx = normals(&mut rng, p.n_var_entries());
            let (Ok((fwd, _)), Ok((adj, _))) = (p.apply_derivative(&da), p.apply_adjoint(&dx))
            else {
                failures.push(format!("{label}: derivative failed"));
                continue;
            };
            let (lhs, rhs) = (dot(&fwd, &dx), dot(&da, &adj));
            worst_adj = worst_adj.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12));
        }
    }
    let elapsed = start.elapsed();
    out.check(
        failures.is_empty(),
        format!(
            "32 problems solved and differentiated ({} failures)",
            failures.len()
        ),
    );
    for f in failures {
        out.note(f);
    }
    out.check(
        worst_fd <= 1e-3,
        format!("chain rule vs central differences: max relative error {worst_fd:.2e} (<= 1e-3)"),
    );
    out.check(
        worst_adj <= 1e-6,
        format!("adjoint consistency: max relative gap {worst_adj:.2e} (<= 1e-6)"),
    );
    out.check(
        elapsed < Duration::from_secs(300),
        format!("runtime {:.1} s (< 300 s)", elapsed.as_secs_f64()),
    );
    out
}

fn polar(b: ConeBlock, v: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    let mut out = vec![0.0; v.len()];
    b.dual().project(&neg, &mut out);
    out.iter().map(|x| -x).collect()
}

fn cone_suite() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let blocks = [
        ConeBlock::Zero(3),
        ConeBlock::NonNeg(3),
        ConeBlock::Free(3),
        ConeBlock::Exp,
        ConeBlock::DualExp,
    ];
    let (mut moreau, mut idem): (f64, f64) = (0.0, 0.0);
    for _ in 0..2000 {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let v: Vec<f64> = (0..3)
            .map(|_| scale * rng.random_range(-5.0..5.0))
            .collect();
        for b in blocks {
            let mut p = vec![0.0; 3];
            b.project(&v, &mut p);
            let q = polar(b, &v);
            let s = 1.0 + scale;
            for i in 0..3 {
                moreau = moreau.max((v[i] - p[i] - q[i]).abs() / s);
            }
            moreau = moreau.max(dot(&p, &q).abs() / (s * s));
            let mut pp = vec![0.0; 3];
            b.project(&p, &mut pp);
            idem = idem.max(
                rel_err(&pp, &p).min((0..3).map(|i| (pp[i] - p[i]).abs()).fold(0.0, f64::max) / s),
            );
        }
    }
    out.check(moreau <= 1e-9, format!("Moreau decomposition, 2000 vectors x 5 blocks: max scaled error {moreau:.2e} (<= 1e-9)"));
    out.check(
        idem <= 1e-9,
        format!("projection idempotence: max scaled error {idem:.2e} (<= 1e-9)"),
    );

    let fixtures = [
        [1.0, 1.0, 1.0],
        [2.0, 0.5, 1.0],
        [-1.0, -2.0, 0.5],
        [0.3, -0.7, 2.0],
        [3.0, 2.0, -1.0],
        [-0.5, 1.5, 0.1],
        [1.0, -1.0, -1.0],
        [0.1, 0.2, 0.3],
        [4.0, 1.0, 10.0],
        [-2.0, 0.5, -0.3],
    ];
    let worst = fixtures
        .iter()
        .map(|v| dist(project_exp(*v), oracle(*v)))
        .fold(0.0, f64::max);
    out.check(worst <= 1e-9, format!("exp-cone projection vs bisection oracle, {} fixtures: max distance {worst:.2e} (<= 1e-9)", fixtures.len()));

    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 300 {
        let v = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        ];
        for b in [
            ConeBlock::Exp,
            ConeBlock::DualExp,
            ConeBlock::NonNeg(3),
            ConeBlock::Zero(3),
            ConeBlock::Free(3),
        ] {
            let d = b.derivative(&v);
            if d.is_nonsmooth() {
                continue;
            }
            let h = 1e-6;
            for k in 0..3 {
                let mut e = [0.0; 3];
                e[k] = 1.0;
                let mut jd = [0.0; 3];
                d.apply(&e, &mut jd);
                let (mut vp, mut vm) = (v, v);
                vp[k] += h;
                vm[k] -= h;
                let (mut pp, mut pm) = ([0.0; 3], [0.0; 3]);
                b.project(&vp, &mut pp);
                b.project(&vm, &mut pm);
                for i in 0..3 {
                    worst = worst.max(((pp[i] - pm[i]) / (2.0 * h) - jd[i]).abs());
                }
            }
        }
        checked += 1;
    }
    out.check(worst <= 1e-5, format!("projection derivative vs finite differences, 300 points: max error {worst:.2e} (<= 1e-5)"));
    out
}

fn caching_criterion() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut b = benchmark(500, 3, 0).expect("benchmark");
    let first = b.problem.solve(&SolveOptions::default()).expect("solve");
    out.check(
        first.status == Status::Optimal,
        format!(
            "first solve {} in {} iterations",
            first.status, first.iterations
        ),
    );
    let c: Vec<f64> = b
        .problem
        .param_value(&b.c)
        .expect("value")
        .iter()
        .map(|v| v * 1.01)
        .collect();
    b.problem.set_value(&b.c, c).expect("update");
    let second = b.problem.solve(&SolveOptions::default()).expect("solve");
    let stats = b.problem.stats();
    let total = stats.last_total.as_secs_f64();
    let outside = (total - stats.last_solver.as_secs_f64()) / total;
    out.check(
        second.status == Status::Optimal,
        format!(
            "second solve {} in {} iterations",
            second.status, second.iterations
        ),
    );
    out.check(
        outside < 0.1,
        format!(
            "second solve: {:.1}% of {:.3} s outside the cone solver (< 10%)",
            100.0 * outside,
            total
        ),
    );
    out.check(
        stats.canonicalizations == 1,
        format!(
            "canonicalizations after two solves: {} (== 1)",
            stats.canonicalizations
        ),
    );
    let elapsed = start.elapsed();
    out.check(
        elapsed < Duration::from_secs(30),
        format!("runtime {:.2} s (< 30 s)", elapsed.as_secs_f64()),
    );
    out
}

fn regression_criterion() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let res = fit(&FitConfig {
        n_train: 30,
        n_valid: 30,
        n: 8,
        m: 5,
        iters: 10,
        step: 0.1,
        seed: 0,
    });
    let elapsed = start.elapsed();
    let (init, last) = (res.log[0].train_loss, res.log[res.log.len() - 1].train_loss);
    out.check(
        res.log.len() == 11,
        format!("{} logged iterates", res.log.len()),
    );
    out.check(
        last < init,
        format!("train loss {last:.6} after 10 iterations < {init:.6} at the least-squares fit"),
    );
    let missing = res.predictions.iter().filter(|p| p.is_none()).count();
    let unsorted = res
        .predictions
        .iter()
        .flatten()
        .filter(|p| {
            p.windows(2)
                .any(|w| w[0] > w[1] + 1e-6 * w[1].abs().max(1.0))
        })
        .count();
    out.check(
        missing == 0 && unsorted == 0,
        format!(
            "{} predictions: {unsorted} unsorted, {missing} failed",
            res.predictions.len()
        ),
    );
    out.check(
        elapsed < Duration::from_secs(300),
        format!("runtime {:.1} s (< 300 s)", elapsed.as_secs_f64()),
    );
    out
}

fn grammar_criterion() -> Outcome {
    let mut out = Outcome::new();
    let n = 3;
    let x = Variable::new("x", n).expr();
    let c = Parameter::positive("c", n).expr();
    let a = Parameter::real("a", n).expr();
    let b = Parameter::real("b", 1).expr();
    let k = Parameter::positive("k", 1).expr();
    let xs = Variable::scalar("s").expr();
    let ks = Parameter::positive("ks", 1).expr();
    let a1 = Parameter::real("a1", 1).expr();

    let scalar_monomial = mul([ks.clone(), xs.pow_param(&a1).unwrap()]).unwrap();
    let monomial = mul([k.clone(), prod(&x.pow_param(&a).unwrap()).unwrap()]).unwrap();
    let posynomial = add([
        monomial.clone(),
        sum(&mul([c.clone(), x.clone()]).unwrap()).unwrap(),
    ])
    .unwrap();
    let second = sum(&mul([c.clone(), x.pow(2.0).unwrap()]).unwrap()).unwrap();
    let max_posy = maximum([posynomial.clone(), second]).unwrap();
    let cx = mul([c.clone(), x.clone()]).unwrap();
    let verdicts = [
        (
            "scalar monomial",
            curvature(&scalar_monomial),
            Curvature::Affine,
        ),
        ("monomial", curvature(&monomial), Curvature::Affine),
        ("posynomial", curvature(&posynomial), Curvature::Convex),
        (
            "max of posynomials",
            curvature(&max_posy),
            Curvature::Convex,
        ),
        (
            "exp(c * x)",
            curvature(&exp(&cx).unwrap()),
            Curvature::Convex,
        ),
        (
            "log(c * x)",
            curvature(&log(&cx).unwrap()),
            Curvature::Concave,
        ),
        (
            "log(c^T x)",
            curvature(&log(&sum(&cx).unwrap()).unwrap()),
            Curvature::Unknown,
        ),
    ];
    for (label, got, want) in verdicts {
        out.check(got == want, format!("{label}: {got} (expected {want})"));
    }
    let base = prod(&x.pow_param(&a).unwrap()).unwrap();
    let nested = base.pow_param(&b);
    out.check(
        nested.as_ref().err() == Some(&Error::PowerRule),
        format!("nested parametrized power rejected: {:?}", nested.err()),
    );
    let posy_ok = Problem::new(Objective::minimize(max_posy), vec![])
        .unwrap()
        .is_dgp()
        .is_dgp();
    out.check(
        posy_ok,
        "problem minimizing a max of posynomials is DGP".to_string(),
    );
    let bad = Problem::new(
        Objective::minimize(xs.clone()),
        vec![Constraint::leq(&log(&sum(&cx).unwrap()).unwrap(), &one())],
    )
    .unwrap();
    let report = bad.is_dgp();
    out.check(
        !report.is_dgp(),
        format!(
            "problem with log(c^T x) <= 1 rejected: {}",
            report.messages().join("; ")
        ),
    );
    out
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 hello-world solve", hello_solve),
        ("2 hello-world forward sensitivity", hello_sensitivity),
        ("3 hello-world backward", hello_backward),
        ("4 queuing design", queuing_criterion),
        ("5 derivative soundness", derivative_suite),
        ("6 cone layer", cone_suite),
        ("7 caching and re-solve overhead", caching_criterion),
        ("8 structured prediction", regression_criterion),
        ("9 DGP grammar verdicts", grammar_criterion),
    ];
    let mut passed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        if outcome.pass {
            passed += 1;
        }
        println!(
            "{} criterion {name} ({:.2} s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for d in &outcome.details {
            println!("    {d}");
        }
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
