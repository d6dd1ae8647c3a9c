//! Benchmark fixtures: the bundled examples with one parameter chosen for
//! value updates between re-solves.

use llcp::models::{benchmark, hello_world, queuing};
use llcp::{Parameter, Problem};

pub struct Fixture {
    pub name: String,
    pub problem: Problem,
    /// Positive parameter scaled between re-solves.
    pub param: Parameter,
}

impl Fixture {
    /// Scale the update parameter by `factor`.
    pub fn scale(&mut self, factor: f64) {
        let v: Vec<f64> = self
            .problem
            .param_value(&self.param)
            .expect("value")
            .iter()
            .map(|x| x * factor)
            .collect();
        self.problem
            .set_value(&self.param, v)
            .expect("positive value");
    }
}

pub fn hello() -> Fixture {
    let h = hello_world().expect("hello");
    Fixture {
        name: "hello".into(),
        param: h.b.clone(),
        problem: h.problem,
    }
}

pub fn queue() -> Fixture {
    let q = queuing().expect("queuing");
    Fixture {
        name: "queuing".into(),
        param: q.mu_max.clone(),
        problem: q.problem,
    }
}

pub fn gp(n: usize, m: usize) -> Fixture {
    let b = benchmark(n, m, 0).expect("benchmark");
    Fixture {
        name: format!("benchmark_n{n}_m{m}"),
        param: b.c.clone(),
        problem: b.problem,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use llcp::{SolveOptions, Status};

    #[test]
    fn fixtures_solve_before_and_after_an_update() {
        for mut f in [hello(), queue(), gp(20, 3)] {
            assert_eq!(
                f.problem.solve(&SolveOptions::default()).unwrap().status,
                Status::Optimal,
                "{}",
                f.name
            );
            f.scale(1.01);
            assert_eq!(
                f.problem.solve(&SolveOptions::default()).unwrap().status,
                Status::Optimal,
                "{}",
                f.name
            );
            assert_eq!(f.problem.stats().canonicalizations, 1);
        }
    }
}
