//! Fitting the sorted monomial regression model by projected gradient
//! descent through the solution map.

use llcp::lsqr::{lsqr, LsqrOptions};
use llcp::models::{regression_model, RegressionModel, RegressionParams};
use llcp::sparse::CscMatrix;
use llcp::{SolveOptions, Status};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Lower clamp for the coefficients `c`.
pub const C_MIN: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct FitConfig {
    /// Training pairs.
    pub n_train: usize,
    /// Validation pairs.
    pub n_valid: usize,
    /// Input dimension.
    pub n: usize,
    /// Output dimension.
    pub m: usize,
    pub iters: usize,
    pub step: f64,
    pub seed: u64,
}

/// Input-output pairs.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Model parameters: `a` is `m × n` row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Weights {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

/// Synthetic data: inputs `x = exp(x̃)`, `x̃ ~ N(0, I)`; true exponents
/// `A* ~ N(0, 0.1²)`; coefficients `c* = |N(0, 1)|`; outputs are the model's
/// predictions at `x + exp(v)`, `v ~ N(0, I)`.
pub fn generate(cfg: &FitConfig) -> (Dataset, Dataset, Weights) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m) = (cfg.n, cfg.m);
    let exps = Normal::new(0.0, 0.1).expect("valid normal");
    let truth = Weights {
        a: (0..m * n).map(|_| exps.sample(&mut rng)).collect(),
        c: (0..m)
            .map(|_| StandardNormal.sample(&mut rng))
            .map(|v: f64| v.abs().max(C_MIN))
            .collect(),
    };
    let mut draw = |count: usize| {
        let mut inputs = Vec::with_capacity(count);
        let mut noisy = Vec::with_capacity(count);
        for _ in 0..count {
            let x: Vec<f64> = (0..n)
                .map(|_| StandardNormal.sample(&mut rng))
                .map(|v: f64| v.exp())
                .collect();
            let shifted: Vec<f64> = x
                .iter()
                .map(|xi| xi + Distribution::<f64>::sample(&StandardNormal, &mut rng).exp())
                .collect::<Vec<f64>>();
            inputs.push(x);
            noisy.push(shifted);
        }
        (inputs, noisy)
    };
    let (train_x, train_noisy) = draw(cfg.n_train);
    let (valid_x, valid_noisy) = draw(cfg.n_valid);
    let params = RegressionParams::new(n, m);
    let label = |noisy: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        noisy
            .par_iter()
            .map(|x| {
                let mut model = Model::new(&params, x);
                model.set_weights(&params, &truth);
                model.predict().expect("planted model solves")
            })
            .collect()
    };
    let train = Dataset {
        y: label(&train_noisy),
        x: train_x,
    };
    let valid = Dataset {
        y: label(&valid_noisy),
        x: valid_x,
    };
    (train, valid, truth)
}

/// Least-squares monomial fit: regress `log yᵢ` on `(1, log x)` for each
/// output independently.
pub fn least_squares_fit(data: &Dataset, n: usize, m: usize) -> Weights {
    let rows = data.x.len();
    let mut trip = Vec::with_capacity(rows * (n + 1));
    for (r, x) in data.x.iter().enumerate() {
        trip.push((r, 0, 1.0));
        for (j, xj) in x.iter().enumerate() {
            trip.push((r, j + 1, xj.ln()));
        }
    }
    let design = CscMatrix::from_triplets(rows, n + 1, &trip);
    let opts = LsqrOptions {
        atol: 1e-14,
        btol: 1e-14,
        max_iters: Some(100 * (n + 1)),
    };
    let mut a = Vec::with_capacity(m * n);
    let mut c = Vec::with_capacity(m);
    for i in 0..m {
        let rhs: Vec<f64> = data.y.iter().map(|y| y[i].ln()).collect();
        let sol = match lsqr(&design, &rhs, &opts) {
            Ok(r) => r.x,
            Err(e) => {
                warn!("least-squares fit of output {i}: {e}");
                vec![0.0; n + 1]
            }
        };
        c.push(sol[0].exp().max(C_MIN));
        a.extend_from_slice(&sol[1..]);
    }
    Weights { a, c }
}

/// Predictions of the plain monomial fit, `cᵢ Πⱼ xⱼ^Aᵢⱼ`.
pub fn monomial_predict(w: &Weights, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    w.c.iter()
        .enumerate()
        .map(|(i, ci)| {
            ci * x
                .iter()
                .enumerate()
                .map(|(j, xj)| xj.powf(w.a[i * n + j]))
                .product::<f64>()
        })
        .collect()
}

/// One compiled prediction problem.
pub struct Model {
    inner: RegressionModel,
}

impl Model {
    pub fn new(params: &RegressionParams, x: &[f64]) -> Self {
        Model {
            inner: regression_model(params, x).expect("valid regression model"),
        }
    }

    pub fn set_weights(&mut self, params: &RegressionParams, w: &Weights) {
        let p = &mut self.inner.problem;
        p.set_value(&params.a, w.a.clone())
            .expect("exponent length");
        p.set_value(&params.c, w.c.clone())
            .expect("positive coefficients");
    }

    /// Solve; `None` when the solve is not optimal.
    pub fn predict(&mut self) -> Option<Vec<f64>> {
        let opts = SolveOptions::default();
        match self.inner.problem.solve(&opts) {
            Ok(s) if s.status == Status::Optimal => self
                .inner
                .problem
                .var_value(&self.inner.y)
                .map(<[f64]>::to_vec),
            Ok(s) => {
                warn!("prediction solve finished with status {}", s.status);
                None
            }
            Err(e) => {
                warn!("prediction solve failed: {e}");
                None
            }
        }
    }

    /// Gradient of `‖y - ŷ‖²` with respect to `(A, c)` at the last solve.
    fn gradient(
        &mut self,
        params: &RegressionParams,
        pred: &[f64],
        target: &[f64],
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let p = &mut self.inner.problem;
        let dy: Vec<f64> = pred
            .iter()
            .zip(target)
            .map(|(a, b)| 2.0 * (a - b))
            .collect();
        p.set_gradient(&self.inner.y, dy).ok()?;
        p.set_gradient(&self.inner.z, vec![0.0; self.inner.z.len()])
            .ok()?;
        if let Err(e) = p.backward() {
            warn!("backward failed: {e}");
            return None;
        }
        Some((
            p.param_gradient(&params.a)?.to_vec(),
            p.param_gradient(&params.c)?.to_vec(),
        ))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Loss and predictions of a set of models; samples whose solve fails are
/// left out of the mean.
pub struct Evaluation {
    pub loss: f64,
    pub predictions: Vec<Option<Vec<f64>>>,
    pub skipped: usize,
}

fn evaluate(
    models: &mut [Model],
    data: &Dataset,
    params: &RegressionParams,
    w: &Weights,
) -> Evaluation {
    let predictions: Vec<Option<Vec<f64>>> = models
        .par_iter_mut()
        .map(|model| {
            model.set_weights(params, w);
            model.predict()
        })
        .collect();
    let mut total = 0.0;
    let mut used = 0;
    for (p, y) in predictions.iter().zip(&data.y) {
        if let Some(p) = p {
            total += sq_dist(p, y);
            used += 1;
        }
    }
    Evaluation {
        loss: if used > 0 {
            total / used as f64
        } else {
            f64::NAN
        },
        skipped: data.y.len() - used,
        predictions,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    /// Training samples skipped because their solve or backward pass failed.
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub log: Vec<IterationLog>,
    pub initial: Weights,
    pub weights: Weights,
    pub lstsq_validation_loss: f64,
    pub valid: Dataset,
    /// Final validation predictions of the model.
    pub predictions: Vec<Option<Vec<f64>>>,
}

/// Generate data, fit by least squares, then run `cfg.iters` projected
/// gradient steps on the mean squared training loss. The log has one entry
/// per iterate, including the initial and the final one.
pub fn fit(cfg: &FitConfig) -> FitResult {
    let (train, valid, _) = generate(cfg);
    let params = RegressionParams::new(cfg.n, cfg.m);
    let initial = least_squares_fit(&train, cfg.n, cfg.m);
    let lstsq_validation_loss = valid
        .x
        .iter()
        .zip(&valid.y)
        .map(|(x, y)| sq_dist(&monomial_predict(&initial, x), y))
        .sum::<f64>()
        / valid.x.len().max(1) as f64;
    let mut train_models: Vec<Model> = train.x.iter().map(|x| Model::new(&params, x)).collect();
    let mut valid_models: Vec<Model> = valid.x.iter().map(|x| Model::new(&params, x)).collect();
    let mut w = initial.clone();
    let mut log = Vec::with_capacity(cfg.iters + 1);
    let mut predictions = Vec::new();
    for it in 0..=cfg.iters {
        let predicted: Vec<Option<(Vec<f64>, Vec<f64>, Vec<f64>)>> = train_models
            .par_iter_mut()
            .zip(&train.y)
            .map(|(model, y)| {
                model.set_weights(&params, &w);
                let pred = model.predict()?;
                if it == cfg.iters {
                    return Some((pred, Vec::new(), Vec::new()));
                }
                let (ga, gc) = model.gradient(&params, &pred, y)?;
                Some((pred, ga, gc))
            })
            .collect();
        let used: Vec<_> = predicted
            .iter()
            .zip(&train.y)
            .filter_map(|(p, y)| p.as_ref().map(|p| (p, y)))
            .collect();
        let skipped = train.y.len() - used.len();
        if skipped > 0 {
            warn!("iteration {it}: skipped {skipped} training samples");
        }
        let count = used.len().max(1) as f64;
        let train_loss = used.iter().map(|((p, _, _), y)| sq_dist(p, y)).sum::<f64>() / count;
        let val = evaluate(&mut valid_models, &valid, &params, &w);
        info!(
            "iteration {it}: train loss {train_loss:.6}, validation loss {:.6}",
            val.loss
        );
        log.push(IterationLog {
            iteration: it,
            train_loss,
            validation_loss: val.loss,
            skipped,
        });
        predictions = val.predictions;
        if it == cfg.iters {
            break;
        }
        let mut ga = vec![0.0; w.a.len()];
        let mut gc = vec![0.0; w.c.len()];
        for ((_, a, c), _) in &used {
            ga.iter_mut().zip(a).for_each(|(g, v)| *g += v / count);
            gc.iter_mut().zip(c).for_each(|(g, v)| *g += v / count);
        }
        w.a.iter_mut()
            .zip(&ga)
            .for_each(|(v, g)| *v -= cfg.step * g);
        w.c.iter_mut()
            .zip(&gc)
            .for_each(|(v, g)| *v = (*v - cfg.step * g).max(C_MIN));
    }
    FitResult {
        log,
        initial,
        weights: w,
        lstsq_validation_loss,
        valid,
        predictions,
    }
}
