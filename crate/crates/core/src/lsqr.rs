//! LSQR for sparse or matrix-free least-squares problems.

use crate::error::{Error, Result};
use crate::sparse::{norm, CscMatrix};

/// A linear map given by its action and the action of its adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = Aᵀ x`.
    fn apply_t(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CscMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.gemv(1.0, x, y);
    }

    fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.gemv_t(1.0, x, y);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsqrOptions {
    pub atol: f64,
    pub btol: f64,
    /// Iteration cap; `None` means ten times the number of columns.
    pub max_iters: Option<usize>,
}

impl Default for LsqrOptions {
    fn default() -> Self {
        LsqrOptions {
            atol: 1e-10,
            btol: 1e-10,
            max_iters: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsqrStop {
    /// `x = 0` is exact.
    Zero,
    /// `Ax = b` solved to tolerance.
    Consistent,
    /// Least-squares optimality reached.
    LeastSquares,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqrResult {
    pub x: Vec<f64>,
    pub stop: LsqrStop,
    pub iterations: usize,
    /// `‖b - Ax‖`.
    pub residual: f64,
    /// `‖Aᵀ(b - Ax)‖`.
    pub normal_residual: f64,
}

/// Minimize `‖Ax - b‖` starting from zero; the minimum-norm solution is
/// returned for rank-deficient systems.
pub fn lsqr(a: &dyn LinearOperator, b: &[f64], opts: &LsqrOptions) -> Result<LsqrResult> {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m);
    let iter_lim = opts.max_iters.unwrap_or(10 * n.max(1));
    let mut x = vec![0.0; n];
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    let bnorm = beta;
    if beta > 0.0 {
        u.iter_mut().for_each(|v| *v /= beta);
    }
    let mut v = vec![0.0; n];
    a.apply_t(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha > 0.0 {
        v.iter_mut().for_each(|x| *x /= alpha);
    }
    if alpha * beta == 0.0 {
        return Ok(LsqrResult {
            x,
            stop: LsqrStop::Zero,
            iterations: 0,
            residual: bnorm,
            normal_residual: 0.0,
        });
    }
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm2 = 0.0;
    let mut av = vec![0.0; m];
    let mut atu = vec![0.0; n];
    let mut rnorm = beta;
    let mut arnorm = alpha * beta;
    for itn in 1..=iter_lim {
        a.apply(&v, &mut av);
        for i in 0..m {
            u[i] = av[i] - alpha * u[i];
        }
        beta = norm(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|x| *x /= beta);
        }
        anorm2 += alpha * alpha + beta * beta;
        a.apply_t(&u, &mut atu);
        for j in 0..n {
            v[j] = atu[j] - beta * v[j];
        }
        alpha = norm(&v);
        if alpha > 0.0 {
            v.iter_mut().for_each(|x| *x /= alpha);
        }
        let rho = rhobar.hypot(beta);
        let cs = rhobar / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar *= sn;
        let t1 = phi / rho;
        let t2 = -theta / rho;
        for j in 0..n {
            x[j] += t1 * w[j];
            w[j] = v[j] + t2 * w[j];
        }
        rnorm = phibar;
        arnorm = alpha * (sn * phi).abs();
        let anorm = anorm2.sqrt();
        let xnorm = norm(&x);
        if rnorm <= opts.btol * bnorm + opts.atol * anorm * xnorm {
            return Ok(LsqrResult {
                x,
                stop: LsqrStop::Consistent,
                iterations: itn,
                residual: rnorm,
                normal_residual: arnorm,
            });
        }
        if arnorm <= opts.atol * anorm * rnorm {
            return Ok(LsqrResult {
                x,
                stop: LsqrStop::LeastSquares,
                iterations: itn,
                residual: rnorm,
                normal_residual: arnorm,
            });
        }
    }
    let _ = arnorm;
    Err(Error::LsqrNoConvergence {
        iterations: iter_lim,
        residual: rnorm,
    })
}
