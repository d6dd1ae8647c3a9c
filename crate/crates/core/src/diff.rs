//! Derivative of the cone-program solution map.
//!
//! The solution is characterized as a zero of the normalized residual map
//! `R(z) = ((Q - I) Π + I)(z)` of the homogeneous embedding, evaluated at
//! `z = (x, y - s, 1)`, where
//!
//! ```text
//!     [  0   Aᵀ   c ]
//! Q = [ -A   0    b ]      Π = projection onto Rⁿ × K* × R₊.
//!     [ -cᵀ -bᵀ   0 ]
//! ```
//!
//! Differentiating `R(z) = 0` gives `M dz = -dQ Π(z)` with
//! `M = (Q - I) DΠ(z) + I`, solved in the least-squares sense by LSQR.

use crate::compile::{ConeProgram, DataDelta};
use crate::cones::{ProductCone, ProductDerivative};
use crate::error::{Error, Result};
use crate::lsqr::{lsqr, LinearOperator, LsqrOptions};
use crate::solver::ConeSolution;
use crate::sparse::{dot, norm, CscMatrix};

/// The solved embedding point with a cached projection derivative.
#[derive(Clone, Debug)]
pub struct ResidualPoint {
    a: CscMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    dpi: ProductDerivative,
    nonsmooth: bool,
    pub lsqr: LsqrOptions,
}

/// Result of a derivative or adjoint evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOutput<T> {
    pub value: T,
    /// Relative residual of the implicit linear system.
    pub residual: f64,
    pub iterations: usize,
    pub nonsmooth: bool,
}

impl ResidualPoint {
    pub fn new(p: &ConeProgram, sol: &ConeSolution) -> Result<Self> {
        if !sol.is_optimal() {
            return Err(Error::NonOptimal(sol.status));
        }
        let (m, n) = (p.m(), p.n());
        if sol.x.len() != n || sol.y.len() != m || sol.s.len() != m {
            return Err(Error::Dimension("solution does not match program".into()));
        }
        let v: Vec<f64> = sol.y.iter().zip(&sol.s).map(|(y, s)| y - s).collect();
        let dpi = ProductCone::dual(&p.layout).derivative(&v);
        let nonsmooth = dpi.is_nonsmooth();
        Ok(ResidualPoint {
            a: p.a.clone(),
            b: p.b.clone(),
            c: p.c.clone(),
            x: sol.x.clone(),
            y: sol.y.clone(),
            s: sol.s.clone(),
            dpi,
            nonsmooth,
            lsqr: LsqrOptions::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn nnz(&self) -> usize {
        self.a.nnz()
    }

    pub fn is_nonsmooth(&self) -> bool {
        self.nonsmooth
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// The embedding point `z = (x, y - s, 1)`.
    pub fn z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend(self.y.iter().zip(&self.s).map(|(y, s)| y - s));
        z.push(1.0);
        z
    }

    /// `Q w` for `w = (wu, wv, ww)`.
    fn apply_q(&self, w: &[f64], out: &mut [f64]) {
        let (m, n) = (self.m(), self.n());
        let (wu, rest) = w.split_at(n);
        let (wv, ww) = rest.split_at(m);
        let ww = ww[0];
        out.iter_mut().for_each(|o| *o = 0.0);
        {
            let (ou, _) = out.split_at_mut(n);
            self.a.gemv_t(1.0, wv, ou);
            for j in 0..n {
                ou[j] += self.c[j] * ww;
            }
        }
        {
            let ov = &mut out[n..n + m];
            self.a.gemv(-1.0, wu, ov);
            for i in 0..m {
                ov[i] += self.b[i] * ww;
            }
        }
        out[n + m] = -dot(&self.c, wu) - dot(&self.b, wv);
    }

    fn apply_dpi(&self, w: &[f64], out: &mut [f64], transpose: bool) {
        let (m, n) = (self.m(), self.n());
        out[..n].copy_from_slice(&w[..n]);
        if transpose {
            self.dpi.apply_t(&w[n..n + m], &mut out[n..n + m]);
        } else {
            self.dpi.apply(&w[n..n + m], &mut out[n..n + m]);
        }
        out[n + m] = w[n + m];
    }

    /// `dQ Π(z)` with `Π(z) = (x, y, 1)`.
    fn data_term(&self, d: &DataDelta) -> Vec<f64> {
        let (m, n) = (self.m(), self.n());
        let mut da = self.a.clone();
        da.nzval.copy_from_slice(&d.da);
        let mut g = vec![0.0; n + m + 1];
        da.gemv_t(1.0, &self.y, &mut g[..n]);
        for j in 0..n {
            g[j] += d.dc[j];
        }
        da.gemv(-1.0, &self.x, &mut g[n..n + m]);
        for i in 0..m {
            g[n + i] += d.db[i];
        }
        g[n + m] = -dot(&d.dc, &self.x) - dot(&d.db, &self.y);
        g
    }

    fn check_delta(&self, d: &DataDelta) -> Result<()> {
        if d.da.len() != self.nnz() || d.db.len() != self.m() || d.dc.len() != self.n() {
            return Err(Error::Dimension(
                "data perturbation does not match program".into(),
            ));
        }
        Ok(())
    }

    /// Directional derivative `dx = Dφ(A, b, c)[dA, db, dc]` of the primal
    /// solution. `dA` follows the pattern of `A`.
    pub fn dphi(&self, d: &DataDelta) -> Result<DiffOutput<Vec<f64>>> {
        self.check_delta(d)?;
        let n = self.n();
        let rhs: Vec<f64> = self.data_term(d).iter().map(|v| -v).collect();
        let op = ResidualOperator {
            point: self,
            transpose: false,
        };
        let (dz, residual, iterations) = self.solve(&op, &rhs)?;
        let dw = dz[dz.len() - 1];
        let dx = (0..n).map(|j| dz[j] - self.x[j] * dw).collect();
        Ok(DiffOutput {
            value: dx,
            residual,
            iterations,
            nonsmooth: self.nonsmooth,
        })
    }

    /// Adjoint of [`ResidualPoint::dphi`]: maps a primal perturbation `dx` to
    /// data perturbations; `dA` is restricted to the pattern of `A`.
    pub fn dphi_adjoint(&self, dx: &[f64]) -> Result<DiffOutput<DataDelta>> {
        let (m, n) = (self.m(), self.n());
        if dx.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} entries, got {}",
                dx.len()
            )));
        }
        let mut rhs = vec![0.0; n + m + 1];
        rhs[..n].copy_from_slice(dx);
        rhs[n + m] = -dot(&self.x, dx);
        let op = ResidualOperator {
            point: self,
            transpose: true,
        };
        let (sol, residual, iterations) = self.solve(&op, &rhs)?;
        let r: Vec<f64> = sol.iter().map(|v| -v).collect();
        let (ru, rv, rw) = (&r[..n], &r[n..n + m], r[n + m]);
        let mut da = vec![0.0; self.nnz()];
        for j in 0..n {
            for k in self.a.colptr[j]..self.a.colptr[j + 1] {
                let i = self.a.rowval[k];
                da[k] = self.y[i] * ru[j] - rv[i] * self.x[j];
            }
        }
        let db = (0..m).map(|i| rv[i] - rw * self.y[i]).collect();
        let dc = (0..n).map(|j| ru[j] - rw * self.x[j]).collect();
        Ok(DiffOutput {
            value: DataDelta {
                da,
                db,
                dc,
                doffset: 0.0,
            },
            residual,
            iterations,
            nonsmooth: self.nonsmooth,
        })
    }

    fn solve(&self, op: &ResidualOperator<'_>, rhs: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
        let bn = norm(rhs);
        if bn == 0.0 {
            return Ok((vec![0.0; rhs.len()], 0.0, 0));
        }
        let res = lsqr(op, rhs, &self.lsqr)?;
        // Residual check against the operator itself.
        let mut mz = vec![0.0; rhs.len()];
        op.apply(&res.x, &mut mz);
        let r: Vec<f64> = mz.iter().zip(rhs).map(|(a, b)| a - b).collect();
        Ok((res.x, norm(&r) / bn, res.iterations))
    }
}

/// `M = (Q - I) DΠ + I` or its transpose `DΠᵀ (-Q - I) + I`.
struct ResidualOperator<'a> {
    point: &'a ResidualPoint,
    transpose: bool,
}

impl LinearOperator for ResidualOperator<'_> {
    fn nrows(&self) -> usize {
        self.point.n() + self.point.m() + 1
    }

    fn ncols(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, w: &[f64], out: &mut [f64]) {
        let dim = w.len();
        let mut t = vec![0.0; dim];
        if !self.transpose {
            self.point.apply_dpi(w, &mut t, false);
            self.point.apply_q(&t, out);
            for i in 0..dim {
                out[i] += w[i] - t[i];
            }
        } else {
            let mut q = vec![0.0; dim];
            self.point.apply_q(w, &mut q);
            for i in 0..dim {
                q[i] = -q[i] - w[i];
            }
            self.point.apply_dpi(&q, &mut t, true);
            for i in 0..dim {
                out[i] = t[i] + w[i];
            }
        }
    }

    fn apply_t(&self, w: &[f64], out: &mut [f64]) {
        let flipped = ResidualOperator {
            point: self.point,
            transpose: !self.transpose,
        };
        flipped.apply(w, out);
    }
}
