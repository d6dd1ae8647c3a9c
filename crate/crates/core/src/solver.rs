//! Operator-splitting cone solver.
//!
//! ADMM on the homogeneous self-dual embedding of
//!
//! ```text
//! minimize cᵀx  s.t.  Ax + s = b, s ∈ K        maximize -bᵀy  s.t.  Aᵀy + c = 0, y ∈ K*
//! ```
//!
//! with step size one and over-relaxation. The data are equilibrated with
//! Ruiz scaling and the quasi-definite system `[[I, Aᵀ], [A, -I]]` is
//! factored once per distinct `A`; the symbolic analysis is kept across
//! solves with the same sparsity pattern.
//!
//! When ADMM is slow to reach the requested accuracy, the iterate is
//! refined by semismooth Newton steps on the KKT residual
//!
//! ```text
//! G(x, v) = (Aᵀ Π(v) + c,  b - Ax - (Π(v) - v)),   Π = projection onto K*,
//! ```
//!
//! whose zeros give `y = Π(v)`, `s = Π(v) - v`. Each step solves the
//! linearization with LSQR and is accepted only if it decreases `‖G‖`.

use std::fmt;

use log::{debug, trace};

use crate::compile::{ConeLayout, ConeProgram};
use crate::cones::{ProductCone, ProductDerivative};
use crate::error::{Error, Result};
use crate::ldl::Ldl;
use crate::lsqr::{lsqr, LinearOperator, LsqrOptions};
use crate::sparse::{dot, norm, norm_inf, CscMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIters,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIters => "max_iters",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    /// Absolute and relative tolerance on residuals and gap.
    pub eps: f64,
    /// Tolerance for infeasibility certificates.
    pub eps_infeas: f64,
    pub max_iters: usize,
    /// Over-relaxation parameter.
    pub alpha: f64,
    /// Start from a supplied previous solution when one is given.
    pub warm_start: bool,
    /// Ruiz equilibration passes (0 disables scaling).
    pub scaling_passes: usize,
    /// Iterations between convergence checks.
    pub check_every: usize,
    /// Attempt Newton refinement of the KKT residual after 500, 1000,
    /// 2000, … iterations and on reaching the iteration limit.
    pub refine: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            eps: 1e-8,
            eps_infeas: 1e-8,
            max_iters: 100_000,
            alpha: 1.5,
            warm_start: true,
            scaling_passes: 25,
            check_every: 5,
            refine: true,
        }
    }
}

/// Primal/dual/slack solution of a cone program.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// `cᵀx + d` at the returned point.
    pub objective: f64,
}

impl ConeSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Clone, Debug)]
struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    sb: f64,
    sc: f64,
}

fn ruiz(a: &CscMatrix, layout: &ConeLayout, passes: usize) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (a.nrows, a.ncols);
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    let exp_start = layout.zero + layout.nonneg;
    for _ in 0..passes {
        let mut row = vec![0.0f64; m];
        let mut col = vec![0.0f64; n];
        for j in 0..n {
            let (rows, vals) = a.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let s = (d[i] * v * e[j]).abs();
                row[i] = row[i].max(s);
                col[j] = col[j].max(s);
            }
        }
        for k in 0..layout.exp {
            let r = exp_start + 3 * k;
            let g = row[r].max(row[r + 1]).max(row[r + 2]);
            row[r..r + 3].iter_mut().for_each(|x| *x = g);
        }
        let mut done = true;
        for i in 0..m {
            if row[i] > 0.0 {
                d[i] /= row[i].sqrt();
                done &= (row[i] - 1.0).abs() < 1e-3;
            }
        }
        for j in 0..n {
            if col[j] > 0.0 {
                e[j] /= col[j].sqrt();
                done &= (col[j] - 1.0).abs() < 1e-3;
            }
        }
        d.iter_mut().for_each(|x| *x = x.clamp(1e-4, 1e4));
        e.iter_mut().for_each(|x| *x = x.clamp(1e-4, 1e4));
        if done {
            break;
        }
    }
    (d, e)
}

/// Reusable solver workspace. Solving programs that share the pattern of
/// `A` reuses the symbolic factorization; an unchanged `A` also reuses the
/// numeric factorization.
#[derive(Default)]
pub struct Solver {
    factor: Option<Ldl>,
    kkt_pattern: Option<CscMatrix>,
    a_values: Vec<f64>,
    a_pattern: Option<CscMatrix>,
    scaling: Option<Scaling>,
    scaled_a: Option<CscMatrix>,
    layout: ConeLayout,
    passes: usize,
    factorizations: usize,
    analyses: usize,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of numeric factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Number of symbolic analyses performed so far.
    pub fn analyses(&self) -> usize {
        self.analyses
    }

    fn prepare(&mut self, p: &ConeProgram, settings: &Settings) -> Result<()> {
        let same_pattern = self
            .a_pattern
            .as_ref()
            .is_some_and(|a| a.same_pattern(&p.a))
            && self.layout == p.layout;
        if same_pattern && self.a_values == p.a.nzval && self.passes == settings.scaling_passes {
            return Ok(());
        }
        let (d, e) = ruiz(&p.a, &p.layout, settings.scaling_passes);
        let mut sa = p.a.clone();
        for j in 0..sa.ncols {
            for k in sa.colptr[j]..sa.colptr[j + 1] {
                sa.nzval[k] *= d[sa.rowval[k]] * e[j];
            }
        }
        let (m, n) = (sa.nrows, sa.ncols);
        // Upper triangle of [[I, Aᵀ], [A, -I]]: column n+i holds row i of A.
        let mut trip = Vec::with_capacity(n + m + sa.nnz());
        for j in 0..n {
            trip.push((j, j, 1.0));
        }
        for (i, j, v) in sa.triplets() {
            trip.push((j, n + i, v));
        }
        for i in 0..m {
            trip.push((n + i, n + i, -1.0));
        }
        let kkt = CscMatrix::from_triplets(n + m, n + m, &trip);
        match (&mut self.factor, same_pattern) {
            (Some(f), true) => f.refactor(&kkt.nzval)?,
            _ => {
                self.factor = Some(Ldl::new(&kkt)?);
                self.analyses += 1;
            }
        }
        self.factorizations += 1;
        self.kkt_pattern = Some(kkt);
        self.a_values = p.a.nzval.clone();
        self.a_pattern = Some(p.a.clone());
        self.layout = p.layout;
        self.passes = settings.scaling_passes;
        self.scaled_a = Some(sa);
        self.scaling = Some(Scaling {
            d,
            e,
            sb: 1.0,
            sc: 1.0,
        });
        Ok(())
    }

    /// Solve `p`, optionally warm-started from a previous solution.
    pub fn solve(
        &mut self,
        p: &ConeProgram,
        settings: &Settings,
        warm: Option<&ConeSolution>,
    ) -> Result<ConeSolution> {
        if !p.is_finite() {
            return Err(Error::Data);
        }
        self.prepare(p, settings)?;
        let (m, n) = (p.m(), p.n());
        let sc = self.scaling.as_mut().unwrap();
        let factor = self.factor.as_ref().unwrap();
        let db: Vec<f64> = p.b.iter().zip(&sc.d).map(|(b, d)| b * d).collect();
        let ec: Vec<f64> = p.c.iter().zip(&sc.e).map(|(c, e)| c * e).collect();
        sc.sb = 1.0 / norm_inf(&db).max(1.0);
        sc.sc = 1.0 / norm_inf(&ec).max(1.0);
        let bh: Vec<f64> = db.iter().map(|v| v * sc.sb).collect();
        let ch: Vec<f64> = ec.iter().map(|v| v * sc.sc).collect();
        let dual_cone = ProductCone::dual(&p.layout);

        // K (x, y) = (rx, -ry) solves (I + Q0)(x, y) = (rx, ry).
        let solve_m = |rhs: &[f64]| -> Vec<f64> {
            let mut z = rhs.to_vec();
            z[n..].iter_mut().for_each(|v| *v = -*v);
            factor.solve_in_place(&mut z);
            z
        };
        let h: Vec<f64> = ch.iter().chain(&bh).copied().collect();
        let g = solve_m(&h);
        let hg = 1.0 + dot(&h, &g);

        let dim = n + m + 1;
        let mut u = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        u[dim - 1] = 1.0;
        if let Some(w) = warm.filter(|_| settings.warm_start) {
            if w.x.len() == n && w.y.len() == m && w.s.len() == m {
                for j in 0..n {
                    u[j] = w.x[j] / sc.e[j] * sc.sb;
                }
                for i in 0..m {
                    u[n + i] = w.y[i] / sc.d[i] * sc.sc;
                    v[n + i] = w.s[i] * sc.d[i] * sc.sb;
                }
            }
        }

        let mut ut = vec![0.0; dim];
        let mut status = Status::MaxIters;
        let mut iters = 0;
        let mut last = Residuals::default();
        for k in 0..settings.max_iters.max(1) {
            iters = k + 1;
            // ũ = (I + Q)⁻¹ (u + v)
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let pw = solve_m(&w[..n + m]);
            let tau = (w[dim - 1] + dot(&h, &pw)) / hg;
            for i in 0..n + m {
                ut[i] = pw[i] - g[i] * tau;
            }
            ut[dim - 1] = tau;
            // relaxation and projection
            for i in 0..dim {
                ut[i] = settings.alpha * ut[i] + (1.0 - settings.alpha) * u[i];
            }
            let mut un: Vec<f64> = ut.iter().zip(&v).map(|(a, b)| a - b).collect();
            dual_cone.project_in_place(&mut un[n..n + m]);
            un[dim - 1] = un[dim - 1].max(0.0);
            for i in 0..dim {
                v[i] += un[i] - ut[i];
            }
            u = un;

            let checkpoint = (k + 1) % 500 == 0 && ((k + 1) / 500).is_power_of_two();
            if settings.refine && u[dim - 1] > 0.0 && (checkpoint || k + 1 == settings.max_iters) {
                if let Some((ur, vr, r)) = self.refine(p, &u, &v, settings) {
                    u = ur;
                    v = vr;
                    status = Status::Optimal;
                    last = r;
                    break;
                }
            }
            if (k + 1) % settings.check_every.max(1) == 0 || k + 1 == settings.max_iters {
                let r = self.residuals(p, &u, &v);
                trace!(
                    "iter {k}: tau {:.3e} kappa {:.3e} pres {:.3e} dres {:.3e} gap {:.3e}",
                    u[dim - 1],
                    v[dim - 1],
                    r.pres,
                    r.dres,
                    r.gap
                );
                if let Some(s) = r.status(settings) {
                    status = s;
                    last = r;
                    break;
                }
                last = r;
            }
        }
        let sol = self.extract(p, &u, &v, status, iters, &last);
        debug!(
            "cone solve: {} after {} iterations (pres {:.2e}, dres {:.2e}, gap {:.2e})",
            sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, sol.gap
        );
        Ok(sol)
    }

    /// Newton refinement in the scaled space, starting from the ADMM iterate
    /// normalized to `τ = 1`. Returns the refined iterate when it meets the
    /// termination criteria.
    fn refine(
        &self,
        p: &ConeProgram,
        u: &[f64],
        v: &[f64],
        settings: &Settings,
    ) -> Option<(Vec<f64>, Vec<f64>, Residuals)> {
        let (m, n) = (p.m(), p.n());
        let sc = self.scaling.as_ref()?;
        let a = self.scaled_a.as_ref()?;
        let tau = u[n + m];
        let bh: Vec<f64> = p.b.iter().zip(&sc.d).map(|(b, d)| b * d * sc.sb).collect();
        let ch: Vec<f64> = p.c.iter().zip(&sc.e).map(|(c, e)| c * e * sc.sc).collect();
        let cone = ProductCone::dual(&p.layout);
        let mut z: Vec<f64> = (0..n).map(|j| u[j] / tau).collect();
        z.extend((0..m).map(|i| (u[n + i] - v[n + i]) / tau));
        let kkt = |z: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut y = vec![0.0; m];
            cone.project(&z[n..], &mut y);
            let mut g = a.mul_t_vec(&y);
            for j in 0..n {
                g[j] += ch[j];
            }
            let ax = a.mul_vec(&z[..n]);
            g.extend((0..m).map(|i| bh[i] - ax[i] - (y[i] - z[n + i])));
            (g, y)
        };
        let embed = |z: &[f64], y: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut uu = z[..n].to_vec();
            uu.extend_from_slice(y);
            uu.push(1.0);
            let mut vv = vec![0.0; n];
            vv.extend((0..m).map(|i| y[i] - z[n + i]));
            vv.push(0.0);
            (uu, vv)
        };
        let (mut g, mut y) = kkt(&z);
        let mut gn = norm(&g);
        let opts = LsqrOptions {
            atol: 1e-14,
            btol: 1e-14,
            max_iters: Some(20 * (n + m)),
        };
        for it in 0..30 {
            let (uu, vv) = embed(&z, &y);
            let r = self.residuals(p, &uu, &vv);
            if r.status(settings) == Some(Status::Optimal) {
                trace!("refinement converged after {it} Newton steps");
                return Some((uu, vv, r));
            }
            let op = KktJacobian {
                a,
                dpi: cone.derivative(&z[n..]),
                n,
                m,
            };
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            let step = match lsqr(&op, &rhs, &opts) {
                Ok(r) => r.x,
                Err(_) => return None,
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let (gt, yt) = kkt(&trial);
                let gtn = norm(&gt);
                if gtn < (1.0 - 1e-4 * t) * gn {
                    z = trial;
                    g = gt;
                    y = yt;
                    gn = gtn;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    /// Unscale an iterate to original-space `(x, y, s)` without dividing by τ.
    fn unscale(&self, n: usize, m: usize, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let sc = self.scaling.as_ref().unwrap();
        let x = (0..n).map(|j| u[j] * sc.e[j] / sc.sb).collect();
        let y = (0..m).map(|i| u[n + i] * sc.d[i] / sc.sc).collect();
        let s = (0..m).map(|i| v[n + i] / sc.d[i] / sc.sb).collect();
        (x, y, s)
    }

    fn residuals(&self, p: &ConeProgram, u: &[f64], v: &[f64]) -> Residuals {
        let (m, n) = (p.m(), p.n());
        let (x, y, s) = self.unscale(n, m, u, v);
        let tau = u[n + m];
        let ax = p.a.mul_vec(&x);
        let aty = p.a.mul_t_vec(&y);
        let ctx = dot(&p.c, &x);
        let bty = dot(&p.b, &y);
        let mut r = Residuals {
            tau,
            ..Default::default()
        };
        if tau > 0.0 {
            let pres: Vec<f64> = (0..m).map(|i| (ax[i] + s[i]) / tau - p.b[i]).collect();
            let dres: Vec<f64> = (0..n).map(|j| (aty[j] / tau) + p.c[j]).collect();
            r.pres = norm_inf(&pres);
            r.dres = norm_inf(&dres);
            r.gap = ((ctx + bty) / tau).abs();
            r.pscale = norm_inf(&ax).max(norm_inf(&s)) / tau;
            r.pscale = r.pscale.max(norm_inf(&p.b));
            r.dscale = (norm_inf(&aty) / tau).max(norm_inf(&p.c));
            r.gscale = (ctx.abs() / tau).max(bty.abs() / tau);
        } else {
            r.pres = f64::INFINITY;
            r.dres = f64::INFINITY;
            r.gap = f64::INFINITY;
        }
        if bty < 0.0 {
            r.infeas = norm_inf(&aty) / -bty;
        }
        if ctx < 0.0 {
            let q: Vec<f64> = (0..m).map(|i| ax[i] + s[i]).collect();
            r.unbdd = norm_inf(&q) / -ctx;
        }
        r
    }

    fn extract(
        &self,
        p: &ConeProgram,
        u: &[f64],
        v: &[f64],
        status: Status,
        iters: usize,
        r: &Residuals,
    ) -> ConeSolution {
        let (m, n) = (p.m(), p.n());
        let (mut x, mut y, mut s) = self.unscale(n, m, u, v);
        let tau = u[n + m];
        match status {
            Status::Infeasible => {
                let bty = dot(&p.b, &y);
                y.iter_mut().for_each(|v| *v /= -bty);
                x.iter_mut().for_each(|v| *v = f64::NAN);
                s.iter_mut().for_each(|v| *v = f64::NAN);
            }
            Status::Unbounded => {
                let ctx = dot(&p.c, &x);
                x.iter_mut().for_each(|v| *v /= -ctx);
                s.iter_mut().for_each(|v| *v /= -ctx);
                y.iter_mut().for_each(|v| *v = f64::NAN);
            }
            _ if tau > 0.0 => {
                x.iter_mut().for_each(|v| *v /= tau);
                y.iter_mut().for_each(|v| *v /= tau);
                s.iter_mut().for_each(|v| *v /= tau);
            }
            _ => {}
        }
        let objective = match status {
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            _ => dot(&p.c, &x) + p.offset,
        };
        ConeSolution {
            x,
            y,
            s,
            status,
            iterations: iters,
            primal_residual: r.pres,
            dual_residual: r.dres,
            gap: r.gap,
            objective,
        }
    }
}

/// Jacobian `[[0, Aᵀ DΠ], [-A, I - DΠ]]` of the KKT residual.
struct KktJacobian<'a> {
    a: &'a CscMatrix,
    dpi: ProductDerivative,
    n: usize,
    m: usize,
}

impl LinearOperator for KktJacobian<'_> {
    fn nrows(&self) -> usize {
        self.n + self.m
    }

    fn ncols(&self) -> usize {
        self.n + self.m
    }

    fn apply(&self, w: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let mut dy = vec![0.0; m];
        self.dpi.apply(&w[n..], &mut dy);
        out.iter_mut().for_each(|o| *o = 0.0);
        self.a.gemv_t(1.0, &dy, &mut out[..n]);
        self.a.gemv(-1.0, &w[..n], &mut out[n..]);
        for i in 0..m {
            out[n + i] += w[n + i] - dy[i];
        }
    }

    fn apply_t(&self, w: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        out.iter_mut().for_each(|o| *o = 0.0);
        self.a.gemv_t(-1.0, &w[n..], &mut out[..n]);
        let mut aw = vec![0.0; m];
        self.a.gemv(1.0, &w[..n], &mut aw);
        let t: Vec<f64> = (0..m).map(|i| aw[i] - w[n + i]).collect();
        let mut dt = vec![0.0; m];
        self.dpi.apply_t(&t, &mut dt);
        for i in 0..m {
            out[n + i] = dt[i] + w[n + i];
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Residuals {
    tau: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    pscale: f64,
    dscale: f64,
    gscale: f64,
    infeas: f64,
    unbdd: f64,
}

impl Residuals {
    fn status(&self, s: &Settings) -> Option<Status> {
        let eps = s.eps;
        if self.tau > 0.0
            && self.pres <= eps + eps * self.pscale
            && self.dres <= eps + eps * self.dscale
            && self.gap <= eps + eps * self.gscale
        {
            return Some(Status::Optimal);
        }
        if self.infeas > 0.0 && self.infeas <= s.eps_infeas {
            return Some(Status::Infeasible);
        }
        if self.unbdd > 0.0 && self.unbdd <= s.eps_infeas {
            return Some(Status::Unbounded);
        }
        None
    }
}

/// Solve a single cone program with a fresh workspace.
pub fn solve(p: &ConeProgram, settings: &Settings) -> Result<ConeSolution> {
    Solver::new().solve(p, settings, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program(
        a: &[(usize, usize, f64)],
        m: usize,
        n: usize,
        b: Vec<f64>,
        c: Vec<f64>,
        layout: ConeLayout,
    ) -> ConeProgram {
        ConeProgram::new(CscMatrix::from_triplets(m, n, a), b, c, layout).unwrap()
    }

    #[test]
    fn one_variable_lower_bound() {
        // x ≥ 1  ⇔  -x + s = -1, s ≥ 0
        let p = program(
            &[(0, 0, -1.0)],
            1,
            1,
            vec![-1.0],
            vec![2.0],
            ConeLayout {
                zero: 0,
                nonneg: 1,
                exp: 0,
            },
        );
        let sol = solve(&p, &Settings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn empty_program() {
        let p = program(&[], 0, 2, vec![], vec![0.0, 0.0], ConeLayout::default());
        let sol = solve(&p, &Settings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.x, vec![0.0, 0.0]);
    }

    #[test]
    fn detects_infeasibility() {
        // x ≥ 2 and x ≤ 1
        let p = program(
            &[(0, 0, -1.0), (1, 0, 1.0)],
            2,
            1,
            vec![-2.0, 1.0],
            vec![1.0],
            ConeLayout {
                zero: 0,
                nonneg: 2,
                exp: 0,
            },
        );
        assert_eq!(
            solve(&p, &Settings::default()).unwrap().status,
            Status::Infeasible
        );
    }

    #[test]
    fn detects_unboundedness() {
        let p = program(
            &[(0, 0, -1.0)],
            1,
            1,
            vec![0.0],
            vec![-1.0],
            ConeLayout {
                zero: 0,
                nonneg: 1,
                exp: 0,
            },
        );
        assert_eq!(
            solve(&p, &Settings::default()).unwrap().status,
            Status::Unbounded
        );
    }

    #[test]
    fn exp_cone_program() {
        // minimize t s.t. (x, 1, t) ∈ K_exp, x = 1  →  t = e
        let p = program(
            &[(0, 0, 1.0), (1, 0, -1.0), (3, 1, -1.0)],
            4,
            2,
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0],
            ConeLayout {
                zero: 1,
                nonneg: 0,
                exp: 1,
            },
        );
        let sol = solve(&p, &Settings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[1] - std::f64::consts::E).abs() < 1e-6, "{:?}", sol.x);
    }

    #[test]
    fn nan_data_is_rejected() {
        let p = program(
            &[(0, 0, f64::NAN)],
            1,
            1,
            vec![0.0],
            vec![1.0],
            ConeLayout {
                zero: 0,
                nonneg: 1,
                exp: 0,
            },
        );
        assert_eq!(solve(&p, &Settings::default()).unwrap_err(), Error::Data);
    }
}
