//! Cones, Euclidean projections and projection derivatives.
//!
//! The exponential cone is `K = cl{(r, s, t) : s > 0, s·exp(r/s) ≤ t}`, with
//! dual `K* = cl{(u, v, w) : u < 0, -u·exp(v/u) ≤ e·w}`.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::compile::ConeLayout;

/// A block of a product cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeBlock {
    Zero(usize),
    NonNeg(usize),
    Exp,
    DualExp,
    Free(usize),
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Zero(n) | ConeBlock::NonNeg(n) | ConeBlock::Free(n) => n,
            ConeBlock::Exp | ConeBlock::DualExp => 3,
        }
    }

    pub fn dual(&self) -> ConeBlock {
        match *self {
            ConeBlock::Zero(n) => ConeBlock::Free(n),
            ConeBlock::Free(n) => ConeBlock::Zero(n),
            ConeBlock::NonNeg(n) => ConeBlock::NonNeg(n),
            ConeBlock::Exp => ConeBlock::DualExp,
            ConeBlock::DualExp => ConeBlock::Exp,
        }
    }

    /// Euclidean projection of `v` onto the block.
    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        match *self {
            ConeBlock::Zero(_) => out.iter_mut().for_each(|o| *o = 0.0),
            ConeBlock::Free(_) => out.copy_from_slice(v),
            ConeBlock::NonNeg(_) => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = x.max(0.0);
                }
            }
            ConeBlock::Exp => out.copy_from_slice(&project_exp([v[0], v[1], v[2]])),
            ConeBlock::DualExp => out.copy_from_slice(&project_exp_dual([v[0], v[1], v[2]])),
        }
    }

    /// Derivative of the projection at `v`.
    pub fn derivative(&self, v: &[f64]) -> BlockDerivative {
        match *self {
            ConeBlock::Zero(_) => BlockDerivative::Zero,
            ConeBlock::Free(_) => BlockDerivative::Identity,
            ConeBlock::NonNeg(_) => {
                BlockDerivative::Mask(v.iter().map(|x| *x >= 0.0).collect(), v.contains(&0.0))
            }
            ConeBlock::Exp => {
                let (j, ns) = dproject_exp([v[0], v[1], v[2]]);
                BlockDerivative::Dense(j, ns)
            }
            ConeBlock::DualExp => {
                let (j, ns) = dproject_exp([-v[0], -v[1], -v[2]]);
                BlockDerivative::Dense(Matrix3::identity() - j, ns)
            }
        }
    }

    /// `DΠ(v) dv`.
    pub fn dproject(&self, v: &[f64], dv: &[f64], out: &mut [f64]) {
        self.derivative(v).apply(dv, out);
    }
}

/// The derivative of a block projection, a linear map on the block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockDerivative {
    Zero,
    Identity,
    /// Diagonal 0/1 mask and nonsmooth flag.
    Mask(Vec<bool>, bool),
    /// Jacobian and nonsmooth flag.
    Dense(Matrix3<f64>, bool),
}

impl BlockDerivative {
    pub fn apply(&self, dv: &[f64], out: &mut [f64]) {
        match self {
            BlockDerivative::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            BlockDerivative::Identity => out.copy_from_slice(dv),
            BlockDerivative::Mask(m, _) => {
                for ((o, d), keep) in out.iter_mut().zip(dv).zip(m) {
                    *o = if *keep { *d } else { 0.0 };
                }
            }
            BlockDerivative::Dense(j, _) => {
                let r = j * Vector3::new(dv[0], dv[1], dv[2]);
                out.copy_from_slice(r.as_slice());
            }
        }
    }

    pub fn apply_t(&self, dv: &[f64], out: &mut [f64]) {
        match self {
            BlockDerivative::Dense(j, _) => {
                let r = j.transpose() * Vector3::new(dv[0], dv[1], dv[2]);
                out.copy_from_slice(r.as_slice());
            }
            other => other.apply(dv, out),
        }
    }

    pub fn is_nonsmooth(&self) -> bool {
        match self {
            BlockDerivative::Mask(_, ns) | BlockDerivative::Dense(_, ns) => *ns,
            _ => false,
        }
    }
}

/// A product of cone blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCone {
    blocks: Vec<ConeBlock>,
    dim: usize,
}

impl ProductCone {
    pub fn new(blocks: Vec<ConeBlock>) -> Self {
        let dim = blocks.iter().map(ConeBlock::dim).sum();
        ProductCone { blocks, dim }
    }

    /// The primal cone `{0}^z × R₊^l × K_exp^e` of a layout.
    pub fn primal(layout: &ConeLayout) -> Self {
        let mut b = Vec::new();
        if layout.zero > 0 {
            b.push(ConeBlock::Zero(layout.zero));
        }
        if layout.nonneg > 0 {
            b.push(ConeBlock::NonNeg(layout.nonneg));
        }
        b.extend(std::iter::repeat_n(ConeBlock::Exp, layout.exp));
        Self::new(b)
    }

    /// The dual cone `R^z × R₊^l × (K_exp*)^e` of a layout.
    pub fn dual(layout: &ConeLayout) -> Self {
        Self::new(
            Self::primal(layout)
                .blocks
                .iter()
                .map(ConeBlock::dual)
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn ranges(&self) -> impl Iterator<Item = (ConeBlock, std::ops::Range<usize>)> + '_ {
        let mut off = 0;
        self.blocks.iter().map(move |b| {
            let r = off..off + b.dim();
            off += b.dim();
            (*b, r)
        })
    }

    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        for (b, r) in self.ranges() {
            b.project(&v[r.clone()], &mut out[r]);
        }
    }

    pub fn project_in_place(&self, v: &mut [f64]) {
        for (b, r) in self.ranges() {
            match b {
                ConeBlock::NonNeg(_) => v[r].iter_mut().for_each(|x| *x = x.max(0.0)),
                ConeBlock::Free(_) => {}
                _ => {
                    let w: Vec<f64> = v[r.clone()].to_vec();
                    b.project(&w, &mut v[r]);
                }
            }
        }
    }

    pub fn derivative(&self, v: &[f64]) -> ProductDerivative {
        ProductDerivative {
            parts: self
                .ranges()
                .map(|(b, r)| (r.clone(), b.derivative(&v[r])))
                .collect(),
        }
    }
}

/// Block-diagonal derivative of a product-cone projection.
#[derive(Clone, Debug)]
pub struct ProductDerivative {
    parts: Vec<(std::ops::Range<usize>, BlockDerivative)>,
}

impl ProductDerivative {
    pub fn apply(&self, dv: &[f64], out: &mut [f64]) {
        for (r, d) in &self.parts {
            d.apply(&dv[r.clone()], &mut out[r.clone()]);
        }
    }

    pub fn apply_t(&self, dv: &[f64], out: &mut [f64]) {
        for (r, d) in &self.parts {
            d.apply_t(&dv[r.clone()], &mut out[r.clone()]);
        }
    }

    pub fn is_nonsmooth(&self) -> bool {
        self.parts.iter().any(|(_, d)| d.is_nonsmooth())
    }
}

const EXP_TOL: f64 = 1e-12;
const EXP_MAX_ITERS: usize = 100;
const RHO_LIMIT: f64 = 700.0;

pub fn in_exp_cone(v: [f64; 3], tol: f64) -> bool {
    let [r, s, t] = v;
    (s > 0.0 && s * (r / s).exp() - t <= tol * (1.0 + t.abs()))
        || (r <= tol && s.abs() <= tol && t >= -tol)
}

pub fn in_exp_dual(v: [f64; 3], tol: f64) -> bool {
    let [u, w1, w] = v;
    (u < 0.0 && -u * (w1 / u).exp() - std::f64::consts::E * w <= tol * (1.0 + w.abs()))
        || (u.abs() <= tol && w1 >= -tol && w >= -tol)
}

/// Root function `F(ρ)·e^{-|ρ|}` and its derivative.
fn root_fn(r0: f64, s0: f64, t0: f64, rho: f64) -> (f64, f64) {
    let a = (rho - 1.0) * r0 + s0;
    let b = r0 - rho * s0;
    let c = rho * rho - rho + 1.0;
    let da = r0;
    let db = -s0;
    let dc = 2.0 * rho - 1.0;
    // F = a e^ρ - b e^{-ρ} - c t0
    // F' = (a + da) e^ρ + (b - db) e^{-ρ} - dc t0
    let (ep, em, e0) = if rho >= 0.0 {
        (1.0, (-2.0 * rho).exp(), (-rho).exp())
    } else {
        ((2.0 * rho).exp(), 1.0, rho.exp())
    };
    let f = a * ep - b * em - c * t0 * e0;
    let fp = (a + da) * ep + (b - db) * em - dc * t0 * e0;
    let sign = if rho >= 0.0 { 1.0 } else { -1.0 };
    (f, fp - sign * f)
}

fn solve_rho(r0: f64, s0: f64, t0: f64) -> Option<f64> {
    // s ≥ 0 and μ ≥ 0 bound ρ; the limit only applies to unbounded sides.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    if r0 > 0.0 {
        lo = lo.max(1.0 - s0 / r0);
    } else if r0 < 0.0 {
        hi = hi.min(1.0 - s0 / r0);
    }
    if s0 > 0.0 {
        hi = hi.min(r0 / s0);
    } else if s0 < 0.0 {
        lo = lo.max(r0 / s0);
    }
    if lo == f64::NEG_INFINITY {
        lo = -RHO_LIMIT.max(-hi);
    }
    if hi == f64::INFINITY {
        hi = RHO_LIMIT.max(lo);
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let (flo, _) = root_fn(r0, s0, t0, lo);
    let (fhi, _) = root_fn(r0, s0, t0, hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        // root at an endpoint up to rounding
        return Some(if flo.abs() <= fhi.abs() { lo } else { hi });
    }
    let increasing = fhi > 0.0;
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..EXP_MAX_ITERS {
        let (f, fp) = root_fn(r0, s0, t0, rho);
        if f == 0.0 {
            return Some(rho);
        }
        if (f > 0.0) == increasing {
            hi = rho;
        } else {
            lo = rho;
        }
        let mut next = rho - f / fp;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= EXP_TOL * (1.0 + rho.abs())
            || hi - lo <= EXP_TOL * (1.0 + rho.abs())
        {
            return Some(next);
        }
        rho = next;
    }
    // Newton stalled: finish by bisection.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (f, _) = root_fn(r0, s0, t0, mid);
        if (f > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= EXP_TOL * (1.0 + mid.abs()) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// Orthogonal projection of `v` onto the boundary ray `s·(ρ, 1, e^ρ)`, `s ≥ 0`.
fn ray_projection(v: [f64; 3], rho: f64) -> (f64, [f64; 3]) {
    // scale the direction to avoid overflow for large ρ
    let (k, e) = if rho > 0.0 {
        ((-rho).exp(), 1.0)
    } else {
        (1.0, rho.exp())
    };
    let d = [rho * k, k, e];
    let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let a = ((v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / dd).max(0.0);
    (a * k, [a * d[0], a * d[1], a * d[2]])
}

enum ExpCase {
    Inside,
    Polar,
    Face,
    Boundary { rho: f64, s: f64 },
}

fn classify(v: [f64; 3]) -> (ExpCase, [f64; 3]) {
    let [r0, s0, t0] = v;
    if in_exp_cone(v, 4.0 * f64::EPSILON) {
        return (ExpCase::Inside, v);
    }
    if in_exp_dual([-r0, -s0, -t0], 0.0) {
        return (ExpCase::Polar, [0.0; 3]);
    }
    if r0 <= 0.0 && s0 <= 0.0 {
        return (ExpCase::Face, [r0, 0.0, t0.max(0.0)]);
    }
    let face = [r0.min(0.0), 0.0, t0.max(0.0)];
    let mut best = (ExpCase::Face, face);
    if let Some(rho) = solve_rho(r0, s0, t0) {
        let (s, p) = ray_projection(v, rho);
        if s >= 0.0 && p.iter().all(|x| x.is_finite()) && dist2(p, v) <= dist2(face, v) {
            best = (ExpCase::Boundary { rho, s }, p);
        }
    }
    if dist2([0.0; 3], v) < dist2(best.1, v) {
        best = (ExpCase::Polar, [0.0; 3]);
    }
    best
}

/// Projection onto the exponential cone.
pub fn project_exp(v: [f64; 3]) -> [f64; 3] {
    classify(v).1
}

/// Projection onto the dual exponential cone, `Π_{K*}(v) = v + Π_K(-v)`.
pub fn project_exp_dual(v: [f64; 3]) -> [f64; 3] {
    let p = project_exp([-v[0], -v[1], -v[2]]);
    [v[0] + p[0], v[1] + p[1], v[2] + p[2]]
}

/// Jacobian of the exponential-cone projection at `v`, with a flag set when
/// `v` lies on (or numerically near) a point where the projection is not
/// differentiable.
pub fn dproject_exp(v: [f64; 3]) -> (Matrix3<f64>, bool) {
    let scale = 1.0 + v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let near = 1e-10 * scale;
    match classify(v).0 {
        ExpCase::Inside => {
            let [r, s, t] = v;
            let on_boundary = s <= near || (s * (r / s).exp() - t).abs() <= near;
            (Matrix3::identity(), on_boundary)
        }
        ExpCase::Polar => {
            let [u, w1, w] = [-v[0], -v[1], -v[2]];
            let on_boundary =
                u >= -near || (-u * (w1 / u).exp() - std::f64::consts::E * w).abs() <= near;
            (Matrix3::zeros(), on_boundary)
        }
        ExpCase::Face => {
            let [r, s, t] = v;
            let mut j = Matrix3::zeros();
            j[(0, 0)] = 1.0;
            if t > 0.0 {
                j[(2, 2)] = 1.0;
            }
            (j, r.abs() <= near || s.abs() <= near || t.abs() <= near)
        }
        ExpCase::Boundary { rho, s } => {
            let e = rho.exp();
            let p = Vector3::new(rho * s, s, s * e);
            let vv = Vector3::new(v[0], v[1], v[2]);
            let g = Vector3::new(e, (1.0 - rho) * e, -1.0);
            let mu = (vv - p).dot(&g) / g.norm_squared();
            let h = Matrix3::new(1.0, -rho, 0.0, -rho, rho * rho, 0.0, 0.0, 0.0, 0.0) * (e / s);
            let top = Matrix3::identity() + h * mu;
            let mut k = Matrix4::zeros();
            k.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
            k.fixed_view_mut::<3, 1>(0, 3).copy_from(&g);
            k.fixed_view_mut::<1, 3>(3, 0).copy_from(&g.transpose());
            let nonsmooth = s <= near || mu <= near;
            match k.lu().try_inverse() {
                Some(inv) => {
                    let mut j = Matrix3::zeros();
                    for i in 0..3 {
                        let mut rhs = Vector4::zeros();
                        rhs[i] = 1.0;
                        let col = inv * rhs;
                        for r in 0..3 {
                            j[(r, i)] = col[r];
                        }
                    }
                    (j, nonsmooth)
                }
                None => (Matrix3::identity(), true),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonneg_projection() {
        let b = ConeBlock::NonNeg(1);
        let mut out = [0.0];
        b.project(&[-1.5], &mut out);
        assert_eq!(out, [0.0]);
        b.dproject(&[-1.5], &[1.0], &mut out);
        assert_eq!(out, [0.0]);
    }

    #[test]
    fn exp_interior_is_fixed() {
        let v = [0.0, 1.0, 2.0];
        assert_eq!(project_exp(v), v);
        let (j, ns) = dproject_exp(v);
        assert_eq!(j, Matrix3::identity());
        assert!(!ns);
    }

    #[test]
    fn exp_projection_is_in_cone_and_orthogonal() {
        for v in [
            [1.0, 1.0, 1.0],
            [3.0, -1.0, 0.5],
            [-2.0, 1.0, -1.0],
            [0.5, 0.1, 0.2],
        ] {
            let p = project_exp(v);
            assert!(in_exp_cone(p, 1e-9), "{p:?}");
            let d = [p[0] - v[0], p[1] - v[1], p[2] - v[2]];
            assert!(in_exp_dual(d, 1e-9), "{d:?}");
            let ip: f64 = (0..3).map(|i| p[i] * d[i]).sum();
            assert!(ip.abs() < 1e-9);
        }
    }
}
