//! Compilation of a canonicalized convex problem into cone-program form
//!
//! ```text
//! minimize    cᵀx + d
//! subject to  A x + s = b,   s ∈ {0}^z × R₊^l × K_exp^e
//! ```
//!
//! with the data `(A, b, c, d)` an affine function of the convex parameters
//! β, stored as a sparse matrix `T` plus an offset. The sparsity pattern of
//! `A` is fixed at compile time and never depends on β.
//!
//! Each constraint `log Σᵢ exp(fᵢ) ≤ g` with `r ≥ 2` terms adds `r` auxiliary
//! columns `qᵢ`, the exponential-cone triples `(fᵢ - g, 1, qᵢ)` and one
//! nonnegative row `1 - Σ qᵢ ≥ 0`. Auxiliary columns follow the columns of
//! the convex problem, so the retrieval map keeps the leading entries.
//!
//! # Dump format
//!
//! [`ConeProgram::dump`] writes a plain-text description:
//!
//! ```text
//! cone_program <rows> <cols>
//! cones zero <z> nonneg <l> exp <e>
//! A <nnz>
//! <row> <col> <value>      (one line per nonzero, column-major)
//! b <rows>
//! <value>                  (one line per row)
//! c <cols>
//! <value>                  (one line per column)
//! offset <value>
//! ```

use std::fmt::Write as _;

use crate::canon::{AffineForm, ConvexConstraint, ConvexProblem};
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Cone dimensions, in row-block order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConeLayout {
    pub zero: usize,
    pub nonneg: usize,
    /// Number of exponential-cone triples.
    pub exp: usize,
}

impl ConeLayout {
    pub fn rows(&self) -> usize {
        self.zero + self.nonneg + 3 * self.exp
    }
}

/// Numeric cone-program data.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeProgram {
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub offset: f64,
    pub layout: ConeLayout,
}

impl ConeProgram {
    pub fn new(a: CscMatrix, b: Vec<f64>, c: Vec<f64>, layout: ConeLayout) -> Result<Self> {
        if a.nrows != b.len() || a.ncols != c.len() || a.nrows != layout.rows() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, b has {}, c has {}, cones need {} rows",
                a.nrows,
                a.ncols,
                b.len(),
                c.len(),
                layout.rows()
            )));
        }
        Ok(ConeProgram {
            a,
            b,
            c,
            offset: 0.0,
            layout,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .nzval
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .all(|v| v.is_finite())
            && self.offset.is_finite()
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        let l = self.layout;
        writeln!(s, "cone_program {} {}", self.m(), self.n()).unwrap();
        writeln!(s, "cones zero {} nonneg {} exp {}", l.zero, l.nonneg, l.exp).unwrap();
        writeln!(s, "A {}", self.a.nnz()).unwrap();
        for (r, c, v) in self.a.triplets() {
            writeln!(s, "{r} {c} {v:e}").unwrap();
        }
        writeln!(s, "b {}", self.m()).unwrap();
        for v in &self.b {
            writeln!(s, "{v:e}").unwrap();
        }
        writeln!(s, "c {}", self.n()).unwrap();
        for v in &self.c {
            writeln!(s, "{v:e}").unwrap();
        }
        writeln!(s, "offset {:e}", self.offset).unwrap();
        s
    }

    /// Parse the output of [`ConeProgram::dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Dimension(format!("malformed dump: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| bad(what))
                .map(|l| l.split_whitespace().collect::<Vec<_>>())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(s));
        let head = next("header")?;
        let (m, n) = (
            int(head.get(1).ok_or_else(|| bad("rows"))?)?,
            int(head.get(2).ok_or_else(|| bad("cols"))?)?,
        );
        let cones = next("cones")?;
        if cones.len() != 7 {
            return Err(bad("cones"));
        }
        let layout = ConeLayout {
            zero: int(cones[2])?,
            nonneg: int(cones[4])?,
            exp: int(cones[6])?,
        };
        let nnz = int(next("A")?.get(1).ok_or_else(|| bad("nnz"))?)?;
        let mut trip = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let t = next("entry")?;
            if t.len() != 3 {
                return Err(bad("entry"));
            }
            trip.push((int(t[0])?, int(t[1])?, num(t[2])?));
        }
        next("b")?;
        let b = (0..m)
            .map(|_| num(next("b entry")?[0]))
            .collect::<Result<Vec<_>>>()?;
        next("c")?;
        let c = (0..n)
            .map(|_| num(next("c entry")?[0]))
            .collect::<Result<Vec<_>>>()?;
        let offset = num(next("offset")?.get(1).ok_or_else(|| bad("offset"))?)?;
        let mut p = ConeProgram::new(CscMatrix::from_triplets(m, n, &trip), b, c, layout)?;
        p.offset = offset;
        Ok(p)
    }
}

/// A perturbation of cone-program data. `da` follows the nonzero pattern of
/// `A` in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct DataDelta {
    pub da: Vec<f64>,
    pub db: Vec<f64>,
    pub dc: Vec<f64>,
    pub doffset: f64,
}

impl DataDelta {
    pub fn zeros(nnz: usize, m: usize, n: usize) -> Self {
        DataDelta {
            da: vec![0.0; nnz],
            db: vec![0.0; m],
            dc: vec![0.0; n],
            doffset: 0.0,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.da.len() + self.db.len() + self.dc.len() + 1);
        v.extend_from_slice(&self.da);
        v.extend_from_slice(&self.db);
        v.extend_from_slice(&self.dc);
        v.push(self.doffset);
        v
    }

    pub fn from_flat(v: &[f64], nnz: usize, m: usize) -> Self {
        DataDelta {
            da: v[..nnz].to_vec(),
            db: v[nnz..nnz + m].to_vec(),
            dc: v[nnz + m..v.len() - 1].to_vec(),
            doffset: v[v.len() - 1],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        DataDelta {
            da: self.da.iter().map(|v| v * s).collect(),
            db: self.db.iter().map(|v| v * s).collect(),
            dc: self.dc.iter().map(|v| v * s).collect(),
            doffset: self.doffset * s,
        }
    }
}

/// The cached affine map `vec(A, b, c, d) = T β + t₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamToDataMap {
    /// Slots × β, compressed by β column.
    t: CscMatrix,
    t_offset: Vec<f64>,
    pattern: CscMatrix,
    layout: ConeLayout,
    n_convex: usize,
}

impl ParamToDataMap {
    pub fn layout(&self) -> ConeLayout {
        self.layout
    }

    pub fn n_beta(&self) -> usize {
        self.t.ncols
    }

    /// Number of columns of the convex problem (the retrieval map keeps
    /// these leading entries of the cone-program primal).
    pub fn n_convex(&self) -> usize {
        self.n_convex
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn t(&self) -> &CscMatrix {
        &self.t
    }

    pub fn pattern(&self) -> &CscMatrix {
        &self.pattern
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.n_beta() {
            return Err(Error::Dimension(format!(
                "expected {} β entries, got {}",
                self.n_beta(),
                beta.len()
            )));
        }
        Ok(())
    }

    fn split(&self, flat: &[f64]) -> DataDelta {
        DataDelta::from_flat(flat, self.nnz(), self.n_rows())
    }

    pub fn instantiate(&self, beta: &[f64]) -> Result<ConeProgram> {
        self.check_beta(beta)?;
        let mut data = self.t_offset.clone();
        self.t.gemv(1.0, beta, &mut data);
        let d = self.split(&data);
        let mut a = self.pattern.clone();
        a.nzval = d.da;
        let mut p = ConeProgram::new(a, d.db, d.dc, self.layout)?;
        p.offset = d.doffset;
        Ok(p)
    }

    /// Overwrite the numeric data of `p` in place, keeping its pattern.
    pub fn update(&self, beta: &[f64], p: &mut ConeProgram) -> Result<()> {
        self.check_beta(beta)?;
        let mut data = self.t_offset.clone();
        self.t.gemv(1.0, beta, &mut data);
        let (nnz, m) = (self.nnz(), self.n_rows());
        p.a.nzval.copy_from_slice(&data[..nnz]);
        p.b.copy_from_slice(&data[nnz..nnz + m]);
        let n = p.c.len();
        p.c.copy_from_slice(&data[nnz + m..nnz + m + n]);
        p.offset = data[nnz + m + n];
        Ok(())
    }

    pub fn apply_t(&self, dbeta: &[f64]) -> Result<DataDelta> {
        self.check_beta(dbeta)?;
        Ok(self.split(&self.t.mul_vec(dbeta)))
    }

    pub fn apply_t_adjoint(&self, d: &DataDelta) -> Result<Vec<f64>> {
        let flat = d.to_flat();
        if flat.len() != self.t.nrows {
            return Err(Error::Dimension(format!(
                "expected {} data entries, got {}",
                self.t.nrows,
                flat.len()
            )));
        }
        Ok(self.t.mul_t_vec(&flat))
    }

    /// The convex-problem columns of a cone-program primal.
    pub fn retrieve<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.n_convex]
    }
}

#[derive(Default)]
struct RowBlock {
    /// `(row, col, β, coef)` entries of `A`.
    a: Vec<(usize, usize, Option<usize>, f64)>,
    /// `(row, β, coef)` entries of `b`.
    b: Vec<(usize, Option<usize>, f64)>,
    rows: usize,
}

impl RowBlock {
    /// Append a row with `s = sign * f(u)`, i.e. `A = -sign·coef`,
    /// `b = sign·const`.
    fn push(&mut self, f: &AffineForm, sign: f64) -> usize {
        let r = self.rows;
        let (lin, cst) = f.split();
        for (c, beta, v) in lin {
            self.a.push((r, c, beta, -sign * v));
        }
        for (beta, v) in cst {
            self.b.push((r, beta, sign * v));
        }
        self.rows += 1;
        r
    }
}

/// Compile to the parametrized cone-program form.
pub fn compile(cp: &ConvexProblem) -> Result<ParamToDataMap> {
    cp.verify_dcp()?;
    let m = cp.n_cols();
    let mut n = m;
    let mut zero = RowBlock::default();
    let mut nonneg = RowBlock::default();
    let mut exp = RowBlock::default();
    let one = AffineForm::constant(1.0);
    for con in &cp.constraints {
        match con {
            ConvexConstraint::Zero(f) => {
                zero.push(f, -1.0);
            }
            ConvexConstraint::NonPos(f) => {
                nonneg.push(f, -1.0);
            }
            ConvexConstraint::LogSumExp { args, bound } if args.len() == 1 => {
                nonneg.push(&args[0].minus(bound), -1.0);
            }
            ConvexConstraint::LogSumExp { args, bound } => {
                let mut total = one.clone();
                for a in args {
                    let q = AffineForm::column(n);
                    n += 1;
                    exp.push(&a.minus(bound), 1.0);
                    exp.push(&one, 1.0);
                    exp.push(&q, 1.0);
                    total = total.minus(&q);
                }
                nonneg.push(&total, 1.0);
            }
            ConvexConstraint::ExpCone { x, y, z } => {
                exp.push(x, 1.0);
                exp.push(y, 1.0);
                exp.push(z, 1.0);
            }
        }
    }
    let layout = ConeLayout {
        zero: zero.rows,
        nonneg: nonneg.rows,
        exp: exp.rows / 3,
    };
    let rows = layout.rows();
    let mut a_entries = Vec::new();
    let mut b_entries = Vec::new();
    for (block, off) in [
        (&zero, 0),
        (&nonneg, zero.rows),
        (&exp, zero.rows + nonneg.rows),
    ] {
        a_entries.extend(block.a.iter().map(|&(r, c, beta, v)| (r + off, c, beta, v)));
        b_entries.extend(block.b.iter().map(|&(r, beta, v)| (r + off, beta, v)));
    }
    let positions: Vec<(usize, usize, f64)> =
        a_entries.iter().map(|&(r, c, _, _)| (r, c, 0.0)).collect();
    let mut pattern = CscMatrix::from_triplets(rows, n, &positions);
    pattern.nzval.iter_mut().for_each(|v| *v = 0.0);
    let nnz = pattern.nnz();
    let slot_of = |r: usize, c: usize| -> usize {
        let (rows_c, _) = pattern.col(c);
        pattern.colptr[c] + rows_c.binary_search(&r).expect("entry in pattern")
    };
    let n_slots = nnz + rows + n + 1;
    let mut t_offset = vec![0.0; n_slots];
    let mut t_trip = Vec::new();
    let mut put = |slot: usize, beta: Option<usize>, v: f64| match beta {
        Some(b) => t_trip.push((slot, b, v)),
        None => t_offset[slot] += v,
    };
    for &(r, c, beta, v) in &a_entries {
        put(slot_of(r, c), beta, v);
    }
    for &(r, beta, v) in &b_entries {
        put(nnz + r, beta, v);
    }
    let (lin, cst) = cp.objective.split();
    for (c, beta, v) in lin {
        put(nnz + rows + c, beta, v);
    }
    for (beta, v) in cst {
        put(n_slots - 1, beta, v);
    }
    let t = CscMatrix::from_triplets(n_slots, cp.n_beta, &t_trip);
    Ok(ParamToDataMap {
        t,
        t_offset,
        pattern,
        layout,
        n_convex: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(c: usize) -> AffineForm {
        AffineForm::column(c)
    }

    #[test]
    fn affine_problem_has_no_exp_cones() {
        let cp = ConvexProblem {
            n_log_vars: 2,
            n_slacks: 0,
            n_beta: 1,
            objective: col(0),
            constraints: vec![
                ConvexConstraint::Zero(col(0).plus(&col(1)).plus(&AffineForm::beta(0))),
                ConvexConstraint::NonPos(col(1).minus(&AffineForm::constant(2.0))),
            ],
        };
        let map = compile(&cp).unwrap();
        assert_eq!(
            map.layout(),
            ConeLayout {
                zero: 1,
                nonneg: 1,
                exp: 0
            }
        );
        let p = map.instantiate(&[3.0]).unwrap();
        assert_eq!(p.b, vec![-3.0, 2.0]);
        assert_eq!(p.a.to_dense(), vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(p.c, vec![1.0, 0.0]);
    }

    #[test]
    fn two_term_lse_uses_two_exp_cones() {
        let cp = ConvexProblem {
            n_log_vars: 2,
            n_slacks: 1,
            n_beta: 0,
            objective: col(2),
            constraints: vec![ConvexConstraint::LogSumExp {
                args: vec![col(2), col(0)],
                bound: col(1),
            }],
        };
        let map = compile(&cp).unwrap();
        assert_eq!(
            map.layout(),
            ConeLayout {
                zero: 0,
                nonneg: 1,
                exp: 2
            }
        );
        assert_eq!(map.n_cols(), 5);
        assert_eq!(map.n_convex(), 3);
    }

    #[test]
    fn dump_round_trip() {
        let cp = ConvexProblem {
            n_log_vars: 1,
            n_slacks: 1,
            n_beta: 0,
            objective: col(1),
            constraints: vec![ConvexConstraint::ExpCone {
                x: col(0),
                y: AffineForm::constant(1.0),
                z: col(1),
            }],
        };
        let p = compile(&cp).unwrap().instantiate(&[]).unwrap();
        assert_eq!(ConeProgram::parse_dump(&p.dump()).unwrap(), p);
    }
}
