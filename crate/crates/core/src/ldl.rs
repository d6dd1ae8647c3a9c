//! Sparse LDLᵀ factorization of symmetric quasi-definite matrices.
//!
//! The input is the upper triangle (diagonal included) in CSC form. A
//! minimum-degree ordering is computed once; symbolic analysis and the
//! permuted pattern are kept so that matrices with the same pattern can be
//! refactored numerically without repeating the analysis.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Ldl {
    n: usize,
    perm: Vec<usize>,
    /// Permuted upper triangle pattern.
    cp: Vec<usize>,
    ci: Vec<usize>,
    /// Position in the permuted pattern of each input nonzero.
    map: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
}

/// Minimum-degree ordering of a symmetric pattern given by its upper
/// triangle; ties go to the lowest index.
pub fn minimum_degree(a: &CscMatrix) -> Vec<usize> {
    let n = a.ncols;
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for j in 0..n {
        for &i in a.col(j).0 {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = adj[v].drain().collect();
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
        }
        for &u in &nbrs {
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
        }
        for &u in &nbrs {
            queue.insert((adj[u].len(), u));
        }
    }
    order
}

impl Ldl {
    /// Analyse and factor. `a` holds the upper triangle of the matrix.
    pub fn new(a: &CscMatrix) -> Result<Self> {
        let perm = minimum_degree(a);
        Self::with_ordering(a, perm)
    }

    pub fn with_ordering(a: &CscMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.ncols;
        if a.nrows != n || perm.len() != n {
            return Err(Error::Dimension(
                "LDL needs a square matrix and a full permutation".into(),
            ));
        }
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        // Permuted upper triangle, remembering where each input entry goes.
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(a.nnz());
        for j in 0..n {
            for k in a.colptr[j]..a.colptr[j + 1] {
                let i = a.rowval[k];
                if i > j {
                    return Err(Error::Dimension(
                        "LDL input must be upper triangular".into(),
                    ));
                }
                let (pi, pj) = (iperm[i], iperm[j]);
                entries.push((pi.max(pj), pi.min(pj), k));
            }
        }
        entries.sort_unstable();
        let mut cp = vec![0; n + 1];
        let mut ci = Vec::with_capacity(entries.len());
        let mut map = vec![0; a.nnz()];
        for (pos, &(c, r, k)) in entries.iter().enumerate() {
            cp[c + 1] += 1;
            ci.push(r);
            map[k] = pos;
        }
        for j in 0..n {
            cp[j + 1] += cp[j];
        }
        // Elimination tree and column counts.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &r in &ci[cp[j]..cp[j + 1]] {
                let mut i = r;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let mut f = Ldl {
            n,
            perm,
            cp,
            ci,
            map,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
        };
        f.refactor(&a.nzval)?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric refactorization for new values on the original pattern.
    pub fn refactor(&mut self, values: &[f64]) -> Result<()> {
        let n = self.n;
        let mut cx = vec![0.0; self.ci.len()];
        for (k, &pos) in self.map.iter().enumerate() {
            cx[pos] = values[k];
        }
        let mut y_vals = vec![0.0; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        for k in 0..n {
            self.d[k] = 0.0;
            let mut nnz_y = 0;
            for p in self.cp[k]..self.cp[k + 1] {
                let b = self.ci[p];
                if b == k {
                    self.d[k] = cx[p];
                    continue;
                }
                y_vals[b] = cx[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_used[next] {
                            break;
                        }
                        y_used[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let slot = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..slot {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[slot] = k;
                self.lx[slot] = yc * self.dinv[c];
                self.d[k] -= yc * self.lx[slot];
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }
            if self.d[k] == 0.0 || !self.d[k].is_finite() {
                return Err(Error::Factorization(format!(
                    "zero or non-finite pivot at step {k}"
                )));
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Solve `K x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }

    /// Count of positive and negative pivots (the inertia).
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|d| **d > 0.0).count();
        (pos, self.n - pos)
    }
}
