//! Symmetric positive definite solvers: a banded Cholesky for 1D systems and
//! a sparse Cholesky (faer) for 2D systems.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use log::warn;

use crate::error::{Error, Result};

/// faer runs single-threaded so repeated solves are bit-identical.
static SEQUENTIAL: Once = Once::new();

/// Condition numbers above this trigger a warning.
pub const CONDITION_WARNING: f64 = 1e12;

/// Normwise backward error `|b - Ax|_inf / (|A|_inf |x|_inf + |b|_inf)`.
pub fn backward_error(residual: &[f64], a_norm: f64, x: &[f64], b: &[f64]) -> f64 {
    let r = inf_norm(residual);
    let denom = a_norm * inf_norm(x) + inf_norm(b);
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Symmetric banded matrix; only the lower band is stored.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        i * (self.bw + 1) + (self.bw + j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)`, which also updates `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n.saturating_sub(1));
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// In-place banded Cholesky `A = L L^T`.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let mut l = self.clone();
        for j in 0..self.n {
            let lo = j.saturating_sub(self.bw);
            let mut d = l.data[l.idx(j, j)];
            for k in lo..j {
                let v = l.data[l.idx(j, k)];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SolveFailed(format!("matrix is not positive definite at pivot {j}")));
            }
            let d = d.sqrt();
            let jj = l.idx(j, j);
            l.data[jj] = d;
            let hi = (j + self.bw).min(self.n - 1);
            for i in (j + 1)..=hi {
                let lo_i = i.saturating_sub(self.bw).max(lo);
                let mut v = l.data[l.idx(i, j)];
                for k in lo_i..j {
                    v -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                let ij = l.idx(i, j);
                l.data[ij] = v / d;
            }
        }
        Ok(BandedCholesky { l })
    }

    /// Solves `A x = b` with one step of iterative refinement and checks the
    /// backward error against `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Ok(Vec::new());
        }
        if b.iter().all(|v| *v == 0.0) {
            return Ok(vec![0.0; self.n]);
        }
        let chol = self.cholesky()?;
        let mut x = chol.solve(b);
        let r: Vec<f64> = self.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let dx = chol.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        let r: Vec<f64> = self.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let err = backward_error(&r, self.inf_norm(), &x, b);
        if !(err <= tol) {
            return Err(Error::SolveFailed(format!("backward error {err:.3e} exceeds {tol:.1e}")));
        }
        Ok(x)
    }
}

/// Lower Cholesky factor of a [`BandedSpd`].
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSpd,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let bw = self.l.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut v = y[i];
            for k in lo..i {
                v -= self.l.data[self.l.idx(i, k)] * y[k];
            }
            y[i] = v / self.l.data[self.l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut v = y[i];
            for k in (i + 1)..=hi {
                v -= self.l.data[self.l.idx(k, i)] * y[k];
            }
            y[i] = v / self.l.data[self.l.idx(i, i)];
        }
        y
    }
}

/// Sparse symmetric matrix built from triplets.
///
/// Duplicate entries are summed in insertion order after a stable sort, so the
/// assembled values do not depend on anything but the order of `push` calls.
#[derive(Debug, Clone, Default)]
pub struct SparseSpdBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSpdBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    /// Adds `v` at `(i, j)`. Both triangles must be pushed by the caller.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, other: SparseSpdBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn build(mut self) -> Result<SparseSpd> {
        self.entries.sort_by_key(|&(i, j, _)| (j, i));
        let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(self.entries.len() / 4 + 1);
        for (i, j, v) in self.entries {
            match merged.last_mut() {
                Some(t) if t.row == i && t.col == j => t.val += v,
                _ => merged.push(Triplet::new(i, j, v)),
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &merged)
            .map_err(|e| Error::SolveFailed(format!("sparse assembly: {e:?}")))?;
        Ok(SparseSpd { mat })
    }
}

#[derive(Debug, Clone)]
pub struct SparseSpd {
    mat: SparseColMat<usize, f64>,
}

/// Solution of a sparse solve with diagnostics.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub x: Vec<f64>,
    pub backward_error: f64,
    pub condition_estimate: Option<f64>,
}

impl SparseSpd {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.compute_nnz()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        let sym = self.mat.symbolic();
        let vals = self.mat.val();
        for j in 0..self.n() {
            let range = sym.col_range(j);
            for (&i, &v) in sym.row_idx()[range.clone()].iter().zip(&vals[range]) {
                y[i] += v * x[j];
            }
        }
        y
    }

    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0; self.n()];
        let sym = self.mat.symbolic();
        let vals = self.mat.val();
        for j in 0..self.n() {
            let range = sym.col_range(j);
            for (&i, &v) in sym.row_idx()[range.clone()].iter().zip(&vals[range]) {
                rows[i] += v.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Sparse Cholesky solve with one refinement step; fails when the
    /// backward error exceeds `tol`. With `estimate_condition` the 2-norm
    /// condition number is estimated by power and inverse iteration and a
    /// warning is logged above [`CONDITION_WARNING`].
    pub fn solve(&self, b: &[f64], tol: f64, estimate_condition: bool) -> Result<SparseSolution> {
        let n = self.n();
        if n == 0 {
            return Ok(SparseSolution { x: Vec::new(), backward_error: 0.0, condition_estimate: None });
        }
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let llt = self
            .mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::SolveFailed(format!("sparse Cholesky: {e:?}")))?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            llt.solve_in_place(m.as_mut());
            (0..n).map(|i| m[(i, 0)]).collect()
        };
        let mut x = solve(b);
        let r: Vec<f64> = self.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let dx = solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        let r: Vec<f64> = self.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let berr = backward_error(&r, self.inf_norm(), &x, b);
        if !(berr <= tol) {
            return Err(Error::SolveFailed(format!("backward error {berr:.3e} exceeds {tol:.1e}")));
        }
        let condition_estimate = if estimate_condition {
            let lmax = power_iteration(n, |v| self.matvec(v));
            let lmin_inv = power_iteration(n, |v| solve(v));
            let cond = lmax * lmin_inv;
            if cond > CONDITION_WARNING {
                warn!("estimated condition number {cond:.3e} exceeds {CONDITION_WARNING:.0e}");
            }
            Some(cond)
        } else {
            None
        };
        Ok(SparseSolution { x, backward_error: berr, condition_estimate })
    }
}

/// Dominant eigenvalue estimate of a symmetric positive operator.
fn power_iteration(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    // Deterministic, non-symmetric start vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lambda = 0.0;
    for _ in 0..40 {
        let w = apply(&v);
        let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if (next - lambda).abs() <= 1e-6 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
