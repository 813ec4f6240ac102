//! Thin layer over `faer`: sparse assembly, direct solves, and rank decisions.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};

use crate::error::{PlateError, Result};

/// Relative singular value threshold used in every rank decision.
pub const RANK_TOL: f64 = 1e-8;
/// Minimum ratio between the smallest kept and largest dropped singular value.
pub const MIN_GAP: f64 = 1e3;

/// Accumulates `(row, col, value)` entries; duplicates are summed.
///
/// Entries are merged in place whenever the buffer doubles, so the peak stays near
/// twice the number of distinct entries.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u64, f64)>,
    merged: usize,
}

const MIN_MERGE: usize = 1 << 22;

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        assert!(nrows <= u32::MAX as usize && ncols <= u32::MAX as usize, "matrix too large for 32-bit indices");
        Self { nrows, ncols, entries: Vec::new(), merged: 0 }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((((j as u64) << 32) | i as u64, v));
        if self.entries.len() >= MIN_MERGE.max(2 * self.merged) {
            self.merge();
        }
    }

    fn merge(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.0);
        let mut n = 0;
        for k in 0..self.entries.len() {
            let e = self.entries[k];
            if n > 0 && self.entries[n - 1].0 == e.0 {
                self.entries[n - 1].1 += e.1;
            } else {
                self.entries[n] = e;
                n += 1;
            }
        }
        self.entries.truncate(n);
        self.entries.shrink_to(2 * n);
        self.merged = n;
    }

    pub fn build(mut self) -> SparseMatrix {
        self.merge();
        let mut col_ptr = vec![0u32; self.ncols + 1];
        for &(k, _) in &self.entries {
            col_ptr[(k >> 32) as usize + 1] += 1;
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx: Vec<u32> = self.entries.iter().map(|&(k, _)| k as u32).collect();
        let val: Vec<f64> = self.entries.iter().map(|e| e.1).collect();
        drop(self.entries);
        let sym = SymbolicSparseColMat::new_checked(self.nrows, self.ncols, col_ptr, None, row_idx);
        SparseMatrix { inner: SparseColMat::new(sym, val) }
    }
}

/// Compressed sparse column matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    inner: SparseColMat<u32, f64>,
}

impl SparseMatrix {
    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.inner.val().len()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.build()
    }

    /// Iterates over stored `(row, col, value)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let sym = self.inner.symbolic();
        let cp = sym.col_ptr();
        let ri = sym.row_idx();
        let val = self.inner.val();
        (0..self.ncols())
            .flat_map(move |j| (cp[j] as usize..cp[j + 1] as usize).map(move |p| (ri[p] as usize, j, val[p])))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (i, j, v) in self.entries() {
            y[i] += v * x[j];
        }
        y
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows());
        let mut y = vec![0.0; self.ncols()];
        for (i, j, v) in self.entries() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = TripletBuilder::new(self.ncols(), self.nrows());
        for (i, j, v) in self.entries() {
            t.push(j, i, v);
        }
        t.build()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.entries().map(|(i, j, v)| x[i] * v * y[j]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.val().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut diff = TripletBuilder::new(self.nrows(), self.ncols());
        for (i, j, v) in self.entries() {
            diff.push(i, j, v);
        }
        for (i, j, v) in t.entries() {
            diff.push(i, j, -v);
        }
        diff.build().max_abs()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows(), self.ncols());
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    /// Frobenius norm, used to scale residual checks.
    pub fn frobenius(&self) -> f64 {
        self.inner.val().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn inner(&self) -> &SparseColMat<u32, f64> {
        &self.inner
    }
}

/// Which factorization a sparse solve should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveKind {
    /// Symmetric positive definite: sparse Cholesky.
    Spd,
    /// Symmetric indefinite or unsymmetric: sparse LU with partial pivoting.
    Saddle,
}

/// A reusable sparse factorization.
pub enum Factorization {
    Llt(faer::sparse::linalg::solvers::Llt<u32, f64>),
    Lu(Box<faer::sparse::linalg::solvers::Lu<u32, f64>>),
}

pub fn factorize(a: &SparseMatrix, kind: SolveKind) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(PlateError::Solver(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    match kind {
        SolveKind::Spd => a
            .inner()
            .sp_cholesky(Side::Lower)
            .map(Factorization::Llt)
            .map_err(|e| PlateError::Solver(format!("sparse Cholesky breakdown: {e:?}"))),
        SolveKind::Saddle => a
            .inner()
            .sp_lu()
            .map(|f| Factorization::Lu(Box::new(f)))
            .map_err(|e| PlateError::Solver(format!("sparse LU breakdown: {e:?}"))),
    }
}

impl Factorization {
    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        match self {
            Factorization::Llt(f) => f.solve(b),
            Factorization::Lu(f) => f.solve(b),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.solve_mat(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Normwise backward error `|b - Ax| / (|A|_F |x| + |b|)`.
pub fn backward_error(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let denom = a.frobenius() * norm(x) + norm(b);
    if denom == 0.0 {
        0.0
    } else {
        norm(&r) / denom
    }
}

/// Backward error bound every solve must meet.
pub const SOLVE_TOL: f64 = 1e-10;

/// Direct solve with one step of iterative refinement and a residual check.
pub fn sparse_solve(a: &SparseMatrix, b: &[f64], kind: SolveKind) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(PlateError::Solver(format!("rhs has length {}, matrix has {} rows", b.len(), a.nrows())));
    }
    if b.is_empty() {
        return Ok(Vec::new());
    }
    let f = factorize(a, kind)?;
    solve_checked(a, &f, b)
}

/// Solves with an existing factorization, refining once and checking the residual.
pub fn solve_checked(a: &SparseMatrix, f: &Factorization, b: &[f64]) -> Result<Vec<f64>> {
    solve_checked_tol(a, f, b, SOLVE_TOL)
}

/// As [`solve_checked`] with an explicit backward error bound.
pub fn solve_checked_tol(a: &SparseMatrix, f: &Factorization, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = f.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let dx = f.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PlateError::Solver("solution contains non-finite entries".into()));
    }
    let be = backward_error(a, &x, b);
    if be > tol {
        return Err(PlateError::Solver(format!("backward error {be:.3e} exceeds {tol:e}")));
    }
    Ok(x)
}

/// Outcome of a singular-value based rank decision.
#[derive(Clone, Debug, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    pub threshold: f64,
    /// Smallest kept over largest dropped singular value (infinite when nothing is dropped
    /// or the dropped values are exactly zero).
    pub gap_ratio: f64,
}

/// Decides the rank from singular values sorted in nonincreasing order.
pub fn decide_rank(singular: &[f64]) -> Result<RankDecision> {
    let smax = singular.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(RankDecision { rank: 0, threshold: 0.0, gap_ratio: f64::INFINITY });
    }
    let threshold = RANK_TOL * smax;
    let rank = singular.iter().take_while(|&&s| s > threshold).count();
    let gap_ratio = if rank == singular.len() || singular[rank] == 0.0 {
        f64::INFINITY
    } else {
        singular[rank - 1] / singular[rank]
    };
    if gap_ratio < MIN_GAP {
        let lo = rank.saturating_sub(3);
        let hi = (rank + 3).min(singular.len());
        return Err(PlateError::RankAmbiguous { gap: gap_ratio, tail: singular[lo..hi].to_vec() });
    }
    Ok(RankDecision { rank, threshold, gap_ratio })
}

/// Rank and right null space basis (columns) of a dense matrix.
pub fn null_space(a: &Mat<f64>) -> Result<(RankDecision, Mat<f64>)> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        let d = RankDecision { rank: 0, threshold: 0.0, gap_ratio: f64::INFINITY };
        return Ok((d, Mat::identity(n, n)));
    }
    let svd = a.svd().map_err(|e| PlateError::Eigen(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    let d = decide_rank(&sv)?;
    let v = svd.V();
    let ns = Mat::from_fn(n, n - d.rank, |i, j| v[(i, d.rank + j)]);
    Ok((d, ns))
}

/// Rank of a dense matrix under the shared threshold policy.
pub fn rank(a: &Mat<f64>) -> Result<RankDecision> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(RankDecision { rank: 0, threshold: 0.0, gap_ratio: f64::INFINITY });
    }
    let s = a.singular_values().map_err(|e| PlateError::Eigen(format!("SVD failed: {e:?}")))?;
    decide_rank(&s)
}

/// Eigenvalues (ascending) of the symmetric pencil `(S, M)` with `M` SPD.
pub fn generalized_eigenvalues(s: &Mat<f64>, m: &Mat<f64>) -> Result<Vec<f64>> {
    let n = s.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let llt = m.llt(Side::Lower).map_err(|e| PlateError::Eigen(format!("mass matrix is not SPD: {e:?}")))?;
    let l = llt.L().to_owned();
    let linv = l.partial_piv_lu().inverse();
    let t = &linv * s * linv.transpose();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    sym.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| PlateError::Eigen(format!("symmetric eigensolver failed: {e:?}")))
}

/// Inverse of a small dense matrix.
pub fn dense_inverse(a: &Mat<f64>) -> Mat<f64> {
    a.partial_piv_lu().inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(sparse_solve(&a, &b, SolveKind::Spd).unwrap(), b);
    }

    #[test]
    fn two_by_two_spd() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 2.0);
        let a = t.build();
        for kind in [SolveKind::Spd, SolveKind::Saddle] {
            let x = sparse_solve(&a, &[1.0, 0.0], kind).unwrap();
            assert!((x[0] - 2.0 / 3.0).abs() < 1e-15 && (x[1] + 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletBuilder::new(1, 1);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.5);
        assert_eq!(t.build().to_dense()[(0, 0)], 3.5);
    }

    #[test]
    fn saddle_system() {
        // [[2, 1], [1, 0]] is indefinite.
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        let x = sparse_solve(&t.build(), &[3.0, 1.0], SolveKind::Saddle).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_decision_reports_gap() {
        let d = decide_rank(&[3.0, 1.0, 1e-14]).unwrap();
        assert_eq!(d.rank, 2);
        assert!(d.gap_ratio > 1e13);
        assert!(matches!(decide_rank(&[1.0, 1e-6, 1e-9]), Err(PlateError::RankAmbiguous { .. })));
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = Mat::from_fn(2, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        let (d, ns) = null_space(&a).unwrap();
        assert_eq!(d.rank, 1);
        assert_eq!(ns.ncols(), 2);
        let prod = &a * &ns;
        assert!(prod.norm_max() < 1e-14);
    }

    #[test]
    fn generalized_pencil() {
        let s = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 0.0 });
        let m = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, 4.0][i] } else { 0.0 });
        let ev = generalized_eigenvalues(&s, &m).unwrap();
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }
}
