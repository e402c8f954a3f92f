//! Sparse symmetric positive-definite matrices and direct/iterative solvers.
//!
//! Matrices are stored as the lower triangle in CSR form. The direct solver
//! is an envelope (skyline) Cholesky factorization: envelope factorizations
//! produce no fill outside the envelope, so the factor structure is derived
//! directly from the assembled pattern. A Jacobi-preconditioned conjugate
//! gradient solver serves as the iterative fallback.

use crate::error::{Error, Result};

/// Symmetric matrix, lower triangle stored row-wise (CSR), columns ascending.
#[derive(Clone, Debug)]
pub struct SparseSpdMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    /// Build from (i, j, v) triplets. Entries are folded onto the lower
    /// triangle and duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in triplets {
            let (r, c) = (i.max(j), i.min(j));
            assert!(r < n, "triplet index ({i},{j}) out of range for dim {n}");
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseSpdMatrix { n, row_ptr, col_idx, values }
    }

    /// Number of rows/columns.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored (lower-triangle) entries of row `i`: (columns, values).
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn set_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Index of the stored entry (i, j); callers must pass j <= i.
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| r.start + k)
    }

    /// Add into a stored slot found earlier with [`Self::index_of`].
    pub fn add_at(&mut self, idx: usize, v: f64) {
        self.values[idx] += v;
    }

    /// Mutable view of the stored values (layout given by `index_of`).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            if let Some(k) = self.index_of(i, i) {
                d[i] = self.values[k];
            }
        }
        d
    }

    /// y = A x using the symmetric structure.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let cols = &self.col_idx[r.clone()];
            let vals = &self.values[r];
            let xi = x[i];
            let mut yi = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                yi += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += yi;
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Envelope (skyline) Cholesky factor of a [`SparseSpdMatrix`].
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    ptr: Vec<usize>,
    data: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &SparseSpdMatrix) -> Result<Self> {
        let n = a.dim();
        let mut first = vec![0usize; n];
        for i in 0..n {
            let (cols, _) = a.row(i);
            first[i] = cols.first().copied().unwrap_or(i).min(i);
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i]);
        }
        let mut data = vec![0.0f64; ptr[n]];
        let mut diag = vec![0.0f64; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag[i] = v;
                } else {
                    data[ptr[i] + (j - first[i])] = v;
                }
            }
        }

        // Active-row factorization: entries of row i left of column jj hold
        // finished L values, entries at and right of jj still hold A values.
        for i in 0..n {
            let fi = first[i];
            let (prev, cur) = data.split_at_mut(ptr[i]);
            let row_i = &mut cur[..(i - fi)];
            for jj in 0..row_i.len() {
                let j = fi + jj;
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = &prev[ptr[j]..ptr[j + 1]];
                let dot: f64 = row_i[(start - fi)..jj]
                    .iter()
                    .zip(&row_j[(start - fj)..(j - fj)])
                    .map(|(x, y)| x * y)
                    .sum();
                row_i[jj] = (row_i[jj] - dot) / diag[j];
            }
            let s: f64 = row_i.iter().map(|v| v * v).sum();
            let d = diag[i] - s;
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::FactorizationFailed {
                    row: i,
                    detail: format!("non-positive pivot {d:.3e}"),
                });
            }
            diag[i] = d.sqrt();
        }
        Ok(SkylineCholesky { n, first, ptr, data, diag })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        // forward: L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.ptr[i]..self.ptr[i + 1]];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, y)| l * y).sum();
            x[i] = (x[i] - s) / self.diag[i];
        }
        // backward: L^T x = y (column sweep)
        for i in (0..self.n).rev() {
            x[i] /= self.diag[i];
            let xi = x[i];
            let fi = self.first[i];
            let row = &self.data[self.ptr[i]..self.ptr[i + 1]];
            for (xk, &lik) in x[fi..i].iter_mut().zip(row) {
                *xk -= lik * xi;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn pcg_jacobi(
    a: &SparseSpdMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, PcgOutcome)> {
    let n = a.dim();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], PcgOutcome { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_d: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let res = norm2(&r) / b_norm;
        if res <= tol {
            return Ok((x, PcgOutcome { iterations: it, relative_residual: res }));
        }
        for k in 0..n {
            z[k] = r[k] * inv_d[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: norm2(&r) / b_norm,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_unstable_by_key(|&v| adj[v].len());
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| adj[u].len());
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_spd() -> SparseSpdMatrix {
        // [[4,1,0],[1,3,1],[0,1,2]]
        SparseSpdMatrix::from_triplets(
            3,
            [
                (0, 0, 4.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 1, 1.0),
                (2, 2, 2.0),
            ],
        )
    }

    #[test]
    fn triplets_fold_and_merge() {
        let a = SparseSpdMatrix::from_triplets(
            2,
            [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)],
        );
        // (0,1) folds to (1,0) and merges with the explicit (1,0)
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.to_dense()[(1, 0)], 5.0);
        assert_eq!(a.to_dense()[(0, 1)], 5.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = small_spd();
        let d = a.to_dense();
        let x = [1.0, -2.0, 0.5];
        let mut y = vec![0.0; 3];
        a.matvec(&x, &mut y);
        let yd = d * nalgebra::DVector::from_row_slice(&x);
        for i in 0..3 {
            assert_relative_eq!(y[i], yd[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn skyline_solves_small_system() {
        let a = small_spd();
        let b = [1.0, 2.0, 3.0];
        let chol = SkylineCholesky::factor(&a).unwrap();
        let x = chol.solve(&b);
        let mut ax = vec![0.0; 3];
        a.matvec(&x, &mut ax);
        for i in 0..3 {
            assert_relative_eq!(ax[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn skyline_matches_dense_cholesky_on_random_spd() {
        // A = B^T B + n I with fixed pseudo-random B
        let n = 40;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let b = nalgebra::DMatrix::from_fn(n, n, |_, _| next());
        let a_dense = b.transpose() * &b + nalgebra::DMatrix::identity(n, n) * n as f64;
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                trips.push((i, j, a_dense[(i, j)]));
            }
        }
        let a = SparseSpdMatrix::from_triplets(n, trips);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = SkylineCholesky::factor(&a).unwrap().solve(&rhs);
        let xd = a_dense
            .clone()
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_row_slice(&rhs));
        for i in 0..n {
            assert_relative_eq!(x[i], xd[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn non_spd_is_rejected() {
        let a = SparseSpdMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::FactorizationFailed { .. })
        ));
    }

    #[test]
    fn pcg_matches_direct() {
        let a = small_spd();
        let b = [0.5, -1.0, 2.0];
        let direct = SkylineCholesky::factor(&a).unwrap().solve(&b);
        let (x, out) = pcg_jacobi(&a, &b, 1e-12, 100).unwrap();
        assert!(out.relative_residual <= 1e-12);
        for i in 0..3 {
            assert_relative_eq!(x[i], direct[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn pcg_zero_rhs_returns_zero() {
        let a = small_spd();
        let (x, out) = pcg_jacobi(&a, &[0.0; 3], 1e-12, 10).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn rcm_reduces_envelope() {
        // path graph given in scrambled order
        let n = 50;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut adj = vec![Vec::new(); n];
        for w in 0..n - 1 {
            let (u, v) = (scramble[w], scramble[w + 1]);
            adj[u].push(v);
            adj[v].push(u);
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut pos = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        let bw = (0..n)
            .flat_map(|u| adj[u].iter().map(move |&v| (u, v)))
            .map(|(u, v)| pos[u].abs_diff(pos[v]))
            .max()
            .unwrap();
        assert!(bw <= 2, "rcm bandwidth {bw}");
    }
}
