//! Compressed sparse row matrices over `f64`.
//!
//! Only what the pipeline needs: triplet assembly, products, transposes,
//! linear combinations and a few norms. Column indices within a row are
//! always sorted and unique, so every operation is deterministic.

use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                indices.push(i);
                values.push(d);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            values,
        }
    }

    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that sum to exactly zero are dropped.
    ///
    /// Panics if an index is out of bounds.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|s| (cols[s], vals[s])));
            row.sort_by_key(|&(c, _)| c);
            let mut j = 0;
            while j < row.len() {
                let c = row[j].0;
                let mut sum = 0.0;
                while j < row.len() && row[j].0 == c {
                    sum += row[j].1;
                    j += 1;
                }
                if sum != 0.0 {
                    indices.push(c);
                    values.push(sum);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut trips = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &trips)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(col, value)`, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Sparse product `self * rhs` (row-wise Gustavson with a dense accumulator).
    ///
    /// Panics on a dimension mismatch.
    pub fn mul(&self, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, rhs.nrows, "sparse product dimension mismatch");
        let mut acc = vec![0.0; rhs.ncols];
        let mut seen = vec![usize::MAX; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if seen[j] != i {
                        seen[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != 0.0 {
                    indices.push(j);
                    values.push(acc[j]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: rhs.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(
            (self.nrows, self.ncols),
            (other.nrows, other.ncols),
            "sparse sum dimension mismatch"
        );
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for i in 0..self.nrows {
            let mut lhs = self.row(i).peekable();
            let mut rhs = other.row(i).peekable();
            loop {
                let (j, v) = match (lhs.peek().copied(), rhs.peek().copied()) {
                    (None, None) => break,
                    (Some((j, x)), None) => {
                        lhs.next();
                        (j, a * x)
                    }
                    (None, Some((j, y))) => {
                        rhs.next();
                        (j, b * y)
                    }
                    (Some((jx, x)), Some((jy, y))) => {
                        if jx < jy {
                            lhs.next();
                            (jx, a * x)
                        } else if jy < jx {
                            rhs.next();
                            (jy, b * y)
                        } else {
                            lhs.next();
                            rhs.next();
                            (jx, a * x + b * y)
                        }
                    }
                };
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn scale(&self, a: f64) -> CsrMatrix {
        if a == 0.0 {
            return CsrMatrix::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `self * rhs * self^T`, the congruence used for passive transformations.
    pub fn congruence(&self, rhs: &CsrMatrix) -> CsrMatrix {
        self.mul(&rhs.mul(&self.transpose()))
    }

    /// Block matrix `[self | right]`.
    pub fn hstack(&self, right: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, right.nrows, "hstack row mismatch");
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + right.nnz());
        let mut values = Vec::with_capacity(self.nnz() + right.nnz());
        indptr.push(0);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                indices.push(j);
                values.push(v);
            }
            for (j, v) in right.row(i) {
                indices.push(self.ncols + j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols + right.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_range(&self, start: usize, end: usize) -> CsrMatrix {
        assert!(start <= end && end <= self.ncols);
        let trips: Vec<_> = self
            .triplets()
            .filter(|&(_, j, _)| j >= start && j < end)
            .map(|(i, j, v)| (i, j - start, v))
            .collect();
        CsrMatrix::from_triplets(self.nrows, end - start, &trips)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.lin_comb(1.0, other, -1.0).max_abs()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols && self.max_abs_diff(&self.transpose()) <= tol
    }

    /// Row-wise count of stored entries.
    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// `self * dense`.
    pub fn mul_dense(&self, dense: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.ncols, dense.nrows(), "sparse-dense dimension mismatch");
        let mut out = DMatrix::zeros(self.nrows, dense.ncols());
        for c in 0..dense.ncols() {
            let col = dense.column(c);
            for i in 0..self.nrows {
                out[(i, c)] = self.row(i).map(|(k, v)| v * col[k]).sum();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_sparse(n: usize, m: usize) -> impl Strategy<Value = CsrMatrix> {
        proptest::collection::vec((0..n, 0..m, -3i32..=3), 0..3 * n).prop_map(move |t| {
            let trips: Vec<_> = t.into_iter().map(|(i, j, v)| (i, j, v as f64)).collect();
            CsrMatrix::from_triplets(n, m, &trips)
        })
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 2, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 2), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn hstack_and_column_range() {
        let a = CsrMatrix::identity(2);
        let b = CsrMatrix::from_triplets(2, 1, &[(1, 0, 5.0)]);
        let c = a.hstack(&b);
        assert_eq!(c.ncols(), 3);
        assert_eq!(c.get(1, 2), 5.0);
        assert_eq!(c.column_range(2, 3), b);
        assert_eq!(c.column_range(0, 2), a);
    }

    proptest! {
        // integer entries keep every product exact, so dense and sparse agree bit for bit
        #[test]
        fn product_matches_dense(a in arb_sparse(6, 5), b in arb_sparse(5, 7)) {
            prop_assert_eq!(a.mul(&b).to_dense(), a.to_dense() * b.to_dense());
        }

        #[test]
        fn transpose_and_lin_comb_match_dense(a in arb_sparse(5, 4), b in arb_sparse(5, 4)) {
            prop_assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
            prop_assert_eq!(a.transpose().transpose(), a.clone());
            prop_assert_eq!(
                a.lin_comb(2.0, &b, -3.0).to_dense(),
                a.to_dense() * 2.0 - b.to_dense() * 3.0
            );
        }
    }
}
