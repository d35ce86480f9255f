//! Minimal compressed-row containers for assembled operators.

use nalgebra::DMatrix;

/// Symmetric sparse matrix storing only the upper triangle (diagonal
/// included), so symmetry is exact by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from unordered triplets; `(i, j)` and `(j, i)` address the same
    /// entry. Duplicates are summed in insertion order, which keeps assembly
    /// bitwise reproducible.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for t in &mut triplets {
            if t.0 > t.1 {
                std::mem::swap(&mut t.0, &mut t.1);
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(j < n, "triplet index out of range");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, j, v) in self.iter_upper() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter_upper() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Principal submatrix on `keep` (strictly increasing indices).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            map[g] = k;
        }
        let triplets = self
            .iter_upper()
            .filter(|(i, j, _)| map[*i] != usize::MAX && map[*j] != usize::MAX)
            .map(|(i, j, v)| (map[i], map[j], v))
            .collect();
        Self::from_triplets(keep.len(), triplets)
    }
}

/// General compressed-row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Rows are given in order as lists of `(column, value)`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows.iter().cloned() {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                assert!(c < cols);
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.vals[k]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                x[j] += v * yi;
            }
        }
        x
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Galerkin product `Gᵀ M G` for symmetric `M`, exactly symmetric.
    pub fn congruence(&self, m: &SparseSymMatrix) -> SparseSymMatrix {
        assert_eq!(m.dim(), self.rows);
        let mut upper = Vec::new();
        for (i, j, v) in m.iter_upper() {
            for (a, ga) in self.row(i) {
                for (b, gb) in self.row(j) {
                    let w = ga * v * gb;
                    upper.push((a, b, w));
                    if i != j {
                        upper.push((b, a, w));
                    }
                }
            }
        }
        // full product summed over both (i, j) and (j, i); keep the upper half
        let triplets = upper.into_iter().filter(|(a, b, _)| a <= b).collect();
        SparseSymMatrix::from_triplets(self.cols, triplets)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_fold_to_upper() {
        let m = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0), (0, 0, 1.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(2, 2), 5.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 5.0]);
        let d = m.to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn restrict_and_congruence_match_dense() {
        let m = SparseSymMatrix::from_triplets(
            3,
            vec![(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 2, 2.0)],
        );
        let r = m.restrict(&[0, 2]);
        assert_eq!(r.to_dense(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));

        let g = CsrMatrix::from_rows(2, vec![vec![(0, -1.0), (1, 1.0)], vec![(1, 1.0)], vec![(0, 2.0)]]);
        let dense = g.to_dense().transpose() * m.to_dense() * g.to_dense();
        let c = g.congruence(&m).to_dense();
        assert!((dense - c).abs().max() < 1e-14);
        assert_eq!(g.transpose_mul_vec(&[1.0, 2.0, 3.0]), vec![5.0, 3.0]);
    }
}
