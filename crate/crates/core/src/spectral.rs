//! Dense generalized symmetric eigensolver, kernel classification and
//! Richardson extrapolation across refinement levels.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::Pencil;
use crate::error::{Error, ErrorKind, Result};
use crate::sparse::{norm, SparseSymMatrix};

const MODULE: &str = "spectral";

/// Largest accepted backward error of a computed eigenpair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Ascending; ties keep the eigensolver's index order.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors as columns, absent for values-only solves.
    pub vectors: Option<DMatrix<f64>>,
    pub label: String,
    pub kernel_tolerance: f64,
    pub kernel_dim: usize,
    /// Largest backward error `‖Av − λBv‖ / ((‖A‖₁ + |λ|‖B‖₁)‖v‖)`.
    pub max_residual: f64,
}

impl SpectralResult {
    pub fn vector(&self, k: usize) -> Option<Vec<f64>> {
        self.vectors.as_ref().map(|v| v.column(k).iter().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Kernel tolerance policy: relative to the median with an absolute floor.
pub fn kernel_tolerance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1e-10;
    }
    let median = values[values.len() / 2].abs();
    (1e-8 * median).max(1e-10)
}

/// Dense lower Cholesky factor; a non-positive pivot reports its dof.
pub fn cholesky(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::new(MODULE, "eig_gsym", ErrorKind::Cholesky { dof: j, pivot: d }));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

fn one_norm(m: &SparseSymMatrix) -> f64 {
    let mut col = vec![0.0; m.dim()];
    for (i, j, v) in m.iter_upper() {
        col[j] += v.abs();
        if i != j {
            col[i] += v.abs();
        }
    }
    col.into_iter().fold(0.0, f64::max)
}

fn solve(a: &SparseSymMatrix, b: &SparseSymMatrix, label: &str, with_vectors: bool) -> Result<SpectralResult> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::new(
            MODULE,
            "eig_gsym",
            ErrorKind::DimensionMismatch {
                expected: n,
                found: b.dim(),
            },
        ));
    }
    if n == 0 {
        return Err(Error::invalid(MODULE, "eig_gsym", format!("{label}: pencil has no free dofs")));
    }
    let l = cholesky(&b.to_dense())?;
    // C = L⁻¹ A L⁻ᵀ
    let x = l.solve_lower_triangular(&a.to_dense()).expect("nonsingular factor");
    let mut c = l.solve_lower_triangular(&x.transpose()).expect("nonsingular factor");
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let y = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    let vectors = l.transpose().solve_upper_triangular(&y).expect("nonsingular factor");

    let (na, nb) = (one_norm(a), one_norm(b));
    let mut max_residual = 0.0f64;
    for (k, &lam) in values.iter().enumerate() {
        let v: Vec<f64> = vectors.column(k).iter().copied().collect();
        let (av, bv) = (a.mul_vec(&v), b.mul_vec(&v));
        let r: Vec<f64> = av.iter().zip(&bv).map(|(p, q)| p - lam * q).collect();
        let scale = (na + lam.abs() * nb) * norm(&v);
        if scale > 0.0 {
            max_residual = max_residual.max(norm(&r) / scale);
        }
    }
    if !(max_residual < RESIDUAL_TOLERANCE) {
        return Err(Error::invalid(
            MODULE,
            "eig_gsym",
            format!("eigenpair residual {max_residual:e} exceeds {RESIDUAL_TOLERANCE:e}"),
        ));
    }

    let kernel_tolerance = kernel_tolerance(&values);
    let kernel_dim = values.iter().filter(|v| **v < kernel_tolerance).count();
    Ok(SpectralResult {
        values,
        vectors: with_vectors.then_some(vectors),
        label: label.to_string(),
        kernel_tolerance,
        kernel_dim,
        max_residual,
    })
}

/// Full spectrum and B-orthonormal eigenvectors of `A v = λ B v`.
pub fn eig_gsym(pencil: &Pencil) -> Result<SpectralResult> {
    solve(&pencil.a, &pencil.b, &pencil.label, true)
}

/// Same as [`eig_gsym`] but drops the eigenvectors from the result.
pub fn eigenvalues_gsym(pencil: &Pencil) -> Result<SpectralResult> {
    solve(&pencil.a, &pencil.b, &pencil.label, false)
}

/// Solve a pencil given directly by its matrices.
pub fn eig_gsym_matrices(a: &SparseSymMatrix, b: &SparseSymMatrix, label: &str) -> Result<SpectralResult> {
    solve(a, b, label, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSplit {
    pub kernel_dim: usize,
    pub expected_kernel_dim: usize,
    pub mismatch: bool,
    /// Index of the first retained eigenvalue.
    pub first_nonzero: usize,
    pub smallest_nonzero: f64,
    pub kernel_tolerance: f64,
}

/// Classify the spectrum into kernel and retained parts, requiring a
/// factor-100 gap between them.
pub fn split_kernel(result: &SpectralResult, expected_kernel_dim: usize) -> Result<KernelSplit> {
    const OP: &str = "split_kernel";
    let k = result.kernel_dim;
    let Some(&smallest) = result.values.get(k) else {
        return Err(Error::invalid(MODULE, OP, format!("{}: no eigenvalue above the kernel tolerance", result.label)));
    };
    let largest_kernel = result.values[..k].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if smallest < 100.0 * largest_kernel {
        return Err(Error::new(
            MODULE,
            OP,
            ErrorKind::SpectralGap {
                largest_kernel,
                smallest_retained: smallest,
            },
        ));
    }
    Ok(KernelSplit {
        kernel_dim: k,
        expected_kernel_dim,
        mismatch: k != expected_kernel_dim,
        first_nonzero: k,
        smallest_nonzero: smallest,
        kernel_tolerance: result.kernel_tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub observed_order: Option<f64>,
}

/// Order-2 Richardson limit from the two finest levels; `hs` and `values`
/// are ordered coarse to fine. Mesh sizes need not be halved: the limit
/// of `λ(h) = λ* + c h²` through two points is used directly.
pub fn richardson_extrapolate(hs: &[f64], values: &[f64]) -> Result<Extrapolation> {
    const OP: &str = "richardson_extrapolate";
    if hs.len() != values.len() {
        return Err(Error::new(
            MODULE,
            OP,
            ErrorKind::DimensionMismatch {
                expected: hs.len(),
                found: values.len(),
            },
        ));
    }
    if hs.len() < 2 {
        return Err(Error::invalid(MODULE, OP, "at least two levels are required"));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0]) || !(w[1] > 0.0)) {
        return Err(Error::invalid(MODULE, OP, "mesh sizes must be positive and strictly decreasing"));
    }
    let m = hs.len();
    let (hc, hf) = (hs[m - 2].powi(2), hs[m - 1].powi(2));
    let (vc, vf) = (values[m - 2], values[m - 1]);
    let value = if vc == vf { vf } else { (vf * hc - vc * hf) / (hc - hf) };
    let observed_order = if m >= 3 {
        observed_order(&hs[m - 3..], &values[m - 3..])
    } else {
        None
    };
    Ok(Extrapolation { value, observed_order })
}

/// Solve `(v0 − v1)/(v1 − v2) = (h0^p − h1^p)/(h1^p − h2^p)` for `p`.
fn observed_order(h: &[f64], v: &[f64]) -> Option<f64> {
    let (d0, d1) = (v[0] - v[1], v[1] - v[2]);
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return None;
    }
    let target = d0 / d1;
    let f = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - target;
    let (mut lo, mut hi) = (1e-3, 20.0);
    if f(lo) * f(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Gram matrix `VᵀBV` of a set of vectors; used to check B-orthonormality.
pub fn gram(b: &SparseSymMatrix, vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let bv = DMatrix::from_columns(
        &(0..vectors.ncols())
            .map(|k| DVector::from_vec(b.mul_vec(vectors.column(k).as_slice())))
            .collect::<Vec<_>>(),
    );
    vectors.transpose() * bv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_nedelec, assemble_p1, BoundaryCondition, MaterialField};
    use crate::mesh::{build_box_mesh, build_rect_mesh};
    use std::f64::consts::PI;

    fn sym(n: usize, t: Vec<(usize, usize, f64)>) -> SparseSymMatrix {
        SparseSymMatrix::from_triplets(n, t)
    }

    #[test]
    fn identical_matrices_give_unit_spectrum() {
        let a = sym(3, vec![(0, 0, 2.0), (0, 1, 0.5), (1, 1, 3.0), (2, 2, 1.0)]);
        let r = eig_gsym_matrices(&a, &a, "t").unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diagonal_pencil() {
        let a = sym(2, vec![(0, 0, 4.0), (1, 1, 1.0)]);
        let b = sym(2, vec![(0, 0, 1.0), (1, 1, 1.0)]);
        let r = eig_gsym_matrices(&a, &b, "t").unwrap();
        assert_eq!(r.values, vec![1.0, 4.0]);
        assert_eq!(r.vector(0).unwrap().iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn cholesky_failure_reports_dof() {
        let a = sym(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let b = sym(3, vec![(0, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0), (2, 2, 1.0)]);
        let e = eig_gsym_matrices(&a, &b, "t").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Cholesky { dof: 2, .. }), "{e}");
    }

    #[test]
    fn dirichlet_square_and_orthonormality() {
        let mesh = build_rect_mesh([1.0, 1.0], 8).unwrap();
        let p = assemble_p1(&mesh, &MaterialField::identity(2, mesh.n_cells()), BoundaryCondition::Essential).unwrap();
        let r = eig_gsym(&p).unwrap();
        // P1 with consistent mass on the one-diagonal grid: 3.9% high at n = 8
        assert!((r.values[0] - 2.0 * PI * PI).abs() < 0.04 * 2.0 * PI * PI);
        assert!(r.values[0] > 2.0 * PI * PI);
        assert!(r.values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.kernel_dim, 0);
        let g = gram(&p.b, r.vectors.as_ref().unwrap());
        let off = (g - DMatrix::identity(p.dim(), p.dim())).abs().max();
        assert!(off < 1e-10, "{off}");
        let v = eigenvalues_gsym(&p).unwrap();
        assert!(v.vectors.is_none());
        assert_eq!(v.values, r.values);
    }

    #[test]
    fn literal_residual_on_low_modes() {
        let mesh = build_rect_mesh([1.0, 1.0], 4).unwrap();
        let p = assemble_p1(&mesh, &MaterialField::identity(2, mesh.n_cells()), BoundaryCondition::Essential).unwrap();
        let r = eig_gsym(&p).unwrap();
        for k in 0..3 {
            let v = r.vector(k).unwrap();
            let bv = p.b.mul_vec(&v);
            let res: Vec<f64> = p.a.mul_vec(&v).iter().zip(&bv).map(|(x, y)| x - r.values[k] * y).collect();
            assert!(norm(&res) / norm(&bv) < 1e-9);
        }
    }

    #[test]
    fn neumann_kernel_is_constants() {
        let mesh = build_rect_mesh([1.0, 1.0], 6).unwrap();
        let p = assemble_p1(&mesh, &MaterialField::identity(2, mesh.n_cells()), BoundaryCondition::Natural).unwrap();
        let s = split_kernel(&eig_gsym(&p).unwrap(), 1).unwrap();
        assert_eq!(s.kernel_dim, 1);
        assert!(!s.mismatch);
        assert!((s.smallest_nonzero - PI * PI).abs() < 0.05 * PI * PI);
    }

    #[test]
    fn cube_edge_kernel_counts_interior_vertices() {
        let mesh = build_box_mesh([1.0; 3], 2).unwrap();
        let p = assemble_nedelec(&mesh, &MaterialField::identity(3, mesh.n_cells()), BoundaryCondition::Essential).unwrap();
        let s = split_kernel(&eig_gsym(&p).unwrap(), 1).unwrap();
        assert_eq!(s.kernel_dim, 1);
    }

    #[test]
    fn missing_gap_is_an_error() {
        let a = sym(3, vec![(0, 0, 1e-11), (1, 1, 5e-10), (2, 2, 1.0)]);
        let b = sym(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let r = eig_gsym_matrices(&a, &b, "t").unwrap();
        assert_eq!(r.kernel_dim, 1);
        let e = split_kernel(&r, 1).unwrap_err();
        assert!(matches!(e.kind, ErrorKind::SpectralGap { .. }));
        let s = split_kernel(&eig_gsym_matrices(&sym(2, vec![(1, 1, 1.0)]), &sym(2, vec![(0, 0, 1.0), (1, 1, 1.0)]), "t").unwrap(), 0).unwrap();
        assert!(s.mismatch);
    }

    #[test]
    fn richardson_examples() {
        let e = richardson_extrapolate(&[0.5, 0.25], &[3.0 + 0.25 * 7.0, 3.0 + 0.0625 * 7.0]).unwrap();
        assert!((e.value - 3.0).abs() < 1e-14);
        let e = richardson_extrapolate(&[1.0 / 3.0, 0.25], &[3.0 + 7.0 / 9.0, 3.0 + 7.0 / 16.0]).unwrap();
        assert!((e.value - 3.0).abs() < 1e-13);
        let e = richardson_extrapolate(&[1.0, 0.5, 0.25], &[2.0; 3]).unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.observed_order, None);
        let e = richardson_extrapolate(&[0.4, 0.2, 0.1], &[1.0 + 0.064, 1.0 + 0.008, 1.001]).unwrap();
        assert!((e.observed_order.unwrap() - 3.0).abs() < 1e-9);
        assert!(richardson_extrapolate(&[0.5], &[1.0]).is_err());
        assert!(richardson_extrapolate(&[0.25, 0.5], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn observed_order_for_square_dirichlet() {
        let (mut hs, mut vals) = (vec![], vec![]);
        for n in [4, 8, 16] {
            let mesh = build_rect_mesh([1.0, 1.0], n).unwrap();
            let p = assemble_p1(&mesh, &MaterialField::identity(2, mesh.n_cells()), BoundaryCondition::Essential).unwrap();
            hs.push(1.0 / n as f64);
            vals.push(eigenvalues_gsym(&p).unwrap().values[0]);
        }
        let e = richardson_extrapolate(&hs, &vals).unwrap();
        let p = e.observed_order.unwrap();
        assert!((1.7..=2.3).contains(&p), "{p}");
        assert!((e.value - 2.0 * PI * PI).abs() < (vals[2] - 2.0 * PI * PI).abs());
    }

    #[test]
    fn kernel_tolerance_floor() {
        assert_eq!(kernel_tolerance(&[0.0, 0.0, 1e-6]), 1e-10);
        assert_eq!(kernel_tolerance(&[0.0, 1e4, 2e4]), 1e-4);
    }
}
