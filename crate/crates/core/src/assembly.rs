//! Discrete bilinear forms on simplicial meshes.
//!
//! Scalar fields use P1 hat functions, vector fields with tangential
//! continuity use lowest-order edge elements (Whitney 1-forms
//! `w_ab = λ_a ∇λ_b - λ_b ∇λ_a`, one dof per oriented edge). The material
//! field ε is constant per cell, so every element integral below is exact on
//! affine simplices.

use std::path::Path;

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind, Result};
use crate::mesh::Mesh;
pub use crate::sparse::{CsrMatrix, SparseSymMatrix};

const MODULE: &str = "assembly";

type Mat3 = [[f64; 3]; 3];

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

/// Cellwise-constant symmetric positive definite material matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialField {
    dim: usize,
    cells: Vec<Mat3>,
}

impl MaterialField {
    pub fn identity(dim: usize, n_cells: usize) -> Self {
        Self::scalar(dim, n_cells, 1.0).expect("identity is SPD")
    }

    pub fn scalar(dim: usize, n_cells: usize, s: f64) -> Result<Self> {
        Self::diagonal(n_cells, &vec![s; dim])
    }

    pub fn diagonal(n_cells: usize, entries: &[f64]) -> Result<Self> {
        let mut m = [[0.0; 3]; 3];
        for (i, e) in entries.iter().enumerate().take(3) {
            m[i][i] = *e;
        }
        Self::per_cell(entries.len(), vec![m; n_cells])
    }

    /// Same full `dim x dim` matrix (row-major rows) on every cell.
    pub fn constant(n_cells: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in rows.iter().enumerate().take(3) {
            if row.len() != dim {
                return Err(Error::new(
                    MODULE,
                    "material_field",
                    ErrorKind::DimensionMismatch {
                        expected: dim,
                        found: row.len(),
                    },
                ));
            }
            m[i][..dim].copy_from_slice(row);
        }
        Self::per_cell(dim, vec![m; n_cells])
    }

    /// Sample a closed-form field at cell centroids.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&[f64; 3]) -> Mat3) -> Result<Self> {
        let cells = (0..mesh.n_cells()).map(|c| f(&mesh.centroid(c))).collect();
        Self::per_cell(mesh.dim(), cells)
    }

    /// Per-cell table; only the leading `dim x dim` block of each entry is
    /// used. Matrices must be symmetric to 1e-14 (relative) and positive
    /// definite; they are stored exactly symmetrized.
    pub fn per_cell(dim: usize, mut cells: Vec<Mat3>) -> Result<Self> {
        const OP: &str = "material_field";
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(MODULE, OP, format!("dimension must be 2 or 3, got {dim}")));
        }
        for (c, m) in cells.iter_mut().enumerate() {
            let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..3 {
                for j in 0..3 {
                    if i >= dim || j >= dim {
                        m[i][j] = 0.0;
                    }
                }
            }
            for i in 0..dim {
                for j in i + 1..dim {
                    if (m[i][j] - m[j][i]).abs() > 1e-14 * scale || !m[i][j].is_finite() {
                        return Err(Error::new(MODULE, OP, ErrorKind::NotSpd { cell: c }));
                    }
                    let s = 0.5 * (m[i][j] + m[j][i]);
                    m[i][j] = s;
                    m[j][i] = s;
                }
            }
            let (lo, _) = sym_eig_range(dim, m);
            if !(lo > 0.0) {
                return Err(Error::new(MODULE, OP, ErrorKind::NotSpd { cell: c }));
            }
        }
        Ok(Self { dim, cells })
    }

    /// Parse the ASCII per-cell format: one line per cell holding the
    /// `d(d+1)/2` upper-triangle entries row by row (`a11 a12 a22` in 2D).
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let per_line = dim * (dim + 1) / 2;
        let mut cells = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let vals: Vec<f64> = body
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::new(MODULE, "material_field", ErrorKind::Parse { line: i + 1, msg: e.to_string() })
                })?;
            if vals.len() != per_line {
                return Err(Error::new(
                    MODULE,
                    "material_field",
                    ErrorKind::Parse {
                        line: i + 1,
                        msg: format!("expected {per_line} entries, found {}", vals.len()),
                    },
                ));
            }
            let mut m = [[0.0; 3]; 3];
            let mut k = 0;
            for r in 0..dim {
                for c in r..dim {
                    m[r][c] = vals[k];
                    m[c][r] = vals[k];
                    k += 1;
                }
            }
            cells.push(m);
        }
        Self::per_cell(dim, cells)
    }

    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::new(MODULE, "material_field", e))?;
        Self::parse(&text, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn matrix(&self, c: usize) -> &Mat3 {
        &self.cells[c]
    }

    pub fn apply(&self, c: usize, v: &[f64; 3]) -> [f64; 3] {
        mat_vec(&self.cells[c], v)
    }

    pub fn is_identity(&self) -> bool {
        self.cells.iter().all(|m| {
            (0..self.dim).all(|i| (0..self.dim).all(|j| m[i][j] == if i == j { 1.0 } else { 0.0 }))
        })
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        let cells = self.cells.iter().map(|m| m.map(|row| row.map(|v| v * s))).collect();
        Self::per_cell(self.dim, cells)
    }

    fn check_mesh(&self, mesh: &Mesh, op: &'static str) -> Result<()> {
        if self.dim != mesh.dim() {
            return Err(Error::new(
                MODULE,
                op,
                ErrorKind::DimensionMismatch {
                    expected: mesh.dim(),
                    found: self.dim,
                },
            ));
        }
        if self.cells.len() != mesh.n_cells() {
            return Err(Error::new(
                MODULE,
                op,
                ErrorKind::DimensionMismatch {
                    expected: mesh.n_cells(),
                    found: self.cells.len(),
                },
            ));
        }
        Ok(())
    }
}

/// Material specification as it appears in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpsilonSpec {
    Identity,
    Scalar { value: f64 },
    Diag { entries: Vec<f64> },
    Matrix { entries: Vec<Vec<f64>> },
    /// Per-cell table for the coarsest mesh of a study; cells created by
    /// uniform refinement inherit the matrix of their parent.
    File { path: String },
}

impl EpsilonSpec {
    /// Dimension implied by the spec, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            EpsilonSpec::Diag { entries } => Some(entries.len()),
            EpsilonSpec::Matrix { entries } => Some(entries.len()),
            _ => None,
        }
    }

    pub fn field(&self, mesh: &Mesh) -> Result<MaterialField> {
        let (d, nc) = (mesh.dim(), mesh.n_cells());
        if let Some(k) = self.dim() {
            if k != d {
                return Err(Error::new(MODULE, "epsilon_spec", ErrorKind::DimensionMismatch { expected: d, found: k }));
            }
        }
        match self {
            EpsilonSpec::Identity => Ok(MaterialField::identity(d, nc)),
            EpsilonSpec::Scalar { value } => MaterialField::scalar(d, nc, *value),
            EpsilonSpec::Diag { entries } => MaterialField::diagonal(nc, entries),
            EpsilonSpec::Matrix { entries } => MaterialField::constant(nc, entries),
            EpsilonSpec::File { path } => {
                let coarse = MaterialField::load(path, d)?;
                let children = 1usize << d;
                let mut ratio = 1;
                while coarse.n_cells() * ratio < nc {
                    ratio *= children;
                }
                if coarse.n_cells() * ratio != nc {
                    return Err(Error::new(
                        MODULE,
                        "epsilon_spec",
                        ErrorKind::DimensionMismatch { expected: nc, found: coarse.n_cells() },
                    ));
                }
                let cells = (0..nc).map(|c| coarse.cells[c / ratio]).collect();
                MaterialField::per_cell(d, cells)
            }
        }
    }
}

/// Smallest and largest eigenvalue of the leading `dim x dim` block.
fn sym_eig_range(dim: usize, m: &Mat3) -> (f64, f64) {
    let ev: Vec<f64> = if dim == 2 {
        Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).symmetric_eigenvalues().iter().copied().collect()
    } else {
        Matrix3::from_fn(|i, j| m[i][j]).symmetric_eigenvalues().iter().copied().collect()
    };
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Uniform bounds of ε in the normalization `ε_lower⁻² ≤ spec(ε) ≤ ε_upper²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsBounds {
    pub eps_lower: f64,
    pub eps_upper: f64,
    pub eps_hat: f64,
}

pub fn eps_bounds(eps: &MaterialField) -> EpsBounds {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in &eps.cells {
        let (a, b) = sym_eig_range(eps.dim, m);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let eps_lower = 1.0 / lo.sqrt();
    let eps_upper = hi.sqrt();
    EpsBounds {
        eps_lower,
        eps_upper,
        eps_hat: eps_lower.max(eps_upper),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// No constraint: H¹, H(curl).
    Natural,
    /// Vanishing trace (scalar) or tangential trace (edge): H¹∘, H(curl)∘.
    Essential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    ScalarP1,
    Edge,
    VectorP1,
}

/// Boundary trace of a vector field: vanishing tangential component
/// (`H(curl)∘`, essential edge dofs) or vanishing normal component of `εE`
/// (natural edge space).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceCondition {
    Tangential,
    Normal,
}

impl TraceCondition {
    pub fn edge_bc(self) -> BoundaryCondition {
        match self {
            TraceCondition::Tangential => BoundaryCondition::Essential,
            TraceCondition::Normal => BoundaryCondition::Natural,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TraceCondition::Tangential => "tangential",
            TraceCondition::Normal => "normal",
        }
    }
}

/// Free degrees of freedom of a discrete space after boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub space: SpaceKind,
    pub bc: BoundaryCondition,
    free: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(space: SpaceKind, bc: BoundaryCondition, total: usize, constrained: impl Fn(usize) -> bool) -> Self {
        let mut local = vec![None; total];
        let mut free = Vec::new();
        for g in 0..total {
            if bc == BoundaryCondition::Natural || !constrained(g) {
                local[g] = Some(free.len());
                free.push(g);
            }
        }
        Self { space, bc, free, local }
    }

    pub fn scalar(mesh: &Mesh, bc: BoundaryCondition) -> Self {
        Self::new(SpaceKind::ScalarP1, bc, mesh.n_vertices(), |v| mesh.is_boundary_vertex(v))
    }

    pub fn edge(mesh: &Mesh, bc: BoundaryCondition) -> Self {
        Self::new(SpaceKind::Edge, bc, mesh.n_edges(), |e| mesh.is_boundary_edge(e))
    }

    pub fn vector(mesh: &Mesh, bc: BoundaryCondition) -> Self {
        let d = mesh.dim();
        Self::new(SpaceKind::VectorP1, bc, d * mesh.n_vertices(), |g| mesh.is_boundary_vertex(g / d))
    }

    /// Global indices of free dofs, strictly increasing.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn total(&self) -> usize {
        self.local.len()
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        self.local[global]
    }

    /// Embed free-dof values into the full numbering (constrained dofs = 0).
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.total()];
        for (k, &g) in self.free.iter().enumerate() {
            out[g] = x[k];
        }
        out
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| x[g]).collect()
    }
}

/// Generalized eigenproblem `A v = λ B v` on the free dofs of `dofs`.
#[derive(Clone, Debug)]
pub struct Pencil {
    pub a: SparseSymMatrix,
    pub b: SparseSymMatrix,
    pub dofs: DofMap,
    pub label: String,
}

impl Pencil {
    fn from_full(a: Vec<(usize, usize, f64)>, b: Vec<(usize, usize, f64)>, dofs: DofMap, label: String) -> Self {
        let n = dofs.total();
        let a = SparseSymMatrix::from_triplets(n, a).restrict(dofs.free());
        let b = SparseSymMatrix::from_triplets(n, b).restrict(dofs.free());
        Self { a, b, dofs, label }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Volume and barycentric gradients of one cell.
#[derive(Clone, Copy, Debug)]
pub struct SimplexGeometry {
    pub volume: f64,
    pub grads: [[f64; 3]; 4],
}

pub fn simplex_geometry(mesh: &Mesh, c: usize) -> SimplexGeometry {
    let p = mesh.cell_points(c);
    let mut grads = [[0.0; 3]; 4];
    let volume;
    if mesh.dim() == 2 {
        let j = Matrix2::new(p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
        volume = 0.5 * j.determinant();
        let inv = j.try_inverse().expect("validated mesh has no degenerate cells");
        for k in 1..3 {
            grads[k] = [inv[(k - 1, 0)], inv[(k - 1, 1)], 0.0];
        }
    } else {
        let j = Matrix3::from_fn(|r, k| p[k + 1][r] - p[0][r]);
        volume = j.determinant() / 6.0;
        let inv = j.try_inverse().expect("validated mesh has no degenerate cells");
        for k in 1..4 {
            grads[k] = [inv[(k - 1, 0)], inv[(k - 1, 1)], inv[(k - 1, 2)]];
        }
    }
    for r in 0..3 {
        grads[0][r] = -(1..=mesh.dim()).map(|k| grads[k][r]).sum::<f64>();
    }
    SimplexGeometry { volume, grads }
}

/// `∫ λ_a λ_b` over a simplex of dimension `dim`.
fn bary_mass(volume: f64, dim: usize, a: usize, b: usize) -> f64 {
    let d = dim as f64;
    volume * if a == b { 2.0 } else { 1.0 } / ((d + 1.0) * (d + 2.0))
}

fn label(prefix: &str, bc: BoundaryCondition) -> String {
    let suffix = match bc {
        BoundaryCondition::Natural => "natural",
        BoundaryCondition::Essential => "essential",
    };
    format!("{prefix}-{suffix}")
}

/// Weighted P1 Laplacian: `A = ∫ ε∇u·∇v`, `B = ∫ u v`.
pub fn assemble_p1(mesh: &Mesh, eps: &MaterialField, bc: BoundaryCondition) -> Result<Pencil> {
    eps.check_mesh(mesh, "assemble_p1")?;
    let d = mesh.dim();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in 0..mesh.n_cells() {
        let g = simplex_geometry(mesh, c);
        let cell = mesh.cell(c);
        for i in 0..=d {
            let eg = eps.apply(c, &g.grads[i]);
            for j in i..=d {
                a.push((cell[i], cell[j], g.volume * dot3(&eg, &g.grads[j])));
                b.push((cell[i], cell[j], bary_mass(g.volume, d, i, j)));
            }
        }
    }
    Ok(Pencil::from_full(a, b, DofMap::scalar(mesh, bc), label("p1", bc)))
}

/// Local Whitney basis data of one cell: curls and the mass matrix of the
/// globally oriented basis functions.
fn whitney_element(
    mesh: &Mesh,
    c: usize,
    g: &SimplexGeometry,
    metric: impl Fn(&[f64; 3], &[f64; 3]) -> f64,
) -> (Vec<[f64; 3]>, Vec<Vec<f64>>) {
    let d = mesh.dim();
    let local = mesh.local_edges();
    let signs: Vec<f64> = mesh.cell_edges(c).iter().map(|&(_, s)| s).collect();
    let curls: Vec<[f64; 3]> = local
        .iter()
        .zip(&signs)
        .map(|([i, j], s)| {
            let k = cross(&g.grads[*i], &g.grads[*j]);
            [2.0 * s * k[0], 2.0 * s * k[1], 2.0 * s * k[2]]
        })
        .collect();
    let m = |a: usize, b: usize| bary_mass(g.volume, d, a, b);
    let mut mass = vec![vec![0.0; local.len()]; local.len()];
    for (p, [i, j]) in local.iter().enumerate() {
        for (q, [k, l]) in local.iter().enumerate().skip(p) {
            let (gi, gj, gk, gl) = (&g.grads[*i], &g.grads[*j], &g.grads[*k], &g.grads[*l]);
            let v = m(*i, *k) * metric(gj, gl) - m(*i, *l) * metric(gj, gk) - m(*j, *k) * metric(gi, gl)
                + m(*j, *l) * metric(gi, gk);
            mass[p][q] = signs[p] * signs[q] * v;
        }
    }
    (curls, mass)
}

/// Edge-element pencil: `A = ∫ rot u · rot v` (scalar rot in 2D, which is
/// the third component of the 3D formula), `B = ∫ ε u · v`. Essential bc
/// removes boundary edges (vanishing tangential trace).
pub fn assemble_nedelec(mesh: &Mesh, eps: &MaterialField, bc: BoundaryCondition) -> Result<Pencil> {
    eps.check_mesh(mesh, "assemble_nedelec")?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in 0..mesh.n_cells() {
        let g = simplex_geometry(mesh, c);
        let (curls, mass) = whitney_element(mesh, c, &g, |x, y| dot3(&eps.apply(c, x), y));
        let ids = mesh.cell_edges(c);
        for p in 0..ids.len() {
            for q in p..ids.len() {
                a.push((ids[p].0, ids[q].0, g.volume * dot3(&curls[p], &curls[q])));
                b.push((ids[p].0, ids[q].0, mass[p][q]));
            }
        }
    }
    Ok(Pencil::from_full(a, b, DofMap::edge(mesh, bc), label("edge", bc)))
}

/// Vector-P1 forms on `H¹∘`: the `∫ ∇E:∇E` pencil and the
/// `∫ |rot E|² + |div E|²` pencil, sharing the same mass. Dofs are numbered
/// `dim * vertex + component`.
pub fn assemble_vector_p1_forms(mesh: &Mesh, bc: BoundaryCondition) -> Result<(Pencil, Pencil)> {
    const OP: &str = "assemble_vector_p1_forms";
    if bc != BoundaryCondition::Essential {
        return Err(Error::invalid(
            MODULE,
            OP,
            "the gradient and rot/div forms only coincide for vanishing boundary values",
        ));
    }
    let d = mesh.dim();
    let (mut grad, mut rotdiv, mut mass) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..mesh.n_cells() {
        let g = simplex_geometry(mesh, c);
        let cell = mesh.cell(c);
        // rot and div of the basis field λ_i e_comp
        let basis: Vec<(usize, usize, [f64; 3], f64)> = (0..=d)
            .flat_map(|i| (0..d).map(move |comp| (i, comp)))
            .map(|(i, comp)| {
                let mut e = [0.0; 3];
                e[comp] = 1.0;
                let r = cross(&g.grads[i], &e);
                (i, comp, r, g.grads[i][comp])
            })
            .collect();
        for (p, (i, ci, ri, di)) in basis.iter().enumerate() {
            for (j, cj, rj, dj) in &basis[p..] {
                let (gi, gj) = (d * cell[*i] + ci, d * cell[*j] + cj);
                let gg = if ci == cj { g.volume * dot3(&g.grads[*i], &g.grads[*j]) } else { 0.0 };
                grad.push((gi, gj, gg));
                rotdiv.push((gi, gj, g.volume * (dot3(ri, rj) + di * dj)));
                if ci == cj {
                    mass.push((gi, gj, bary_mass(g.volume, d, *i, *j)));
                }
            }
        }
    }
    let dofs = DofMap::vector(mesh, bc);
    Ok((
        Pencil::from_full(grad, mass.clone(), dofs.clone(), "vector-p1-grad".into()),
        Pencil::from_full(rotdiv, mass, dofs, "vector-p1-rotdiv".into()),
    ))
}

/// Discrete gradient: edge dofs of ∇φ for P1 φ, `G[e, v] = ±1` by edge
/// orientation, restricted to free edges and free vertices of the bc.
#[derive(Clone, Debug)]
pub struct DiscreteGradient {
    pub matrix: CsrMatrix,
    pub edge_dofs: DofMap,
    pub vertex_dofs: DofMap,
}

impl DiscreteGradient {
    /// Rank from the combinatorics of a connected mesh: all vertices minus
    /// constants (natural), or all interior vertices (essential).
    pub fn rank(&self) -> usize {
        match self.vertex_dofs.bc {
            BoundaryCondition::Natural => self.vertex_dofs.n_free() - 1,
            BoundaryCondition::Essential => self.vertex_dofs.n_free(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }
}

pub fn discrete_gradient(mesh: &Mesh, bc: BoundaryCondition) -> DiscreteGradient {
    let edge_dofs = DofMap::edge(mesh, bc);
    let vertex_dofs = DofMap::scalar(mesh, bc);
    let rows = edge_dofs
        .free()
        .iter()
        .map(|&e| {
            let [lo, hi] = mesh.edges()[e];
            let mut row = Vec::with_capacity(2);
            if let Some(k) = vertex_dofs.local(lo) {
                row.push((k, -1.0));
            }
            if let Some(k) = vertex_dofs.local(hi) {
                row.push((k, 1.0));
            }
            row
        })
        .collect();
    DiscreteGradient {
        matrix: CsrMatrix::from_rows(vertex_dofs.n_free(), rows),
        edge_dofs,
        vertex_dofs,
    }
}

/// Piecewise vector data, one value per cell (e.g. a field sampled at
/// centroids). 2D data keeps the third component at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    pub dim: usize,
    pub values: Vec<[f64; 3]>,
}

/// Evaluate an edge-element field (full edge numbering) at cell centroids.
pub fn sample_edge_field(mesh: &Mesh, dofs: &[f64]) -> CellField {
    let w = 1.0 / (mesh.dim() + 1) as f64;
    let values = (0..mesh.n_cells())
        .map(|c| {
            let g = simplex_geometry(mesh, c);
            let mut v = [0.0; 3];
            for ([i, j], &(e, s)) in mesh.local_edges().iter().zip(mesh.cell_edges(c)) {
                for k in 0..3 {
                    v[k] += dofs[e] * s * w * (g.grads[*j][k] - g.grads[*i][k]);
                }
            }
            v
        })
        .collect();
    CellField { dim: mesh.dim(), values }
}

fn rot90(v: &[f64; 3]) -> [f64; 3] {
    [v[1], -v[0], 0.0]
}

/// Apply the 90° rotation `R = [[0, 1], [-1, 0]]` pointwise.
pub fn rotate_2d(field: &CellField) -> Result<CellField> {
    if field.dim != 2 {
        return Err(Error::new(
            MODULE,
            "rotate_2d",
            ErrorKind::DimensionMismatch {
                expected: 2,
                found: field.dim,
            },
        ));
    }
    Ok(CellField {
        dim: 2,
        values: field.values.iter().map(rot90).collect(),
    })
}

/// `ε_R = -R ε R` per cell (2D only).
pub fn eps_r(eps: &MaterialField) -> Result<MaterialField> {
    if eps.dim != 2 {
        return Err(Error::new(
            MODULE,
            "eps_r",
            ErrorKind::DimensionMismatch {
                expected: 2,
                found: eps.dim,
            },
        ));
    }
    let cells = eps
        .cells
        .iter()
        .map(|m| {
            let mut r = [[0.0; 3]; 3];
            r[0][0] = m[1][1];
            r[0][1] = -m[0][1];
            r[1][0] = -m[1][0];
            r[1][1] = m[0][0];
            r
        })
        .collect();
    MaterialField::per_cell(2, cells)
}

/// The rotated 2D pencil on the same edge dofs: basis functions `R w_e`,
/// `A = ∫ div(R u) div(R v)`, `B = ∫ ε_R (R u)·(R v)`. Since
/// `rot u = div R u` and `(ε_R R u)·(R v) = (ε u)·v`, it coincides with
/// [`assemble_nedelec`] entrywise.
pub fn assemble_rotated_pencil_2d(mesh: &Mesh, eps: &MaterialField, bc: BoundaryCondition) -> Result<Pencil> {
    const OP: &str = "assemble_rotated_pencil_2d";
    eps.check_mesh(mesh, OP)?;
    let epsr = eps_r(eps)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in 0..mesh.n_cells() {
        let mut g = simplex_geometry(mesh, c);
        let rgrads = g.grads.map(|v| rot90(&v));
        // div(λ_i R∇λ_j - λ_j R∇λ_i) = 2 ∇λ_i · R∇λ_j
        let ids = mesh.cell_edges(c);
        let divs: Vec<f64> = mesh
            .local_edges()
            .iter()
            .zip(ids)
            .map(|([i, j], &(_, s))| 2.0 * s * dot3(&g.grads[*i], &rgrads[*j]))
            .collect();
        g.grads = rgrads;
        let (_, mass) = whitney_element(mesh, c, &g, |x, y| dot3(&epsr.apply(c, x), y));
        for p in 0..ids.len() {
            for q in p..ids.len() {
                a.push((ids[p].0, ids[q].0, g.volume * divs[p] * divs[q]));
                b.push((ids[p].0, ids[q].0, mass[p][q]));
            }
        }
    }
    Ok(Pencil::from_full(a, b, DofMap::edge(mesh, bc), label("flux", bc)))
}

/// Evaluate the rotated (flux-type) field `Σ x_e R w_e` at cell centroids.
pub fn sample_flux_field_2d(mesh: &Mesh, dofs: &[f64]) -> Result<CellField> {
    if mesh.dim() != 2 {
        return Err(Error::new(
            MODULE,
            "sample_flux_field_2d",
            ErrorKind::DimensionMismatch {
                expected: 2,
                found: mesh.dim(),
            },
        ));
    }
    let values = (0..mesh.n_cells())
        .map(|c| {
            let g = simplex_geometry(mesh, c);
            let mut v = [0.0; 3];
            for ([i, j], &(e, s)) in mesh.local_edges().iter().zip(mesh.cell_edges(c)) {
                let (ri, rj) = (rot90(&g.grads[*i]), rot90(&g.grads[*j]));
                for k in 0..2 {
                    v[k] += dofs[e] * s * (rj[k] - ri[k]) / 3.0;
                }
            }
            v
        })
        .collect();
    Ok(CellField { dim: 2, values })
}
