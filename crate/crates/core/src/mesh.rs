//! Simplicial meshes (triangles in 2D, tetrahedra in 3D) of the test domains.
//!
//! Every [`Mesh`] is validated on construction: cells are reoriented to
//! positive signed volume, edges are numbered in lexicographic order and
//! oriented from the lower to the higher vertex index, boundary entities are
//! those lying on a facet owned by exactly one cell, and the cell adjacency
//! graph must be connected. Meshes are immutable afterwards.
//!
//! Uniform refinement bisects every edge. Triangles split into four similar
//! children. Tetrahedra split into four corner children plus an inner
//! octahedron, which is cut along its shortest diagonal (ties broken in the
//! order `m01-m23`, `m02-m13`, `m03-m12`, where `mij` is the midpoint of local
//! edge `ij`). The rule depends only on geometry and local ordering, so
//! refinement is reproducible bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind, Result};

const MODULE: &str = "mesh";

/// Local edges of a triangle, as pairs of local vertex indices.
pub const TRI_EDGES: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];
/// Local edges of a tetrahedron.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Generated,
    Imported,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<usize>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<(usize, f64)>,
    boundary_facets: Vec<usize>,
    n_facets: usize,
    boundary_vertices: Vec<usize>,
    boundary_edges: Vec<usize>,
    is_boundary_vertex: Vec<bool>,
    is_boundary_edge: Vec<bool>,
    provenance: Provenance,
}

/// Test-domain catalogue entry. Subdivision counts are supplied separately
/// (see [`DomainSpec::mesh`]), so one spec describes a whole refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    #[serde(rename = "box3d")]
    Box3d { dims: [f64; 3] },
    #[serde(rename = "rect2d")]
    Rect2d { dims: [f64; 2] },
    #[serde(rename = "square_with_hole2d")]
    SquareWithHole2d { outer: f64, inner: f64 },
    /// An ASCII mesh file; level `n` means `n` uniform refinements of it.
    Imported {
        path: String,
        #[serde(default)]
        convex: bool,
    },
}

impl DomainSpec {
    pub fn unit_cube() -> Self {
        DomainSpec::Box3d {
            dims: [1.0, 1.0, 1.0],
        }
    }

    pub fn unit_square() -> Self {
        DomainSpec::Rect2d { dims: [1.0, 1.0] }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            DomainSpec::Box3d { .. } => Some(3),
            DomainSpec::Rect2d { .. } | DomainSpec::SquareWithHole2d { .. } => Some(2),
            DomainSpec::Imported { .. } => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            DomainSpec::Box3d { .. } | DomainSpec::Rect2d { .. } => true,
            DomainSpec::SquareWithHole2d { .. } => false,
            DomainSpec::Imported { convex, .. } => *convex,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::new(MODULE, "domain_spec", ErrorKind::Config(msg)));
        match self {
            DomainSpec::Box3d { dims } if dims.iter().any(|d| !(*d > 0.0)) => {
                bad(format!("box dimensions must be positive, got {dims:?}"))
            }
            DomainSpec::Rect2d { dims } if dims.iter().any(|d| !(*d > 0.0)) => {
                bad(format!("rectangle dimensions must be positive, got {dims:?}"))
            }
            DomainSpec::SquareWithHole2d { outer, inner } if !(*inner > 0.0 && inner < outer) => {
                bad(format!("need 0 < inner < outer, got inner={inner}, outer={outer}"))
            }
            _ => Ok(()),
        }
    }

    /// Mesh at refinement level `n`: `n` subdivisions per axis for generated
    /// domains, `n` uniform refinements for imported ones.
    pub fn mesh(&self, n: usize) -> Result<Mesh> {
        match self {
            DomainSpec::Box3d { dims } => build_box_mesh(*dims, n),
            DomainSpec::Rect2d { dims } => build_rect_mesh(*dims, n),
            DomainSpec::SquareWithHole2d { outer, inner } => {
                build_square_with_hole(*outer, *inner, n)
            }
            DomainSpec::Imported { path, .. } => {
                let mut mesh = import_mesh(path)?;
                for _ in 0..n {
                    mesh = refine_uniform(&mesh)?;
                }
                Ok(mesh)
            }
        }
    }

    /// Nominal mesh size at level `n`, used for extrapolation.
    pub fn mesh_size(&self, n: usize, mesh: &Mesh) -> f64 {
        match self {
            DomainSpec::Box3d { dims } => dims.iter().cloned().fold(0.0, f64::max) / n as f64,
            DomainSpec::Rect2d { dims } => dims.iter().cloned().fold(0.0, f64::max) / n as f64,
            DomainSpec::SquareWithHole2d { outer, .. } => outer / n as f64,
            DomainSpec::Imported { .. } => mesh.max_edge_length(),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn signed_volume(dim: usize, p: &[[f64; 3]]) -> f64 {
    if dim == 2 {
        let (a, b) = (sub(&p[1], &p[0]), sub(&p[2], &p[0]));
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        let (a, b, c) = (sub(&p[1], &p[0]), sub(&p[2], &p[0]), sub(&p[3], &p[0]));
        (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))
            / 6.0
    }
}

impl Mesh {
    /// Validate raw connectivity and build all derived combinatorics.
    /// `cells` is flat with `dim + 1` vertex indices per cell.
    pub fn from_cells(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        mut cells: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Mesh> {
        const OP: &str = "from_cells";
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(MODULE, OP, format!("dimension must be 2 or 3, got {dim}")));
        }
        let nv = dim + 1;
        if cells.is_empty() || cells.len() % nv != 0 {
            return Err(Error::invalid(MODULE, OP, "cell list is empty or ragged"));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::invalid(MODULE, OP, format!("vertex index {bad} out of range")));
        }
        let n_cells = cells.len() / nv;

        let mut used = vec![false; vertices.len()];
        for c in 0..n_cells {
            let cell = &mut cells[c * nv..(c + 1) * nv];
            let pts: Vec<[f64; 3]> = cell.iter().map(|&v| vertices[v]).collect();
            let mut h: f64 = 0.0;
            for i in 0..nv {
                for j in i + 1..nv {
                    h = h.max(dist(&pts[i], &pts[j]));
                }
            }
            let vol = signed_volume(dim, &pts);
            if !(vol.abs() > 1e-12 * h.powi(dim as i32)) {
                return Err(Error::new(MODULE, OP, ErrorKind::DegenerateCell { cell: c }));
            }
            if vol < 0.0 {
                cell.swap(nv - 2, nv - 1);
            }
            for &v in cell.iter() {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::invalid(MODULE, OP, format!("vertex {v} belongs to no cell")));
        }

        let local_edges: &[[usize; 2]] = if dim == 2 { &TRI_EDGES } else { &TET_EDGES };
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(n_cells * local_edges.len());
        for c in 0..n_cells {
            let cell = &cells[c * nv..(c + 1) * nv];
            for [a, b] in local_edges {
                let (u, w) = (cell[*a], cell[*b]);
                edges.push([u.min(w), u.max(w)]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let edge_index = |u: usize, w: usize| -> usize {
            edges
                .binary_search(&[u.min(w), u.max(w)])
                .expect("edge present by construction")
        };
        let mut cell_edges = Vec::with_capacity(n_cells * local_edges.len());
        for c in 0..n_cells {
            let cell = &cells[c * nv..(c + 1) * nv];
            for [a, b] in local_edges {
                let (u, w) = (cell[*a], cell[*b]);
                cell_edges.push((edge_index(u, w), if u < w { 1.0 } else { -1.0 }));
            }
        }

        // facet key (sorted, padded) -> owning cells
        let mut facets: HashMap<[usize; 3], (usize, usize, usize)> = HashMap::new();
        for c in 0..n_cells {
            let cell = &cells[c * nv..(c + 1) * nv];
            for skip in 0..nv {
                let mut key = [usize::MAX; 3];
                let mut k = 0;
                for (i, &v) in cell.iter().enumerate() {
                    if i != skip {
                        key[k] = v;
                        k += 1;
                    }
                }
                key[..dim].sort_unstable();
                let e = facets.entry(key).or_insert((0, c, usize::MAX));
                e.0 += 1;
                if e.0 == 2 {
                    e.2 = c;
                }
            }
        }
        let mut uf = UnionFind::new(n_cells);
        let mut boundary_keys = Vec::new();
        for (key, &(count, c0, c1)) in &facets {
            match count {
                1 => boundary_keys.push(*key),
                2 => uf.union(c0, c1),
                _ => return Err(Error::new(MODULE, OP, ErrorKind::NonManifold { count })),
            }
        }
        let components = (0..n_cells).filter(|&c| uf.find(c) == c).count();
        if components != 1 {
            return Err(Error::new(MODULE, OP, ErrorKind::DisconnectedMesh { components }));
        }
        boundary_keys.sort_unstable();

        let mut is_boundary_vertex = vec![false; vertices.len()];
        let mut is_boundary_edge = vec![false; edges.len()];
        let mut boundary_facets = Vec::with_capacity(boundary_keys.len() * dim);
        for key in &boundary_keys {
            let f = &key[..dim];
            boundary_facets.extend_from_slice(f);
            for &v in f {
                is_boundary_vertex[v] = true;
            }
            for i in 0..dim {
                for j in i + 1..dim {
                    is_boundary_edge[edge_index(f[i], f[j])] = true;
                }
            }
        }
        let boundary_vertices = (0..vertices.len()).filter(|&v| is_boundary_vertex[v]).collect();
        let boundary_edges = (0..edges.len()).filter(|&e| is_boundary_edge[e]).collect();

        Ok(Mesh {
            dim,
            vertices,
            cells,
            edges,
            cell_edges,
            boundary_facets,
            n_facets: facets.len(),
            boundary_vertices,
            boundary_edges,
            is_boundary_vertex,
            is_boundary_edge,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of (d-1)-dimensional facets, interior and boundary.
    pub fn n_facets(&self) -> usize {
        self.n_facets
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &[f64; 3] {
        &self.vertices[v]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn local_edges(&self) -> &'static [[usize; 2]] {
        if self.dim == 2 {
            &TRI_EDGES
        } else {
            &TET_EDGES
        }
    }

    /// Signed incidence of cell `c`: `(global edge, sign)` per local edge, in
    /// the order of [`Mesh::local_edges`]. The sign is +1 iff the local edge
    /// runs from the lower to the higher global vertex index.
    pub fn cell_edges(&self, c: usize) -> &[(usize, f64)] {
        let ne = self.local_edges().len();
        &self.cell_edges[c * ne..(c + 1) * ne]
    }

    pub fn edge_index(&self, u: usize, w: usize) -> Option<usize> {
        self.edges.binary_search(&[u.min(w), u.max(w)]).ok()
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.is_boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.is_boundary_edge[e]
    }

    /// Boundary facets, each as `dim` sorted vertex indices.
    pub fn boundary_facets(&self) -> impl Iterator<Item = &[usize]> {
        self.boundary_facets.chunks_exact(self.dim)
    }

    pub fn cell_points(&self, c: usize) -> Vec<[f64; 3]> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.cell_points(c))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn centroid(&self, c: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let cell = self.cell(c);
        for &v in cell {
            for k in 0..3 {
                x[k] += self.vertices[v][k];
            }
        }
        x.map(|s| s / cell.len() as f64)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|[a, b]| dist(&self.vertices[*a], &self.vertices[*b]))
            .fold(0.0, f64::max)
    }

    /// Euler characteristic `V - E + F` (2D) or `V - E + F - C` (3D).
    pub fn euler_characteristic(&self) -> i64 {
        let (v, e, c) = (self.n_vertices() as i64, self.n_edges() as i64, self.n_cells() as i64);
        if self.dim == 2 {
            v - e + c
        } else {
            v - e + self.n_facets as i64 - c
        }
    }

    /// Connected components of the boundary, as sorted vertex sets.
    pub fn boundary_components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n_vertices());
        for f in self.boundary_facets() {
            for w in &f[1..] {
                uf.union(f[0], *w);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot: HashMap<usize, usize> = HashMap::new();
        for &v in &self.boundary_vertices {
            let r = uf.find(v);
            let slot = *root_slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(v);
        }
        groups
    }

    /// Harmonic-field dimensions `(d_D, d_N)` predicted from topology: `d_D`
    /// is the number of boundary components minus one, `d_N` the first Betti
    /// number (from the Euler characteristic).
    pub fn topological_harmonic_dims(&self) -> (usize, usize) {
        let comps = self.boundary_components().len() as i64;
        let chi = self.euler_characteristic();
        let d_d = (comps - 1).max(0);
        let b1 = if self.dim == 2 { 1 - chi } else { 1 - chi + d_d };
        (d_d as usize, b1.max(0) as usize)
    }
}

fn check_subdivisions(op: &'static str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid(MODULE, op, "subdivision count must be at least 1"));
    }
    Ok(())
}

fn check_lengths(op: &'static str, dims: &[f64]) -> Result<()> {
    if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::invalid(MODULE, op, format!("lengths must be positive, got {dims:?}")));
    }
    Ok(())
}

/// Kuhn triangulation of the box `[0,a]x[0,b]x[0,c]`: each of the `n^3`
/// hexahedra is split into six tetrahedra sharing its main diagonal.
pub fn build_box_mesh(dims: [f64; 3], n: usize) -> Result<Mesh> {
    const OP: &str = "build_box_mesh";
    check_subdivisions(OP, n)?;
    check_lengths(OP, &dims)?;
    let m = n + 1;
    let idx = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push([
                    dims[0] * i as f64 / n as f64,
                    dims[1] * j as f64 / n as f64,
                    dims[2] * k as f64 / n as f64,
                ]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    cells.push(idx(p[0], p[1], p[2]));
                    for axis in perm {
                        p[axis] += 1;
                        cells.push(idx(p[0], p[1], p[2]));
                    }
                }
            }
        }
    }
    Mesh::from_cells(3, vertices, cells, Provenance::Generated)
}

/// Rectangle `[0,a]x[0,b]`, each grid square split along its `(0,0)-(1,1)` diagonal.
pub fn build_rect_mesh(dims: [f64; 2], n: usize) -> Result<Mesh> {
    const OP: &str = "build_rect_mesh";
    check_subdivisions(OP, n)?;
    check_lengths(OP, &dims)?;
    let (vertices, cells) = grid_2d(dims, n, |_, _| true);
    Mesh::from_cells(2, vertices, cells, Provenance::Generated)
}

fn grid_2d(
    dims: [f64; 2],
    n: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> (Vec<[f64; 3]>, Vec<usize>) {
    let m = n + 1;
    let idx = |i: usize, j: usize| i + m * j;
    let mut vertices = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            vertices.push([dims[0] * i as f64 / n as f64, dims[1] * j as f64 / n as f64, 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            if !keep(i, j) {
                continue;
            }
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
        }
    }
    (vertices, cells)
}

/// Square `[0,outer]^2` with the centred square hole of side `inner` removed.
/// The hole must align with the `n x n` grid.
pub fn build_square_with_hole(outer: f64, inner: f64, n: usize) -> Result<Mesh> {
    const OP: &str = "build_square_with_hole";
    check_subdivisions(OP, n)?;
    check_lengths(OP, &[outer, inner])?;
    if inner >= outer {
        return Err(Error::invalid(MODULE, OP, "hole must lie strictly inside the square"));
    }
    let h = outer / n as f64;
    let as_count = |len: f64| -> Option<usize> {
        let k = len / h;
        ((k - k.round()).abs() < 1e-9 && k.round() >= 1.0).then_some(k.round() as usize)
    };
    let (Some(offset), Some(width)) = (as_count(0.5 * (outer - inner)), as_count(inner)) else {
        return Err(Error::invalid(
            MODULE,
            OP,
            format!("hole of side {inner} does not align with a {n}x{n} grid of side {outer}"),
        ));
    };
    let in_hole = |i: usize| i >= offset && i < offset + width;
    let (vertices, cells) = grid_2d([outer, outer], n, |i, j| !(in_hole(i) && in_hole(j)));
    let (vertices, cells) = compact(vertices, cells);
    Mesh::from_cells(2, vertices, cells, Provenance::Generated)
}

fn compact(vertices: Vec<[f64; 3]>, mut cells: Vec<usize>) -> (Vec<[f64; 3]>, Vec<usize>) {
    let mut remap = vec![usize::MAX; vertices.len()];
    for &v in &cells {
        remap[v] = 0;
    }
    let mut kept = Vec::new();
    for (v, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = kept.len();
            kept.push(vertices[v]);
        }
    }
    for v in &mut cells {
        *v = remap[*v];
    }
    (kept, cells)
}

/// Uniform (red) refinement: every edge is bisected; 4 children per
/// triangle, 8 per tetrahedron.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    for [a, b] in &mesh.edges {
        let (p, q) = (mesh.vertices[*a], mesh.vertices[*b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
    }
    let mid = |u: usize, w: usize| nv + mesh.edge_index(u, w).expect("edge of cell");
    let mut cells = Vec::with_capacity(mesh.cells.len() * if mesh.dim == 2 { 4 } else { 8 });
    for cell in mesh.cells() {
        if mesh.dim == 2 {
            let [a, b, c] = [cell[0], cell[1], cell[2]];
            let (ab, ac, bc) = (mid(a, b), mid(a, c), mid(b, c));
            cells.extend_from_slice(&[a, ab, ac, ab, b, bc, ac, bc, c, ab, bc, ac]);
        } else {
            let v = [cell[0], cell[1], cell[2], cell[3]];
            let m = |i: usize, j: usize| mid(v[i], v[j]);
            let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
            cells.extend_from_slice(&[v[0], m01, m02, m03]);
            cells.extend_from_slice(&[m01, v[1], m12, m13]);
            cells.extend_from_slice(&[m02, m12, v[2], m23]);
            cells.extend_from_slice(&[m03, m13, m23, v[3]]);
            // diagonal, then the ring of the remaining four midpoints
            let options = [
                (m01, m23, [m02, m03, m13, m12]),
                (m02, m13, [m01, m03, m23, m12]),
                (m03, m12, [m01, m02, m23, m13]),
            ];
            let len = |(p, q, _): &(usize, usize, [usize; 4])| dist(&vertices[*p], &vertices[*q]);
            let mut best = 0;
            for k in 1..3 {
                if len(&options[k]) < len(&options[best]) {
                    best = k;
                }
            }
            let (p, q, ring) = options[best];
            for i in 0..4 {
                cells.extend_from_slice(&[p, q, ring[i], ring[(i + 1) % 4]]);
            }
        }
    }
    Mesh::from_cells(mesh.dim, vertices, cells, mesh.provenance)
}

/// Maximum distance between two vertices. Exact for polytopal domains, where
/// the diameter is attained at boundary vertices.
pub fn diameter(mesh: &Mesh) -> f64 {
    let b = &mesh.boundary_vertices;
    let mut d: f64 = 0.0;
    for (i, &u) in b.iter().enumerate() {
        for &w in &b[i + 1..] {
            d = d.max(dist(&mesh.vertices[u], &mesh.vertices[w]));
        }
    }
    d
}

/// Parse the ASCII mesh format: a header `dim n_vertices n_cells`, then one
/// line per vertex (`x y [z]`), then one line per cell (0-based indices).
/// `#` starts a comment.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    const OP: &str = "import_mesh";
    let perr = |line: usize, msg: String| Error::new(MODULE, OP, ErrorKind::Parse { line, msg });
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    });
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| perr(hline, format!("bad header: {e}")))?;
    let [dim, n_vertices, n_cells] = nums[..] else {
        return Err(perr(hline, "header must be `dim n_vertices n_cells`".into()));
    };
    if dim != 2 && dim != 3 {
        return Err(perr(hline, format!("dimension must be 2 or 3, got {dim}")));
    }
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, body) = lines.next().ok_or_else(|| perr(hline, "truncated vertex list".into()))?;
        let xs: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad coordinate: {e}")))?;
        if xs.len() != dim || xs.iter().any(|x| !x.is_finite()) {
            return Err(perr(ln, format!("expected {dim} finite coordinates")));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&xs);
        vertices.push(p);
    }
    let mut cells = Vec::with_capacity(n_cells * (dim + 1));
    for _ in 0..n_cells {
        let (ln, body) = lines.next().ok_or_else(|| perr(hline, "truncated cell list".into()))?;
        let ids: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad vertex index: {e}")))?;
        if ids.len() != dim + 1 {
            return Err(perr(ln, format!("expected {} vertex indices", dim + 1)));
        }
        if let Some(bad) = ids.iter().find(|&&v| v >= n_vertices) {
            return Err(perr(ln, format!("vertex index {bad} out of range")));
        }
        cells.extend(ids);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing data after cell list".into()));
    }
    Mesh::from_cells(dim, vertices, cells, Provenance::Imported).map_err(|mut e| {
        e.op = OP;
        e
    })
}

pub fn import_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::new(MODULE, "import_mesh", e))?;
    parse_mesh(&text)
}

/// Serialize in the ASCII mesh format (coordinates round-trip exactly).
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", mesh.dim, mesh.n_vertices(), mesh.n_cells());
    for p in &mesh.vertices {
        let coords: Vec<String> = p[..mesh.dim].iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", coords.join(" "));
    }
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    out
}

pub fn export_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh)).map_err(|e| Error::new(MODULE, "export_mesh", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn box_counts() {
        let m = build_box_mesh([1.0; 3], 1).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells()), (8, 6));
        for n in 1..=4 {
            let m = build_box_mesh([1.0; 3], n).unwrap();
            assert_eq!(m.n_vertices(), (n + 1).pow(3));
            assert_eq!(m.n_cells(), 6 * n.pow(3));
        }
    }

    #[test]
    fn rect_counts() {
        let m = build_rect_mesh([1.0, 1.0], 1).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells()), (4, 2));
        let m = build_rect_mesh([1.0, 1.0], 4).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells()), (25, 32));
    }

    #[test]
    fn diameters() {
        let d = diameter(&build_box_mesh([1.0, 2.0, 3.0], 1).unwrap());
        assert!(rel(d, 14f64.sqrt()) < 1e-15);
        let d = diameter(&build_box_mesh([1.0; 3], 3).unwrap());
        assert!(rel(d, 3f64.sqrt()) < 1e-15);
        let d = diameter(&build_rect_mesh([2.0, 1.0], 1).unwrap());
        assert!(rel(d, 5f64.sqrt()) < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_box_mesh([1.0; 3], 0).is_err());
        assert!(build_box_mesh([1.0, -1.0, 1.0], 2).is_err());
        assert!(build_rect_mesh([0.0, 1.0], 2).is_err());
        assert!(build_square_with_hole(3.0, 1.0, 4).is_err());
        assert!(build_square_with_hole(3.0, 3.0, 3).is_err());
    }

    #[test]
    fn volumes_match_domain() {
        let m = build_box_mesh([1.0, 2.0, 3.0], 3).unwrap();
        assert!(rel(m.volume(), 6.0) < 1e-13);
        let m = build_square_with_hole(3.0, 1.0, 6).unwrap();
        assert!(rel(m.volume(), 8.0) < 1e-13);
        for c in 0..m.n_cells() {
            assert!(m.cell_volume(c) > 0.0);
        }
    }

    #[test]
    fn edge_orientation_signs() {
        let m = build_box_mesh([1.0; 3], 2).unwrap();
        for c in 0..m.n_cells() {
            let cell = m.cell(c);
            for ([a, b], &(e, s)) in TET_EDGES.iter().zip(m.cell_edges(c)) {
                let [lo, hi] = m.edges()[e];
                assert!(lo < hi);
                assert_eq!([lo, hi], [cell[*a].min(cell[*b]), cell[*a].max(cell[*b])]);
                assert_eq!(s > 0.0, cell[*a] < cell[*b]);
            }
        }
    }

    #[test]
    fn hole_topology() {
        let m = build_square_with_hole(3.0, 1.0, 3).unwrap();
        assert_eq!(m.n_cells(), 16);
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_components().len(), 2);
        assert_eq!(m.topological_harmonic_dims(), (1, 1));
        let m = build_square_with_hole(3.0, 1.0, 6).unwrap();
        // centre vertex of the 2x2 hole is dropped
        assert_eq!(m.n_vertices(), 49 - 1);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn euler_characteristic_of_convex_domains() {
        for n in 1..=3 {
            assert_eq!(build_box_mesh([1.0; 3], n).unwrap().euler_characteristic(), 1);
            assert_eq!(build_rect_mesh([1.0, 2.0], n).unwrap().euler_characteristic(), 1);
        }
        assert_eq!(build_box_mesh([1.0; 3], 2).unwrap().topological_harmonic_dims(), (0, 0));
    }

    #[test]
    fn refinement_counts_and_volume() {
        let m = build_rect_mesh([1.0, 1.0], 1).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!((r.n_vertices(), r.n_cells()), (9, 8));
        let rr = refine_uniform(&r).unwrap();
        assert_eq!(rr.n_cells(), 32);
        let b = build_box_mesh([1.0, 2.0, 3.0], 1).unwrap();
        let rb = refine_uniform(&b).unwrap();
        assert_eq!(rb.n_cells(), 48);
        assert!(rel(rb.volume(), 6.0) < 1e-14);
        assert_eq!(rb.euler_characteristic(), 1);
    }

    #[test]
    fn refinement_keeps_boundary() {
        for m in [build_box_mesh([1.0; 3], 1).unwrap(), build_square_with_hole(3.0, 1.0, 3).unwrap()] {
            let r = refine_uniform(&m).unwrap();
            let nv = m.n_vertices();
            for &e in m.boundary_edges() {
                let [a, b] = m.edges()[e];
                let mid = nv + e;
                assert!(r.is_boundary_edge(r.edge_index(a, mid).unwrap()));
                assert!(r.is_boundary_edge(r.edge_index(mid, b).unwrap()));
            }
            assert_eq!(r.boundary_components().len(), m.boundary_components().len());
        }
    }

    #[test]
    fn round_trip_and_import_errors() {
        let m = build_box_mesh([1.0; 3], 1).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(back.provenance(), Provenance::Imported);
        assert!(back.cells().eq(m.cells()));
        assert_eq!(back.vertices(), m.vertices());

        let degenerate = "2 3 1\n0 0\n1 0\n2 0\n0 1 2\n";
        let err = parse_mesh(degenerate).unwrap_err();
        assert!(matches!(err.kind, ErrorKind::DegenerateCell { cell: 0 }));

        let mut two = String::from("# two cubes\n3 8 2\n");
        for off in [0.0, 5.0] {
            for p in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                two += &format!("{} {} {}\n", p[0] + off, p[1], p[2]);
            }
        }
        two += "0 1 2 3\n4 5 6 7 # second\n";
        let err = parse_mesh(&two).unwrap_err();
        assert!(matches!(err.kind, ErrorKind::DisconnectedMesh { components: 2 }));

        assert!(matches!(parse_mesh("3 1\n").unwrap_err().kind, ErrorKind::Parse { .. }));
    }

    #[test]
    fn import_fixes_orientation() {
        let inverted = "2 3 1\n0 0\n0 1\n1 0\n0 1 2\n";
        let m = parse_mesh(inverted).unwrap();
        assert!(m.cell_volume(0) > 0.0);
    }
}
