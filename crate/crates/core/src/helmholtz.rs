//! Discrete Helmholtz decompositions of edge-element fields into an
//! ε-orthogonal sum of a discrete gradient, a discrete harmonic field and a
//! solenoidal remainder.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_nedelec, assemble_p1, discrete_gradient, eps_bounds, BoundaryCondition, DiscreteGradient,
    MaterialField, TraceCondition,
};
use crate::error::{Error, ErrorKind, Result};
use crate::mesh::Mesh;
use crate::sparse::{dot, SparseSymMatrix};
use crate::spectral::{cholesky, eig_gsym, split_kernel, SpectralResult};

const MODULE: &str = "helmholtz";

/// Dense SPD solver from a Cholesky factor.
#[derive(Clone, Debug)]
struct SpdSolver {
    l: DMatrix<f64>,
}

impl SpdSolver {
    fn new(m: &DMatrix<f64>) -> Result<Self> {
        Ok(Self { l: cholesky(m)? })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = self.l.solve_lower_triangular(&DVector::from_column_slice(b)).expect("nonsingular factor");
        let x = self.l.transpose().solve_upper_triangular(&y).expect("nonsingular factor");
        x.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub field: Vec<f64>,
    pub gradient: Vec<f64>,
    /// Scalar potential with `gradient = G potential` (free vertex dofs).
    pub potential: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub solenoidal: Vec<f64>,
    /// `‖field − Σ parts‖ / ‖field‖`.
    pub reconstruction_error: f64,
    /// Largest `|(a, b)_ε| / ‖field‖²_ε` over pairs of distinct parts.
    pub orthogonality_error: f64,
}

/// Reusable decomposition operator for one mesh, material and trace
/// condition. Holds the Poisson factorization and the harmonic basis.
#[derive(Clone, Debug)]
pub struct Decomposer {
    bc: TraceCondition,
    mass: SparseSymMatrix,
    grad: DiscreteGradient,
    poisson: SpdSolver,
    /// Vertex dof pinned to remove the constants (normal condition only).
    pinned: Option<usize>,
    harmonic: Vec<Vec<f64>>,
    /// ε-orthonormal eigenvectors of the edge pencil with nonzero eigenvalues.
    curl_modes: Option<DMatrix<f64>>,
}

impl Decomposer {
    /// `mass` is the ε-weighted edge mass on the free dofs of `grad`.
    /// A harmonic basis must be supplied whenever the mesh topology admits
    /// harmonic fields for this trace condition.
    pub fn from_parts(
        mesh: &Mesh,
        bc: TraceCondition,
        mass: SparseSymMatrix,
        grad: DiscreteGradient,
        harmonic: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        const OP: &str = "decomposer";
        if mass.dim() != grad.matrix.nrows() {
            return Err(Error::new(
                MODULE,
                OP,
                ErrorKind::DimensionMismatch {
                    expected: grad.matrix.nrows(),
                    found: mass.dim(),
                },
            ));
        }
        let (d_d, d_n) = mesh.topological_harmonic_dims();
        let d = match bc {
            TraceCondition::Tangential => d_d,
            TraceCondition::Normal => d_n,
        };
        let harmonic = match harmonic {
            Some(h) => h,
            None if d > 0 => return Err(Error::new(MODULE, OP, ErrorKind::HarmonicBasisRequired(d))),
            None => Vec::new(),
        };
        if let Some(v) = harmonic.iter().find(|v| v.len() != mass.dim()) {
            return Err(Error::new(
                MODULE,
                OP,
                ErrorKind::DimensionMismatch {
                    expected: mass.dim(),
                    found: v.len(),
                },
            ));
        }
        let mut k = grad.matrix.congruence(&mass).to_dense();
        let pinned = (bc == TraceCondition::Normal).then_some(0);
        if let Some(p) = pinned {
            k = k.remove_row(p).remove_column(p);
        }
        let poisson = SpdSolver::new(&k).map_err(|e| Error::new(MODULE, OP, e.kind))?;
        Ok(Self {
            bc,
            mass,
            grad,
            poisson,
            pinned,
            harmonic,
            curl_modes: None,
        })
    }

    /// Assemble everything from one eigendecomposition of the edge pencil:
    /// the harmonic basis, and the curl modes that give the solenoidal part
    /// by spectral projection.
    pub fn new(mesh: &Mesh, eps: &MaterialField, bc: TraceCondition) -> Result<Self> {
        let pencil = assemble_nedelec(mesh, eps, bc.edge_bc())?;
        let grad = discrete_gradient(mesh, bc.edge_bc());
        let result = eig_gsym(&pencil)?;
        let split = split_kernel(&result, grad.rank())?;
        let harmonic = harmonic_from_kernel(mesh, bc, &pencil.b, &grad, &result, split.kernel_dim)?;
        let vectors = result.vectors.as_ref().expect("eig_gsym returns vectors");
        let modes = vectors.columns(split.kernel_dim, vectors.ncols() - split.kernel_dim).into_owned();
        let mut dec = Self::from_parts(mesh, bc, pencil.b, grad, Some(harmonic))?;
        dec.curl_modes = Some(modes);
        Ok(dec)
    }

    /// Whether the solenoidal part is computed independently of the
    /// gradient and harmonic parts.
    pub fn has_curl_modes(&self) -> bool {
        self.curl_modes.is_some()
    }

    pub fn trace_condition(&self) -> TraceCondition {
        self.bc
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.dim()
    }

    pub fn harmonic_basis(&self) -> &[Vec<f64>] {
        &self.harmonic
    }

    pub fn gradient(&self) -> &DiscreteGradient {
        &self.grad
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.quad_form(a, b)
    }

    /// Potential φ solving `(ε∇φ, ∇ψ) = (εE, ∇ψ)` for all admissible ψ.
    pub fn potential(&self, field: &[f64]) -> Vec<f64> {
        let rhs = self.grad.matrix.transpose_mul_vec(&self.mass.mul_vec(field));
        match self.pinned {
            None => self.poisson.solve(&rhs),
            Some(p) => {
                let mut reduced = rhs;
                reduced.remove(p);
                let mut phi = self.poisson.solve(&reduced);
                phi.insert(p, 0.0);
                phi
            }
        }
    }

    pub fn decompose(&self, field: &[f64]) -> Result<Decomposition> {
        if field.len() != self.n_dofs() {
            return Err(Error::new(
                MODULE,
                "decompose",
                ErrorKind::DimensionMismatch {
                    expected: self.n_dofs(),
                    found: field.len(),
                },
            ));
        }
        let potential = self.potential(field);
        let gradient = self.grad.apply(&potential);
        let rest: Vec<f64> = field.iter().zip(&gradient).map(|(e, g)| e - g).collect();
        let mut harmonic = vec![0.0; field.len()];
        for h in &self.harmonic {
            let c = self.inner(&rest, h);
            harmonic.iter_mut().zip(h).for_each(|(a, b)| *a += c * b);
        }
        let solenoidal: Vec<f64> = match &self.curl_modes {
            Some(v) => {
                let coeffs = v.tr_mul(&DVector::from_vec(self.mass.mul_vec(field)));
                (v * coeffs).iter().copied().collect()
            }
            None => rest.iter().zip(&harmonic).map(|(r, h)| r - h).collect(),
        };

        let sum_err: f64 = (0..field.len())
            .map(|i| (field[i] - gradient[i] - harmonic[i] - solenoidal[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let fnorm = dot(field, field).sqrt();
        let energy = self.inner(field, field);
        let rel = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
        let orthogonality_error = [
            self.inner(&gradient, &harmonic),
            self.inner(&gradient, &solenoidal),
            self.inner(&harmonic, &solenoidal),
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(rel(x.abs(), energy)));
        Ok(Decomposition {
            field: field.to_vec(),
            gradient,
            potential,
            harmonic,
            solenoidal,
            reconstruction_error: rel(sum_err, fnorm),
            orthogonality_error,
        })
    }
}

/// One-shot decomposition. `harmonic` must be given when the topology
/// admits harmonic fields for `bc`.
pub fn decompose(
    mesh: &Mesh,
    eps: &MaterialField,
    bc: TraceCondition,
    field: &[f64],
    harmonic: Option<Vec<Vec<f64>>>,
) -> Result<Decomposition> {
    let pencil = assemble_nedelec(mesh, eps, bc.edge_bc())?;
    Decomposer::from_parts(mesh, bc, pencil.b, discrete_gradient(mesh, bc.edge_bc()), harmonic)?.decompose(field)
}

/// ε-orthonormal basis of the discrete harmonic fields: edge-pencil kernel
/// vectors ε-orthogonal to all discrete gradients.
pub fn harmonic_basis(mesh: &Mesh, eps: &MaterialField, bc: TraceCondition) -> Result<Vec<Vec<f64>>> {
    let pencil = assemble_nedelec(mesh, eps, bc.edge_bc())?;
    let grad = discrete_gradient(mesh, bc.edge_bc());
    let result = eig_gsym(&pencil)?;
    let split = split_kernel(&result, grad.rank())?;
    harmonic_from_kernel(mesh, bc, &pencil.b, &grad, &result, split.kernel_dim)
}

fn harmonic_from_kernel(
    mesh: &Mesh,
    bc: TraceCondition,
    mass: &SparseSymMatrix,
    grad: &DiscreteGradient,
    result: &SpectralResult,
    kernel_dim: usize,
) -> Result<Vec<Vec<f64>>> {
    if kernel_dim < grad.rank() {
        return Err(Error::new(
            MODULE,
            "harmonic_basis",
            ErrorKind::KernelMismatch {
                expected: grad.rank(),
                found: kernel_dim,
            },
        ));
    }
    let d = kernel_dim - grad.rank();
    if d == 0 {
        return Ok(Vec::new());
    }
    let projector = Decomposer::from_parts(mesh, bc, mass.clone(), grad.clone(), Some(Vec::new()))?;
    let remove_gradient = |v: &[f64]| -> Vec<f64> {
        let g = projector.grad.apply(&projector.potential(v));
        v.iter().zip(&g).map(|(a, b)| a - b).collect()
    };
    let vectors = result.vectors.as_ref().expect("eig_gsym returns vectors");
    let w: Vec<Vec<f64>> = (0..kernel_dim).map(|k| remove_gradient(vectors.column(k).as_slice())).collect();
    // the d dominant directions of the ε-Gram matrix of the projected kernel
    let k = w.len();
    let gram = DMatrix::from_fn(k, k, |i, j| projector.inner(&w[i], &w[j]));
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &c in &order[..d] {
        let mut v = vec![0.0; mass.dim()];
        for (i, wi) in w.iter().enumerate() {
            let q = eig.eigenvectors[(i, c)];
            v.iter_mut().zip(wi).for_each(|(a, b)| *a += q * b);
        }
        let mut v = remove_gradient(&v);
        for b in &basis {
            let c = projector.inner(&v, b);
            v.iter_mut().zip(b).for_each(|(a, x)| *a -= c * x);
        }
        let nrm = projector.inner(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        basis.push(v);
    }
    Ok(basis)
}

/// Seeded fields with i.i.d. entries uniform in `[-1, 1]`.
pub fn random_fields(n_dofs: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n_dofs).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub bc: TraceCondition,
    pub fields: usize,
    pub harmonic_dim: usize,
    pub max_reconstruction_error: f64,
    pub max_orthogonality_error: f64,
}

/// Decompose `count` seeded random fields and record the worst residuals.
pub fn property_suite(decomposer: &Decomposer, count: usize, seed: u64) -> Result<SuiteSummary> {
    let mut summary = SuiteSummary {
        bc: decomposer.trace_condition(),
        fields: count,
        harmonic_dim: decomposer.harmonic_basis().len(),
        max_reconstruction_error: 0.0,
        max_orthogonality_error: 0.0,
    };
    for f in random_fields(decomposer.n_dofs(), count, seed) {
        let d = decomposer.decompose(&f)?;
        summary.max_reconstruction_error = summary.max_reconstruction_error.max(d.reconstruction_error);
        summary.max_orthogonality_error = summary.max_orthogonality_error.max(d.orthogonality_error);
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrotationalEstimate {
    pub bc: TraceCondition,
    /// `‖E‖_ε` for `E = G u`, with `u` the first (nonconstant) eigenvector.
    pub lhs: f64,
    /// Weak divergence norm `‖M⁻¹ Gᵀ B_ε E‖_M`.
    pub div_norm: f64,
    /// `lhs / div_norm`; equals `1/√λ` of the weighted pencil.
    pub ratio: f64,
    /// `ε_lower` times the unweighted Poincaré constant.
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// `|‖E‖²_ε − λ‖u‖²_M| / (λ‖u‖²_M)`.
    pub energy_identity_error: f64,
}

/// Discrete check of `‖E‖_ε ≤ ε_lower · c · ‖div εE‖` for irrotational `E`
/// built from the first eigenfunction of the weighted scalar pencil.
/// Tangential traces use the Dirichlet constant, normal traces the Neumann
/// one.
pub fn verify_irrotational_estimate(mesh: &Mesh, eps: &MaterialField, bc: TraceCondition) -> Result<IrrotationalEstimate> {
    let sbc = bc.edge_bc();
    let skip = if sbc == BoundaryCondition::Natural { 1 } else { 0 };
    let weighted = assemble_p1(mesh, eps, sbc)?;
    let plain = assemble_p1(mesh, &MaterialField::identity(mesh.dim(), mesh.n_cells()), sbc)?;
    let r = eig_gsym(&weighted)?;
    let lambda = r.values[skip];
    let u = r.vector(skip).expect("vectors requested");
    let c = 1.0 / eig_gsym(&plain)?.values[skip].sqrt();

    let grad = discrete_gradient(mesh, sbc);
    let bmass = assemble_nedelec(mesh, eps, sbc)?.b;
    let e = grad.apply(&u);
    let energy = bmass.quad_form(&e, &e);
    let m = &weighted.b;
    let unorm2 = m.quad_form(&u, &u);
    let div = SpdSolver::new(&m.to_dense())?.solve(&grad.matrix.transpose_mul_vec(&bmass.mul_vec(&e)));
    let div_norm = m.quad_form(&div, &div).sqrt();

    let lhs = energy.sqrt();
    let ratio = lhs / div_norm;
    let rhs = eps_bounds(eps).eps_lower * c;
    Ok(IrrotationalEstimate {
        bc,
        lhs,
        div_norm,
        ratio,
        rhs,
        margin: rhs - ratio,
        satisfied: ratio <= rhs * (1.0 + 1e-9),
        energy_identity_error: (energy - lambda * unorm2).abs() / (lambda * unorm2),
    })
}
