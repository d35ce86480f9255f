//! Poincaré, Friedrichs and Maxwell constants from discrete spectra, and the
//! inequality chain relating them.
//!
//! With `λ₁`, `μ₂` the first Dirichlet and first nonzero Neumann eigenvalues
//! of the unweighted Laplacian:
//!
//! * `c_p0 = 1/√λ₁`, `c_p = 1/√μ₂`
//! * `c_mt = 1/√min(λ₁,ε, λ_t)`, `c_mn = 1/√min(μ₂,ε, λ_n)`
//!
//! where `λ_t`, `λ_n` are the smallest nonzero eigenvalues of the edge pencil
//! `(rot, rot) = λ (ε·, ·)` with tangential resp. natural boundary conditions
//! (the solenoidal part), and `λ₁,ε`, `μ₂,ε` bound the gradient part: for
//! `E = ∇u` the quotient `‖div εE‖² / ‖E‖²_ε` with the weak divergence
//! `M⁻¹ Gᵀ B_ε` reduces to the pencil `(∫ ε∇u·∇v, ∫ uv)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_nedelec, assemble_p1, discrete_gradient, eps_bounds, BoundaryCondition, EpsBounds, EpsilonSpec,
    MaterialField, TraceCondition,
};
use crate::error::{Error, ErrorKind, Result};
use crate::mesh::{diameter, DomainSpec, Mesh};
use crate::spectral::{eigenvalues_gsym, richardson_extrapolate, split_kernel};

const MODULE: &str = "constants";

/// Relative tolerance of the `c_mn = c_p` equality check.
pub const EQUALITY_TOLERANCE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSeries {
    pub hs: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub observed_order: Option<f64>,
}

impl EigenSeries {
    /// A single level is its own limit.
    pub fn new(hs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let (extrapolated, observed_order) = if values.len() == 1 {
            (values[0], None)
        } else {
            let e = richardson_extrapolate(&hs, &values)?;
            (e.value, e.observed_order)
        };
        Ok(Self {
            hs,
            values,
            extrapolated,
            observed_order,
        })
    }
}

pub(crate) fn check_levels(op: &'static str, levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::new(MODULE, op, ErrorKind::Config("at least one level is required".into())));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::new(
            MODULE,
            op,
            ErrorKind::Config(format!("levels must be strictly increasing, got {levels:?}")),
        ));
    }
    Ok(())
}

fn level_mesh(domain: &DomainSpec, eps: &EpsilonSpec, n: usize) -> Result<(Mesh, MaterialField, f64)> {
    domain.validate()?;
    let mesh = domain.mesh(n)?;
    let field = eps.field(&mesh)?;
    let h = domain.mesh_size(n, &mesh);
    Ok((mesh, field, h))
}

/// First eigenvalue of the essential-bc P1 pencil.
pub fn dirichlet_lambda1_on(mesh: &Mesh, eps: &MaterialField) -> Result<f64> {
    let r = eigenvalues_gsym(&assemble_p1(mesh, eps, BoundaryCondition::Essential)?)?;
    let s = split_kernel(&r, 0)?;
    if s.mismatch {
        return Err(Error::new(
            MODULE,
            "dirichlet_lambda1",
            ErrorKind::KernelMismatch {
                expected: 0,
                found: s.kernel_dim,
            },
        ));
    }
    Ok(s.smallest_nonzero)
}

/// First nonzero eigenvalue of the natural-bc P1 pencil; the kernel must be
/// the constants.
pub fn neumann_mu2_on(mesh: &Mesh, eps: &MaterialField) -> Result<f64> {
    let r = eigenvalues_gsym(&assemble_p1(mesh, eps, BoundaryCondition::Natural)?)?;
    let s = split_kernel(&r, 1)?;
    if s.mismatch {
        return Err(Error::new(
            MODULE,
            "neumann_mu2",
            ErrorKind::KernelMismatch {
                expected: 1,
                found: s.kernel_dim,
            },
        ));
    }
    Ok(s.smallest_nonzero)
}

/// Smallest nonzero edge-pencil eigenvalue and the detected harmonic
/// dimension (kernel dimension minus `rank(G)`).
pub fn maxwell_lambda_on(mesh: &Mesh, eps: &MaterialField, bc: TraceCondition) -> Result<(f64, usize)> {
    let ebc = bc.edge_bc();
    let r = eigenvalues_gsym(&assemble_nedelec(mesh, eps, ebc)?)?;
    let rank = discrete_gradient(mesh, ebc).rank();
    let (d_d, d_n) = mesh.topological_harmonic_dims();
    let topo = match bc {
        TraceCondition::Tangential => d_d,
        TraceCondition::Normal => d_n,
    };
    let s = split_kernel(&r, rank + topo)?;
    if s.kernel_dim < rank {
        return Err(Error::new(
            MODULE,
            "maxwell_lambda",
            ErrorKind::KernelMismatch {
                expected: rank + topo,
                found: s.kernel_dim,
            },
        ));
    }
    Ok((s.smallest_nonzero, s.kernel_dim - rank))
}

fn series_over<F>(domain: &DomainSpec, eps: &EpsilonSpec, levels: &[usize], op: &'static str, f: F) -> Result<Vec<(f64, f64, usize)>>
where
    F: Fn(&Mesh, &MaterialField) -> Result<(f64, usize)> + Sync,
{
    check_levels(op, levels)?;
    let out: Vec<Result<(f64, f64, usize)>> = levels
        .par_iter()
        .map(|&n| {
            let (mesh, field, h) = level_mesh(domain, eps, n)?;
            let (v, d) = f(&mesh, &field)?;
            Ok((h, v, d))
        })
        .collect();
    out.into_iter().collect()
}

fn to_series(rows: &[(f64, f64, usize)]) -> Result<EigenSeries> {
    EigenSeries::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
}

/// `λ₁` (or `λ₁,ε`) per level with extrapolation.
pub fn dirichlet_lambda1(domain: &DomainSpec, eps: &EpsilonSpec, levels: &[usize]) -> Result<EigenSeries> {
    let rows = series_over(domain, eps, levels, "dirichlet_lambda1", |m, e| Ok((dirichlet_lambda1_on(m, e)?, 0)))?;
    to_series(&rows)
}

/// `μ₂` (or `μ₂,ε`) per level with extrapolation.
pub fn neumann_mu2(domain: &DomainSpec, eps: &EpsilonSpec, levels: &[usize]) -> Result<EigenSeries> {
    let rows = series_over(domain, eps, levels, "neumann_mu2", |m, e| Ok((neumann_mu2_on(m, e)?, 0)))?;
    to_series(&rows)
}

/// Smallest nonzero Maxwell eigenvalue per level with extrapolation, and
/// the harmonic dimension, which must agree on every level.
pub fn maxwell_lambda(
    domain: &DomainSpec,
    eps: &EpsilonSpec,
    bc: TraceCondition,
    levels: &[usize],
) -> Result<(EigenSeries, usize)> {
    let rows = series_over(domain, eps, levels, "maxwell_lambda", |m, e| maxwell_lambda_on(m, e, bc))?;
    let dims: Vec<usize> = rows.iter().map(|r| r.2).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::new(MODULE, "maxwell_lambda", ErrorKind::UnstableHarmonicDim(dims)));
    }
    Ok((to_series(&rows)?, dims[0]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub h: f64,
    pub lambda1: f64,
    pub mu2: f64,
    pub lambda_max_t: f64,
    pub lambda_max_n: f64,
    #[serde(rename = "d_D")]
    pub d_d: usize,
    #[serde(rename = "d_N")]
    pub d_n: usize,
    pub lambda1_eps: f64,
    pub mu2_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub lambda1: f64,
    pub mu2: f64,
    pub lambda_max_t: f64,
    pub lambda_max_n: f64,
    pub lambda1_eps: f64,
    pub mu2_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_p0: f64,
    pub c_p: f64,
    pub c_mt: f64,
    pub c_mn: f64,
    pub eps_lower: f64,
    pub eps_upper: f64,
    pub eps_hat: f64,
    pub diam_over_pi: f64,
    pub inv_op_norm: f64,
}

impl Constants {
    pub fn from_eigenvalues(e: &Extrapolated, bounds: &EpsBounds, diam: f64) -> Self {
        let c_mt = 1.0 / e.lambda1_eps.min(e.lambda_max_t).sqrt();
        Self {
            c_p0: 1.0 / e.lambda1.sqrt(),
            c_p: 1.0 / e.mu2.sqrt(),
            c_mt,
            c_mn: 1.0 / e.mu2_eps.min(e.lambda_max_n).sqrt(),
            eps_lower: bounds.eps_lower,
            eps_upper: bounds.eps_upper,
            eps_hat: bounds.eps_hat,
            diam_over_pi: diam / std::f64::consts::PI,
            inv_op_norm: (c_mt * c_mt + 1.0).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped: nonconvex")]
    SkippedNonconvex,
    #[serde(rename = "skipped: eps not identity")]
    SkippedEpsNotIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
    pub status: CheckStatus,
    /// Whether a failure affects the run's exit status.
    pub gating: bool,
}

impl InequalityCheck {
    pub fn new(name: &str, lhs: f64, rhs: f64, gating: bool) -> Self {
        let satisfied = lhs <= rhs + 1e-12 * rhs.abs();
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            satisfied,
            margin: rhs - lhs,
            status: if satisfied { CheckStatus::Pass } else { CheckStatus::Fail },
            gating,
        }
    }

    fn skipped(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }

    pub fn failed_gating(&self) -> bool {
        self.gating && self.status == CheckStatus::Fail
    }
}

/// The chain checks. Convex-only checks are skipped on nonconvex domains,
/// checks that need `ε = id` are skipped otherwise. `c_mt ≤ c_mn` is
/// reported but never gating; in 2D `c_mt = c_mn = c_p` holds exactly in the
/// continuum, so `c_mt ≤ c_p` is a tie that discretization error can tip
/// either way and is not gating there either.
pub fn inequality_checks(c: &Constants, dim: usize, convex: bool, eps_identity: bool) -> Vec<InequalityCheck> {
    let skip = |check: InequalityCheck, convex_only: bool, identity_only: bool| {
        if convex_only && !convex {
            check.skipped(CheckStatus::SkippedNonconvex)
        } else if identity_only && !eps_identity {
            check.skipped(CheckStatus::SkippedEpsNotIdentity)
        } else {
            check
        }
    };
    let e3 = c.eps_hat.powi(3);
    vec![
        skip(InequalityCheck::new("i: c_p0 <= c_mt", c.c_p0, c.c_mt, true), false, true),
        InequalityCheck::new("ii: c_mt <= c_mn", c.c_mt, c.c_mn, false),
        skip(
            InequalityCheck::new("iii: |c_mn - c_p|/c_p <= 0.02", (c.c_mn - c.c_p).abs() / c.c_p, EQUALITY_TOLERANCE, true),
            true,
            true,
        ),
        skip(InequalityCheck::new("iv_a: c_mn <= eps_hat*c_p", c.c_mn, c.eps_hat * c.c_p, true), true, false),
        skip(
            InequalityCheck::new(
                "iv_b: c_mt <= max(eps_lower*c_p0, eps_upper*c_p)",
                c.c_mt,
                (c.eps_lower * c.c_p0).max(c.eps_upper * c.c_p),
                dim == 3,
            ),
            true,
            false,
        ),
        InequalityCheck::new("v_a: c_p0/eps_hat^3 <= c_mt", c.c_p0 / e3, c.c_mt, true),
        InequalityCheck::new("v_b: c_p/eps_hat^3 <= c_mn", c.c_p / e3, c.c_mn, true),
        skip(InequalityCheck::new("vi: c_p <= diam/pi", c.c_p, c.diam_over_pi, true), true, false),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub domain: DomainSpec,
    pub epsilon: EpsilonSpec,
    pub dim: usize,
    pub convex: bool,
    pub levels: Vec<LevelRecord>,
    pub extrapolated: Extrapolated,
    pub constants: Constants,
    #[serde(rename = "d_D")]
    pub d_d: usize,
    #[serde(rename = "d_N")]
    pub d_n: usize,
    pub checks: Vec<InequalityCheck>,
    pub notes: Vec<String>,
}

impl ConstantsReport {
    pub fn gating_failures(&self) -> usize {
        self.checks.iter().filter(|c| c.failed_gating()).count()
    }

    pub fn check(&self, prefix: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }

    /// CSV projection of `levels`.
    pub fn write_levels_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.levels {
            w.serialize(r).map_err(|e| Error::new(MODULE, "write_levels_csv", e))?;
        }
        w.flush().map_err(|e| Error::new(MODULE, "write_levels_csv", e))?;
        Ok(())
    }
}

struct LevelData {
    record: LevelRecord,
    diameter: f64,
    bounds: EpsBounds,
    eps_identity: bool,
    dim: usize,
}

fn compute_level(domain: &DomainSpec, eps: &EpsilonSpec, n: usize) -> Result<LevelData> {
    let (mesh, field, h) = level_mesh(domain, eps, n)?;
    let id = MaterialField::identity(mesh.dim(), mesh.n_cells());
    let eps_identity = field.is_identity();
    let lambda1 = dirichlet_lambda1_on(&mesh, &id)?;
    let mu2 = neumann_mu2_on(&mesh, &id)?;
    let (lambda1_eps, mu2_eps) = if eps_identity {
        (lambda1, mu2)
    } else {
        (dirichlet_lambda1_on(&mesh, &field)?, neumann_mu2_on(&mesh, &field)?)
    };
    let (lambda_max_t, d_d) = maxwell_lambda_on(&mesh, &field, TraceCondition::Tangential)?;
    let (lambda_max_n, d_n) = maxwell_lambda_on(&mesh, &field, TraceCondition::Normal)?;
    Ok(LevelData {
        record: LevelRecord {
            n,
            h,
            lambda1,
            mu2,
            lambda_max_t,
            lambda_max_n,
            d_d,
            d_n,
            lambda1_eps,
            mu2_eps,
        },
        diameter: diameter(&mesh),
        bounds: eps_bounds(&field),
        eps_identity,
        dim: mesh.dim(),
    })
}

/// Full constants report over a refinement study. Levels are computed
/// concurrently on the current rayon pool and merged in level order.
pub fn constants_report(domain: &DomainSpec, eps: &EpsilonSpec, levels: &[usize]) -> Result<ConstantsReport> {
    const OP: &str = "constants_report";
    check_levels(OP, levels)?;
    let data: Vec<Result<LevelData>> = levels.par_iter().map(|&n| compute_level(domain, eps, n)).collect();
    let data: Vec<LevelData> = data.into_iter().collect::<Result<_>>()?;
    let records: Vec<LevelRecord> = data.iter().map(|d| d.record.clone()).collect();

    for dims in [
        records.iter().map(|r| r.d_d).collect::<Vec<_>>(),
        records.iter().map(|r| r.d_n).collect::<Vec<_>>(),
    ] {
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::new(MODULE, OP, ErrorKind::UnstableHarmonicDim(dims)));
        }
    }

    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let ex = |f: fn(&LevelRecord) -> f64| -> Result<f64> {
        Ok(EigenSeries::new(hs.clone(), records.iter().map(f).collect())?.extrapolated)
    };
    let extrapolated = Extrapolated {
        lambda1: ex(|r| r.lambda1)?,
        mu2: ex(|r| r.mu2)?,
        lambda_max_t: ex(|r| r.lambda_max_t)?,
        lambda_max_n: ex(|r| r.lambda_max_n)?,
        lambda1_eps: ex(|r| r.lambda1_eps)?,
        mu2_eps: ex(|r| r.mu2_eps)?,
    };
    let finest = data.last().expect("levels are nonempty");
    let constants = Constants::from_eigenvalues(&extrapolated, &finest.bounds, finest.diameter);
    let convex = domain.is_convex();
    let checks = inequality_checks(&constants, finest.dim, convex, finest.eps_identity);
    let mut notes = vec![
        "lambda1_eps and mu2_eps are the discrete quotients inf |div eps E|^2 / |E|_eps^2 over discrete gradients \
         with the weak divergence M^-1 G^T B_eps; this discrete object is defined by the implementation"
            .to_string(),
    ];
    if !convex && finest.dim == 3 {
        notes.push("c_mt and c_mn are computed on the complement of the detected harmonic fields".to_string());
    }
    Ok(ConstantsReport {
        domain: domain.clone(),
        epsilon: eps.clone(),
        dim: finest.dim,
        convex,
        levels: records,
        extrapolated,
        constants,
        d_d: finest.record.d_d,
        d_n: finest.record.d_n,
        checks,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlacingRow {
    pub n: usize,
    /// Levels entering the extrapolation.
    pub levels: Vec<usize>,
    /// Extrapolated `λ_n`.
    pub lambda: f64,
    /// Extrapolated `μ_{n+1}`.
    pub mu_next: f64,
    pub holds: bool,
}

/// Compare the first `k` Dirichlet eigenvalues with the Neumann eigenvalues
/// `μ₂ … μ_{k+1}` (ε = id) at extrapolated values. Levels too coarse to
/// carry `k` Dirichlet eigenvalues are left out.
pub fn interlacing_table(domain: &DomainSpec, k: usize, levels: &[usize]) -> Result<Vec<InterlacingRow>> {
    const OP: &str = "interlacing_table";
    check_levels(OP, levels)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let per_level: Vec<Result<Option<(usize, f64, Vec<f64>, Vec<f64>)>>> = levels
        .par_iter()
        .map(|&n| {
            let (mesh, _, h) = level_mesh(domain, &EpsilonSpec::Identity, n)?;
            let id = MaterialField::identity(mesh.dim(), mesh.n_cells());
            let dir = eigenvalues_gsym(&assemble_p1(&mesh, &id, BoundaryCondition::Essential)?)?;
            let neu = eigenvalues_gsym(&assemble_p1(&mesh, &id, BoundaryCondition::Natural)?)?;
            if dir.len() < k || neu.len() < k + 1 {
                return Ok(None);
            }
            Ok(Some((n, h, dir.values[..k].to_vec(), neu.values[1..=k].to_vec())))
        })
        .collect();
    let per_level: Vec<_> = per_level.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    if per_level.is_empty() {
        return Err(Error::invalid(MODULE, OP, format!("no level has {k} interior dofs")));
    }
    let used: Vec<usize> = per_level.iter().map(|l| l.0).collect();
    let hs: Vec<f64> = per_level.iter().map(|l| l.1).collect();
    (0..k)
        .map(|i| {
            let lambda = EigenSeries::new(hs.clone(), per_level.iter().map(|l| l.2[i]).collect())?.extrapolated;
            let mu_next = EigenSeries::new(hs.clone(), per_level.iter().map(|l| l.3[i]).collect())?.extrapolated;
            Ok(InterlacingRow {
                n: i + 1,
                levels: used.clone(),
                lambda,
                mu_next,
                holds: mu_next <= lambda,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn constants(c_p0: f64, c_p: f64, c_mt: f64, c_mn: f64, eps: f64) -> Constants {
        let b = EpsBounds {
            eps_lower: 1.0 / eps.sqrt(),
            eps_upper: eps.sqrt(),
            eps_hat: (1.0 / eps.sqrt()).max(eps.sqrt()),
        };
        Constants {
            c_p0,
            c_p,
            c_mt,
            c_mn,
            eps_lower: b.eps_lower,
            eps_upper: b.eps_upper,
            eps_hat: b.eps_hat,
            diam_over_pi: 3f64.sqrt() / PI,
            inv_op_norm: (c_mt * c_mt + 1.0).sqrt(),
        }
    }

    #[test]
    fn satisfied_uses_relative_slack() {
        assert!(InequalityCheck::new("t", 1.0 + 1e-13, 1.0, true).satisfied);
        assert!(!InequalityCheck::new("t", 1.0 + 1e-11, 1.0, true).satisfied);
        let c = InequalityCheck::new("t", 1.0, 3.0, true);
        assert_eq!((c.margin, c.status), (2.0, CheckStatus::Pass));
    }

    #[test]
    fn analytic_cube_chain_passes() {
        let c = constants(1.0 / (PI * 3f64.sqrt()), 1.0 / PI, 1.0 / (PI * 2f64.sqrt()), 1.0 / PI, 1.0);
        let checks = inequality_checks(&c, 3, true, true);
        assert_eq!(checks.len(), 8);
        assert!(checks.iter().all(|k| k.status == CheckStatus::Pass), "{checks:?}");
    }

    #[test]
    fn skip_policy() {
        let c = constants(0.2, 0.3, 0.25, 0.3, 1.0);
        let checks = inequality_checks(&c, 2, false, true);
        let skipped: Vec<&str> = checks
            .iter()
            .filter(|k| k.status == CheckStatus::SkippedNonconvex)
            .map(|k| &k.name[..k.name.find(':').unwrap()])
            .collect();
        assert_eq!(skipped, ["iii", "iv_a", "iv_b", "vi"]);
        let checks = inequality_checks(&c, 3, true, false);
        assert_eq!(checks[0].status, CheckStatus::SkippedEpsNotIdentity);
        assert_eq!(checks[2].status, CheckStatus::SkippedEpsNotIdentity);
    }

    #[test]
    fn ordering_check_never_gates() {
        let c = constants(0.2, 0.3, 0.31, 0.3, 1.0);
        let checks = inequality_checks(&c, 3, true, true);
        assert_eq!(checks[1].status, CheckStatus::Fail);
        assert!(!checks[1].failed_gating());
        assert!(checks[4].failed_gating());
        assert!(!inequality_checks(&c, 2, true, true)[4].failed_gating());
    }

    #[test]
    fn single_level_is_its_own_limit() {
        let s = EigenSeries::new(vec![0.5], vec![3.0]).unwrap();
        assert_eq!(s.extrapolated, 3.0);
        assert!(check_levels("t", &[4, 2]).is_err());
        assert!(check_levels("t", &[]).is_err());
        assert_eq!(check_levels("t", &[4, 2]).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn square_eigenvalues() {
        let sq = DomainSpec::unit_square();
        let l = dirichlet_lambda1(&sq, &EpsilonSpec::Identity, &[16]).unwrap();
        assert!((l.extrapolated - 2.0 * PI * PI).abs() < 0.02 * 2.0 * PI * PI);
        let m = neumann_mu2(&sq, &EpsilonSpec::Identity, &[16]).unwrap();
        assert!((m.extrapolated - PI * PI).abs() < 0.02 * PI * PI);
        let l2 = dirichlet_lambda1(&sq, &EpsilonSpec::Scalar { value: 2.0 }, &[16]).unwrap();
        assert!((l2.extrapolated / l.extrapolated - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interlacing_degenerate_and_square() {
        assert!(interlacing_table(&DomainSpec::unit_square(), 0, &[4]).unwrap().is_empty());
        let rows = interlacing_table(&DomainSpec::unit_square(), 3, &[8, 16]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.holds));
        assert!((rows[0].lambda / (PI * PI) - 2.0).abs() < 0.01);
        assert!((rows[2].mu_next / (PI * PI) - 2.0).abs() < 0.01);
    }
}
