//! Python bindings for the maxlab spectral lab.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use maxlab::assembly::{self, assemble_nedelec, assemble_p1, BoundaryCondition, EpsilonSpec, TraceCondition};
use maxlab::cli::{self, RunConfig, Severity};
use maxlab::constants;
use maxlab::helmholtz;
use maxlab::mesh::{self, DomainSpec};
use maxlab::spectral::{self, eigenvalues_gsym, split_kernel};

fn to_py(e: maxlab::Error) -> PyErr {
    if e.exit_code() == 4 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn trace(name: &str) -> PyResult<TraceCondition> {
    match name {
        "tangential" => Ok(TraceCondition::Tangential),
        "normal" => Ok(TraceCondition::Normal),
        _ => Err(PyValueError::new_err(format!("trace must be 'tangential' or 'normal', got {name:?}"))),
    }
}

/// Simplicial mesh of a bounded domain in 2D or 3D.
#[pyclass(name = "Mesh", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: mesh::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Kuhn mesh of the box `[0,a]x[0,b]x[0,c]` with `n` cells per side.
    #[staticmethod]
    fn box3d(dims: [f64; 3], n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_box_mesh(dims, n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn rect2d(dims: [f64; 2], n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_rect_mesh(dims, n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn square_with_hole(outer: f64, inner: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_square_with_hole(outer, inner, n).map_err(to_py)?,
        })
    }

    /// Mesh of a domain spec given as JSON, at level `n`.
    #[staticmethod]
    fn from_domain(domain_json: &str, n: usize) -> PyResult<Self> {
        let spec: DomainSpec = serde_json::from_str(domain_json).map_err(json_err)?;
        Ok(Self {
            inner: spec.mesh(n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::import_mesh(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        mesh::export_mesh(&self.inner, path).map_err(to_py)
    }

    fn refine(&self) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::refine_uniform(&self.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.inner.dim();
        self.inner.vertices().iter().map(|v| v[..d].to_vec()).collect()
    }

    fn cells(&self) -> Vec<Vec<usize>> {
        self.inner.cells().map(|c| c.to_vec()).collect()
    }

    fn diameter(&self) -> f64 {
        mesh::diameter(&self.inner)
    }

    fn max_edge_length(&self) -> f64 {
        self.inner.max_edge_length()
    }

    /// `(d_D, d_N)`: dimensions of the harmonic Dirichlet and Neumann fields.
    fn harmonic_dims(&self) -> (usize, usize) {
        self.inner.topological_harmonic_dims()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(dim={}, vertices={}, edges={}, cells={})",
            self.inner.dim(),
            self.inner.n_vertices(),
            self.inner.n_edges(),
            self.inner.n_cells()
        )
    }
}

/// Piecewise-constant symmetric positive definite material tensor.
#[pyclass(name = "MaterialField", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMaterialField {
    inner: assembly::MaterialField,
}

#[pymethods]
impl PyMaterialField {
    #[staticmethod]
    fn identity(mesh: &PyMesh) -> Self {
        Self {
            inner: assembly::MaterialField::identity(mesh.inner.dim(), mesh.inner.n_cells()),
        }
    }

    #[staticmethod]
    fn scalar(mesh: &PyMesh, value: f64) -> PyResult<Self> {
        Ok(Self {
            inner: assembly::MaterialField::scalar(mesh.inner.dim(), mesh.inner.n_cells(), value).map_err(to_py)?,
        })
    }

    /// The same matrix on every cell.
    #[staticmethod]
    fn constant(mesh: &PyMesh, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: assembly::MaterialField::constant(mesh.inner.n_cells(), &rows).map_err(to_py)?,
        })
    }

    /// Material for `mesh` from an epsilon spec given as JSON.
    #[staticmethod]
    fn from_spec(spec_json: &str, mesh: &PyMesh) -> PyResult<Self> {
        let spec: EpsilonSpec = serde_json::from_str(spec_json).map_err(json_err)?;
        Ok(Self {
            inner: spec.field(&mesh.inner).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: assembly::MaterialField::load(path, dim).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    fn is_identity(&self) -> bool {
        self.inner.is_identity()
    }

    /// `(eps_lower, eps_upper, eps_hat)`.
    fn bounds(&self) -> (f64, f64, f64) {
        let b = assembly::eps_bounds(&self.inner);
        (b.eps_lower, b.eps_upper, b.eps_hat)
    }
}

fn material(mesh: &PyMesh, eps: Option<&PyMaterialField>) -> assembly::MaterialField {
    eps.map(|e| e.inner.clone())
        .unwrap_or_else(|| assembly::MaterialField::identity(mesh.inner.dim(), mesh.inner.n_cells()))
}

/// Eigenvalues of the P1 pencil with vanishing (Dirichlet) boundary values.
#[pyfunction]
#[pyo3(signature = (mesh, eps=None))]
fn dirichlet_eigenvalues(py: Python<'_>, mesh: &PyMesh, eps: Option<&PyMaterialField>) -> PyResult<Vec<f64>> {
    let eps = material(mesh, eps);
    py.detach(|| Ok(eigenvalues_gsym(&assemble_p1(&mesh.inner, &eps, BoundaryCondition::Essential)?)?.values))
        .map_err(to_py)
}

/// Eigenvalues of the P1 pencil without boundary constraint; the first is zero.
#[pyfunction]
#[pyo3(signature = (mesh, eps=None))]
fn neumann_eigenvalues(py: Python<'_>, mesh: &PyMesh, eps: Option<&PyMaterialField>) -> PyResult<Vec<f64>> {
    let eps = material(mesh, eps);
    py.detach(|| Ok(eigenvalues_gsym(&assemble_p1(&mesh.inner, &eps, BoundaryCondition::Natural)?)?.values))
        .map_err(to_py)
}

/// Edge-element Maxwell pencil: kernel dimension, expected kernel dimension
/// and the nonzero eigenvalues.
#[pyfunction]
#[pyo3(signature = (mesh, eps=None, trace="tangential"))]
fn maxwell_eigenvalues<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    eps: Option<&PyMaterialField>,
    trace: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let bc = self::trace(trace)?.edge_bc();
    let eps = material(mesh, eps);
    let (split, values) = py
        .detach(|| -> maxlab::Result<_> {
            let r = eigenvalues_gsym(&assemble_nedelec(&mesh.inner, &eps, bc)?)?;
            let split = split_kernel(&r, assembly::discrete_gradient(&mesh.inner, bc).rank())?;
            let values = r.values[split.first_nonzero..].to_vec();
            Ok((split, values))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("kernel_dim", split.kernel_dim)?;
    d.set_item("expected_kernel_dim", split.expected_kernel_dim)?;
    d.set_item("values", values)?;
    Ok(d)
}

/// Second-order Richardson extrapolation; returns `(value, observed_order)`.
#[pyfunction]
fn richardson_extrapolate(hs: Vec<f64>, values: Vec<f64>) -> PyResult<(f64, Option<f64>)> {
    let e = spectral::richardson_extrapolate(&hs, &values).map_err(to_py)?;
    Ok((e.value, e.observed_order))
}

/// Full constants report as a JSON string.
#[pyfunction]
#[pyo3(signature = (domain_json, levels, epsilon_json=None))]
fn constants_report(py: Python<'_>, domain_json: &str, levels: Vec<usize>, epsilon_json: Option<&str>) -> PyResult<String> {
    let domain: DomainSpec = serde_json::from_str(domain_json).map_err(json_err)?;
    let eps: EpsilonSpec = match epsilon_json {
        Some(s) => serde_json::from_str(s).map_err(json_err)?,
        None => EpsilonSpec::Identity,
    };
    let report = py
        .detach(|| constants::constants_report(&domain, &eps, &levels))
        .map_err(to_py)?;
    serde_json::to_string_pretty(&report).map_err(json_err)
}

/// Run a batch configuration; returns `(report_json, exit_code)`.
#[pyfunction]
#[pyo3(signature = (config_json, max_dofs=cli::DEFAULT_MAX_DOFS))]
fn run_config(py: Python<'_>, config_json: &str, max_dofs: usize) -> PyResult<(String, i32)> {
    let config = RunConfig::from_json(config_json).map_err(to_py)?;
    let report = py.detach(|| cli::execute(&config, max_dofs)).map_err(to_py)?;
    Ok((report.to_json().map_err(to_py)?, report.exit_code()))
}

/// Dry-run diagnostics as `(severity, message)` pairs.
#[pyfunction]
#[pyo3(signature = (config_json, max_dofs=cli::DEFAULT_MAX_DOFS))]
fn validate_config(config_json: &str, max_dofs: usize) -> PyResult<Vec<(String, String)>> {
    let config = RunConfig::from_json(config_json).map_err(to_py)?;
    Ok(cli::validate(&config, max_dofs)
        .into_iter()
        .map(|d| {
            let s = if d.severity == Severity::Error { "error" } else { "warning" };
            (s.to_owned(), d.message)
        })
        .collect())
}

/// Discrete Helmholtz decomposition on one mesh, material and trace condition.
#[pyclass(name = "Decomposer", frozen)]
struct PyDecomposer {
    inner: helmholtz::Decomposer,
}

#[pymethods]
impl PyDecomposer {
    #[new]
    #[pyo3(signature = (mesh, eps=None, trace="tangential"))]
    fn new(py: Python<'_>, mesh: &PyMesh, eps: Option<&PyMaterialField>, trace: &str) -> PyResult<Self> {
        let bc = self::trace(trace)?;
        let eps = material(mesh, eps);
        let inner = py.detach(|| helmholtz::Decomposer::new(&mesh.inner, &eps, bc)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.n_dofs()
    }

    #[getter]
    fn harmonic_dim(&self) -> usize {
        self.inner.harmonic_basis().len()
    }

    fn decompose<'py>(&self, py: Python<'py>, field: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let d = self.inner.decompose(&field).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("gradient", d.gradient)?;
        out.set_item("potential", d.potential)?;
        out.set_item("harmonic", d.harmonic)?;
        out.set_item("solenoidal", d.solenoidal)?;
        out.set_item("reconstruction_error", d.reconstruction_error)?;
        out.set_item("orthogonality_error", d.orthogonality_error)?;
        Ok(out)
    }

    /// Worst residuals over `count` seeded random fields:
    /// `(max_reconstruction_error, max_orthogonality_error)`.
    fn property_suite(&self, py: Python<'_>, count: usize, seed: u64) -> PyResult<(f64, f64)> {
        let s = py
            .detach(|| helmholtz::property_suite(&self.inner, count, seed))
            .map_err(to_py)?;
        Ok((s.max_reconstruction_error, s.max_orthogonality_error))
    }
}

#[pymodule]
#[pyo3(name = "maxlab")]
fn maxlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyMaterialField>()?;
    m.add_class::<PyDecomposer>()?;
    m.add_function(wrap_pyfunction!(dirichlet_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(neumann_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(maxwell_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(richardson_extrapolate, m)?)?;
    m.add_function(wrap_pyfunction!(constants_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    Ok(())
}
