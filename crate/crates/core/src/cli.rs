//! Configuration-driven batch runner behind the `maxlab` binary.
//!
//! Exit codes: 0 all checks satisfied, 2 at least one gating check failed,
//! 3 computation error, 4 configuration or mesh error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::assembly::{EpsilonSpec, TraceCondition};
use crate::constants::{check_levels, constants_report, interlacing_table, ConstantsReport, InterlacingRow};
use crate::error::{Error, ErrorKind, Result};
use crate::helmholtz::{property_suite, verify_irrotational_estimate, Decomposer};
use crate::mesh::{import_mesh, DomainSpec};

const MODULE: &str = "cli";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 4;

pub const DEFAULT_MAX_DOFS: usize = 5000;
/// Fraction of the dof budget above which `validate` warns.
pub const BUDGET_WARNING_FRACTION: f64 = 0.8;
pub const HELMHOLTZ_SEED: u64 = 20_240_601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Constants,
    Helmholtz,
    Interlacing,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn default_epsilon() -> EpsilonSpec {
    EpsilonSpec::Identity
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Constants]
}

fn default_k() -> usize {
    3
}

fn default_fields() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default = "default_epsilon")]
    pub epsilon: EpsilonSpec,
    pub levels: Vec<usize>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_k")]
    pub interlacing_k: usize,
    /// Random fields per trace condition in the Helmholtz task.
    #[serde(default = "default_fields")]
    pub helmholtz_fields: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

fn config_error(op: &'static str, msg: impl Into<String>) -> Error {
    Error::new(MODULE, op, ErrorKind::Config(msg.into()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error("parse_config", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| config_error("parse_config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that need no mesh.
    pub fn check(&self) -> Result<()> {
        const OP: &str = "check_config";
        self.domain.validate()?;
        check_levels(OP, &self.levels).map_err(|e| Error::new(MODULE, OP, e.kind))?;
        if self.tasks.is_empty() {
            return Err(config_error(OP, "tasks must not be empty"));
        }
        if let (Some(d), Some(e)) = (self.domain.dim(), self.epsilon.dim()) {
            if d != e {
                return Err(config_error(OP, format!("epsilon has dimension {e}, domain has dimension {d}")));
            }
        }
        Ok(())
    }

    fn has(&self, t: Task) -> bool {
        self.tasks.contains(&t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

/// Vertex and edge counts of the mesh at level `n`, without assembling.
pub fn estimate_counts(domain: &DomainSpec, n: usize) -> Result<(usize, usize)> {
    Ok(match domain {
        DomainSpec::Box3d { .. } => ((n + 1).pow(3), 3 * n * (n + 1).pow(2) + 3 * n * n * (n + 1) + n.pow(3)),
        DomainSpec::Rect2d { .. } => ((n + 1).pow(2), 2 * n * (n + 1) + n * n),
        DomainSpec::SquareWithHole2d { outer, inner } => {
            let m = (inner / outer * n as f64).round() as usize;
            let removed_vertices = m.saturating_sub(1).pow(2);
            let removed_edges = m * m + 2 * m * m.saturating_sub(1);
            ((n + 1).pow(2) - removed_vertices, 2 * n * (n + 1) + n * n - removed_edges)
        }
        DomainSpec::Imported { path, .. } => {
            let mesh = import_mesh(path)?;
            let (mut v, mut e, mut f, mut c) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_facets(), mesh.n_cells());
            for _ in 0..n {
                if mesh.dim() == 2 {
                    (v, e, c) = (v + e, 2 * e + 3 * c, 4 * c);
                } else {
                    (v, e, f, c) = (v + e, 2 * e + 3 * f + c, 4 * f + 8 * c, 8 * c);
                }
            }
            (v, e)
        }
    })
}

/// Dry run: configuration problems and per-level size estimates against
/// the dense-solver budget. Returns no diagnostics for a small valid config.
pub fn validate(config: &RunConfig, max_dofs: usize) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |m: String| Diagnostic {
        severity: Severity::Error,
        message: m,
    };
    if let Err(e) = config.check() {
        out.push(error(e.to_string()));
    }
    if let DomainSpec::Imported { path, .. } = &config.domain {
        if !Path::new(path).exists() {
            out.push(error(format!("mesh file not found: {path}")));
            return out;
        }
    }
    for &n in &config.levels {
        match estimate_counts(&config.domain, n) {
            Ok((_, edges)) if edges > max_dofs => out.push(error(format!(
                "level {n}: ~{edges} edge dofs exceed the dense-solver budget of {max_dofs}"
            ))),
            Ok((_, edges)) if edges as f64 >= BUDGET_WARNING_FRACTION * max_dofs as f64 => out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("level {n}: ~{edges} edge dofs are close to the dense-solver budget of {max_dofs}"),
            }),
            Ok(_) => {}
            Err(e) => out.push(error(format!("level {n}: {e}"))),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

impl HelmholtzCheck {
    fn new(name: String, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            satisfied: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub constants: Option<ConstantsReport>,
    /// Present only when the constants task did not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSpec>,
    pub tasks: Vec<Task>,
    pub helmholtz_checks: Vec<HelmholtzCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interlacing: Option<Vec<InterlacingRow>>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::new(MODULE, "write_report", e))?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed_checks(&self) -> usize {
        self.constants.as_ref().map_or(0, |c| c.gating_failures())
            + self.helmholtz_checks.iter().filter(|c| !c.satisfied).count()
            + self.interlacing.iter().flatten().filter(|r| !r.holds).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_checks() == 0 {
            EXIT_OK
        } else {
            EXIT_CHECKS_FAILED
        }
    }
}

fn helmholtz_checks(config: &RunConfig) -> Result<Vec<HelmholtzCheck>> {
    let n = *config.levels.last().expect("levels checked");
    let mesh = config.domain.mesh(n)?;
    let eps = config.epsilon.field(&mesh)?;
    let mut out = Vec::new();
    for bc in [TraceCondition::Tangential, TraceCondition::Normal] {
        let name = bc.name();
        let dec = Decomposer::new(&mesh, &eps, bc)?;
        let s = property_suite(&dec, config.helmholtz_fields, HELMHOLTZ_SEED)?;
        out.push(HelmholtzCheck::new(format!("reconstruction ({name})"), s.max_reconstruction_error, 1e-12));
        out.push(HelmholtzCheck::new(format!("orthogonality ({name})"), s.max_orthogonality_error, 1e-10));
        let est = verify_irrotational_estimate(&mesh, &eps, bc)?;
        out.push(HelmholtzCheck::new(
            format!("irrotational estimate ({name}): ratio / (eps_lower * c)"),
            est.ratio / est.rhs,
            1.0 + 1e-9,
        ));
    }
    Ok(out)
}

/// Execute the configured tasks on the current rayon pool.
pub fn execute(config: &RunConfig, max_dofs: usize) -> Result<RunReport> {
    config.check()?;
    for d in validate(config, max_dofs) {
        if d.severity == Severity::Error {
            return Err(config_error("run", d.message));
        }
    }
    let constants = if config.has(Task::Constants) {
        Some(constants_report(&config.domain, &config.epsilon, &config.levels)?)
    } else {
        None
    };
    let helmholtz = if config.has(Task::Helmholtz) { helmholtz_checks(config)? } else { Vec::new() };
    let interlacing = if config.has(Task::Interlacing) {
        Some(interlacing_table(&config.domain, config.interlacing_k, &config.levels)?)
    } else {
        None
    };
    let standalone = constants.is_none();
    Ok(RunReport {
        constants,
        domain: standalone.then(|| config.domain.clone()),
        epsilon: standalone.then(|| config.epsilon.clone()),
        tasks: config.tasks.clone(),
        helmholtz_checks: helmholtz,
        interlacing,
    })
}

fn write_outputs(report: &RunReport, json: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    if let Some(path) = json {
        fs::write(path, report.to_json()?).map_err(|e| Error::new(MODULE, "write_report", e))?;
    }
    if let Some(path) = csv {
        let c = report
            .constants
            .as_ref()
            .ok_or_else(|| config_error("write_report", "CSV output needs the constants task"))?;
        let file = fs::File::create(path).map_err(|e| Error::new(MODULE, "write_report", e))?;
        c.write_levels_csv(file)?;
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "maxlab", version, about = "Poincaré and Maxwell constants from finite-element spectra")]
pub struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write the JSON report here (overrides the config).
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Write the per-level CSV here (overrides the config).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Edge-dof budget of the dense eigensolver.
    #[arg(long, default_value_t = DEFAULT_MAX_DOFS)]
    pub max_dofs: usize,
    /// Only validate the configuration and print diagnostics.
    #[arg(long)]
    pub validate: bool,
    /// Refinement levels computed concurrently.
    #[arg(long, env = "MAXLAB_JOBS")]
    pub jobs: Option<usize>,
}

fn run_args(args: &Args) -> Result<i32> {
    let config = RunConfig::load(&args.config)?;
    if args.validate {
        let diags = validate(&config, args.max_dofs);
        for d in &diags {
            println!("{}: {}", if d.severity == Severity::Error { "error" } else { "warning" }, d.message);
        }
        let failed = diags.iter().any(|d| d.severity == Severity::Error);
        return Ok(if failed { EXIT_CONFIG } else { EXIT_OK });
    }
    let jobs = args.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_error("run", e.to_string()))?;
    let report = pool.install(|| execute(&config, args.max_dofs))?;
    let json = args.out_json.as_deref().or(config.output.json.as_deref());
    let csv = args.out_csv.as_deref().or(config.output.csv.as_deref());
    write_outputs(&report, json, csv)?;
    if let Some(c) = &report.constants {
        for k in &c.checks {
            let status = serde_json::to_value(k.status).ok();
            let status = status.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
            println!("{:<26} {}  (lhs {:.6}, rhs {:.6})", status, k.name, k.lhs, k.rhs);
        }
    }
    for h in &report.helmholtz_checks {
        println!("{:<10} {}  ({:.3e})", if h.satisfied { "pass" } else { "fail" }, h.name, h.value);
    }
    for r in report.interlacing.iter().flatten() {
        println!("{:<10} mu_{} <= lambda_{}  ({:.6} <= {:.6})", if r.holds { "pass" } else { "fail" }, r.n + 1, r.n, r.mu_next, r.lambda);
    }
    Ok(report.exit_code())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_args(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_rect_mesh, build_square_with_hole};

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn edge_count_formulas_match_meshes() {
        for n in 1..4 {
            let m = build_box_mesh([1.0; 3], n).unwrap();
            assert_eq!(estimate_counts(&DomainSpec::unit_cube(), n).unwrap(), (m.n_vertices(), m.n_edges()));
            let m = build_rect_mesh([1.0, 1.0], n).unwrap();
            assert_eq!(estimate_counts(&DomainSpec::unit_square(), n).unwrap(), (m.n_vertices(), m.n_edges()));
        }
        let hole = DomainSpec::SquareWithHole2d { outer: 3.0, inner: 1.0 };
        for n in [3, 6, 9] {
            let m = build_square_with_hole(3.0, 1.0, n).unwrap();
            assert_eq!(estimate_counts(&hole, n).unwrap(), (m.n_vertices(), m.n_edges()));
        }
        assert_eq!(estimate_counts(&DomainSpec::unit_cube(), 8).unwrap().1, 4184);
    }

    #[test]
    fn validate_diagnostics() {
        let small = cfg(r#"{"domain": {"kind": "box3d", "dims": [1, 1, 1]}, "levels": [2, 3]}"#);
        assert!(validate(&small, DEFAULT_MAX_DOFS).is_empty());
        let big = cfg(r#"{"domain": {"kind": "box3d", "dims": [1, 1, 1]}, "levels": [8]}"#);
        let d = validate(&big, DEFAULT_MAX_DOFS);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(d[0].message.contains("4184"));
        assert_eq!(validate(&big, 4000)[0].severity, Severity::Error);
        let missing = cfg(r#"{"domain": {"kind": "imported", "path": "/nonexistent/mesh.txt"}, "levels": [0]}"#);
        let d = validate(&missing, DEFAULT_MAX_DOFS);
        assert!(d.iter().any(|x| x.message.contains("not found")));
    }

    #[test]
    fn config_errors() {
        let c = cfg(r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [4, 2]}"#);
        assert_eq!(c.check().unwrap_err().exit_code(), 4);
        let c = cfg(r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [2], "epsilon": {"type": "diag", "entries": [1, 2, 3]}}"#);
        assert_eq!(c.check().unwrap_err().exit_code(), 4);
        let c = cfg(r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [2], "tasks": []}"#);
        assert!(c.check().is_err());
        assert!(RunConfig::from_json(r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [2], "extra": 1}"#).is_err());
        assert!(RunConfig::from_json("{").is_err());
    }

    #[test]
    fn defaults() {
        let c = cfg(r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [2]}"#);
        assert_eq!(c.epsilon, EpsilonSpec::Identity);
        assert_eq!(c.tasks, vec![Task::Constants]);
        assert_eq!((c.interlacing_k, c.helmholtz_fields), (3, 100));
    }
}
