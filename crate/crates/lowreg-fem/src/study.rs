//! Convergence-study orchestration: mesh sequences, operator dispatch, EOC
//! computation, effectivity reporting, and CSV/JSON/VTK output.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::error::FemError;
use crate::fields::{get_field, AnalyticField, FieldParams, VectorField};
use crate::geometry;
use crate::interpolation::{
    best_approximation_l2, canonical_interpolate, n_global_dofs, quasi_interpolate, FeFunction,
    Space, SpaceFamily,
};
use crate::maxwell::{
    assemble_nitsche, assemble_strong, maxwell_errors, solve, CoefficientPartition,
};
use crate::mesh::{build_domain, SimplicialMesh};
use crate::norms::{
    cell_error_table_from_ctx, check_q, check_r, l2_error_cell, BoundContext,
};
use crate::vtk::write_vtk;

fn default_n0() -> usize {
    1
}
fn default_q() -> f64 {
    2.0
}
fn default_eta0() -> f64 {
    10.0
}
fn default_family() -> String {
    "nedelec0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub domain: String,
    #[serde(default = "default_n0")]
    pub n0: usize,
    pub levels: usize,
    #[serde(default = "default_family")]
    pub family: String,
    pub operator: String,
    pub field: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub r: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_eta0")]
    pub eta0: f64,
    /// material coefficients (Maxwell operators); uniform nu = kappa = 1
    /// when omitted
    #[serde(default)]
    pub coefficients: Option<CoefficientPartition>,
    /// pair-rule subdivision depth override for the fractional seminorms
    /// (0 selects the dimension-dependent default)
    #[serde(default)]
    pub pair_level: usize,
    #[serde(default)]
    pub out_dir: Option<String>,
    /// 0 keeps the global thread pool
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub vtk: bool,
}

pub const OPERATORS: &[&str] = &[
    "canonical",
    "quasi",
    "quasi_zero_boundary",
    "best_l2",
    "maxwell_strong",
    "maxwell_nitsche",
];

impl StudyConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, FemError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn family(&self) -> Result<SpaceFamily, FemError> {
        match self.family.as_str() {
            "nedelec0" => Ok(SpaceFamily::Nedelec0),
            "rt0" => Ok(SpaceFamily::RT0),
            other => Err(FemError::InvalidParameter(format!(
                "unknown element family '{other}' (expected nedelec0 or rt0)"
            ))),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), FemError> {
        if self.levels < 2 {
            return Err(FemError::InvalidParameter(format!(
                "levels = {} must be at least 2",
                self.levels
            )));
        }
        check_r(self.r)?;
        check_q(dim, self.q)?;
        self.family()?;
        if !OPERATORS.contains(&self.operator.as_str()) {
            return Err(FemError::InvalidParameter(format!(
                "unknown operator '{}' (expected one of {})",
                self.operator,
                OPERATORS.join(", ")
            )));
        }
        if self.operator.starts_with("maxwell") && self.family.as_str() != "nedelec0" {
            return Err(FemError::InvalidParameter(
                "maxwell operators require the nedelec0 family".into(),
            ));
        }
        Ok(())
    }
}

/// Experimental order of convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Eoc {
    Slope(f64),
    /// some used level had exactly zero error (field in the space)
    #[serde(serialize_with = "serialize_exact")]
    Exact,
}

fn serialize_exact<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("exact")
}

impl std::fmt::Display for Eoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eoc::Slope(v) => write!(f, "{v:.6}"),
            Eoc::Exact => write!(f, "exact"),
        }
    }
}

/// Least-squares slope of log e against log h over the last min(3, L)
/// levels; zero error at any used level yields the `exact` sentinel.
pub fn compute_eoc(errors: &[f64], hs: &[f64]) -> Result<Eoc, FemError> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(FemError::InvalidParameter(
            "EOC needs at least two (error, h) pairs".into(),
        ));
    }
    let m = errors.len().min(3);
    let errors = &errors[errors.len() - m..];
    let hs = &hs[hs.len() - m..];
    if errors.iter().any(|&e| e <= 0.0) {
        return Ok(Eoc::Exact);
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = m as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    Ok(Eoc::Slope(sxy / sxx))
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub h_max: f64,
    pub ndof: usize,
    pub err_l2: f64,
    pub err_hcurl: Option<f64>,
    pub bound_rhs: f64,
    pub effectivity_global: f64,
    pub effectivity_cell_max: f64,
    pub cg_iterations: Option<usize>,
    pub wall_seconds: f64,
    /// incremental EOC against the previous level
    pub eoc: Option<Eoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub levels: Vec<LevelReport>,
    /// least-squares L2-error slope over the last min(3, L) levels
    pub eoc_l2: Eoc,
    pub eoc_hcurl: Option<Eoc>,
}

impl StudyReport {
    /// CSV with one row per level; absent quantities are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "level,h_max,ndof,err_l2,err_hcurl,bound_rhs,effectivity_global,effectivity_cell_max,eoc\n",
        );
        for l in &self.levels {
            let hcurl = l
                .err_hcurl
                .map(|v| format!("{v:.12e}"))
                .unwrap_or_default();
            let eoc = l.eoc.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.12e},{},{:.12e},{},{:.12e},{:.12e},{:.12e},{}\n",
                l.level,
                l.h_max,
                l.ndof,
                l.err_l2,
                hcurl,
                l.bound_rhs,
                l.effectivity_global,
                l.effectivity_cell_max,
                eoc
            ));
        }
        out
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<(), FemError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), json)?;
        Ok(())
    }
}

struct LevelResult {
    err_l2: f64,
    err_hcurl: Option<f64>,
    bound_rhs: f64,
    effectivity_global: f64,
    effectivity_cell_max: f64,
    cg_iterations: Option<usize>,
    solution: FeFunction,
}

fn run_level(
    mesh: &Arc<SimplicialMesh>,
    config: &StudyConfig,
    field: &AnalyticField,
) -> Result<LevelResult, FemError> {
    let family = config.family()?;
    let (solution, cg_iterations, err_hcurl) = match config.operator.as_str() {
        "canonical" => (
            canonical_interpolate(mesh, Space { family, zero_boundary: false }, field)?,
            None,
            None,
        ),
        "quasi" => (
            quasi_interpolate(mesh, Space { family, zero_boundary: false }, field)?,
            None,
            None,
        ),
        "quasi_zero_boundary" => (
            quasi_interpolate(mesh, Space { family, zero_boundary: true }, field)?,
            None,
            None,
        ),
        "best_l2" => (
            best_approximation_l2(mesh, Space { family, zero_boundary: false }, field)?,
            None,
            None,
        ),
        op @ ("maxwell_strong" | "maxwell_nitsche") => {
            if !field.has_curl() || field.curl_curl([0.0; 3]).is_none() {
                return Err(FemError::InvalidParameter(format!(
                    "field '{}' has no curl-curl evaluator needed by {op}",
                    field.name
                )));
            }
            let coeffs = match &config.coefficients {
                Some(c) => c.clone(),
                None => CoefficientPartition::uniform(1.0, 1.0)?,
            };
            // manufactured source for the exact solution `field`; uniform
            // coefficients are read off at the origin
            let (nu, kappa) = coeffs.lookup([0.0, 0.0, 0.0]).unwrap_or((1.0, 1.0));
            let af = field.clone();
            let f = crate::fields::ClosureField::new(3, move |x| {
                geometry::axpy(kappa, af.curl_curl(x).unwrap(), geometry::scale(nu, af.eval(x)))
            });
            let system = if config.operator == "maxwell_strong" {
                assemble_strong(mesh, &coeffs, &f)?
            } else {
                assemble_nitsche(mesh, &coeffs, &f, config.eta0)?
            };
            let (sol, iters) = solve(&system, 1e-10)?;
            let errs = maxwell_errors(mesh, &sol, field, &coeffs, &f, config.q)?;
            (sol, Some(iters), Some(errs.hcurl))
        }
        other => {
            return Err(FemError::InvalidParameter(format!(
                "unknown operator '{other}'"
            )))
        }
    };
    let ctx = BoundContext::new(mesh, field, family, config.r, config.q, config.pair_level)?;
    let table = cell_error_table_from_ctx(mesh, field, &solution, family, &ctx)?;
    let err_l2 = table
        .rows
        .iter()
        .map(|r| r.lhs * r.lhs)
        .sum::<f64>()
        .max(0.0)
        .sqrt();
    let bound_rhs = ctx.global_rhs(mesh);
    let effectivity_global = if bound_rhs > 0.0 {
        err_l2 / bound_rhs
    } else {
        0.0
    };
    Ok(LevelResult {
        err_l2,
        err_hcurl,
        bound_rhs,
        effectivity_global,
        effectivity_cell_max: table.max_effectivity(),
        cg_iterations,
        solution,
    })
}

/// Run the configured convergence study over a uniformly refined mesh
/// sequence. Deterministic for a fixed config, independent of thread count.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport, FemError> {
    let mesh0 = build_domain(&config.domain, config.n0)?;
    config.validate(mesh0.dim)?;
    let params = FieldParams {
        lambda: config.lambda,
        dim: mesh0.dim,
    };
    let field = get_field(&config.field, &params)?;
    let out_dir = config.out_dir.as_ref().map(std::path::PathBuf::from);

    let body = || -> Result<StudyReport, FemError> {
        let mut mesh = Arc::new(mesh0.clone());
        let mut levels: Vec<LevelReport> = Vec::new();
        let mut errs = Vec::new();
        let mut hcurl_errs = Vec::new();
        let mut hs = Vec::new();
        for level in 0..config.levels {
            if level > 0 {
                mesh = Arc::new(mesh.uniform_refine());
            }
            let start = Instant::now();
            let result = run_level(&mesh, config, &field)
                .map_err(|e| e.with_level_context(format!("level {level}")))?;
            let wall_seconds = start.elapsed().as_secs_f64();
            let h_max = mesh.h_cell.iter().cloned().fold(0.0, f64::max);
            if let Some(prev) = hs.last() {
                if h_max >= *prev {
                    return Err(FemError::InvalidParameter(format!(
                        "mesh levels not nested in h ({h_max} after {prev})"
                    )));
                }
            }
            hs.push(h_max);
            errs.push(result.err_l2);
            if let Some(hc) = result.err_hcurl {
                hcurl_errs.push(hc);
            }
            let eoc = if level > 0 {
                Some(compute_eoc(&errs[level - 1..], &hs[level - 1..])?)
            } else {
                None
            };
            if config.vtk {
                if let Some(dir) = &out_dir {
                    std::fs::create_dir_all(dir)?;
                    let vectors: Vec<_> = (0..mesh.n_cells())
                        .map(|k| {
                            let c = centroid(&mesh.cell_points(k));
                            result.solution.eval_in_cell(k, c)
                        })
                        .collect();
                    write_vtk(
                        &dir.join(format!("level_{level}.vtk")),
                        &mesh,
                        Some(("solution", &vectors)),
                    )?;
                }
            }
            levels.push(LevelReport {
                level,
                h_max,
                ndof: n_global_dofs(&mesh, config.family()?),
                err_l2: result.err_l2,
                err_hcurl: result.err_hcurl,
                bound_rhs: result.bound_rhs,
                effectivity_global: result.effectivity_global,
                effectivity_cell_max: result.effectivity_cell_max,
                cg_iterations: result.cg_iterations,
                wall_seconds,
                eoc,
            });
        }
        let eoc_l2 = compute_eoc(&errs, &hs)?;
        let eoc_hcurl = if hcurl_errs.len() == hs.len() {
            Some(compute_eoc(&hcurl_errs, &hs)?)
        } else {
            None
        };
        Ok(StudyReport {
            config: config.clone(),
            levels,
            eoc_l2,
            eoc_hcurl,
        })
    };

    let report = if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| FemError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(body)?
    } else {
        body()?
    };
    if let Some(dir) = &out_dir {
        report.write_outputs(dir)?;
    }
    Ok(report)
}

fn centroid(pts: &[geometry::Point]) -> geometry::Point {
    let mut c = [0.0; 3];
    for p in pts {
        c = geometry::add(c, *p);
    }
    geometry::scale(1.0 / pts.len() as f64, c)
}

/// Best-approximation error (for cross-operator comparisons in tests).
pub fn global_l2_error(
    mesh: &SimplicialMesh,
    field: &AnalyticField,
    fe: &(dyn VectorField + Sync),
) -> f64 {
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        let e = l2_error_cell(mesh, field, fe, k);
        s += e * e;
    }
    s.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> StudyConfig {
        StudyConfig {
            domain: "cube".into(),
            n0: 1,
            levels: 2,
            family: "nedelec0".into(),
            operator: "canonical".into(),
            field: "smooth_trig".into(),
            lambda: None,
            r: 0.5,
            q: 2.0,
            eta0: 10.0,
            coefficients: None,
            pair_level: 1,
            out_dir: None,
            threads: 0,
            vtk: false,
        }
    }

    #[test]
    fn eoc_examples() {
        match compute_eoc(&[0.1, 0.05], &[1.0, 0.5]).unwrap() {
            Eoc::Slope(s) => assert!((s - 1.0).abs() < 1e-12, "{s}"),
            _ => panic!("expected slope"),
        }
        let hs = [1.0, 0.5, 0.25, 0.125];
        let errs: Vec<f64> = hs.iter().map(|&h: &f64| 0.8 * h.powf(0.3)).collect();
        match compute_eoc(&errs, &hs).unwrap() {
            Eoc::Slope(s) => assert!((s - 0.3).abs() < 1e-12, "{s}"),
            _ => panic!("expected slope"),
        }
        assert_eq!(compute_eoc(&[0.1, 0.0], &[1.0, 0.5]).unwrap(), Eoc::Exact);
        assert!(compute_eoc(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = base_config();
        c.levels = 1;
        assert!(c.validate(3).is_err());
        let mut c = base_config();
        c.r = 1.0;
        assert!(c.validate(3).is_err());
        let mut c = base_config();
        c.q = 1.0;
        assert!(c.validate(3).is_err());
        let mut c = base_config();
        c.operator = "frobnicate".into();
        assert!(c.validate(3).is_err());
        let mut c = base_config();
        c.family = "rt0".into();
        c.operator = "maxwell_strong".into();
        assert!(c.validate(3).is_err());
        assert!(base_config().validate(3).is_ok());
        let mut c = base_config();
        c.domain = "nowhere".into();
        assert!(run_study(&c).is_err());
    }

    #[test]
    fn canonical_smooth_study_first_order() {
        let mut c = base_config();
        c.levels = 4;
        let report = run_study(&c).unwrap();
        match report.eoc_l2 {
            Eoc::Slope(s) => assert!((0.9..=1.1).contains(&s), "{s}"),
            _ => panic!("expected slope"),
        }
        // h strictly nested, errors positive
        for w in report.levels.windows(2) {
            assert!(w[1].h_max < w[0].h_max);
        }
        assert!(report.levels.iter().all(|l| l.err_l2 > 0.0));
        assert!(report.levels.iter().all(|l| l.bound_rhs > 0.0));
    }

    #[test]
    fn best_l2_beats_quasi() {
        let mut cq = base_config();
        cq.operator = "quasi".into();
        let mut cb = base_config();
        cb.operator = "best_l2".into();
        let rq = run_study(&cq).unwrap();
        let rb = run_study(&cb).unwrap();
        for (a, b) in rb.levels.iter().zip(&rq.levels) {
            assert!(
                a.err_l2 <= b.err_l2 * (1.0 + 1e-9),
                "best {} vs quasi {}",
                a.err_l2,
                b.err_l2
            );
        }
    }

    #[test]
    fn csv_and_json_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = base_config();
        c.out_dir = Some(dir.path().to_str().unwrap().to_string());
        c.vtk = true;
        let report = run_study(&c).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv.starts_with(
            "level,h_max,ndof,err_l2,err_hcurl,bound_rhs,effectivity_global,effectivity_cell_max,eoc\n"
        ));
        assert_eq!(csv.lines().count(), 1 + c.levels);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["levels"].as_array().unwrap().len(), c.levels);
        assert!(dir.path().join("level_0.vtk").exists());
        assert!(dir.path().join("level_1.vtk").exists());
        assert_eq!(report.to_csv(), csv);
    }

    #[test]
    fn reruns_are_bitwise_identical_across_thread_counts() {
        let mut c1 = base_config();
        c1.threads = 1;
        let mut c2 = base_config();
        c2.threads = 2;
        let r1 = run_study(&c1).unwrap();
        let r2 = run_study(&c2).unwrap();
        // thread count is part of the config, so compare data rows only
        let rows = |r: &StudyReport| {
            r.levels
                .iter()
                .map(|l| {
                    format!(
                        "{:.17e},{:.17e},{:.17e},{:.17e}",
                        l.err_l2, l.bound_rhs, l.effectivity_global, l.effectivity_cell_max
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(rows(&r1), rows(&r2));
    }

    #[test]
    fn maxwell_study_reports_hcurl_and_iterations() {
        let mut c = base_config();
        c.operator = "maxwell_strong".into();
        let report = run_study(&c).unwrap();
        for l in &report.levels {
            assert!(l.err_hcurl.unwrap() > 0.0);
            assert!(l.cg_iterations.unwrap() > 0);
        }
        assert!(report.eoc_hcurl.is_some());
    }

    #[test]
    fn config_json_roundtrip_with_defaults() {
        let text = r#"{
            "domain": "lprism",
            "levels": 4,
            "operator": "quasi_zero_boundary",
            "field": "grad_power_line",
            "lambda": 0.3,
            "r": 0.28
        }"#;
        let c: StudyConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.n0, 1);
        assert_eq!(c.q, 2.0);
        assert_eq!(c.eta0, 10.0);
        assert_eq!(c.family, "nedelec0");
        assert!(c.validate(3).is_ok());
    }
}
