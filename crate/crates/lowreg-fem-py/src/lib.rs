//! Python bindings for the lowreg-fem library: mesh construction, the
//! analytic field catalog, interpolation operators, error/bound norms, the
//! curl-curl solver, and the study harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::sync::Arc;

use lowreg_fem::fields::{get_field, AnalyticField, FieldParams, FIELD_NAMES};
use lowreg_fem::interpolation::{
    best_approximation_l2, canonical_interpolate, n_global_dofs, quasi_interpolate, FeFunction,
    Space, SpaceFamily,
};
use lowreg_fem::maxwell::{assemble_strong, assemble_nitsche, maxwell_errors, solve,
    CoefficientPartition};
use lowreg_fem::mesh::{build_domain, SimplicialMesh, DOMAIN_NAMES};
use lowreg_fem::norms::{fractional_seminorm, global_bound_rhs, l2_error_cell, Region};
use lowreg_fem::study::{run_study, StudyConfig};
use lowreg_fem::VectorField;

fn err(e: lowreg_fem::FemError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_family(name: &str) -> PyResult<SpaceFamily> {
    match name {
        "nedelec0" => Ok(SpaceFamily::Nedelec0),
        "rt0" => Ok(SpaceFamily::RT0),
        other => Err(PyValueError::new_err(format!(
            "unknown family '{other}' (expected nedelec0 or rt0)"
        ))),
    }
}

/// Simplicial mesh of a built-in domain.
#[pyclass(name = "Mesh")]
struct PyMesh {
    inner: Arc<SimplicialMesh>,
}

#[pymethods]
impl PyMesh {
    /// Build a catalog domain ("cube", "square", "lshape", "lprism",
    /// "fichera") at base resolution n.
    #[new]
    #[pyo3(signature = (domain, n=1))]
    fn new(domain: &str, n: usize) -> PyResult<Self> {
        Ok(PyMesh {
            inner: Arc::new(build_domain(domain, n).map_err(err)?),
        })
    }

    fn refine(&self) -> PyMesh {
        PyMesh {
            inner: Arc::new(self.inner.uniform_refine()),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.vertices.len()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.edges.len()
    }

    #[getter]
    fn n_faces(&self) -> usize {
        self.inner.faces.len()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.inner.h_cell.iter().cloned().fold(0.0, f64::max)
    }

    fn n_dofs(&self, family: &str) -> PyResult<usize> {
        Ok(n_global_dofs(&self.inner, parse_family(family)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(dim={}, cells={}, vertices={})",
            self.inner.dim,
            self.inner.n_cells(),
            self.inner.vertices.len()
        )
    }
}

/// Analytic vector field from the catalog.
#[pyclass(name = "Field")]
struct PyField {
    inner: AnalyticField,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (name, lam=None, dim=3))]
    fn new(name: &str, lam: Option<f64>, dim: usize) -> PyResult<Self> {
        let params = FieldParams { lambda: lam, dim };
        Ok(PyField {
            inner: get_field(name, &params).map_err(err)?,
        })
    }

    fn eval(&self, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
        let v = self.inner.eval([x, y, z]);
        (v[0], v[1], v[2])
    }

    fn curl(&self, x: f64, y: f64, z: f64) -> Option<(f64, f64, f64)> {
        self.inner.curl([x, y, z]).map(|v| (v[0], v[1], v[2]))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn r_star(&self) -> f64 {
        self.inner.r_star
    }

    fn __repr__(&self) -> String {
        format!("Field('{}')", self.inner.name)
    }
}

/// Conforming finite element function.
#[pyclass(name = "FeFunction")]
struct PyFeFunction {
    inner: FeFunction,
}

#[pymethods]
impl PyFeFunction {
    fn eval(&self, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
        let v = self.inner.eval([x, y, z]);
        (v[0], v[1], v[2])
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.coeffs.len()
    }
}

#[pyfunction]
fn list_fields() -> Vec<(String, String)> {
    FIELD_NAMES
        .iter()
        .map(|(n, d)| (n.to_string(), d.to_string()))
        .collect()
}

#[pyfunction]
fn list_domains() -> Vec<String> {
    DOMAIN_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Interpolate a catalog field: operator is one of "canonical", "quasi",
/// "quasi_zero_boundary", "best_l2".
#[pyfunction]
#[pyo3(signature = (mesh, field, operator="quasi", family="nedelec0"))]
fn interpolate(
    mesh: &PyMesh,
    field: &PyField,
    operator: &str,
    family: &str,
) -> PyResult<PyFeFunction> {
    let fam = parse_family(family)?;
    let space = match operator {
        "canonical" | "quasi" | "best_l2" => Space { family: fam, zero_boundary: false },
        "quasi_zero_boundary" => Space { family: fam, zero_boundary: true },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown operator '{other}'"
            )))
        }
    };
    let result = match operator {
        "canonical" => canonical_interpolate(&mesh.inner, space, &field.inner),
        "best_l2" => best_approximation_l2(&mesh.inner, space, &field.inner),
        _ => quasi_interpolate(&mesh.inner, space, &field.inner),
    };
    Ok(PyFeFunction {
        inner: result.map_err(err)?,
    })
}

/// Global L2 interpolation error of `fe` against `field`.
#[pyfunction]
fn l2_error(mesh: &PyMesh, field: &PyField, fe: &PyFeFunction) -> f64 {
    let mut s = 0.0;
    for k in 0..mesh.inner.n_cells() {
        let e = l2_error_cell(&mesh.inner, &field.inner, &fe.inner, k);
        s += e * e;
    }
    s.max(0.0).sqrt()
}

/// Sobolev-Slobodeckij seminorm of a catalog field over one cell.
#[pyfunction]
#[pyo3(signature = (mesh, field, r, cell, level=0))]
fn cell_seminorm(mesh: &PyMesh, field: &PyField, r: f64, cell: usize, level: usize) -> PyResult<f64> {
    fractional_seminorm(&mesh.inner, &field.inner, r, Region::Cell(cell), level).map_err(err)
}

/// Global best-approximation bound right-hand side.
#[pyfunction]
#[pyo3(signature = (mesh, field, r, q=2.0, family="nedelec0", level=0))]
fn bound_rhs(
    mesh: &PyMesh,
    field: &PyField,
    r: f64,
    q: f64,
    family: &str,
    level: usize,
) -> PyResult<f64> {
    global_bound_rhs(&mesh.inner, &field.inner, r, q, parse_family(family)?, level).map_err(err)
}

/// Solve the curl-curl problem with a manufactured source so that `field`
/// is the exact solution; returns (solution, L2 error, H(curl) error,
/// CG iterations).
#[pyfunction]
#[pyo3(signature = (mesh, field, bc="strong", eta0=10.0, nu=1.0, kappa=1.0))]
fn solve_maxwell(
    mesh: &PyMesh,
    field: &PyField,
    bc: &str,
    eta0: f64,
    nu: f64,
    kappa: f64,
) -> PyResult<(PyFeFunction, f64, f64, usize)> {
    let coeffs = CoefficientPartition::uniform(nu, kappa).map_err(err)?;
    let af = field.inner.clone();
    if af.curl_curl([0.0; 3]).is_none() {
        return Err(PyValueError::new_err(format!(
            "field '{}' has no curl-curl evaluator",
            af.name
        )));
    }
    let af2 = af.clone();
    let f = lowreg_fem::fields::ClosureField::new(3, move |x| {
        lowreg_fem::geometry::axpy(
            kappa,
            af2.curl_curl(x).unwrap(),
            lowreg_fem::geometry::scale(nu, af2.eval(x)),
        )
    });
    let system = match bc {
        "strong" => assemble_strong(&mesh.inner, &coeffs, &f).map_err(err)?,
        "nitsche" => assemble_nitsche(&mesh.inner, &coeffs, &f, eta0).map_err(err)?,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown bc '{other}' (expected strong or nitsche)"
            )))
        }
    };
    let (sol, iters) = solve(&system, 1e-10).map_err(err)?;
    let errs = maxwell_errors(&mesh.inner, &sol, &field.inner, &coeffs, &f, 2.0).map_err(err)?;
    Ok((PyFeFunction { inner: sol }, errs.l2, errs.hcurl, iters))
}

/// Run a full convergence study from a JSON config string; returns the
/// report as a JSON string.
#[pyfunction]
fn run_study_json(config_json: &str) -> PyResult<String> {
    let config: StudyConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = run_study(&config).map_err(err)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn lowreg_fem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyFeFunction>()?;
    m.add_function(wrap_pyfunction!(list_fields, m)?)?;
    m.add_function(wrap_pyfunction!(list_domains, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(cell_seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(bound_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(solve_maxwell, m)?)?;
    m.add_function(wrap_pyfunction!(run_study_json, m)?)?;
    Ok(())
}
