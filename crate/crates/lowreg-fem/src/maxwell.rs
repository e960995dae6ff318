//! Curl-curl model problem nu A + rot(kappa rot A) = f with homogeneous
//! tangential boundary data, discretized in the lowest-order Nedelec space
//! with either strong boundary conditions or a symmetric Nitsche penalty.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::FemError;
use crate::fields::{AnalyticField, VectorField};
use crate::geometry::{self, Point};
use crate::interpolation::{CellBasis, FeFunction, Space, SpaceFamily};
use crate::mesh::SimplicialMesh;
use crate::norms::check_q;
use crate::quadrature::simplex_rule;
use crate::sparse::{cg_solve, CsrMatrix};

/// Piecewise-constant material coefficients on axis-aligned boxes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subdomain {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub nu: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientPartition {
    pub subdomains: Vec<Subdomain>,
}

impl CoefficientPartition {
    /// Single subdomain covering everything.
    pub fn uniform(nu: f64, kappa: f64) -> Result<Self, FemError> {
        Self::from_boxes(vec![Subdomain {
            lo: [f64::NEG_INFINITY; 3],
            hi: [f64::INFINITY; 3],
            nu,
            kappa,
        }])
    }

    pub fn from_boxes(subdomains: Vec<Subdomain>) -> Result<Self, FemError> {
        if subdomains.is_empty() {
            return Err(FemError::InvalidParameter(
                "coefficient partition has no subdomains".into(),
            ));
        }
        for s in &subdomains {
            if !(s.nu > 0.0) || !(s.kappa > 0.0) {
                return Err(FemError::InvalidParameter(format!(
                    "coefficients must be positive (nu = {}, kappa = {})",
                    s.nu, s.kappa
                )));
            }
        }
        Ok(CoefficientPartition { subdomains })
    }

    /// Coefficients (nu, kappa) at a point; first containing box wins.
    pub fn lookup(&self, x: Point) -> Result<(f64, f64), FemError> {
        for s in &self.subdomains {
            let inside = (0..3).all(|c| x[c] >= s.lo[c] - 1e-12 && x[c] <= s.hi[c] + 1e-12);
            if inside {
                return Ok((s.nu, s.kappa));
            }
        }
        Err(FemError::InvalidParameter(format!(
            "point ({}, {}, {}) not covered by the coefficient partition",
            x[0], x[1], x[2]
        )))
    }

    pub fn nu_min(&self) -> f64 {
        self.subdomains.iter().map(|s| s.nu).fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_min(&self) -> f64 {
        self.subdomains
            .iter()
            .map(|s| s.kappa)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcMode {
    Strong,
    Nitsche(f64),
}

/// Assembled curl-curl system.
pub struct CurlCurlSystem {
    pub mesh: Arc<SimplicialMesh>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// global edge DOF -> system row (usize::MAX for eliminated DOFs)
    pub dof_map: Vec<usize>,
    /// system row -> global edge DOF
    pub free_dofs: Vec<usize>,
    pub bc: BcMode,
    /// per boundary face: the penalty weight lambda_F (kappa of the cell)
    pub lambda_f: Vec<f64>,
}

/// Local element matrix: integral of nu phi_i . phi_j + kappa rot phi_i . rot phi_j.
pub fn element_matrix(mesh: &SimplicialMesh, k: usize, nu: f64, kappa: f64) -> Vec<Vec<f64>> {
    let basis = CellBasis::new(mesh, k, SpaceFamily::Nedelec0);
    let nd = mesh.cell_edges[k].len();
    let rule = simplex_rule(mesh.dim, 5).expect("static degree");
    let pts = mesh.cell_points(k);
    let curls = basis.curls();
    let mut m = vec![vec![0.0; nd]; nd];
    let mut mass = vec![vec![0.0; nd]; nd];
    for i in 0..nd {
        for j in i..nd {
            mass[i][j] = rule.integrate_on(&pts, |x| {
                let phi = basis.eval(x);
                geometry::dot(phi[i], phi[j])
            });
        }
    }
    let vol = geometry::measure(&pts);
    for i in 0..nd {
        for j in i..nd {
            let v = nu * mass[i][j] + kappa * vol * geometry::dot(curls[i], curls[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn centroid(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        c = geometry::add(c, *p);
    }
    geometry::scale(1.0 / pts.len() as f64, c)
}

fn cell_rhs(
    mesh: &SimplicialMesh,
    k: usize,
    f: &(dyn VectorField + Sync),
) -> Vec<f64> {
    let basis = CellBasis::new(mesh, k, SpaceFamily::Nedelec0);
    let nd = mesh.cell_edges[k].len();
    let rule = simplex_rule(mesh.dim, 5).expect("static degree");
    let pts = mesh.cell_points(k);
    (0..nd)
        .map(|i| {
            rule.integrate_on(&pts, |x| {
                let phi = basis.eval(x);
                geometry::dot(f.eval(x), phi[i])
            })
        })
        .collect()
}

/// Strong boundary conditions: boundary-edge DOFs are eliminated.
pub fn assemble_strong(
    mesh: &Arc<SimplicialMesh>,
    coeffs: &CoefficientPartition,
    f: &(dyn VectorField + Sync),
) -> Result<CurlCurlSystem, FemError> {
    assemble(mesh, coeffs, f, BcMode::Strong)
}

/// Symmetric Nitsche boundary penalty: all edge DOFs kept; the consistency
/// term and its transpose are subtracted and the tangential face penalty
/// eta0 lambda_F / h_F is added, with lambda_F = kappa of the adjacent cell.
pub fn assemble_nitsche(
    mesh: &Arc<SimplicialMesh>,
    coeffs: &CoefficientPartition,
    f: &(dyn VectorField + Sync),
    eta0: f64,
) -> Result<CurlCurlSystem, FemError> {
    if !(eta0 > 0.0) {
        return Err(FemError::InvalidParameter(format!(
            "eta0 = {eta0} must be positive"
        )));
    }
    assemble(mesh, coeffs, f, BcMode::Nitsche(eta0))
}

fn assemble(
    mesh: &Arc<SimplicialMesh>,
    coeffs: &CoefficientPartition,
    f: &(dyn VectorField + Sync),
    bc: BcMode,
) -> Result<CurlCurlSystem, FemError> {
    let n_edges = mesh.edges.len();
    let mut dof_map = vec![usize::MAX; n_edges];
    let mut free_dofs = Vec::new();
    for e in 0..n_edges {
        if bc == BcMode::Strong && mesh.boundary_edge[e] {
            continue;
        }
        dof_map[e] = free_dofs.len();
        free_dofs.push(e);
    }
    let n = free_dofs.len();

    // per-cell local contributions in parallel, merged deterministically
    let locals: Vec<Result<(Vec<Vec<f64>>, Vec<f64>, f64), FemError>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|k| {
            let pts = mesh.cell_points(k);
            let (nu, kappa) = coeffs.lookup(centroid(&pts))?;
            Ok((element_matrix(mesh, k, nu, kappa), cell_rhs(mesh, k, f), kappa))
        })
        .collect();

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut kappa_cell = vec![0.0; mesh.n_cells()];
    for (k, loc) in locals.into_iter().enumerate() {
        let (m, r, kappa) = loc?;
        kappa_cell[k] = kappa;
        let edges = &mesh.cell_edges[k];
        for (li, &ei) in edges.iter().enumerate() {
            let gi = dof_map[ei];
            if gi == usize::MAX {
                continue;
            }
            rhs[gi] += r[li];
            for (lj, &ej) in edges.iter().enumerate() {
                let gj = dof_map[ej];
                if gj != usize::MAX {
                    triplets.push((gi, gj, m[li][lj]));
                }
            }
        }
    }

    let mut lambda_f = vec![0.0; mesh.faces.len()];
    if let BcMode::Nitsche(eta0) = bc {
        let frule = simplex_rule(mesh.dim - 1, 4).expect("static degree");
        for fc in 0..mesh.faces.len() {
            if !mesh.boundary_face[fc] {
                continue;
            }
            let k = mesh.face_cells[fc][0];
            let kappa = kappa_cell[k];
            lambda_f[fc] = kappa;
            let fpts = mesh.face_points(fc);
            let cpts = mesh.cell_points(k);
            // outward unit normal
            let mut nrm = geometry::triangle_normal(&fpts);
            if geometry::dot(nrm, geometry::sub(centroid(&fpts), centroid(&cpts))) < 0.0 {
                nrm = geometry::scale(-1.0, nrm);
            }
            let h_f = geometry::diameter(&fpts);
            let basis = CellBasis::new(mesh, k, SpaceFamily::Nedelec0);
            let curls = basis.curls();
            let edges = &mesh.cell_edges[k];
            let nd = edges.len();
            // consistency: N_ij = integral_F (kappa rot phi_j x n) . phi_i
            // penalty:     S_ij = eta0 lambda_F / h_F integral_F (phi_i)_t . (phi_j)_t
            // assembled as -N - N^T + S
            let mut clean = vec![vec![0.0; nd]; nd];
            for i in 0..nd {
                for j in 0..nd {
                    let cxn_j = geometry::cross(geometry::scale(kappa, curls[j]), nrm);
                    let cxn_i = geometry::cross(geometry::scale(kappa, curls[i]), nrm);
                    let nij = frule.integrate_on(&fpts, |x| {
                        let phi = basis.eval(x);
                        geometry::dot(cxn_j, phi[i])
                    });
                    let nji = frule.integrate_on(&fpts, |x| {
                        let phi = basis.eval(x);
                        geometry::dot(cxn_i, phi[j])
                    });
                    let sij = frule.integrate_on(&fpts, |x| {
                        let phi = basis.eval(x);
                        let ti = geometry::axpy(-geometry::dot(phi[i], nrm), nrm, phi[i]);
                        let tj = geometry::axpy(-geometry::dot(phi[j], nrm), nrm, phi[j]);
                        geometry::dot(ti, tj)
                    });
                    clean[i][j] = -nij - nji + eta0 * lambda_f[fc] / h_f * sij;
                }
            }
            for (li, &ei) in edges.iter().enumerate() {
                for (lj, &ej) in edges.iter().enumerate() {
                    triplets.push((dof_map[ei], dof_map[ej], clean[li][lj]));
                }
            }
        }
    }

    Ok(CurlCurlSystem {
        mesh: mesh.clone(),
        matrix: CsrMatrix::from_triplets(n, triplets),
        rhs,
        dof_map,
        free_dofs,
        bc,
        lambda_f,
    })
}

/// Diagonal-preconditioned CG solve; returns the finite element solution and
/// the iteration count.
pub fn solve(system: &CurlCurlSystem, tol: f64) -> Result<(FeFunction, usize), FemError> {
    let (x, iters) = cg_solve(&system.matrix, &system.rhs, tol)?;
    let mut coeffs = vec![0.0; system.mesh.edges.len()];
    for (row, &e) in system.free_dofs.iter().enumerate() {
        coeffs[e] = x[row];
    }
    let space = match system.bc {
        BcMode::Strong => Space::nedelec0().with_zero_boundary(),
        BcMode::Nitsche(_) => Space::nedelec0(),
    };
    Ok((
        FeFunction {
            mesh: system.mesh.clone(),
            space,
            coeffs,
        },
        iters,
    ))
}

/// Exponent of h_K in the boundary residual term: 2d((d+2)/(2d) - 1/q).
pub fn residual_exponent(dim: usize, q: f64) -> f64 {
    let d = dim as f64;
    2.0 * d * ((d + 2.0) / (2.0 * d) - 1.0 / q)
}

#[derive(Debug, Clone)]
pub struct MaxwellErrors {
    pub l2: f64,
    pub hcurl: f64,
    /// per-cell squared (L2, H(curl)) error contributions
    pub cells: Vec<(f64, f64)>,
    /// sum over boundary cells of h^{2d((d+2)/(2d) - 1/q)} ||f - nu A_h||^2_{Lq}
    pub boundary_residual: f64,
}

/// Errors of a discrete solution against the exact field, in L2 and in the
/// H(curl) norm (curl term weighted by the domain diameter), plus the
/// boundary-face residual term for reporting.
pub fn maxwell_errors(
    mesh: &SimplicialMesh,
    solution: &FeFunction,
    exact: &AnalyticField,
    coeffs: &CoefficientPartition,
    f: &(dyn VectorField + Sync),
    q: f64,
) -> Result<MaxwellErrors, FemError> {
    if !exact.has_curl() {
        return Err(FemError::InvalidParameter(format!(
            "field '{}' has no curl evaluator",
            exact.name
        )));
    }
    check_q(mesh.dim, q)?;
    let ld = mesh.domain_diameter();
    let rule = simplex_rule(mesh.dim, 6).expect("static degree");
    let has_boundary_face =
        |k: usize| mesh.cell_faces[k].iter().any(|&fc| mesh.boundary_face[fc]);
    let rows: Vec<Result<(f64, f64, f64), FemError>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|k| {
            let pts = mesh.cell_points(k);
            let curl_h = solution.curl_in_cell(k);
            let l2 = rule.integrate_on(&pts, |x| {
                let d = geometry::sub(exact.eval(x), solution.eval_in_cell(k, x));
                geometry::dot(d, d)
            });
            let curl2 = rule.integrate_on(&pts, |x| {
                let d = geometry::sub(exact.curl(x).unwrap(), curl_h);
                geometry::dot(d, d)
            });
            let mut res = 0.0;
            if has_boundary_face(k) {
                let (nu, _) = coeffs.lookup(centroid(&pts))?;
                let lq = rule
                    .integrate_on(&pts, |x| {
                        let r = geometry::axpy(-nu, solution.eval_in_cell(k, x), f.eval(x));
                        geometry::norm(r).powf(q)
                    })
                    .max(0.0)
                    .powf(2.0 / q);
                res = mesh.h_cell[k].powf(residual_exponent(mesh.dim, q)) * lq;
            }
            Ok((l2, l2 + ld * ld * curl2, res))
        })
        .collect();
    let mut cells = Vec::with_capacity(mesh.n_cells());
    let (mut l2, mut hc, mut br) = (0.0, 0.0, 0.0);
    for row in rows {
        let (a, b, c) = row?;
        cells.push((a, b));
        l2 += a;
        hc += b;
        br += c;
    }
    Ok(MaxwellErrors {
        l2: l2.max(0.0).sqrt(),
        hcurl: hc.max(0.0).sqrt(),
        cells,
        boundary_residual: br,
    })
}
