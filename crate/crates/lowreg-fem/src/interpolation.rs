//! Conforming and broken finite element functions and the interpolation
//! operators: canonical interpolation, broken L2 projection, cell means,
//! DOF averaging (with optional boundary zeroing), quasi-interpolation,
//! and a global L2 projection realizing the best-approximation infimum.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::elements::{edge_dof, edge_dof_in_cell, face_dof, face_dof_in_cell};
use crate::error::FemError;
use crate::fields::VectorField;
use crate::geometry::{self, Point};
use crate::mesh::SimplicialMesh;
use crate::quadrature::simplex_rule;
use crate::sparse::{cg_solve, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFamily {
    Nedelec0,
    RT0,
}

/// Conforming FE space tag: family plus boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    pub family: SpaceFamily,
    pub zero_boundary: bool,
}

impl Space {
    pub fn nedelec0() -> Self {
        Space {
            family: SpaceFamily::Nedelec0,
            zero_boundary: false,
        }
    }
    pub fn rt0() -> Self {
        Space {
            family: SpaceFamily::RT0,
            zero_boundary: false,
        }
    }
    pub fn with_zero_boundary(mut self) -> Self {
        self.zero_boundary = true;
        self
    }
}

/// Number of global DOFs (edges for Nedelec, faces for RT).
pub fn n_global_dofs(mesh: &SimplicialMesh, family: SpaceFamily) -> usize {
    match family {
        SpaceFamily::Nedelec0 => mesh.edges.len(),
        SpaceFamily::RT0 => mesh.faces.len(),
    }
}

fn dof_is_boundary(mesh: &SimplicialMesh, family: SpaceFamily, i: usize) -> bool {
    match family {
        SpaceFamily::Nedelec0 => mesh.boundary_edge[i],
        SpaceFamily::RT0 => mesh.boundary_face[i],
    }
}

fn cell_dof_entities(mesh: &SimplicialMesh, family: SpaceFamily, k: usize) -> &[usize] {
    match family {
        SpaceFamily::Nedelec0 => &mesh.cell_edges[k],
        SpaceFamily::RT0 => &mesh.cell_faces[k],
    }
}

/// Physical-space local basis on one cell. Whitney edge functions carry the
/// global low-to-high tangent orientation by construction (cell vertex lists
/// are sorted); RT functions carry a per-face sign aligning the local flux
/// with the global face normal.
pub struct CellBasis {
    pub family: SpaceFamily,
    pub dim: usize,
    pub ndofs: usize,
    verts: Vec<Point>,
    grads: Vec<Point>,
    /// RT only: orientation signs per local face
    signs: Vec<f64>,
    measure: f64,
}

impl CellBasis {
    pub fn new(mesh: &SimplicialMesh, k: usize, family: SpaceFamily) -> Self {
        let dim = mesh.dim;
        let verts = mesh.cell_points(k);
        let grads = geometry::barycentric_gradients(&verts, dim);
        let measure = mesh.cell_measure(k);
        let mut signs = Vec::new();
        if family == SpaceFamily::RT0 {
            for lf in 0..=dim {
                // global normal of the face opposite local vertex lf
                let f = mesh.cell_faces[k][lf];
                let fpts = mesh.face_points(f);
                let n = if dim == 2 {
                    let t = geometry::sub(fpts[1], fpts[0]);
                    let len = geometry::norm(t);
                    [t[1] / len, -t[0] / len, 0.0]
                } else {
                    geometry::triangle_normal(&fpts)
                };
                let centroid = {
                    let mut c = [0.0, 0.0, 0.0];
                    for &p in &fpts {
                        c = geometry::add(c, p);
                    }
                    geometry::scale(1.0 / fpts.len() as f64, c)
                };
                let outward = geometry::sub(centroid, verts[lf]);
                signs.push(if geometry::dot(n, outward) >= 0.0 {
                    1.0
                } else {
                    -1.0
                });
            }
        }
        let ndofs = match family {
            SpaceFamily::Nedelec0 => crate::mesh::local_edges(dim).len(),
            SpaceFamily::RT0 => dim + 1,
        };
        CellBasis {
            family,
            dim,
            ndofs,
            verts,
            grads,
            signs,
            measure,
        }
    }

    fn lambda(&self, i: usize, x: Point) -> f64 {
        geometry::dot(self.grads[i], geometry::sub(x, self.verts[i])) + 1.0
    }

    pub fn eval(&self, x: Point) -> Vec<Point> {
        match self.family {
            SpaceFamily::Nedelec0 => crate::mesh::local_edges(self.dim)
                .iter()
                .map(|&(a, b)| {
                    geometry::sub(
                        geometry::scale(self.lambda(a, x), self.grads[b]),
                        geometry::scale(self.lambda(b, x), self.grads[a]),
                    )
                })
                .collect(),
            SpaceFamily::RT0 => (0..=self.dim)
                .map(|i| {
                    geometry::scale(
                        self.signs[i] / (self.dim as f64 * self.measure),
                        geometry::sub(x, self.verts[i]),
                    )
                })
                .collect(),
        }
    }

    /// Constant curls (Nedelec, 3D vectors; 2D rot in the z component).
    pub fn curls(&self) -> Vec<Point> {
        assert_eq!(self.family, SpaceFamily::Nedelec0);
        crate::mesh::local_edges(self.dim)
            .iter()
            .map(|&(a, b)| geometry::scale(2.0, geometry::cross(self.grads[a], self.grads[b])))
            .collect()
    }

    /// Constant divergences (RT).
    pub fn divs(&self) -> Vec<f64> {
        assert_eq!(self.family, SpaceFamily::RT0);
        (0..=self.dim)
            .map(|i| self.signs[i] / self.measure)
            .collect()
    }
}

/// Conforming FE function: one coefficient per global entity.
#[derive(Clone)]
pub struct FeFunction {
    pub mesh: Arc<SimplicialMesh>,
    pub space: Space,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zero(mesh: Arc<SimplicialMesh>, space: Space) -> Self {
        let n = n_global_dofs(&mesh, space.family);
        FeFunction {
            mesh,
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn curl_in_cell(&self, k: usize) -> Point {
        let basis = CellBasis::new(&self.mesh, k, self.space.family);
        let curls = basis.curls();
        let mut c = [0.0, 0.0, 0.0];
        for (l, &g) in cell_dof_entities(&self.mesh, self.space.family, k)
            .iter()
            .enumerate()
        {
            c = geometry::axpy(self.coeffs[g], curls[l], c);
        }
        c
    }

    pub fn div_in_cell(&self, k: usize) -> f64 {
        let basis = CellBasis::new(&self.mesh, k, self.space.family);
        let divs = basis.divs();
        cell_dof_entities(&self.mesh, self.space.family, k)
            .iter()
            .enumerate()
            .map(|(l, &g)| self.coeffs[g] * divs[l])
            .sum()
    }
}

impl VectorField for FeFunction {
    fn name(&self) -> &str {
        "fe_function"
    }
    fn dim(&self) -> usize {
        self.mesh.dim
    }
    fn eval_in_cell(&self, k: usize, x: Point) -> Point {
        let basis = CellBasis::new(&self.mesh, k, self.space.family);
        let vals = basis.eval(x);
        let mut v = [0.0, 0.0, 0.0];
        for (l, &g) in cell_dof_entities(&self.mesh, self.space.family, k)
            .iter()
            .enumerate()
        {
            v = geometry::axpy(self.coeffs[g], vals[l], v);
        }
        v
    }
    /// Point location by linear scan (diagnostic use only).
    fn eval(&self, x: Point) -> Point {
        for k in 0..self.mesh.n_cells() {
            let pts = self.mesh.cell_points(k);
            let lam = geometry::barycentric_coords(&pts, self.mesh.dim, x);
            if lam.iter().all(|&l| l >= -1e-12) {
                return self.eval_in_cell(k, x);
            }
        }
        [0.0, 0.0, 0.0]
    }
}

/// Cell-local FE function with no inter-cell coupling.
#[derive(Clone)]
pub struct BrokenFeFunction {
    pub mesh: Arc<SimplicialMesh>,
    pub family: SpaceFamily,
    /// coeffs[k][l] = coefficient of local basis function l on cell k
    pub coeffs: Vec<Vec<f64>>,
}

impl VectorField for BrokenFeFunction {
    fn name(&self) -> &str {
        "broken_fe_function"
    }
    fn dim(&self) -> usize {
        self.mesh.dim
    }
    fn eval(&self, _x: Point) -> Point {
        panic!("broken FE functions are only evaluable per cell")
    }
    fn eval_in_cell(&self, k: usize, x: Point) -> Point {
        let basis = CellBasis::new(&self.mesh, k, self.family);
        let vals = basis.eval(x);
        let mut v = [0.0, 0.0, 0.0];
        for l in 0..basis.ndofs {
            v = geometry::axpy(self.coeffs[k][l], vals[l], v);
        }
        v
    }
}

impl BrokenFeFunction {
    /// View a conforming function as a broken one.
    pub fn from_conforming(f: &FeFunction) -> Self {
        let coeffs = (0..f.mesh.n_cells())
            .map(|k| {
                cell_dof_entities(&f.mesh, f.space.family, k)
                    .iter()
                    .map(|&g| f.coeffs[g])
                    .collect()
            })
            .collect();
        BrokenFeFunction {
            mesh: f.mesh.clone(),
            family: f.space.family,
            coeffs,
        }
    }
}

/// Canonical interpolation: coefficients are the entity DOFs of the field.
/// Refuses fields whose singular locus meets a mesh entity.
pub fn canonical_interpolate(
    mesh: &Arc<SimplicialMesh>,
    space: Space,
    field: &dyn VectorField,
) -> Result<FeFunction, FemError> {
    let n = n_global_dofs(mesh, space.family);
    let mut coeffs = vec![0.0; n];
    for i in 0..n {
        if space.zero_boundary && dof_is_boundary(mesh, space.family, i) {
            continue;
        }
        coeffs[i] = match space.family {
            SpaceFamily::Nedelec0 => edge_dof(field, &mesh.edge_points(i))?,
            SpaceFamily::RT0 => face_dof(field, &mesh.face_points(i))?,
        };
    }
    Ok(FeFunction {
        mesh: mesh.clone(),
        space,
        coeffs,
    })
}

/// Cell-wise L2 projection onto the broken space (local Gram solves,
/// quadrature degree 6).
pub fn broken_project(
    mesh: &Arc<SimplicialMesh>,
    family: SpaceFamily,
    field: &(dyn VectorField + Sync),
) -> Result<BrokenFeFunction, FemError> {
    let rule = simplex_rule(mesh.dim, 6).expect("static degree");
    let results: Vec<Result<Vec<f64>, FemError>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|k| {
            let pts = mesh.cell_points(k);
            if field.vanishes_on(bbox_lo(&pts), bbox_hi(&pts)) {
                let nd = CellBasis::new(mesh, k, family).ndofs;
                return Ok(vec![0.0; nd]);
            }
            let basis = CellBasis::new(mesh, k, family);
            let (nodes, weights) = rule.mapped(&pts);
            let nd = basis.ndofs;
            let mut gram = DMatrix::<f64>::zeros(nd, nd);
            let mut rhs = DVector::<f64>::zeros(nd);
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let vals = basis.eval(*x);
                let v = field.eval_in_cell(k, *x);
                for i in 0..nd {
                    rhs[i] += w * geometry::dot(v, vals[i]);
                    for j in 0..nd {
                        gram[(i, j)] += w * geometry::dot(vals[i], vals[j]);
                    }
                }
            }
            gram.lu()
                .solve(&rhs)
                .map(|c| c.iter().copied().collect())
                .ok_or(FemError::DegenerateCell(k))
        })
        .collect();
    let mut coeffs = Vec::with_capacity(mesh.n_cells());
    for r in results {
        coeffs.push(r?);
    }
    Ok(BrokenFeFunction {
        mesh: mesh.clone(),
        family,
        coeffs,
    })
}

fn bbox_lo(pts: &[Point]) -> Point {
    let mut lo = pts[0];
    for p in pts {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
        }
    }
    lo
}

fn bbox_hi(pts: &[Point]) -> Point {
    let mut hi = pts[0];
    for p in pts {
        for c in 0..3 {
            hi[c] = hi[c].max(p[c]);
        }
    }
    hi
}

/// Componentwise mean of a field over cell `k` (quadrature degree 8).
pub fn cell_mean(mesh: &SimplicialMesh, field: &dyn VectorField, k: usize) -> Point {
    let rule = simplex_rule(mesh.dim, 8).expect("static degree");
    let pts = mesh.cell_points(k);
    let (nodes, weights) = rule.mapped(&pts);
    let mut s = [0.0, 0.0, 0.0];
    for (x, w) in nodes.iter().zip(weights.iter()) {
        s = geometry::axpy(*w, field.eval_in_cell(k, *x), s);
    }
    geometry::scale(1.0 / mesh.cell_measure(k), s)
}

/// Equal-weight averaging of the per-cell canonical DOFs onto the global
/// entities; boundary DOFs forced to zero when requested. Gather order is
/// ascending entity/cell id, so the result is deterministic.
pub fn average_dofs(broken: &BrokenFeFunction, zero_boundary: bool) -> FeFunction {
    let mesh = &broken.mesh;
    let family = broken.family;
    let n = n_global_dofs(mesh, family);
    let coeffs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if zero_boundary && dof_is_boundary(mesh, family, i) {
                return 0.0;
            }
            let cells = match family {
                SpaceFamily::Nedelec0 => &mesh.edge_cells[i],
                SpaceFamily::RT0 => &mesh.face_cells[i],
            };
            let mut s = 0.0;
            for &k in cells {
                s += match family {
                    SpaceFamily::Nedelec0 => {
                        edge_dof_in_cell(broken, k, &mesh.edge_points(i))
                    }
                    SpaceFamily::RT0 => face_dof_in_cell(broken, k, &mesh.face_points(i)),
                };
            }
            s / cells.len() as f64
        })
        .collect();
    FeFunction {
        mesh: mesh.clone(),
        space: Space {
            family,
            zero_boundary,
        },
        coeffs,
    }
}

/// Quasi-interpolation: broken L2 projection followed by DOF averaging.
/// Needs only cell-wise integrability of the field.
pub fn quasi_interpolate(
    mesh: &Arc<SimplicialMesh>,
    space: Space,
    field: &(dyn VectorField + Sync),
) -> Result<FeFunction, FemError> {
    let broken = broken_project(mesh, space.family, field)?;
    Ok(average_dofs(&broken, space.zero_boundary))
}

/// Global L2 projection onto the conforming space: realizes the
/// best-approximation infimum exactly. Mass system solved by CG to a
/// relative residual of 1e-10.
pub fn best_approximation_l2(
    mesh: &Arc<SimplicialMesh>,
    space: Space,
    field: &(dyn VectorField + Sync),
) -> Result<FeFunction, FemError> {
    let n = n_global_dofs(mesh, space.family);
    // active-DOF numbering (zero_boundary removes boundary entities)
    let mut active = Vec::with_capacity(n);
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        if !(space.zero_boundary && dof_is_boundary(mesh, space.family, i)) {
            index[i] = active.len();
            active.push(i);
        }
    }
    let rule = simplex_rule(mesh.dim, 6).expect("static degree");
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; active.len()];
    for k in 0..mesh.n_cells() {
        let basis = CellBasis::new(mesh, k, space.family);
        let pts = mesh.cell_points(k);
        let (nodes, weights) = rule.mapped(&pts);
        let entities = cell_dof_entities(mesh, space.family, k);
        let nd = basis.ndofs;
        let mut local_m = vec![0.0; nd * nd];
        let mut local_b = vec![0.0; nd];
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let vals = basis.eval(*x);
            let v = field.eval_in_cell(k, *x);
            for i in 0..nd {
                local_b[i] += w * geometry::dot(v, vals[i]);
                for j in 0..nd {
                    local_m[i * nd + j] += w * geometry::dot(vals[i], vals[j]);
                }
            }
        }
        for i in 0..nd {
            let gi = index[entities[i]];
            if gi == usize::MAX {
                continue;
            }
            rhs[gi] += local_b[i];
            for j in 0..nd {
                let gj = index[entities[j]];
                if gj != usize::MAX {
                    triplets.push((gi, gj, local_m[i * nd + j]));
                }
            }
        }
    }
    let m = CsrMatrix::from_triplets(active.len(), triplets);
    let (sol, _iters) = cg_solve(&m, &rhs, 1e-10)?;
    let mut coeffs = vec![0.0; n];
    for (a, &i) in active.iter().enumerate() {
        coeffs[i] = sol[a];
    }
    Ok(FeFunction {
        mesh: mesh.clone(),
        space,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{get_field, ClosureField, FieldParams};
    use crate::mesh::{build_lprism_mesh, build_lshape_mesh, build_unit_cube_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l2_error(mesh: &SimplicialMesh, a: &dyn VectorField, b: &FeFunction) -> f64 {
        let rule = simplex_rule(mesh.dim, 8).unwrap();
        let mut s = 0.0;
        for k in 0..mesh.n_cells() {
            let pts = mesh.cell_points(k);
            s += rule.integrate_on(&pts, |x| {
                let d = geometry::sub(a.eval_in_cell(k, x), b.eval_in_cell(k, x));
                geometry::dot(d, d)
            });
        }
        s.sqrt()
    }

    #[test]
    fn canonical_reproduces_constant() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let f = get_field("constant", &FieldParams::default()).unwrap();
        for space in [Space::nedelec0(), Space::rt0()] {
            let i = canonical_interpolate(&mesh, space, &f).unwrap();
            assert!(l2_error(&mesh, &f, &i) < 1e-12);
        }
        let mesh2 = Arc::new(build_lshape_mesh(1).unwrap());
        let f2 = get_field(
            "constant",
            &FieldParams {
                lambda: None,
                dim: 2,
            },
        )
        .unwrap();
        for space in [Space::nedelec0(), Space::rt0()] {
            let i = canonical_interpolate(&mesh2, space, &f2).unwrap();
            assert!(l2_error(&mesh2, &f2, &i) < 1e-12);
        }
    }

    #[test]
    fn canonical_refuses_singular_locus_edges() {
        let mesh = Arc::new(build_lprism_mesh(1).unwrap());
        let f = get_field(
            "grad_power_line",
            &FieldParams {
                lambda: Some(0.3),
                dim: 3,
            },
        )
        .unwrap();
        let err = canonical_interpolate(&mesh, Space::nedelec0(), &f);
        assert!(matches!(err, Err(FemError::SingularTrace { .. })));
        // quasi-interpolation of the same field is fine
        assert!(quasi_interpolate(&mesh, Space::nedelec0(), &f).is_ok());
    }

    #[test]
    fn broken_projection_orthogonality_and_identity() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let f = ClosureField::new(3, |p| p);
        let proj = broken_project(&mesh, SpaceFamily::Nedelec0, &f).unwrap();
        // residual orthogonality against a degree-8 quadrature oracle
        let rule = simplex_rule(3, 8).unwrap();
        for k in 0..mesh.n_cells() {
            let basis = CellBasis::new(&mesh, k, SpaceFamily::Nedelec0);
            let pts = mesh.cell_points(k);
            let norm_scale = mesh.cell_measure(k);
            for j in 0..basis.ndofs {
                let resid = rule.integrate_on(&pts, |x| {
                    let d = geometry::sub(f.eval(x), proj.eval_in_cell(k, x));
                    geometry::dot(d, basis.eval(x)[j])
                });
                assert!(resid.abs() < 1e-10 * norm_scale.max(1e-3), "{resid}");
            }
        }
        // projecting a member of the broken space is the identity
        let member = BrokenFeFunction {
            mesh: mesh.clone(),
            family: SpaceFamily::Nedelec0,
            coeffs: (0..mesh.n_cells())
                .map(|k| (0..6).map(|l| ((k * 7 + l) % 5) as f64 - 2.0).collect())
                .collect(),
        };
        let reproj = broken_project(&mesh, SpaceFamily::Nedelec0, &member).unwrap();
        for k in 0..mesh.n_cells() {
            for l in 0..6 {
                assert!(
                    (reproj.coeffs[k][l] - member.coeffs[k][l]).abs() < 1e-12,
                    "cell {k} dof {l}"
                );
            }
        }
    }

    #[test]
    fn broken_projection_matches_dense_oracle() {
        // independent oracle: assemble the 6x6 system with a different
        // quadrature degree and solve densely
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let f = ClosureField::new(3, |p| p);
        let proj = broken_project(&mesh, SpaceFamily::Nedelec0, &f).unwrap();
        let rule = simplex_rule(3, 9).unwrap();
        let k = 2;
        let basis = CellBasis::new(&mesh, k, SpaceFamily::Nedelec0);
        let pts = mesh.cell_points(k);
        let (nodes, weights) = rule.mapped(&pts);
        let mut gram = DMatrix::<f64>::zeros(6, 6);
        let mut rhs = DVector::<f64>::zeros(6);
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let vals = basis.eval(*x);
            for i in 0..6 {
                rhs[i] += w * geometry::dot(f.eval(*x), vals[i]);
                for j in 0..6 {
                    gram[(i, j)] += w * geometry::dot(vals[i], vals[j]);
                }
            }
        }
        let oracle = gram.lu().solve(&rhs).unwrap();
        for l in 0..6 {
            assert!((proj.coeffs[k][l] - oracle[l]).abs() < 1e-11);
        }
    }

    #[test]
    fn cell_mean_examples() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let c = get_field("constant", &FieldParams::default()).unwrap();
        assert!(geometry::dist(cell_mean(&mesh, &c, 0), [1.0, 1.0, 1.0]) < 1e-14);
        let lin = ClosureField::new(3, |p| p);
        for k in 0..mesh.n_cells() {
            let pts = mesh.cell_points(k);
            let mut centroid = [0.0, 0.0, 0.0];
            for &p in &pts {
                centroid = geometry::add(centroid, p);
            }
            centroid = geometry::scale(0.25, centroid);
            assert!(geometry::dist(cell_mean(&mesh, &lin, k), centroid) < 1e-13);
        }
        // smooth_trig against a degree-8 oracle assembled through the
        // affine-map code path instead of QuadratureRule::mapped
        let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
        let rule = simplex_rule(3, 8).unwrap();
        let pts = mesh.cell_points(3);
        let map = crate::elements::AffineCellMap::from_simplex(&pts, 3).unwrap();
        let scale = mesh.cell_measure(3) / crate::quadrature::reference_measure(3);
        let mut oracle = [0.0, 0.0, 0.0];
        for (q, w) in rule.points.iter().zip(rule.weights.iter()) {
            let x = map.apply(*q);
            oracle = geometry::axpy(w * scale, f.eval(x), oracle);
        }
        oracle = geometry::scale(1.0 / mesh.cell_measure(3), oracle);
        assert!(geometry::dist(cell_mean(&mesh, &f, 3), oracle) < 1e-8);
    }

    #[test]
    fn averaging_conforming_and_hand_jump() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        // conforming input reproduced exactly
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut conf = FeFunction::zero(mesh.clone(), Space::nedelec0());
        for c in conf.coeffs.iter_mut() {
            *c = rng.gen::<f64>() - 0.5;
        }
        let avg = average_dofs(&BrokenFeFunction::from_conforming(&conf), false);
        for i in 0..conf.coeffs.len() {
            assert!((avg.coeffs[i] - conf.coeffs[i]).abs() < 1e-12);
        }
        // hand check: an interior edge shared by cells with DOFs +1 and -1
        // averages (with the remaining cells at 0) to 0
        let interior = (0..mesh.edges.len())
            .find(|&e| !mesh.boundary_edge[e])
            .unwrap();
        let sharing = &mesh.edge_cells[interior];
        assert!(sharing.len() >= 2);
        let mut broken = BrokenFeFunction {
            mesh: mesh.clone(),
            family: SpaceFamily::Nedelec0,
            coeffs: vec![vec![0.0; 6]; mesh.n_cells()],
        };
        let le = |k: usize| {
            mesh.cell_edges[k]
                .iter()
                .position(|&e| e == interior)
                .unwrap()
        };
        let (ka, kb) = (sharing[0], sharing[1]);
        broken.coeffs[ka][le(ka)] = 1.0;
        broken.coeffs[kb][le(kb)] = -1.0;
        let avg = average_dofs(&broken, false);
        // mean over all sharing cells: (1 - 1 + 0 + ...) / n = 0
        assert!(avg.coeffs[interior].abs() < 1e-13, "{}", avg.coeffs[interior]);
    }

    #[test]
    fn zero_boundary_forces_boundary_dofs() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
        let q = quasi_interpolate(&mesh, Space::nedelec0().with_zero_boundary(), &f).unwrap();
        for e in 0..mesh.edges.len() {
            if mesh.boundary_edge[e] {
                assert_eq!(q.coeffs[e], 0.0);
            }
        }
    }

    #[test]
    fn quasi_interpolation_is_projection() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in [Space::nedelec0(), Space::rt0()] {
            let mut vh = FeFunction::zero(mesh.clone(), space);
            for c in vh.coeffs.iter_mut() {
                *c = rng.gen::<f64>() - 0.5;
            }
            let q = quasi_interpolate(&mesh, space, &vh).unwrap();
            for i in 0..vh.coeffs.len() {
                assert!(
                    (q.coeffs[i] - vh.coeffs[i]).abs() < 1e-12,
                    "{:?} dof {i}: {} vs {}",
                    space.family,
                    q.coeffs[i],
                    vh.coeffs[i]
                );
            }
        }
    }

    #[test]
    fn rotation_links_rt_and_nedelec_quasi_interpolation() {
        // RT0 quasi-interpolation of v equals (coefficientwise) the 2D
        // Nedelec quasi-interpolation of the +90-degree rotation of v
        let mesh = Arc::new(build_lshape_mesh(1).unwrap());
        let v = ClosureField::new(2, |p| {
            [
                0.3 + p[1] * p[1] - 0.2 * p[0],
                -0.1 + p[0] * p[1],
                0.0,
            ]
        });
        let rv = ClosureField::new(2, |p| {
            let w = [
                0.3 + p[1] * p[1] - 0.2 * p[0],
                -0.1 + p[0] * p[1],
                0.0,
            ];
            [-w[1], w[0], 0.0]
        });
        let irt = quasi_interpolate(&mesh, Space::rt0(), &v).unwrap();
        let ined = quasi_interpolate(&mesh, Space::nedelec0(), &rv).unwrap();
        for i in 0..irt.coeffs.len() {
            // 2D RT normal (t_y, -t_x) is the -90 rotation of the tangent,
            // so the RT DOF of v equals the Nedelec DOF of the rotated field
            assert!(
                (irt.coeffs[i] - ined.coeffs[i]).abs() < 1e-12,
                "dof {i}: {} vs {}",
                irt.coeffs[i],
                ined.coeffs[i]
            );
        }
    }

    #[test]
    fn best_approximation_recovers_members_and_is_minimal() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut vh = FeFunction::zero(mesh.clone(), Space::nedelec0());
        for c in vh.coeffs.iter_mut() {
            *c = rng.gen::<f64>() - 0.5;
        }
        let best = best_approximation_l2(&mesh, Space::nedelec0(), &vh).unwrap();
        for i in 0..vh.coeffs.len() {
            assert!((best.coeffs[i] - vh.coeffs[i]).abs() < 1e-9);
        }
        let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
        let best = best_approximation_l2(&mesh, Space::nedelec0(), &f).unwrap();
        let quasi = quasi_interpolate(&mesh, Space::nedelec0(), &f).unwrap();
        assert!(l2_error(&mesh, &f, &best) <= l2_error(&mesh, &f, &quasi) + 1e-12);
    }

    #[test]
    fn conformity_tangential_jumps_vanish() {
        let mesh = Arc::new(build_unit_cube_mesh(1).unwrap());
        let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
        let q = quasi_interpolate(&mesh, Space::nedelec0(), &f).unwrap();
        let rule = simplex_rule(2, 6).unwrap();
        for fc in 0..mesh.faces.len() {
            if mesh.boundary_face[fc] {
                continue;
            }
            let cells = &mesh.face_cells[fc];
            let fpts = mesh.face_points(fc);
            let n = geometry::triangle_normal(&fpts);
            let jump2 = rule.integrate_on(&fpts, |x| {
                let a = q.eval_in_cell(cells[0], x);
                let b = q.eval_in_cell(cells[1], x);
                let d = geometry::sub(a, b);
                let tang = geometry::cross(d, n);
                geometry::dot(tang, tang)
            });
            assert!(jump2.sqrt() < 1e-11, "face {fc}: {}", jump2.sqrt());
        }
    }
}
