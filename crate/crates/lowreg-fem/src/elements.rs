//! Reference-element bases, canonical DOF functionals, and Piola transforms
//! for lowest-order Nedelec (tet), Raviart-Thomas (triangle/tet), and P1.

use crate::error::FemError;
use crate::geometry::{self, Point};
use crate::quadrature::simplex_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementFamily {
    Nedelec0,
    RT0,
    P1,
}

/// Which mesh entity a local DOF is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    /// local edge index (lexicographic pair order)
    Edge(usize),
    /// local face index (opposite local vertex in 3D; edge index in 2D)
    Face(usize),
    /// local vertex index
    Vertex(usize),
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub family: ElementFamily,
    pub dim: usize,
    pub ndofs: usize,
    pub dof_entities: Vec<DofEntity>,
}

/// Local edges of the reference simplex in lexicographic pair order.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
pub const TRI_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl ReferenceElement {
    pub fn new(family: ElementFamily, dim: usize) -> Result<Self, FemError> {
        let (ndofs, dof_entities) = match (family, dim) {
            (ElementFamily::Nedelec0, 3) => (6, (0..6).map(DofEntity::Edge).collect()),
            (ElementFamily::Nedelec0, 2) => (3, (0..3).map(DofEntity::Edge).collect()),
            (ElementFamily::RT0, d @ (2 | 3)) => {
                (d + 1, (0..d + 1).map(DofEntity::Face).collect())
            }
            (ElementFamily::P1, d @ (2 | 3)) => {
                (d + 1, (0..d + 1).map(DofEntity::Vertex).collect())
            }
            _ => {
                return Err(FemError::InvalidParameter(format!(
                    "unsupported element ({family:?}, dim {dim})"
                )))
            }
        };
        Ok(ReferenceElement {
            family,
            dim,
            ndofs,
            dof_entities,
        })
    }
}

fn check_in_reference(dim: usize, p: Point) -> Result<(), FemError> {
    let mut bary = vec![1.0 - p[..dim].iter().sum::<f64>()];
    bary.extend_from_slice(&p[..dim]);
    if bary.iter().any(|&l| l < -1e-12) {
        return Err(FemError::InvalidParameter(format!(
            "point {p:?} outside reference simplex"
        )));
    }
    Ok(())
}

/// Values and (constant) curls of the six Whitney edge functions
/// phi_ab = lambda_a grad lambda_b - lambda_b grad lambda_a on the
/// reference tetrahedron, in lexicographic edge order.
pub fn nedelec0_eval(p: Point) -> Result<([Point; 6], [Point; 6]), FemError> {
    check_in_reference(3, p)?;
    let lam = [1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]];
    let grad: [Point; 4] = [
        [-1.0, -1.0, -1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    let mut values = [[0.0; 3]; 6];
    let mut curls = [[0.0; 3]; 6];
    for (e, &(a, b)) in TET_EDGES.iter().enumerate() {
        values[e] = geometry::sub(
            geometry::scale(lam[a], grad[b]),
            geometry::scale(lam[b], grad[a]),
        );
        curls[e] = geometry::scale(2.0, geometry::cross(grad[a], grad[b]));
    }
    Ok((values, curls))
}

/// 2D Whitney edge functions on the reference triangle; the "curl" is the
/// scalar rot = d_x v_y - d_y v_x, constant per basis function.
pub fn nedelec0_eval_2d(p: Point) -> Result<([Point; 3], [f64; 3]), FemError> {
    check_in_reference(2, p)?;
    let lam = [1.0 - p[0] - p[1], p[0], p[1]];
    let grad: [Point; 3] = [[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mut values = [[0.0; 3]; 3];
    let mut rots = [0.0; 3];
    for (e, &(a, b)) in TRI_EDGES.iter().enumerate() {
        values[e] = geometry::sub(
            geometry::scale(lam[a], grad[b]),
            geometry::scale(lam[b], grad[a]),
        );
        rots[e] = 2.0 * (grad[a][0] * grad[b][1] - grad[a][1] * grad[b][0]);
    }
    Ok((values, rots))
}

/// RT0 basis psi_i = (x - v_i) / (d |K_ref|) (one per face, opposite local
/// vertex i) with constant divergence 1 / |K_ref| on the reference simplex.
pub fn rt0_eval(dim: usize, p: Point) -> Result<(Vec<Point>, Vec<f64>), FemError> {
    if !(2..=3).contains(&dim) {
        return Err(FemError::InvalidParameter(format!("RT0 dim {dim}")));
    }
    check_in_reference(dim, p)?;
    let measure = crate::quadrature::reference_measure(dim);
    let verts: Vec<Point> = reference_vertices(dim);
    let scale = 1.0 / (dim as f64 * measure);
    let values = verts
        .iter()
        .map(|&v| geometry::scale(scale, geometry::sub(p, v)))
        .collect();
    let divs = vec![1.0 / measure; dim + 1];
    Ok((values, divs))
}

pub fn reference_vertices(dim: usize) -> Vec<Point> {
    let mut v = vec![[0.0, 0.0, 0.0]];
    for i in 0..dim {
        let mut p = [0.0, 0.0, 0.0];
        p[i] = 1.0;
        v.push(p);
    }
    v
}

/// Affine map x = B xhat + b from the reference simplex onto a physical one.
/// In 2D the third column of B is e_z so det stays meaningful.
#[derive(Debug, Clone)]
pub struct AffineCellMap {
    pub b: [[f64; 3]; 3], // columns
    pub b_inv_t: [[f64; 3]; 3],
    pub det: f64,
    pub translation: Point,
    pub dim: usize,
}

fn det3(c: &[[f64; 3]; 3]) -> f64 {
    c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1])
        - c[1][0] * (c[0][1] * c[2][2] - c[0][2] * c[2][1])
        + c[2][0] * (c[0][1] * c[1][2] - c[0][2] * c[1][1])
}

impl AffineCellMap {
    /// Build the map sending reference vertex i to `pts[i]`.
    pub fn from_simplex(pts: &[Point], dim: usize) -> Result<Self, FemError> {
        let mut cols = [[0.0; 3]; 3];
        for i in 0..dim {
            cols[i] = geometry::sub(pts[i + 1], pts[0]);
        }
        if dim == 2 {
            cols[2] = [0.0, 0.0, 1.0];
        }
        // column-major: cols[j][i] is entry (i,j); det of the matrix whose
        // columns are cols[j]
        let m = [
            [cols[0][0], cols[1][0], cols[2][0]],
            [cols[0][1], cols[1][1], cols[2][1]],
            [cols[0][2], cols[1][2], cols[2][2]],
        ];
        let det = det3(&[
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ]);
        if det.abs() < 1e-300 {
            return Err(FemError::SingularMap(det));
        }
        // inverse via cofactors
        let inv = [
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
            ],
        ];
        let b_inv_t = [
            [inv[0][0], inv[1][0], inv[2][0]],
            [inv[0][1], inv[1][1], inv[2][1]],
            [inv[0][2], inv[1][2], inv[2][2]],
        ];
        // store B row-major for apply()
        Ok(AffineCellMap {
            b: m,
            b_inv_t,
            det,
            translation: pts[0],
            dim,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        AffineCellMap {
            b: eye,
            b_inv_t: eye,
            det: 1.0,
            translation: [0.0, 0.0, 0.0],
            dim,
        }
    }

    fn matvec(m: &[[f64; 3]; 3], v: Point) -> Point {
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn apply(&self, xhat: Point) -> Point {
        geometry::add(Self::matvec(&self.b, xhat), self.translation)
    }

    pub fn pull_back(&self, x: Point) -> Point {
        // B^{-1} (x - b); B^{-1} is the transpose of b_inv_t
        let d = geometry::sub(x, self.translation);
        let bt = &self.b_inv_t;
        [
            bt[0][0] * d[0] + bt[1][0] * d[1] + bt[2][0] * d[2],
            bt[0][1] * d[0] + bt[1][1] * d[1] + bt[2][1] * d[2],
            bt[0][2] * d[0] + bt[1][2] * d[1] + bt[2][2] * d[2],
        ]
    }
}

/// Covariant Piola: v = B^{-T} vhat, curl v = (1/det B) B curlhat.
/// In 2D pass the scalar rot as the z-component of `ref_curl`.
pub fn covariant_piola(
    map: &AffineCellMap,
    ref_value: Point,
    ref_curl: Point,
) -> Result<(Point, Point), FemError> {
    if map.det.abs() < 1e-300 {
        return Err(FemError::SingularMap(map.det));
    }
    let value = AffineCellMap::matvec(&map.b_inv_t, ref_value);
    let curl = geometry::scale(1.0 / map.det, AffineCellMap::matvec(&map.b, ref_curl));
    Ok((value, curl))
}

/// Contravariant Piola: v = (1/det B) B vhat, div v = divhat / det B.
pub fn contravariant_piola(
    map: &AffineCellMap,
    ref_value: Point,
    ref_div: f64,
) -> Result<(Point, f64), FemError> {
    if map.det.abs() < 1e-300 {
        return Err(FemError::SingularMap(map.det));
    }
    let value = geometry::scale(1.0 / map.det, AffineCellMap::matvec(&map.b, ref_value));
    Ok((value, ref_div / map.det))
}

/// Tangential edge DOF: integral of v . t along the edge, with the tangent
/// oriented from `edge[0]` to `edge[1]` (callers pass sorted global order).
/// Gauss quadrature exact for polynomial degree <= 9.
pub fn edge_dof(
    field: &dyn crate::fields::VectorField,
    edge: &[Point; 2],
) -> Result<f64, FemError> {
    if field.singular_on(edge) {
        return Err(FemError::SingularTrace {
            field: field.name().to_string(),
            kind: "edge",
            entity: format!("{:?} - {:?}", edge[0], edge[1]),
        });
    }
    let len = geometry::dist(edge[0], edge[1]);
    let t = geometry::scale(1.0 / len, geometry::sub(edge[1], edge[0]));
    let rule = simplex_rule(1, 9).expect("static degree");
    Ok(rule.integrate_on(edge, |x| geometry::dot(field.eval(x), t)))
}

/// Cell-aware variant for broken fields.
pub fn edge_dof_in_cell(
    field: &dyn crate::fields::VectorField,
    cell: usize,
    edge: &[Point; 2],
) -> f64 {
    let len = geometry::dist(edge[0], edge[1]);
    let t = geometry::scale(1.0 / len, geometry::sub(edge[1], edge[0]));
    let rule = simplex_rule(1, 9).expect("static degree");
    rule.integrate_on(edge, |x| geometry::dot(field.eval_in_cell(cell, x), t))
}

/// Normal face DOF: integral of v . n over the face with the right-hand-rule
/// normal on the vertex triple as given (callers pass sorted global order).
/// In 2D the "face" is an edge with normal (t_y, -t_x).
pub fn face_dof(
    field: &dyn crate::fields::VectorField,
    face: &[Point],
) -> Result<f64, FemError> {
    if field.singular_on(face) {
        return Err(FemError::SingularTrace {
            field: field.name().to_string(),
            kind: "face",
            entity: format!("{face:?}"),
        });
    }
    Ok(face_dof_in_cell(field, usize::MAX, face))
}

pub fn face_dof_in_cell(field: &dyn crate::fields::VectorField, cell: usize, face: &[Point]) -> f64 {
    let eval = |x: Point| {
        if cell == usize::MAX {
            field.eval(x)
        } else {
            field.eval_in_cell(cell, x)
        }
    };
    if face.len() == 2 {
        let t = geometry::sub(face[1], face[0]);
        let len = geometry::norm(t);
        let n = [t[1] / len, -t[0] / len, 0.0];
        let rule = simplex_rule(1, 9).expect("static degree");
        rule.integrate_on(face, |x| geometry::dot(eval(x), n))
    } else {
        let n = geometry::triangle_normal(face);
        let rule = simplex_rule(2, 5).expect("static degree");
        rule.integrate_on(face, |x| geometry::dot(eval(x), n))
    }
}
