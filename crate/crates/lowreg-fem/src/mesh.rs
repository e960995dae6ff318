//! Matching affine simplicial meshes of the benchmark domains, with full
//! vertex/edge/face/cell connectivity, boundary tags, uniform red
//! refinement, and the edge/face patches used by the localized bounds.

use crate::error::FemError;
use crate::geometry::{self, Point};
use std::collections::HashMap;

/// A matching simplicial mesh in 2D (triangles) or 3D (tetrahedra).
///
/// Cells are stored with vertex indices sorted ascending; this fixes the
/// global orientation convention: edge tangents point from the low to the
/// high vertex index, face normals follow the right-hand rule on the sorted
/// vertex triple. `cell_geom` holds a positively oriented permutation of
/// each cell (sorted order with the last two vertices swapped when needed).
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Sorted ascending vertex tuples, dim+1 per cell.
    pub cells: Vec<Vec<usize>>,
    /// Positively oriented vertex tuples.
    pub cell_geom: Vec<Vec<usize>>,
    /// Deduplicated edges, each sorted ascending.
    pub edges: Vec<[usize; 2]>,
    /// Deduplicated faces: triangles in 3D; identical to `edges` in 2D.
    pub faces: Vec<Vec<usize>>,
    /// Per cell, edge ids in lexicographic local order over sorted vertices.
    pub cell_edges: Vec<Vec<usize>>,
    /// Per cell, face ids; local face f is opposite local vertex f.
    pub cell_faces: Vec<Vec<usize>>,
    pub edge_cells: Vec<Vec<usize>>,
    pub face_cells: Vec<Vec<usize>>,
    pub boundary_face: Vec<bool>,
    pub boundary_edge: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
    pub h_cell: Vec<f64>,
    pub h_max: f64,
}

/// Kind of connectivity patch around an anchor cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    /// Cells sharing at least one edge with the anchor.
    Edge,
    /// Cells sharing at least one face with the anchor.
    Face,
}

/// Cells sharing an edge (or face) with an anchor cell.
#[derive(Debug, Clone)]
pub struct Patch {
    pub anchor: usize,
    pub members: Vec<usize>,
    pub kind: PatchKind,
}

/// Local edge order within a cell: pairs (i,j), i<j, lexicographic.
pub fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(0, 1), (0, 2), (1, 2)],
        3 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        _ => panic!("unsupported dimension"),
    }
}

impl SimplicialMesh {
    /// Build a mesh from raw vertices and cells, deriving all connectivity.
    pub fn from_cells(dim: usize, vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Self {
        assert!(dim == 2 || dim == 3, "dim must be 2 or 3");
        let mut cells: Vec<Vec<usize>> = cells;
        for c in &mut cells {
            assert_eq!(c.len(), dim + 1);
            c.sort_unstable();
        }

        let mut cell_geom = Vec::with_capacity(cells.len());
        for c in &cells {
            let pts: Vec<Point> = c.iter().map(|&v| vertices[v]).collect();
            let mut g = c.clone();
            if geometry::signed_measure(&pts) < 0.0 {
                g.swap(dim - 1, dim);
            }
            cell_geom.push(g);
        }

        // deduplicated edges, first-seen order
        let mut edge_id: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for c in &cells {
            let mut ids = Vec::with_capacity(local_edges(dim).len());
            for &(i, j) in local_edges(dim) {
                let key = [c[i], c[j]];
                let id = *edge_id.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                ids.push(id);
            }
            cell_edges.push(ids);
        }

        // faces: (dim-1)-simplices; local face f omits local vertex f.
        // In 2D faces coincide with edges and share their global numbering.
        let mut faces: Vec<Vec<usize>> = Vec::new();
        let mut cell_faces = Vec::with_capacity(cells.len());
        if dim == 2 {
            faces = edges.iter().map(|e| e.to_vec()).collect();
            for c in &cells {
                let ids = (0..=dim)
                    .map(|f| {
                        let key: Vec<usize> =
                            (0..=dim).filter(|&i| i != f).map(|i| c[i]).collect();
                        edge_id[&[key[0], key[1]]]
                    })
                    .collect();
                cell_faces.push(ids);
            }
        } else {
            let mut face_id: HashMap<Vec<usize>, usize> = HashMap::new();
            for c in &cells {
                let mut ids = Vec::with_capacity(dim + 1);
                for f in 0..=dim {
                    let key: Vec<usize> =
                        (0..=dim).filter(|&i| i != f).map(|i| c[i]).collect();
                    let id = *face_id.entry(key.clone()).or_insert_with(|| {
                        faces.push(key);
                        faces.len() - 1
                    });
                    ids.push(id);
                }
                cell_faces.push(ids);
            }
        }

        let mut edge_cells = vec![Vec::new(); edges.len()];
        for (k, ids) in cell_edges.iter().enumerate() {
            for &e in ids {
                edge_cells[e].push(k);
            }
        }
        let mut face_cells = vec![Vec::new(); faces.len()];
        for (k, ids) in cell_faces.iter().enumerate() {
            for &f in ids {
                if !face_cells[f].contains(&k) {
                    face_cells[f].push(k);
                }
            }
        }

        let boundary_face: Vec<bool> = face_cells.iter().map(|cs| cs.len() == 1).collect();
        let mut boundary_edge = vec![false; edges.len()];
        let mut boundary_vertex = vec![false; vertices.len()];
        if dim == 3 {
            let mut bedge: HashMap<[usize; 2], ()> = HashMap::new();
            for (f, verts) in faces.iter().enumerate() {
                if boundary_face[f] {
                    for i in 0..3 {
                        for j in i + 1..3 {
                            bedge.insert([verts[i], verts[j]], ());
                        }
                    }
                    for &v in verts {
                        boundary_vertex[v] = true;
                    }
                }
            }
            for (e, key) in edges.iter().enumerate() {
                boundary_edge[e] = bedge.contains_key(key);
            }
        } else {
            // in 2D faces are edges: the two entity sets coincide index-wise
            for (f, &b) in boundary_face.iter().enumerate() {
                let key = [faces[f][0], faces[f][1]];
                let e = edge_id[&key];
                boundary_edge[e] = b;
                if b {
                    boundary_vertex[key[0]] = true;
                    boundary_vertex[key[1]] = true;
                }
            }
        }

        let h_cell: Vec<f64> = cells
            .iter()
            .map(|c| {
                let pts: Vec<Point> = c.iter().map(|&v| vertices[v]).collect();
                geometry::diameter(&pts)
            })
            .collect();
        let h_max = h_cell.iter().cloned().fold(0.0, f64::max);

        SimplicialMesh {
            dim,
            vertices,
            cells,
            cell_geom,
            edges,
            faces,
            cell_edges,
            cell_faces,
            edge_cells,
            face_cells,
            boundary_face,
            boundary_edge,
            boundary_vertex,
            h_cell,
            h_max,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, k: usize) -> Vec<Point> {
        self.cells[k].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_geom_points(&self, k: usize) -> Vec<Point> {
        self.cell_geom[k].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        [
            self.vertices[self.edges[e][0]],
            self.vertices[self.edges[e][1]],
        ]
    }

    pub fn face_points(&self, f: usize) -> Vec<Point> {
        self.faces[f].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_measure(&self, k: usize) -> f64 {
        geometry::measure(&self.cell_points(k))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|k| self.cell_measure(k)).sum()
    }

    /// Domain diameter (used as the characteristic length scale).
    pub fn domain_diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for c in 0..3 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        geometry::dist(lo, hi)
    }

    /// Cells sharing at least one edge with cell `k`, including `k`.
    pub fn edge_patch(&self, k: usize) -> Result<Patch, FemError> {
        if k >= self.n_cells() {
            return Err(FemError::InvalidCellId(k));
        }
        let mut members: Vec<usize> = self.cell_edges[k]
            .iter()
            .flat_map(|&e| self.edge_cells[e].iter().cloned())
            .collect();
        members.sort_unstable();
        members.dedup();
        Ok(Patch {
            anchor: k,
            members,
            kind: PatchKind::Edge,
        })
    }

    /// Cells sharing at least one face with cell `k`, including `k`.
    pub fn face_patch(&self, k: usize) -> Result<Patch, FemError> {
        if k >= self.n_cells() {
            return Err(FemError::InvalidCellId(k));
        }
        let mut members: Vec<usize> = self.cell_faces[k]
            .iter()
            .flat_map(|&f| self.face_cells[f].iter().cloned())
            .collect();
        members.sort_unstable();
        members.dedup();
        Ok(Patch {
            anchor: k,
            members,
            kind: PatchKind::Face,
        })
    }

    /// max_K h_K / rho_K over all cells.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.n_cells())
            .map(|k| {
                let pts = self.cell_points(k);
                self.h_cell[k] / geometry::inradius(&pts)
            })
            .fold(0.0, f64::max)
    }

    /// One step of uniform red refinement (4 children per triangle, 8 per
    /// tetrahedron following Bey's rule on sorted vertex tuples).
    pub fn uniform_refine(&self) -> SimplicialMesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        // midpoint vertex of edge e gets index nv + e
        for e in &self.edges {
            vertices.push(geometry::midpoint(
                self.vertices[e[0]],
                self.vertices[e[1]],
            ));
        }
        let mid = |cell: usize, li: usize, lj: usize, this: &Self| -> usize {
            let le = local_edges(this.dim)
                .iter()
                .position(|&(a, b)| (a, b) == (li.min(lj), li.max(lj)))
                .unwrap();
            nv + this.cell_edges[cell][le]
        };
        let mut cells = Vec::with_capacity(self.n_cells() * (1 << self.dim));
        for k in 0..self.n_cells() {
            let c = &self.cells[k];
            if self.dim == 2 {
                let (v0, v1, v2) = (c[0], c[1], c[2]);
                let (m01, m02, m12) = (
                    mid(k, 0, 1, self),
                    mid(k, 0, 2, self),
                    mid(k, 1, 2, self),
                );
                cells.push(vec![v0, m01, m02]);
                cells.push(vec![m01, v1, m12]);
                cells.push(vec![m02, m12, v2]);
                cells.push(vec![m01, m12, m02]);
            } else {
                let (v0, v1, v2, v3) = (c[0], c[1], c[2], c[3]);
                let m01 = mid(k, 0, 1, self);
                let m02 = mid(k, 0, 2, self);
                let m03 = mid(k, 0, 3, self);
                let m12 = mid(k, 1, 2, self);
                let m13 = mid(k, 1, 3, self);
                let m23 = mid(k, 2, 3, self);
                // four corner children
                cells.push(vec![v0, m01, m02, m03]);
                cells.push(vec![m01, v1, m12, m13]);
                cells.push(vec![m02, m12, v2, m23]);
                cells.push(vec![m03, m13, m23, v3]);
                // Split the interior octahedron along the diagonal prescribed
                // by the path ordering of the parent: for path-type cells
                // (as produced by Kuhn grids) the vertices (a,b,c,d) with the
                // unique longest edge (a,d) and |ab| < |ac| reproduce the
                // parent's similarity class when split along mid(a,c)-mid(b,d).
                // The rule only uses distances, so congruent cells refine
                // congruently and shape regularity is preserved. Cells
                // without that structure fall back to the shortest diagonal.
                let d2 = |a: usize, b: usize| {
                    let u = geometry::sub(vertices[a], vertices[b]);
                    geometry::dot(u, u)
                };
                let diags = [(m01, m23), (m02, m13), (m03, m12)];
                let mut best = {
                    let mut b = 0usize;
                    for i in 1..3 {
                        if d2(diags[i].0, diags[i].1) < d2(diags[b].0, diags[b].1) - 1e-14 {
                            b = i;
                        }
                    }
                    b
                };
                let locals = [v0, v1, v2, v3];
                let all_pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
                let lens: Vec<f64> = all_pairs
                    .iter()
                    .map(|&(i, j)| d2(locals[i], locals[j]))
                    .collect();
                let lmax = lens.iter().cloned().fold(0.0, f64::max);
                let tol = 1e-12 * lmax;
                if lens.iter().filter(|&&l| l > lmax - tol).count() == 1 {
                    let le = lens.iter().position(|&l| l > lmax - tol).unwrap();
                    let (a, d) = all_pairs[le];
                    let rest: Vec<usize> = (0..4).filter(|&i| i != a && i != d).collect();
                    let (mut b_, mut c_) = (rest[0], rest[1]);
                    let dab = d2(locals[a], locals[b_]);
                    let dac = d2(locals[a], locals[c_]);
                    if (dab - dac).abs() > tol {
                        if dab > dac {
                            std::mem::swap(&mut b_, &mut c_);
                        }
                        // diagonal mid(a,c)-mid(b,d) in path order (a,b,c,d);
                        // identify it among the three octahedron diagonals
                        let key = |i: usize, j: usize| (i.min(j), i.max(j));
                        let ac = key(a, c_);
                        let bd = key(b_, d);
                        let diag_of = |e1: (usize, usize), e2: (usize, usize)| -> usize {
                            let m1 = all_pairs.iter().position(|&p| p == e1).unwrap();
                            let m2 = all_pairs.iter().position(|&p| p == e2).unwrap();
                            // map edge-index pair to diagonal index
                            match (m1.min(m2), m1.max(m2)) {
                                (0, 5) => 0,
                                (1, 4) => 1,
                                (2, 3) => 2,
                                _ => usize::MAX,
                            }
                        };
                        let cand = diag_of(ac, bd);
                        if cand != usize::MAX {
                            best = cand;
                        }
                    }
                }
                let (p, q) = diags[best];
                // the four octahedron faces not containing the diagonal pair
                // each combine with the diagonal into a child tet
                let ring = match best {
                    0 => [m02, m03, m12, m13],
                    1 => [m01, m03, m12, m23],
                    _ => [m01, m02, m13, m23],
                };
                // ring vertices ordered so consecutive ones share an octa edge
                let (r0, r1, r2, r3) = (ring[0], ring[1], ring[2], ring[3]);
                cells.push(vec![p, q, r0, r1]);
                cells.push(vec![p, q, r1, r3]);
                cells.push(vec![p, q, r3, r2]);
                cells.push(vec![p, q, r2, r0]);
            }
        }
        SimplicialMesh::from_cells(self.dim, vertices, cells)
    }
}

/// Geometric red refinement of a bare simplex, used by the singular
/// quadrature pair rules. Returns 2^dim child simplices.
pub fn refine_simplex(pts: &[Point]) -> Vec<Vec<Point>> {
    let m = |i: usize, j: usize| geometry::midpoint(pts[i], pts[j]);
    match pts.len() {
        2 => {
            let c = m(0, 1);
            vec![vec![pts[0], c], vec![c, pts[1]]]
        }
        3 => {
            let (m01, m02, m12) = (m(0, 1), m(0, 2), m(1, 2));
            vec![
                vec![pts[0], m01, m02],
                vec![m01, pts[1], m12],
                vec![m02, m12, pts[2]],
                vec![m01, m12, m02],
            ]
        }
        4 => {
            let (m01, m02, m03) = (m(0, 1), m(0, 2), m(0, 3));
            let (m12, m13, m23) = (m(1, 2), m(1, 3), m(2, 3));
            vec![
                vec![pts[0], m01, m02, m03],
                vec![m01, pts[1], m12, m13],
                vec![m02, m12, pts[2], m23],
                vec![m03, m13, m23, pts[3]],
                vec![m01, m02, m03, m13],
                vec![m01, m02, m12, m13],
                vec![m02, m03, m13, m23],
                vec![m02, m12, m13, m23],
            ]
        }
        n => panic!("simplex with {n} vertices"),
    }
}

fn check_n(n: usize) -> Result<(), FemError> {
    if n == 0 {
        Err(FemError::InvalidParameter(
            "subdivision count n must be >= 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// Tile a set of unit cubes (selected by `keep` on integer cube coordinates)
/// with 6 Kuhn tetrahedra each, n subdivisions per unit axis.
fn kuhn_grid_3d(
    lo: [i64; 3],
    hi: [i64; 3],
    n: usize,
    keep: impl Fn([i64; 3]) -> bool,
) -> SimplicialMesh {
    let n = n as i64;
    let dims = [
        (hi[0] - lo[0]) * n + 1,
        (hi[1] - lo[1]) * n + 1,
        (hi[2] - lo[2]) * n + 1,
    ];
    let vid = |i: i64, j: i64, k: i64| -> usize { ((i * dims[1] + j) * dims[2] + k) as usize };
    let mut used = vec![false; (dims[0] * dims[1] * dims[2]) as usize];
    let mut cells_raw: Vec<[usize; 4]> = Vec::new();
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for i in 0..dims[0] - 1 {
        for j in 0..dims[1] - 1 {
            for k in 0..dims[2] - 1 {
                let cube = [
                    lo[0] + i.div_euclid(n),
                    lo[1] + j.div_euclid(n),
                    lo[2] + k.div_euclid(n),
                ];
                if !keep(cube) {
                    continue;
                }
                for perm in &PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [vid(c[0], c[1], c[2]), 0, 0, 0];
                    for (s, &ax) in perm.iter().enumerate() {
                        c[ax] += 1;
                        tet[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    for &v in &tet {
                        used[v] = true;
                    }
                    cells_raw.push(tet);
                }
            }
        }
    }
    // renumber used vertices
    let mut remap = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    let inv_n = 1.0 / n as f64;
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let v = vid(i, j, k);
                if used[v] {
                    remap[v] = vertices.len();
                    vertices.push([
                        lo[0] as f64 + i as f64 * inv_n,
                        lo[1] as f64 + j as f64 * inv_n,
                        lo[2] as f64 + k as f64 * inv_n,
                    ]);
                }
            }
        }
    }
    let cells = cells_raw
        .into_iter()
        .map(|t| t.iter().map(|&v| remap[v]).collect())
        .collect();
    SimplicialMesh::from_cells(3, vertices, cells)
}

/// Same for 2D: two triangles per grid square, split along the low-high
/// diagonal.
fn kuhn_grid_2d(
    lo: [i64; 2],
    hi: [i64; 2],
    n: usize,
    keep: impl Fn([i64; 2]) -> bool,
) -> SimplicialMesh {
    let n = n as i64;
    let dims = [(hi[0] - lo[0]) * n + 1, (hi[1] - lo[1]) * n + 1];
    let vid = |i: i64, j: i64| -> usize { (i * dims[1] + j) as usize };
    let mut used = vec![false; (dims[0] * dims[1]) as usize];
    let mut cells_raw: Vec<[usize; 3]> = Vec::new();
    for i in 0..dims[0] - 1 {
        for j in 0..dims[1] - 1 {
            let square = [lo[0] + i.div_euclid(n), lo[1] + j.div_euclid(n)];
            if !keep(square) {
                continue;
            }
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            cells_raw.push([a, b, d]);
            cells_raw.push([a, d, c]);
            for v in [a, b, c, d] {
                used[v] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    let inv_n = 1.0 / n as f64;
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            let v = vid(i, j);
            if used[v] {
                remap[v] = vertices.len();
                vertices.push([
                    lo[0] as f64 + i as f64 * inv_n,
                    lo[1] as f64 + j as f64 * inv_n,
                    0.0,
                ]);
            }
        }
    }
    let cells = cells_raw
        .into_iter()
        .map(|t| t.iter().map(|&v| remap[v]).collect())
        .collect();
    SimplicialMesh::from_cells(2, vertices, cells)
}

/// Kuhn triangulation of the unit cube (0,1)^3, 6 n^3 tetrahedra.
pub fn build_unit_cube_mesh(n: usize) -> Result<SimplicialMesh, FemError> {
    check_n(n)?;
    Ok(kuhn_grid_3d([0, 0, 0], [1, 1, 1], n, |_| true))
}

/// Unit square (0,1)^2, 2 n^2 triangles.
pub fn build_unit_square_mesh(n: usize) -> Result<SimplicialMesh, FemError> {
    check_n(n)?;
    Ok(kuhn_grid_2d([0, 0], [1, 1], n, |_| true))
}

/// L-shape (-1,1)^2 minus the quadrant [0,1) x (-1,0].
pub fn build_lshape_mesh(n: usize) -> Result<SimplicialMesh, FemError> {
    check_n(n)?;
    Ok(kuhn_grid_2d([-1, -1], [1, 1], n, |sq| {
        !(sq[0] >= 0 && sq[1] < 0)
    }))
}

/// L-prism: L-shape x (0,1), 18 n^3 tetrahedra.
pub fn build_lprism_mesh(n: usize) -> Result<SimplicialMesh, FemError> {
    check_n(n)?;
    Ok(kuhn_grid_3d([-1, -1, 0], [1, 1, 1], n, |c| {
        !(c[0] >= 0 && c[1] < 0)
    }))
}

/// Fichera corner: (-1,1)^3 minus the octant [0,1)^3, 42 n^3 tetrahedra.
pub fn build_fichera_mesh(n: usize) -> Result<SimplicialMesh, FemError> {
    check_n(n)?;
    Ok(kuhn_grid_3d([-1, -1, -1], [1, 1, 1], n, |c| {
        !(c[0] >= 0 && c[1] >= 0 && c[2] >= 0)
    }))
}

/// Build a domain by name; names match the CLI `list-domains` output.
pub fn build_domain(name: &str, n: usize) -> Result<SimplicialMesh, FemError> {
    match name {
        "cube" => build_unit_cube_mesh(n),
        "square" => build_unit_square_mesh(n),
        "lshape" => build_lshape_mesh(n),
        "lprism" => build_lprism_mesh(n),
        "fichera" => build_fichera_mesh(n),
        other => Err(FemError::UnknownDomain(other.into())),
    }
}

pub const DOMAIN_NAMES: &[&str] = &["cube", "square", "lshape", "lprism", "fichera"];
