//! Small fixed-size vector helpers. Points are `[f64; 3]` throughout; 2D
//! meshes keep the third coordinate at zero.

pub type Point = [f64; 3];

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(s: f64, a: Point) -> Point {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn axpy(s: f64, a: Point, b: Point) -> Point {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2]]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn midpoint(a: Point, b: Point) -> Point {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

/// Rotation by +pi/2 in the xy-plane.
pub fn rot90(a: Point) -> Point {
    [-a[1], a[0], a[2]]
}

/// Signed volume of a tetrahedron (or signed area of a triangle when the
/// vertices lie in the xy-plane and `pts.len() == 3`).
pub fn signed_measure(pts: &[Point]) -> f64 {
    match pts.len() {
        2 => dist(pts[0], pts[1]),
        3 => {
            let e1 = sub(pts[1], pts[0]);
            let e2 = sub(pts[2], pts[0]);
            0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        }
        4 => {
            let e1 = sub(pts[1], pts[0]);
            let e2 = sub(pts[2], pts[0]);
            let e3 = sub(pts[3], pts[0]);
            dot(e1, cross(e2, e3)) / 6.0
        }
        n => panic!("simplex with {n} vertices"),
    }
}

pub fn measure(pts: &[Point]) -> f64 {
    signed_measure(pts).abs()
}

pub fn diameter(pts: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

/// Inradius of a triangle (2A / perimeter) or tetrahedron (3V / surface area).
pub fn inradius(pts: &[Point]) -> f64 {
    match pts.len() {
        3 => {
            let a = measure(pts);
            let p = dist(pts[0], pts[1]) + dist(pts[1], pts[2]) + dist(pts[2], pts[0]);
            2.0 * a / p
        }
        4 => {
            let v = measure(pts);
            let mut s = 0.0;
            for skip in 0..4 {
                let face: Vec<Point> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                s += triangle_area(&face);
            }
            3.0 * v / s
        }
        n => panic!("simplex with {n} vertices"),
    }
}

/// Area of a triangle with arbitrary orientation in 3D.
pub fn triangle_area(pts: &[Point]) -> f64 {
    let e1 = sub(pts[1], pts[0]);
    let e2 = sub(pts[2], pts[0]);
    0.5 * norm(cross(e1, e2))
}

/// Unit normal of a triangle by the right-hand rule on its vertex order.
pub fn triangle_normal(pts: &[Point]) -> Point {
    let n = cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
    let l = norm(n);
    scale(1.0 / l, n)
}

/// Gradients of the barycentric coordinates of a `dim`-simplex given in
/// physical coordinates. Returns one gradient per vertex.
pub fn barycentric_gradients(pts: &[Point], dim: usize) -> Vec<Point> {
    match dim {
        2 => {
            let mut grads = Vec::with_capacity(3);
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                // perpendicular to the opposite edge, normalized so that
                // grad lambda_i . (v_i - v_j) = 1
                let e = sub(pts[k], pts[j]);
                let g = [-e[1], e[0], 0.0];
                let s = dot(g, sub(pts[i], pts[j]));
                grads.push(scale(1.0 / s, g));
            }
            grads
        }
        3 => {
            let mut grads = Vec::with_capacity(4);
            for i in 0..4 {
                let others: Vec<Point> = (0..4).filter(|&m| m != i).map(|m| pts[m]).collect();
                let g = cross(sub(others[1], others[0]), sub(others[2], others[0]));
                let s = dot(g, sub(pts[i], others[0]));
                grads.push(scale(1.0 / s, g));
            }
            grads
        }
        d => panic!("unsupported dimension {d}"),
    }
}

/// Barycentric coordinates of `x` with respect to a `dim`-simplex.
pub fn barycentric_coords(pts: &[Point], dim: usize, x: Point) -> Vec<f64> {
    let grads = barycentric_gradients(pts, dim);
    let mut lambdas = Vec::with_capacity(dim + 1);
    for (i, g) in grads.iter().enumerate() {
        lambdas.push(dot(*g, sub(x, pts[i])) + 1.0);
    }
    lambdas
}
