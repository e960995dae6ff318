//! Catalog of closed-form target vector fields with regularity metadata
//! (Sobolev index r*, curl/divergence integrability q_ok, boundary-trace
//! flags, singular locus), used as ground truth throughout the studies.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::FemError;
use crate::geometry::{self, Point};

/// Anything that can be evaluated as a vector field. Broken FE functions
/// override the cell-aware evaluator.
pub trait VectorField: Sync {
    fn name(&self) -> &str {
        "field"
    }
    fn dim(&self) -> usize;
    fn eval(&self, x: Point) -> Point;
    fn eval_in_cell(&self, _cell: usize, x: Point) -> Point {
        self.eval(x)
    }
    /// True when the field blows up on (all of) the given entity vertices.
    fn singular_on(&self, _entity: &[Point]) -> bool {
        false
    }
    /// Conservative test: the field vanishes identically on the given box.
    fn vanishes_on(&self, _lo: Point, _hi: Point) -> bool {
        false
    }
}

/// Lightweight adapter turning a closure into a field (test/glue helper).
pub struct ClosureField<F: Fn(Point) -> Point + Sync> {
    dim: usize,
    f: F,
}

impl<F: Fn(Point) -> Point + Sync> ClosureField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        ClosureField { dim, f }
    }
}

impl<F: Fn(Point) -> Point + Sync> VectorField for ClosureField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: Point) -> Point {
        (self.f)(x)
    }
}

/// Description of where a field is singular.
#[derive(Debug, Clone, PartialEq)]
pub enum Locus {
    Empty,
    /// infinite line through `point` with unit direction `dir`
    Line { point: Point, dir: Point },
    Point(Point),
}

impl Locus {
    pub fn distance(&self, x: Point) -> f64 {
        match self {
            Locus::Empty => f64::INFINITY,
            Locus::Line { point, dir } => {
                let d = geometry::sub(x, *point);
                let along = geometry::dot(d, *dir);
                geometry::norm(geometry::axpy(-along, *dir, d))
            }
            Locus::Point(p) => geometry::dist(x, *p),
        }
    }
}

pub type VecFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Closed-form vector field with evaluators and regularity metadata.
#[derive(Clone)]
pub struct AnalyticField {
    pub name: String,
    pub dim: usize,
    value: VecFn,
    /// 3D vector curl; in 2D the scalar rot is stored in the z component
    curl: Option<VecFn>,
    div: Option<ScalarFn>,
    /// curl curl v, available for smooth fields used as Maxwell solutions
    curl_curl: Option<VecFn>,
    /// supremum of r with v in H^r (infinity when smooth)
    pub r_star: f64,
    /// largest q <= 2 with curl/div in L^q (2 when bounded)
    pub q_ok: f64,
    pub tangential_trace_zero: bool,
    pub normal_trace_zero: bool,
    pub locus: Locus,
    /// bounding box outside of which the field vanishes identically
    pub support: Option<(Point, Point)>,
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("r_star", &self.r_star)
            .field("q_ok", &self.q_ok)
            .field("locus", &self.locus)
            .finish()
    }
}

impl AnalyticField {
    /// Smooth field from value and optional curl evaluators (no singular
    /// locus, unrestricted support).
    pub fn from_parts(name: &str, dim: usize, value: VecFn, curl: Option<VecFn>) -> Self {
        AnalyticField {
            name: name.to_string(),
            dim,
            value,
            curl,
            div: None,
            curl_curl: None,
            r_star: f64::INFINITY,
            q_ok: 2.0,
            tangential_trace_zero: false,
            normal_trace_zero: false,
            locus: Locus::Empty,
            support: None,
        }
    }

    pub fn curl(&self, x: Point) -> Option<Point> {
        self.curl.as_ref().map(|f| f(x))
    }
    pub fn div(&self, x: Point) -> Option<f64> {
        self.div.as_ref().map(|f| f(x))
    }
    pub fn curl_curl(&self, x: Point) -> Option<Point> {
        self.curl_curl.as_ref().map(|f| f(x))
    }
    pub fn has_curl(&self) -> bool {
        self.curl.is_some()
    }
    pub fn has_div(&self) -> bool {
        self.div.is_some()
    }
}

impl VectorField for AnalyticField {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: Point) -> Point {
        (self.value)(x)
    }
    fn singular_on(&self, entity: &[Point]) -> bool {
        if self.locus == Locus::Empty {
            return false;
        }
        entity.iter().all(|&p| self.locus.distance(p) < 1e-9)
    }
    fn vanishes_on(&self, lo: Point, hi: Point) -> bool {
        match self.support {
            None => false,
            Some((slo, shi)) => (0..self.dim).any(|c| hi[c] < slo[c] || lo[c] > shi[c]),
        }
    }
}

/// C^2 smoothstep on [0,1].
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn smoothstep_d(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        30.0 * t * t * (t - 1.0) * (t - 1.0)
    }
}

/// Radial cutoff: identically 1 inside radius 0.1, 0 outside 0.95. The
/// transition is as wide as the domain allows, which minimizes the cutoff's
/// own curvature mass; the smooth remainder of the interpolation error then
/// stays small relative to the singular part, so convergence studies reach
/// the low-regularity regime on coarse meshes.
pub fn cutoff_chi(rho: f64) -> f64 {
    1.0 - smoothstep((rho - 0.1) / 0.85)
}

pub fn cutoff_chi_d(rho: f64) -> f64 {
    -smoothstep_d((rho - 0.1) / 0.85) / 0.85
}

/// Axial bump on (0,1): 0 at z=0 and z=1, 1 at z=0.5. Analytic (no spline
/// seams) and maximal-width for the same curvature-mass reason as
/// `cutoff_chi`.
fn cutoff_zeta(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    (PI * z).sin()
}

fn cutoff_zeta_d(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    PI * (PI * z).cos()
}

/// Angle around the z-axis measured from the positive x-axis, mapped to
/// [0, 2 pi) so the re-entrant material of the L-shape covers [0, 3 pi / 2].
fn wedge_angle(x: f64, y: f64) -> f64 {
    let t = y.atan2(x);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Angular frequency of the singular fields used in convergence studies.
/// Any multiple of 2/3 keeps sin(nu theta) zero on both faces of the
/// re-entrant wedge (theta = 0 and theta = 3 pi / 2). Taking nu = 2 instead
/// of the minimal 2/3 makes the field oscillate azimuthally, so the
/// interpolation error is dominated by the self-similar power structure
/// rather than by the cutoff, and studies show the h^lambda rate already on
/// coarse meshes.
const STUDY_NU: f64 = 2.0;

/// In-plane gradient of chi(rho) rho^lambda sin(nu theta), the scalar
/// potential with a power singularity at the (2D) origin. Returns
/// (d/dx, d/dy, 0).
fn power_potential_gradient_nu(x: f64, y: f64, lambda: f64, nu: f64) -> Point {
    let rho = x.hypot(y);
    if rho < 1e-150 || rho > 0.95 {
        return [0.0, 0.0, 0.0];
    }
    let theta = wedge_angle(x, y);
    let s = (nu * theta).sin();
    let sd = nu * (nu * theta).cos();
    let chi = cutoff_chi(rho);
    let chid = cutoff_chi_d(rho);
    let f_r = s * (chid * rho.powf(lambda) + lambda * chi * rho.powf(lambda - 1.0));
    let f_t = chi * rho.powf(lambda - 1.0) * sd;
    let (c, sn) = (x / rho, y / rho);
    [f_r * c - f_t * sn, f_r * sn + f_t * c, 0.0]
}

/// The classical corner potential gradient: nu = 2/3, harmonic before the
/// cutoff when lambda = 2/3.
fn power_potential_gradient(x: f64, y: f64, lambda: f64) -> Point {
    power_potential_gradient_nu(x, y, lambda, 2.0 / 3.0)
}

/// 3D gradient of chi(rho) zeta(z) rho^lambda sin(nu theta): power-line
/// singularity along the z-axis (the re-entrant edge of the L-prism), zero
/// tangential trace on the L-prism boundary, exact curl zero, r* = lambda.
fn grad_power_line_value(p: Point, lambda: f64) -> Point {
    let [x, y, z] = p;
    let zeta = cutoff_zeta(z);
    let zetad = cutoff_zeta_d(z);
    let rho = x.hypot(y);
    if rho < 1e-150 || rho > 0.95 || (zeta == 0.0 && zetad == 0.0) {
        return [0.0, 0.0, 0.0];
    }
    let g = power_potential_gradient_nu(x, y, lambda, STUDY_NU);
    let theta = wedge_angle(x, y);
    let s = (STUDY_NU * theta).sin();
    let chi = cutoff_chi(rho);
    [
        zeta * g[0],
        zeta * g[1],
        chi * rho.powf(lambda) * s * zetad,
    ]
}

/// Parameters accepted by `get_field`.
#[derive(Debug, Clone)]
pub struct FieldParams {
    /// power-law exponent for the singular fields; must lie in (0,1)
    pub lambda: Option<f64>,
    /// ambient dimension for the fields that exist in both 2D and 3D
    pub dim: usize,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            lambda: None,
            dim: 3,
        }
    }
}

pub const FIELD_NAMES: [(&str, &str); 7] = [
    ("constant", "constant vector (1,1,1); smooth, curl = div = 0"),
    ("linear_non_nedelec", "v(x) = x; smooth, curl = 0, div = d"),
    (
        "smooth_trig",
        "divergence-free trigonometric field on the unit cube with zero tangential trace",
    ),
    (
        "grad_power_line",
        "gradient field with an r* = lambda power singularity along the re-entrant edge of the L-prism",
    ),
    (
        "lshape_grad",
        "2D gradient field with the r* = 2/3 corner singularity of the L-shape",
    ),
    (
        "mixed_singular",
        "grad_power_line plus a smooth non-gradient part (bounded nonzero curl)",
    ),
    (
        "rot_power",
        "2D divergence-free field with an r* = lambda corner singularity (for RT studies)",
    ),
];

fn check_lambda(params: &FieldParams) -> Result<f64, FemError> {
    match params.lambda {
        Some(l) if l > 0.0 && l < 1.0 => Ok(l),
        Some(l) => Err(FemError::InvalidParameter(format!(
            "lambda = {l} outside (0,1)"
        ))),
        None => Err(FemError::InvalidParameter(
            "field requires a lambda parameter in (0,1)".into(),
        )),
    }
}

pub fn get_field(name: &str, params: &FieldParams) -> Result<AnalyticField, FemError> {
    let dim = params.dim;
    match name {
        "constant" => Ok(AnalyticField {
            name: name.into(),
            dim,
            value: Arc::new(move |_| {
                if dim == 2 {
                    [1.0, 1.0, 0.0]
                } else {
                    [1.0, 1.0, 1.0]
                }
            }),
            curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
            div: Some(Arc::new(|_| 0.0)),
            curl_curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
            r_star: f64::INFINITY,
            q_ok: 2.0,
            tangential_trace_zero: false,
            normal_trace_zero: false,
            locus: Locus::Empty,
            support: None,
        }),
        "linear_non_nedelec" => Ok(AnalyticField {
            name: name.into(),
            dim,
            value: Arc::new(move |p| if dim == 2 { [p[0], p[1], 0.0] } else { p }),
            curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
            div: Some(Arc::new(move |_| dim as f64)),
            curl_curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
            r_star: f64::INFINITY,
            q_ok: 2.0,
            tangential_trace_zero: false,
            normal_trace_zero: false,
            locus: Locus::Empty,
            support: None,
        }),
        "smooth_trig" => Ok(AnalyticField {
            name: name.into(),
            dim: 3,
            value: Arc::new(|p| {
                let [x, y, z] = [PI * p[0], PI * p[1], PI * p[2]];
                [y.sin() * z.sin(), x.sin() * z.sin(), x.sin() * y.sin()]
            }),
            curl: Some(Arc::new(|p| {
                let [x, y, z] = [PI * p[0], PI * p[1], PI * p[2]];
                [
                    PI * x.sin() * (y.cos() - z.cos()),
                    PI * y.sin() * (z.cos() - x.cos()),
                    PI * z.sin() * (x.cos() - y.cos()),
                ]
            })),
            div: Some(Arc::new(|_| 0.0)),
            curl_curl: Some(Arc::new(|p| {
                let [x, y, z] = [PI * p[0], PI * p[1], PI * p[2]];
                let a = [y.sin() * z.sin(), x.sin() * z.sin(), x.sin() * y.sin()];
                geometry::scale(2.0 * PI * PI, a)
            })),
            r_star: f64::INFINITY,
            q_ok: 2.0,
            tangential_trace_zero: true,
            normal_trace_zero: false,
            locus: Locus::Empty,
            support: None,
        }),
        "grad_power_line" => {
            let lambda = check_lambda(params)?;
            Ok(AnalyticField {
                name: name.into(),
                dim: 3,
                value: Arc::new(move |p| grad_power_line_value(p, lambda)),
                // gradient field: curl is exactly zero
                curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
                div: None,
                curl_curl: None,
                r_star: lambda,
                q_ok: 2.0,
                tangential_trace_zero: true,
                normal_trace_zero: false,
                locus: Locus::Line {
                    point: [0.0, 0.0, 0.0],
                    dir: [0.0, 0.0, 1.0],
                },
                support: Some(([-0.95, -0.95, 0.0], [0.95, 0.95, 1.0])),
            })
        }
        "lshape_grad" => Ok(AnalyticField {
            name: name.into(),
            dim: 2,
            value: Arc::new(|p| power_potential_gradient(p[0], p[1], 2.0 / 3.0)),
            curl: Some(Arc::new(|_| [0.0, 0.0, 0.0])),
            div: None,
            curl_curl: None,
            r_star: 2.0 / 3.0,
            q_ok: 2.0,
            tangential_trace_zero: true,
            normal_trace_zero: false,
            locus: Locus::Point([0.0, 0.0, 0.0]),
            support: Some(([-0.95, -0.95, 0.0], [0.95, 0.95, 0.0])),
        }),
        "mixed_singular" => {
            let lambda = check_lambda(params)?;
            Ok(AnalyticField {
                name: name.into(),
                dim: 3,
                value: Arc::new(move |p| {
                    let g = grad_power_line_value(p, lambda);
                    [
                        g[0] + 0.5 * p[1] * p[1],
                        g[1] + 0.5 * p[2] * p[2],
                        g[2] + 0.5 * p[0] * p[0],
                    ]
                }),
                curl: Some(Arc::new(|p| [-p[2], -p[0], -p[1]])),
                div: None,
                curl_curl: None,
                r_star: lambda,
                q_ok: 2.0,
                tangential_trace_zero: false,
                normal_trace_zero: false,
                locus: Locus::Line {
                    point: [0.0, 0.0, 0.0],
                    dir: [0.0, 0.0, 1.0],
                },
                support: None,
            })
        }
        "rot_power" => {
            let lambda = check_lambda(params)?;
            Ok(AnalyticField {
                name: name.into(),
                dim: 2,
                value: Arc::new(move |p| {
                    let g = power_potential_gradient_nu(p[0], p[1], lambda, STUDY_NU);
                    [g[1], -g[0], 0.0]
                }),
                curl: None,
                div: Some(Arc::new(|_| 0.0)),
                curl_curl: None,
                r_star: lambda,
                q_ok: 2.0,
                tangential_trace_zero: false,
                normal_trace_zero: true,
                locus: Locus::Point([0.0, 0.0, 0.0]),
                support: Some(([-0.95, -0.95, 0.0], [0.95, 0.95, 0.0])),
            })
        }
        _ => Err(FemError::UnknownField(name.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{edge_dof, face_dof};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_and_validation() {
        assert!(get_field("nope", &FieldParams::default()).is_err());
        let bad = FieldParams {
            lambda: Some(1.5),
            dim: 3,
        };
        assert!(get_field("grad_power_line", &bad).is_err());
        assert!(get_field("grad_power_line", &FieldParams::default()).is_err());
        let ok = FieldParams {
            lambda: Some(0.3),
            dim: 3,
        };
        let f = get_field("grad_power_line", &ok).unwrap();
        assert_eq!(f.r_star, 0.3);
        assert_eq!(f.q_ok, 2.0);
        assert_eq!(f.curl([0.3, 0.2, 0.4]).unwrap(), [0.0, 0.0, 0.0]);
        let c = get_field("constant", &FieldParams::default()).unwrap();
        assert!(c.r_star.is_infinite());
        assert_eq!(c.curl([0.1, 0.1, 0.1]).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn smooth_trig_tangential_trace_zero_on_x0() {
        let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
        for (y, z) in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let v = f.eval([0.0, y, z]);
            assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        }
    }

    #[test]
    fn stokes_check_on_random_small_triangles() {
        // circulation around small triangles matches the flux of the curl
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let p = FieldParams {
            lambda: Some(0.3),
            dim: 3,
        };
        let rule = crate::quadrature::simplex_rule(2, 10).unwrap();
        for name in ["constant", "linear_non_nedelec", "smooth_trig", "mixed_singular"] {
            let f = get_field(name, &p).unwrap();
            for _ in 0..5 {
                // center away from the z-axis locus, inside the L-prism
                let c = [
                    -0.6 + 0.2 * rng.gen::<f64>(),
                    0.3 + 0.2 * rng.gen::<f64>(),
                    0.3 + 0.2 * rng.gen::<f64>(),
                ];
                let mut tri = [[0.0; 3]; 3];
                for v in tri.iter_mut() {
                    *v = [
                        c[0] + 0.05 * (rng.gen::<f64>() - 0.5),
                        c[1] + 0.05 * (rng.gen::<f64>() - 0.5),
                        c[2] + 0.05 * (rng.gen::<f64>() - 0.5),
                    ];
                }
                let circulation = edge_dof(&f, &[tri[0], tri[1]]).unwrap()
                    + edge_dof(&f, &[tri[1], tri[2]]).unwrap()
                    + edge_dof(&f, &[tri[2], tri[0]]).unwrap();
                let n = geometry::triangle_normal(&tri);
                let flux = rule.integrate_on(&tri, |x| geometry::dot(f.curl(x).unwrap(), n));
                assert!(
                    (circulation - flux).abs() < 1e-6,
                    "{name}: {circulation} vs {flux}"
                );
            }
        }
    }

    #[test]
    fn grad_power_line_traces_and_locus() {
        let p = FieldParams {
            lambda: Some(0.3),
            dim: 3,
        };
        let f = get_field("grad_power_line", &p).unwrap();
        // vanishes outside its support cylinder
        assert_eq!(f.eval([0.9, 0.5, 0.5]), [0.0, 0.0, 0.0]);
        // tangential components vanish on the bottom face z = 0
        let v = f.eval([-0.3, 0.3, 0.0]);
        assert!(v[0].abs() < 1e-13 && v[1].abs() < 1e-13, "{v:?}");
        // tangential components vanish on the two re-entrant faces
        // face theta = 0: {x > 0, y = 0}: tangential = (v_x, v_z)
        let v = f.eval([0.2, 0.0, 0.5]);
        assert!(v[0].abs() < 1e-13 && v[2].abs() < 1e-13, "{v:?}");
        // face theta = 3 pi / 2: {x = 0, y < 0}: tangential = (v_y, v_z)
        let v = f.eval([0.0, -0.2, 0.5]);
        assert!(v[1].abs() < 1e-13 && v[2].abs() < 1e-13, "{v:?}");
        // singular on an edge lying on the axis, not on nearby edges
        assert!(f.singular_on(&[[0.0, 0.0, 0.25], [0.0, 0.0, 0.5]]));
        assert!(!f.singular_on(&[[0.0, 0.0, 0.25], [0.25, 0.0, 0.5]]));
        // blows up approaching the axis
        let near = geometry::norm(f.eval([1e-6, 1e-6, 0.5]));
        let far = geometry::norm(f.eval([0.1, 0.1, 0.5]));
        assert!(near > 100.0 * far);
        // support-box query
        assert!(f.vanishes_on([0.96, 0.96, 0.5], [1.0, 1.0, 1.0]));
        assert!(!f.vanishes_on([-0.1, -0.1, 0.4], [0.1, 0.1, 0.6]));
    }

    #[test]
    fn lshape_grad_zero_tangential_trace_2d() {
        let f = get_field("lshape_grad", &FieldParams { lambda: None, dim: 2 }).unwrap();
        // re-entrant boundary edges of the L-shape: theta = 0 (positive x-axis)
        // and theta = 3 pi / 2 (negative y-axis); tangential component vanishes
        let v = f.eval([0.3, 0.0, 0.0]);
        assert!(v[0].abs() < 1e-13, "{v:?}");
        let v = f.eval([0.0, -0.3, 0.0]);
        assert!(v[1].abs() < 1e-13, "{v:?}");
    }

    #[test]
    fn rot_power_divergence_free_flux() {
        // net flux through a small closed square boundary is zero
        let p = FieldParams {
            lambda: Some(0.3),
            dim: 2,
        };
        let f = get_field("rot_power", &p).unwrap();
        assert_eq!(f.div([0.1, 0.2, 0.0]).unwrap(), 0.0);
        let a = [-0.32, 0.11, 0.0];
        let s = 0.02;
        let corners = [
            a,
            [a[0] + s, a[1], 0.0],
            [a[0] + s, a[1] + s, 0.0],
            [a[0], a[1] + s, 0.0],
        ];
        let mut flux = 0.0;
        for i in 0..4 {
            let e = [corners[i], corners[(i + 1) % 4]];
            // 2D face_dof normal is (t_y, -t_x): outward for ccw traversal
            flux += face_dof(&f, &e).unwrap();
        }
        // zero up to the Gauss quadrature error on the non-polynomial field
        assert!(flux.abs() < 1e-8, "{flux}");
    }

    #[test]
    fn mixed_singular_has_bounded_nonzero_curl() {
        let p = FieldParams {
            lambda: Some(0.3),
            dim: 3,
        };
        let f = get_field("mixed_singular", &p).unwrap();
        let c = f.curl([0.5, 0.25, 0.75]).unwrap();
        assert!(geometry::norm(c) > 0.1);
        assert_eq!(c, [-0.75, -0.5, -0.25]);
    }
}
