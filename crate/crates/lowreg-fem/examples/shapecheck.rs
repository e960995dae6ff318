use lowreg_fem::fields::{get_field, FieldParams};
use lowreg_fem::quadrature::simplex_rule;
fn main() {
    let mesh = lowreg_fem::mesh::build_unit_cube_mesh(1).unwrap();
    let f = get_field("smooth_trig", &FieldParams::default()).unwrap();
    use lowreg_fem::fields::VectorField;
    let pts = mesh.cell_points(3);
    for deg in [4, 6, 8, 10] {
        let rule = simplex_rule(3, deg).unwrap();
        let v: Vec<f64> = (0..3)
            .map(|c| rule.integrate_on(&pts, |x| f.eval(x)[c]) / mesh.cell_measure(3))
            .collect();
        println!("deg {deg}: {v:?}");
    }
}
