//! Closed-form Christoffel symbols against the finite-difference oracle, and
//! the Ricci scalar in both charts.

use recipgeo::connection::{
    christoffel_from_metric_steps, curvature_from_christoffel, lc_christoffel_xy, metric_xy,
    ricci_q, ricci_xy,
};

fn main() -> recipgeo::Result<()> {
    let (a, b) = (1.0 / 3.0, 0.5);
    let p = [4.0, 2.0];
    let closed = lc_christoffel_xy(a, b, p[0], p[1])?;
    let oracle = christoffel_from_metric_steps(metric_xy(a, b), p, [1e-5 * p[0], 1e-5 * p[1]])?;
    println!("christoffel components {:?}", closed.components());
    println!(
        "scaled difference to oracle {:e}",
        closed.scaled_diff(&oracle)
    );

    let (a, b) = (0.5, 0.5);
    let z = 4.0;
    let r = ricci_xy(a, b, z)?;
    println!("ricci at Z=4: {r} (-8/9 = {})", -8.0 / 9.0);
    println!("same point through q: {}", ricci_q(a, b, 0.5 * z.ln())?);

    // x = 4, y = 1 has Z = x y = 4
    let gamma = |q: [f64; 2]| lc_christoffel_xy(a, b, q[0], q[1]);
    let numeric = curvature_from_christoffel(gamma, [4.0, 1.0], 1e-5, metric_xy(a, b))?;
    println!("from the curvature of the connection: {numeric}");

    println!("opposite exponents: {}", ricci_xy(0.7, -0.7, 3.0)?);
    Ok(())
}
