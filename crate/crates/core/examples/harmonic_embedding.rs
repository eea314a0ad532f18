//! The cost pulled back through a map of harmonic modes on the torus, and the
//! functional-equation characterization of J.

use recipgeo::cost::{composition_residual, harmonic_cost, log_curvature, reciprocal_cost};

fn main() -> recipgeo::Result<()> {
    let a = [1.0, 0.5, -0.3, 0.2, 0.0, 0.1, 0.4, -0.2];
    for (r, s) in [(0.0, 0.0), (1.0, 2.0), (3.0, -1.0)] {
        let c = harmonic_cost(r, s, &a)?;
        println!("r={r} s={s}: J={:.12}", c.j);
    }

    println!(
        "composition residual of J at (2, 3): {:e}",
        composition_residual(reciprocal_cost, 2.0, 3.0)?
    );
    println!(
        "log curvature of J: {}",
        log_curvature(reciprocal_cost, 1e-3)?
    );
    let perturbed = |x: f64| 1.001 * reciprocal_cost(x);
    println!(
        "perturbed residual: {:e}",
        composition_residual(perturbed, 2.0, 3.0)?
    );
    Ok(())
}
