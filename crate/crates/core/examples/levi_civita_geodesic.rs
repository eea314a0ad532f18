//! Geodesics of the ratio-chart Hessian metric, checked against the
//! independent (q, r) form of the equations.

use recipgeo::connection::SingularContext;
use recipgeo::geodesics::{integrate_geodesic, qr_residual, GeodesicState, RhsKind};
use recipgeo::tolerance;

fn run(a: f64, b: f64, x0: [f64; 2], v0: [f64; 2], span: (f64, f64)) -> recipgeo::Result<()> {
    let traj = integrate_geodesic(
        RhsKind::Xy,
        a,
        b,
        &GeodesicState::xy(span.0, x0, v0),
        span,
        tolerance::ODE_TOL,
    )?;
    let residual = qr_residual(&traj, a, b)?;
    let worst = traj
        .samples
        .iter()
        .zip(&residual)
        .filter(|(s, _)| {
            SingularContext::new(a, b, s.position[0], s.position[1])
                .is_ok_and(|c| c.delta.abs() > 1e-3)
        })
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    let end = traj.last();
    println!(
        "a={a:.4} b={b} from {x0:?}: stopped at lambda={:.6} ({:?}) at {:?}, {} samples, residual {worst:e}",
        end.lambda,
        traj.termination,
        end.position,
        traj.samples.len()
    );
    Ok(())
}

fn main() -> recipgeo::Result<()> {
    run(1.0 / 3.0, 0.5, [4.0, 2.0], [-1.0, 1.0], (0.0, 10.0))?;
    run(1.0 / 3.0, 0.5, [4.0, 2.0], [-1.0, 1.0], (0.0, -10.0))?;
    run(-2.0, 1.0, [1.0, 2.0], [-1.0, 3.0], (0.0, 10.0))?;
    Ok(())
}
