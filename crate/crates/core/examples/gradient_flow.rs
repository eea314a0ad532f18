//! Gradient descent to the zero-cost hypersurface, and finite-time blowup of
//! the ascent flow.

use recipgeo::chart::ChartPoint;
use recipgeo::flows::{blowup_time, integrate_flow, integrate_flow_partial, FlowSign};
use recipgeo::tolerance;
use recipgeo::WeightVector;

fn main() -> recipgeo::Result<()> {
    let w = WeightVector::new(vec![1.0, -0.5, 2.0])?;
    let t0 = ChartPoint::log(vec![0.2, 0.1, 0.3])?;

    let down = integrate_flow(&t0, &w, FlowSign::Descent, (0.0, 10.0), tolerance::ODE_TOL)?;
    let last = down.samples.last().unwrap();
    println!(
        "descent: {:?} at tau={:.4}, S={:e}",
        down.termination, last.tau, last.s
    );
    println!(
        "  max error to closed form {:e}",
        down.max_closed_form_error()
    );
    println!("  transverse drift {:e}", down.max_transverse_drift());

    let w = WeightVector::pair(0.5, 0.5)?;
    let t0 = ChartPoint::log(vec![1.0, 1.0])?;
    println!(
        "ascent blowup predicted at {:?}",
        blowup_time(1.0, &w, FlowSign::Ascent)
    );
    let up = integrate_flow_partial(&t0, &w, FlowSign::Ascent, (0.0, 3.0), tolerance::ODE_TOL)?;
    println!("ascent: {:?}", up.termination);
    Ok(())
}
