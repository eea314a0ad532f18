//! The cost J = cosh(S) - 1 evaluated in the three charts.

use recipgeo::chart::{transform, Chart, ChartPoint};
use recipgeo::cost::{cost_any, reciprocal_cost};
use recipgeo::WeightVector;

fn main() -> recipgeo::Result<()> {
    let w = WeightVector::pair(1.0 / 3.0, 0.5)?;
    let x = ChartPoint::ratio(vec![4.0, 2.0])?;

    for chart in [Chart::Ratio, Chart::Log, Chart::Qr] {
        let p = transform(&x, chart, &w)?;
        let s = cost_any(&p, &w)?;
        println!(
            "{chart:?}: coords={:?} J={:.12} R={:.12} S={:.12}",
            p.coords(),
            s.j,
            s.r,
            s.s
        );
    }

    // one dimension: J(x) = (x + 1/x)/2 - 1
    for v in [0.5, 1.0, 2.0, 10.0] {
        println!("J({v}) = {}", reciprocal_cost(v));
    }

    // the geometric mean is only reported for the canonical weights 1/n
    let canon = WeightVector::canonical(3)?;
    let s = cost_any(&ChartPoint::ratio(vec![1.0, 2.0, 4.0])?, &canon)?;
    println!("canonical n=3: J={} G={:?}", s.j, s.g);
    Ok(())
}
