//! Divergences, Fisher information and the mean function of the
//! normal-family realization.

use recipgeo::chart::ChartPoint;
use recipgeo::hessian::hessian_log;
use recipgeo::infogeo::{
    bregman, bregman_order_check, fisher_by_quadrature, fisher_info, itakura_saito, mean_function,
    symmetrized_is,
};
use recipgeo::WeightVector;

fn main() -> recipgeo::Result<()> {
    let w = WeightVector::pair(0.7, -0.4)?;
    let x = ChartPoint::ratio(vec![3.0, 0.5])?;
    println!("IS(2, 1) = {}", itakura_saito(2.0, 1.0)?.value);
    println!(
        "symmetrized IS at x = {} (equals 2J)",
        symmetrized_is(&x, &w)?
    );

    let t = ChartPoint::log(vec![0.4, -0.2])?;
    println!("bregman {}", bregman(&t, &[0.1, 0.3], &w)?.value);
    let order = bregman_order_check(&t, &[1.0, 1.0], &w)?;
    println!("remainder slope {:.3}", order.slope);

    let f = fisher_info(&t, &w)?;
    let h = hessian_log(&t, &w)?;
    println!("fisher {:?}", f);
    println!("hessian {:?}", h);

    let s = w.dot(t.coords());
    let m = mean_function(s)?;
    println!("m({s}) = {}, m'({s}) = {}", m.m, m.m_prime);
    println!(
        "one-parameter fisher by quadrature {} vs cosh S {}",
        fisher_by_quadrature(1.0, s, 40)?,
        s.cosh()
    );
    Ok(())
}
