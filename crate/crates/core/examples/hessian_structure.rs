//! Rank-one Hessian in log coordinates, nondegenerate Hessian in ratio
//! coordinates, and where the latter degenerates.

use recipgeo::chart::ChartPoint;
use recipgeo::hessian::{
    decompose, det_hessian_ratio, hessian_log, hessian_ratio, radical_basis, singular_s,
};
use recipgeo::tolerance;
use recipgeo::WeightVector;

fn main() -> recipgeo::Result<()> {
    let w = WeightVector::new(vec![1.0, -0.5, 2.0])?;
    let t = ChartPoint::log(vec![0.3, -0.1, 0.2])?;
    let h = hessian_log(&t, &w)?;
    println!("log chart eigenvalues {:?}", h.eigenvalues());
    println!("log chart rank {}", h.rank(tolerance::RANK));
    for v in &radical_basis(&w)?.vectors {
        println!("  kernel vector {v:?}");
    }

    let x = ChartPoint::ratio(vec![2.0, 1.0])?;
    let w2 = WeightVector::pair(1.0, 1.0)?;
    let hr = hessian_ratio(&x, &w2)?;
    let d = decompose(&x, &w2)?;
    println!("ratio chart hessian {:?}", hr);
    println!(
        "A + beta u u^T: beta={} scale={} diag={:?} u={:?}",
        d.beta, d.a_matrix_scale, d.diag, d.u
    );
    println!("det = {}", det_hessian_ratio(&x, &w2)?);

    // the degenerate level S* exists only for |sum alpha| < 1
    for sum in [0.5, 0.9, 1.0, 1.5] {
        let w = WeightVector::pair(sum / 2.0, sum / 2.0)?;
        match singular_s(&w) {
            Some(root) => println!("sum={sum}: singular at S*={:.12}", root.s_star),
            None => println!("sum={sum}: no singular level"),
        }
    }
    Ok(())
}
