//! The two flat structures: straight lines in ln x and straight lines in x.

use recipgeo::chart::ChartPoint;
use recipgeo::connection::{affine_connection, projective_obstruction, AffineStructure};
use recipgeo::geodesics::{affine_geodesic_log, affine_geodesic_ratio};

fn main() -> recipgeo::Result<()> {
    let t0 = [0.0, 0.5, -1.0];
    let v = [1.0, -1.0, 0.25];
    for lambda in [0.0, 1.0, 5.0] {
        println!(
            "log-flat at {lambda}: {:?}",
            affine_geodesic_log(&t0, &v, lambda)
        );
    }

    let path = affine_geodesic_ratio(&[1.0, 2.0, 3.0], &[-1.0, 0.0, 1.0])?;
    println!("ratio-flat line stays positive on {:?}", path.interval);
    println!("at 0.5: {:?}", path.at(0.5)?);
    println!("at 2.0: {:?}", path.at(2.0).map_err(|e| e.to_string()));

    let x = ChartPoint::ratio(vec![2.0, 0.5])?;
    println!(
        "log-flat symbols in ratio chart {:?}",
        affine_connection(AffineStructure::LogFlat, &x)?.diag
    );
    println!("projective obstruction {}", projective_obstruction(&x)?);
    Ok(())
}
