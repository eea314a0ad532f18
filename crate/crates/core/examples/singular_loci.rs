//! Where the ratio-chart metric degenerates and where its curvature vanishes.

use recipgeo::cli::{locus_table, output::Cell, FLAG_RICCI_ZERO, FLAG_SINGULAR, FLAG_ZERO_COST};
use recipgeo::connection::SingularContext;

fn main() -> recipgeo::Result<()> {
    for (a, b) in [(1.0 / 3.0, 0.5), (-2.0, 1.0), (1.5, 1.0)] {
        let table = locus_table(a, b, 101, 3.0);
        let count = |bit| {
            table
                .rows
                .iter()
                .filter(|r| matches!(r[5], Cell::Int(f) if f & bit != 0))
                .count()
        };
        println!(
            "a={a:.3} b={b}: zero-cost cells {}, singular cells {}, ricci-zero cells {}",
            count(FLAG_ZERO_COST),
            count(FLAG_SINGULAR),
            count(FLAG_RICCI_ZERO)
        );
    }

    let c = SingularContext::new(1.0 / 3.0, 0.5, 4.0, 2.0)?;
    println!("at (4, 2): Z={} Delta={}", c.z, c.delta);
    Ok(())
}
