//! The seeded invariant suites, as run by the `verify` subcommand.

use recipgeo::verify::{run_all, VerifyOptions};

fn main() -> recipgeo::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let checks = run_all(&VerifyOptions {
        seed,
        perturb_christoffel: false,
    })?;
    for c in &checks {
        println!(
            "{:<22} {:<30} {:>5} {:>12.3e} {:>10.1e} {}",
            c.suite,
            c.check,
            c.samples,
            c.max_error,
            c.tolerance,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
