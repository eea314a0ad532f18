//! Numerical thresholds shared across the crate.
//!
//! Comparisons follow one convention: the error is measured relative to the
//! reference when `|reference| > 1` and absolutely otherwise.

/// Closed-form identities evaluated in double precision.
pub const IDENTITY: f64 = 1e-12;

/// Relative eigenvalue cutoff used by rank queries.
pub const RANK: f64 = 1e-10;

/// `|S|` below this classifies a point as lying on the zero-cost hypersurface.
pub const ZERO_COST_S: f64 = 1e-12;

/// `|S|` below this makes `coth(S)` unusable.
pub const COTH_S: f64 = 1e-14;

/// Guard on `|Delta|` and on the `(q, r)` chart denominators.
pub const SINGULAR: f64 = 1e-9;

/// Ratio-chart coordinates at or below this terminate an integration.
pub const DOMAIN: f64 = 1e-12;

/// Relative step for finite-difference Hessians.
pub const FD_SECOND_STEP: f64 = 1e-4;

/// Relative base step for the extrapolated Hessian oracle.
pub const FD_RICHARDSON_STEP: f64 = 4e-3;

/// Step for first-derivative stencils of metric and Christoffel fields.
pub const FD_FIRST_STEP: f64 = 1e-5;

/// Default local error tolerance of the Runge-Kutta driver.
pub const ODE_TOL: f64 = 1e-10;

/// `|S|` above which an ascent flow is declared blown up.
pub const BLOWUP_S: f64 = 700.0;

/// Scale used for the tolerance convention.
#[inline]
pub fn scale(reference: f64) -> f64 {
    reference.abs().max(1.0)
}

/// Error of `value` against `reference` under the tolerance convention.
#[inline]
pub fn scaled_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / scale(reference)
}

#[inline]
pub fn close(value: f64, reference: f64, tol: f64) -> bool {
    scaled_error(value, reference) <= tol
}

/// Largest entrywise difference of two slices, scaled by the largest
/// reference magnitude (at least one).
pub fn max_scaled_diff(value: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(value.len(), reference.len());
    let norm = reference.iter().fold(1.0_f64, |m, r| m.max(r.abs()));
    value
        .iter()
        .zip(reference)
        .map(|(v, r)| (v - r).abs())
        .fold(0.0, f64::max)
        / norm
}
