//! The reciprocal cost `J = (R + 1/R)/2 - 1` with `R = prod x_i^alpha_i`.
//!
//! Everything is evaluated through `S = ln R = alpha . t`. The product `R` is
//! never formed directly, and `J` is computed as `2 sinh^2(S/2)`, which equals
//! `cosh(S) - 1` without the cancellation near `S = 0`.

use serde::Serialize;

use crate::chart::{Chart, ChartPoint};
use crate::error::{GeoError, Result};
use crate::sampling::Sampler;
use crate::tolerance;
use crate::weights::WeightVector;

/// Scalar invariants of a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarSummary {
    /// Ratio product `R = exp(S)`.
    pub r: f64,
    /// Linear combination `S = alpha . t`.
    pub s: f64,
    /// Cost `J = cosh(S) - 1`.
    pub j: f64,
    /// Geometric mean of `x`, present only for canonical weights.
    pub g: Option<f64>,
}

impl ScalarSummary {
    fn from_s(s: f64, g: Option<f64>) -> Self {
        Self {
            r: s.exp(),
            s,
            j: cost_of_s(s),
            g,
        }
    }
}

/// `cosh(S) - 1`, evaluated stably.
#[inline]
pub fn cost_of_s(s: f64) -> f64 {
    let h = (0.5 * s).sinh();
    2.0 * h * h
}

/// One-dimensional cost `J(x) = (x + 1/x)/2 - 1`.
pub fn reciprocal_cost(x: f64) -> f64 {
    cost_of_s(x.ln())
}

pub fn cost_ratio(x: &ChartPoint, w: &WeightVector) -> Result<ScalarSummary> {
    x.expect_chart(Chart::Ratio)?;
    w.check_dim(x.dim())?;
    let t = x.to_log()?;
    Ok(summary_from_log(t.coords(), w))
}

pub fn cost_log(t: &ChartPoint, w: &WeightVector) -> Result<ScalarSummary> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(t.dim())?;
    Ok(summary_from_log(t.coords(), w))
}

fn summary_from_log(t: &[f64], w: &WeightVector) -> ScalarSummary {
    let g = w
        .is_canonical()
        .then(|| (t.iter().sum::<f64>() / t.len() as f64).exp());
    ScalarSummary::from_s(w.dot(t), g)
}

/// Cost of a point in any chart. `Qr` points carry `S` directly as `q`.
pub fn cost_any(p: &ChartPoint, w: &WeightVector) -> Result<ScalarSummary> {
    match p.chart() {
        Chart::Ratio => cost_ratio(p, w),
        Chart::Log => cost_log(p, w),
        Chart::Qr => {
            w.require_2d()?;
            Ok(ScalarSummary::from_s(p.coords()[0], None))
        }
    }
}

/// `S` of a point in any chart.
pub fn linear_combination(p: &ChartPoint, w: &WeightVector) -> Result<f64> {
    Ok(cost_any(p, w)?.s)
}

fn positive(x: f64, index: usize) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(GeoError::NonPositiveCoordinate { index, value: x })
    }
}

/// Residual of the multiplicative d'Alembert law
/// `F(xy) + F(x/y) - 2F(x)F(y) - 2F(x) - 2F(y)`.
pub fn composition_residual<F: Fn(f64) -> f64>(f: F, x: f64, y: f64) -> Result<f64> {
    positive(x, 0)?;
    positive(y, 1)?;
    let (fx, fy) = (f(x), f(y));
    Ok(f(x * y) + f(x / y) - 2.0 * fx * fy - 2.0 * fx - 2.0 * fy)
}

/// `2 F(e^t) / t^2`; tends to 1 for the reciprocal cost.
pub fn log_curvature<F: Fn(f64) -> f64>(f: F, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(GeoError::ZeroArgument);
    }
    Ok(2.0 * f(t.exp()) / (t * t))
}

/// Checks that the cost is invariant under every transposition of the
/// coordinates at `samples` seeded random points. Vacuously true for `n < 2`.
pub fn permutation_symmetry_check(w: &WeightVector, samples: usize, seed: u64) -> bool {
    let n = w.len();
    if n < 2 {
        return true;
    }
    let mut sampler = Sampler::new(seed);
    for _ in 0..samples {
        let t = sampler.log_point(n);
        let base = summary_from_log(&t, w).j;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut swapped = t.clone();
                swapped.swap(i, j);
                let other = summary_from_log(&swapped, w).j;
                if !tolerance::close(other, base, tolerance::IDENTITY) {
                    return false;
                }
            }
        }
    }
    true
}

/// Harmonic modes `(cos r, sin r, cos s, sin s, cos(r+s), sin(r+s),
/// cos(r-s), sin(r-s))`.
pub fn harmonic_feature_map(r: f64, s: f64) -> [f64; 8] {
    let (sr, cr) = r.sin_cos();
    let (ss, cs) = s.sin_cos();
    let (sp, cp) = (r + s).sin_cos();
    let (sm, cm) = (r - s).sin_cos();
    [cr, sr, cs, ss, cp, sp, cm, sm]
}

/// Cost of the harmonic feature vector with weights `a / sqrt(8)`.
pub fn harmonic_cost(r: f64, s: f64, a: &[f64; 8]) -> Result<ScalarSummary> {
    let scale = 8f64.sqrt();
    let w = WeightVector::new(a.iter().map(|ai| ai / scale).collect())?;
    let phi = ChartPoint::log(harmonic_feature_map(r, s).to_vec())?;
    cost_log(&phi, &w)
}
