//! Divergences and the Fisher-Rao realization of the log-chart metric.
//!
//! The statistical model is the unit-variance normal family with mean
//! `m(S)`, `m' = sqrt(cosh S)`, so its Fisher information is
//! `cosh(S) alpha alpha^T`.

use serde::Serialize;

use crate::chart::{Chart, ChartPoint};
use crate::error::{GeoError, Result};
use crate::linalg::SymMatrix;
use crate::quadrature::{adaptive_simpson, Rule};
use crate::tolerance;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DivergenceKind {
    ItakuraSaito,
    SymmetrizedItakuraSaito,
    Bregman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub kind: DivergenceKind,
}

/// `p/q - ln(p/q) - 1`.
pub fn itakura_saito(p: f64, q: f64) -> Result<DivergenceValue> {
    if !(p > 0.0 && q > 0.0) || !p.is_finite() || !q.is_finite() {
        return Err(GeoError::NonPositiveInput(p, q));
    }
    let r = p / q;
    Ok(DivergenceValue {
        value: r - r.ln() - 1.0,
        kind: DivergenceKind::ItakuraSaito,
    })
}

/// `(D(1 || R) + D(R || 1)) / 2` for the ratio product `R` of `x`.
pub fn symmetrized_is(x: &ChartPoint, w: &WeightVector) -> Result<f64> {
    x.expect_chart(Chart::Ratio)?;
    w.check_dim(x.dim())?;
    let s = w.dot(x.to_log()?.coords());
    let r = s.exp();
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeoError::NonPositiveInput(1.0, r));
    }
    Ok(0.5 * (itakura_saito(1.0, r)?.value + itakura_saito(r, 1.0)?.value))
}

/// `sinh(d) - d` without cancellation.
fn sinh_minus_id(d: f64) -> f64 {
    if d.abs() < 0.1 {
        let d2 = d * d;
        // d^3/3! + d^5/5! + ... + d^13/13!
        let mut term = d * d2 / 6.0;
        let mut sum = term;
        for k in (5..=13).step_by(2) {
            term *= d2 / ((k - 1) * k) as f64;
            sum += term;
        }
        sum
    } else {
        d.sinh() - d
    }
}

/// `cosh(d) - 1 - d^2/2` without cancellation.
fn cosh_remainder(d: f64) -> f64 {
    if d.abs() < 0.1 {
        let d2 = d * d;
        let mut term = d2 * d2 / 24.0;
        let mut sum = term;
        for k in (6..=14).step_by(2) {
            term *= d2 / ((k - 1) * k) as f64;
            sum += term;
        }
        sum
    } else {
        2.0 * (0.5 * d).sinh().powi(2) - 0.5 * d * d
    }
}

/// Bregman divergence `J(t + delta) - J(t) - grad J(t) . delta` of the
/// log-chart potential, via `cosh S (cosh d - 1) + sinh S (sinh d - d)`
/// with `d = alpha . delta`.
pub fn bregman(t: &ChartPoint, delta: &[f64], w: &WeightVector) -> Result<DivergenceValue> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(t.dim())?;
    w.check_dim(delta.len())?;
    let s = w.dot(t.coords());
    let d = w.dot(delta);
    let value = s.cosh() * 2.0 * (0.5 * d).sinh().powi(2) + s.sinh() * sinh_minus_id(d);
    Ok(DivergenceValue {
        value: value.max(0.0),
        kind: DivergenceKind::Bregman,
    })
}

/// Exact `D - delta^T H delta / 2` along `d = alpha . delta`.
pub fn bregman_remainder(s: f64, d: f64) -> f64 {
    s.cosh() * cosh_remainder(d) + s.sinh() * sinh_minus_id(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BregmanOrder {
    /// Least-squares slope of `log2 |remainder|` against `log2 eps`.
    pub slope: f64,
    pub scales: Vec<f64>,
    pub remainders: Vec<f64>,
}

impl BregmanOrder {
    /// At least cubic, as required for the Hessian to be the second-order term.
    pub fn is_third_order(&self) -> bool {
        self.slope >= 3.0 - 0.1
    }
}

pub const ORDER_CHECK_SCALE: f64 = 1e-2;
pub const ORDER_CHECK_LEVELS: usize = 4;

/// Fits the decay order of `|D(t, t + eps u) - eps^2 u^T H u / 2|`.
pub fn bregman_order_check(
    t: &ChartPoint,
    direction: &[f64],
    w: &WeightVector,
) -> Result<BregmanOrder> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(direction.len())?;
    let len = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if w.dot(direction).abs() <= tolerance::IDENTITY * w.norm() * len {
        return Err(GeoError::DegenerateDirection);
    }
    let h = crate::hessian::hessian_log(t, w)?;
    let scales: Vec<f64> = (0..ORDER_CHECK_LEVELS)
        .map(|k| ORDER_CHECK_SCALE / (1u32 << k) as f64)
        .collect();
    let mut remainders = Vec::with_capacity(scales.len());
    for &eps in &scales {
        let delta: Vec<f64> = direction.iter().map(|v| eps * v / len).collect();
        let d = bregman(t, &delta, w)?.value;
        remainders.push((d - 0.5 * h.quad_form(&delta)).abs());
    }
    let xs: Vec<f64> = scales.iter().map(|e| e.log2()).collect();
    let ys: Vec<f64> = remainders.iter().map(|r| r.log2()).collect();
    Ok(BregmanOrder {
        slope: ls_slope(&xs, &ys),
        scales,
        remainders,
    })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFunction {
    pub s: f64,
    /// `integral_0^S sqrt(cosh u) du`
    pub m: f64,
    /// `sqrt(cosh S)`
    pub m_prime: f64,
}

pub const MEAN_ABS_TOL: f64 = 1e-12;
const MEAN_REL_TOL: f64 = 1e-14;

fn sqrt_cosh(u: f64) -> f64 {
    u.cosh().sqrt()
}

/// Mean of the realizing normal family, by adaptive Simpson.
pub fn mean_function(s: f64) -> Result<MeanFunction> {
    if !s.is_finite() || s.abs() > tolerance::BLOWUP_S {
        return Err(GeoError::Overflow("mean function argument exceeds 700"));
    }
    Ok(MeanFunction {
        s,
        m: adaptive_simpson(sqrt_cosh, 0.0, s, MEAN_ABS_TOL, MEAN_REL_TOL),
        m_prime: sqrt_cosh(s),
    })
}

/// The same integral with a 64-point Gauss-Legendre rule on unit panels.
pub fn mean_function_gauss(s: f64) -> Result<f64> {
    if !s.is_finite() || s.abs() > tolerance::BLOWUP_S {
        return Err(GeoError::Overflow("mean function argument exceeds 700"));
    }
    let rule = Rule::gauss_legendre(64);
    let panels = s.abs().ceil().max(1.0) as usize;
    let h = s / panels as f64;
    Ok((0..panels)
        .map(|k| rule.integrate(sqrt_cosh, k as f64 * h, (k + 1) as f64 * h))
        .sum())
}

/// `cosh(S) alpha alpha^T`, the Fisher information of the normal family.
pub fn fisher_info(t: &ChartPoint, w: &WeightVector) -> Result<SymMatrix> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(t.dim())?;
    Ok(SymMatrix::outer(w.as_slice(), w.dot(t.coords()).cosh()))
}

/// Log-density of the unit-variance normal with mean `m(alpha . t)`.
pub fn log_density(z: f64, t: &[f64], w: &WeightVector) -> Result<f64> {
    let m = mean_function(w.dot(t))?.m;
    Ok(-0.5 * (z - m).powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// One-parameter Fisher information `E[(d/dt log p)^2]` at `t` for weight
/// `alpha` (so `S = alpha t`), computed from a numerically differentiated
/// score and Gauss-Hermite quadrature over `z`.
pub fn fisher_by_quadrature(alpha: f64, t: f64, nodes: usize) -> Result<f64> {
    let w = WeightVector::new(vec![alpha])?;
    let m = mean_function(alpha * t)?.m;
    let h = 1e-4 * t.abs().max(1.0);
    let rule = Rule::gauss_hermite(nodes);
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut total = 0.0;
    for (&u, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let z = m + sqrt2 * u;
        let score = (log_density(z, &[t + h], &w)? - log_density(z, &[t - h], &w)?) / (2.0 * h);
        total += wt * score * score;
    }
    Ok(total / std::f64::consts::PI.sqrt())
}
