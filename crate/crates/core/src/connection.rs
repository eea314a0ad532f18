//! Connections on the two-dimensional ratio manifold.
//!
//! Closed-form Levi-Civita symbols of the ratio-chart Hessian metric in the
//! `(x, y)` and `(s, t) = (ln x, ln y)` charts, the Ricci scalar, the flat
//! affine connections of both affine structures, and finite-difference
//! oracles for Christoffel symbols and scalar curvature.

use serde::Serialize;

use crate::chart::{Chart, ChartPoint};
use crate::error::{GeoError, Result};
use crate::hessian::{hessian_ratio, pullback_at};
use crate::linalg::{inverse_2x2, SymMatrix};
use crate::tolerance;
use crate::weights::WeightVector;

/// `gamma[k][p]` with `p` indexing the symmetric lower pair `(0,0), (0,1), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChristoffelTensor {
    pub gamma: [[f64; 3]; 2],
}

#[inline]
fn pair(i: usize, j: usize) -> usize {
    i + j
}

impl ChristoffelTensor {
    pub fn zero() -> Self {
        Self {
            gamma: [[0.0; 3]; 2],
        }
    }

    /// Components in the order `G^0_00, G^0_01, G^0_11, G^1_00, G^1_01, G^1_11`.
    pub fn from_components(c: [f64; 6]) -> Self {
        Self {
            gamma: [[c[0], c[1], c[2]], [c[3], c[4], c[5]]],
        }
    }

    pub fn components(&self) -> [f64; 6] {
        let g = &self.gamma;
        [g[0][0], g[0][1], g[0][2], g[1][0], g[1][1], g[1][2]]
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][pair(i, j)]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.gamma[k][pair(i, j)] = value;
    }

    /// `G^k_ij v^i v^j` for each `k`.
    pub fn contract(&self, v: [f64; 2]) -> [f64; 2] {
        let g = &self.gamma;
        let q =
            |k: usize| g[k][0] * v[0] * v[0] + 2.0 * g[k][1] * v[0] * v[1] + g[k][2] * v[1] * v[1];
        [q(0), q(1)]
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scaled_diff(&self, reference: &ChristoffelTensor) -> f64 {
        tolerance::max_scaled_diff(&self.components(), &reference.components())
    }
}

/// `Z = x^{2a} y^{2b}` and `Delta = (Z - 1)((a+b-1) Z + a + b + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularContext {
    pub z: f64,
    pub delta: f64,
}

impl SingularContext {
    pub fn new(a: f64, b: f64, x: f64, y: f64) -> Result<Self> {
        for (index, value) in [x, y].into_iter().enumerate() {
            if !(value > 0.0) {
                return Err(GeoError::NonPositiveCoordinate { index, value });
            }
        }
        let z = (2.0 * (a * x.ln() + b * y.ln())).exp();
        Ok(Self::from_z(a, b, z))
    }

    pub fn from_z(a: f64, b: f64, z: f64) -> Self {
        let sigma = a + b;
        Self {
            z,
            delta: (z - 1.0) * secondary_factor(sigma, z),
        }
    }
}

/// `(a+b-1) Z + a + b + 1`, the factor of `Delta` that vanishes on the
/// secondary singular curve.
#[inline]
pub fn secondary_factor(sigma: f64, z: f64) -> f64 {
    (sigma - 1.0) * z + sigma + 1.0
}

fn require_exponents(a: f64, b: f64) -> Result<()> {
    if a == 0.0 || b == 0.0 {
        return Err(GeoError::ZeroExponent);
    }
    Ok(())
}

/// Levi-Civita symbols of the ratio-chart Hessian metric in `(x, y)`.
pub fn lc_christoffel_xy(a: f64, b: f64, x: f64, y: f64) -> Result<ChristoffelTensor> {
    require_exponents(a, b)?;
    let ctx = SingularContext::new(a, b, x, y)?;
    let (z, d) = (ctx.z, ctx.delta);
    if !(d.abs() >= tolerance::SINGULAR) {
        return Err(GeoError::SingularMetric {
            what: "Delta",
            value: d,
        });
    }
    let z2 = z * z;
    let xxx = (z2 * a * a + 2.0 * z2 * a * b - 3.0 * z2 * a - 2.0 * z2 * b + 2.0 * z2
        - 2.0 * z * a * a
        + 4.0 * z * a * b
        - 4.0 * z
        + a * a
        + 2.0 * a * b
        + 3.0 * a
        + 2.0 * b
        + 2.0)
        / (2.0 * x * d);
    let xxy = -b * (-z2 * b + z2 + 4.0 * z * a - 2.0 * z * b - b - 1.0) / (2.0 * y * d);
    let xyy = -b * x * (z2 * b - z2 + 6.0 * z * b + b + 1.0) / (2.0 * y * y * d);
    let yxx = -a * y * (z2 * a - z2 + 6.0 * z * a + a + 1.0) / (2.0 * x * x * d);
    let yxy = a * (z2 * a - z2 + 2.0 * z * a - 4.0 * z * b + a + 1.0) / (2.0 * x * d);
    let yyy =
        (2.0 * z2 * a * b - 2.0 * z2 * a + z2 * b * b - 3.0 * z2 * b + 2.0 * z2 + 4.0 * z * a * b
            - 2.0 * z * b * b
            - 4.0 * z
            + 2.0 * a * b
            + 2.0 * a
            + b * b
            + 3.0 * b
            + 2.0)
            / (2.0 * y * d);
    Ok(ChristoffelTensor::from_components([
        xxx, xxy, xyy, yxx, yxy, yyy,
    ]))
}

/// Guards shared by the `(s, t)` and `(q, r)` charts; returns
/// `(sinh q, (a+b) coth q - 1)`.
pub(crate) fn q_chart_guards(sigma: f64, q: f64) -> Result<(f64, f64)> {
    let sh = q.sinh();
    if sh.abs() < tolerance::SINGULAR {
        return Err(GeoError::SingularMetric {
            what: "sinh q",
            value: sh,
        });
    }
    let d = sigma / q.tanh() - 1.0;
    if !(d.abs() >= tolerance::SINGULAR) {
        return Err(GeoError::SingularMetric {
            what: "(a+b) coth q - 1",
            value: d,
        });
    }
    Ok((sh, d))
}

/// Levi-Civita symbols of the same metric in the log chart `(s, t)`. They
/// depend on the point only through `q = a s + b t`.
pub fn lc_christoffel_st(a: f64, b: f64, s: f64, t: f64) -> Result<ChristoffelTensor> {
    require_exponents(a, b)?;
    let q = a * s + b * t;
    let (sh, d) = q_chart_guards(a + b, q)?;
    let c = 1.0 / q.tanh();
    let csch2 = 1.0 / (sh * sh);
    let (s2q, c2q) = ((2.0 * q).sinh(), (2.0 * q).cosh());
    let den2 = 2.0 * d;
    let den4 = 4.0 * d;
    Ok(ChristoffelTensor::from_components([
        a * (2.0 * b * c * c - c + a) / den2,
        b * ((b - a) * c * c - c + a) / den2,
        -b * csch2 * (3.0 * b - s2q + b * c2q) / den4,
        -a * csch2 * (3.0 * a - s2q + a * c2q) / den4,
        a * ((a - b) * c * c - c + b) / den2,
        b * (2.0 * a * c * c - c + b) / den2,
    ]))
}

/// The ratio-chart Hessian metric as a field on `(x, y)`.
pub fn metric_xy(a: f64, b: f64) -> impl Fn([f64; 2]) -> Result<SymMatrix> {
    move |p| {
        let w = WeightVector::pair(a, b)?;
        hessian_ratio(&ChartPoint::ratio(p.to_vec())?, &w)
    }
}

/// The ratio-chart Hessian metric pulled back to `(s, t)`.
pub fn metric_st(a: f64, b: f64) -> impl Fn([f64; 2]) -> Result<SymMatrix> {
    move |p| {
        let w = WeightVector::pair(a, b)?;
        let x = ChartPoint::log(p.to_vec())?.to_ratio()?;
        let h = hessian_ratio(&x, &w)?;
        pullback_at(&h, x.coords(), Chart::Ratio, Chart::Log)
    }
}

fn stencil_error(e: GeoError, index: usize, value: f64, step: f64) -> GeoError {
    match e {
        GeoError::NonPositiveCoordinate { .. } => GeoError::DomainViolation { index, value, step },
        other => other,
    }
}

/// Central first differences of a field along both axes.
fn central<T, F, D>(f: &F, p: [f64; 2], h: [f64; 2], diff: D) -> Result<[T; 2]>
where
    F: Fn([f64; 2]) -> Result<T>,
    D: Fn(&T, &T, f64) -> T,
{
    let mut out = Vec::with_capacity(2);
    for l in 0..2 {
        let (mut fwd, mut bwd) = (p, p);
        fwd[l] += h[l];
        bwd[l] -= h[l];
        let fp = f(fwd).map_err(|e| stencil_error(e, l, p[l], h[l]))?;
        let fm = f(bwd).map_err(|e| stencil_error(e, l, p[l], h[l]))?;
        out.push(diff(&fp, &fm, 2.0 * h[l]));
    }
    let second = out.pop().unwrap();
    let first = out.pop().unwrap();
    Ok([first, second])
}

/// Christoffel symbols of a metric field by central differences of the
/// metric and the adjugate inverse:
/// `G^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)`.
pub fn christoffel_from_metric<F>(metric_fn: F, p: [f64; 2], h: f64) -> Result<ChristoffelTensor>
where
    F: Fn([f64; 2]) -> Result<SymMatrix>,
{
    christoffel_from_metric_steps(metric_fn, p, [h, h])
}

/// [`christoffel_from_metric`] with a separate step per axis. In the ratio
/// chart, steps proportional to the coordinates keep the stencil accurate
/// near the boundary.
pub fn christoffel_from_metric_steps<F>(
    metric_fn: F,
    p: [f64; 2],
    h: [f64; 2],
) -> Result<ChristoffelTensor>
where
    F: Fn([f64; 2]) -> Result<SymMatrix>,
{
    let dg = central(&metric_fn, p, h, |fp, fm, w| {
        fp.map(|i, j, v| (v - fm.get(i, j)) / w)
    })?;
    let inv = inverse_2x2(&metric_fn(p)?)?;
    let mut out = ChristoffelTensor::zero();
    for k in 0..2 {
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let v: f64 = (0..2)
                .map(|l| inv.get(k, l) * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j)))
                .sum();
            out.set(k, i, j, 0.5 * v);
        }
    }
    Ok(out)
}

fn ricci_guard(what: &'static str, value: f64, scale: f64) -> Result<()> {
    if !(value.abs() >= tolerance::SINGULAR * scale) {
        return Err(GeoError::SingularLocus { what, value });
    }
    Ok(())
}

/// Ricci scalar of the ratio-chart metric as a function of `Z`.
pub fn ricci_xy(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(GeoError::NonPositiveCoordinate { index: 0, value: z });
    }
    let sigma = a + b;
    let zs = z.max(1.0);
    let sec = secondary_factor(sigma, z);
    ricci_guard("Z - 1", z - 1.0, zs)?;
    ricci_guard("(a+b-1) Z + a + b + 1", sec, zs)?;
    let num = 4.0 * sigma * z.powf(1.5) * ((sigma - 2.0) * z + sigma + 2.0);
    Ok(num / ((z - 1.0).powi(2) * sec * sec))
}

/// Ricci scalar in terms of `q = a s + b t`.
pub fn ricci_q(a: f64, b: f64, q: f64) -> Result<f64> {
    let sigma = a + b;
    let sh = q.sinh();
    ricci_guard("sinh q", sh, 1.0)?;
    let c = 1.0 / q.tanh();
    let d = sigma * c - 1.0;
    ricci_guard("(a+b) coth q - 1", d, 1.0)?;
    Ok(sigma * (sigma * c - 2.0) / sh.powi(3) / (2.0 * d * d))
}

/// The two flat affine structures: `LogFlat` is flat in `t = ln x`,
/// `RatioFlat` is flat in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AffineStructure {
    LogFlat,
    RatioFlat,
}

/// A connection whose only nonzero symbols are `G^i_ii`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalConnection {
    pub diag: Vec<f64>,
}

impl DiagonalConnection {
    pub fn to_tensor(&self) -> Result<ChristoffelTensor> {
        if self.diag.len() != 2 {
            return Err(GeoError::DimensionMismatch {
                expected: 2,
                found: self.diag.len(),
            });
        }
        let mut t = ChristoffelTensor::zero();
        t.set(0, 0, 0, self.diag[0]);
        t.set(1, 1, 1, self.diag[1]);
        Ok(t)
    }
}

/// The flat connection of `structure` written in the chart of `p`.
pub fn affine_connection(structure: AffineStructure, p: &ChartPoint) -> Result<DiagonalConnection> {
    let c = p.coords();
    let diag = match (structure, p.chart()) {
        (AffineStructure::LogFlat, Chart::Log) | (AffineStructure::RatioFlat, Chart::Ratio) => {
            vec![0.0; c.len()]
        }
        (AffineStructure::LogFlat, Chart::Ratio) => c.iter().map(|x| -1.0 / x).collect(),
        (AffineStructure::RatioFlat, Chart::Log) => vec![1.0; c.len()],
        (_, Chart::Qr) => {
            return Err(GeoError::UnsupportedChartPair {
                from: Chart::Qr,
                to: Chart::Log,
            })
        }
    };
    Ok(DiagonalConnection { diag })
}

/// Size of the obstruction to projective equivalence of the two affine
/// structures at `x`: the largest `|psi_l| = 1 / (2 x_l)` forced by the
/// mixed components. Zero for `n = 1`, where there is no mixed condition.
pub fn projective_obstruction(x: &ChartPoint) -> Result<f64> {
    x.expect_chart(Chart::Ratio)?;
    let c = x.coords();
    if c.len() < 2 {
        return Ok(0.0);
    }
    Ok(c.iter().fold(0.0, |m, xl| m.max(1.0 / (2.0 * xl))))
}

/// Ricci tensor `R_ij = d_k G^k_ij - d_j G^k_ik + G^k_km G^m_ij - G^k_jm G^m_ik`
/// of a torsion-free connection, by central differences of step `h`. In two
/// dimensions its four components determine the full curvature tensor.
pub fn ricci_tensor_from_christoffel<G>(gamma_fn: G, p: [f64; 2], h: f64) -> Result<[[f64; 2]; 2]>
where
    G: Fn([f64; 2]) -> Result<ChristoffelTensor>,
{
    let g = gamma_fn(p)?;
    let dg = central(&gamma_fn, p, [h, h], |fp, fm, w| {
        let (a, b) = (fp.components(), fm.components());
        let mut c = [0.0; 6];
        for i in 0..6 {
            c[i] = (a[i] - b[i]) / w;
        }
        ChristoffelTensor::from_components(c)
    })?;
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            for k in 0..2 {
                *r += dg[k].get(k, i, j) - dg[j].get(k, i, k);
                for m in 0..2 {
                    *r += g.get(k, k, m) * g.get(m, i, j) - g.get(k, j, m) * g.get(m, i, k);
                }
            }
        }
    }
    Ok(out)
}

/// Scalar curvature `g^ij R_ij` from a Christoffel field.
pub fn curvature_from_christoffel<G, M>(
    gamma_fn: G,
    p: [f64; 2],
    h: f64,
    metric_fn: M,
) -> Result<f64>
where
    G: Fn([f64; 2]) -> Result<ChristoffelTensor>,
    M: Fn([f64; 2]) -> Result<SymMatrix>,
{
    let inv = inverse_2x2(&metric_fn(p)?)?;
    let r = ricci_tensor_from_christoffel(gamma_fn, p, h)?;
    let mut scalar = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            scalar += inv.get(i, j) * r[i][j];
        }
    }
    Ok(scalar)
}

/// Margin used when drawing admissible sample points: `|Z - 1|` and the
/// secondary factor must both exceed this fraction of `max(1, Z)`.
pub const ADMISSIBLE_MARGIN: f64 = 0.1;

/// Whether `(a, b, x, y)` is a well-conditioned sample point for the
/// closed-form symbols and their oracles.
pub fn is_admissible(a: f64, b: f64, x: f64, y: f64) -> bool {
    if a.abs() < 0.1 || b.abs() < 0.1 {
        return false;
    }
    let Ok(ctx) = SingularContext::new(a, b, x, y) else {
        return false;
    };
    let scale = ctx.z.max(1.0);
    (ctx.z - 1.0).abs() >= ADMISSIBLE_MARGIN * scale
        && secondary_factor(a + b, ctx.z).abs() >= ADMISSIBLE_MARGIN * scale
}

/// Draws `(a, b, [x, y])` until [`is_admissible`] holds.
pub fn sample_admissible(sampler: &mut crate::sampling::Sampler) -> (f64, f64, [f64; 2]) {
    loop {
        let w = sampler.weights(2);
        let x = sampler.ratio_point(2);
        if is_admissible(w[0], w[1], x[0], x[1]) {
            return (w[0], w[1], [x[0], x[1]]);
        }
    }
}
