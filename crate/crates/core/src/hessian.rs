//! Hessian structures of the cost in the log and ratio charts.
//!
//! In log coordinates the Hessian is `cosh(S) alpha alpha^T` and has rank one
//! everywhere. In ratio coordinates it splits into a diagonal part plus a
//! rank-one part, `A + beta u u^T`, and is generically nondegenerate.

use serde::Serialize;

use crate::chart::{Chart, ChartPoint};
use crate::error::{GeoError, Result};
use crate::linalg::SymMatrix;
use crate::tolerance;
use crate::weights::WeightVector;

/// `hessian_ratio = A + beta u u^T` with `A = a_matrix_scale * diag(diag)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianDecomposition {
    /// `D_i = alpha_i / x_i^2`
    pub diag: Vec<f64>,
    /// `u_i = alpha_i / x_i`
    pub u: Vec<f64>,
    /// `(R + 1/R) / 2`
    pub beta: f64,
    /// `-(R - 1/R) / 2`
    pub a_matrix_scale: f64,
}

impl HessianDecomposition {
    pub fn reconstruct(&self) -> SymMatrix {
        let d = &self.diag;
        SymMatrix::outer(&self.u, self.beta).map(|i, j, v| {
            if i == j {
                v + self.a_matrix_scale * d[i]
            } else {
                v
            }
        })
    }
}

/// Orthonormal basis of the kernel `{v : alpha . v = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadicalBasis {
    pub vectors: Vec<Vec<f64>>,
}

impl RadicalBasis {
    /// Coordinates of `t` along each basis vector (the transverse `r^k`).
    pub fn project(&self, t: &[f64]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|b| b.iter().zip(t).map(|(x, y)| x * y).sum())
            .collect()
    }
}

/// Root of `tanh(S) = sum(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularRoot {
    pub s_star: f64,
    /// Set when the root is `S = 0`, i.e. it coincides with the zero-cost
    /// hypersurface.
    pub on_zero_cost: bool,
}

pub fn hessian_log(t: &ChartPoint, w: &WeightVector) -> Result<SymMatrix> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(t.dim())?;
    Ok(SymMatrix::outer(w.as_slice(), w.dot(t.coords()).cosh()))
}

pub fn hessian_ratio(x: &ChartPoint, w: &WeightVector) -> Result<SymMatrix> {
    x.expect_chart(Chart::Ratio)?;
    w.check_dim(x.dim())?;
    let xs = x.coords();
    let alpha = w.as_slice();
    let s: f64 = alpha.iter().zip(xs).map(|(a, x)| a * x.ln()).sum();
    let (r, rinv) = (s.exp(), (-s).exp());
    Ok(SymMatrix::from_fn(xs.len(), |i, j| {
        if i == j {
            let a = alpha[i];
            0.5 / (xs[i] * xs[i]) * (a * (a - 1.0) * r + a * (a + 1.0) * rinv)
        } else {
            0.5 * alpha[i] * alpha[j] / (xs[i] * xs[j]) * (r + rinv)
        }
    }))
}

pub fn decompose(x: &ChartPoint, w: &WeightVector) -> Result<HessianDecomposition> {
    x.expect_chart(Chart::Ratio)?;
    w.check_dim(x.dim())?;
    let xs = x.coords();
    let alpha = w.as_slice();
    let s = w.dot(&x.to_log()?.into_coords());
    Ok(HessianDecomposition {
        diag: alpha.iter().zip(xs).map(|(a, x)| a / (x * x)).collect(),
        u: alpha.iter().zip(xs).map(|(a, x)| a / x).collect(),
        beta: s.cosh(),
        a_matrix_scale: -s.sinh(),
    })
}

/// Determinant of the ratio-chart Hessian.
///
/// Uses `det(A) (1 + beta u^T A^{-1} u)` when `A` is invertible and falls
/// back to a direct determinant on the zero-cost hypersurface or when some
/// `alpha_i = 0`.
pub fn det_hessian_ratio(x: &ChartPoint, w: &WeightVector) -> Result<f64> {
    let dec = decompose(x, w)?;
    let s = -dec.a_matrix_scale.asinh();
    if s.abs() < tolerance::ZERO_COST_S || w.has_zero_component() {
        return Ok(hessian_ratio(x, w)?.determinant());
    }
    let a: Vec<f64> = dec.diag.iter().map(|d| dec.a_matrix_scale * d).collect();
    let det_a: f64 = a.iter().product();
    let quad: f64 = dec.u.iter().zip(&a).map(|(u, ai)| u * u / ai).sum();
    Ok(det_a * (1.0 + dec.beta * quad))
}

/// `1 - coth(S) sum(alpha)`; vanishes exactly on the extra degeneracy
/// hypersurface of the ratio-chart Hessian.
pub fn singular_locus_value(p: &ChartPoint, w: &WeightVector) -> Result<f64> {
    let s = crate::cost::linear_combination(p, w)?;
    if s.abs() < tolerance::COTH_S {
        return Err(GeoError::ZeroCostPoint(s));
    }
    Ok(1.0 - w.sum() / s.tanh())
}

/// `S* = artanh(sum(alpha))`, present iff `|sum(alpha)| < 1`.
pub fn singular_s(w: &WeightVector) -> Option<SingularRoot> {
    let sigma = w.sum();
    (sigma.abs() < 1.0).then(|| {
        let s_star = sigma.atanh();
        SingularRoot {
            s_star,
            on_zero_cost: s_star.abs() < tolerance::ZERO_COST_S,
        }
    })
}

pub fn rank(m: &SymMatrix, tol: f64) -> usize {
    crate::linalg::rank(m, tol)
}

/// Orthonormal completion of `alpha / |alpha|`, with the first vector dropped.
///
/// Standard basis vectors are fed to a twice-iterated Gram-Schmidt in order
/// of increasing `|alpha_i|`, which keeps the projections well conditioned.
pub fn radical_basis(w: &WeightVector) -> Result<RadicalBasis> {
    let n = w.len();
    let norm = w.norm();
    if norm == 0.0 {
        return Err(GeoError::ZeroWeightVector);
    }
    let unit: Vec<f64> = w.as_slice().iter().map(|a| a / norm).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| unit[i].abs().total_cmp(&unit[j].abs()));

    let mut basis: Vec<Vec<f64>> = vec![unit];
    for &k in &order {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            v.iter_mut().for_each(|x| *x /= len);
            basis.push(v);
        }
    }
    basis.remove(0);
    Ok(RadicalBasis { vectors: basis })
}

/// Transports a covariant 2-tensor given at ratio coordinates `x` from the
/// `source` chart to the `target` chart. The Jacobian is diagonal:
/// `dx_i/dt_i = x_i`.
pub fn pullback_at(m: &SymMatrix, x: &[f64], source: Chart, target: Chart) -> Result<SymMatrix> {
    if m.dim() != x.len() {
        return Err(GeoError::DimensionMismatch {
            expected: m.dim(),
            found: x.len(),
        });
    }
    match (source, target) {
        (s, t) if s == t => Ok(m.clone()),
        (Chart::Log, Chart::Ratio) => Ok(m.map(|i, j, v| v / (x[i] * x[j]))),
        (Chart::Ratio, Chart::Log) => Ok(m.map(|i, j, v| v * x[i] * x[j])),
        (from, to) => Err(GeoError::UnsupportedChartPair { from, to }),
    }
}

/// Evaluates the field `m_fn` (a tensor expressed in `source` coordinates)
/// at `p` and returns its components in `target` coordinates.
pub fn pullback<F>(m_fn: F, p: &ChartPoint, source: Chart, target: Chart) -> Result<SymMatrix>
where
    F: Fn(&ChartPoint) -> Result<SymMatrix>,
{
    let at_source = match source {
        Chart::Log => p.to_log()?,
        Chart::Ratio => p.to_ratio()?,
        Chart::Qr => {
            return Err(GeoError::UnsupportedChartPair {
                from: source,
                to: target,
            })
        }
    };
    let m = m_fn(&at_source)?;
    let x = p.to_ratio()?;
    pullback_at(&m, x.coords(), source, target)
}

/// Step selection for [`fd_hessian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdStep {
    /// `1e-4 * max(1, |t_i|)` in the log chart, `1e-4 * x_i` in the ratio
    /// chart.
    Auto,
    Fixed(f64),
    /// Same scaling as `Auto` with a caller-chosen factor.
    Relative(f64),
}

impl FdStep {
    fn resolve(self, chart: Chart, c: f64) -> f64 {
        match self {
            FdStep::Fixed(h) => h,
            FdStep::Auto => FdStep::Relative(tolerance::FD_SECOND_STEP).resolve(chart, c),
            FdStep::Relative(k) => match chart {
                Chart::Ratio => k * c,
                _ => k * c.abs().max(1.0),
            },
        }
    }

    fn halved(self) -> Self {
        match self {
            FdStep::Fixed(h) => FdStep::Fixed(0.5 * h),
            FdStep::Auto => FdStep::Relative(0.5 * tolerance::FD_SECOND_STEP),
            FdStep::Relative(k) => FdStep::Relative(0.5 * k),
        }
    }
}

/// Central-difference Hessian of a scalar field, in the chart of `p`.
pub fn fd_hessian<F>(f: F, p: &ChartPoint, step: FdStep) -> Result<SymMatrix>
where
    F: Fn(&ChartPoint) -> Result<f64>,
{
    let chart = p.chart();
    let c = p.coords();
    let n = c.len();
    let h: Vec<f64> = c.iter().map(|&ci| step.resolve(chart, ci)).collect();
    if chart == Chart::Ratio {
        for (index, (&value, &step)) in c.iter().zip(&h).enumerate() {
            if value - 2.0 * step <= 0.0 {
                return Err(GeoError::DomainViolation { index, value, step });
            }
        }
    }
    let eval = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut q = c.to_vec();
        for &(i, d) in offsets {
            q[i] += d;
        }
        f(&ChartPoint::new(chart, q)?)
    };
    let f0 = eval(&[])?;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        let (fp, fm) = (eval(&[(i, h[i])])?, eval(&[(i, -h[i])])?);
        out.set(i, i, (fp - 2.0 * f0 + fm) / (h[i] * h[i]));
        for j in (i + 1)..n {
            let pp = eval(&[(i, h[i]), (j, h[j])])?;
            let pm = eval(&[(i, h[i]), (j, -h[j])])?;
            let mp = eval(&[(i, -h[i]), (j, h[j])])?;
            let mm = eval(&[(i, -h[i]), (j, -h[j])])?;
            out.set(i, j, (pp - pm - mp + mm) / (4.0 * h[i] * h[j]));
        }
    }
    Ok(out)
}

/// Richardson-extrapolated central differences: `(4 H(h/2) - H(h)) / 3`.
///
/// Fourth order in `h`, so a much larger step can be used than with
/// [`fd_hessian`]. That matters in the ratio chart, where coordinates that
/// barely move the cost are dominated by round-off at small steps.
pub fn fd_hessian_richardson<F>(f: F, p: &ChartPoint, step: FdStep) -> Result<SymMatrix>
where
    F: Fn(&ChartPoint) -> Result<f64>,
{
    let coarse = fd_hessian(&f, p, step)?;
    let fine = fd_hessian(&f, p, step.halved())?;
    Ok(fine.map(|i, j, v| (4.0 * v - coarse.get(i, j)) / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cost_log, cost_ratio};
    use crate::sampling::Sampler;
    use proptest::prelude::*;

    fn ratio(x: &[f64]) -> ChartPoint {
        ChartPoint::ratio(x.to_vec()).unwrap()
    }

    fn log(t: &[f64]) -> ChartPoint {
        ChartPoint::log(t.to_vec()).unwrap()
    }

    #[test]
    fn log_hessian_at_origin_is_outer_product() {
        let w = WeightVector::pair(0.3, -0.7).unwrap();
        let h = hessian_log(&log(&[0.0, 0.0]), &w).unwrap();
        let expected = SymMatrix::from_fn(2, |i, j| [0.3, -0.7][i] * [0.3, -0.7][j]);
        assert!(h.scaled_diff(&expected) < 1e-15);
        let e1 = WeightVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let h1 = hessian_log(&log(&[0.0; 3]), &e1).unwrap();
        assert_eq!(h1.get(0, 0), 1.0);
        assert_eq!(h1.max_abs(), 1.0);
        assert_eq!(h1.upper().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn log_hessian_acts_on_alpha() {
        let w = WeightVector::new(vec![0.2, -0.4, 1.1]).unwrap();
        let t = log(&[0.5, 1.0, -0.3]);
        let h = hessian_log(&t, &w).unwrap();
        let s = w.dot(t.coords());
        let hv = h.mul_vec(w.as_slice());
        for (v, a) in hv.iter().zip(w.as_slice()) {
            assert!((v - s.cosh() * w.norm_sq() * a).abs() < 1e-14);
        }
    }

    #[test]
    fn ratio_hessian_at_unit_point() {
        let w = WeightVector::pair(0.3, 0.8).unwrap();
        let h = hessian_ratio(&ratio(&[1.0, 1.0]), &w).unwrap();
        let expect = SymMatrix::outer(&[0.3, 0.8], 1.0);
        assert!(h.scaled_diff(&expect) < 1e-15);
        assert_eq!(rank(&h, 1e-10), 1);
    }

    #[test]
    fn ratio_hessian_matches_two_dimensional_table() {
        let (a, b) = (1.0 / 3.0, 0.5);
        let (x, y) = (2.3f64, 0.7f64);
        let w = WeightVector::pair(a, b).unwrap();
        let h = hessian_ratio(&ratio(&[x, y]), &w).unwrap();
        let p = x.powf(a) * y.powf(b);
        let m = 1.0 / p;
        let xx = a * ((a + 1.0) * m + (a - 1.0) * p) / (2.0 * x * x);
        let xy = a * b * (m + p) / (2.0 * x * y);
        let yy = b * ((b + 1.0) * m + (b - 1.0) * p) / (2.0 * y * y);
        assert!((h.get(0, 0) - xx).abs() < 1e-14);
        assert!((h.get(0, 1) - xy).abs() < 1e-14);
        assert!((h.get(1, 1) - yy).abs() < 1e-14);
    }

    #[test]
    fn zero_cost_curve_is_rank_one() {
        // y = x^(-a/b) with a = b = 1/2 at x = 4
        let w = WeightVector::pair(0.5, 0.5).unwrap();
        let x = 4.0f64;
        let p = ratio(&[x, x.powf(-1.0)]);
        let fd = fd_hessian(|q| Ok(cost_ratio(q, &w)?.j), &p, FdStep::Auto).unwrap();
        assert_eq!(rank(&fd, 1e-6), 1);
        let h = hessian_ratio(&p, &w).unwrap();
        assert_eq!(rank(&h, 1e-10), 1);
        // closed form on the zero-cost curve
        let (a, b) = (0.5, 0.5);
        assert!((h.get(0, 0) - a * a / (x * x)).abs() < 1e-15);
        assert!((h.get(0, 1) - a * b * x.powf(a / b - 1.0)).abs() < 1e-15);
        assert!((h.get(1, 1) - b * b * x.powf(2.0 * a / b)).abs() < 1e-14);
    }

    #[test]
    fn decomposition_at_unit_point() {
        let w = WeightVector::pair(0.4, -1.2).unwrap();
        let d = decompose(&ratio(&[1.0, 1.0]), &w).unwrap();
        assert_eq!(d.u, vec![0.4, -1.2]);
        assert_eq!(d.beta, 1.0);
        assert_eq!(d.a_matrix_scale, 0.0);
    }

    #[test]
    fn decomposition_reconstructs_on_zero_cost_surface() {
        let w = WeightVector::pair(2.0, 1.0).unwrap();
        let x = 1.7f64;
        let p = ratio(&[x, x.powf(-2.0)]);
        let d = decompose(&p, &w).unwrap();
        assert!(d.a_matrix_scale.abs() < 1e-15);
        let h = hessian_ratio(&p, &w).unwrap();
        assert!(d.reconstruct().scaled_diff(&h) < 1e-14);
    }

    #[test]
    fn determinant_examples() {
        let w = WeightVector::pair(1.0, 1.0).unwrap();
        let det = det_hessian_ratio(&ratio(&[2.0, 1.0]), &w).unwrap();
        assert!((det + 21.0 / 64.0).abs() < 1e-15);
        // the printed 2D closed form with Z = 4
        let (a, b, x, y, z) = (1.0f64, 1.0f64, 2.0f64, 1.0f64, 4.0f64);
        let closed = -0.25
            * a
            * b
            * x.powf(-2.0 * (a + 1.0))
            * y.powf(-2.0 * (b + 1.0))
            * (z - 1.0)
            * (a * z + b * z - z + a + b + 1.0);
        assert!((det - closed).abs() < 1e-15);

        let w1 = WeightVector::canonical(1).unwrap();
        let d1 = det_hessian_ratio(&ratio(&[2.0]), &w1).unwrap();
        assert!((d1 - 0.125).abs() < 1e-15);

        let wz = WeightVector::pair(0.3, 0.6).unwrap();
        let on_surface = ratio(&[2.0, 2f64.powf(-0.5)]);
        let d0 = det_hessian_ratio(&on_surface, &wz).unwrap();
        let scale = hessian_ratio(&on_surface, &wz).unwrap().max_abs();
        assert!(d0.abs() <= 1e-10 * scale * scale);
    }

    #[test]
    fn determinant_with_zero_exponent_falls_back() {
        let w = WeightVector::new(vec![0.0, 0.7, -0.4]).unwrap();
        let p = ratio(&[1.3, 0.4, 2.2]);
        let direct = hessian_ratio(&p, &w).unwrap().determinant();
        assert_eq!(det_hessian_ratio(&p, &w).unwrap(), direct);
    }

    #[test]
    fn singular_locus_examples() {
        let w = WeightVector::pair(1.0, -1.0).unwrap();
        let v = singular_locus_value(&ratio(&[2.0, 0.3]), &w).unwrap();
        assert_eq!(v, 1.0);

        let w = WeightVector::pair(1.0 / 3.0, 0.5).unwrap();
        let root = singular_s(&w).unwrap();
        assert!((root.s_star - 0.5 * 11f64.ln()).abs() < 1e-15);
        assert!((root.s_star - 1.1989476363991853).abs() < 1e-15);
        assert!((root.s_star.tanh() - 5.0 / 6.0).abs() < 1e-15);
        let at = ChartPoint::log(vec![3.0 * root.s_star, 0.0]).unwrap();
        assert!(singular_locus_value(&at, &w).unwrap().abs() < 1e-14);
        assert!(!root.on_zero_cost);

        assert!(singular_s(&WeightVector::pair(0.5, 0.5).unwrap()).is_none());
        assert!(singular_s(&WeightVector::pair(-2.0, 1.0).unwrap()).is_none());
        let coincident = singular_s(&WeightVector::pair(1.0, -1.0).unwrap()).unwrap();
        assert_eq!(coincident.s_star, 0.0);
        assert!(coincident.on_zero_cost);

        assert!(matches!(
            singular_locus_value(&ratio(&[1.0, 1.0]), &w),
            Err(GeoError::ZeroCostPoint(_))
        ));
    }

    #[test]
    fn radical_basis_two_dimensional() {
        let (a, b) = (0.3, -1.1);
        let w = WeightVector::pair(a, b).unwrap();
        let rb = radical_basis(&w).unwrap();
        assert_eq!(rb.vectors.len(), 1);
        let v = &rb.vectors[0];
        // parallel to (b, -a)
        assert!((v[0] * (-a) - v[1] * b).abs() < 1e-15);
    }

    #[test]
    fn radical_basis_three_dimensional_canonical() {
        let w = WeightVector::canonical(3).unwrap();
        let rb = radical_basis(&w).unwrap();
        assert_eq!(rb.vectors.len(), 2);
        // Gram-Schmidt on e1, e2 against (1,1,1)/sqrt(3)
        let e1 = [2.0 / 6f64.sqrt(), -1.0 / 6f64.sqrt(), -1.0 / 6f64.sqrt()];
        let e2 = [0.0, 1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        for v in &rb.vectors {
            assert!(v.iter().sum::<f64>().abs() < 1e-15);
            let in_span = {
                let c1: f64 = v.iter().zip(&e1).map(|(x, y)| x * y).sum();
                let c2: f64 = v.iter().zip(&e2).map(|(x, y)| x * y).sum();
                (c1 * c1 + c2 * c2 - 1.0).abs()
            };
            assert!(in_span < 1e-14);
        }
    }

    #[test]
    fn pullback_examples() {
        let (a, b) = (0.6, -0.2);
        let w = WeightVector::pair(a, b).unwrap();
        let aat = SymMatrix::outer(&[a, b], 1.0);

        let g = pullback(
            |p| hessian_log(p, &w),
            &ratio(&[1.0, 1.0]),
            Chart::Log,
            Chart::Ratio,
        )
        .unwrap();
        assert!(g.scaled_diff(&aat) < 1e-15);

        let h = pullback(
            |p| hessian_ratio(p, &w),
            &log(&[0.0, 0.0]),
            Chart::Ratio,
            Chart::Log,
        )
        .unwrap();
        assert!(h.scaled_diff(&aat) < 1e-15);

        // general point: the printed h_{st} table
        let (s, t) = (0.4, -1.3);
        let q: f64 = a * s + b * t;
        let h = pullback(
            |p| hessian_ratio(p, &w),
            &log(&[s, t]),
            Chart::Ratio,
            Chart::Log,
        )
        .unwrap();
        assert!((h.get(0, 0) - a * (a * q.cosh() - q.sinh())).abs() < 1e-14);
        assert!((h.get(0, 1) - a * b * q.cosh()).abs() < 1e-14);
        assert!((h.get(1, 1) - b * (b * q.cosh() - q.sinh())).abs() < 1e-14);

        // and the transformed g table at a general point
        let x = [1.7, 0.4];
        let g = pullback(|p| hessian_log(p, &w), &ratio(&x), Chart::Log, Chart::Ratio).unwrap();
        let r = x[0].powf(a) * x[1].powf(b);
        assert!((g.get(0, 0) - a * a * (r + 1.0 / r) / (2.0 * x[0] * x[0])).abs() < 1e-14);
        assert!((g.get(0, 1) - a * b * (r + 1.0 / r) / (2.0 * x[0] * x[1])).abs() < 1e-14);
    }

    #[test]
    fn fd_hessian_exact_on_quadratics() {
        let p = log(&[0.3, -0.2]);
        let f = |q: &ChartPoint| {
            let c = q.coords();
            Ok(3.0 * c[0] * c[0] - 2.0 * c[0] * c[1] + 0.5 * c[1] * c[1] + c[0])
        };
        let h = fd_hessian(f, &p, FdStep::Fixed(1e-2)).unwrap();
        assert!((h.get(0, 0) - 6.0).abs() < 1e-9);
        assert!((h.get(0, 1) + 2.0).abs() < 1e-9);
        assert!((h.get(1, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fd_hessian_is_second_order() {
        // Richardson: halving h cuts the error by about four.
        let w = WeightVector::pair(0.8, 0.5).unwrap();
        let p = log(&[0.7, 0.4]);
        let exact = hessian_log(&p, &w).unwrap();
        let f = |q: &ChartPoint| Ok(cost_log(q, &w)?.j);
        let e1 = fd_hessian(f, &p, FdStep::Fixed(1e-2))
            .unwrap()
            .scaled_diff(&exact);
        let e2 = fd_hessian(f, &p, FdStep::Fixed(5e-3))
            .unwrap()
            .scaled_diff(&exact);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn fd_hessian_matches_ratio_hessian() {
        let w = WeightVector::pair(1.0 / 3.0, 0.5).unwrap();
        let p = ratio(&[2.0, 3.0]);
        let fd = fd_hessian(|q| Ok(cost_ratio(q, &w)?.j), &p, FdStep::Fixed(1e-4)).unwrap();
        let h = hessian_ratio(&p, &w).unwrap();
        assert!(fd.scaled_diff(&h) < 1e-6);
    }

    #[test]
    fn fd_hessian_domain_violation() {
        let w = WeightVector::canonical(1).unwrap();
        let err = fd_hessian(
            |q| Ok(cost_ratio(q, &w)?.j),
            &ratio(&[1e-3]),
            FdStep::Fixed(1e-3),
        );
        assert!(matches!(err, Err(GeoError::DomainViolation { .. })));
    }

    #[test]
    fn rank_one_for_generic_potentials() {
        let w = WeightVector::new(vec![0.5, -0.2, 0.9]).unwrap();
        let p = log(&[0.1, 0.6, -0.4]);
        for f in [f64::exp as fn(f64) -> f64, |s: f64| s.cosh() - 1.0] {
            let h = fd_hessian(|q| Ok(f(w.dot(q.coords()))), &p, FdStep::Auto).unwrap();
            assert_eq!(rank(&h, 1e-6), 1);
        }
    }

    #[test]
    fn oracle_agreement_sweep() {
        let mut sampler = Sampler::new(11);
        for n in [1, 2, 3, 5] {
            for _ in 0..100 {
                let w = WeightVector::new(sampler.weights(n)).unwrap();
                let p = ratio(&sampler.ratio_point(n));
                let h = hessian_ratio(&p, &w).unwrap();
                let f = |q: &ChartPoint| Ok(cost_ratio(q, &w)?.j);
                let fd =
                    fd_hessian_richardson(f, &p, FdStep::Relative(tolerance::FD_RICHARDSON_STEP))
                        .unwrap();
                assert!(
                    fd.scaled_diff(&h) < 1e-6,
                    "n={n} err={}",
                    fd.scaled_diff(&h)
                );
            }
        }
    }

    proptest! {
        #[test]
        fn rank_one_law(t in prop::collection::vec(-3.0f64..3.0, 1..6), seed in 0u64..500) {
            let w = WeightVector::new(Sampler::new(seed).weights(t.len())).unwrap();
            let h = hessian_log(&ChartPoint::log(t).unwrap(), &w).unwrap();
            prop_assert_eq!(rank(&h, tolerance::RANK), 1);
        }

        #[test]
        fn quadratic_form(t in prop::collection::vec(-3.0f64..3.0, 3), v in prop::collection::vec(-2.0f64..2.0, 3)) {
            let w = WeightVector::new(vec![0.3, -0.5, 0.8]).unwrap();
            let p = ChartPoint::log(t.clone()).unwrap();
            let h = hessian_log(&p, &w).unwrap();
            let expect = w.dot(&t).cosh() * w.dot(&v).powi(2);
            prop_assert!(tolerance::close(h.quad_form(&v), expect, 1e-12));
        }

        #[test]
        fn determinant_lemma(t in prop::collection::vec(-2.0f64..2.0, 3), seed in 0u64..500) {
            let w = WeightVector::new(Sampler::new(seed).weights(3)).unwrap();
            let p = ChartPoint::log(t).unwrap().to_ratio().unwrap();
            let lemma = det_hessian_ratio(&p, &w).unwrap();
            let direct = hessian_ratio(&p, &w).unwrap().determinant();
            let scale = hessian_ratio(&p, &w).unwrap().max_abs().powi(3).max(1e-300);
            prop_assert!((lemma - direct).abs() <= 1e-10 * scale.max(direct.abs()));
        }

        #[test]
        fn radical_vectors_are_orthonormal_kernel(seed in 0u64..500, n in 2usize..7) {
            let mut s = Sampler::new(seed);
            let w = WeightVector::new(s.weights(n)).unwrap();
            let rb = radical_basis(&w).unwrap();
            prop_assert_eq!(rb.vectors.len(), n - 1);
            let h = hessian_log(&ChartPoint::log(s.log_point(n)).unwrap(), &w).unwrap();
            for (k, v) in rb.vectors.iter().enumerate() {
                prop_assert!(w.dot(v).abs() < 1e-14);
                prop_assert!(h.mul_vec(v).iter().all(|x| x.abs() < 1e-12 * h.max_abs().max(1.0)));
                for (l, u) in rb.vectors.iter().enumerate() {
                    let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                    let e = if k == l { 1.0 } else { 0.0 };
                    prop_assert!((d - e).abs() < 1e-14);
                }
            }
        }

        #[test]
        fn pullback_round_trip(t in prop::collection::vec(-2.0f64..2.0, 3)) {
            let m = SymMatrix::from_fn(3, |i, j| (i as f64 + 1.0) * 0.3 - j as f64);
            let x: Vec<f64> = t.iter().map(|v| v.exp()).collect();
            let there = pullback_at(&m, &x, Chart::Ratio, Chart::Log).unwrap();
            let back = pullback_at(&there, &x, Chart::Log, Chart::Ratio).unwrap();
            prop_assert!(back.scaled_diff(&m) < 1e-12);
        }

        #[test]
        fn degeneracy_curve_two_dimensional(a in -0.9f64..0.9, b in -0.9f64..0.9, z in 0.05f64..20.0) {
            // Sign of 1 - coth(S)(a+b) flips only across Z* = -(a+b+1)/(a+b-1).
            prop_assume!((a + b).abs() < 1.0 && (a + b).abs() > 1e-3 && (z - 1.0).abs() > 1e-6);
            let w = WeightVector::pair(a, b).unwrap();
            let zstar = -(a + b + 1.0) / (a + b - 1.0);
            prop_assume!((z / zstar).ln().abs() > 1e-6);
            let s = 0.5 * z.ln();
            let v = singular_locus_value(&ChartPoint::qr(s, 0.0).unwrap(), &w).unwrap();
            let factor = (a + b - 1.0) * z + (a + b + 1.0);
            // 1 - coth(S)(a+b) = -factor / (Z - 1)
            let predicted = -factor / (z - 1.0);
            prop_assert_eq!(v.signum(), predicted.signum());
        }
    }
}
