//! Geodesics of the two affine structures and of the Levi-Civita connection
//! of the ratio-chart Hessian metric (two dimensions).

use serde::Serialize;

use crate::chart::{log_to_qr, qr_to_log, Chart};
use crate::connection::{q_chart_guards, SingularContext};
use crate::error::{GeoError, Result};
use crate::ode::{integrate, IntegratorConfig, Outcome, Stats};
use crate::tolerance;

/// Number of dense samples emitted per integrated span.
pub const DENSE_SAMPLES: usize = 512;

/// A point on a geodesic. `chart` is `Ratio` for `(x, y)` states and `Qr` for
/// `(q, r)` states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub chart: Chart,
    pub lambda: f64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    /// Second derivative along the curve, when known. Residuals use it in
    /// preference to the Levi-Civita right-hand side.
    pub acceleration: Option<[f64; 2]>,
}

impl GeodesicState {
    pub fn xy(lambda: f64, position: [f64; 2], velocity: [f64; 2]) -> Self {
        Self {
            chart: Chart::Ratio,
            lambda,
            position,
            velocity,
            acceleration: None,
        }
    }

    pub fn qr(lambda: f64, position: [f64; 2], velocity: [f64; 2]) -> Self {
        Self {
            chart: Chart::Qr,
            ..Self::xy(lambda, position, velocity)
        }
    }

    /// Same point and velocity in `(q, r)`; the acceleration is dropped.
    pub fn to_qr(&self, a: f64, b: f64) -> Result<Self> {
        match self.chart {
            Chart::Qr => Ok(*self),
            Chart::Ratio => {
                let [x, y] = self.position;
                check_positive(x, y)?;
                let (sd, td) = (self.velocity[0] / x, self.velocity[1] / y);
                let (q, r) = log_to_qr(a, b, x.ln(), y.ln());
                let (qd, rd) = log_to_qr(a, b, sd, td);
                Ok(Self::qr(self.lambda, [q, r], [qd, rd]))
            }
            Chart::Log => Err(GeoError::UnsupportedChartPair {
                from: Chart::Log,
                to: Chart::Qr,
            }),
        }
    }

    /// Same point and velocity in `(x, y)`; the acceleration is dropped.
    pub fn to_xy(&self, a: f64, b: f64) -> Result<Self> {
        match self.chart {
            Chart::Ratio => Ok(*self),
            Chart::Qr => {
                let (s, t) = qr_to_log(a, b, self.position[0], self.position[1]);
                let (sd, td) = qr_to_log(a, b, self.velocity[0], self.velocity[1]);
                let (x, y) = (s.exp(), t.exp());
                Ok(Self::xy(self.lambda, [x, y], [x * sd, y * td]))
            }
            Chart::Log => Err(GeoError::UnsupportedChartPair {
                from: Chart::Log,
                to: Chart::Ratio,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    SpanComplete,
    SingularityReached,
    DomainBoundary,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<GeodesicState>,
    pub termination: Termination,
    pub stats: Stats,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }
}

fn check_positive(x: f64, y: f64) -> Result<()> {
    for (index, value) in [x, y].into_iter().enumerate() {
        if !(value > 0.0) {
            return Err(GeoError::NonPositiveCoordinate { index, value });
        }
    }
    Ok(())
}

/// `t0 + lambda v`.
pub fn affine_geodesic_log(t0: &[f64], v: &[f64], lambda: f64) -> Vec<f64> {
    t0.iter().zip(v).map(|(t, vi)| t + lambda * vi).collect()
}

/// A straight line `x0 + lambda v` of the ratio-flat structure together with
/// the open interval on which it stays in the positive orthant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineRatioPath {
    pub x0: Vec<f64>,
    pub v: Vec<f64>,
    pub interval: (f64, f64),
}

impl AffineRatioPath {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.interval.0 && lambda < self.interval.1
    }

    pub fn at(&self, lambda: f64) -> Result<Vec<f64>> {
        if !self.contains(lambda) {
            return Err(GeoError::OutOfSpan(lambda));
        }
        Ok(self
            .x0
            .iter()
            .zip(&self.v)
            .map(|(x, v)| x + lambda * v)
            .collect())
    }

    /// The same curve in log coordinates, `s_i = ln(x0_i + lambda v_i)`.
    pub fn log_at(&self, lambda: f64) -> Result<Vec<f64>> {
        Ok(self.at(lambda)?.into_iter().map(f64::ln).collect())
    }

    pub fn is_complete(&self) -> bool {
        self.interval == (f64::NEG_INFINITY, f64::INFINITY)
    }
}

pub fn affine_geodesic_ratio(x0: &[f64], v: &[f64]) -> Result<AffineRatioPath> {
    if x0.len() != v.len() {
        return Err(GeoError::DimensionMismatch {
            expected: x0.len(),
            found: v.len(),
        });
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (index, (&x, &vi)) in x0.iter().zip(v).enumerate() {
        if !(x > 0.0) {
            return Err(GeoError::NonPositiveCoordinate { index, value: x });
        }
        // x + lambda v > 0
        if vi > 0.0 {
            lo = lo.max(-x / vi);
        } else if vi < 0.0 {
            hi = hi.min(-x / vi);
        }
    }
    Ok(AffineRatioPath {
        x0: x0.to_vec(),
        v: v.to_vec(),
        interval: (lo, hi),
    })
}

/// Acceleration of the log-flat straight line `s = s0 + lambda s1` seen in
/// the ratio chart: `x'' = x'^2 / x` componentwise.
pub fn log_flat_acceleration(position: [f64; 2], velocity: [f64; 2]) -> [f64; 2] {
    [
        velocity[0] * velocity[0] / position[0],
        velocity[1] * velocity[1] / position[1],
    ]
}

/// Levi-Civita geodesic equations in `(x, y)`: returns `(x'', y'')`.
pub fn lc_rhs_xy(a: f64, b: f64, position: [f64; 2], velocity: [f64; 2]) -> Result<[f64; 2]> {
    if a == 0.0 || b == 0.0 {
        return Err(GeoError::ZeroExponent);
    }
    let [x, y] = position;
    let [xd, yd] = velocity;
    let ctx = SingularContext::new(a, b, x, y)?;
    let (z, d) = (ctx.z, ctx.delta);
    if !(d.abs() >= tolerance::SINGULAR) {
        return Err(GeoError::SingularMetric {
            what: "Delta",
            value: d,
        });
    }
    let z2 = z * z;
    let xdd = -((a + 1.0) * (a + 2.0 * b + 2.0) - 2.0 * z * (a * a - 2.0 * a * b + 2.0)
        + (a - 1.0) * z2 * (a + 2.0 * b - 2.0))
        / (2.0 * d * x)
        * xd
        * xd
        - b * (2.0 * z * (b - 2.0 * a) + (b - 1.0) * z2 + b + 1.0) / (d * y) * xd * yd
        + b * x * ((b - 1.0) * z2 + 6.0 * b * z + b + 1.0) / (2.0 * d * y * y) * yd * yd;
    let ydd = -((b + 1.0) * (2.0 * a + b + 2.0) - 2.0 * z * (-2.0 * a * b + b * b + 2.0)
        + (b - 1.0) * z2 * (2.0 * a + b - 2.0))
        / (2.0 * d * y)
        * yd
        * yd
        - a * (2.0 * z * (a - 2.0 * b) + (a - 1.0) * z2 + a + 1.0) / (d * x) * xd * yd
        + a * y * ((a - 1.0) * z2 + 6.0 * a * z + a + 1.0) / (2.0 * d * x * x) * xd * xd;
    Ok([xdd, ydd])
}

/// Coefficients of the `(q, r)` geodesic equations, which depend on `q` only.
struct QrCoefficients {
    q: f64,
    lead: f64,
    n2: f64,
    ch: f64,
    sh: f64,
    coth: f64,
}

impl QrCoefficients {
    fn new(a: f64, b: f64, q: f64) -> Self {
        let n2 = a * a + b * b;
        let (ch, sh) = (q.cosh(), q.sinh());
        Self {
            q,
            lead: 2.0 * n2 * n2 * ((a + b) * ch - sh),
            n2,
            ch,
            sh,
            coth: ch / sh,
        }
    }

    /// Left-hand sides without the `q''` and `r''` terms.
    fn rest(&self, a: f64, b: f64, qd: f64, rd: f64) -> [f64; 2] {
        let Self {
            q,
            n2,
            ch,
            sh,
            coth,
            ..
        } = *self;
        let n4 = n2 * n2;
        let (s, d) = (a + b, a - b);
        let p4 = a.powi(4) - a.powi(3) * b + 4.0 * a * a * b * b - a * b.powi(3) + b.powi(4);
        let c3 = a.powi(3) + b.powi(3);
        let r1 = -2.0 * a * b * d * s * qd * ch * rd
            + a * b * s * s * ch * rd * rd
            + qd * qd * (s * n4 * sh - p4 * ch);
        let (s2q, c2q) = ((2.0 * q).sinh(), (2.0 * q).cosh());
        let r2 = 2.0 * s * qd * coth * rd * (n4 * ch - c3 * sh)
            - 0.5 * d * qd * qd / sh * (-c3 * s2q + n4 * c2q + 3.0 * n4)
            + a * b * d * s * ch * rd * rd;
        [r1, r2]
    }
}

/// Left-hand sides of the two implicit `(q, r)` geodesic equations.
pub fn qr_equation_lhs(a: f64, b: f64, q: f64, vel: [f64; 2], acc: [f64; 2]) -> [f64; 2] {
    let c = QrCoefficients::new(a, b, q);
    let rest = c.rest(a, b, vel[0], vel[1]);
    [c.lead * acc[0] + rest[0], c.lead * acc[1] + rest[1]]
}

fn qr_guards(a: f64, b: f64, q: f64) -> Result<()> {
    if a == 0.0 || b == 0.0 {
        return Err(GeoError::ZeroExponent);
    }
    match q_chart_guards(a + b, q) {
        Err(GeoError::SingularMetric { what: "sinh q", .. }) => Err(GeoError::ZeroQ(q)),
        other => other.map(|_| ()),
    }
}

/// Levi-Civita geodesic equations in `(q, r)`, solved for `(q'', r'')`.
pub fn lc_rhs_qr(a: f64, b: f64, q: f64, velocity: [f64; 2]) -> Result<[f64; 2]> {
    qr_guards(a, b, q)?;
    let c = QrCoefficients::new(a, b, q);
    let rest = c.rest(a, b, velocity[0], velocity[1]);
    Ok([-rest[0] / c.lead, -rest[1] / c.lead])
}

/// Leading-order tangent directions of geodesics meeting the zero-cost
/// curve at `x = z0^{1/a}`, `y = z0^{-1/b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentConstraint {
    /// `x1 / y1 = z0^{1/a + 1/b}`
    pub ratio_plus: f64,
    /// `x1 / y1 = -(b/a) z0^{1/a + 1/b}`
    pub ratio_minus: f64,
    /// `r1 / q1 = (a - b) / (a + b)`
    pub qr_slope: f64,
}

pub fn tangent_constraints(z0: f64, a: f64, b: f64) -> Result<TangentConstraint> {
    if a == 0.0 || b == 0.0 {
        return Err(GeoError::ZeroExponent);
    }
    if !(z0 > 0.0) {
        return Err(GeoError::NonPositiveInput(z0, z0));
    }
    if a + b == 0.0 {
        return Err(GeoError::ZeroSum);
    }
    let p = z0.powf(1.0 / a + 1.0 / b);
    Ok(TangentConstraint {
        ratio_plus: p,
        ratio_minus: -(b / a) * p,
        qr_slope: (a - b) / (a + b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RhsKind {
    Xy,
    Qr,
}

impl RhsKind {
    fn chart(self) -> Chart {
        match self {
            RhsKind::Xy => Chart::Ratio,
            RhsKind::Qr => Chart::Qr,
        }
    }

    fn acceleration(self, a: f64, b: f64, y: &[f64]) -> Result<[f64; 2]> {
        match self {
            RhsKind::Xy => lc_rhs_xy(a, b, [y[0], y[1]], [y[2], y[3]]),
            RhsKind::Qr => lc_rhs_qr(a, b, y[0], [y[2], y[3]]),
        }
    }

    /// The termination a state triggers, if any.
    fn guard(self, a: f64, b: f64, y: &[f64]) -> Option<Termination> {
        match self {
            RhsKind::Xy => {
                if y[0] <= tolerance::DOMAIN || y[1] <= tolerance::DOMAIN {
                    return Some(Termination::DomainBoundary);
                }
                let d = SingularContext::new(a, b, y[0], y[1]).ok()?.delta;
                (d.abs() < tolerance::SINGULAR).then_some(Termination::SingularityReached)
            }
            RhsKind::Qr => q_chart_guards(a + b, y[0])
                .err()
                .map(|_| Termination::SingularityReached),
        }
    }
}

/// Integrates a Levi-Civita geodesic from `state0` over `span` (started at
/// `span.0`, which may exceed `span.1` for backward integration).
pub fn integrate_geodesic(
    kind: RhsKind,
    a: f64,
    b: f64,
    state0: &GeodesicState,
    span: (f64, f64),
    tol: f64,
) -> Result<Trajectory> {
    let (l0, l1) = span;
    if !(l0.is_finite() && l1.is_finite()) || l0 == l1 {
        return Err(GeoError::InvalidSpan(l0, l1));
    }
    state0.chart_matches(kind.chart())?;
    let y0 = [
        state0.position[0],
        state0.position[1],
        state0.velocity[0],
        state0.velocity[1],
    ];
    if let Some(t) = kind.guard(a, b, &y0) {
        return Err(GeoError::InadmissibleInitialState(format!(
            "{t:?} at the initial point"
        )));
    }
    kind.acceleration(a, b, &y0)
        .map_err(|e| GeoError::InadmissibleInitialState(e.to_string()))?;
    let rhs = |_l: f64, y: &[f64]| -> Result<Vec<f64>> {
        let acc = kind.acceleration(a, b, y)?;
        Ok(vec![y[2], y[3], acc[0], acc[1]])
    };
    let cfg = IntegratorConfig::for_span(l1 - l0, tol);
    let sol = integrate(&rhs, l0, &y0, l1, &cfg, |_l, y| kind.guard(a, b, y))?;
    let termination = match sol.outcome {
        Outcome::Completed => Termination::SpanComplete,
        Outcome::Stopped(t) => t,
        Outcome::StepUnderflow => Termination::StepUnderflow,
        Outcome::MaxSteps => Termination::MaxSteps,
    };
    let count = if sol.nodes.len() < 2 {
        1
    } else {
        DENSE_SAMPLES
    };
    let samples = sol
        .sample_uniform(count)?
        .into_iter()
        .map(|(lambda, y)| GeodesicState {
            chart: kind.chart(),
            lambda,
            position: [y[0], y[1]],
            velocity: [y[2], y[3]],
            acceleration: kind.acceleration(a, b, &y).ok(),
        })
        .collect();
    Ok(Trajectory {
        samples,
        termination,
        stats: sol.stats,
    })
}

impl GeodesicState {
    fn chart_matches(&self, expected: Chart) -> Result<()> {
        if self.chart != expected {
            return Err(GeoError::ChartMismatch {
                expected,
                found: self.chart,
            });
        }
        Ok(())
    }
}

/// `(q, r)` position, velocity and acceleration of an `(x, y)` state, by
/// the chain rule through `s = ln x`, `t = ln y`.
pub fn xy_state_to_qr(
    a: f64,
    b: f64,
    state: &GeodesicState,
) -> Result<([f64; 2], [f64; 2], [f64; 2])> {
    state.chart_matches(Chart::Ratio)?;
    let [x, y] = state.position;
    check_positive(x, y)?;
    let [xd, yd] = state.velocity;
    let [xdd, ydd] = match state.acceleration {
        Some(acc) => acc,
        None => lc_rhs_xy(a, b, state.position, state.velocity)?,
    };
    let (sd, td) = (xd / x, yd / y);
    let (sdd, tdd) = (xdd / x - sd * sd, ydd / y - td * td);
    let (q, r) = log_to_qr(a, b, x.ln(), y.ln());
    let (qd, rd) = log_to_qr(a, b, sd, td);
    let (qdd, rdd) = log_to_qr(a, b, sdd, tdd);
    Ok(([q, r], [qd, rd], [qdd, rdd]))
}

/// `|L1| + |L2|` of the `(q, r)` equations at every sample of an `(x, y)`
/// trajectory. Samples where no acceleration can be formed (on the
/// singular set) give `NaN`.
pub fn qr_residual(traj: &Trajectory, a: f64, b: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        if s.chart != Chart::Ratio {
            return Err(GeoError::MissingVelocities);
        }
        out.push(match xy_state_to_qr(a, b, s) {
            Ok((pos, vel, acc)) => {
                let l = qr_equation_lhs(a, b, pos[0], vel, acc);
                l[0].abs() + l[1].abs()
            }
            Err(_) => f64::NAN,
        });
    }
    Ok(out)
}

/// Samples of the log-flat straight line through `x0` with log velocity
/// `s1`, as an `(x, y)` trajectory carrying its own accelerations.
pub fn log_flat_trajectory(
    x0: [f64; 2],
    s1: [f64; 2],
    span: (f64, f64),
    count: usize,
) -> Result<Trajectory> {
    check_positive(x0[0], x0[1])?;
    let t0 = [x0[0].ln(), x0[1].ln()];
    let count = count.max(2);
    let samples = (0..count)
        .map(|i| {
            let l = span.0 + (span.1 - span.0) * i as f64 / (count - 1) as f64;
            let t = affine_geodesic_log(&t0, &s1, l);
            let pos = [t[0].exp(), t[1].exp()];
            let vel = [pos[0] * s1[0], pos[1] * s1[1]];
            GeodesicState {
                acceleration: Some(log_flat_acceleration(pos, vel)),
                ..GeodesicState::xy(l, pos, vel)
            }
        })
        .collect();
    Ok(Trajectory {
        samples,
        termination: Termination::SpanComplete,
        stats: Stats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::lc_christoffel_xy;
    use crate::cost::cost_log;
    use crate::hessian::{hessian_ratio, radical_basis};
    use crate::sampling::Sampler;
    use crate::{ChartPoint, WeightVector};
    use proptest::prelude::*;

    const FIG2: (f64, f64) = (1.0 / 3.0, 0.5);
    const FIG3: (f64, f64) = (-2.0, 1.0);

    #[test]
    fn affine_log_lines() {
        let t0 = [0.2, -0.4];
        assert_eq!(affine_geodesic_log(&t0, &[1.0, 2.0], 0.0), t0.to_vec());
        let v = [0.3, -1.1];
        let x = |l: f64| {
            affine_geodesic_log(&t0, &v, l)
                .into_iter()
                .map(f64::exp)
                .collect::<Vec<_>>()
        };
        let (x0, x1) = (x(0.0), x(1.0));
        for i in 0..2 {
            assert!((x1[i] / x0[i] - v[i].exp()).abs() < 1e-14);
        }
        // along the radical direction the cost is constant
        let w = WeightVector::new(vec![0.4, -0.7, 1.2]).unwrap();
        let beta = radical_basis(&w).unwrap().vectors[0].clone();
        let t0 = [0.5, 0.1, -0.3];
        let j0 = cost_log(&ChartPoint::log(t0.to_vec()).unwrap(), &w)
            .unwrap()
            .j;
        for l in [-50.0, -1.0, 3.0, 80.0] {
            let p = ChartPoint::log(affine_geodesic_log(&t0, &beta, l)).unwrap();
            assert!((cost_log(&p, &w).unwrap().j - j0).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_ratio_intervals() {
        let p = affine_geodesic_ratio(&[1.0, 1.0], &[-1.0, 0.0]).unwrap();
        assert_eq!(p.interval, (f64::NEG_INFINITY, 1.0));
        let p = affine_geodesic_ratio(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(p.interval, (-1.0, f64::INFINITY));
        assert!(affine_geodesic_ratio(&[1.0, 2.0], &[0.0, 0.0])
            .unwrap()
            .is_complete());
        assert_eq!(p.at(-2.0), Err(GeoError::OutOfSpan(-2.0)));
    }

    #[test]
    fn affine_ratio_line_in_log_chart() {
        // s'' + s'^2 = 0 along the image
        let p = affine_geodesic_ratio(&[1.5, 0.7], &[-0.4, 0.9]).unwrap();
        let h = 1e-3;
        for l in [-0.5, 0.0, 1.0, 3.0] {
            let x = p.at(l).unwrap();
            let (m, c, pl) = (
                p.log_at(l - h).unwrap(),
                p.log_at(l).unwrap(),
                p.log_at(l + h).unwrap(),
            );
            for i in 0..2 {
                let (sd, sdd) = (p.v[i] / x[i], -(p.v[i] / x[i]).powi(2));
                assert!((sdd + sd * sd).abs() <= 1e-10);
                let fd_sd = (pl[i] - m[i]) / (2.0 * h);
                let fd_sdd = (pl[i] - 2.0 * c[i] + m[i]) / (h * h);
                assert!(
                    (fd_sdd + fd_sd * fd_sd).abs() < 1e-4,
                    "{}",
                    fd_sdd + fd_sd * fd_sd
                );
            }
        }
    }

    #[test]
    fn rhs_xy_is_minus_gamma_contraction() {
        let mut s = Sampler::new(5);
        let mut checked = 0;
        while checked < 50 {
            let (a, b, p) = crate::connection::sample_admissible(&mut s);
            let v = [s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0)];
            let acc = lc_rhs_xy(a, b, p, v).unwrap();
            let g = lc_christoffel_xy(a, b, p[0], p[1]).unwrap().contract(v);
            for k in 0..2 {
                assert!(
                    tolerance::close(acc[k], -g[k], 1e-10),
                    "{} {}",
                    acc[k],
                    -g[k]
                );
            }
            checked += 1;
        }
        assert_eq!(
            lc_rhs_xy(0.3, 0.5, [2.0, 3.0], [0.0, 0.0]).unwrap(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn rhs_xy_swap_symmetry() {
        let (a, b) = (0.7, -0.3);
        let acc = lc_rhs_xy(a, b, [1.3, 0.4], [0.2, -0.9]).unwrap();
        let swapped = lc_rhs_xy(b, a, [0.4, 1.3], [-0.9, 0.2]).unwrap();
        assert!((acc[0] - swapped[1]).abs() < 1e-12 && (acc[1] - swapped[0]).abs() < 1e-12);
    }

    #[test]
    fn rhs_qr_matches_transported_rhs_xy() {
        let mut s = Sampler::new(9);
        for _ in 0..50 {
            let (a, b, p) = crate::connection::sample_admissible(&mut s);
            let v = [s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0)];
            let st = GeodesicState::xy(0.0, p, v);
            let (pos, vel, acc) = xy_state_to_qr(a, b, &st).unwrap();
            let qr = lc_rhs_qr(a, b, pos[0], vel).unwrap();
            for k in 0..2 {
                assert!(
                    tolerance::close(qr[k], acc[k], 1e-8),
                    "{} {}",
                    qr[k],
                    acc[k]
                );
            }
        }
    }

    #[test]
    fn rhs_qr_homogeneous_and_symmetric_case() {
        let (a, b) = (0.6, 0.25);
        let v = [0.3, -0.7];
        let acc = lc_rhs_qr(a, b, 0.9, v).unwrap();
        let acc2 = lc_rhs_qr(a, b, 0.9, [2.0 * v[0], 2.0 * v[1]]).unwrap();
        assert!((acc2[0] - 4.0 * acc[0]).abs() < 1e-12 && (acc2[1] - 4.0 * acc[1]).abs() < 1e-12);
        assert_eq!(lc_rhs_qr(0.4, 0.4, 0.9, [0.5, 0.0]).unwrap()[1], 0.0);
        assert_eq!(
            lc_rhs_qr(0.4, 0.4, 0.0, [0.5, 0.0]),
            Err(GeoError::ZeroQ(0.0))
        );
    }

    #[test]
    fn tangent_constraint_values() {
        let c = tangent_constraints(1.0, 0.4, 0.8).unwrap();
        assert_eq!((c.ratio_plus, c.ratio_minus), (1.0, -2.0));
        let c = tangent_constraints(2.0, 1.0 / 3.0, 0.5).unwrap();
        assert!((c.ratio_plus - 32.0).abs() < 1e-12);
        let c = tangent_constraints(3.0, 0.5, 0.5).unwrap();
        assert!(c.ratio_plus * c.ratio_minus < 0.0 && c.qr_slope == 0.0);
        assert_eq!(tangent_constraints(1.0, 1.0, -1.0), Err(GeoError::ZeroSum));
        assert_eq!(
            tangent_constraints(1.0, 0.0, 1.0),
            Err(GeoError::ZeroExponent)
        );
    }

    fn energy(a: f64, b: f64, s: &GeodesicState) -> f64 {
        let w = WeightVector::pair(a, b).unwrap();
        hessian_ratio(&ChartPoint::ratio(s.position.to_vec()).unwrap(), &w)
            .unwrap()
            .quad_form(&s.velocity)
    }

    #[test]
    fn reference_geodesic_stays_on_equations() {
        let (a, b) = FIG2;
        let s0 = GeodesicState::xy(0.0, [4.0, 2.0], [-1.0, 1.0]);
        let traj = integrate_geodesic(RhsKind::Xy, a, b, &s0, (0.0, 5.0), 1e-10).unwrap();
        assert!(traj.samples.len() >= 2);
        assert!(traj.samples.windows(2).all(|w| w[1].lambda > w[0].lambda));
        let res = qr_residual(&traj, a, b).unwrap();
        for (s, r) in traj.samples.iter().zip(&res) {
            let d = SingularContext::new(a, b, s.position[0], s.position[1])
                .unwrap()
                .delta;
            if d.abs() > 1e-3 {
                assert!(*r <= 1e-8, "residual {r} at {s:?}");
            }
        }
    }

    #[test]
    fn energy_is_conserved() {
        let (a, b) = FIG3;
        let s0 = GeodesicState::xy(0.0, [1.0, 2.0], [-1.0, 3.0]);
        let traj = integrate_geodesic(RhsKind::Xy, a, b, &s0, (0.0, 1.0), 1e-10).unwrap();
        let e0 = energy(a, b, &traj.samples[0]);
        let steps = (traj.stats.accepted + traj.stats.rejected) as f64;
        for s in &traj.samples {
            assert!(tolerance::close(
                energy(a, b, s),
                e0,
                5.0 * 1e-10 * steps.max(1.0)
            ));
        }
    }

    #[test]
    fn symmetric_case_keeps_r_velocity_zero() {
        let s0 = GeodesicState::qr(0.0, [0.8, 0.3], [0.4, 0.0]);
        let traj = integrate_geodesic(RhsKind::Qr, 0.3, 0.3, &s0, (0.0, 3.0), 1e-10).unwrap();
        assert!(traj.samples.iter().all(|s| s.velocity[1].abs() <= 1e-10));
    }

    #[test]
    fn constant_trajectory() {
        let s0 = GeodesicState::xy(0.0, [3.0, 2.0], [0.0, 0.0]);
        let traj = integrate_geodesic(RhsKind::Xy, 0.3, 0.4, &s0, (0.0, 1.0), 1e-10).unwrap();
        assert_eq!(traj.termination, Termination::SpanComplete);
        assert!(traj.samples.iter().all(|s| s.position == [3.0, 2.0]));
        assert!(qr_residual(&traj, 0.3, 0.4)
            .unwrap()
            .iter()
            .all(|&r| r == 0.0));
    }

    #[test]
    fn affine_geodesic_is_not_levi_civita() {
        let (a, b) = FIG2;
        let traj = log_flat_trajectory([4.0, 2.0], [-0.25, 0.5], (0.0, 1.0), 16).unwrap();
        let res = qr_residual(&traj, a, b).unwrap();
        assert!(res.iter().cloned().fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn inadmissible_starts() {
        let s0 = GeodesicState::xy(0.0, [2.0, 0.5], [1.0, 0.0]);
        assert!(matches!(
            integrate_geodesic(RhsKind::Xy, 0.5, 0.5, &s0, (0.0, 1.0), 1e-10),
            Err(GeoError::InadmissibleInitialState(_))
        ));
        assert!(matches!(
            integrate_geodesic(RhsKind::Qr, 0.5, 0.5, &s0, (0.0, 1.0), 1e-10),
            Err(GeoError::ChartMismatch { .. })
        ));
        let ok = GeodesicState::xy(0.0, [4.0, 2.0], [1.0, 0.0]);
        assert!(matches!(
            integrate_geodesic(RhsKind::Xy, 0.5, 0.5, &ok, (1.0, 1.0), 1e-10),
            Err(GeoError::InvalidSpan(..))
        ));
    }

    #[test]
    fn chart_round_trip() {
        let (a, b) = FIG3;
        let s = GeodesicState::xy(0.3, [1.2, 0.7], [0.4, -0.2]);
        let back = s.to_qr(a, b).unwrap().to_xy(a, b).unwrap();
        for i in 0..2 {
            assert!((back.position[i] - s.position[i]).abs() < 1e-14);
            assert!((back.velocity[i] - s.velocity[i]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn rhs_is_quadratic_in_velocity(x in 0.2f64..5.0, y in 0.2f64..5.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
            let (a, b) = FIG2;
            if let (Ok(acc), Ok(acc3)) = (lc_rhs_xy(a, b, [x, y], [vx, vy]), lc_rhs_xy(a, b, [x, y], [3.0 * vx, 3.0 * vy])) {
                for k in 0..2 {
                    prop_assert!(tolerance::close(acc3[k], 9.0 * acc[k], 1e-10));
                }
            }
        }
    }
}
