//! Euclidean gradient flows of the cost in log coordinates, any dimension.
//!
//! The field `+-alpha sinh(alpha . t)` is parallel to `alpha`, so only
//! `S = alpha . t` moves. It obeys `S' = +-|alpha|^2 sinh S`, which
//! integrates to `tanh(S/2) = C exp(+-|alpha|^2 tau)`.

use serde::Serialize;

use crate::chart::{Chart, ChartPoint};
use crate::cost::cost_of_s;
use crate::error::{GeoError, Result};
use crate::hessian::radical_basis;
use crate::ode::{dense_sample, integrate, IntegratorConfig, Node, Outcome, Stats};
use crate::tolerance;
use crate::weights::WeightVector;

/// Samples emitted per integrated span.
pub const FLOW_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowSign {
    Ascent,
    Descent,
}

impl FlowSign {
    pub fn value(self) -> f64 {
        match self {
            FlowSign::Ascent => 1.0,
            FlowSign::Descent => -1.0,
        }
    }
}

fn log_coords<'a>(t: &'a ChartPoint, w: &WeightVector) -> Result<&'a [f64]> {
    t.expect_chart(Chart::Log)?;
    w.check_dim(t.dim())?;
    Ok(t.coords())
}

/// `+-alpha sinh(alpha . t)`.
pub fn gradient_field(t: &ChartPoint, w: &WeightVector, sign: FlowSign) -> Result<Vec<f64>> {
    let s = w.dot(log_coords(t, w)?);
    let f = sign.value() * s.sinh();
    Ok(w.as_slice().iter().map(|a| a * f).collect())
}

/// `dJ/dtau = +-|alpha|^2 sinh^2(S)` along the flow.
pub fn cost_rate(t: &ChartPoint, w: &WeightVector, sign: FlowSign) -> Result<f64> {
    let s = w.dot(log_coords(t, w)?);
    Ok(sign.value() * w.norm_sq() * s.sinh().powi(2))
}

/// `ln|tanh(S/2)|`, accurate for large `|S|` where `tanh` rounds to one.
pub fn ln_abs_c(s0: f64) -> f64 {
    let e = (-s0.abs()).exp();
    (-e).ln_1p() - e.ln_1p()
}

/// Parameter at which `|C exp(+-|alpha|^2 tau)|` reaches one, if it does.
pub fn blowup_time(s0: f64, w: &WeightVector, sign: FlowSign) -> Option<f64> {
    if s0 == 0.0 {
        return None;
    }
    Some(-ln_abs_c(s0) / (sign.value() * w.norm_sq()))
}

/// Closed-form `S(tau) = 2 artanh(C exp(+-|alpha|^2 tau))`, `C = tanh(S0/2)`.
pub fn closed_form_s(s0: f64, tau: f64, w: &WeightVector, sign: FlowSign) -> Result<f64> {
    if s0 == 0.0 {
        return Ok(0.0);
    }
    // u = ln|C exp(...)|, and S = sign(S0) ln((1 + e^u) / (1 - e^u))
    let u = ln_abs_c(s0) + sign.value() * w.norm_sq() * tau;
    if !(u < 0.0) {
        return Err(GeoError::BlowupTime {
            tau_star: blowup_time(s0, w, sign).unwrap_or(f64::NAN),
            tau_halt: tau,
        });
    }
    let s = u.exp().ln_1p() - (-u.exp_m1()).ln();
    Ok(s.copysign(s0))
}

/// Closed-form description of the flow through one initial point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSolution {
    pub sign: FlowSign,
    /// `tanh(S0/2)`
    pub c: f64,
    /// Coordinates along the radical basis, conserved by the flow.
    pub transverse: Vec<f64>,
    /// Open interval of `tau` on which the closed form exists.
    pub valid_interval: (f64, f64),
}

pub fn flow_solution(t0: &ChartPoint, w: &WeightVector, sign: FlowSign) -> Result<FlowSolution> {
    let t = log_coords(t0, w)?;
    let s0 = w.dot(t);
    let valid_interval = match blowup_time(s0, w, sign) {
        None => (f64::NEG_INFINITY, f64::INFINITY),
        Some(ts) if ts > 0.0 => (f64::NEG_INFINITY, ts),
        Some(ts) => (ts, f64::INFINITY),
    };
    Ok(FlowSolution {
        sign,
        c: (0.5 * s0).tanh(),
        transverse: radical_basis(w)?.project(t),
        valid_interval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FlowTermination {
    SpanComplete,
    /// Descent reached `|S| < 1e-12`.
    ConvergedToMinimum,
    /// Ascent halted near the analytic blowup time.
    Blowup {
        tau_star: f64,
        tau_halt: f64,
    },
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSample {
    pub tau: f64,
    pub t: Vec<f64>,
    pub s: f64,
    pub j: f64,
    /// Closed-form `S(tau)`; `NaN` past the blowup time.
    pub s_exact: f64,
    pub transverse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub sign: FlowSign,
    pub samples: Vec<FlowSample>,
    pub termination: FlowTermination,
    pub stats: Stats,
    #[serde(skip)]
    pub nodes: Vec<Node>,
}

impl FlowTrajectory {
    /// Log coordinates at any `tau` inside the integrated span.
    pub fn state_at(&self, tau: f64) -> Result<Vec<f64>> {
        Ok(dense_sample(&self.nodes, &[tau])?.pop().unwrap())
    }

    pub fn max_transverse_drift(&self) -> f64 {
        let r0 = &self.samples[0].transverse;
        self.samples
            .iter()
            .flat_map(|s| s.transverse.iter().zip(r0).map(|(r, r0)| (r - r0).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_closed_form_error(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.s_exact.is_finite())
            .map(|s| (s.s - s.s_exact).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates the flow and reports how it ended, including a blowup.
pub fn integrate_flow_partial(
    t0: &ChartPoint,
    w: &WeightVector,
    sign: FlowSign,
    span: (f64, f64),
    tol: f64,
) -> Result<FlowTrajectory> {
    let y0 = log_coords(t0, w)?.to_vec();
    let (tau0, tau1) = span;
    if !(tau0.is_finite() && tau1.is_finite()) || tau0 == tau1 {
        return Err(GeoError::InvalidSpan(tau0, tau1));
    }
    let alpha = w.as_slice().to_vec();
    let sigma = sign.value();
    let rhs = |_tau: f64, y: &[f64]| -> Result<Vec<f64>> {
        let f = sigma * w.dot(y).sinh();
        Ok(alpha.iter().map(|a| a * f).collect())
    };
    // a start already at the minimum is stationary, not converged
    let at_minimum = w.dot(&y0).abs() < tolerance::ZERO_COST_S;
    let stop = |tau: f64, y: &[f64]| {
        let s = w.dot(y).abs();
        if sign == FlowSign::Descent && !at_minimum && s < tolerance::ZERO_COST_S {
            Some(FlowTermination::ConvergedToMinimum)
        } else if s > tolerance::BLOWUP_S {
            Some(FlowTermination::Blowup {
                tau_star: f64::NAN,
                tau_halt: tau,
            })
        } else {
            None
        }
    };
    let mut cfg = IntegratorConfig::for_span(tau1 - tau0, tol);
    // near S = 0 the linearization has eigenvalue -|alpha|^2; keep h inside
    // the explicit stability region so round-off is damped, not amplified
    cfg.max_step = cfg.max_step.min(1.0 / w.norm_sq());
    let sol = integrate(&rhs, tau0, &y0, tau1, &cfg, stop)?;

    let s0 = w.dot(&y0);
    // the closed form is written for flows started at tau = 0
    let tau_star = blowup_time(s0, w, sign).map(|t| t + tau0);
    let halt = sol.last().t;
    let termination = match sol.outcome {
        Outcome::Completed => FlowTermination::SpanComplete,
        Outcome::Stopped(FlowTermination::Blowup { tau_halt, .. }) => FlowTermination::Blowup {
            tau_star: tau_star.unwrap_or(f64::NAN),
            tau_halt,
        },
        Outcome::Stopped(t) => t,
        Outcome::StepUnderflow if sign == FlowSign::Ascent && tau_star.is_some() => {
            FlowTermination::Blowup {
                tau_star: tau_star.unwrap(),
                tau_halt: halt,
            }
        }
        Outcome::StepUnderflow => FlowTermination::StepUnderflow,
        Outcome::MaxSteps => FlowTermination::MaxSteps,
    };

    let basis = radical_basis(w)?;
    let count = if sol.nodes.len() < 2 { 1 } else { FLOW_SAMPLES };
    let samples = sol
        .sample_uniform(count)?
        .into_iter()
        .map(|(tau, t)| {
            let s = w.dot(&t);
            FlowSample {
                tau,
                s,
                j: cost_of_s(s),
                s_exact: closed_form_s(s0, tau - tau0, w, sign).unwrap_or(f64::NAN),
                transverse: basis.project(&t),
                t,
            }
        })
        .collect();
    Ok(FlowTrajectory {
        sign,
        samples,
        termination,
        stats: sol.stats,
        nodes: sol.nodes,
    })
}

/// Integrates the flow over `span`; a blowup inside the span is an error.
pub fn integrate_flow(
    t0: &ChartPoint,
    w: &WeightVector,
    sign: FlowSign,
    span: (f64, f64),
    tol: f64,
) -> Result<FlowTrajectory> {
    let traj = integrate_flow_partial(t0, w, sign, span, tol)?;
    match traj.termination {
        FlowTermination::Blowup { tau_star, tau_halt } => {
            Err(GeoError::BlowupTime { tau_star, tau_halt })
        }
        _ => Ok(traj),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_log;
    use crate::sampling::Sampler;
    use proptest::prelude::*;

    fn log(t: &[f64]) -> ChartPoint {
        ChartPoint::log(t.to_vec()).unwrap()
    }

    #[test]
    fn field_vanishes_at_zero_cost_and_is_parallel_to_alpha() {
        let w = WeightVector::new(vec![0.5, -0.5, 1.0]).unwrap();
        assert!(gradient_field(&log(&[1.0, 1.0, 0.0]), &w, FlowSign::Ascent)
            .unwrap()
            .iter()
            .all(|&g| g == 0.0));
        let g = gradient_field(&log(&[0.3, -0.2, 0.9]), &w, FlowSign::Descent).unwrap();
        let k = g[0] / 0.5;
        for (gi, ai) in g.iter().zip(w.as_slice()) {
            assert!((gi - k * ai).abs() < 1e-15);
        }
    }

    #[test]
    fn two_dimensional_reduction() {
        // (dq/dtau, dr/dtau) = (|alpha|^2 sinh q, 0)
        let (a, b) = (0.7, -0.2);
        let w = WeightVector::pair(a, b).unwrap();
        let t = log(&[0.4, 1.3]);
        let g = gradient_field(&t, &w, FlowSign::Ascent).unwrap();
        let q = a * 0.4 + b * 1.3;
        let (dq, dr) = crate::chart::log_to_qr(a, b, g[0], g[1]);
        assert!((dq - w.norm_sq() * q.sinh()).abs() < 1e-15);
        assert!(dr.abs() < 1e-15);
    }

    #[test]
    fn rate_signs() {
        let w = WeightVector::canonical(2).unwrap();
        assert_eq!(
            cost_rate(&log(&[0.0, 0.0]), &w, FlowSign::Ascent).unwrap(),
            0.0
        );
        assert!(cost_rate(&log(&[1.0, 0.2]), &w, FlowSign::Ascent).unwrap() > 0.0);
        assert!(cost_rate(&log(&[1.0, 0.2]), &w, FlowSign::Descent).unwrap() < 0.0);
    }

    #[test]
    fn closed_form_basics() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        for sign in [FlowSign::Ascent, FlowSign::Descent] {
            assert_eq!(closed_form_s(0.0, 3.0, &w, sign).unwrap(), 0.0);
        }
        assert!(
            closed_form_s(2.0, 60.0, &w, FlowSign::Descent)
                .unwrap()
                .abs()
                < 1e-11
        );
        for s0 in [-30.0, -1.0, 1e-3, 2.0, 40.0] {
            let back = closed_form_s(s0, 0.0, &w, FlowSign::Ascent).unwrap();
            assert!(tolerance::close(back, s0, 1e-12), "{s0} {back}");
        }
    }

    #[test]
    fn blowup_time_value() {
        // |alpha|^2 = 1/2, S0 = 1: tau* = -2 ln tanh(1/2)
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let ts = blowup_time(1.0, &w, FlowSign::Ascent).unwrap();
        assert!((ts - (-2.0 * 0.5f64.tanh().ln())).abs() < 1e-14);
        // independent root of tanh(1/2) exp(tau/2) = 1
        let (mut lo, mut hi) = (0.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.5f64.tanh() * (0.5 * mid).exp() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((ts - lo).abs() < 1e-12);
        assert!((ts - 1.543_93).abs() < 1e-4);
        let near = closed_form_s(1.0, ts - 1e-9, &w, FlowSign::Ascent).unwrap();
        assert!(near > 20.0);
        assert!(matches!(
            closed_form_s(1.0, ts + 1e-9, &w, FlowSign::Ascent),
            Err(GeoError::BlowupTime { .. })
        ));
    }

    #[test]
    fn flow_solution_intervals() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let asc = flow_solution(&log(&[1.0, 1.0]), &w, FlowSign::Ascent).unwrap();
        assert_eq!(asc.valid_interval.0, f64::NEG_INFINITY);
        assert!(asc.valid_interval.1.is_finite());
        let desc = flow_solution(&log(&[1.0, 1.0]), &w, FlowSign::Descent).unwrap();
        assert_eq!(desc.valid_interval.1, f64::INFINITY);
        assert!((2.0 * desc.c.atanh() - 1.0).abs() < 1e-12);
        let still = flow_solution(&log(&[1.0, -1.0]), &w, FlowSign::Ascent).unwrap();
        assert_eq!(still.valid_interval, (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(still.transverse.len(), 1);
    }

    #[test]
    fn descent_converges_monotonically() {
        let w = WeightVector::new(vec![0.6, 0.8]).unwrap();
        let traj = integrate_flow(
            &log(&[1.2, 1.6]),
            &w,
            FlowSign::Descent,
            (0.0, 100.0),
            1e-10,
        )
        .unwrap();
        assert_eq!(traj.termination, FlowTermination::ConvergedToMinimum);
        assert!(traj.samples.last().unwrap().j < 1e-12);
        assert!(traj.samples.windows(2).all(|p| p[1].j <= p[0].j + 1e-12));
        assert!(traj.max_closed_form_error() < 1e-8);
        assert!(traj.max_transverse_drift() < 1e-10);
    }

    #[test]
    fn stationary_at_zero_cost() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let traj =
            integrate_flow(&log(&[1.0, -1.0]), &w, FlowSign::Descent, (0.0, 2.0), 1e-10).unwrap();
        assert_eq!(traj.termination, FlowTermination::SpanComplete);
        assert!(traj.samples.iter().all(|s| s.t == vec![1.0, -1.0]));
    }

    #[test]
    fn ascent_blowup_matches_prediction() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let err =
            integrate_flow(&log(&[1.0, 1.0]), &w, FlowSign::Ascent, (0.0, 3.0), 1e-10).unwrap_err();
        let GeoError::BlowupTime { tau_star, tau_halt } = err else {
            panic!("{err:?}")
        };
        assert!(
            ((tau_halt - tau_star) / tau_star).abs() < 1e-3,
            "{tau_star} {tau_halt}"
        );
        let traj =
            integrate_flow_partial(&log(&[1.0, 1.0]), &w, FlowSign::Ascent, (0.0, 1.0), 1e-10)
                .unwrap();
        assert!(traj.samples.windows(2).all(|p| p[1].j >= p[0].j - 1e-12));
    }

    #[test]
    fn rate_matches_difference_quotient() {
        let w = WeightVector::new(vec![0.3, -0.9, 0.4]).unwrap();
        let traj = integrate_flow(
            &log(&[0.5, -0.8, 1.0]),
            &w,
            FlowSign::Descent,
            (0.0, 2.0),
            1e-10,
        )
        .unwrap();
        let h = 1e-2;
        for s in traj.samples.iter().skip(3).step_by(50) {
            let j = |tau: f64| cost_log(&log(&traj.state_at(tau).unwrap()), &w).unwrap().j;
            let d = |h: f64| (j(s.tau + h) - j(s.tau - h)) / (2.0 * h);
            let fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
            let exact = cost_rate(&log(&s.t), &w, FlowSign::Descent).unwrap();
            assert!(tolerance::close(fd, exact, 1e-6), "{fd} {exact}");
        }
    }

    #[test]
    fn seeded_descent_runs() {
        let mut sampler = Sampler::new(3);
        for n in [2, 3, 5] {
            for _ in 0..5 {
                let w = WeightVector::new(sampler.weights(n)).unwrap();
                let t0 = log(&sampler.log_point(n));
                let traj = integrate_flow(&t0, &w, FlowSign::Descent, (0.0, 5.0), 1e-10).unwrap();
                assert!(traj.max_closed_form_error() < 1e-8);
                assert!(traj.max_transverse_drift() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_solves_the_ode(s0 in -5.0f64..5.0, tau in 0.0f64..3.0) {
            let w = WeightVector::new(vec![0.4, 0.7]).unwrap();
            let h = 1e-5;
            let f = |t: f64| closed_form_s(s0, t, &w, FlowSign::Descent).unwrap();
            let ds = (f(tau + h) - f(tau - h)) / (2.0 * h);
            prop_assert!(tolerance::close(ds, -w.norm_sq() * f(tau).sinh(), 1e-6));
        }
    }
}
