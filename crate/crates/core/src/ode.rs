//! Adaptive Dormand-Prince 5(4) integrator with dense output.
//!
//! Dense output uses the pair's own quartic continuous extension, which is
//! accurate to about the local tolerance. Nodes without that data (built by
//! hand) fall back to cubic Hermite interpolation.

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::tolerance;

/// Right-hand side `y' = f(t, y)`.
pub trait Rhs: Fn(f64, &[f64]) -> Result<Vec<f64>> {}
impl<F: Fn(f64, &[f64]) -> Result<Vec<f64>>> Rhs for F {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    /// Defaults for a span of length `span`: tolerances `tol`, initial step
    /// `1e-3 span`, steps bounded to `[1e-14 span, 0.1 span]`.
    pub fn for_span(span: f64, tol: f64) -> Self {
        let span = span.abs();
        Self {
            rel_tol: tol,
            abs_tol: tol,
            initial_step: 1e-3 * span,
            max_step: 0.1 * span,
            min_step: 1e-14 * span,
            max_steps: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step.is_finite()
            && self.max_steps > 0;
        if !ok {
            return Err(GeoError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::for_span(1.0, tolerance::ODE_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepResult {
    pub accepted: bool,
    /// Scaled error norm; `<= 1` for accepted steps.
    pub error_estimate: f64,
    pub next_step: f64,
}

/// Outcome of one attempted step. `state` and `derivative` refer to the end
/// of the step and are meaningful only when the step was accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub result: StepResult,
    pub state: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Continuous-extension coefficients of the step, per component.
    pub interp: Vec<[f64; 5]>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights (equal to the last row of `A`, first-same-as-last).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Continuous-extension weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn call<F: Rhs>(rhs: &F, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let out = rhs(t, y).map_err(|e| GeoError::RhsEvaluationFailure {
        param: t,
        source: Box::new(e),
    })?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GeoError::RhsEvaluationFailure {
            param: t,
            source: Box::new(GeoError::NonFinite("right-hand side")),
        });
    }
    Ok(out)
}

/// One Dormand-Prince step of signed size `h` from `(t, y)` with `f0 = f(t, y)`.
pub fn step<F: Rhs>(
    rhs: &F,
    y: &[f64],
    f0: &[f64],
    t: f64,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<Step> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f0.to_vec());
    let mut stage = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let incr: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
            stage[i] = y[i] + h * incr;
        }
        k.push(call(rhs, t + C[s] * h, &stage)?);
    }
    // the last stage was evaluated at y5
    let y5 = stage;
    let mut err = 0.0_f64;
    for i in 0..n {
        let e: f64 = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
        err = err.max(e.abs() / (cfg.abs_tol + cfg.rel_tol * y5[i].abs()));
    }
    let factor = if err == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    };
    let next = (h * factor).abs().min(cfg.max_step).copysign(h);
    let interp = (0..n)
        .map(|i| {
            let r2 = y5[i] - y[i];
            let r3 = h * k[0][i] - r2;
            let r4 = r2 - h * k[6][i] - r3;
            let r5 = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
            [y[i], r2, r3, r4, r5]
        })
        .collect();
    Ok(Step {
        result: StepResult {
            accepted: err <= 1.0,
            error_estimate: err,
            next_step: next,
        },
        state: y5,
        derivative: k.pop().unwrap(),
        interp,
    })
}

/// An accepted mesh point with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    /// Continuous extension of the step ending here; empty for the first
    /// node or when unknown.
    #[serde(skip)]
    pub interp: Vec<[f64; 5]>,
}

impl Node {
    pub fn new(t: f64, y: Vec<f64>, dy: Vec<f64>) -> Self {
        Self {
            t,
            y,
            dy,
            interp: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_failures: usize,
}

/// Why the driver stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<S> {
    Completed,
    /// The stop callback fired at the last accepted node.
    Stopped(S),
    /// The controller asked for a step below `min_step`.
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub nodes: Vec<Node>,
    pub outcome: Outcome<S>,
    pub stats: Stats,
}

impl<S> Solution<S> {
    pub fn last(&self) -> &Node {
        self.nodes
            .last()
            .expect("solution has at least the initial node")
    }

    /// Parameter interval actually covered, in integration order.
    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0].t, self.last().t)
    }

    /// `count` states uniformly spaced over the covered span.
    pub fn sample_uniform(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let (t0, t1) = self.span();
        let ts: Vec<f64> = match count {
            0 => Vec::new(),
            1 => vec![t0],
            _ => (0..count)
                .map(|i| {
                    if i + 1 == count {
                        t1
                    } else {
                        t0 + (t1 - t0) * i as f64 / (count - 1) as f64
                    }
                })
                .collect(),
        };
        let ys = dense_sample(&self.nodes, &ts)?;
        Ok(ts.into_iter().zip(ys).collect())
    }
}

/// Integrates from `(t0, y0)` towards `t_end` (either direction).
///
/// `stop` is called at every accepted node, including the initial one; a
/// `Some` value ends the integration there. A failing right-hand side is
/// treated as a rejected step and retried with a quarter of the step; it
/// is fatal only at the initial point.
pub fn integrate<F, S, G>(
    rhs: &F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut stop: G,
) -> Result<Solution<S>>
where
    F: Rhs,
    G: FnMut(f64, &[f64]) -> Option<S>,
{
    cfg.validate()?;
    if !(t0.is_finite() && t_end.is_finite()) || t0 == t_end {
        return Err(GeoError::InvalidSpan(t0, t_end));
    }
    let dir = (t_end - t0).signum();
    let f0 = call(rhs, t0, y0)?;
    let mut nodes = vec![Node::new(t0, y0.to_vec(), f0)];
    let mut stats = Stats::default();
    let finish = |nodes, outcome, stats| {
        Ok(Solution {
            nodes,
            outcome,
            stats,
        })
    };
    if let Some(s) = stop(t0, y0) {
        return finish(nodes, Outcome::Stopped(s), stats);
    }
    let mut h = cfg.initial_step * dir;
    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return finish(nodes, Outcome::MaxSteps, stats);
        }
        let cur = nodes.last().unwrap();
        let remaining = t_end - cur.t;
        let last = h.abs() >= remaining.abs();
        let h_try = if last { remaining } else { h };
        match step(rhs, &cur.y, &cur.dy, cur.t, h_try, cfg) {
            Ok(st) if st.result.accepted => {
                stats.accepted += 1;
                let t = if last { t_end } else { cur.t + h_try };
                let stopped = stop(t, &st.state);
                nodes.push(Node {
                    t,
                    y: st.state,
                    dy: st.derivative,
                    interp: st.interp,
                });
                if let Some(s) = stopped {
                    return finish(nodes, Outcome::Stopped(s), stats);
                }
                if last {
                    return finish(nodes, Outcome::Completed, stats);
                }
                h = st.result.next_step;
            }
            Ok(st) => {
                stats.rejected += 1;
                h = st.result.next_step;
            }
            Err(GeoError::RhsEvaluationFailure { .. }) => {
                stats.rhs_failures += 1;
                h = 0.25 * h_try;
            }
            Err(e) => return Err(e),
        }
        if h.abs() < cfg.min_step {
            return finish(nodes, Outcome::StepUnderflow, stats);
        }
    }
}

/// Interpolates between accepted nodes. Queries may come in any order but
/// must lie inside the span covered by `nodes`.
pub fn dense_sample(nodes: &[Node], queries: &[f64]) -> Result<Vec<Vec<f64>>> {
    if nodes.is_empty() {
        return match queries.first() {
            Some(&q) => Err(GeoError::OutOfSpan(q)),
            None => Ok(Vec::new()),
        };
    }
    let forward = nodes.len() < 2 || nodes[1].t > nodes[0].t;
    let key = |t: f64| if forward { t } else { -t };
    let (lo, hi) = (key(nodes[0].t), key(nodes[nodes.len() - 1].t));
    let mut out = Vec::with_capacity(queries.len());
    for &q in queries {
        let kq = key(q);
        if !(kq >= lo && kq <= hi) {
            return Err(GeoError::OutOfSpan(q));
        }
        // first node with key >= q
        let j = nodes.partition_point(|n| key(n.t) < kq);
        if key(nodes[j].t) == kq {
            out.push(nodes[j].y.clone());
            continue;
        }
        let (n0, n1) = (&nodes[j - 1], &nodes[j]);
        let dt = n1.t - n0.t;
        let s = (q - n0.t) / dt;
        if n1.interp.len() == n0.y.len() {
            let u = 1.0 - s;
            out.push(
                n1.interp
                    .iter()
                    .map(|r| r[0] + s * (r[1] + u * (r[2] + s * (r[3] + u * r[4]))))
                    .collect(),
            );
            continue;
        }
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        out.push(
            (0..n0.y.len())
                .map(|i| h00 * n0.y[i] + h10 * dt * n0.dy[i] + h01 * n1.y[i] + h11 * dt * n1.dy[i])
                .collect(),
        );
    }
    Ok(out)
}
