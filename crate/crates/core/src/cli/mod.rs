//! Command-line front end. Every subcommand builds a [`output::Table`] and
//! writes it as CSV or as JSON `{meta, rows}`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! error, 3 runtime termination (singularity or blowup).

pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::chart::{log_to_qr, transform, Chart, ChartPoint};
use crate::connection::{
    christoffel_from_metric_steps, curvature_from_christoffel, lc_christoffel_st,
    lc_christoffel_xy, metric_st, metric_xy, ricci_q, ricci_xy, secondary_factor, SingularContext,
};
use crate::cost::{cost_any, cost_of_s};
use crate::error::GeoError;
use crate::flows::{integrate_flow_partial, FlowSign, FlowTermination};
use crate::geodesics::{
    affine_geodesic_ratio, integrate_geodesic, log_flat_trajectory, qr_equation_lhs, qr_residual,
    GeodesicState, RhsKind, Termination, Trajectory, DENSE_SAMPLES,
};
use crate::hessian::{
    decompose, det_hessian_ratio, hessian_log, hessian_ratio, singular_locus_value, singular_s,
};
use crate::infogeo::{fisher_by_quadrature, fisher_info, mean_function};
use crate::linalg::SymMatrix;
use crate::ode::Stats;
use crate::tolerance;
use crate::verify::{self, VerifyOptions};
use crate::weights::WeightVector;
use output::{sidecar_path, write_atomic, Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("{0}")]
    Runtime(String),
    #[error("verification failed")]
    VerifyFailed,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Geo(e) => match e {
                GeoError::SingularMetric { .. }
                | GeoError::SingularLocus { .. }
                | GeoError::ZeroQ(_)
                | GeoError::BlowupTime { .. }
                | GeoError::InadmissibleInitialState(_) => 3,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartArg {
    Ratio,
    Log,
    Qr,
}

impl From<ChartArg> for Chart {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Ratio => Chart::Ratio,
            ChartArg::Log => Chart::Log,
            ChartArg::Qr => Chart::Qr,
        }
    }
}

impl ChartArg {
    fn name(self) -> &'static str {
        match self {
            ChartArg::Ratio => "ratio",
            ChartArg::Log => "log",
            ChartArg::Qr => "qr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeodesicType {
    /// Levi-Civita geodesic of the ratio-chart Hessian metric (n = 2)
    Lc,
    /// Straight line in log coordinates
    LogFlat,
    /// Straight line in ratio coordinates
    RatioFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Ascent,
    Descent,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (written atomically); stdout when absent
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "RECIPGEO_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Weight vector, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub alpha: Vec<f64>,
    #[arg(long, value_enum, default_value = "ratio")]
    pub chart: ChartArg,
    /// Point coordinates in the chosen chart, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub point: Vec<f64>,
}

#[derive(Debug, Parser)]
#[command(
    name = "recipgeo",
    version,
    about = "Hessian geometry of the reciprocal cost"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cost J with R, S and the geometric mean G
    Eval {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Hessian matrix, rank, determinant and singular diagnostics
    Hessian {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = tolerance::RANK)]
        rank_tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form Christoffel symbols beside the finite-difference oracle (n = 2)
    Christoffel {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Ricci scalar in both charts and from the curvature oracle (n = 2)
    Ricci {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate a geodesic and emit samples with the qr residual
    Geodesic {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long = "type", value_enum, default_value = "lc")]
        kind: GeodesicType,
        /// Initial velocity in the chart of the point
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        velocity: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,10"
        )]
        span: Vec<f64>,
        #[arg(long, default_value_t = tolerance::ODE_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate the gradient flow of the cost in log coordinates
    Flow {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value = "descent")]
        sign: SignArg,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,10"
        )]
        span: Vec<f64>,
        #[arg(long, default_value_t = tolerance::ODE_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample Z, Delta and the Ricci scalar on a log-spaced grid (n = 2)
    Locus {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        alpha: Vec<f64>,
        /// Points per axis
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Grid covers [e^-range, e^range] on both axes
        #[arg(long, default_value_t = 3.0)]
        range: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the seeded invariant suites
    Verify {
        /// Run only the named suite
        #[arg(long)]
        suite: Option<String>,
        /// Test hook: scale one Christoffel symbol by 1 + 1e-3
        #[arg(long, hide = true)]
        perturb_christoffel: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fisher information of the normal-family realization
    Fisher {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 40)]
        nodes: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

struct Emit<'a> {
    out: &'a OutputArgs,
    meta: Map<String, Value>,
}

impl<'a> Emit<'a> {
    fn new(out: &'a OutputArgs, alpha: &[f64], chart: Option<ChartArg>, tol: Option<f64>) -> Self {
        let mut meta = Map::new();
        meta.insert("alpha".into(), json!(alpha));
        meta.insert("chart".into(), json!(chart.map(ChartArg::name)));
        meta.insert("tol".into(), json!(tol));
        meta.insert("seed".into(), json!(out.seed));
        meta.insert("version".into(), json!(VERSION));
        Self { out, meta }
    }

    fn table(&self, table: &Table, stdout: &mut dyn Write) -> Result<(), CliError> {
        let bytes = table.render(self.out.format, &self.meta)?;
        match &self.out.output {
            Some(path) => write_atomic(path, &bytes),
            None => stdout.write_all(&bytes).map_err(CliError::Io),
        }
    }

    /// JSON sidecar next to the output file, or on stderr without one.
    fn sidecar(&self, extra: Value, stderr: &mut dyn Write) -> Result<(), CliError> {
        let mut obj = self.meta.clone();
        if let Value::Object(m) = extra {
            obj.extend(m);
        }
        let mut bytes =
            serde_json::to_vec_pretty(&Value::Object(obj)).map_err(|e| CliError::Io(e.into()))?;
        bytes.push(b'\n');
        match &self.out.output {
            Some(path) => write_atomic(&sidecar_path(path), &bytes),
            None => stderr.write_all(&bytes).map_err(CliError::Io),
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Eval { point, out } => cmd_eval(&point, &out, stdout),
        Command::Hessian {
            point,
            rank_tol,
            out,
        } => cmd_hessian(&point, rank_tol, &out, stdout),
        Command::Christoffel { point, out } => cmd_christoffel(&point, &out, stdout),
        Command::Ricci { point, out } => cmd_ricci(&point, &out, stdout),
        Command::Geodesic {
            point,
            kind,
            velocity,
            span,
            tol,
            out,
        } => cmd_geodesic(&point, kind, &velocity, &span, tol, &out, stdout, stderr),
        Command::Flow {
            point,
            sign,
            span,
            tol,
            out,
        } => cmd_flow(&point, sign, &span, tol, &out, stdout, stderr),
        Command::Locus {
            alpha,
            grid,
            range,
            out,
        } => cmd_locus(&alpha, grid, range, &out, stdout),
        Command::Verify {
            suite,
            perturb_christoffel,
            out,
        } => cmd_verify(suite.as_deref(), perturb_christoffel, &out, stdout),
        Command::Fisher { point, nodes, out } => cmd_fisher(&point, nodes, &out, stdout),
    }
}

fn weights(alpha: &[f64]) -> Result<WeightVector, CliError> {
    Ok(WeightVector::new(alpha.to_vec())?)
}

fn chart_point(p: &PointArgs) -> Result<(WeightVector, ChartPoint), CliError> {
    let w = weights(&p.alpha)?;
    let pt = ChartPoint::new(p.chart.into(), p.point.clone())?;
    if pt.chart() != Chart::Qr {
        w.check_dim(pt.dim())?;
    }
    Ok((w, pt))
}

fn pair(v: &[f64], what: &str) -> Result<[f64; 2], CliError> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage(format!(
            "{what} needs exactly two values, got {}",
            v.len()
        ))),
    }
}

fn span_arg(v: &[f64]) -> Result<(f64, f64), CliError> {
    let [a, b] = pair(v, "--span")?;
    if !(a.is_finite() && b.is_finite()) || a == b {
        return Err(CliError::Usage(format!("invalid span {a},{b}")));
    }
    Ok((a, b))
}

fn matrix_rows(table: &mut Table, name: &str, m: &SymMatrix) {
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            table.push(vec![name.into(), i.into(), j.into(), m.get(i, j).into()]);
        }
    }
}

fn scalar_row(table: &mut Table, name: &str, value: f64) {
    table.push(vec![name.into(), Cell::Empty, Cell::Empty, value.into()]);
}

fn indexed_row(table: &mut Table, name: &str, i: usize, value: f64) {
    table.push(vec![name.into(), i.into(), Cell::Empty, value.into()]);
}

fn cmd_eval(p: &PointArgs, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (w, pt) = chart_point(p)?;
    let s = cost_any(&pt, &w)?;
    let mut t = Table::new(&["J", "R", "S", "G"]);
    t.push(vec![s.j.into(), s.r.into(), s.s.into(), s.g.into()]);
    Emit::new(out, &p.alpha, Some(p.chart), None).table(&t, stdout)
}

fn cmd_hessian(
    p: &PointArgs,
    rank_tol: f64,
    out: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (w, pt) = chart_point(p)?;
    let mut t = Table::new(&["quantity", "i", "j", "value"]);
    match pt.chart() {
        Chart::Log => {
            let h = hessian_log(&pt, &w)?;
            matrix_rows(&mut t, "hessian", &h);
            scalar_row(&mut t, "rank", h.rank(rank_tol) as f64);
            scalar_row(&mut t, "determinant", h.determinant());
            for (k, e) in h.eigenvalues().into_iter().enumerate() {
                indexed_row(&mut t, "eigenvalue", k, e);
            }
        }
        Chart::Ratio => {
            let h = hessian_ratio(&pt, &w)?;
            matrix_rows(&mut t, "hessian", &h);
            scalar_row(&mut t, "rank", h.rank(rank_tol) as f64);
            scalar_row(&mut t, "determinant", det_hessian_ratio(&pt, &w)?);
            for (k, e) in h.eigenvalues().into_iter().enumerate() {
                indexed_row(&mut t, "eigenvalue", k, e);
            }
            let d = decompose(&pt, &w)?;
            scalar_row(&mut t, "beta", d.beta);
            scalar_row(&mut t, "a_matrix_scale", d.a_matrix_scale);
            for (k, v) in d.diag.iter().enumerate() {
                indexed_row(&mut t, "diag", k, *v);
            }
            for (k, v) in d.u.iter().enumerate() {
                indexed_row(&mut t, "u", k, *v);
            }
            match singular_locus_value(&pt, &w) {
                Ok(v) => scalar_row(&mut t, "singular_locus_value", v),
                Err(GeoError::ZeroCostPoint(_)) => {
                    scalar_row(&mut t, "singular_locus_value", f64::NAN)
                }
                Err(e) => return Err(e.into()),
            }
            if let Some(root) = singular_s(&w) {
                scalar_row(&mut t, "singular_s", root.s_star);
            }
        }
        Chart::Qr => {
            return Err(CliError::Usage(
                "hessian supports the ratio and log charts".into(),
            ))
        }
    }
    Emit::new(out, &p.alpha, Some(p.chart), None).table(&t, stdout)
}

fn require_pair(alpha: &[f64]) -> Result<(f64, f64), CliError> {
    let [a, b] = pair(alpha, "--alpha")?;
    weights(alpha)?;
    Ok((a, b))
}

fn cmd_christoffel(
    p: &PointArgs,
    out: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (a, b) = require_pair(&p.alpha)?;
    let c = pair(&p.point, "--point")?;
    let (closed, oracle) = match p.chart {
        ChartArg::Ratio => {
            ChartPoint::ratio(c.to_vec())?;
            let h = [verify::XY_ORACLE_STEP * c[0], verify::XY_ORACLE_STEP * c[1]];
            (
                lc_christoffel_xy(a, b, c[0], c[1])?,
                christoffel_from_metric_steps(metric_xy(a, b), c, h)?,
            )
        }
        ChartArg::Log => (
            lc_christoffel_st(a, b, c[0], c[1])?,
            christoffel_from_metric_steps(metric_st(a, b), c, [verify::ST_ORACLE_STEP; 2])?,
        ),
        ChartArg::Qr => {
            return Err(CliError::Usage(
                "christoffel supports the ratio and log charts".into(),
            ))
        }
    };
    let mut t = Table::new(&["k", "i", "j", "closed", "oracle", "abs_diff"]);
    for k in 0..2 {
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let (g, o) = (closed.get(k, i, j), oracle.get(k, i, j));
            t.push(vec![
                k.into(),
                i.into(),
                j.into(),
                g.into(),
                o.into(),
                (g - o).abs().into(),
            ]);
        }
    }
    Emit::new(out, &p.alpha, Some(p.chart), None).table(&t, stdout)
}

fn cmd_ricci(p: &PointArgs, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (a, b) = require_pair(&p.alpha)?;
    let w = WeightVector::pair(a, b)?;
    let pt = ChartPoint::new(p.chart.into(), pair(&p.point, "--point")?.to_vec())?;
    let x = transform(&pt, Chart::Ratio, &w)?;
    let q = transform(&pt, Chart::Qr, &w)?.coords()[0];
    let xy = [x.coords()[0], x.coords()[1]];
    let z = SingularContext::new(a, b, xy[0], xy[1])?.z;
    let gamma = |p: [f64; 2]| lc_christoffel_xy(a, b, p[0], p[1]);
    let oracle = curvature_from_christoffel(gamma, xy, 1e-5 * xy[0].min(xy[1]), metric_xy(a, b));
    let mut t = Table::new(&["Z", "q", "ricci_xy", "ricci_q", "ricci_oracle"]);
    t.push(vec![
        z.into(),
        q.into(),
        ricci_xy(a, b, z)?.into(),
        ricci_q(a, b, q)?.into(),
        oracle.unwrap_or(f64::NAN).into(),
    ]);
    Emit::new(out, &p.alpha, Some(p.chart), None).table(&t, stdout)
}

const GEODESIC_COLUMNS: [&str; 10] = [
    "lambda", "x", "y", "xdot", "ydot", "q", "r", "J", "Delta", "residual",
];

fn geodesic_table(traj: &Trajectory, a: f64, b: f64) -> Result<Table, CliError> {
    let xy: Vec<GeodesicState> = traj
        .samples
        .iter()
        .map(|s| match s.chart {
            Chart::Qr => {
                let mut x = s.to_xy(a, b)?;
                // keep the qr acceleration out of the xy state
                x.acceleration = None;
                Ok(x)
            }
            _ => Ok(*s),
        })
        .collect::<Result<_, GeoError>>()?;
    let residual: Vec<f64> = match traj.samples.first().map(|s| s.chart) {
        Some(Chart::Qr) => traj
            .samples
            .iter()
            .map(|s| match s.acceleration {
                Some(acc) => {
                    let l = qr_equation_lhs(a, b, s.position[0], s.velocity, acc);
                    l[0].abs() + l[1].abs()
                }
                None => f64::NAN,
            })
            .collect(),
        _ => qr_residual(traj, a, b)?,
    };
    let mut t = Table::new(&GEODESIC_COLUMNS);
    for (s, res) in xy.iter().zip(residual) {
        let [x, y] = s.position;
        let (q, r) = log_to_qr(a, b, x.ln(), y.ln());
        let ctx = SingularContext::new(a, b, x, y)?;
        t.push(vec![
            s.lambda.into(),
            x.into(),
            y.into(),
            s.velocity[0].into(),
            s.velocity[1].into(),
            q.into(),
            r.into(),
            cost_of_s(q).into(),
            ctx.delta.into(),
            res.into(),
        ]);
    }
    Ok(t)
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::SpanComplete => "span_complete",
        Termination::SingularityReached => "singularity_reached",
        Termination::DomainBoundary => "domain_boundary",
        Termination::StepUnderflow => "step_underflow",
        Termination::MaxSteps => "max_steps",
    }
}

fn stats_json(s: &Stats) -> Value {
    json!({ "accepted": s.accepted, "rejected": s.rejected, "rhs_failures": s.rhs_failures })
}

#[allow(clippy::too_many_arguments)]
fn cmd_geodesic(
    p: &PointArgs,
    kind: GeodesicType,
    velocity: &[f64],
    span: &[f64],
    tol: f64,
    out: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let span = span_arg(span)?;
    let emit = Emit::new(out, &p.alpha, Some(p.chart), Some(tol));
    match kind {
        GeodesicType::Lc => {
            let (a, b) = require_pair(&p.alpha)?;
            let pos = pair(&p.point, "--point")?;
            let vel = pair(velocity, "--velocity")?;
            let (rhs, state) = match p.chart {
                ChartArg::Ratio => {
                    ChartPoint::ratio(pos.to_vec())?;
                    (RhsKind::Xy, GeodesicState::xy(span.0, pos, vel))
                }
                ChartArg::Qr => (RhsKind::Qr, GeodesicState::qr(span.0, pos, vel)),
                ChartArg::Log => {
                    return Err(CliError::Usage(
                        "Levi-Civita geodesics take ratio or qr initial data".into(),
                    ))
                }
            };
            let traj = integrate_geodesic(rhs, a, b, &state, span, tol)?;
            emit.table(&geodesic_table(&traj, a, b)?, stdout)?;
            let reached = traj.last().lambda;
            emit.sidecar(
                json!({
                    "termination": termination_name(traj.termination),
                    "lambda_end": reached,
                    "samples": traj.samples.len(),
                    "stats": stats_json(&traj.stats),
                }),
                stderr,
            )?;
            let covered = (reached - span.0).abs() / (span.1 - span.0).abs();
            if traj.termination == Termination::SingularityReached && covered < 0.01 {
                return Err(CliError::Runtime(format!(
                    "singular set reached at lambda = {reached} before 1% of the span"
                )));
            }
            Ok(())
        }
        GeodesicType::LogFlat | GeodesicType::RatioFlat => {
            let (w, pt) = chart_point(p)?;
            let x0 = pt.to_ratio()?.into_coords();
            if velocity.len() != x0.len() {
                return Err(GeoError::DimensionMismatch {
                    expected: x0.len(),
                    found: velocity.len(),
                }
                .into());
            }
            let (table, termination, reached) = affine_samples(kind, &w, &x0, velocity, span)?;
            emit.table(&table, stdout)?;
            emit.sidecar(
                json!({
                    "termination": termination_name(termination),
                    "lambda_end": reached,
                    "samples": table.rows.len(),
                }),
                stderr,
            )
        }
    }
}

/// Samples of an affine straight line. The ratio-flat line is cut where it
/// leaves the positive orthant.
fn affine_samples(
    kind: GeodesicType,
    w: &WeightVector,
    x0: &[f64],
    v: &[f64],
    span: (f64, f64),
) -> Result<(Table, Termination, f64), CliError> {
    let n = x0.len();
    let (mut lo, mut hi) = (span.0.min(span.1), span.0.max(span.1));
    let mut termination = Termination::SpanComplete;
    let path = affine_geodesic_ratio(x0, v)?;
    if kind == GeodesicType::RatioFlat {
        let margin = 1e-9 * (hi - lo);
        if path.interval.0 > lo {
            lo = path.interval.0 + margin;
            termination = Termination::DomainBoundary;
        }
        if path.interval.1 < hi {
            hi = path.interval.1 - margin;
            termination = Termination::DomainBoundary;
        }
        if !(lo < hi) {
            return Err(CliError::Runtime(
                "span lies outside the positive orthant".into(),
            ));
        }
    }
    let forward = span.1 > span.0;
    let (start, end) = if forward { (lo, hi) } else { (hi, lo) };
    let lambdas: Vec<f64> = (0..DENSE_SAMPLES)
        .map(|i| start + (end - start) * i as f64 / (DENSE_SAMPLES - 1) as f64)
        .collect();
    let log_v: Vec<f64> = v.iter().zip(x0).map(|(vi, xi)| vi / xi).collect();
    let states: Vec<(Vec<f64>, Vec<f64>)> = lambdas
        .iter()
        .map(|&l| match kind {
            GeodesicType::RatioFlat => Ok((path.at(l)?, v.to_vec())),
            _ => {
                let x: Vec<f64> = x0
                    .iter()
                    .zip(&log_v)
                    .map(|(x, s)| x * (l * s).exp())
                    .collect();
                let xd = x.iter().zip(&log_v).map(|(x, s)| x * s).collect();
                Ok((x, xd))
            }
        })
        .collect::<Result<_, GeoError>>()?;

    if n == 2 {
        let (a, b) = (w.a(), w.b());
        let traj = match kind {
            GeodesicType::LogFlat => log_flat_trajectory(
                [x0[0], x0[1]],
                [log_v[0], log_v[1]],
                (start, end),
                DENSE_SAMPLES,
            )?,
            _ => Trajectory {
                samples: lambdas
                    .iter()
                    .zip(&states)
                    .map(|(&l, (x, xd))| GeodesicState {
                        acceleration: Some([0.0, 0.0]),
                        ..GeodesicState::xy(l, [x[0], x[1]], [xd[0], xd[1]])
                    })
                    .collect(),
                termination,
                stats: Stats::default(),
            },
        };
        return Ok((geodesic_table(&traj, a, b)?, termination, end));
    }

    let mut headers = vec!["lambda".to_string()];
    headers.extend((1..=n).map(|i| format!("x{i}")));
    headers.extend((1..=n).map(|i| format!("xdot{i}")));
    headers.push("J".into());
    let mut t = Table::new(&headers);
    for (&l, (x, xd)) in lambdas.iter().zip(&states) {
        let mut row: Vec<Cell> = vec![l.into()];
        row.extend(x.iter().map(|&v| Cell::Num(v)));
        row.extend(xd.iter().map(|&v| Cell::Num(v)));
        row.push(cost_any(&ChartPoint::ratio(x.clone())?, w)?.j.into());
        t.push(row);
    }
    Ok((t, termination, end))
}

fn cmd_flow(
    p: &PointArgs,
    sign: SignArg,
    span: &[f64],
    tol: f64,
    out: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let span = span_arg(span)?;
    let (w, pt) = chart_point(p)?;
    let t0 = transform(&pt, Chart::Log, &w)?;
    let sign = match sign {
        SignArg::Ascent => FlowSign::Ascent,
        SignArg::Descent => FlowSign::Descent,
    };
    let traj = integrate_flow_partial(&t0, &w, sign, span, tol)?;
    let n = w.len();
    let mut headers: Vec<String> = ["tau", "S", "J", "S_closed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend((1..n).map(|k| format!("r{k}")));
    headers.extend((1..=n).map(|i| format!("t{i}")));
    let mut t = Table::new(&headers);
    for s in &traj.samples {
        let mut row: Vec<Cell> = vec![s.tau.into(), s.s.into(), s.j.into(), s.s_exact.into()];
        row.extend(s.transverse.iter().map(|&v| Cell::Num(v)));
        row.extend(s.t.iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    let emit = Emit::new(out, &p.alpha, Some(p.chart), Some(tol));
    emit.table(&t, stdout)?;
    let (name, tau_star) = match traj.termination {
        FlowTermination::SpanComplete => ("span_complete", None),
        FlowTermination::ConvergedToMinimum => ("converged_to_minimum", None),
        FlowTermination::Blowup { tau_star, .. } => ("blowup", Some(tau_star)),
        FlowTermination::StepUnderflow => ("step_underflow", None),
        FlowTermination::MaxSteps => ("max_steps", None),
    };
    emit.sidecar(
        json!({
            "termination": name,
            "tau_end": traj.samples.last().map(|s| s.tau),
            "tau_star": tau_star,
            "stats": stats_json(&traj.stats),
        }),
        stderr,
    )?;
    if let FlowTermination::Blowup { tau_star, tau_halt } = traj.termination {
        return Err(GeoError::BlowupTime { tau_star, tau_halt }.into());
    }
    Ok(())
}

/// Flag bits of a locus grid cell.
pub const FLAG_ZERO_COST: i64 = 1;
pub const FLAG_SINGULAR: i64 = 2;
pub const FLAG_RICCI_ZERO: i64 = 4;

fn cmd_locus(
    alpha: &[f64],
    grid: usize,
    range: f64,
    out: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (a, b) = require_pair(alpha)?;
    if grid < 2 || !(range.is_finite() && range > 0.0) {
        return Err(CliError::Usage(format!(
            "invalid grid {grid} over range {range}"
        )));
    }
    let t = locus_table(a, b, grid, range);
    Emit::new(out, alpha, Some(ChartArg::Ratio), None).table(&t, stdout)
}

struct LocusCell {
    x: f64,
    y: f64,
    z: f64,
    delta: f64,
    ricci: f64,
    // signs of Z - 1, the secondary factor and the Ricci numerator factor
    f: [f64; 3],
}

/// Grid of `x, y, Z, Delta, Ricci, flags`. A flag bit is set on a cell when
/// the corresponding curve passes through it: the factor vanishes there or
/// changes sign towards the next cell in `x` or `y`. With `a + b = 0` the
/// Ricci scalar vanishes identically and is reported as zero everywhere.
pub fn locus_table(a: f64, b: f64, grid: usize, range: f64) -> Table {
    let sigma = a + b;
    let axis: Vec<f64> = (0..grid)
        .map(|i| (-range + 2.0 * range * i as f64 / (grid - 1) as f64).exp())
        .collect();
    let cell = |i: usize, j: usize| {
        let (x, y) = (axis[i], axis[j]);
        let z = x.powf(2.0 * a) * y.powf(2.0 * b);
        let sec = secondary_factor(sigma, z);
        let ricci = if sigma == 0.0 {
            0.0
        } else {
            ricci_xy(a, b, z).unwrap_or(f64::NAN)
        };
        LocusCell {
            x,
            y,
            z,
            delta: (z - 1.0) * sec,
            ricci,
            f: [z - 1.0, sec, (sigma - 2.0) * z + sigma + 2.0],
        }
    };
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(grid);
    let rows_per = grid.div_ceil(workers);
    // cells[j][i], row j = fixed y
    let cells: Vec<Vec<LocusCell>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                let cell = &cell;
                scope.spawn(move || {
                    let rows = (k * rows_per)..((k + 1) * rows_per).min(grid);
                    rows.map(|j| (0..grid).map(|i| cell(i, j)).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("locus worker panicked"))
            .collect()
    });
    let crosses = |f: f64, g: f64| f == 0.0 || f.signum() != g.signum();
    let mut t = Table::new(&["x", "y", "Z", "Delta", "Ricci", "flags"]);
    for j in 0..grid {
        for i in 0..grid {
            let c = &cells[j][i];
            let mut flags = 0;
            for (bit, k) in [
                (FLAG_ZERO_COST, 0),
                (FLAG_SINGULAR, 1),
                (FLAG_RICCI_ZERO, 2),
            ] {
                let here = c.f[k];
                let mut hit = here == 0.0;
                if i + 1 < grid {
                    hit |= crosses(here, cells[j][i + 1].f[k]);
                }
                if j + 1 < grid {
                    hit |= crosses(here, cells[j + 1][i].f[k]);
                }
                if hit {
                    flags |= bit;
                }
            }
            if sigma == 0.0 {
                // the secondary factor is 1 - Z: the same curve as zero cost
                flags = (flags & !FLAG_SINGULAR) | FLAG_RICCI_ZERO;
            }
            t.push(vec![
                c.x.into(),
                c.y.into(),
                c.z.into(),
                c.delta.into(),
                c.ricci.into(),
                Cell::Int(flags),
            ]);
        }
    }
    t
}

fn cmd_verify(
    suite: Option<&str>,
    perturb: bool,
    out: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let opts = VerifyOptions {
        seed: out.seed,
        perturb_christoffel: perturb,
    };
    let checks = match suite {
        Some(name) if !verify::SUITES.contains(&name) => {
            return Err(CliError::Usage(format!(
                "unknown suite {name}; expected one of {}",
                verify::SUITES.join(", ")
            )))
        }
        Some(name) => verify::run_suite(name, &opts)?,
        None => verify::run_all(&opts)?,
    };
    let mut t = Table::new(&[
        "suite",
        "check",
        "samples",
        "max_error",
        "tolerance",
        "status",
    ]);
    for c in &checks {
        t.push(vec![
            c.suite.into(),
            c.check.into(),
            c.samples.into(),
            c.max_error.into(),
            c.tolerance.into(),
            if c.passed { "PASS" } else { "FAIL" }.into(),
        ]);
    }
    Emit::new(out, &[], None, None).table(&t, stdout)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn cmd_fisher(
    p: &PointArgs,
    nodes: usize,
    out: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (w, pt) = chart_point(p)?;
    let t0 = transform(&pt, Chart::Log, &w)?;
    let s = w.dot(t0.coords());
    let mut t = Table::new(&["quantity", "i", "j", "value"]);
    matrix_rows(&mut t, "fisher", &fisher_info(&t0, &w)?);
    matrix_rows(&mut t, "hessian_log", &hessian_log(&t0, &w)?);
    let m = mean_function(s)?;
    scalar_row(&mut t, "S", s);
    scalar_row(&mut t, "m", m.m);
    scalar_row(&mut t, "m_prime", m.m_prime);
    if nodes < 2 {
        return Err(CliError::Usage("--nodes must be at least 2".into()));
    }
    // the model is a curve through S; the matrix is this times alpha alpha^T
    scalar_row(
        &mut t,
        "fisher_1d_quadrature",
        fisher_by_quadrature(1.0, s, nodes)?,
    );
    Emit::new(out, &p.alpha, Some(p.chart), None).table(&t, stdout)
}
