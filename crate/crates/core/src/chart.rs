//! Coordinate charts on the positive orthant.
//!
//! * `Ratio`: the original variables `x` in `(0, inf)^n`.
//! * `Log`: `t_i = ln x_i`, the affine chart in which the cost depends on a
//!   single linear combination.
//! * `Qr`: for `n = 2` only, the rotated log chart `q = a s + b t`,
//!   `r = -b s + a t`.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Ratio,
    Log,
    Qr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    chart: Chart,
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: Chart, coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::NonFinite("chart coordinates"));
        }
        match chart {
            Chart::Ratio => {
                if let Some((index, &value)) = coords.iter().enumerate().find(|(_, &c)| c <= 0.0) {
                    return Err(GeoError::NonPositiveCoordinate { index, value });
                }
            }
            Chart::Qr if coords.len() != 2 => {
                return Err(GeoError::DimensionMismatch {
                    expected: 2,
                    found: coords.len(),
                })
            }
            _ => {}
        }
        Ok(Self { chart, coords })
    }

    pub fn ratio(coords: Vec<f64>) -> Result<Self> {
        Self::new(Chart::Ratio, coords)
    }

    pub fn log(coords: Vec<f64>) -> Result<Self> {
        Self::new(Chart::Log, coords)
    }

    pub fn qr(q: f64, r: f64) -> Result<Self> {
        Self::new(Chart::Qr, vec![q, r])
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn expect_chart(&self, expected: Chart) -> Result<()> {
        if self.chart != expected {
            return Err(GeoError::ChartMismatch {
                expected,
                found: self.chart,
            });
        }
        Ok(())
    }

    /// Log coordinates of a `Ratio` or `Log` point. `Qr` points need the
    /// weights, see [`transform`].
    pub fn to_log(&self) -> Result<ChartPoint> {
        match self.chart {
            Chart::Log => Ok(self.clone()),
            Chart::Ratio => Ok(ChartPoint {
                chart: Chart::Log,
                coords: self.coords.iter().map(|x| x.ln()).collect(),
            }),
            Chart::Qr => Err(GeoError::UnsupportedChartPair {
                from: Chart::Qr,
                to: Chart::Log,
            }),
        }
    }

    pub fn to_ratio(&self) -> Result<ChartPoint> {
        match self.chart {
            Chart::Ratio => Ok(self.clone()),
            Chart::Log => {
                let mut coords = Vec::with_capacity(self.coords.len());
                for (index, t) in self.coords.iter().enumerate() {
                    let x = t.exp();
                    if x == 0.0 {
                        return Err(GeoError::NonPositiveCoordinate { index, value: x });
                    }
                    if !x.is_finite() {
                        return Err(GeoError::Overflow("exp of log coordinate"));
                    }
                    coords.push(x);
                }
                Ok(ChartPoint {
                    chart: Chart::Ratio,
                    coords,
                })
            }
            Chart::Qr => Err(GeoError::UnsupportedChartPair {
                from: Chart::Qr,
                to: Chart::Ratio,
            }),
        }
    }
}

/// `(s, t) -> (q, r)`.
pub fn log_to_qr(a: f64, b: f64, s: f64, t: f64) -> (f64, f64) {
    (a * s + b * t, -b * s + a * t)
}

/// `(q, r) -> (s, t)`.
pub fn qr_to_log(a: f64, b: f64, q: f64, r: f64) -> (f64, f64) {
    let n2 = a * a + b * b;
    ((a * q - b * r) / n2, (b * q + a * r) / n2)
}

/// Map `p` into the `target` chart.
pub fn transform(p: &ChartPoint, target: Chart, w: &WeightVector) -> Result<ChartPoint> {
    if p.chart == target {
        return Ok(p.clone());
    }
    let involves_qr = p.chart == Chart::Qr || target == Chart::Qr;
    if involves_qr && (p.dim() != 2 || w.len() != 2) {
        return Err(GeoError::UnsupportedChartPair {
            from: p.chart,
            to: target,
        });
    }
    if p.chart != Chart::Qr {
        w.check_dim(p.dim())?;
    }
    match (p.chart, target) {
        (Chart::Ratio, Chart::Log) => p.to_log(),
        (Chart::Log, Chart::Ratio) => p.to_ratio(),
        (_, Chart::Qr) => {
            let t = p.to_log()?;
            let (q, r) = log_to_qr(w.a(), w.b(), t.coords[0], t.coords[1]);
            ChartPoint::qr(q, r)
        }
        (Chart::Qr, _) => {
            let (s, t) = qr_to_log(w.a(), w.b(), p.coords[0], p.coords[1]);
            let log = ChartPoint::log(vec![s, t])?;
            if target == Chart::Ratio {
                log.to_ratio()
            } else {
                Ok(log)
            }
        }
        (from, to) => Err(GeoError::UnsupportedChartPair { from, to }),
    }
}
