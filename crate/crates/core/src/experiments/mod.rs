//! Experiment drivers and their tabular results.
//!
//! Every driver returns an [`ExperimentResult`]: a fixed-column table of rows
//! (`sweep, series, estimate, se, reference, error, ci_upper, flag`) plus fitted
//! log-log slopes, a free-form summary and the seed layout used.

mod density;
mod nummelin;
mod occupation;
mod rate;
mod roots;
mod small_ball;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::moments::ModelSpec;
use crate::sampling::McConfig;

pub use density::{density_experiment, DensityParams};
pub use nummelin::{nummelin_experiment, NummelinParams};
pub use occupation::{brownian_occupation, moment_matching_order, occupation_time, psi_eps, OccupationParams};
pub use roots::{count_roots, kac_rice_roots, RootsParams, TrigPolynomial};
pub use rate::{rate_experiment, RateMode, RateParams};
pub use small_ball::{gaussian_ball_probability, small_ball, small_ball_with, trig_matrix, Matrix2, SmallBallParams};

/// Version tag of the row layout, written into every CSV and JSON file.
pub const SCHEMA: &str = "edgeworth-rows/v1";

/// Rows whose error is below this (relative to `max(1, |reference|)`) are exact matches.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Monte Carlo rows whose error is below this many standard errors are not resolved.
pub const NOISE_FLOOR_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    Ok,
    /// Error within `3·se`: indistinguishable from Monte Carlo noise.
    NoiseFloor,
    /// Error zero to rounding.
    Degenerate,
    /// Fewer than the required number of hits in a box/ball.
    FewHits,
    /// No hits at all; `ci_upper` carries a one-sided bound.
    ZeroHits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Sweep variable: `n`, `η`, …
    pub sweep: f64,
    pub series: String,
    pub estimate: f64,
    /// Standard error; absent for exact rows.
    pub se: Option<f64>,
    pub reference: f64,
    pub error: f64,
    /// One-sided 95% upper confidence bound, for rows without hits.
    pub ci_upper: Option<f64>,
    pub flag: RowFlag,
}

impl Row {
    pub fn exact(sweep: f64, series: &str, estimate: f64, reference: f64) -> Self {
        let error = (estimate - reference).abs();
        let flag = if error <= DEGENERATE_TOL * reference.abs().max(1.0) {
            RowFlag::Degenerate
        } else {
            RowFlag::Ok
        };
        Row {
            sweep,
            series: series.to_string(),
            estimate,
            se: None,
            reference,
            error,
            ci_upper: None,
            flag,
        }
    }

    pub fn stochastic(sweep: f64, series: &str, estimate: f64, se: f64, reference: f64) -> Self {
        let error = (estimate - reference).abs();
        let flag = if error < NOISE_FLOOR_SE * se {
            RowFlag::NoiseFloor
        } else {
            RowFlag::Ok
        };
        Row {
            sweep,
            series: series.to_string(),
            estimate,
            se: Some(se),
            reference,
            error,
            ci_upper: None,
            flag,
        }
    }

    /// Usable in a rate fit.
    pub fn resolved(&self) -> bool {
        self.flag == RowFlag::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub series: String,
    /// Least-squares slope of `log error` against `log sweep`; absent with fewer than two usable rows.
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub points: usize,
    /// Rows left out of the fit (flagged degenerate, noisy or starved).
    pub excluded: usize,
    /// Every row of the series is an exact match.
    pub all_degenerate: bool,
}

impl SlopeFit {
    pub fn from_rows<'a>(series: &str, rows: impl IntoIterator<Item = &'a Row>) -> Self {
        let rows: Vec<&Row> = rows.into_iter().filter(|r| r.series == series).collect();
        let used: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.resolved() && r.error > 0.0)
            .map(|r| (r.sweep.ln(), r.error.ln()))
            .collect();
        let fit = least_squares_slope(&used);
        SlopeFit {
            series: series.to_string(),
            fitted_slope: fit.map(|f| f.0),
            slope_stderr: fit.and_then(|f| f.1),
            points: used.len(),
            excluded: rows.len() - used.len(),
            all_degenerate: !rows.is_empty() && rows.iter().all(|r| r.flag == RowFlag::Degenerate),
        }
    }
}

/// Ordinary least-squares slope of `y` on `x` and its standard error (needs three points).
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<(f64, Option<f64>)> {
    let m = points.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let stderr = (m > 2).then(|| {
        let ssr: f64 = points
            .iter()
            .map(|p| (p.1 - ym - slope * (p.0 - xm)).powi(2))
            .sum();
        (ssr / (mf - 2.0) / sxx).sqrt()
    });
    Some((slope, stderr))
}

/// Where the random numbers of a stochastic experiment came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub seed: u64,
    pub workers: usize,
    pub samples: usize,
    pub stream_layout: String,
}

impl SeedInfo {
    pub fn new(cfg: &McConfig, common_random_numbers: bool) -> Self {
        let stream_layout = if common_random_numbers {
            "ChaCha8 stream i for sample i at every grid point (common random numbers)"
        } else {
            "ChaCha8 stream (g << 40) + i for sample i at grid point g = 1, 2, …"
        };
        SeedInfo {
            seed: cfg.seed,
            workers: cfg.workers,
            samples: cfg.samples,
            stream_layout: stream_layout.to_string(),
        }
    }
}

/// Monte Carlo configuration for grid point `g` (0-based).
pub(crate) fn grid_config(cfg: &McConfig, g: usize, common_random_numbers: bool) -> McConfig {
    if common_random_numbers {
        cfg.tagged(0)
    } else {
        cfg.tagged(g as u64 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub schema: String,
    /// Echo of the parameters the experiment ran with.
    pub params: Value,
    pub rows: Vec<Row>,
    pub fits: Vec<SlopeFit>,
    pub summary: BTreeMap<String, Value>,
    pub seed: Option<SeedInfo>,
    /// Provenance added by callers (config hash, …).
    pub metadata: BTreeMap<String, Value>,
}

impl ExperimentResult {
    pub fn new(name: &str, params: &impl Serialize) -> Result<Self> {
        Ok(ExperimentResult {
            name: name.to_string(),
            schema: SCHEMA.to_string(),
            params: serde_json::to_value(params).map_err(|e| Error::arg("params", e.to_string()))?,
            rows: Vec::new(),
            fits: Vec::new(),
            summary: BTreeMap::new(),
            seed: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn rows_of<'a>(&'a self, series: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.series == series)
    }

    pub fn fit(&self, series: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.series == series)
    }

    pub(crate) fn push_fit(&mut self, series: &str) {
        let fit = SlopeFit::from_rows(series, &self.rows);
        self.fits.push(fit);
    }

    pub(crate) fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub(crate) fn finish(self) -> Result<Self> {
        if self.rows.is_empty() {
            return Err(Error::arg("grid", "experiment produced no rows"));
        }
        Ok(self)
    }

    /// One-line provenance header for the CSV file.
    fn csv_preamble(&self) -> String {
        let seed = self
            .seed
            .as_ref()
            .map(|s| format!(" seed={} workers={}", s.seed, s.workers))
            .unwrap_or_default();
        let hash = self
            .metadata
            .get("config_sha256")
            .and_then(Value::as_str)
            .map(|h| format!(" config_sha256={h}"))
            .unwrap_or_default();
        format!("# schema={} experiment={}{seed}{hash}\n", self.schema, self.name)
    }

    /// Rows as CSV, preceded by a `#` provenance line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::arg("output", e.to_string());
        w.write_all(self.csv_preamble().as_bytes()).map_err(io)?;
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)
                .map_err(|e| Error::arg("output", e.to_string()))?;
        }
        out.flush().map_err(io)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::arg("output", e.to_string()))
    }
}

/// The model at each `n` of a sweep.
pub trait ModelFamily: Sync {
    fn at(&self, n: usize) -> Result<ModelSpec>;
}

/// An iid model: the same summand law for every `n`.
impl ModelFamily for ModelSpec {
    fn at(&self, n: usize) -> Result<ModelSpec> {
        self.with_n(n)
    }
}

impl<F: Fn(usize) -> Result<ModelSpec> + Sync> ModelFamily for F {
    fn at(&self, n: usize) -> Result<ModelSpec> {
        self(n)
    }
}

pub(crate) fn check_grid(name: &str, grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::arg(name, "grid must not be empty"));
    }
    if grid.contains(&0) {
        return Err(Error::arg(name, "grid values must be positive"));
    }
    Ok(())
}
