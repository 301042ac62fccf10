use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_grid, grid_config, ExperimentResult, ModelFamily, Row, RowFlag, SeedInfo};
use crate::corrector::corrector;
use crate::error::{Error, Result};
use crate::moments::SampleBuffers;
use crate::sampling::{monte_carlo, McConfig};

fn default_scale() -> f64 {
    1.0
}

fn default_min_hits() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub ns: Vec<usize>,
    /// Expansion order `N`.
    pub order: usize,
    /// Point `a` at which the density is probed.
    pub point: Vec<f64>,
    /// Box half-width `δ_n = delta_scale · n^{-(N+1)/2}`.
    #[serde(default = "default_scale")]
    pub delta_scale: f64,
    /// Rows with fewer hits are flagged and left out of the fit.
    #[serde(default = "default_min_hits")]
    pub min_hits: usize,
    pub mc: McConfig,
    #[serde(default)]
    pub common_random_numbers: bool,
}

impl DensityParams {
    pub fn delta(&self, n: usize) -> f64 {
        self.delta_scale * (n as f64).powf(-((self.order + 1) as f64) / 2.0)
    }
}

/// `(2δ_n)^{-d} P(|S_n − a|_∞ ≤ δ_n)` against `γ_d(a) Φ_{n,N}(a)`.
pub fn density_experiment(family: &dyn ModelFamily, params: &DensityParams) -> Result<ExperimentResult> {
    check_grid("ns", &params.ns)?;
    params.mc.validate()?;
    if !(params.delta_scale > 0.0 && params.delta_scale.is_finite()) {
        return Err(Error::arg("delta_scale", "must be positive"));
    }
    let d = params.point.len();
    let a = &params.point;
    let gauss = (-0.5 * a.iter().map(|x| x * x).sum::<f64>()).exp() / (2.0 * PI).powf(d as f64 / 2.0);
    let series = format!("N={}", params.order);
    let mut result = ExperimentResult::new("density", params)?;
    let mut hits_log = Vec::new();
    for (g, &n) in params.ns.iter().enumerate() {
        let model = family.at(n)?;
        if model.d() != d {
            return Err(Error::DimensionMismatch {
                expected: model.d(),
                found: d,
            });
        }
        let phi = corrector(&model, params.order)?;
        let reference = gauss * phi.eval(a);
        let delta = params.delta(n);
        let volume = (2.0 * delta).powi(d as i32);
        let cfg = grid_config(&params.mc, g, params.common_random_numbers);
        let est = monte_carlo(
            &cfg,
            1,
            || (SampleBuffers::new(&model), vec![0.0; d]),
            |(buf, x), rng, out| {
                model.sample_sum_into(rng, buf, x);
                if x.iter().zip(a).all(|(xi, ai)| (xi - ai).abs() <= delta) {
                    out[0] = 1.0 / volume;
                }
            },
        )?[0];
        let hits = (est.mean * volume * cfg.samples as f64).round() as usize;
        hits_log.push(hits);
        let mut row = Row::stochastic(n as f64, &series, est.mean, est.se, reference);
        if hits == 0 {
            row.flag = RowFlag::ZeroHits;
            row.ci_upper = Some(3.0 / (cfg.samples as f64 * volume));
        } else if hits < params.min_hits {
            row.flag = RowFlag::FewHits;
        }
        result.rows.push(row);
    }
    result.push_fit(&series);
    result.note("hits", hits_log);
    result.note(
        "deltas",
        params.ns.iter().map(|&n| params.delta(n)).collect::<Vec<_>>(),
    );
    result.seed = Some(SeedInfo::new(&params.mc, params.common_random_numbers));
    result.finish()
}
