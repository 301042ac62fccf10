use serde::{Deserialize, Serialize};

use super::{ExperimentResult, Row, RowFlag, SeedInfo};
use crate::error::{Error, Result};
use crate::moments::{ComponentDistribution, ContinuousDistribution};
use crate::sampling::{ks_critical_value_1pct, ks_two_sample, DoeblinCert, NummelinSampler, RngStream};

fn default_resolution() -> usize {
    NummelinParams::DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NummelinParams {
    pub distribution: ComponentDistribution,
    /// Ball centre; defaults to 0.
    #[serde(default)]
    pub y: Option<f64>,
    /// Ball radius parameter; defaults to 1/2.
    #[serde(default)]
    pub r: Option<f64>,
    /// Doeblin constant; defaults to half the density at `y`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
}

impl NummelinParams {
    pub const DEFAULT_RESOLUTION: usize = 1024;
}

/// Splitting draws against direct draws: the coin frequency against `ε m_r` and a
/// two-sample KS statistic against its 1% critical value.
///
/// Draws are sequential (splitting on stream 0, direct on stream 1), so the result
/// does not depend on a worker count.
pub fn nummelin_experiment(params: &NummelinParams) -> Result<ExperimentResult> {
    if params.samples < 2 {
        return Err(Error::arg("samples", "need at least 2 samples"));
    }
    let dist = ContinuousDistribution::try_from(params.distribution.clone())?;
    let y = params.y.unwrap_or(0.0);
    let r = params.r.unwrap_or(0.5);
    let eps = params.eps.unwrap_or_else(|| 0.5 * dist.pdf(y));
    let cert = DoeblinCert::new(&dist, y, r, eps, params.resolution)?;
    let sampler = NummelinSampler::new(dist.clone(), cert)?;
    let m = params.samples;

    let mut rng = RngStream::new(params.seed, 0);
    let mut split = Vec::with_capacity(m);
    let mut chi = 0usize;
    for _ in 0..m {
        let draw = sampler.sample(&mut rng)?;
        chi += usize::from(draw.chi);
        split.push(draw.value);
    }
    let mut rng = RngStream::new(params.seed, 1);
    let direct: Vec<f64> = (0..m).map(|_| dist.sample(&mut rng)).collect();

    let q = cert.mixing_probability();
    let phat = chi as f64 / m as f64;
    let se = (phat * (1.0 - phat) / m as f64).sqrt();
    let ks = ks_two_sample(&split, &direct);
    let crit = ks_critical_value_1pct(m, m);

    let mut result = ExperimentResult::new("nummelin", params)?;
    result.rows.push(Row::stochastic(m as f64, "chi", phat, se, q));
    result.rows.push(Row {
        sweep: m as f64,
        series: "ks".into(),
        estimate: ks,
        se: None,
        reference: crit,
        error: ks - crit,
        ci_upper: None,
        flag: if ks < crit { RowFlag::Ok } else { RowFlag::NoiseFloor },
    });
    result.note("ks_passed", ks < crit);
    result.note("certificate", serde_json::to_value(cert).expect("plain struct"));
    result.seed = Some(SeedInfo {
        seed: params.seed,
        workers: 1,
        samples: m,
        stream_layout: "ChaCha8 stream 0 for splitting draws, stream 1 for direct draws".into(),
    });
    result.finish()
}
