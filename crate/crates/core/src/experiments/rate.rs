use serde::{Deserialize, Serialize};

use super::{check_grid, grid_config, ExperimentResult, ModelFamily, Row, SeedInfo};
use crate::corrector::{corrector, edgeworth_expectation, Backend};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::moments::{exact_sum_moment_with, ModelMoments, SampleBuffers};
use crate::multiindex::MultiIndex;
use crate::sampling::{monte_carlo, McConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateMode {
    /// `E[∂_γ f(S_n)]` from exact sum moments; polynomial `f` only.
    Exact,
    MonteCarlo {
        mc: McConfig,
        #[serde(default)]
        common_random_numbers: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub ns: Vec<usize>,
    pub f: TestFunction,
    /// Derivative applied to `f`; none means `f` itself.
    #[serde(default)]
    pub gamma: Option<MultiIndex>,
    /// Expansion orders `N`, one table series `N=k` each.
    pub orders: Vec<usize>,
    pub mode: RateMode,
}

impl RateParams {
    fn validate(&self) -> Result<()> {
        check_grid("ns", &self.ns)?;
        if self.orders.is_empty() {
            return Err(Error::arg("orders", "need at least one expansion order"));
        }
        self.f.validate()?;
        if let Some(g) = &self.gamma {
            if g.dim() != self.f.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.f.dim(),
                    found: g.dim(),
                });
            }
        }
        match &self.mode {
            RateMode::Exact if self.f.as_polynomial().is_none() => {
                Err(Error::arg("mode", "exact mode needs a polynomial test function"))
            }
            RateMode::MonteCarlo { mc, .. } => mc.validate(),
            _ => Ok(()),
        }
    }
}

/// `err(n) = |E[∂_γ f(S_n)] − E[∂_γ f(W) Φ_{n,N}(W)]|` over the `n` grid, with log-log slopes per `N`.
pub fn rate_experiment(family: &dyn ModelFamily, params: &RateParams) -> Result<ExperimentResult> {
    params.validate()?;
    let d = params.f.dim();
    let gamma = params.gamma.clone().unwrap_or_else(|| MultiIndex::zero(d));
    let mut result = ExperimentResult::new("rate", params)?;
    let backend = if params.f.as_polynomial().is_some() {
        Backend::Exact
    } else {
        Backend::quadrature()
    };
    for (g, &n) in params.ns.iter().enumerate() {
        let model = family.at(n)?;
        if model.d() != d {
            return Err(Error::DimensionMismatch {
                expected: model.d(),
                found: d,
            });
        }
        let lhs = match &params.mode {
            RateMode::Exact => {
                let p = params.f.as_polynomial().expect("validated").derivative(&gamma);
                let mm = ModelMoments::new(&model, p.degree());
                (p.terms().map(|(b, c)| c * exact_sum_moment_with(&mm, b)).sum(), None)
            }
            RateMode::MonteCarlo {
                mc,
                common_random_numbers,
            } => {
                let cfg = grid_config(mc, g, *common_random_numbers);
                let est = monte_carlo(
                    &cfg,
                    1,
                    || (SampleBuffers::new(&model), vec![0.0; d]),
                    |(buf, x), rng, out| {
                        model.sample_sum_into(rng, buf, x);
                        out[0] = params.f.derivative_eval(&gamma, x);
                    },
                )?[0];
                (est.mean, Some(est.se))
            }
        };
        for &order in &params.orders {
            let phi = corrector(&model, order)?;
            let reference = edgeworth_expectation(&params.f, &gamma, &phi, backend)?;
            let series = format!("N={order}");
            let row = match lhs.1 {
                None => Row::exact(n as f64, &series, lhs.0, reference),
                Some(se) => Row::stochastic(n as f64, &series, lhs.0, se, reference),
            };
            result.rows.push(row);
        }
    }
    for &order in &params.orders {
        result.push_fit(&format!("N={order}"));
    }
    if let RateMode::MonteCarlo {
        mc,
        common_random_numbers,
    } = &params.mode
    {
        result.seed = Some(SeedInfo::new(mc, *common_random_numbers));
    }
    result.finish()
}
