use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_grid, grid_config, ExperimentResult, Row, SeedInfo};
use crate::error::{Error, Result};
use crate::moments::ComponentDistribution;
use crate::multiindex::double_factorial;
use crate::sampling::{monte_carlo, Estimate, McConfig};

/// Highest even moment compared when computing the moment-matching order.
const MATCHING_CAP: usize = 12;

fn default_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationParams {
    /// Law of the iid increments `Y_i`.
    pub distribution: ComponentDistribution,
    /// Window exponent: `ε_n = n^{-(1-ρ)/2}`.
    pub rho: f64,
    pub ns: Vec<usize>,
    /// Grid size of the Brownian reference paths.
    #[serde(default = "default_steps")]
    pub brownian_steps: usize,
    pub mc: McConfig,
    #[serde(default)]
    pub common_random_numbers: bool,
}

impl OccupationParams {
    pub fn epsilon(&self, n: usize) -> f64 {
        (n as f64).powf(-(1.0 - self.rho) / 2.0)
    }
}

/// `ψ_ε(x) = (2ε)^{-1} 1{|x| ≤ ε}`.
pub fn psi_eps(eps: f64, x: f64) -> f64 {
    if x.abs() <= eps {
        0.5 / eps
    } else {
        0.0
    }
}

/// `(1/n) Σ_{k≤n} ψ_ε(n^{-1/2}(Y_1 + … + Y_k))`.
fn walk_occupation(n: usize, eps: f64, mut step: impl FnMut() -> f64) -> f64 {
    let scale = 1.0 / (n as f64).sqrt();
    let mut s = 0.0;
    let mut acc = 0.0;
    for _ in 0..n {
        s += step();
        acc += psi_eps(eps, s * scale);
    }
    acc / n as f64
}

/// `max{2k : E Y^{2k} = E G^{2k}} − 1`; `None` if every even moment up to the cap matches.
pub fn moment_matching_order(dist: &ComponentDistribution) -> Option<usize> {
    (1..=MATCHING_CAP / 2)
        .find(|&k| {
            let g = double_factorial(2 * k as i64 - 1);
            (dist.raw_moment(2 * k) - g).abs() > 1e-12 * g
        })
        .map(|k| (2 * (k - 1)).saturating_sub(1))
}

/// `E ∫_0^1 ψ_ε(W_s) ds` from Brownian paths on `steps` and on `steps · refine` grid points.
///
/// Both Riemann sums are taken along the same fine path, so their difference isolates the
/// grid error from the Monte Carlo noise.
pub fn brownian_occupation(eps: f64, steps: usize, refine: usize, cfg: &McConfig) -> Result<(Estimate, Estimate)> {
    if steps == 0 || refine == 0 {
        return Err(Error::arg("steps", "must be positive"));
    }
    let fine = steps * refine;
    let sd = (1.0 / fine as f64).sqrt();
    let est = monte_carlo(
        cfg,
        2,
        || (),
        |_, rng, out| {
            let mut w = 0.0;
            let (mut coarse_acc, mut fine_acc) = (0.0, 0.0);
            for j in 1..=fine {
                let z: f64 = rng.sample(StandardNormal);
                w += sd * z;
                let v = psi_eps(eps, w);
                fine_acc += v;
                if j % refine == 0 {
                    coarse_acc += v;
                }
            }
            out[0] = coarse_acc / steps as f64;
            out[1] = fine_acc / fine as f64;
        },
    )?;
    Ok((est[0], est[1]))
}

/// `E L_n(Y)`, `E L_n(G)` and the Brownian reference `E ∫_0^1 ψ_{ε_n}(W_s) ds` over the `n` grid.
///
/// Series per `n`: `Y` (reference `E L_n(G)`), `G` (reference Brownian), `brownian`
/// (reference `E l_1 = √(2/π)`) and `Y-G`, the paired difference.
pub fn occupation_time(params: &OccupationParams) -> Result<ExperimentResult> {
    check_grid("ns", &params.ns)?;
    params.mc.validate()?;
    if !(params.rho > 0.0 && params.rho < 1.0) {
        return Err(Error::arg("rho", "must lie in (0, 1)"));
    }
    if params.brownian_steps == 0 {
        return Err(Error::arg("brownian_steps", "must be positive"));
    }
    params.distribution.validate()?;
    let local_time = (2.0 / PI).sqrt();
    let m = params.brownian_steps;
    let bm_sd = (1.0 / m as f64).sqrt();
    let dist = &params.distribution;
    let mut result = ExperimentResult::new("occupation", params)?;
    for (g, &n) in params.ns.iter().enumerate() {
        let eps = params.epsilon(n);
        let cfg = grid_config(&params.mc, g, params.common_random_numbers);
        let est = monte_carlo(
            &cfg,
            4,
            || (),
            |_, rng, out| {
                let ly = walk_occupation(n, eps, || dist.sample(rng));
                let lg = walk_occupation(n, eps, || rng.sample(StandardNormal));
                let mut w = 0.0;
                let mut b = 0.0;
                for _ in 0..m {
                    let z: f64 = rng.sample(StandardNormal);
                    w += bm_sd * z;
                    b += psi_eps(eps, w);
                }
                out[0] = ly;
                out[1] = lg;
                out[2] = b / m as f64;
                out[3] = ly - lg;
            },
        )?;
        let x = n as f64;
        result.rows.push(Row::stochastic(x, "Y", est[0].mean, est[0].se, est[1].mean));
        result.rows.push(Row::stochastic(x, "G", est[1].mean, est[1].se, est[2].mean));
        result.rows.push(Row::stochastic(x, "brownian", est[2].mean, est[2].se, local_time));
        result.rows.push(Row::stochastic(x, "Y-G", est[3].mean, est[3].se, 0.0));
    }
    result.note(
        "epsilons",
        params.ns.iter().map(|&n| params.epsilon(n)).collect::<Vec<_>>(),
    );
    result.note("moment_matching_order", moment_matching_order(dist));
    result.note("local_time_mean", local_time);
    result.seed = Some(SeedInfo::new(&params.mc, params.common_random_numbers));
    result.finish()
}
