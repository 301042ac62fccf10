use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_grid, grid_config, ExperimentResult, Row, SeedInfo};
use crate::error::{Error, Result};
use crate::moments::ComponentDistribution;
use crate::sampling::{monte_carlo, McConfig};

/// Grid points per unit of degree on `(0, π)`.
const GRID_PER_DEGREE: usize = 8;
const ROOT_TOL: f64 = 1e-12;

/// `Q(t) = Σ_{k=1}^n (a_k cos kt + b_k sin kt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TrigPolynomial {
    pub fn degree(&self) -> usize {
        self.a.len()
    }

    /// `(Q(t), Q'(t))`, with `cos kt, sin kt` by rotation.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (s1, c1) = t.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let (mut q, mut dq) = (0.0, 0.0);
        for (k, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            q += a * c + b * s;
            dq += (k + 1) as f64 * (b * c - a * s);
        }
        (q, dq)
    }

    fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    fn slope(&self, t: f64) -> f64 {
        self.eval(t).1
    }
}

/// Zero of `f` in `[lo, hi]` given `f(lo) f(hi) < 0`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `Q` in `(0, π)`: sign changes on a grid of `8n` cells, refined by bisection.
///
/// A cell without a sign change but with a sign change of `Q'` is split at the critical
/// point, which catches pairs of close roots.
pub fn count_roots(q: &TrigPolynomial) -> Vec<f64> {
    let cells = GRID_PER_DEGREE * q.degree().max(1);
    let h = PI / cells as f64;
    let grid: Vec<(f64, f64, f64)> = (0..=cells)
        .map(|j| {
            let t = j as f64 * h;
            let (v, dv) = q.eval(t);
            (t, v, dv)
        })
        .collect();
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let ((t0, v0, d0), (t1, v1, d1)) = (w[0], w[1]);
        if v0 == 0.0 && t0 > 0.0 {
            roots.push(t0);
            continue;
        }
        if v0 * v1 < 0.0 {
            roots.push(bisect(|t| q.value(t), t0, t1));
        } else if d0 * d1 < 0.0 {
            let c = bisect(|t| q.slope(t), t0, t1);
            let vc = q.value(c);
            if vc * v0 < 0.0 {
                roots.push(bisect(|t| q.value(t), t0, c));
                roots.push(bisect(|t| q.value(t), c, t1));
            }
        }
    }
    roots
}

fn draw(n: usize, first: &ComponentDistribution, second: &ComponentDistribution, rng: &mut impl Rng) -> TrigPolynomial {
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(first.sample(rng));
        b.push(second.sample(rng));
    }
    TrigPolynomial { a, b }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsParams {
    /// Law of the cosine coefficients `Y¹_k`.
    pub first: ComponentDistribution,
    /// Law of the sine coefficients `Y²_k`.
    pub second: ComponentDistribution,
    pub ns: Vec<usize>,
    pub mc: McConfig,
    #[serde(default)]
    pub common_random_numbers: bool,
}

/// `E N_n / n` for coefficients `Y` and for Gaussian coefficients, against `1/√3`.
///
/// Series per `n`: `Y`, `G` (both with reference `1/√3`) and the paired gap `Y-G`.
pub fn kac_rice_roots(params: &RootsParams) -> Result<ExperimentResult> {
    check_grid("ns", &params.ns)?;
    params.mc.validate()?;
    params.first.validate()?;
    params.second.validate()?;
    let limit = 1.0 / 3f64.sqrt();
    let gauss = ComponentDistribution::StandardNormal;
    let mut result = ExperimentResult::new("roots", params)?;
    let mut max_counts = Vec::new();
    for (g, &n) in params.ns.iter().enumerate() {
        let bound = 2 * n;
        let max_count = AtomicUsize::new(0);
        let cfg = grid_config(&params.mc, g, params.common_random_numbers);
        let est = monte_carlo(
            &cfg,
            3,
            || (),
            |_, rng, out| {
                let ny = count_roots(&draw(n, &params.first, &params.second, rng)).len();
                let ng = count_roots(&draw(n, &gauss, &gauss, rng)).len();
                max_count.fetch_max(ny.max(ng), Ordering::Relaxed);
                out[0] = ny as f64 / n as f64;
                out[1] = ng as f64 / n as f64;
                out[2] = out[0] - out[1];
            },
        )?;
        let max_count = max_count.into_inner();
        if max_count > bound {
            return Err(Error::RootCountExceeded {
                count: max_count,
                bound,
            });
        }
        max_counts.push(max_count);
        let x = n as f64;
        result.rows.push(Row::stochastic(x, "Y", est[0].mean, est[0].se, limit));
        result.rows.push(Row::stochastic(x, "G", est[1].mean, est[1].se, limit));
        result.rows.push(Row::stochastic(x, "Y-G", est[2].mean, est[2].se, 0.0));
    }
    result.push_fit("Y-G");
    result.note("max_root_count", max_counts);
    result.note("limit", limit);
    result.seed = Some(SeedInfo::new(&params.mc, params.common_random_numbers));
    result.finish()
}
