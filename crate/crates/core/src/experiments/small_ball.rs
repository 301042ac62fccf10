use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{least_squares_slope, ExperimentResult, Row, RowFlag, SeedInfo, SlopeFit};
use crate::error::{Error, Result};
use crate::moments::ComponentDistribution;
use crate::sampling::{monte_carlo, McConfig};

/// Output dimension `d` and parameter dimension `ℓ` of the matrix families handled here.
const D: usize = 2;
const ELL: usize = 1;

pub type Matrix2 = [[f64; 2]; 2];

/// Matrices of `(P_n(t), P_n'(t))` for the renormalized trigonometric polynomial:
/// rows `(cos(kt/n), sin(kt/n))` and `(k/n)(−sin(kt/n), cos(kt/n))`.
pub fn trig_matrix(n: usize, k: usize, t: f64) -> Matrix2 {
    let r = k as f64 / n as f64;
    let (s, c) = (r * t).sin_cos();
    [[c, s], [-r * s, r * c]]
}

/// `P(|Z| ≤ η)` (Euclidean) for `Z ~ N(0, Σ)` in the plane.
///
/// In polar coordinates of the whitened variable the ball is `{ρ ≤ R(θ)}` with
/// `R(θ) = η / √(λ_1 cos²θ + λ_2 sin²θ)`, so the probability is the mean of
/// `1 − exp(−R²/2)` over the circle; the trapezoid rule is spectrally accurate for it.
pub fn gaussian_ball_probability(cov: Matrix2, eta: f64) -> Result<f64> {
    let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
    let mean = 0.5 * (a + c);
    let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (l1, l2) = (mean + disc, mean - disc);
    if !(l2 > 0.0) {
        return Err(Error::SingularCovariance { min_eigenvalue: l2 });
    }
    const POINTS: usize = 1024;
    let total: f64 = (0..POINTS)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / POINTS as f64;
            let q = l1 * th.cos().powi(2) + l2 * th.sin().powi(2);
            -(-0.5 * eta * eta / q).exp_m1()
        })
        .sum();
    Ok(total / POINTS as f64)
}

fn default_u() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallBallParams {
    /// Law of each coordinate of `Y_k ∈ R²`.
    pub distribution: ComponentDistribution,
    pub n: usize,
    /// Parameter value for the pointwise probabilities.
    #[serde(default = "default_u")]
    pub u: f64,
    /// Radii `η` for `P(|S_n(u, Y)| ≤ η)`.
    pub etas: Vec<f64>,
    /// Infimum threshold `n^{-θ}`.
    pub theta: f64,
    /// The infimum runs over `|u| ≤ n^a`.
    pub a: f64,
    /// Grid points in `[−n^a, n^a]`.
    pub u_points: usize,
    pub mc: McConfig,
}

impl SmallBallParams {
    fn validate(&self) -> Result<()> {
        self.mc.validate()?;
        self.distribution.validate()?;
        if self.n == 0 {
            return Err(Error::arg("n", "must be positive"));
        }
        if self.etas.is_empty() || self.etas.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::arg("etas", "need at least one positive radius"));
        }
        if !(self.a >= 0.0) {
            return Err(Error::arg("a", "must be non-negative"));
        }
        let min_theta = self.a * ELL as f64 / (D - ELL) as f64;
        if !(self.theta > min_theta) {
            return Err(Error::arg("theta", format!("must exceed a·ℓ/(d−ℓ) = {min_theta}")));
        }
        if self.u_points == 0 {
            return Err(Error::arg("u_points", "must be positive"));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        (self.n as f64).powf(-self.theta)
    }

    /// `θ(d − ℓ) − aℓ`, the decay exponent of the infimum bound.
    pub fn infimum_exponent(&self) -> f64 {
        self.theta * (D - ELL) as f64 - self.a * ELL as f64
    }

    fn u_grid(&self) -> Vec<f64> {
        let r = (self.n as f64).powf(self.a);
        if self.u_points == 1 {
            return vec![0.0];
        }
        (0..self.u_points)
            .map(|j| -r + 2.0 * r * j as f64 / (self.u_points - 1) as f64)
            .collect()
    }
}

/// Small-ball probabilities for the trigonometric matrix family.
pub fn small_ball(params: &SmallBallParams) -> Result<ExperimentResult> {
    small_ball_with(params, &trig_matrix)
}

/// Small-ball probabilities of `S_n(u, Y) = n^{-1/2} Σ_k C_{n,k}(u) Y_k` with `matrix(n, k, u) = C_{n,k}(u)`.
///
/// Series: `pointwise` (sweep `η`, reference: Gaussian probability with the same
/// covariance), `infimum` (sweep `n^{-θ}`, reference `n^{-(θ(d−ℓ)−aℓ)}`, a scale only) and
/// `union_bound` (`Σ_j P(|S_n(u_j)| ≤ n^{-θ})`, never below the infimum probability).
pub fn small_ball_with(
    params: &SmallBallParams,
    matrix: &(dyn Fn(usize, usize, f64) -> Matrix2 + Sync),
) -> Result<ExperimentResult> {
    params.validate()?;
    let n = params.n;
    let mats = |u: f64| -> Vec<Matrix2> { (1..=n).map(|k| matrix(n, k, u)).collect() };
    let point = mats(params.u);
    let grid: Vec<Vec<Matrix2>> = params.u_grid().into_iter().map(mats).collect();
    let mut cov = [[0.0; 2]; 2];
    for m in &point {
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += (m[i][0] * m[j][0] + m[i][1] * m[j][1]) / n as f64;
            }
        }
    }
    let scale = 1.0 / (n as f64).sqrt();
    let apply = |ms: &[Matrix2], y: &[[f64; 2]]| -> f64 {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (m, y) in ms.iter().zip(y) {
            s0 += m[0][0] * y[0] + m[0][1] * y[1];
            s1 += m[1][0] * y[0] + m[1][1] * y[1];
        }
        scale * (s0 * s0 + s1 * s1).sqrt()
    };
    let threshold = params.threshold();
    let ne = params.etas.len();
    let dist = &params.distribution;
    let est = monte_carlo(
        &params.mc,
        ne + 2,
        || vec![[0.0; 2]; n],
        |y, rng, out| {
            for yk in y.iter_mut() {
                *yk = [dist.sample(rng), dist.sample(rng)];
            }
            let r = apply(&point, y);
            for (o, &eta) in out.iter_mut().zip(&params.etas) {
                *o = f64::from(u8::from(r <= eta));
            }
            let hits = grid.iter().filter(|ms| apply(ms, y) <= threshold).count();
            out[ne] = f64::from(u8::from(hits > 0));
            out[ne + 1] = hits as f64;
        },
    )?;
    let samples = params.mc.samples as f64;
    let one_sided = |row: &mut Row| {
        if row.estimate == 0.0 {
            row.flag = RowFlag::ZeroHits;
            row.ci_upper = Some(3.0 / samples);
        }
    };
    let mut result = ExperimentResult::new("smallball", params)?;
    for (k, &eta) in params.etas.iter().enumerate() {
        let reference = gaussian_ball_probability(cov, eta)?;
        let mut row = Row::stochastic(eta, "pointwise", est[k].mean, est[k].se, reference);
        one_sided(&mut row);
        result.rows.push(row);
    }
    let mut inf_row = Row::stochastic(
        threshold,
        "infimum",
        est[ne].mean,
        est[ne].se,
        (n as f64).powf(-params.infimum_exponent()),
    );
    one_sided(&mut inf_row);
    result.rows.push(inf_row);
    result.rows.push(Row::stochastic(
        threshold,
        "union_bound",
        est[ne + 1].mean,
        est[ne + 1].se,
        est[ne].mean,
    ));

    let pts: Vec<(f64, f64)> = result
        .rows_of("pointwise")
        .filter(|r| r.estimate > 0.0)
        .map(|r| (r.sweep.ln(), r.estimate.ln()))
        .collect();
    let fit = least_squares_slope(&pts);
    result.fits.push(SlopeFit {
        series: "pointwise".into(),
        fitted_slope: fit.map(|f| f.0),
        slope_stderr: fit.and_then(|f| f.1),
        points: pts.len(),
        excluded: ne - pts.len(),
        all_degenerate: false,
    });
    result.note("dimension", D);
    result.note("exponent_target", D as f64);
    result.note("infimum_exponent", params.infimum_exponent());
    result.note("covariance", vec![cov[0].to_vec(), cov[1].to_vec()]);
    result.seed = Some(SeedInfo::new(&params.mc, true));
    result.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dist: ComponentDistribution, etas: Vec<f64>, samples: usize) -> SmallBallParams {
        SmallBallParams {
            distribution: dist,
            n: 30,
            u: 1.0,
            etas,
            theta: 1.0,
            a: 0.5,
            u_points: 16,
            mc: McConfig::new(samples, 8, 2),
        }
    }

    #[test]
    fn gaussian_ball_probability_examples() {
        // isotropic: 1 − e^{−η²/2}
        let p = gaussian_ball_probability([[1.0, 0.0], [0.0, 1.0]], 0.7).unwrap();
        assert!((p - (1.0 - (-0.245f64).exp())).abs() < 1e-14);
        // rotation invariance
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let (l1, l2) = (2.0, 0.5);
        let rot = [
            [l1 * c * c + l2 * s * s, (l1 - l2) * c * s],
            [(l1 - l2) * c * s, l1 * s * s + l2 * c * c],
        ];
        let a = gaussian_ball_probability(rot, 0.4).unwrap();
        let b = gaussian_ball_probability([[l1, 0.0], [0.0, l2]], 0.4).unwrap();
        assert!((a - b).abs() < 1e-14);
        // small radius: π η² / (2π √det Σ)
        let eta = 1e-3;
        let small = gaussian_ball_probability([[l1, 0.0], [0.0, l2]], eta).unwrap();
        assert!((small / (eta * eta / 2.0) - 1.0).abs() < 1e-5);
        assert!(gaussian_ball_probability([[1.0, 1.0], [1.0, 1.0]], 0.1).is_err());
    }

    #[test]
    fn trig_family_covariance() {
        // rows are orthogonal and (1/n) Σ (k/n)² ≥ 1/3
        let n = 30;
        let v: f64 = (1..=n).map(|k| (k as f64 / n as f64).powi(2)).sum::<f64>() / n as f64;
        assert!(v >= 1.0 / 3.0);
        let m = trig_matrix(n, 7, 2.0);
        assert!((m[0][0] * m[1][0] + m[0][1] * m[1][1]).abs() < 1e-15);
    }

    #[test]
    fn gaussian_exponent_and_reference() {
        let p = params(ComponentDistribution::StandardNormal, vec![0.05, 0.1, 0.2, 0.3], 100_000);
        let r = small_ball(&p).unwrap();
        for row in r.rows_of("pointwise") {
            assert!(row.error <= 3.0 * row.se.unwrap(), "{row:?}");
        }
        let slope = r.fit("pointwise").unwrap().fitted_slope.unwrap();
        assert!((1.8..=2.2).contains(&slope), "{slope}");
    }

    #[test]
    fn large_radius_and_union_bound() {
        let p = params(ComponentDistribution::UniformCentered, vec![10.0], 5_000);
        let r = small_ball(&p).unwrap();
        assert!(r.rows_of("pointwise").next().unwrap().estimate > 0.999);
        let inf = r.rows_of("infimum").next().unwrap().estimate;
        let union = r.rows_of("union_bound").next().unwrap().estimate;
        assert!(inf <= union);
    }

    #[test]
    fn zero_hits_give_a_one_sided_bound() {
        let p = params(ComponentDistribution::Rademacher, vec![1e-9], 1_000);
        let r = small_ball(&p).unwrap();
        let row = r.rows_of("pointwise").next().unwrap();
        assert_eq!(row.flag, RowFlag::ZeroHits);
        assert_eq!(row.ci_upper, Some(3e-3));
    }

    #[test]
    fn guards() {
        let mut p = params(ComponentDistribution::StandardNormal, vec![0.1], 100);
        p.theta = 0.5;
        assert!(small_ball(&p).is_err());
        p.theta = 1.0;
        p.etas = vec![-1.0];
        assert!(small_ball(&p).is_err());
        p.etas = vec![0.1];
        p.u_points = 0;
        assert!(small_ball(&p).is_err());
    }
}
