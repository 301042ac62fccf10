//! Doeblin lower bounds and the Nummelin splitting `Y = χ V + (1 - χ) U`.
//!
//! Everything here is one-dimensional in the sample space (component laws are
//! scalar); only [`m_r`] is written for a general dimension.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::ContinuousDistribution;
use crate::quadrature::adaptive_simpson;

/// Rejection samplers with a lower acceptance probability abort.
pub const MIN_ACCEPTANCE: f64 = 1e-3;
const M_R_TOLERANCE: f64 = 1e-8;

/// `a_r(t) = 1 - 1 / (1 - (t/r - 1)²)`.
pub fn a_r(r: f64, t: f64) -> f64 {
    let u = t / r - 1.0;
    1.0 - 1.0 / (1.0 - u * u)
}

/// `ψ_r(t) = 1` on `|t| ≤ r`, `exp(a_r(|t|))` on `r < |t| ≤ 2r`, `0` beyond.
pub fn psi_r(r: f64, t: f64) -> f64 {
    let t = t.abs();
    if t <= r {
        1.0
    } else if t < 2.0 * r {
        a_r(r, t).exp()
    } else {
        // the pole of a_r at 2r is a limit e^{-∞} = 0
        0.0
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("checked by caller"),
    }
}

/// `m_r = ∫ ψ_r(|y|²) dy` over `R^d`, `d ≤ 3`.
///
/// The integrand is radial: the ball of radius `√r` contributes its volume and the
/// shell `√r < ρ ≤ √(2r)` is integrated by adaptive Simpson in `ρ`.
pub fn m_r(r: f64, d: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::arg("r", "must be positive"));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::arg("d", "m_r is implemented for 1 ≤ d ≤ 3"));
    }
    let vd = unit_ball_volume(d);
    let surface = d as f64 * vd;
    let inner = vd * r.powf(d as f64 / 2.0);
    let shell = adaptive_simpson(
        |rho| psi_r(r, rho * rho) * rho.powi(d as i32 - 1),
        r.sqrt(),
        (2.0 * r).sqrt(),
        M_R_TOLERANCE,
    )?;
    Ok(inner + surface * shell)
}

/// Outcome of a grid check of `p ≥ ε` on a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeblinCheck {
    pub passed: bool,
    /// `min_grid p - ε`.
    pub margin: f64,
}

/// Checks `p(x) ≥ ε` on a uniform grid of `resolution` points covering the ball
/// around `y` of radius `max(2r, √(2r))`.
///
/// Radius `2r` is the ball of the lower bound itself; `√(2r)` is the support of
/// `ψ_r(|x - y|²)`, on which the splitting needs `p ≥ εψ_r`. Only a grid-scale
/// sufficient condition: a dip of `p` between grid points goes unnoticed.
pub fn doeblin_check(p: impl Fn(f64) -> f64, y: f64, r: f64, eps: f64, resolution: usize) -> Result<DoeblinCheck> {
    if resolution < 64 {
        return Err(Error::arg("resolution", "need at least 64 grid points"));
    }
    if !(r > 0.0 && eps > 0.0) {
        return Err(Error::arg("r, eps", "must be positive"));
    }
    let radius = (2.0 * r).max((2.0 * r).sqrt());
    let min = (0..resolution)
        .map(|i| {
            let x = y - radius + 2.0 * radius * i as f64 / (resolution - 1) as f64;
            p(x)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(DoeblinCheck {
        passed: min - eps >= 0.0,
        margin: min - eps,
    })
}

/// A verified Doeblin lower bound `p ≥ ε ψ_r(|· - y|²)` for a scalar law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeblinCert {
    pub y: f64,
    pub r: f64,
    pub eps: f64,
    pub m_r: f64,
    pub margin: f64,
}

impl DoeblinCert {
    pub fn new(dist: &ContinuousDistribution, y: f64, r: f64, eps: f64, resolution: usize) -> Result<Self> {
        let check = doeblin_check(|x| dist.pdf(x), y, r, eps, resolution)?;
        if !check.passed {
            return Err(Error::Certificate(format!(
                "density falls below eps = {eps} near y = {y} (margin {:.3e})",
                check.margin
            )));
        }
        let m = m_r(r, 1)?;
        if !(eps * m > 0.0 && eps * m < 1.0) {
            return Err(Error::Certificate(format!(
                "eps·m_r = {} is not a probability in (0,1)",
                eps * m
            )));
        }
        Ok(DoeblinCert {
            y,
            r,
            eps,
            m_r: m,
            margin: check.margin,
        })
    }

    /// `y = 0`, `r = 1/2` and half the density at the origin: a safe default for
    /// the uniform law on `[-√3, √3]`, whose density is flat on the checked ball.
    pub fn uniform_centered_default(dist: &ContinuousDistribution) -> Result<Self> {
        DoeblinCert::new(dist, 0.0, 0.5, 0.5 * dist.pdf(0.0), 1024)
    }

    /// `P(χ = 1)`.
    pub fn mixing_probability(&self) -> f64 {
        self.eps * self.m_r
    }

    fn psi(&self, x: f64) -> f64 {
        let dx = x - self.y;
        psi_r(self.r, dx * dx)
    }
}

/// One draw of the splitting, with the coin that selected its branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NummelinDraw {
    pub value: f64,
    pub chi: bool,
}

/// Samples `Y = χ V + (1 - χ) U` with `χ ~ Bernoulli(ε m_r)`, `V ∝ ψ_r(|· - y|²)`
/// and `U ∝ p - ε ψ_r(|· - y|²)`, both by rejection.
#[derive(Debug, Clone)]
pub struct NummelinSampler {
    dist: ContinuousDistribution,
    cert: DoeblinCert,
    half_width: f64,
}

impl NummelinSampler {
    pub fn new(dist: ContinuousDistribution, cert: DoeblinCert) -> Result<Self> {
        let half_width = (2.0 * cert.r).sqrt();
        // exact acceptance probabilities of the two rejection loops
        let v_rate = cert.m_r / (2.0 * half_width);
        let u_rate = 1.0 - cert.mixing_probability();
        let worst = v_rate.min(u_rate);
        if worst < MIN_ACCEPTANCE {
            return Err(Error::RejectionRate { acceptance: worst });
        }
        Ok(NummelinSampler {
            dist,
            cert,
            half_width,
        })
    }

    pub fn cert(&self) -> &DoeblinCert {
        &self.cert
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NummelinDraw> {
        // with acceptance ≥ MIN_ACCEPTANCE, this many failures has probability < e^{-100}
        let max_tries = (100.0 / MIN_ACCEPTANCE) as usize;
        let chi = rng.random::<f64>() < self.cert.mixing_probability();
        for _ in 0..max_tries {
            if chi {
                let v = self.cert.y + self.half_width * (2.0 * rng.random::<f64>() - 1.0);
                if rng.random::<f64>() < self.cert.psi(v) {
                    return Ok(NummelinDraw { value: v, chi });
                }
            } else {
                let u = self.dist.sample(rng);
                let p = self.dist.pdf(u);
                let accept = 1.0 - self.cert.eps * self.cert.psi(u) / p;
                if rng.random::<f64>() < accept {
                    return Ok(NummelinDraw { value: u, chi });
                }
            }
        }
        Err(Error::RejectionRate {
            acceptance: 1.0 / max_tries as f64,
        })
    }
}

/// One draw of `Y` through the splitting.
pub fn nummelin_sample<R: Rng + ?Sized>(
    dist: &ContinuousDistribution,
    cert: &DoeblinCert,
    rng: &mut R,
) -> Result<f64> {
    Ok(NummelinSampler::new(dist.clone(), *cert)?.sample(rng)?.value)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Asymptotic 1% critical value `1.628 √((n + m) / (n m))`.
pub fn ks_critical_value_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}
