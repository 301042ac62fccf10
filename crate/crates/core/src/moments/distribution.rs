use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{binomial, double_factorial};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const STANDARDIZATION_TOL: f64 = 1e-10;

/// Law of one scalar coordinate of a summand `Y_k`. Every entry is centered with unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentDistribution {
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    UniformCentered,
    /// `a` with probability `p`, `b` otherwise.
    TwoPoint { p: f64, a: f64, b: f64 },
    /// `w·N(mu1, sigma1²) + (1-w)·N(mu2, sigma2²)`.
    GaussianMixture {
        w: f64,
        mu1: f64,
        sigma1: f64,
        mu2: f64,
        sigma2: f64,
    },
    StandardNormal,
}

impl ComponentDistribution {
    /// The standardized two-point law putting mass `p` on the positive atom.
    pub fn two_point(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "two_point probability {p} outside (0,1)"
            )));
        }
        let d = ComponentDistribution::TwoPoint {
            p,
            a: ((1.0 - p) / p).sqrt(),
            b: -(p / (1.0 - p)).sqrt(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Symmetric bimodal mixture `½N(-μ, σ²) + ½N(μ, σ²)` with `μ² + σ² = 1`.
    pub fn symmetric_mixture(mu: f64) -> Result<Self> {
        if !(mu.abs() < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "mixture offset {mu} must satisfy |mu| < 1"
            )));
        }
        let sigma = (1.0 - mu * mu).sqrt();
        Ok(ComponentDistribution::GaussianMixture {
            w: 0.5,
            mu1: -mu,
            sigma1: sigma,
            mu2: mu,
            sigma2: sigma,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComponentDistribution::Rademacher => "rademacher",
            ComponentDistribution::UniformCentered => "uniform_centered",
            ComponentDistribution::TwoPoint { .. } => "two_point",
            ComponentDistribution::GaussianMixture { .. } => "gaussian_mixture",
            ComponentDistribution::StandardNormal => "standard_normal",
        }
    }

    /// Checks parameter ranges, zero mean and unit variance.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ComponentDistribution::TwoPoint { p, a, b } => {
                if !(p > 0.0 && p < 1.0) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "two_point parameters p={p}, a={a}, b={b}"
                    )));
                }
            }
            ComponentDistribution::GaussianMixture {
                w,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                let finite = [mu1, mu2, sigma1, sigma2].iter().all(|v| v.is_finite());
                if !(0.0..=1.0).contains(&w) || !finite || sigma1 <= 0.0 || sigma2 <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "gaussian_mixture parameters w={w}, sigma1={sigma1}, sigma2={sigma2}"
                    )));
                }
            }
            _ => {}
        }
        let mean = self.raw_moment(1);
        let var = self.raw_moment(2);
        if mean.abs() > STANDARDIZATION_TOL || (var - 1.0).abs() > STANDARDIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "{} must have mean 0 and variance 1 (got mean {mean:e}, variance {var})",
                self.name()
            )));
        }
        Ok(())
    }

    /// `E[Y^k]` in closed form.
    pub fn raw_moment(&self, k: usize) -> f64 {
        match *self {
            ComponentDistribution::Rademacher => {
                if k % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            ComponentDistribution::UniformCentered => {
                if k % 2 == 1 {
                    0.0
                } else {
                    SQRT3.powi(k as i32) / (k as f64 + 1.0)
                }
            }
            ComponentDistribution::TwoPoint { p, a, b } => {
                p * a.powi(k as i32) + (1.0 - p) * b.powi(k as i32)
            }
            ComponentDistribution::GaussianMixture {
                w,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => w * normal_moment(mu1, sigma1, k) + (1.0 - w) * normal_moment(mu2, sigma2, k),
            ComponentDistribution::StandardNormal => normal_moment(0.0, 1.0, k),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            ComponentDistribution::TwoPoint { p, a, b } => p == 0.5 && a == -b,
            ComponentDistribution::GaussianMixture {
                w,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                (w == 0.5 && mu1 == -mu2 && sigma1 == sigma2)
                    || (mu1 == 0.0 && mu2 == 0.0)
            }
            _ => true,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, ComponentDistribution::StandardNormal)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ComponentDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ComponentDistribution::UniformCentered => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
            ComponentDistribution::TwoPoint { p, a, b } => {
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
            ComponentDistribution::GaussianMixture {
                w,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                let z: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < w {
                    mu1 + sigma1 * z
                } else {
                    mu2 + sigma2 * z
                }
            }
            ComponentDistribution::StandardNormal => rng.sample(StandardNormal),
        }
    }
}

/// `E[X^k]` for `X ~ N(mu, sigma²)`.
fn normal_moment(mu: f64, sigma: f64, k: usize) -> f64 {
    (0..=k)
        .step_by(2)
        .map(|j| {
            binomial(k, j) * mu.powi((k - j) as i32) * sigma.powi(j as i32) * double_factorial(j as i64 - 1)
        })
        .sum()
}

/// The catalog entries that have a Lebesgue density; only these can carry a Doeblin certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDistribution(ComponentDistribution);

impl TryFrom<ComponentDistribution> for ContinuousDistribution {
    type Error = Error;

    fn try_from(d: ComponentDistribution) -> Result<Self> {
        match d {
            ComponentDistribution::Rademacher | ComponentDistribution::TwoPoint { .. } => {
                Err(Error::NoDensity(d.name().to_string()))
            }
            other => Ok(ContinuousDistribution(other)),
        }
    }
}

impl ContinuousDistribution {
    pub fn distribution(&self) -> &ComponentDistribution {
        &self.0
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.0 {
            ComponentDistribution::UniformCentered => {
                if x.abs() <= SQRT3 {
                    1.0 / (2.0 * SQRT3)
                } else {
                    0.0
                }
            }
            ComponentDistribution::GaussianMixture {
                w,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => w * normal_pdf(x, mu1, sigma1) + (1.0 - w) * normal_pdf(x, mu2, sigma2),
            ComponentDistribution::StandardNormal => normal_pdf(x, 0.0, 1.0),
            ComponentDistribution::Rademacher | ComponentDistribution::TwoPoint { .. } => {
                unreachable!("discrete laws are rejected at construction")
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0.sample(rng)
    }
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}
