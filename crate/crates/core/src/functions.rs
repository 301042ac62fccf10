//! Named test functions `f : R^d → R` with closed-form partial derivatives.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::hermite_value;
use crate::multiindex::MultiIndex;
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Polynomial { poly: Polynomial },
    /// `cos(ω · x)`.
    Cosine { omega: Vec<f64> },
    /// `exp(-|x - center|² / (2 width²))`.
    GaussianBump { center: Vec<f64>, width: f64 },
}

impl TestFunction {
    /// `Σ_i x_i^k` in `d` variables.
    pub fn power_sum(d: usize, k: u32) -> Self {
        let mut p = Polynomial::zero(d);
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = k;
            p.add_term(MultiIndex::new(e).expect("d ≥ 1"), 1.0);
        }
        TestFunction::Polynomial { poly: p }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Polynomial { poly } => poly.dim(),
            TestFunction::Cosine { omega } => omega.len(),
            TestFunction::GaussianBump { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::arg("f", "dimension must be at least 1"));
        }
        match self {
            TestFunction::GaussianBump { width, .. } if !(*width > 0.0) => {
                Err(Error::arg("f.width", "must be positive"))
            }
            TestFunction::Cosine { omega } if omega.iter().any(|w| !w.is_finite()) => {
                Err(Error::arg("f.omega", "must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self {
            TestFunction::Polynomial { poly } => Some(poly),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.derivative_eval(&MultiIndex::zero(self.dim()), x)
    }

    /// `∂_γ f(x)`.
    pub fn derivative_eval(&self, gamma: &MultiIndex, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            TestFunction::Polynomial { poly } => {
                if gamma.is_zero() {
                    poly.eval(x)
                } else {
                    poly.derivative(gamma).eval(x)
                }
            }
            TestFunction::Cosine { omega } => {
                let t: f64 = omega.iter().zip(x).map(|(w, xi)| w * xi).sum();
                let k = gamma.order();
                gamma.monomial(omega) * (t + k as f64 * FRAC_PI_2).cos()
            }
            TestFunction::GaussianBump { center, width } => {
                // d^m/dx^m e^{-u²/2} = (-1)^m H_m(u) e^{-u²/2}, u = (x - c)/w
                let mut acc = 1.0;
                for (i, (&xi, &ci)) in x.iter().zip(center).enumerate() {
                    let u = (xi - ci) / width;
                    let m = gamma.get(i);
                    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                    acc *= sign * hermite_value(m, u) * (-0.5 * u * u).exp() / width.powi(m as i32);
                }
                acc
            }
        }
    }
}
