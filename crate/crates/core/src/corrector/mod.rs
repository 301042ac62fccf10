//! Corrector operators `Γ_{n,k}`, their Hermite polynomials and the expansion
//! `Φ_{n,N}`, plus evaluation of corrected Gaussian expectations.

mod diffop;
mod explicit;
mod gamma;
mod series;

pub use diffop::DiffOp;
pub use explicit::{discrepancy_order, discrepancy_series, explicit_order3, order2_discrepancy_closed_form};
pub use gamma::{corrector, corrector_terms, gamma_operator, lambda_sets, Slot, MAX_EXPANSION_ORDER};
pub use series::{hermitize, CorrectorPolynomial, HermiteSeries};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::moments::{to_dmatrix, ModelSpec};
use crate::multiindex::MultiIndex;
use crate::quadrature::{checked_expectation, DEFAULT_NODES};

/// Smallest eigenvalue of `Σ_n` accepted by [`normalize`].
pub const SINGULAR_EIGENVALUE: f64 = 1e-12;

/// How `E[∂_γ f(W) Φ(W)]` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Backend {
    /// Expand into monomials and sum exact Gaussian moments; polynomial `f` only.
    Exact,
    /// Tensor Gauss–Hermite with `nodes` per axis, rejected if doubling the nodes
    /// moves the value by more than `tolerance` (relative to `max(1, |value|)`).
    Quadrature { nodes: usize, tolerance: f64 },
}

impl Backend {
    pub fn quadrature() -> Self {
        Backend::Quadrature {
            nodes: DEFAULT_NODES,
            tolerance: 1e-8,
        }
    }
}

/// `E[∂_γ f(W) Φ(W)]` for a standard Gaussian `W`.
pub fn edgeworth_expectation(
    f: &TestFunction,
    gamma: &MultiIndex,
    phi: &CorrectorPolynomial,
    backend: Backend,
) -> Result<f64> {
    let d = phi.dim();
    if f.dim() != d || gamma.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if f.dim() != d { f.dim() } else { gamma.dim() },
        });
    }
    match backend {
        Backend::Exact => {
            let p = f.as_polynomial().ok_or_else(|| {
                Error::arg("backend", "the exact backend needs a polynomial test function")
            })?;
            Ok(p.derivative(gamma).mul(&phi.to_polynomial()).gaussian_expectation())
        }
        Backend::Quadrature { nodes, tolerance } => {
            let phi_poly = phi.to_polynomial();
            match f.as_polynomial() {
                Some(p) => {
                    let dp = p.derivative(gamma);
                    checked_expectation(d, nodes, tolerance, |x| dp.eval(x) * phi_poly.eval(x))
                }
                None => checked_expectation(d, nodes, tolerance, |x| {
                    f.derivative_eval(gamma, x) * phi_poly.eval(x)
                }),
            }
        }
    }
}

/// Rescales every `C_{n,k}` by `Σ_n^{-1/2}`, `Σ_n = (1/n) Σ_k C_{n,k} C_{n,k}*`.
pub fn normalize(model: &ModelSpec) -> Result<ModelSpec> {
    let sigma = to_dmatrix(&model.average_covariance());
    let eig = SymmetricEigen::new(sigma);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min >= SINGULAR_EIGENVALUE) {
        return Err(Error::SingularCovariance { min_eigenvalue: min });
    }
    let d = model.d();
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    let t: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| v[(i, k)] * inv_sqrt[k] * v[(j, k)]).sum())
                .collect()
        })
        .collect();
    model.transform(&t)?.require_normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_poly;
    use crate::moments::{exact_sum_moment, ComponentDistribution, Summand};
    use crate::multiindex::enumerate_up_to;
    use crate::poly::Polynomial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn uniform(n: usize) -> ModelSpec {
        ModelSpec::iid(n, Summand::identity(1, ComponentDistribution::UniformCentered)).unwrap()
    }

    #[test]
    fn fourth_moment_example() {
        let x4 = TestFunction::power_sum(1, 4);
        let phi = corrector(&uniform(100), 2).unwrap();
        let v = edgeworth_expectation(&x4, &mi(&[0]), &phi, Backend::Exact).unwrap();
        assert!((v - 2.988).abs() < 1e-12);
        let exact = exact_sum_moment(&uniform(100), &mi(&[4])).unwrap();
        assert!((v - exact).abs() < 1e-12);
        let h4 = TestFunction::Polynomial {
            poly: hermite_poly(&mi(&[4])),
        };
        let w = edgeworth_expectation(&h4, &mi(&[0]), &phi, Backend::Exact).unwrap();
        assert!((w + 0.012).abs() < 1e-14);
    }

    #[test]
    fn trivial_corrector_gives_gaussian_expectation() {
        let f = TestFunction::Cosine { omega: vec![1.0] };
        let one = CorrectorPolynomial::one(1, 10);
        let v = edgeworth_expectation(&f, &mi(&[0]), &one, Backend::quadrature()).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-13);
        assert!(edgeworth_expectation(&f, &mi(&[0]), &one, Backend::Exact).is_err());
    }

    #[test]
    fn exact_and_quadrature_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Summand::new(
            vec![vec![1.0, 0.2], vec![0.1, 0.9]],
            vec![
                ComponentDistribution::two_point(0.25).unwrap(),
                ComponentDistribution::UniformCentered,
            ],
        )
        .unwrap();
        let model = ModelSpec::iid(20, s).unwrap();
        let phi = corrector(&model, 3).unwrap();
        let basis = enumerate_up_to(2, 6);
        for _ in 0..5 {
            let p = Polynomial::from_terms(
                2,
                basis.iter().map(|b| (b.clone(), rng.random_range(-1.0..1.0))),
            )
            .unwrap();
            let f = TestFunction::Polynomial { poly: p };
            for g in [mi(&[0, 0]), mi(&[1, 0]), mi(&[1, 2])] {
                let a = edgeworth_expectation(&f, &g, &phi, Backend::Exact).unwrap();
                let b = edgeworth_expectation(&f, &g, &phi, Backend::quadrature()).unwrap();
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_duality_through_expectation() {
        // E[∂_γ f(W)] = E[f(W) H_γ(W)] with Φ = 1
        let f = TestFunction::GaussianBump {
            center: vec![0.3],
            width: 0.9,
        };
        let one = CorrectorPolynomial::one(1, 1);
        let lhs = edgeworth_expectation(&f, &mi(&[3]), &one, Backend::quadrature()).unwrap();
        let h3 = CorrectorPolynomial::new(
            1,
            0,
            0.0,
            HermiteSeries::from_terms(1, [(mi(&[3]), 1.0)]).unwrap(),
        );
        let rhs = edgeworth_expectation(&f, &mi(&[0]), &h3, Backend::quadrature()).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn normalize_examples() {
        let m = uniform(10);
        let same = normalize(&m).unwrap();
        assert!((same.summand(0).c[0][0] - 1.0).abs() < 1e-15);
        let twice = ModelSpec::iid(
            5,
            Summand::scaled_identity(1, 2.0, ComponentDistribution::Rademacher),
        )
        .unwrap();
        let fixed = normalize(&twice).unwrap();
        assert!((fixed.summand(3).c[0][0] - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let summands = (0..7)
            .map(|_| {
                Summand::new(
                    (0..2)
                        .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
                        .collect(),
                    vec![ComponentDistribution::StandardNormal; 3],
                )
                .unwrap()
            })
            .collect();
        let random = ModelSpec::from_summands(summands).unwrap();
        let norm = normalize(&random).unwrap();
        assert!(norm.normalization_defect() < 1e-10);
        assert!(norm.is_normalized());
    }

    #[test]
    fn singular_covariance_rejected() {
        let s = Summand::new(
            vec![vec![1.0], vec![2.0]],
            vec![ComponentDistribution::Rademacher],
        )
        .unwrap();
        let m = ModelSpec::iid(4, s).unwrap();
        let err = normalize(&m).unwrap_err();
        assert!(matches!(err, Error::SingularCovariance { .. }));
        assert!(err.is_numerical_guard());
    }
}
