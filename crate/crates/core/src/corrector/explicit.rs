//! The plain third-order expansion in terms of the averaged moment differences
//! `c_n` and `c̄_n`, and its exact gap to the operator construction.

use crate::error::{Error, Result};
use crate::moments::{ModelMoments, ModelSpec};
use crate::multiindex::{enumerate, MultiIndex};

use super::gamma::GammaBuilder;
use super::series::{hermitize, HermiteSeries};

/// `(β, weight(β))` for every multiplicity vector of order `l`: the ordered-tuple
/// count that turns `Σ_{|α|=l}` into a sum over `β`.
fn weighted(d: usize, l: usize) -> Vec<(MultiIndex, f64)> {
    enumerate(d, l)
        .into_iter()
        .map(|b| {
            let w = b.multinomial_weight() as f64;
            (b, w)
        })
        .collect()
}

fn cat(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    a.concat(b).expect("same dimension")
}

/// `[H_{n,1}, H_{n,2}, H_{n,3}]`.
pub fn explicit_order3(model: &ModelSpec) -> [HermiteSeries; 3] {
    let mm = ModelMoments::new(model, 5);
    explicit_with(&mm)
}

fn explicit_with(mm: &ModelMoments) -> [HermiteSeries; 3] {
    let d = mm.d();
    let w3 = weighted(d, 3);
    let w4 = weighted(d, 4);
    let w5 = weighted(d, 5);
    let c3: Vec<f64> = w3.iter().map(|(b, w)| w * mm.c(b)).collect();
    let c4: Vec<f64> = w4.iter().map(|(b, w)| w * mm.c(b)).collect();

    let mut h1 = HermiteSeries::zero(d);
    for ((b, _), c) in w3.iter().zip(&c3) {
        h1.add_term(b.clone(), c / 6.0);
    }

    let mut h2 = HermiteSeries::zero(d);
    for ((b, _), c) in w4.iter().zip(&c4) {
        h2.add_term(b.clone(), c / 24.0);
    }
    for ((a, _), ca) in w3.iter().zip(&c3) {
        for ((b, _), cb) in w3.iter().zip(&c3) {
            h2.add_term(cat(a, b), ca * cb / 72.0);
        }
    }

    let mut h3 = HermiteSeries::zero(d);
    for (a, wa) in &w3 {
        for i in 0..d {
            for j in 0..d {
                let idx = cat(&cat(a, &MultiIndex::unit(d, i)), &MultiIndex::unit(d, j));
                h3.add_term(idx, -wa * mm.cbar(a, i, j) / 12.0);
            }
        }
    }
    for (b, w) in &w5 {
        h3.add_term(b.clone(), w * mm.c(b) / 120.0);
    }
    for ((a, _), ca) in w3.iter().zip(&c3) {
        for ((b, _), cb) in w4.iter().zip(&c4) {
            h3.add_term(cat(a, b), ca * cb / 144.0);
        }
    }
    for ((a, _), ca) in w3.iter().zip(&c3) {
        for ((b, _), cb) in w3.iter().zip(&c3) {
            for ((g, _), cg) in w3.iter().zip(&c3) {
                h3.add_term(cat(&cat(a, b), g), ca * cb * cg / 1296.0);
            }
        }
    }
    [h1, h2, h3]
}

/// `H_{Γ_{n,k}} - H_{n,k}` as a Hermite series, `k ∈ {1, 2, 3}`.
pub fn discrepancy_series(model: &ModelSpec, k: usize) -> Result<HermiteSeries> {
    if !(1..=3).contains(&k) {
        return Err(Error::arg("k", format!("must be 1, 2 or 3, got {k}")));
    }
    let mm = ModelMoments::new(model, 5);
    // Λ_{m,k} is the same for every N ≥ k, so N = k suffices
    let gamma = hermitize(&GammaBuilder::new(&mm, k).gamma(k));
    let explicit = explicit_with(&mm);
    Ok(gamma.sub(&explicit[k - 1]))
}

/// `H_{Γ_{n,k}}(x) - H_{n,k}(x)`.
pub fn discrepancy_order(model: &ModelSpec, k: usize, x: &[f64]) -> Result<f64> {
    if x.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: x.len(),
        });
    }
    Ok(discrepancy_series(model, k)?.eval(x))
}

/// Closed form of the second-order gap:
/// `-(1/(72n)) Σ_{|α|=3} Σ_{|β|=3} d_n(α, β) H_{(α,β)}`.
pub fn order2_discrepancy_closed_form(model: &ModelSpec) -> HermiteSeries {
    let mm = ModelMoments::new(model, 3);
    let d = mm.d();
    let n = mm.n() as f64;
    let w3 = weighted(d, 3);
    let mut out = HermiteSeries::zero(d);
    for (a, wa) in &w3 {
        for (b, wb) in &w3 {
            out.add_term(cat(a, b), -wa * wb * mm.d2(a, b) / (72.0 * n));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::gamma::corrector_terms;
    use crate::moments::{ComponentDistribution, Summand};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn iid1(n: usize, dist: ComponentDistribution) -> ModelSpec {
        ModelSpec::iid(n, Summand::identity(1, dist)).unwrap()
    }

    fn skewed(n: usize) -> ModelSpec {
        iid1(n, ComponentDistribution::two_point(0.2).unwrap())
    }

    #[test]
    fn symmetric_components_have_no_first_term() {
        let m = iid1(10, ComponentDistribution::UniformCentered);
        let [h1, h2, _] = explicit_order3(&m);
        assert!(h1.is_zero());
        assert!((h2.coeff(&mi(&[4])) + 1.0 / 20.0).abs() < 1e-15);
        assert_eq!(h2.len(), 1);
    }

    #[test]
    fn rademacher_second_term() {
        let [_, h2, _] = explicit_order3(&iid1(10, ComponentDistribution::Rademacher));
        assert!((h2.coeff(&mi(&[4])) + 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn first_order_gap_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let summands = (0..9)
            .map(|_| {
                let c = vec![
                    vec![rng.random_range(0.2..1.0), rng.random_range(-0.5..0.5)],
                    vec![rng.random_range(-0.5..0.5), rng.random_range(0.2..1.0)],
                ];
                Summand::new(
                    c,
                    vec![
                        ComponentDistribution::two_point(rng.random_range(0.1..0.4)).unwrap(),
                        ComponentDistribution::UniformCentered,
                    ],
                )
                .unwrap()
            })
            .collect();
        let m = ModelSpec::from_summands(summands).unwrap();
        let gap = discrepancy_series(&m, 1).unwrap();
        assert!(gap.max_abs_coeff() < 1e-15);
        assert_eq!(discrepancy_order(&m, 1, &[0.3, -1.2]).unwrap().abs() < 1e-14, true);
    }

    #[test]
    fn second_order_gap_matches_closed_form_and_scales() {
        let x = [0.7];
        let mut scaled = Vec::new();
        for n in [50, 100, 200] {
            let m = skewed(n);
            let gap = discrepancy_series(&m, 2).unwrap();
            let closed = order2_discrepancy_closed_form(&m);
            assert!(gap.sub(&closed).max_abs_coeff() < 1e-14);
            scaled.push(n as f64 * gap.eval(&x));
        }
        assert!((scaled[0] - scaled[1]).abs() < 1e-10);
        assert!((scaled[1] - scaled[2]).abs() < 1e-10);
        assert!(scaled[0].abs() > 1e-3);
        // symmetric model: d_n ≡ 0
        let sym = iid1(40, ComponentDistribution::Rademacher);
        assert_eq!(discrepancy_order(&sym, 2, &x).unwrap(), 0.0);
    }

    #[test]
    fn third_order_gap_is_order_one_over_n() {
        let x = [0.4];
        let a = discrepancy_order(&skewed(100), 3, &x).unwrap();
        let b = discrepancy_order(&skewed(200), 3, &x).unwrap();
        assert!(a.abs() > 0.0);
        // iid gaps are exact polynomials in 1/n with no constant term
        assert!((b / a - 0.5).abs() < 0.02, "ratio {}", b / a);
    }

    #[test]
    fn explicit_terms_match_operator_terms_up_to_gap() {
        let m = skewed(64);
        let terms = corrector_terms(&m, 3).unwrap();
        let explicit = explicit_order3(&m);
        for k in 0..3 {
            let gap = discrepancy_series(&m, k + 1).unwrap();
            let recon = explicit[k].clone();
            let mut sum = recon;
            sum.add_scaled(&gap, 1.0);
            assert!(sum.sub(&terms[k]).max_abs_coeff() < 1e-14);
        }
        assert!(discrepancy_order(&m, 4, &[0.0]).is_err());
    }
}
