//! Component laws, pushforward moments, moment differences and an exact moment oracle for `S_n`.

mod distribution;
mod model;

pub use distribution::{normal_pdf, ComponentDistribution, ContinuousDistribution};
pub use model::{ModelSpec, MomentTable, SampleBuffers, Summand};
pub(crate) use model::to_dmatrix;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::poly::Polynomial;

/// Highest order accepted by [`exact_sum_moment`].
pub const EXACT_SUM_MAX_ORDER: usize = 8;

/// Highest order accepted by [`pushforward_moment`].
pub const PUSHFORWARD_MAX_ORDER: usize = 12;

pub fn raw_moment(dist: &ComponentDistribution, k: usize) -> f64 {
    dist.raw_moment(k)
}

/// `E[(C Y)^β]` for a `d × m` matrix `C` and independent components.
///
/// Expands `Π_i (Σ_j C_ij y_j)^{β_i}` over the inputs and replaces each monomial
/// by the product of per-component raw moments.
pub fn pushforward_moment(
    c: &[Vec<f64>],
    comps: &[ComponentDistribution],
    beta: &MultiIndex,
) -> Result<f64> {
    if beta.dim() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: beta.dim(),
        });
    }
    if beta.order() > PUSHFORWARD_MAX_ORDER {
        return Err(Error::OrderCap {
            order: beta.order(),
            cap: PUSHFORWARD_MAX_ORDER,
        });
    }
    let m = comps.len();
    let mut p = Polynomial::constant(m, 1.0);
    for (i, row) in c.iter().enumerate() {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: row.len(),
            });
        }
        let form = Polynomial::from_terms(
            m,
            row.iter().enumerate().map(|(j, &v)| (MultiIndex::unit(m, j), v)),
        )?;
        for _ in 0..beta.get(i) {
            p = p.mul(&form);
        }
    }
    Ok(model::expect_product(&p, comps))
}

/// `Δ(β) = E[(C Y)^β] - E[(C G)^β]`; zero for `|β| ≤ 2`.
pub fn delta(c: &[Vec<f64>], comps: &[ComponentDistribution], beta: &MultiIndex) -> Result<f64> {
    if beta.order() <= 2 {
        if beta.dim() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                found: beta.dim(),
            });
        }
        return Ok(0.0);
    }
    let gaussian = vec![ComponentDistribution::StandardNormal; comps.len()];
    Ok(pushforward_moment(c, comps, beta)? - pushforward_moment(c, &gaussian, beta)?)
}

/// Moment tables of every distinct summand of a model, with the averages built from them.
#[derive(Debug, Clone)]
pub struct ModelMoments {
    n: usize,
    d: usize,
    tables: Vec<MomentTable>,
    covariances: Vec<Vec<Vec<f64>>>,
}

impl ModelMoments {
    pub fn new(model: &ModelSpec, max_order: usize) -> Self {
        let records = model.records();
        ModelMoments {
            n: model.n(),
            d: model.d(),
            tables: records.iter().map(|s| s.moment_table(max_order)).collect(),
            covariances: records.iter().map(|s| s.covariance()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_iid(&self) -> bool {
        self.tables.len() == 1 && self.n > 1
    }

    /// Table for summand `r` in `0..n`.
    pub fn table(&self, r: usize) -> &MomentTable {
        if self.tables.len() == 1 {
            &self.tables[0]
        } else {
            &self.tables[r]
        }
    }

    pub fn covariance(&self, r: usize) -> &[Vec<f64>] {
        if self.covariances.len() == 1 {
            &self.covariances[0]
        } else {
            &self.covariances[r]
        }
    }

    /// Average of `g(r)` over the `n` summands, visiting each distinct record once.
    fn average(&self, g: impl Fn(usize) -> f64) -> f64 {
        if self.tables.len() == 1 {
            g(0)
        } else {
            (0..self.n).map(g).sum::<f64>() / self.n as f64
        }
    }

    /// `c_n(β) = (1/n) Σ_r Δ_{n,r}(β)`.
    pub fn c(&self, beta: &MultiIndex) -> f64 {
        self.average(|r| self.table(r).delta(beta))
    }

    /// `c̄_n(β, i, j) = (1/n) Σ_r Δ_{n,r}(β) σ_{n,r}^{ij}`.
    pub fn cbar(&self, beta: &MultiIndex, i: usize, j: usize) -> f64 {
        self.average(|r| self.table(r).delta(beta) * self.covariance(r)[i][j])
    }

    /// `d_n(α, β) = (1/n) Σ_r Δ_{n,r}(α) Δ_{n,r}(β)`.
    pub fn d2(&self, a: &MultiIndex, b: &MultiIndex) -> f64 {
        self.average(|r| self.table(r).delta(a) * self.table(r).delta(b))
    }
}

/// `(c_n(β), c̄_n(β, i, j))` with 0-based coordinates `i, j`.
pub fn corollary_coeffs(model: &ModelSpec, beta: &MultiIndex, i: usize, j: usize) -> Result<(f64, f64)> {
    if beta.dim() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: beta.dim(),
        });
    }
    if i >= model.d() || j >= model.d() {
        return Err(Error::arg("i,j", "coordinate out of range"));
    }
    let mm = ModelMoments::new(model, beta.order());
    Ok((mm.c(beta), mm.cbar(beta, i, j)))
}

/// Exact `E[S_n^β]`.
///
/// Dynamic program over the summands on the sub-indices `γ ≤ β`, carried in the
/// normalized form `v(γ) = E[(Z_1 + … + Z_k)^γ] / γ!` so that adding summand `k`
/// is the convolution `v'(γ) = Σ_{δ ≤ γ} v(γ - δ) E[Z_k^δ] / δ!`.
pub fn exact_sum_moment(model: &ModelSpec, beta: &MultiIndex) -> Result<f64> {
    if beta.dim() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: beta.dim(),
        });
    }
    if beta.order() > EXACT_SUM_MAX_ORDER {
        return Err(Error::OrderCap {
            order: beta.order(),
            cap: EXACT_SUM_MAX_ORDER,
        });
    }
    let mm = ModelMoments::new(model, beta.order());
    Ok(exact_sum_moment_with(&mm, beta))
}

pub(crate) fn exact_sum_moment_with(mm: &ModelMoments, beta: &MultiIndex) -> f64 {
    let states = beta.sub_indices();
    let index: HashMap<&MultiIndex, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    // (δ, state index of γ - δ) pairs for each γ, restricted to |δ| = 0 or ≥ 2
    let splits: Vec<Vec<(usize, usize)>> = states
        .iter()
        .map(|g| {
            states
                .iter()
                .enumerate()
                .filter(|(_, dl)| dl.order() != 1 && dl.le_componentwise(g))
                .map(|(di, dl)| (di, index[&g.checked_sub(dl).unwrap()]))
                .collect()
        })
        .collect();
    let scale = 1.0 / (mm.n() as f64).sqrt();
    let step = |r: usize| -> Vec<f64> {
        let t = mm.table(r);
        states
            .iter()
            .map(|dl| {
                if dl.order() == 1 {
                    0.0
                } else {
                    t.y(dl) * scale.powi(dl.order() as i32) / dl.factorial_product()
                }
            })
            .collect()
    };
    let mut v = vec![0.0; states.len()];
    v[0] = 1.0; // states[0] is the zero index
    let iid_step = if mm.is_iid() { Some(step(0)) } else { None };
    for r in 0..mm.n() {
        let e = match &iid_step {
            Some(e) => e.clone(),
            None => step(r),
        };
        let next: Vec<f64> = splits
            .iter()
            .map(|sp| sp.iter().map(|&(di, rest)| v[rest] * e[di]).sum())
            .collect();
        v = next;
    }
    v[states.len() - 1] * beta.factorial_product()
}

/// `max_k E|C_{n,k} Y_k|^p` for even `p`, the computable side of the moment bound.
pub fn max_abs_moment(model: &ModelSpec, p: usize) -> Result<f64> {
    if p % 2 == 1 {
        return Err(Error::arg("p", "only even orders have a closed form"));
    }
    let d = model.d();
    let mut sq = Polynomial::zero(d);
    for i in 0..d {
        let mut e = vec![0u32; d];
        e[i] = 2;
        sq.add_term(MultiIndex::new(e)?, 1.0);
    }
    let mut norm_p = Polynomial::constant(d, 1.0);
    for _ in 0..p / 2 {
        norm_p = norm_p.mul(&sq);
    }
    let mut best: f64 = 0.0;
    for s in model.records() {
        let t = s.moment_table(p);
        let v: f64 = norm_p.terms().map(|(b, c)| c * t.y(b)).sum();
        best = best.max(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate;
    use rand::SeedableRng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn iid1(n: usize, dist: ComponentDistribution) -> ModelSpec {
        ModelSpec::iid(n, Summand::identity(1, dist)).unwrap()
    }

    #[test]
    fn pushforward_examples() {
        let id1 = vec![vec![1.0]];
        let r = pushforward_moment(&id1, &[ComponentDistribution::Rademacher], &mi(&[3])).unwrap();
        assert_eq!(r, 0.0);
        let u = pushforward_moment(&id1, &[ComponentDistribution::UniformCentered], &mi(&[4])).unwrap();
        assert!((u - 1.8).abs() < 1e-14);
        let id2 = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let two = [ComponentDistribution::Rademacher, ComponentDistribution::Rademacher];
        assert_eq!(pushforward_moment(&id2, &two, &mi(&[2, 2])).unwrap(), 1.0);
        assert!(pushforward_moment(&id2, &two, &mi(&[2])).is_err());
    }

    #[test]
    fn delta_examples() {
        let id1 = vec![vec![1.0]];
        let r = delta(&id1, &[ComponentDistribution::Rademacher], &mi(&[4])).unwrap();
        assert!((r + 2.0).abs() < 1e-14);
        let u = delta(&id1, &[ComponentDistribution::UniformCentered], &mi(&[4])).unwrap();
        assert!((u + 1.2).abs() < 1e-14);
        let t = delta(&id1, &[ComponentDistribution::two_point(0.1).unwrap()], &mi(&[2])).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn delta_vanishes_to_second_order_and_for_gaussians() {
        let c = vec![vec![0.3, -1.2, 0.5], vec![0.9, 0.1, 0.0]];
        let comps = [
            ComponentDistribution::two_point(0.25).unwrap(),
            ComponentDistribution::UniformCentered,
            ComponentDistribution::symmetric_mixture(0.7).unwrap(),
        ];
        let gauss = vec![ComponentDistribution::StandardNormal; 3];
        for l in 0..=6 {
            for b in enumerate(2, l) {
                let dv = delta(&c, &comps, &b).unwrap();
                if l <= 2 {
                    assert!(dv.abs() < 1e-13, "{b}: {dv}");
                }
                assert!(delta(&c, &gauss, &b).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pushforward_is_multilinear_in_rows() {
        let c = vec![vec![0.3, -1.2], vec![0.9, 0.4]];
        let comps = [ComponentDistribution::two_point(0.3).unwrap(), ComponentDistribution::UniformCentered];
        let beta = mi(&[3, 2]);
        let base = pushforward_moment(&c, &comps, &beta).unwrap();
        let s = 1.7;
        let scaled = vec![c[0].iter().map(|v| v * s).collect(), c[1].clone()];
        let v = pushforward_moment(&scaled, &comps, &beta).unwrap();
        assert!((v - s.powi(3) * base).abs() < 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn corollary_coeff_examples() {
        let m = iid1(37, ComponentDistribution::Rademacher);
        let (c, cb) = corollary_coeffs(&m, &mi(&[4]), 0, 0).unwrap();
        assert!((c + 2.0).abs() < 1e-14);
        assert_eq!(c, cb);
        let m2 = iid1(5, ComponentDistribution::UniformCentered);
        assert_eq!(corollary_coeffs(&m2, &mi(&[4]), 0, 0).unwrap().0, corollary_coeffs(&m2.with_n(500).unwrap(), &mi(&[4]), 0, 0).unwrap().0);
    }

    #[test]
    fn exact_sum_moment_rademacher() {
        let m = iid1(2, ComponentDistribution::Rademacher);
        assert!((exact_sum_moment(&m, &mi(&[4])).unwrap() - 2.0).abs() < 1e-14);
        for n in [1usize, 3, 10, 100, 1000] {
            let m = iid1(n, ComponentDistribution::Rademacher);
            let v = exact_sum_moment(&m, &mi(&[4])).unwrap();
            assert!((v - (3.0 - 2.0 / n as f64)).abs() < 1e-12, "n={n}: {v}");
            assert_eq!(exact_sum_moment(&m, &mi(&[5])).unwrap(), 0.0);
        }
        assert!(matches!(
            exact_sum_moment(&m, &mi(&[9])),
            Err(Error::OrderCap { .. })
        ));
    }

    /// Brute force over every joint outcome of up to four discrete summands.
    fn enumerate_discrete(model: &ModelSpec, beta: &MultiIndex) -> f64 {
        fn atoms(d: &ComponentDistribution) -> Vec<(f64, f64)> {
            match *d {
                ComponentDistribution::Rademacher => vec![(0.5, 1.0), (0.5, -1.0)],
                ComponentDistribution::TwoPoint { p, a, b } => vec![(p, a), (1.0 - p, b)],
                _ => panic!("discrete only"),
            }
        }
        // flat list of (summand, component) slots
        let mut slots = Vec::new();
        for k in 0..model.n() {
            for (j, comp) in model.summand(k).components.iter().enumerate() {
                slots.push((k, j, atoms(comp)));
            }
        }
        let mut total = 0.0;
        let mut choice = vec![0usize; slots.len()];
        loop {
            let mut prob = 1.0;
            let mut s = vec![0.0; model.d()];
            let mut ys: Vec<Vec<f64>> = (0..model.n()).map(|k| vec![0.0; model.summand(k).dim_in()]).collect();
            for (idx, (k, j, at)) in slots.iter().enumerate() {
                prob *= at[choice[idx]].0;
                ys[*k][*j] = at[choice[idx]].1;
            }
            for k in 0..model.n() {
                let c = &model.summand(k).c;
                for i in 0..model.d() {
                    s[i] += c[i].iter().zip(&ys[k]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let scale = 1.0 / (model.n() as f64).sqrt();
            let x: Vec<f64> = s.iter().map(|v| v * scale).collect();
            total += prob * beta.monomial(&x);
            // odometer
            let mut pos = 0;
            loop {
                if pos == slots.len() {
                    return total;
                }
                choice[pos] += 1;
                if choice[pos] < slots[pos].2.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn exact_sum_moment_matches_enumeration() {
        let summands = vec![
            Summand::new(
                vec![vec![1.0, 0.5], vec![-0.3, 0.8]],
                vec![ComponentDistribution::two_point(0.3).unwrap(), ComponentDistribution::Rademacher],
            )
            .unwrap(),
            Summand::new(
                vec![vec![0.7], vec![1.1]],
                vec![ComponentDistribution::two_point(0.8).unwrap()],
            )
            .unwrap(),
            Summand::new(
                vec![vec![0.2, 0.0], vec![0.0, -1.4]],
                vec![ComponentDistribution::Rademacher, ComponentDistribution::two_point(0.6).unwrap()],
            )
            .unwrap(),
            Summand::new(
                vec![vec![-0.9], vec![0.4]],
                vec![ComponentDistribution::two_point(0.15).unwrap()],
            )
            .unwrap(),
        ];
        let model = ModelSpec::from_summands(summands).unwrap();
        for l in 0..=5 {
            for b in enumerate(2, l) {
                let dp = exact_sum_moment(&model, &b).unwrap();
                let bf = enumerate_discrete(&model, &b);
                assert!((dp - bf).abs() < 1e-12 * (1.0 + bf.abs()), "{b}: {dp} vs {bf}");
            }
        }
    }

    #[test]
    fn second_moments_reproduce_average_covariance() {
        let summands = (0..6)
            .map(|k| {
                let t = k as f64 * 0.4;
                Summand::new(
                    vec![vec![t.cos(), 0.3 * t.sin()], vec![-t.sin(), 1.2]],
                    vec![ComponentDistribution::UniformCentered, ComponentDistribution::two_point(0.4).unwrap()],
                )
                .unwrap()
            })
            .collect();
        let model = ModelSpec::from_summands(summands).unwrap();
        let cov = model.average_covariance();
        assert!((exact_sum_moment(&model, &mi(&[2, 0])).unwrap() - cov[0][0]).abs() < 1e-13);
        assert!((exact_sum_moment(&model, &mi(&[1, 1])).unwrap() - cov[0][1]).abs() < 1e-13);
        assert!((exact_sum_moment(&model, &mi(&[0, 2])).unwrap() - cov[1][1]).abs() < 1e-13);
    }

    #[test]
    fn sampler_fourth_moment() {
        let m = iid1(10, ComponentDistribution::Rademacher);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..200_000).map(|_| m.sample_sum(&mut rng)[0].powi(4)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!((mean - 2.8).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn max_abs_moment_of_rademacher() {
        let m = iid1(4, ComponentDistribution::Rademacher);
        assert_eq!(max_abs_moment(&m, 4).unwrap(), 1.0);
        let g = iid1(4, ComponentDistribution::StandardNormal);
        assert_eq!(max_abs_moment(&g, 4).unwrap(), 3.0);
    }
}
