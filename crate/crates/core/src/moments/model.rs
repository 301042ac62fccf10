use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distribution::ComponentDistribution;
use crate::error::{Error, Result};
use crate::multiindex::{enumerate_up_to, MultiIndex};
use crate::poly::Polynomial;

const NORMALIZATION_TOL: f64 = 1e-10;

/// One summand `C Y` with `C` a `d × m` matrix and `Y` made of `m` independent components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summand {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub components: Vec<ComponentDistribution>,
}

impl Summand {
    pub fn new(c: Vec<Vec<f64>>, components: Vec<ComponentDistribution>) -> Result<Self> {
        let s = Summand { c, components };
        s.validate(None)?;
        Ok(s)
    }

    /// `C = scale · Id_d` with every component drawn from `dist`.
    pub fn scaled_identity(d: usize, scale: f64, dist: ComponentDistribution) -> Self {
        let c = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect();
        Summand {
            c,
            components: vec![dist; d],
        }
    }

    pub fn identity(d: usize, dist: ComponentDistribution) -> Self {
        Summand::scaled_identity(d, 1.0, dist)
    }

    pub fn dim_out(&self) -> usize {
        self.c.len()
    }

    pub fn dim_in(&self) -> usize {
        self.components.len()
    }

    fn validate(&self, d: Option<usize>) -> Result<()> {
        let rows = self.c.len();
        if rows == 0 {
            return Err(Error::InvalidModel("summand matrix has no rows".into()));
        }
        if let Some(d) = d {
            if rows != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rows,
                });
            }
        }
        let m = self.components.len();
        if m == 0 {
            return Err(Error::InvalidModel("summand has no components".into()));
        }
        for row in &self.c {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("non-finite matrix entry".into()));
            }
        }
        for comp in &self.components {
            comp.validate()?;
        }
        Ok(())
    }

    /// `σ = C Cᵀ`, the covariance of `C Y`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim_out();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.c[i].iter().zip(&self.c[j]).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }

    /// Draws `C Y` into `out` using `scratch` (length `m`) for the components.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        for (y, comp) in scratch.iter_mut().zip(&self.components) {
            *y = comp.sample(rng);
        }
        for (o, row) in out.iter_mut().zip(&self.c) {
            *o = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.components.iter().all(|c| c.is_symmetric())
    }

    pub fn is_gaussian(&self) -> bool {
        self.components.iter().all(|c| c.is_gaussian())
    }

    /// Linear forms `y ↦ (C y)_i` as polynomials in the `m` inputs.
    fn row_forms(&self) -> Vec<Polynomial> {
        let m = self.dim_in();
        self.c
            .iter()
            .map(|row| {
                Polynomial::from_terms(
                    m,
                    row.iter()
                        .enumerate()
                        .map(|(j, &v)| (MultiIndex::unit(m, j), v)),
                )
                .expect("matching dimension")
            })
            .collect()
    }

    /// `E[(C Y)^β]` and `E[(C G)^β]` for every `|β| ≤ max_order`.
    pub fn moment_table(&self, max_order: usize) -> MomentTable {
        let d = self.dim_out();
        let forms = self.row_forms();
        let gaussian = vec![ComponentDistribution::StandardNormal; self.dim_in()];
        let mut polys: BTreeMap<MultiIndex, Polynomial> = BTreeMap::new();
        let mut entries = BTreeMap::new();
        for beta in enumerate_up_to(d, max_order) {
            let p = if beta.is_zero() {
                Polynomial::constant(self.dim_in(), 1.0)
            } else {
                let i = (0..d).find(|&i| beta.get(i) > 0).unwrap();
                let parent = beta.checked_sub(&MultiIndex::unit(d, i)).unwrap();
                polys[&parent].mul(&forms[i])
            };
            let y = expect_product(&p, &self.components);
            let g = expect_product(&p, &gaussian);
            entries.insert(beta.clone(), (y, g));
            polys.insert(beta, p);
        }
        MomentTable { max_order, entries }
    }
}

/// `E[p(Y)]` for a polynomial in independent components.
pub(crate) fn expect_product(p: &Polynomial, comps: &[ComponentDistribution]) -> f64 {
    p.terms()
        .map(|(g, c)| {
            c * comps
                .iter()
                .enumerate()
                .map(|(j, comp)| comp.raw_moment(g.get(j)))
                .product::<f64>()
        })
        .sum()
}

/// Pushforward moments of one summand and of its Gaussian surrogate.
#[derive(Debug, Clone)]
pub struct MomentTable {
    max_order: usize,
    entries: BTreeMap<MultiIndex, (f64, f64)>,
}

impl MomentTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn get(&self, beta: &MultiIndex) -> (f64, f64) {
        *self
            .entries
            .get(beta)
            .unwrap_or_else(|| panic!("moment {beta} beyond table order {}", self.max_order))
    }

    /// `E[(C Y)^β]`
    pub fn y(&self, beta: &MultiIndex) -> f64 {
        self.get(beta).0
    }

    /// `E[(C G)^β]`
    pub fn g(&self, beta: &MultiIndex) -> f64 {
        self.get(beta).1
    }

    /// `Δ(β) = E[(C Y)^β] - E[(C G)^β]`, exactly zero for `|β| ≤ 2`.
    pub fn delta(&self, beta: &MultiIndex) -> f64 {
        if beta.order() <= 2 {
            return 0.0;
        }
        let (y, g) = self.get(beta);
        y - g
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecRepr {
    d: usize,
    n: usize,
    summands: Vec<Summand>,
    #[serde(default)]
    iid: bool,
    #[serde(default)]
    normalized: bool,
}

/// A problem instance `S_n = n^{-1/2} Σ_k C_{n,k} Y_k`.
///
/// When `iid` is set a single summand record stands for all `n` summands.
/// When `normalized` is set the model is checked for `(1/n) Σ σ_{n,k} = Id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecRepr")]
pub struct ModelSpec {
    d: usize,
    n: usize,
    summands: Vec<Summand>,
    iid: bool,
    normalized: bool,
}

impl TryFrom<ModelSpecRepr> for ModelSpec {
    type Error = Error;

    fn try_from(r: ModelSpecRepr) -> Result<Self> {
        let m = ModelSpec {
            d: r.d,
            n: r.n,
            summands: r.summands,
            iid: r.iid,
            normalized: r.normalized,
        };
        m.validate()?;
        Ok(m)
    }
}

impl ModelSpec {
    pub fn iid(n: usize, summand: Summand) -> Result<Self> {
        let m = ModelSpec {
            d: summand.dim_out(),
            n,
            summands: vec![summand],
            iid: true,
            normalized: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_summands(summands: Vec<Summand>) -> Result<Self> {
        let d = summands.first().map(|s| s.dim_out()).unwrap_or(0);
        let m = ModelSpec {
            d,
            n: summands.len(),
            summands,
            iid: false,
            normalized: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// Marks the model as satisfying the normalization condition, verifying it.
    pub fn require_normalized(mut self) -> Result<Self> {
        self.normalized = true;
        self.validate()?;
        Ok(self)
    }

    /// Same summand law with a different number of summands (iid models only).
    pub fn with_n(&self, n: usize) -> Result<Self> {
        if !self.iid {
            return Err(Error::InvalidModel(
                "with_n is only defined for iid models".into(),
            ));
        }
        let mut m = self.clone();
        m.n = n;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidModel("dimension d must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidModel("n must be at least 1".into()));
        }
        let expected = if self.iid { 1 } else { self.n };
        if self.summands.len() != expected {
            return Err(Error::InvalidModel(format!(
                "expected {expected} summand records, found {}",
                self.summands.len()
            )));
        }
        for s in &self.summands {
            s.validate(Some(self.d))?;
        }
        if self.normalized {
            let dev = self.normalization_defect();
            if dev > NORMALIZATION_TOL {
                return Err(Error::InvalidModel(format!(
                    "normalization condition violated by {dev:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_iid(&self) -> bool {
        self.iid
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Distinct summand records (one for iid models).
    pub fn records(&self) -> &[Summand] {
        &self.summands
    }

    /// Summand `k` in `0..n`.
    pub fn summand(&self, k: usize) -> &Summand {
        assert!(k < self.n, "summand index {k} out of range");
        if self.iid {
            &self.summands[0]
        } else {
            &self.summands[k]
        }
    }

    pub fn covariance(&self, k: usize) -> Vec<Vec<f64>> {
        self.summand(k).covariance()
    }

    /// `Σ_n = (1/n) Σ_k σ_{n,k}`.
    pub fn average_covariance(&self) -> Vec<Vec<f64>> {
        let d = self.d;
        let mut acc = vec![vec![0.0; d]; d];
        for s in &self.summands {
            let cov = s.covariance();
            for i in 0..d {
                for j in 0..d {
                    acc[i][j] += cov[i][j];
                }
            }
        }
        let count = self.summands.len() as f64;
        for row in &mut acc {
            for v in row.iter_mut() {
                *v /= count;
            }
        }
        acc
    }

    /// Max-norm distance of `Σ_n` from the identity.
    pub fn normalization_defect(&self) -> f64 {
        let cov = self.average_covariance();
        let mut dev: f64 = 0.0;
        for (i, row) in cov.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((v - target).abs());
            }
        }
        dev
    }

    /// Smallest and largest eigenvalue of `Σ_n`.
    pub fn covariance_spectrum(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(to_dmatrix(&self.average_covariance()));
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn is_symmetric(&self) -> bool {
        self.summands.iter().all(|s| s.is_symmetric())
    }

    pub fn is_gaussian(&self) -> bool {
        self.summands.iter().all(|s| s.is_gaussian())
    }

    /// Replaces every `C_{n,k}` by `T C_{n,k}`.
    pub fn transform(&self, t: &[Vec<f64>]) -> Result<Self> {
        let summands = self
            .summands
            .iter()
            .map(|s| {
                let c = t
                    .iter()
                    .map(|trow| {
                        (0..s.dim_in())
                            .map(|j| trow.iter().zip(&s.c).map(|(a, crow)| a * crow[j]).sum())
                            .collect()
                    })
                    .collect();
                Summand {
                    c,
                    components: s.components.clone(),
                }
            })
            .collect();
        let m = ModelSpec {
            d: t.len(),
            n: self.n,
            summands,
            iid: self.iid,
            normalized: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// One draw of `S_n`.
    pub fn sample_sum<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        let mut buf = SampleBuffers::new(self);
        self.sample_sum_into(rng, &mut buf, &mut out);
        out
    }

    pub fn sample_sum_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        buf: &mut SampleBuffers,
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.n {
            let s = self.summand(k);
            let scratch = &mut buf.components[..s.dim_in()];
            s.sample_into(rng, scratch, &mut buf.term);
            for (o, t) in out.iter_mut().zip(&buf.term) {
                *o += t;
            }
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Reusable scratch space for [`ModelSpec::sample_sum_into`].
#[derive(Debug, Clone)]
pub struct SampleBuffers {
    components: Vec<f64>,
    term: Vec<f64>,
}

impl SampleBuffers {
    pub fn new(model: &ModelSpec) -> Self {
        let m = model.records().iter().map(|s| s.dim_in()).max().unwrap_or(0);
        SampleBuffers {
            components: vec![0.0; m],
            term: vec![0.0; model.d()],
        }
    }
}

pub(crate) fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    DMatrix::from_fn(rows, cols, |i, j| m[i][j])
}
