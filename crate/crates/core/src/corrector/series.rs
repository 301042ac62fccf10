use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hermite_eval, hermite_poly};
use crate::multiindex::MultiIndex;
use crate::poly::Polynomial;

use super::diffop::DiffOp;

/// `Σ a(β) H_β(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl HermiteSeries {
    pub fn zero(dim: usize) -> Self {
        HermiteSeries {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut s = HermiteSeries::zero(dim);
        for (b, c) in terms {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
            s.add_term(b, c);
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(b, &c)| (b, c))
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.terms.get(beta).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn add_term(&mut self, beta: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(beta).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn add_scaled(&mut self, other: &HermiteSeries, s: f64) {
        assert_eq!(self.dim, other.dim);
        for (b, c) in other.terms() {
            self.add_term(b.clone(), s * c);
        }
    }

    pub fn sub(&self, other: &HermiteSeries) -> HermiteSeries {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn scale(&self, s: f64) -> HermiteSeries {
        let mut out = HermiteSeries::zero(self.dim);
        out.add_scaled(self, s);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms().map(|(b, c)| c * hermite_eval(b, x)).sum()
    }

    /// The same function in the monomial basis.
    pub fn to_polynomial(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (b, c) in self.terms() {
            out = out.add(&hermite_poly(b).scale(c));
        }
        out
    }
}

/// `H_Γ`: the coefficients of `Γ = Σ a(β) ∂_β` reread in the Hermite basis, so that
/// `E[Γ f(W)] = E[f(W) H_Γ(W)]`.
pub fn hermitize(op: &DiffOp) -> HermiteSeries {
    HermiteSeries {
        dim: op.dim(),
        terms: op.terms().map(|(b, c)| (b.clone(), c)).collect(),
    }
}

/// `Φ_{n,N}(x) = constant + Σ a(β) H_β(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrectorRepr", into = "CorrectorRepr")]
pub struct CorrectorPolynomial {
    n: usize,
    order: usize,
    constant: f64,
    series: HermiteSeries,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrectorRepr {
    d: usize,
    n: usize,
    #[serde(rename = "N")]
    order: usize,
    constant: f64,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRepr {
    beta: MultiIndex,
    coeff: f64,
}

impl TryFrom<CorrectorRepr> for CorrectorPolynomial {
    type Error = Error;

    fn try_from(r: CorrectorRepr) -> Result<Self> {
        if r.d == 0 {
            return Err(Error::arg("d", "dimension must be at least 1"));
        }
        let series = HermiteSeries::from_terms(r.d, r.terms.into_iter().map(|t| (t.beta, t.coeff)))?;
        Ok(CorrectorPolynomial {
            n: r.n,
            order: r.order,
            constant: r.constant,
            series,
        })
    }
}

impl From<CorrectorPolynomial> for CorrectorRepr {
    fn from(p: CorrectorPolynomial) -> Self {
        CorrectorRepr {
            d: p.series.dim,
            n: p.n,
            order: p.order,
            constant: p.constant,
            terms: p
                .series
                .terms
                .into_iter()
                .map(|(beta, coeff)| TermRepr { beta, coeff })
                .collect(),
        }
    }
}

impl CorrectorPolynomial {
    pub fn new(n: usize, order: usize, constant: f64, series: HermiteSeries) -> Self {
        CorrectorPolynomial {
            n,
            order,
            constant,
            series,
        }
    }

    /// `Φ ≡ 1`, the plain Gaussian approximation.
    pub fn one(dim: usize, n: usize) -> Self {
        CorrectorPolynomial::new(n, 0, 1.0, HermiteSeries::zero(dim))
    }

    pub fn dim(&self) -> usize {
        self.series.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn series(&self) -> &HermiteSeries {
        &self.series
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.series.coeff(beta)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.series.eval(x)
    }

    /// `E[Φ(W)]`; every non-constant Hermite polynomial has mean zero.
    pub fn expectation(&self) -> f64 {
        self.constant
    }

    pub fn to_polynomial(&self) -> Polynomial {
        self.series
            .to_polynomial()
            .add(&Polynomial::constant(self.dim(), self.constant))
    }
}
