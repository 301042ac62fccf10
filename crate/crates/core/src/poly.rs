//! Multivariate polynomials in the monomial basis.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::gaussian_moment;
use crate::multiindex::MultiIndex;

/// `Σ a(β) x^β`, keyed by the monomial exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRepr {
    beta: MultiIndex,
    coeff: f64,
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;

    fn try_from(r: PolynomialRepr) -> Result<Self> {
        let mut p = Polynomial::zero(r.dim);
        for t in r.terms {
            if t.beta.dim() != r.dim {
                return Err(Error::DimensionMismatch {
                    expected: r.dim,
                    found: t.beta.dim(),
                });
            }
            p.add_term(t.beta, t.coeff);
        }
        Ok(p)
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            dim: p.dim,
            terms: p
                .terms
                .into_iter()
                .map(|(beta, coeff)| TermRepr { beta, coeff })
                .collect(),
        }
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn monomial(beta: MultiIndex, coeff: f64) -> Self {
        let mut p = Polynomial::zero(beta.dim());
        p.add_term(beta, coeff);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut p = Polynomial::zero(dim);
        for (beta, c) in terms {
            if beta.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: beta.dim(),
                });
            }
            p.add_term(beta, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.terms.get(beta).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|b| b.order()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, beta: MultiIndex, c: f64) {
        debug_assert_eq!(beta.dim(), self.dim);
        if c == 0.0 {
            return;
        }
        match self.terms.entry(beta) {
            Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (b, c) in other.terms() {
            out.add_term(b.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (b, c) in self.terms() {
            out.add_term(b.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim);
        let mut out = Polynomial::zero(self.dim);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_term(a.concat(b).expect("same dimension"), ca * cb);
            }
        }
        out
    }

    /// `∂_γ p`.
    pub fn derivative(&self, gamma: &MultiIndex) -> Polynomial {
        assert_eq!(self.dim, gamma.dim());
        let mut out = Polynomial::zero(self.dim);
        for (b, c) in self.terms() {
            if let Some(rest) = b.checked_sub(gamma) {
                let falling: f64 = (0..self.dim)
                    .map(|i| falling_factorial(b.get(i), gamma.get(i)))
                    .product();
                out.add_term(rest, c * falling);
            }
        }
        out
    }

    /// Gaussian adjoint of `∂_γ`: the polynomial `q` with `E[∂_γ f(W) p(W)] = E[f(W) q(W)]`,
    /// obtained by applying `p ↦ x_i p - ∂_i p` once per unit of `γ_i`.
    pub fn gaussian_adjoint(&self, gamma: &MultiIndex) -> Polynomial {
        let mut cur = self.clone();
        for i in 0..self.dim {
            let e = MultiIndex::unit(self.dim, i);
            for _ in 0..gamma.get(i) {
                let shifted = Polynomial::from_terms(
                    self.dim,
                    cur.terms().map(|(b, c)| (b.concat(&e).unwrap(), c)),
                )
                .unwrap();
                cur = shifted.add(&cur.derivative(&e).scale(-1.0));
            }
        }
        cur
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.terms().map(|(b, c)| c * b.monomial(x)).sum()
    }

    /// `E[p(W)]` for a standard Gaussian `W` in `R^d`, exactly from Gaussian moments.
    pub fn gaussian_expectation(&self) -> f64 {
        self.terms().map(|(b, c)| c * gaussian_moment(b)).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|j| (n - j) as f64).product()
}
