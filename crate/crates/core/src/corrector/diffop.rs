use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::multiindex::{enumerate, factorial, MultiIndex};
use crate::poly::Polynomial;

/// Constant-coefficient differential operator `Σ a(β) ∂_β`.
///
/// Coefficients are stored per multiplicity vector; an ordered-tuple sum such as
/// `Σ_{|α|=l} Δ(α) ∂_α` folds into `a(β) = weight(β) Δ(β)`. Composition is the
/// convolution of coefficient maps under [`MultiIndex::concat`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOp {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl DiffOp {
    pub fn zero(dim: usize) -> Self {
        DiffOp {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = DiffOp::zero(dim);
        op.add_term(MultiIndex::zero(dim), 1.0);
        op
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut op = DiffOp::zero(dim);
        for (b, c) in terms {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
            op.add_term(b, c);
        }
        Ok(op)
    }

    /// `D^{(l)} = Σ_{|α|=l} Δ(α) ∂_α` for one summand.
    pub fn moment_derivative(table: &MomentTable, dim: usize, l: usize) -> Self {
        let mut op = DiffOp::zero(dim);
        for b in enumerate(dim, l) {
            let delta = table.delta(&b);
            op.add_term(b.clone(), b.multinomial_weight() as f64 * delta);
        }
        op
    }

    /// `L_σ = Σ_{i,j} σ^{ij} ∂_i ∂_j`.
    pub fn laplacian(sigma: &[Vec<f64>]) -> Self {
        let d = sigma.len();
        let mut op = DiffOp::zero(d);
        for i in 0..d {
            for j in 0..d {
                let b = MultiIndex::unit(d, i)
                    .concat(&MultiIndex::unit(d, j))
                    .expect("same dimension");
                op.add_term(b, sigma[i][j]);
            }
        }
        op
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

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &DiffOp, s: f64) {
        assert_eq!(self.dim, other.dim);
        for (b, c) in other.terms() {
            self.add_term(b.clone(), s * c);
        }
    }

    pub fn scale(&self, s: f64) -> DiffOp {
        let mut out = DiffOp::zero(self.dim);
        out.add_scaled(self, s);
        out
    }

    pub fn compose(&self, other: &DiffOp) -> DiffOp {
        assert_eq!(self.dim, other.dim);
        let mut out = DiffOp::zero(self.dim);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_term(a.concat(b).expect("same dimension"), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> DiffOp {
        (0..k).fold(DiffOp::identity(self.dim), |acc, _| acc.compose(self))
    }

    /// `Σ a(β) ∂_β p`.
    pub fn apply(&self, p: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, p.dim());
        let mut out = Polynomial::zero(self.dim);
        for (b, c) in self.terms() {
            out = out.add(&p.derivative(b).scale(c));
        }
        out
    }
}

/// The per-summand factor `(1/l!) D^{(l)} · ((-1)^{l'} / (2^{l'} l'!)) L_σ^{l'}`.
pub(crate) fn slot_operator(table: &MomentTable, sigma: &[Vec<f64>], l: usize, lp: usize) -> DiffOp {
    let d = sigma.len();
    let dl = DiffOp::moment_derivative(table, d, l);
    if dl.is_zero() {
        return dl;
    }
    let sign = if lp % 2 == 1 { -1.0 } else { 1.0 };
    let scalar = sign / (factorial(l) * 2f64.powi(lp as i32) * factorial(lp));
    let lap = DiffOp::laplacian(sigma).pow(lp);
    dl.compose(&lap).scale(scalar)
}
