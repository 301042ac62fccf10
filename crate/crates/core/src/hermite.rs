//! Probabilists' Hermite polynomials `H_m(x) = (-1)^m e^{x²/2} dᵐ/dxᵐ e^{-x²/2}`
//! and their tensor products `H_β(x) = Π_i H_{β_i}(x_i)`.

use serde::{Deserialize, Serialize};

use crate::multiindex::{double_factorial, MultiIndex};
use crate::poly::Polynomial;

/// Dense one-variable polynomial, `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly1D {
    coeffs: Vec<f64>,
}

impl Poly1D {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly1D { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly1D {
        Poly1D::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// `x · p(x)`
    pub fn shift(&self) -> Poly1D {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(0.0);
        c.extend_from_slice(&self.coeffs);
        Poly1D::new(c)
    }

    pub fn sub(&self, other: &Poly1D) -> Poly1D {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly1D::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        - other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly1D {
        Poly1D::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Coefficients of `H_m` from `H_{m+1} = x H_m - m H_{m-1}`.
pub fn hermite1d(m: usize) -> Poly1D {
    let mut prev = Poly1D::new(vec![1.0]);
    if m == 0 {
        return prev;
    }
    let mut cur = Poly1D::new(vec![0.0, 1.0]);
    for k in 1..m {
        let next = cur.shift().sub(&prev.scale(k as f64));
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_m(x)` by the three-term recurrence.
pub fn hermite_value(m: usize, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..m {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_β(x)`, the product of one-dimensional values over coordinates.
pub fn hermite_eval(beta: &MultiIndex, x: &[f64]) -> f64 {
    assert_eq!(beta.dim(), x.len(), "dimension mismatch");
    x.iter()
        .enumerate()
        .map(|(i, &xi)| hermite_value(beta.get(i), xi))
        .product()
}

/// `H_β` expanded in the monomial basis.
pub fn hermite_poly(beta: &MultiIndex) -> Polynomial {
    let d = beta.dim();
    let mut out = Polynomial::constant(d, 1.0);
    for i in 0..d {
        let h = hermite1d(beta.get(i));
        let mut factor = Polynomial::zero(d);
        for (k, &c) in h.coeffs().iter().enumerate() {
            let mut e = vec![0u32; d];
            e[i] = k as u32;
            factor.add_term(MultiIndex::new(e).unwrap(), c);
        }
        out = out.mul(&factor);
    }
    out
}

/// `E[W^β]` for a standard Gaussian vector: `Π_i (β_i - 1)!!` when every `β_i` is even.
pub fn gaussian_moment(beta: &MultiIndex) -> f64 {
    beta.mult()
        .iter()
        .map(|&b| {
            if b % 2 == 1 {
                0.0
            } else {
                double_factorial(b as i64 - 1)
            }
        })
        .product()
}

/// `E[H_{β1}(W) H_{β2}(W)]`, computed from the monomial expansions.
pub fn hermite_inner(b1: &MultiIndex, b2: &MultiIndex) -> f64 {
    hermite_poly(b1).mul(&hermite_poly(b2)).gaussian_expectation()
}

/// Both sides of `E[∂_β f(W)] = E[f(W) H_β(W)]`, each evaluated exactly.
pub fn duality_check(beta: &MultiIndex, f: &Polynomial) -> (f64, f64) {
    let lhs = f.derivative(beta).gaussian_expectation();
    let rhs = f.mul(&hermite_poly(beta)).gaussian_expectation();
    (lhs, rhs)
}
