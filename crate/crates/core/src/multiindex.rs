//! Multi-indices in multiplicity form.
//!
//! An ordered tuple `α = (α_1, …, α_l)` of coordinates in `{1, …, d}` is stored
//! by its per-coordinate counts `β_i = #{j : α_j = i}`. Every quantity built in
//! this crate (moment differences, Hermite polynomials, derivatives) depends on
//! `α` only through these counts, so sums over ordered tuples become sums over
//! multiplicity vectors weighted by [`MultiIndex::multinomial_weight`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest order for which `|β|!` fits comfortably in a `u64`.
pub const MAX_WEIGHT_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(mult: Vec<u32>) -> Result<Self> {
        if mult.is_empty() {
            return Err(Error::arg("multiindex", "dimension must be at least 1"));
        }
        Ok(MultiIndex(mult))
    }

    pub fn zero(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        MultiIndex(vec![0; d])
    }

    /// `e_i`, the index of a single first-order derivative in coordinate `i` (0-based).
    pub fn unit(d: usize, i: usize) -> Self {
        let mut m = MultiIndex::zero(d);
        m.0[i] = 1;
        m
    }

    /// Collapse an ordered tuple of 0-based coordinates into multiplicity form.
    pub fn from_tuple(d: usize, tuple: &[usize]) -> Result<Self> {
        let mut m = MultiIndex::zero(d);
        for &c in tuple {
            if c >= d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c + 1,
                });
            }
            m.0[c] += 1;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn mult(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Concatenation `(α, β)` of the underlying tuples: entrywise sum of counts.
    pub fn concat(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `self - other` when `other ≤ self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Number of ordered tuples with these counts: `|β|! / Π β_i!`.
    pub fn multinomial_weight(&self) -> u64 {
        assert!(
            self.order() <= MAX_WEIGHT_ORDER,
            "multinomial weight requested for order {} > {}",
            self.order(),
            MAX_WEIGHT_ORDER
        );
        // product of binomials avoids the intermediate |β|!
        let mut acc: u64 = 1;
        let mut seen: u64 = 0;
        for &b in &self.0 {
            for j in 1..=b as u64 {
                seen += 1;
                acc = acc * seen / j;
            }
        }
        acc
    }

    /// `Π β_i!`, the squared norm of `H_β` under the standard Gaussian.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&b| factorial(b as usize)).product()
    }

    /// All `γ ≤ self` componentwise, in ascending lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for &b in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
            for prefix in &out {
                for v in 0..=b {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// `x^β = Π x_i^{β_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.0
            .iter()
            .zip(x)
            .map(|(&b, &xi)| xi.powi(b as i32))
            .product()
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Every multi-index of dimension `d` and order `l`, once each, in descending
/// lexicographic order of the multiplicity vector: `(l,0,…) , (l-1,1,…), …`.
pub fn enumerate(d: usize, l: usize) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, l, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v as u32;
        fill(cur, pos + 1, remaining - v, out);
    }
}

/// Every multi-index of dimension `d` with order at most `l`, grouped by order.
pub fn enumerate_up_to(d: usize, l: usize) -> Vec<MultiIndex> {
    (0..=l).flat_map(|k| enumerate(d, k)).collect()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(n-1)!!` style double factorial of `n`: `n · (n-2) · …`, with `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}
