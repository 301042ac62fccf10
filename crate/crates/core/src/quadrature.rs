//! Gauss–Hermite rules for the standard normal weight.
//!
//! Nodes and weights come from the eigen-decomposition of the symmetric
//! tridiagonal Jacobi matrix of the probabilists' Hermite recurrence
//! (Golub–Welsch): off-diagonal entries `√k`, zero diagonal. The weights are the
//! squared first components of the normalized eigenvectors, so they sum to one.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 40;
pub const MAX_QUADRATURE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::arg("nodes", "at least one node is required"));
        }
        let jacobi = DMatrix::from_fn(count, count, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..count)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize to remove the eigensolver's last-bit asymmetry
        let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        for i in 0..count / 2 {
            let j = count - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if count % 2 == 1 {
            nodes[count / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(GaussHermite { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[g(W)]` for a standard Gaussian `W` in `R^d` by the tensor-product rule.
    pub fn expectation(&self, d: usize, mut g: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        if d == 0 || d > MAX_QUADRATURE_DIM {
            return Err(Error::arg(
                "d",
                format!("tensor quadrature supports 1 ≤ d ≤ {MAX_QUADRATURE_DIM}"),
            ));
        }
        let q = self.len();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let mut acc = 0.0;
        loop {
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                x[k] = self.nodes[i];
                w *= self.weights[i];
            }
            acc += w * g(&x);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < q {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return Ok(acc);
                }
            }
        }
    }
}

/// `E[g(W)]` with `count` nodes per axis, cross-checked against `2·count` nodes.
///
/// Fails with [`Error::QuadratureNotConverged`] when the two rules differ by more than
/// `tolerance · max(1, |value|)`.
pub fn checked_expectation(
    d: usize,
    count: usize,
    tolerance: f64,
    mut g: impl FnMut(&[f64]) -> f64,
) -> Result<f64> {
    let coarse = GaussHermite::new(count)?.expectation(d, &mut g)?;
    let fine = GaussHermite::new(2 * count)?.expectation(d, &mut g)?;
    let change = (fine - coarse).abs();
    if change > tolerance * coarse.abs().max(1.0) {
        return Err(Error::QuadratureNotConverged { change, tolerance });
    }
    Ok(coarse)
}

/// Adaptive Simpson rule on `[a, b]`, refined until the local change is below
/// `tolerance` relative to the first coarse estimate.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tolerance: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 50;
    const MAX_EVALUATIONS: usize = 2_000_000;

    struct Ctx<'a> {
        f: &'a dyn Fn(f64) -> f64,
        evaluations: usize,
    }

    fn rec(
        ctx: &mut Ctx<'_>,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        ctx.evaluations += 2;
        if ctx.evaluations > MAX_EVALUATIONS {
            return None;
        }
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((ctx.f)(lm), (ctx.f)(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let change = left + right - whole;
        if change.abs() <= 15.0 * tol {
            return Some(left + right + change / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            rec(ctx, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)?
                + rec(ctx, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)?,
        )
    }

    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    let mut ctx = Ctx { f: &f, evaluations: 3 };
    rec(&mut ctx, (a, fa), (m, fm), (b, fb), whole, tolerance * scale, MAX_DEPTH).ok_or(
        Error::QuadratureNotConverged {
            change: f64::NAN,
            tolerance,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::double_factorial;

    #[test]
    fn weights_sum_to_one_and_nodes_symmetric() {
        for q in [1, 2, 5, 40, 80] {
            let gh = GaussHermite::new(q).unwrap();
            let s: f64 = gh.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            for i in 0..q {
                assert_eq!(gh.nodes()[i], -gh.nodes()[q - 1 - i]);
            }
        }
    }

    #[test]
    fn two_point_rule() {
        let gh = GaussHermite::new(2).unwrap();
        assert!((gh.nodes()[1] - 1.0).abs() < 1e-14);
        assert!((gh.weights()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integrates_moments_exactly() {
        let gh = GaussHermite::new(20).unwrap();
        for k in 0..=30usize {
            let got = gh.expectation(1, |x| x[0].powi(k as i32)).unwrap();
            let scale = double_factorial(k as i64 - 1);
            let want = if k % 2 == 1 { 0.0 } else { scale };
            assert!((got - want).abs() <= 1e-10 * scale, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn tensor_rule_and_cosine() {
        let v = checked_expectation(2, 40, 1e-12, |x| (x[0] + 2.0 * x[1]).cos()).unwrap();
        assert!((v - (-2.5f64).exp()).abs() < 1e-13);
        let v3 = GaussHermite::new(10)
            .unwrap()
            .expectation(3, |x| x[0] * x[0] * x[1] * x[1] * x[2] * x[2])
            .unwrap();
        assert!((v3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_examples() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let e = adaptive_simpson(|x| (-x * x).exp(), -6.0, 6.0, 1e-10).unwrap();
        assert!((e - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-8).unwrap(), 0.0);
        let bad = adaptive_simpson(|x| if x < 0.3 { f64::NAN } else { 1.0 }, 0.0, 1.0, 1e-8);
        assert!(matches!(bad, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn non_convergence_flagged() {
        // a narrow spike at the origin: three nodes put weight 2/3 on it, six nodes miss it
        let r = checked_expectation(1, 3, 1e-8, |x| (-(50.0 * x[0]).powi(2)).exp());
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
        assert!(GaussHermite::new(5).unwrap().expectation(4, |_| 1.0).is_err());
    }
}
