use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::moments::{ModelMoments, ModelSpec};
use crate::multiindex::binomial;

use super::diffop::{slot_operator, DiffOp};
use super::series::{hermitize, CorrectorPolynomial, HermiteSeries};

/// Largest expansion order accepted by [`corrector`] and [`gamma_operator`].
pub const MAX_EXPANSION_ORDER: usize = 4;

/// One slot `(l, l')`: a moment derivative of order `l` and `l'` Laplacians.
pub type Slot = (usize, usize);

/// All `((l_1,l'_1),…,(l_m,l'_m))` with `3 ≤ l_i ≤ N+2`, `0 ≤ l'_i ≤ ⌊N/2⌋` and
/// `Σ l_i + 2 Σ l'_i = k + 2m`, in lexicographic order.
pub fn lambda_sets(m: usize, k: usize, order: usize) -> Vec<Vec<Slot>> {
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    let mut cur = Vec::with_capacity(m);
    extend(&mut cur, m, k + 2 * m, order, &mut out);
    out
}

fn extend(cur: &mut Vec<Slot>, m: usize, remaining: usize, order: usize, out: &mut Vec<Vec<Slot>>) {
    let left = m - cur.len();
    if left == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // every later slot needs at least 3
    for l in 3..=order + 2 {
        for lp in 0..=order / 2 {
            let used = l + 2 * lp;
            if used + 3 * (left - 1) > remaining {
                continue;
            }
            cur.push((l, lp));
            extend(cur, m, remaining - used, order, out);
            cur.pop();
        }
    }
}

fn check_orders(k: usize, order: usize) -> Result<()> {
    if order > MAX_EXPANSION_ORDER {
        return Err(Error::OrderCap {
            order,
            cap: MAX_EXPANSION_ORDER,
        });
    }
    if k == 0 || k > order {
        return Err(Error::arg("k", format!("must satisfy 1 ≤ k ≤ N = {order}, got {k}")));
    }
    Ok(())
}

/// `Γ_{n,k}` for an expansion of order `N`.
pub fn gamma_operator(model: &ModelSpec, k: usize, order: usize) -> Result<DiffOp> {
    check_orders(k, order)?;
    let mm = ModelMoments::new(model, order + 2);
    Ok(GammaBuilder::new(&mm, order).gamma(k))
}

/// Caches the per-summand slot operators shared by every `Γ_{n,k}` of one expansion.
pub(crate) struct GammaBuilder<'a> {
    mm: &'a ModelMoments,
    order: usize,
    slots: HashMap<Slot, Vec<DiffOp>>,
}

impl<'a> GammaBuilder<'a> {
    pub(crate) fn new(mm: &'a ModelMoments, order: usize) -> Self {
        GammaBuilder {
            mm,
            order,
            slots: HashMap::new(),
        }
    }

    fn records(&self) -> usize {
        if self.mm.is_iid() {
            1
        } else {
            self.mm.n()
        }
    }

    fn slot(&mut self, s: Slot) -> &[DiffOp] {
        let mm = self.mm;
        let records = self.records();
        self.slots.entry(s).or_insert_with(|| {
            (0..records)
                .map(|r| slot_operator(mm.table(r), mm.covariance(r), s.0, s.1))
                .collect()
        })
    }

    pub(crate) fn gamma(&mut self, k: usize) -> DiffOp {
        let d = self.mm.d();
        let n = self.mm.n();
        let mut total = DiffOp::zero(d);
        for m in 1..=k.min(n) {
            let scale = (n as f64).powi(-(m as i32));
            for tuple in lambda_sets(m, k, self.order) {
                let ops: Vec<Vec<DiffOp>> = tuple.iter().map(|&s| self.slot(s).to_vec()).collect();
                let part = if self.mm.is_iid() {
                    let prod = ops.iter().fold(DiffOp::identity(d), |acc, o| acc.compose(&o[0]));
                    prod.scale(binomial(n, m))
                } else {
                    increasing_tuple_sum(&ops, n)
                };
                total.add_scaled(&part, scale);
            }
        }
        total
    }
}

/// `Σ_{r_1<…<r_m} Π_j T_{j, r_j}` by a dynamic program over `r`:
/// `Q_j ← Q_j + Q_{j-1} ∘ T_{j,r}`, updating `j` from `m` down to `1`.
fn increasing_tuple_sum(ops: &[Vec<DiffOp>], n: usize) -> DiffOp {
    let m = ops.len();
    let d = ops[0][0].dim();
    let mut q: Vec<DiffOp> = (0..=m).map(|_| DiffOp::zero(d)).collect();
    q[0] = DiffOp::identity(d);
    for r in 0..n {
        for j in (1..=m.min(r + 1)).rev() {
            let t = &ops[j - 1][r];
            if t.is_zero() || q[j - 1].is_zero() {
                continue;
            }
            let step = q[j - 1].compose(t);
            q[j].add_scaled(&step, 1.0);
        }
    }
    q.pop().expect("m ≥ 1")
}

/// `Φ_{n,N} = 1 + Σ_{k=1}^N n^{-k/2} H_{Γ_{n,k}}`.
pub fn corrector(model: &ModelSpec, order: usize) -> Result<CorrectorPolynomial> {
    if order > MAX_EXPANSION_ORDER {
        return Err(Error::OrderCap {
            order,
            cap: MAX_EXPANSION_ORDER,
        });
    }
    let terms = corrector_terms(model, order)?;
    let n = model.n();
    let mut series = HermiteSeries::zero(model.d());
    for (k, h) in terms.iter().enumerate() {
        series.add_scaled(h, (n as f64).powf(-((k + 1) as f64) / 2.0));
    }
    Ok(CorrectorPolynomial::new(n, order, 1.0, series))
}

/// `[H_{Γ_{n,1}}, …, H_{Γ_{n,N}}]`.
pub fn corrector_terms(model: &ModelSpec, order: usize) -> Result<Vec<HermiteSeries>> {
    if order == 0 {
        return Ok(Vec::new());
    }
    check_orders(1, order)?;
    let mm = ModelMoments::new(model, order + 2);
    let mut builder = GammaBuilder::new(&mm, order);
    Ok((1..=order).map(|k| hermitize(&builder.gamma(k))).collect())
}
