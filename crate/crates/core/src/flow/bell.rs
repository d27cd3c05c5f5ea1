//! Differential polynomials `P_n` with `∂ⁿ exp(h) = exp(h) P_n(h)`.
//!
//! A monomial `Q_I = (∂h)^{i₁} (∂²h)^{i₂} ⋯ (∂ⁿh)^{iₙ}` is keyed by its
//! multi-index `I = (i₁, …, iₙ)` with `Σ r·i_r = n`. The coefficients are
//! those of the complete Bell polynomial; they are produced here by the
//! recursion `P_{n+1} = (∂h) P_n + ∂(P_n)` and checked against an
//! enumeration of set partitions, which counts the same coefficients
//! without any differentiation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    /// `counts[r − 1]` is the power of the `r`-th derivative.
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// `Σ r·i_r`.
    pub fn order(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(r, &i)| (r + 1) * i as usize)
            .sum()
    }

    /// `j = Σ i_r`, the number of factors.
    pub fn factors(&self) -> usize {
        self.0.iter().map(|&i| i as usize).sum()
    }

    /// `Π x_r^{i_r}` with `x[r − 1]` standing for the `r`-th factor.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &i)| i > 0)
            .map(|(r, &i)| x[r].powi(i as i32))
            .product()
    }

    fn padded(&self, len: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(len, 0);
        v
    }
}

/// `P_n` as a map from multi-index to integer coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellPolynomial {
    order: usize,
    terms: BTreeMap<MultiIndex, i64>,
}

impl BellPolynomial {
    /// `P_0 ≡ 1`, stored as an empty map.
    pub fn one() -> Self {
        Self {
            order: 0,
            terms: BTreeMap::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, i64> {
        &self.terms
    }

    pub fn coefficient(&self, index: &MultiIndex) -> i64 {
        self.terms.get(index).copied().unwrap_or(0)
    }

    /// `(∂h) P + ∂P`, the next polynomial.
    pub fn next(&self) -> Self {
        let n = self.order + 1;
        let mut terms: BTreeMap<MultiIndex, i64> = BTreeMap::new();
        let mut add = |counts: Vec<u32>, c: i64| {
            let e = terms.entry(MultiIndex(counts)).or_insert(0);
            *e += c;
        };
        if self.order == 0 {
            let mut counts = vec![0; n];
            counts[0] = 1;
            add(counts, 1);
        }
        for (idx, &c) in &self.terms {
            let base = idx.padded(n);
            // Multiply by ∂h.
            let mut m = base.clone();
            m[0] += 1;
            add(m, c);
            // Leibniz: one factor ∂^r h becomes ∂^{r+1} h.
            for r in 0..self.order {
                if base[r] > 0 {
                    let mut d = base.clone();
                    d[r] -= 1;
                    d[r + 1] += 1;
                    add(d, c * i64::from(base[r]));
                }
            }
        }
        terms.retain(|_, c| *c != 0);
        Self { order: n, terms }
    }

    /// Value at `dh = [∂h, ∂²h, …]` (at least `order` entries).
    pub fn eval(&self, dh: &[f64]) -> f64 {
        if self.order == 0 {
            return 1.0;
        }
        self.terms
            .iter()
            .map(|(idx, &c)| c as f64 * idx.eval(dh))
            .sum()
    }
}

/// `P_0, …, P_{n_max}` by the recursion.
pub fn bell_polynomials(n_max: usize) -> Vec<BellPolynomial> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(BellPolynomial::one());
    for n in 0..n_max {
        let next = out[n].next();
        out.push(next);
    }
    out
}

/// Coefficients of `P_n` counted by enumerating the set partitions of
/// `{1, …, n}` and grouping them by block-size profile. Shares no code with
/// the recursion.
pub fn partition_coefficients(n: usize) -> BTreeMap<MultiIndex, i64> {
    let mut out = BTreeMap::new();
    if n == 0 {
        return out;
    }
    // Restricted growth strings: a[0] = 0, a[k] ≤ 1 + max(a[..k]).
    let mut a = vec![0usize; n];
    loop {
        let blocks = a.iter().max().unwrap() + 1;
        let mut sizes = vec![0usize; blocks];
        for &b in &a {
            sizes[b] += 1;
        }
        let mut counts = vec![0u32; n];
        for s in sizes {
            counts[s - 1] += 1;
        }
        *out.entry(MultiIndex(counts)).or_insert(0) += 1;

        let mut k = n - 1;
        loop {
            if k == 0 {
                return out;
            }
            let bound = a[..k].iter().max().unwrap() + 1;
            if a[k] < bound {
                a[k] += 1;
                for v in &mut a[k + 1..] {
                    *v = 0;
                }
                break;
            }
            k -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn first_polynomials() {
        let p = bell_polynomials(3);
        assert_eq!(p[0].eval(&[]), 1.0);
        assert!(p[0].terms().is_empty());
        assert_eq!(p[1].terms().len(), 1);
        assert_eq!(p[1].coefficient(&idx(&[1])), 1);
        // P₃ = (∂h)³ + 3(∂h)(∂²h) + ∂³h.
        assert_eq!(p[3].terms().len(), 3);
        assert_eq!(p[3].coefficient(&idx(&[3, 0, 0])), 1);
        assert_eq!(p[3].coefficient(&idx(&[1, 1, 0])), 3);
        assert_eq!(p[3].coefficient(&idx(&[0, 0, 1])), 1);
    }

    #[test]
    fn keys_satisfy_order_constraint() {
        for (n, p) in bell_polynomials(8).iter().enumerate() {
            for (k, &c) in p.terms() {
                assert_eq!(k.order(), n);
                assert!((1..=n).contains(&k.factors()));
                assert!(c != 0);
            }
        }
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bell = [1i64, 1, 2, 5, 15, 52, 203, 877];
        for n in 1..8 {
            let total: i64 = partition_coefficients(n).values().sum();
            assert_eq!(total, bell[n]);
        }
    }

    #[test]
    fn recursion_equals_partition_count() {
        let p = bell_polynomials(6);
        for n in 1..=6 {
            assert_eq!(p[n].terms(), &partition_coefficients(n), "order {n}");
        }
    }

    #[test]
    fn evaluation_matches_taylor_coefficients() {
        // h(x) = sin x + x³/3 at 0: Taylor coefficients of exp(h) give the
        // derivatives directly, computed by the power-series exponential.
        let n = 6;
        let mut hc = vec![0.0; n + 1];
        let mut fact = 1.0;
        for k in 1..=n {
            fact *= k as f64;
            let s = match k % 4 {
                1 => 1.0,
                3 => -1.0,
                _ => 0.0,
            };
            hc[k] = s / fact;
        }
        hc[3] += 1.0 / 3.0;
        // e = exp(h) as a series: k e_k = Σ_{j=1..k} j h_j e_{k−j}.
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        for k in 1..=n {
            e[k] = (1..=k).map(|j| j as f64 * hc[j] * e[k - j]).sum::<f64>() / k as f64;
        }
        let mut dh = vec![0.0; n];
        let mut f = 1.0;
        for k in 1..=n {
            f *= k as f64;
            dh[k - 1] = hc[k] * f;
        }
        let p = bell_polynomials(n);
        let mut f = 1.0;
        for k in 1..=n {
            f *= k as f64;
            assert!((p[k].eval(&dh) - e[k] * f).abs() < 1e-9, "order {k}");
        }
    }
}
