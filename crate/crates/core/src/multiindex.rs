//! Multi-indices for partial derivatives.
//!
//! A multi-index is a dense vector of small nonnegative integers of length
//! `d`; the lexicographic order on the underlying vector fixes a canonical
//! enumeration wherever determinism matters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The standard basis index `e_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The order `|alpha| = alpha_1 + ... + alpha_d`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn component(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn raised(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    pub fn lowered(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn sub(&self, other: &MultiIndex) -> Option<Self> {
        if !other.leq(self) {
            return None;
        }
        Some(MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// The differentiation steps realizing this index, lowest coordinate
    /// first: `(2,1) -> [0, 0, 1]`.
    pub fn index_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.order() as usize);
        for (i, &c) in self.0.iter().enumerate() {
            for _ in 0..c {
                seq.push(i);
            }
        }
        seq
    }

    /// Product of componentwise binomial coefficients `C(alpha_i, beta_i)`.
    pub fn binomial(&self, beta: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(beta.0.iter())
            .map(|(&a, &b)| binomial_u32(a, b))
            .product()
    }

    /// `zeta^alpha = prod zeta_i^{alpha_i}` for a complex frequency vector.
    pub fn complex_power(&self, zeta: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(zeta.iter())
            .map(|(&a, z)| z.powu(a))
            .product()
    }

    /// All `beta <= alpha` componentwise, in lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(self.dim())];
        for (i, &c) in self.0.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for base in &out {
                for k in 0..=c {
                    let mut v = base.0.clone();
                    v[i] = k;
                    next.push(MultiIndex(v));
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

fn binomial_u32(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// All multi-indices of dimension `dim` with `order <= max_order`, sorted by
/// (order, lexicographic). The zero index comes first.
pub fn multi_indices_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut all = Vec::new();
    let mut current = vec![MultiIndex::zero(dim)];
    all.push(MultiIndex::zero(dim));
    for _ in 1..=max_order {
        let mut next: Vec<MultiIndex> = Vec::new();
        for idx in &current {
            for i in 0..dim {
                next.push(idx.raised(i));
            }
        }
        next.sort();
        next.dedup();
        all.extend(next.iter().cloned());
        current = next;
    }
    all
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_units() {
        let a = MultiIndex::new(vec![2, 1]);
        assert_eq!(a.order(), 3);
        assert_eq!(MultiIndex::unit(3, 1).components(), &[0, 1, 0]);
        assert_eq!(a.index_sequence(), vec![0, 0, 1]);
    }

    #[test]
    fn lower_set_counts() {
        let a = MultiIndex::new(vec![2, 1]);
        // (2+1)*(1+1) = 6 lower indices.
        assert_eq!(a.lower_set().len(), 6);
        assert!(a.lower_set().contains(&MultiIndex::zero(2)));
        assert!(a.lower_set().contains(&a));
    }

    #[test]
    fn binomial_products() {
        let a = MultiIndex::new(vec![2, 2]);
        let b = MultiIndex::new(vec![1, 1]);
        assert_eq!(a.binomial(&b), 4.0);
        // Vandermonde row sum: sum over the lower set equals 2^{|alpha|}.
        let total: f64 = a.lower_set().iter().map(|b| a.binomial(b)).sum();
        assert_eq!(total, 16.0);
    }

    #[test]
    fn enumeration_is_sorted_and_complete() {
        let all = multi_indices_up_to(2, 2);
        assert_eq!(all.len(), 6); // (0,0) + 2 of order 1 + 3 of order 2
        let mut sorted = all.clone();
        sorted.sort_by_key(|m| (m.order(), m.clone()));
        assert_eq!(all, sorted);
    }

    #[test]
    fn complex_power() {
        let zeta = [Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
        let a = MultiIndex::new(vec![2, 1]);
        let v = a.complex_power(&zeta);
        assert_eq!(v, Complex64::new(-2.0, 0.0));
    }
}
