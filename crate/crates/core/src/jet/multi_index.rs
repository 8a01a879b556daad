use serde::{Deserialize, Serialize};

use super::JetError;

/// Exponent vector `(r_1, …, r_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index dimension must be at least 1");
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex::new(vec![0; n])
    }

    /// `e_i`, zero-based.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|I|`.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|&r| r as u64).sum()
    }

    /// `I!` with overflow detection.
    pub fn factorial(&self) -> Result<u128, JetError> {
        let mut acc: u128 = 1;
        for &r in &self.0 {
            for k in 2..=r as u128 {
                acc = acc.checked_mul(k).ok_or(JetError::Overflow)?;
            }
        }
        Ok(acc)
    }

    /// `I!` as a float; exact while it fits in 53 bits.
    pub fn factorial_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|&r| (2..=r).fold(1.0, |acc, k| acc * k as f64))
            .product()
    }

    /// `I + J`.
    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex, JetError> {
        if self.dim() != other.dim() {
            return Err(JetError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(JetError::Overflow))
            .collect::<Result<Vec<_>, _>>()
            .map(MultiIndex)
    }

    /// `(y - a)^I`.
    pub fn monomial(&self, y: &[f64], a: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(y.iter().zip(a))
            .map(|(&r, (yi, ai))| (yi - ai).powi(r as i32))
            .product()
    }

    /// `I - e_i` if `I_i > 0`.
    pub fn lowered(&self, i: usize) -> Option<MultiIndex> {
        let mut v = self.0.clone();
        v[i] = v[i].checked_sub(1)?;
        Some(MultiIndex(v))
    }
}

pub fn mi_norm(i: &MultiIndex) -> u64 {
    i.norm()
}

pub fn mi_factorial(i: &MultiIndex) -> Result<u128, JetError> {
    i.factorial()
}

pub fn mi_add(i: &MultiIndex, j: &MultiIndex) -> Result<MultiIndex, JetError> {
    i.checked_add(j)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of multi-indices of dimension `n` with `|I| <= m`: `C(n+m, n)`.
pub fn mi_count(n: usize, m: usize) -> usize {
    binomial(n + m, n)
}

/// All `I` with `|I| <= m` in graded lexicographic order: by degree, then
/// with larger leading exponents first.
pub fn mi_enumerate(n: usize, m: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(mi_count(n, m));
    let mut buf = vec![0u32; n];
    for degree in 0..=m {
        compositions(&mut buf, 0, degree as u32, &mut out);
    }
    out
}

fn compositions(buf: &mut [u32], slot: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for head in (0..=remaining).rev() {
        buf[slot] = head;
        compositions(buf, slot + 1, remaining - head, out);
    }
}

/// Position of `I` in [`mi_enumerate`] order (independent of the truncation order).
pub fn mi_rank(index: &MultiIndex) -> usize {
    let n = index.dim();
    let degree = index.norm() as usize;
    let mut rank = if degree == 0 { 0 } else { mi_count(n, degree - 1) };
    let mut remaining = degree;
    for (slot, &r) in index.0.iter().enumerate().take(n - 1) {
        let parts = n - slot - 1;
        // indices sharing the prefix but with a larger exponent in this slot come first
        for head in (r as usize + 1)..=remaining {
            rank += binomial(remaining - head + parts - 1, parts - 1);
        }
        remaining -= r as usize;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn arithmetic() {
        assert_eq!(mi_norm(&mi(&[2, 1, 0])), 3);
        assert_eq!(mi_factorial(&mi(&[3, 2])).unwrap(), 12);
        assert_eq!(mi_add(&mi(&[1, 0]), &mi(&[0, 2])).unwrap(), mi(&[1, 2]));
        assert!(mi_add(&mi(&[1]), &mi(&[1, 0])).is_err());
        assert!(mi_add(&mi(&[u32::MAX]), &mi(&[1])).is_err());
        assert_eq!(mi_factorial(&mi(&[40])), Err(JetError::Overflow));
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(mi_enumerate(1, 2), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
        assert_eq!(mi_enumerate(2, 1), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        assert_eq!(
            mi_enumerate(2, 2)[3..],
            [mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]
        );
    }

    #[test]
    fn enumeration_length_is_binomial() {
        // C(7, 3) = 7*6*5/6
        assert_eq!(mi_enumerate(3, 4).len(), 35);
        for n in 1..=4 {
            for m in 0..=6 {
                assert_eq!(mi_enumerate(n, m).len(), mi_count(n, m));
            }
        }
    }

    #[test]
    fn rank_matches_enumeration_position() {
        for n in 1..=4 {
            for (pos, index) in mi_enumerate(n, 7).iter().enumerate() {
                assert_eq!(mi_rank(index), pos, "{index:?}");
            }
        }
    }
}
