//! Output and observation labels with their canonical orderings.
//!
//! Every argmin in the crate breaks ties towards the smallest label:
//! subsets compare by the integer `Σ_j [z]_j 2^j`, permutations
//! lexicographically by their rank vector `(σ(0), …, σ(m-1))`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subset of `{0, …, m-1}` stored as a bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset {
    bits: Vec<bool>,
}

impl Subset {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn empty(m: usize) -> Self {
        Self {
            bits: vec![false; m],
        }
    }

    pub fn from_indices(m: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; m];
        for &j in indices {
            if j >= m {
                return Err(Error::label(None, alloc::format!("index {j} >= m = {m}")));
            }
            bits[j] = true;
        }
        Ok(Self { bits })
    }

    /// Subset whose canonical integer is `code`.
    pub fn from_code(m: usize, code: u64) -> Self {
        Self {
            bits: (0..m).map(|j| j < 64 && (code >> j) & 1 == 1).collect(),
        }
    }

    /// Canonical integer `Σ_j [z]_j 2^j`; `None` above 64 labels.
    pub fn code(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .fold(0u64, |acc, (j, _)| acc | (1u64 << j)),
        )
    }

    pub fn m(&self) -> usize {
        self.bits.len()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.bits[j] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
    }

    pub fn intersection_count(&self, other: &Subset) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    pub fn hamming_distance(&self, other: &Subset) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// `0`/`1` string, label 0 first.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_bit_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::label(None, alloc::format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.bits.len().max(other.bits.len());
        for j in (0..n).rev() {
            let a = self.bits.get(j).copied().unwrap_or(false);
            let b = other.bits.get(j).copied().unwrap_or(false);
            match (a, b) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

/// Permutation stored as ranks: `ranks[j]` is the 0-based position of item `j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    ranks: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Self {
            ranks: (0..m).collect(),
        }
    }

    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self> {
        let m = ranks.len();
        let mut seen = vec![false; m];
        for &r in &ranks {
            if r >= m || seen[r] {
                return Err(Error::label(None, "rank vector is not a bijection"));
            }
            seen[r] = true;
        }
        Ok(Self { ranks })
    }

    /// Builds the permutation that places `order[p]` at position `p`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let m = order.len();
        let mut ranks = vec![usize::MAX; m];
        for (p, &item) in order.iter().enumerate() {
            if item >= m || ranks[item] != usize::MAX {
                return Err(Error::label(None, "order is not a bijection"));
            }
            ranks[item] = p;
        }
        Ok(Self { ranks })
    }

    pub fn m(&self) -> usize {
        self.ranks.len()
    }

    #[inline]
    pub fn rank(&self, item: usize) -> usize {
        self.ranks[item]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Items listed by position.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.ranks.len()];
        for (item, &r) in self.ranks.iter().enumerate() {
            order[r] = item;
        }
        order
    }

    pub fn swap_items(&mut self, a: usize, b: usize) {
        self.ranks.swap(a, b);
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(ranks: Vec<usize>) -> Result<Self> {
        Self::from_ranks(ranks)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.ranks
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A prediction `z ∈ Z`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputLabel {
    Subset(Subset),
    KSubset { bits: Subset, k: usize },
    Permutation(Permutation),
}

impl OutputLabel {
    pub fn as_subset(&self) -> Option<&Subset> {
        match self {
            OutputLabel::Subset(s) | OutputLabel::KSubset { bits: s, .. } => Some(s),
            OutputLabel::Permutation(_) => None,
        }
    }

    pub fn as_permutation(&self) -> Option<&Permutation> {
        match self {
            OutputLabel::Permutation(p) => Some(p),
            _ => None,
        }
    }

    pub fn k_subset(bits: Subset, k: usize) -> Result<Self> {
        if bits.count() != k {
            return Err(Error::label(
                None,
                alloc::format!("k-subset has {} elements, expected {k}", bits.count()),
            ));
        }
        Ok(OutputLabel::KSubset { bits, k })
    }
}

impl fmt::Display for OutputLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputLabel::Subset(s) | OutputLabel::KSubset { bits: s, .. } => s.fmt(f),
            OutputLabel::Permutation(p) => p.fmt(f),
        }
    }
}

/// An observation `y ∈ Y`: a label set or a vector of relevance scores.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Subset(Subset),
    Relevance(Vec<u32>),
}

impl Observation {
    pub fn as_subset(&self) -> Option<&Subset> {
        match self {
            Observation::Subset(s) => Some(s),
            Observation::Relevance(_) => None,
        }
    }

    pub fn as_relevance(&self) -> Option<&[u32]> {
        match self {
            Observation::Relevance(r) => Some(r),
            Observation::Subset(_) => None,
        }
    }
}

impl From<Subset> for Observation {
    fn from(s: Subset) -> Self {
        Observation::Subset(s)
    }
}

/// All subsets of `{0..m}` in canonical order.
pub fn subsets(m: usize) -> impl Iterator<Item = Subset> {
    assert!(m < 64, "subset enumeration needs m < 64");
    (0..(1u64 << m)).map(move |c| Subset::from_code(m, c))
}

/// All `k`-subsets of `{0..m}` in canonical order (Gosper's hack).
pub fn k_subsets(m: usize, k: usize) -> impl Iterator<Item = Subset> {
    assert!(m < 64, "subset enumeration needs m < 64");
    let limit = 1u64 << m;
    let mut next = if k == 0 {
        Some(0u64)
    } else if k <= m {
        Some((1u64 << k) - 1)
    } else {
        None
    };
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(Subset::from_code(m, cur))
    })
}

/// Advances `v` to the next permutation in lexicographic order.
pub fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All permutations of `m` items, lexicographic in their rank vectors.
pub fn permutations(m: usize) -> impl Iterator<Item = Permutation> {
    let mut cur: Option<Vec<usize>> = Some((0..m).collect());
    core::iter::from_fn(move || {
        let out = cur.take()?;
        let mut nxt = out.clone();
        if next_permutation(&mut nxt) {
            cur = Some(nxt);
        }
        Some(Permutation { ranks: out })
    })
}

/// All relevance vectors in `{0..=max_relevance}^m`, lexicographic.
pub fn relevance_grid(m: usize, max_relevance: u32) -> impl Iterator<Item = Vec<u32>> {
    let mut cur: Option<Vec<u32>> = Some(vec![0; m]);
    core::iter::from_fn(move || {
        let out = cur.take()?;
        let mut nxt = out.clone();
        let mut j = m;
        while j > 0 {
            j -= 1;
            if nxt[j] < max_relevance {
                nxt[j] += 1;
                cur = Some(nxt);
                break;
            }
            nxt[j] = 0;
        }
        Some(out)
    })
}

pub fn factorial(m: usize) -> u128 {
    (1..=m as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_order_follows_code() {
        let all: Vec<Subset> = subsets(4).collect();
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
            assert_eq!(w[0].code().unwrap() + 1, w[1].code().unwrap());
        }
    }

    #[test]
    fn k_subsets_are_sorted_and_complete() {
        for m in 0..7 {
            for k in 0..=m + 1 {
                let fast: Vec<Subset> = k_subsets(m, k).collect();
                let slow: Vec<Subset> = subsets(m).filter(|s| s.count() == k).collect();
                assert_eq!(fast, slow, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn permutations_are_lexicographic() {
        let all: Vec<Permutation> = permutations(4).collect();
        assert_eq!(all.len(), 24);
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(permutations(0).count(), 1);
        assert_eq!(permutations(1).count(), 1);
    }

    #[test]
    fn relevance_grid_size() {
        assert_eq!(relevance_grid(3, 2).count(), 27);
        let v: Vec<Vec<u32>> = relevance_grid(2, 1).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn permutation_order_roundtrip() {
        let p = Permutation::from_order(&[2, 0, 1]).unwrap();
        assert_eq!(p.ranks(), &[1, 2, 0]);
        assert_eq!(p.order(), vec![2, 0, 1]);
        assert!(Permutation::from_ranks(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn bit_strings() {
        let s = Subset::parse_bit_string("0101").unwrap();
        assert_eq!(s.count(), 2);
        assert!(s.contains(1) && s.contains(3));
        assert_eq!(s.to_bit_string(), "0101");
        assert!(Subset::parse_bit_string("01x").is_err());
    }
}
