use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Multi-index `alpha = (alpha_1, ..., alpha_k)` of nonnegative integers.
///
/// Ordered graded-lexicographically: first by the order `|alpha|`, then
/// lexicographically on the entries. That ordering is the canonical one for
/// coefficient storage and serialization.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(k: usize) -> Self {
        MultiIndex(vec![0; k])
    }

    /// The multi-index of the single variable `i`.
    pub fn unit(k: usize, i: usize) -> Self {
        let mut e = vec![0; k];
        e[i] += 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Number of variables `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order `|alpha| = alpha_1 + ... + alpha_k`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All multi-indices in `k` variables with `|alpha| = degree`.
    pub fn of_degree(k: usize, degree: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0u32; k];
        fill(&mut out, &mut current, 0, degree);
        out
    }

    /// All multi-indices in `k` variables with `lo <= |alpha| <= hi`.
    pub fn of_degree_range(k: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
        (lo..=hi).flat_map(|d| Self::of_degree(k, d)).collect()
    }
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill(out, current, pos + 1, remaining - v);
    }
    current[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_ordering() {
        let a = MultiIndex::new(vec![0, 2]);
        let b = MultiIndex::new(vec![1, 0]);
        let c = MultiIndex::new(vec![1, 1]);
        assert!(b < a, "order 1 before order 2");
        assert!(a < c, "(0,2) before (1,1) lexicographically");
    }

    #[test]
    fn degree_enumeration_counts() {
        // Compositions of d into k parts: C(d+k-1, k-1).
        assert_eq!(MultiIndex::of_degree(2, 3).len(), 4);
        assert_eq!(MultiIndex::of_degree(3, 4).len(), 15);
        let all = MultiIndex::of_degree_range(2, 2, 4);
        assert_eq!(all.len(), 3 + 4 + 5);
        assert!(all.iter().all(|a| (2..=4).contains(&a.order())));
    }
}
