//! Permutations in rank-vector form and the Kendall's-tau distance.
//!
//! A [`Permutation`] stores, for every item `i`, the 1-based rank `sigma(i)`
//! assigned to it. Lower rank means more preferred. The ordering view (item at
//! rank k) is obtained through [`Permutation::inverse`] or
//! [`Permutation::ordering`].

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest `n` accepted by [`enumerate_permutations`]; `n!` grows too fast
/// beyond this to be worth supporting.
pub const MAX_ENUMERATION_N: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermutationError {
    #[error("ranks must be a bijection of 1..={0}")]
    InvalidRanks(usize),
    #[error("permutation must rank at least one item")]
    Empty,
    #[error("size mismatch: {0} items vs {1}")]
    SizeMismatch(usize, usize),
    #[error("item {0} out of range 1..={1}")]
    ItemOutOfRange(usize, usize),
    #[error("items {i} and {j} do not hold adjacent ranks")]
    NotAdjacent { i: usize, j: usize },
    #[error("a pair must name two distinct items")]
    DegeneratePair,
    #[error("n={0} exceeds the enumeration limit {MAX_ENUMERATION_N}")]
    TooLarge(usize),
    #[error("cannot parse permutation {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// A ranking of `n` items: `rank_of(i)` is the 1-based rank of item `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    ranks: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from a rank vector (`ranks[i]` is the rank of
    /// item `i + 1`). The ranks must be a bijection of `1..=n`.
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self, PermutationError> {
        if ranks.is_empty() {
            return Err(PermutationError::Empty);
        }
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r < 1 || r > n || seen[r - 1] {
                return Err(PermutationError::InvalidRanks(n));
            }
            seen[r - 1] = true;
        }
        Ok(Self { ranks })
    }

    /// Builds a permutation from an ordering: `items[k]` is the item placed
    /// at rank `k + 1`.
    pub fn from_ordering(items: &[usize]) -> Result<Self, PermutationError> {
        if items.is_empty() {
            return Err(PermutationError::Empty);
        }
        let n = items.len();
        let mut ranks = vec![0usize; n];
        for (pos, &item) in items.iter().enumerate() {
            if item < 1 || item > n {
                return Err(PermutationError::InvalidRanks(n));
            }
            if ranks[item - 1] != 0 {
                return Err(PermutationError::InvalidRanks(n));
            }
            ranks[item - 1] = pos + 1;
        }
        Ok(Self { ranks })
    }

    pub(crate) fn from_ranks_unchecked(ranks: Vec<usize>) -> Self {
        debug_assert!(Self::from_ranks(ranks.clone()).is_ok());
        Self { ranks }
    }

    /// The identity ranking of `n` items.
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "permutation size must be at least 1");
        Self {
            ranks: (1..=n).collect(),
        }
    }

    /// The reverse of the identity: item `i` gets rank `n + 1 - i`.
    pub fn reverse(n: usize) -> Self {
        assert!(n >= 1, "permutation size must be at least 1");
        Self {
            ranks: (1..=n).rev().collect(),
        }
    }

    /// The transposition exchanging items `i` and `j` (all other items fixed).
    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self, PermutationError> {
        let pair = ItemPair::new(i, j)?;
        pair.check_range(n)?;
        let mut ranks: Vec<usize> = (1..=n).collect();
        ranks.swap(i - 1, j - 1);
        Ok(Self { ranks })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the empty permutation is rejected on construction
    }

    /// Rank of `item` (both 1-based).
    pub fn rank_of(&self, item: usize) -> usize {
        assert!(
            item >= 1 && item <= self.ranks.len(),
            "item {item} out of range 1..={}",
            self.ranks.len()
        );
        self.ranks[item - 1]
    }

    /// The full rank vector; entry `i` is the rank of item `i + 1`.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Items listed from rank 1 to rank n.
    pub fn ordering(&self) -> Vec<usize> {
        let n = self.ranks.len();
        let mut items = vec![0usize; n];
        for (idx, &r) in self.ranks.iter().enumerate() {
            items[r - 1] = idx + 1;
        }
        items
    }

    /// Function composition: `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermutationError> {
        self.check_same_size(other)?;
        let ranks = other.ranks.iter().map(|&r| self.ranks[r - 1]).collect();
        Ok(Self { ranks })
    }

    /// The inverse permutation; `inverse(p).compose(&p)` is the identity.
    pub fn inverse(&self) -> Permutation {
        let n = self.ranks.len();
        let mut ranks = vec![0usize; n];
        for (idx, &r) in self.ranks.iter().enumerate() {
            ranks[r - 1] = idx + 1;
        }
        Self { ranks }
    }

    /// Exchanges the ranks of items `i` and `j`, which must be adjacent
    /// (`|rank(i) - rank(j)| = 1`), so the result is at Kendall distance 1.
    pub fn adjacent_swap(&self, i: usize, j: usize) -> Result<Permutation, PermutationError> {
        let pair = ItemPair::new(i, j)?;
        pair.check_range(self.len())?;
        if self.ranks[i - 1].abs_diff(self.ranks[j - 1]) != 1 {
            return Err(PermutationError::NotAdjacent { i, j });
        }
        let mut ranks = self.ranks.clone();
        ranks.swap(i - 1, j - 1);
        Ok(Self { ranks })
    }

    /// Kendall's-tau distance: the number of item pairs the two rankings
    /// order oppositely. O(n log n) by counting inversions of the relabeled
    /// permutation with a merge sort.
    pub fn kendall_distance(&self, other: &Permutation) -> Result<u64, PermutationError> {
        self.check_same_size(other)?;
        let n = self.ranks.len();
        // self's ranks listed in other's preference order; every inversion of
        // this sequence is exactly one pairwise disagreement
        let mut seq = vec![0usize; n];
        for (idx, &r) in other.ranks.iter().enumerate() {
            seq[r - 1] = self.ranks[idx];
        }
        Ok(count_inversions(&seq))
    }

    /// O(n^2) reference implementation of [`Self::kendall_distance`], kept as
    /// an independent oracle for tests.
    pub fn kendall_distance_reference(&self, other: &Permutation) -> Result<u64, PermutationError> {
        self.check_same_size(other)?;
        let n = self.ranks.len();
        let mut disagreements = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.ranks[i] as i64 - self.ranks[j] as i64;
                let b = other.ranks[i] as i64 - other.ranks[j] as i64;
                if a * b < 0 {
                    disagreements += 1;
                }
            }
        }
        Ok(disagreements)
    }

    fn check_same_size(&self, other: &Permutation) -> Result<(), PermutationError> {
        if self.ranks.len() != other.ranks.len() {
            return Err(PermutationError::SizeMismatch(
                self.ranks.len(),
                other.ranks.len(),
            ));
        }
        Ok(())
    }
}

/// All `n!` permutations of `n` items in lexicographic rank-vector order.
pub fn enumerate_permutations(
    n: usize,
) -> Result<impl Iterator<Item = Permutation>, PermutationError> {
    if n == 0 {
        return Err(PermutationError::Empty);
    }
    if n > MAX_ENUMERATION_N {
        return Err(PermutationError::TooLarge(n));
    }
    Ok((1..=n)
        .permutations(n)
        .map(Permutation::from_ranks_unchecked))
}

fn count_inversions(seq: &[usize]) -> u64 {
    let n = seq.len();
    let mut src = seq.to_vec();
    let mut dst = vec![0usize; n];
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if src[i] <= src[j] {
                    dst[k] = src[i];
                    i += 1;
                } else {
                    dst[k] = src[j];
                    j += 1;
                    inversions += (mid - i) as u64;
                }
                k += 1;
            }
            dst[k..k + (mid - i)].copy_from_slice(&src[i..mid]);
            let k = k + (mid - i);
            dst[k..k + (end - j)].copy_from_slice(&src[j..end]);
            start = end;
        }
        std::mem::swap(&mut src, &mut dst);
        width *= 2;
    }
    inversions
}

/// An unordered pair of distinct 1-based item indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemPair {
    i: usize,
    j: usize,
}

impl ItemPair {
    pub fn new(i: usize, j: usize) -> Result<Self, PermutationError> {
        if i == 0 || j == 0 {
            return Err(PermutationError::ItemOutOfRange(0, usize::MAX));
        }
        if i == j {
            return Err(PermutationError::DegeneratePair);
        }
        Ok(Self { i, j })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<(), PermutationError> {
        for item in [self.i, self.j] {
            if item > n {
                return Err(PermutationError::ItemOutOfRange(item, n));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in &self.ranks {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = PermutationError;

    /// Parses the text form used everywhere in files and on the CLI:
    /// comma-separated ranks, e.g. `2,1,3` means sigma(1)=2, sigma(2)=1,
    /// sigma(3)=3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |tok: &str| {
            tok.trim().parse::<usize>().map_err(|e| PermutationError::Parse {
                text: s.to_string(),
                reason: e.to_string(),
            })
        };
        let ranks = s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
        Self::from_ranks(ranks).map_err(|e| PermutationError::Parse {
            text: s.to_string(),
            reason: e.to_string(),
        })
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(D::Error::custom)
    }
}
