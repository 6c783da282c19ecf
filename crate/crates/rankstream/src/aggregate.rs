//! Voting rules: Borda, the incremental fading-factor variant (uBorda),
//! weighted pairwise matrices, exact Kemeny, and Copeland.
//!
//! All rules rank items by score with ties broken by the lowest item index,
//! so every aggregation is deterministic.

use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

use crate::permutation::{enumerate_permutations, Permutation, PermutationError};

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error(transparent)]
    Permutation(#[from] PermutationError),
    #[error("empty sample")]
    EmptySample,
    #[error("weight must be finite and non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("fading factor must lie in (0, 1], got {0}")]
    InvalidRho(f64),
    #[error("state holds no rankings yet")]
    EmptyState,
    #[error("line {line}: {reason}")]
    ParseLine { line: usize, reason: String },
}

/// Incremental fading-factor Borda accumulator.
///
/// Each absorbed ranking refreshes the per-item score as
/// `score[i] = incoming(i) + rho * score[i]`, so the score of item `i` after
/// the stream `sigma_0` (most recent), `sigma_1`, ... is
/// `sum_t rho^t * sigma_t(i)`. Items are ranked by score increasingly.
///
/// With `rho < 1` the scores stay bounded by `n / (1 - rho)`. With `rho = 1`
/// the recurrence accumulates the plain rank sums; these are exact integers
/// in an f64 up to 2^53, far beyond any realistic stream, and the induced
/// ranking is identical to classic Borda's at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct UBordaState {
    scores: Vec<f64>,
    rho: f64,
    count: u64,
}

impl UBordaState {
    pub fn new(n: usize, rho: f64) -> Result<Self, AggregateError> {
        if n == 0 {
            return Err(AggregateError::EmptySample);
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(AggregateError::InvalidRho(rho));
        }
        Ok(Self {
            scores: vec![0.0; n],
            rho,
            count: 0,
        })
    }

    /// Absorbs the next ranking of the stream in O(n) time.
    pub fn update(&mut self, incoming: &Permutation) -> Result<(), AggregateError> {
        if incoming.len() != self.scores.len() {
            return Err(PermutationError::SizeMismatch(self.scores.len(), incoming.len()).into());
        }
        for (score, &rank) in self.scores.iter_mut().zip(incoming.ranks()) {
            *score = rank as f64 + self.rho * *score;
        }
        self.count += 1;
        Ok(())
    }

    /// The current consensus: items sorted by score increasingly, ties to the
    /// lower item index.
    pub fn ranking(&self) -> Result<Permutation, AggregateError> {
        if self.count == 0 {
            return Err(AggregateError::EmptyState);
        }
        Ok(ranking_from_scores_asc(&self.scores))
    }

    /// Raw accumulated scores (see the type-level description).
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Scores on the scale used by the deviation bounds: `(1 - rho) * score`
    /// for `rho < 1`, and the running mean `score / count` for `rho = 1`.
    pub fn normalized_scores(&self) -> Vec<f64> {
        if self.rho < 1.0 {
            self.scores.iter().map(|s| (1.0 - self.rho) * s).collect()
        } else {
            let k = self.count.max(1) as f64;
            self.scores.iter().map(|s| s / k).collect()
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }
}

/// A ranking with a non-negative reliability weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedVote {
    ranking: Permutation,
    weight: f64,
}

impl WeightedVote {
    pub fn new(ranking: Permutation, weight: f64) -> Result<Self, AggregateError> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(AggregateError::NegativeWeight(weight));
        }
        Ok(Self { ranking, weight })
    }

    pub fn unit(ranking: Permutation) -> Self {
        Self {
            ranking,
            weight: 1.0,
        }
    }

    pub fn ranking(&self) -> &Permutation {
        &self.ranking
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl FromStr for WeightedVote {
    type Err = AggregateError;

    /// One vote in file form: `w;r1,r2,...,rn`, weight optional (default 1).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (weight, ranks) = match s.split_once(';') {
            Some((w, r)) => {
                let weight = w.trim().parse::<f64>().map_err(|e| {
                    AggregateError::ParseLine {
                        line: 0,
                        reason: format!("bad weight {:?}: {e}", w.trim()),
                    }
                })?;
                (weight, r)
            }
            None => (1.0, s),
        };
        let ranking: Permutation = ranks.parse()?;
        WeightedVote::new(ranking, weight)
    }
}

/// Parses one vote per line, skipping blank lines; errors carry the 1-based
/// line number.
pub fn parse_votes<R: BufRead>(reader: R) -> Result<Vec<WeightedVote>, AggregateError> {
    let mut votes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AggregateError::ParseLine {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let vote: WeightedVote = line.parse().map_err(|e| AggregateError::ParseLine {
            line: idx + 1,
            reason: match e {
                AggregateError::ParseLine { reason, .. } => reason,
                other => other.to_string(),
            },
        })?;
        votes.push(vote);
    }
    if votes.is_empty() {
        return Err(AggregateError::EmptySample);
    }
    check_uniform_size(votes.iter().map(|v| v.ranking()))?;
    Ok(votes)
}

/// Classic Borda: per-item average rank, plus the induced consensus ranking.
pub fn borda(sample: &[Permutation]) -> Result<(Vec<f64>, Permutation), AggregateError> {
    if sample.is_empty() {
        return Err(AggregateError::EmptySample);
    }
    check_uniform_size(sample.iter())?;
    let n = sample[0].len();
    let mut sums = vec![0.0f64; n];
    for p in sample {
        for (sum, &rank) in sums.iter_mut().zip(p.ranks()) {
            *sum += rank as f64;
        }
    }
    let scores: Vec<f64> = sums.iter().map(|s| s / sample.len() as f64).collect();
    let ranking = ranking_from_scores_asc(&sums);
    Ok((scores, ranking))
}

/// Borda with per-vote weights: score[i] = sum_v w_v * sigma_v(i), ranked
/// increasingly. With unit weights the ranking equals [`borda`]'s.
pub fn weighted_borda(votes: &[WeightedVote]) -> Result<(Vec<f64>, Permutation), AggregateError> {
    if votes.is_empty() {
        return Err(AggregateError::EmptySample);
    }
    check_uniform_size(votes.iter().map(|v| v.ranking()))?;
    let n = votes[0].ranking().len();
    let mut scores = vec![0.0f64; n];
    for vote in votes {
        for (score, &rank) in scores.iter_mut().zip(vote.ranking().ranks()) {
            *score += vote.weight() * rank as f64;
        }
    }
    let ranking = ranking_from_scores_asc(&scores);
    Ok((scores, ranking))
}

/// Weighted pairwise frequencies `N[i][j] = sum_v w_v * [sigma_v(i) < sigma_v(j)]`
/// and the antisymmetric majority margins `M = N - N^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrices {
    n: usize,
    frequency: Vec<f64>,
    margin: Vec<f64>,
    total_weight: f64,
}

impl PairwiseMatrices {
    pub fn n_items(&self) -> usize {
        self.n
    }

    /// `N[i][j]`: total weight of votes preferring item `i` to item `j`.
    pub fn frequency(&self, i: usize, j: usize) -> f64 {
        self.frequency[self.idx(i, j)]
    }

    /// `M[i][j] = N[i][j] - N[j][i]`.
    pub fn margin(&self, i: usize, j: usize) -> f64 {
        self.margin[self.idx(i, j)]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        assert!(i >= 1 && i <= self.n && j >= 1 && j <= self.n);
        (i - 1) * self.n + (j - 1)
    }
}

pub fn pairwise_matrices(votes: &[WeightedVote]) -> Result<PairwiseMatrices, AggregateError> {
    if votes.is_empty() {
        return Err(AggregateError::EmptySample);
    }
    check_uniform_size(votes.iter().map(|v| v.ranking()))?;
    let n = votes[0].ranking().len();
    let mut frequency = vec![0.0f64; n * n];
    let mut total_weight = 0.0;
    for vote in votes {
        if !vote.weight().is_finite() || vote.weight() < 0.0 {
            return Err(AggregateError::NegativeWeight(vote.weight()));
        }
        total_weight += vote.weight();
        let ranks = vote.ranking().ranks();
        for i in 0..n {
            for j in 0..n {
                if i != j && ranks[i] < ranks[j] {
                    frequency[i * n + j] += vote.weight();
                }
            }
        }
    }
    let mut margin = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            margin[i * n + j] = frequency[i * n + j] - frequency[j * n + i];
        }
    }
    Ok(PairwiseMatrices {
        n,
        frequency,
        margin,
        total_weight,
    })
}

/// The margin objective minimized by the Kemeny ranking:
/// `sum over ordered pairs with candidate(i) > candidate(j) of M[i][j]`.
pub fn kemeny_objective(matrices: &PairwiseMatrices, candidate: &Permutation) -> f64 {
    let n = matrices.n_items();
    assert_eq!(candidate.len(), n, "candidate size must match the matrices");
    let ranks = candidate.ranks();
    let mut total = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            if i != j && ranks[i - 1] > ranks[j - 1] {
                total += matrices.margin(i, j);
            }
        }
    }
    total
}

/// Exact Kemeny consensus by exhaustive search over S_n (n <= 10; the search
/// is factorial). Ties go to the lexicographically smallest rank vector.
pub fn kemeny_exact(votes: &[WeightedVote]) -> Result<Permutation, AggregateError> {
    let matrices = pairwise_matrices(votes)?;
    let n = matrices.n_items();
    let mut best: Option<(f64, Permutation)> = None;
    for candidate in enumerate_permutations(n)? {
        let objective = kemeny_objective(&matrices, &candidate);
        match &best {
            Some((incumbent, _)) if objective >= *incumbent => {}
            _ => best = Some((objective, candidate)),
        }
    }
    Ok(best.expect("n >= 1 yields at least one candidate").1)
}

/// Copeland: items ranked by their number of strict pairwise wins
/// (`M[i][j] > 0`), descending, ties to the lower item index.
pub fn copeland(matrices: &PairwiseMatrices) -> Permutation {
    let n = matrices.n_items();
    let wins: Vec<usize> = (1..=n)
        .map(|i| (1..=n).filter(|&j| j != i && matrices.margin(i, j) > 0.0).count())
        .collect();
    let mut items: Vec<usize> = (0..n).collect();
    items.sort_by(|&a, &b| wins[b].cmp(&wins[a]).then(a.cmp(&b)));
    let mut ranks = vec![0usize; n];
    for (pos, &item) in items.iter().enumerate() {
        ranks[item] = pos + 1;
    }
    Permutation::from_ranks_unchecked(ranks)
}

fn ranking_from_scores_asc(scores: &[f64]) -> Permutation {
    let mut items: Vec<usize> = (0..scores.len()).collect();
    items.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut ranks = vec![0usize; scores.len()];
    for (pos, &item) in items.iter().enumerate() {
        ranks[item] = pos + 1;
    }
    Permutation::from_ranks_unchecked(ranks)
}

fn check_uniform_size<'a>(
    mut rankings: impl Iterator<Item = &'a Permutation>,
) -> Result<(), AggregateError> {
    let first = match rankings.next() {
        Some(p) => p.len(),
        None => return Ok(()),
    };
    for p in rankings {
        if p.len() != first {
            return Err(PermutationError::SizeMismatch(first, p.len()).into());
        }
    }
    Ok(())
}
