//! The Mallows distribution over rankings under the Kendall's-tau distance.
//!
//! `p(sigma) = exp(-theta * d(sigma, center)) / psi(theta)` with the
//! normalization constant in product closed form, exact expectations through
//! the independent-coordinate decomposition of the distance, and an exact
//! sampler (no MCMC) built on the same decomposition.

use rand::Rng;
use thiserror::Error;

use crate::permutation::{enumerate_permutations, Permutation, PermutationError};

/// Below this concentration the distribution is treated as exactly uniform;
/// the closed forms for `psi` and the expected distance take their analytic
/// theta -> 0 limits to avoid 0/0.
pub const THETA_ZERO_LIMIT: f64 = 1e-9;

/// Largest `n` for which exact enumeration over all of S_n is offered.
pub const MAX_EXACT_N: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MallowsError {
    #[error(transparent)]
    Permutation(#[from] PermutationError),
    #[error("theta must be finite and non-negative, got {0}")]
    InvalidTheta(f64),
    #[error("target distance {target} outside (0, {max})")]
    TargetOutOfRange { target: f64, max: f64 },
    #[error("exact enumeration requires n <= {MAX_EXACT_N}, got {0}")]
    TooLargeForExact(usize),
}

/// A Mallows model: modal ranking `center` and concentration `theta >= 0`.
/// `theta = 0` is the uniform distribution; large `theta` concentrates all
/// mass on the center.
#[derive(Debug, Clone, PartialEq)]
pub struct MallowsModel {
    center: Permutation,
    theta: f64,
}

impl MallowsModel {
    pub fn new(center: Permutation, theta: f64) -> Result<Self, MallowsError> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(MallowsError::InvalidTheta(theta));
        }
        Ok(Self { center, theta })
    }

    pub fn center(&self) -> &Permutation {
        &self.center
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// Exact probability of drawing `ranking`.
    pub fn pmf(&self, ranking: &Permutation) -> Result<f64, MallowsError> {
        let d = self.center.kendall_distance(ranking)?;
        Ok((-self.theta * d as f64 - log_psi(self.n(), self.theta)).exp())
    }

    /// Draws one ranking exactly, by sampling the independent insertion
    /// coordinates `V_j in {0..n-j}` with `P(V_j = r)` proportional to
    /// `exp(-theta * r)` and assembling them into a permutation at Kendall
    /// distance `sum V_j` from the center.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let n = self.n();
        // Insert center-rank j into the ordering so that v_j already-placed
        // worse-ranked items end up ahead of it; v_j is then exactly the
        // number of inversions item j contributes relative to the center.
        let mut ordering: Vec<usize> = Vec::with_capacity(n);
        for j in (1..=n).rev() {
            let slots = n - j;
            let v = sample_truncated_geometric(self.theta, slots, rng);
            ordering.insert(v, j);
        }
        let mut rank_of_center_rank = vec![0usize; n];
        for (pos, &j) in ordering.iter().enumerate() {
            rank_of_center_rank[j - 1] = pos + 1;
        }
        let ranks = self
            .center
            .ranks()
            .iter()
            .map(|&r| rank_of_center_rank[r - 1])
            .collect();
        Permutation::from_ranks_unchecked(ranks)
    }

    /// `E[sigma(i)]` for every item `i`, by exact enumeration of S_n.
    /// Restricted to `n <= 8`; the sum has n! terms.
    pub fn expected_rank_vector(&self) -> Result<Vec<f64>, MallowsError> {
        let n = self.n();
        if n > MAX_EXACT_N {
            return Err(MallowsError::TooLargeForExact(n));
        }
        let log_norm = log_psi(n, self.theta);
        let mut expected = vec![0.0f64; n];
        for sigma in enumerate_permutations(n)? {
            let weight = (-self.theta * self.center.kendall_distance(&sigma).unwrap() as f64
                - log_norm)
                .exp();
            for (item, &r) in sigma.ranks().iter().enumerate() {
                expected[item] += r as f64 * weight;
            }
        }
        Ok(expected)
    }
}

/// Log of the normalization constant
/// `psi(theta) = prod_{k=2..n} (1 - e^{-k theta}) / (1 - e^{-theta})`,
/// with `psi(0) = n!` handled analytically.
pub fn log_psi(n: usize, theta: f64) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    if theta < THETA_ZERO_LIMIT {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let log_one_minus_exp = |t: f64| (-(-t).exp_m1()).ln();
    let mut total = 0.0;
    for k in 2..=n {
        total += log_one_minus_exp(k as f64 * theta);
    }
    total - (n as f64 - 1.0) * log_one_minus_exp(theta)
}

/// `E[d(sigma, center)]` under the model, from the independent-coordinate
/// decomposition (the negative derivative of `log psi` in theta). Equals
/// `n(n-1)/4` at `theta = 0` and tends to 0 as theta grows.
pub fn expected_distance(n: usize, theta: f64) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    if theta < THETA_ZERO_LIMIT {
        return (n * (n - 1)) as f64 / 4.0;
    }
    // E[V_k] summed over coordinates: (n-1) x/(1-x) - sum_{k=2..n} k x^k/(1-x^k)
    let mut total = (n as f64 - 1.0) * (-theta).exp() / -(-theta).exp_m1();
    for k in 2..=n {
        let kt = k as f64 * theta;
        total -= k as f64 * (-kt).exp() / -(-kt).exp_m1();
    }
    total
}

/// Solves `expected_distance(n, theta) = target` for theta by bisection;
/// the expected distance is strictly decreasing in theta. The target must
/// lie strictly between 0 and the uniform mean `n(n-1)/4`.
pub fn calibrate_theta(n: usize, target: f64) -> Result<f64, MallowsError> {
    let max = (n * (n - 1)) as f64 / 4.0;
    if !(target > 0.0 && target < max) {
        return Err(MallowsError::TargetOutOfRange { target, max });
    }
    let mut lo = THETA_ZERO_LIMIT;
    let mut hi = 50.0;
    while expected_distance(n, hi) > target {
        hi *= 2.0;
    }
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if expected_distance(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse-CDF draw from `{0..=slots}` with weights `exp(-theta * r)`.
fn sample_truncated_geometric<R: Rng + ?Sized>(theta: f64, slots: usize, rng: &mut R) -> usize {
    if slots == 0 {
        return 0;
    }
    if theta < THETA_ZERO_LIMIT {
        return rng.random_range(0..=slots);
    }
    let x = (-theta).exp();
    // total = (1 - x^{slots+1}) / (1 - x), via expm1 for small theta
    let total = (-theta * (slots as f64 + 1.0)).exp_m1() / (-theta).exp_m1();
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut weight = 1.0;
    for r in 0..slots {
        cumulative += weight;
        if target < cumulative {
            return r;
        }
        weight *= x;
    }
    slots
}
