//! Recovery bounds for fading-factor aggregation under a modal-ranking drift.
//!
//! The quantities here answer: after an adjacent transposition of the modal
//! ranking, how many rankings must the stream deliver before the fading-score
//! ordering flips to the new truth — in expectation
//! ([`expected_recovery_bound`]) and with high probability
//! ([`hp_recovery_bound`]) — and which fading factor makes recovery within a
//! horizon of `m` rankings most reliable ([`optimal_rho`]).

use std::fmt;

use thiserror::Error;

use crate::mallows::{MallowsError, MallowsModel};
use crate::permutation::{enumerate_permutations, ItemPair, Permutation, PermutationError};

/// Agreement tolerance between the two closed forms of `Delta_ij`.
const DELTA_FORMS_TOLERANCE: f64 = 1e-10;

/// Guard for the removable singularities of [`f_objective`].
const DENOMINATOR_GUARD: f64 = 1e-15;

/// Search interval for [`optimal_rho`]; the endpoints are singular.
const RHO_SEARCH_LO: f64 = 1e-4;
const RHO_SEARCH_HI: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error(transparent)]
    Permutation(#[from] PermutationError),
    #[error(transparent)]
    Mallows(#[from] MallowsError),
    #[error("rho must lie strictly inside (0, 1), got {0}")]
    InvalidRho(f64),
    #[error("delta must lie strictly inside (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("window start r={r} exceeds end s={s}")]
    InvalidWindow { r: u32, s: u32 },
    #[error("Delta_ij must be positive, got {0}")]
    NonPositiveDeltaIj(f64),
    #[error("the closed forms of Delta_ij disagree: {0} vs {1}")]
    DeltaFormsDisagree(f64, f64),
    #[error("the drift pair must hold adjacent ranks in the center")]
    PairNotAdjacent,
}

/// Parameters of a recovery-bound query: a stream over `n` items faded with
/// factor `rho`, noise concentration `theta`, failure probability `delta`,
/// the adjacent `pair` swapped by the drift, and `m` rankings received since.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBoundInputs {
    pub n: usize,
    pub rho: f64,
    pub theta: f64,
    pub delta: f64,
    pub pair: ItemPair,
    pub m: u64,
}

/// Expected-rank gap `Delta_ij = E[sigma(j)] - E[sigma(i)]` under the model.
///
/// Computed two ways — the difference of expected ranks, and the telescoped
/// sum `sum_{sigma(i) < sigma(j)} (sigma(j) - sigma(i)) (p(sigma) - p(sigma tau))`
/// over S_n with `tau` the transposition of `i` and `j` — which must agree to
/// within 1e-10. Positive whenever the center ranks `i` above `j` and
/// `theta > 0`; zero under the uniform distribution. Exact enumeration, so
/// `n <= 8` applies.
pub fn delta_ij(model: &MallowsModel, pair: ItemPair) -> Result<f64, TheoryError> {
    let (expectation_form, pairwise_form) = delta_ij_forms(model, pair)?;
    if (expectation_form - pairwise_form).abs() > DELTA_FORMS_TOLERANCE {
        return Err(TheoryError::DeltaFormsDisagree(
            expectation_form,
            pairwise_form,
        ));
    }
    Ok(expectation_form)
}

/// Both closed forms of `Delta_ij` (expected-rank difference, telescoped
/// pairwise sum), exposed so the agreement can be checked independently.
pub fn delta_ij_forms(
    model: &MallowsModel,
    pair: ItemPair,
) -> Result<(f64, f64), TheoryError> {
    let n = model.n();
    pair.check_range(n)?;
    let expected = model.expected_rank_vector()?;
    let expectation_form = expected[pair.j() - 1] - expected[pair.i() - 1];

    let tau = Permutation::transposition(n, pair.i(), pair.j())?;
    let mut pairwise_form = 0.0;
    for sigma in enumerate_permutations(n)? {
        let (ri, rj) = (sigma.rank_of(pair.i()), sigma.rank_of(pair.j()));
        if ri < rj {
            let swapped = sigma.compose(&tau)?;
            pairwise_form +=
                (rj - ri) as f64 * (model.pmf(&sigma)? - model.pmf(&swapped)?);
        }
    }
    Ok((expectation_form, pairwise_form))
}

/// Window end for the deviation bound: a concrete index or the infinite tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

impl From<u32> for Horizon {
    fn from(s: u32) -> Self {
        Horizon::Finite(s)
    }
}

/// High-probability deviation of the normalized fading score over the age
/// window `[r, s)`:
///
/// `eps_r^s = (n-1)(1-rho) sqrt( (rho^{2r} - rho^{2s}) / (2 (1 - rho^2)) * ln(2/delta) )`
///
/// With probability at least `1 - delta` the normalized score of any fixed
/// item stays within `eps_r^s` of its expectation. `Horizon::Infinite` drops
/// the `rho^{2s}` term.
pub fn epsilon(
    n: usize,
    rho: f64,
    delta: f64,
    r: u32,
    s: Horizon,
) -> Result<f64, TheoryError> {
    check_rho(rho)?;
    check_delta(delta)?;
    if let Horizon::Finite(end) = s {
        if end < r {
            return Err(TheoryError::InvalidWindow { r, s: end });
        }
    }
    let envelope = deviation_envelope(rho, r, s);
    Ok((n as f64 - 1.0) * envelope * (0.5 * (2.0 / delta).ln()).sqrt())
}

/// The rho-dependent factor of [`epsilon`]:
/// `(1 - rho) * sqrt((rho^{2r} - rho^{2s}) / (1 - rho^2))`.
fn deviation_envelope(rho: f64, r: u32, s: Horizon) -> f64 {
    let head = rho.powf(2.0 * r as f64);
    let tail = match s {
        Horizon::Finite(end) => rho.powf(2.0 * end as f64),
        Horizon::Infinite => 0.0,
    };
    (1.0 - rho) * ((head - tail).max(0.0) / (1.0 - rho * rho)).sqrt()
}

/// Number of post-drift rankings after which the fading scores rank the
/// swapped pair by the new truth in expectation: `log_rho(1/2)`.
/// Decreases toward 0 as rho -> 0 (faster forgetting reacts sooner).
pub fn expected_recovery_bound(rho: f64) -> Result<f64, TheoryError> {
    check_rho(rho)?;
    Ok(0.5f64.ln() / rho.ln())
}

/// Outcome of the high-probability bound: a finite sample count, or no
/// finite count at these parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecoveryBound {
    Finite(f64),
    Infeasible,
}

impl RecoveryBound {
    pub fn finite(&self) -> Option<f64> {
        match self {
            RecoveryBound::Finite(m) => Some(*m),
            RecoveryBound::Infeasible => None,
        }
    }
}

impl fmt::Display for RecoveryBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecoveryBound::Finite(m) => write!(f, "{m:.6}"),
            RecoveryBound::Infeasible => write!(f, "infeasible"),
        }
    }
}

/// Sample count for recovery with probability `1 - delta` after an adjacent
/// drift of `inputs.pair`, with `Delta_ij` computed exactly from an
/// identity-centered model at `inputs.theta` (so the pair must be adjacent:
/// `|i - j| = 1`). Use [`hp_recovery_bound_with_delta`] to supply `Delta_ij`
/// directly.
pub fn hp_recovery_bound(inputs: &DriftBoundInputs) -> Result<RecoveryBound, TheoryError> {
    if inputs.pair.i().abs_diff(inputs.pair.j()) != 1 {
        return Err(TheoryError::PairNotAdjacent);
    }
    let model = MallowsModel::new(Permutation::identity(inputs.n), inputs.theta)?;
    let gap = delta_ij(&model, inputs.pair)?;
    hp_recovery_bound_with_delta(inputs.n, inputs.rho, inputs.delta, gap)
}

/// The high-probability bound with an explicit expected-rank gap:
///
/// `arg = -(1-rho)^2 / sqrt(1-rho^2) * n sqrt(0.5 ln(1/delta)) / Delta_ij + 0.5`
///
/// yields `log_rho(arg)` when `arg` is in (0, 1), 0 when `arg >= 1` (already
/// satisfied; defensive — for valid inputs `arg` is 0.5 minus a positive
/// term), and `Infeasible` when `arg <= 0` (the deviation envelope swamps
/// the margin for every m).
pub fn hp_recovery_bound_with_delta(
    n: usize,
    rho: f64,
    delta: f64,
    delta_ij: f64,
) -> Result<RecoveryBound, TheoryError> {
    check_rho(rho)?;
    check_delta(delta)?;
    if delta_ij.is_nan() || delta_ij <= 0.0 {
        return Err(TheoryError::NonPositiveDeltaIj(delta_ij));
    }
    let arg = -(1.0 - rho).powi(2) / (1.0 - rho * rho).sqrt()
        * (n as f64 * (0.5 * (1.0 / delta).ln()).sqrt())
        / delta_ij
        + 0.5;
    if arg >= 1.0 {
        Ok(RecoveryBound::Finite(0.0))
    } else if arg <= 0.0 {
        Ok(RecoveryBound::Infeasible)
    } else {
        Ok(RecoveryBound::Finite(arg.ln() / rho.ln()))
    }
}

/// The closed-form trade-off
///
/// `f(rho, m) = (2 rho^m - 1)/(rho - 1) *
///   ( sqrt(rho^{2m} / (1 - rho^2)) * (1 - rho)/rho^m
///   + sqrt((rho^{2m} - 1) / (rho^2 - 1)) * (rho - 1)/(rho^m - 1) )`
///
/// evaluated with non-negative radicands and denominators clamped away from
/// their removable singularities at `rho -> 1` and `rho^m -> 1`. The sign
/// tracks the post-drift score margin: positive exactly when `rho^m < 1/2`.
///
/// Note: [`optimal_rho`] maximizes [`recovery_objective`] instead; the two
/// expressions disagree away from small rho, and only the latter's maximizer
/// matches the deviation-envelope derivation it is meant to optimize.
pub fn f_objective(rho: f64, m: u32) -> Result<f64, TheoryError> {
    assert!(m >= 1, "horizon m must be at least 1");
    check_rho(rho)?;
    let pm = rho.powf(m as f64);
    let p2m = pm * pm;
    let lead = (2.0 * pm - 1.0) / guard(rho - 1.0);
    let term1 = (p2m / (1.0 - rho * rho)).max(0.0).sqrt() * (1.0 - rho) / guard(pm);
    let term2 = ((p2m - 1.0) / (rho * rho - 1.0)).max(0.0).sqrt() * (rho - 1.0) / guard(pm - 1.0);
    Ok(lead * (term1 + term2))
}

/// Ratio of the expected score margin separating the drifted pair after `m`
/// rankings, `(1 - 2 rho^m) / (1 - rho)`, to the combined deviation envelope
/// `env(m, inf) + env(0, m-1)` that can mask it (the before- and after-drift
/// windows of [`epsilon`], without the shared constants). The maximizing rho
/// trades reactivity against score variance; see [`optimal_rho`].
pub fn recovery_objective(rho: f64, m: u32) -> Result<f64, TheoryError> {
    assert!(m >= 1, "horizon m must be at least 1");
    check_rho(rho)?;
    let margin = (1.0 - 2.0 * rho.powf(m as f64)) / (1.0 - rho);
    let envelope = deviation_envelope(rho, m, Horizon::Infinite)
        + deviation_envelope(rho, 0, Horizon::Finite(m - 1));
    Ok(margin / envelope)
}

/// The fading factor that maximizes [`recovery_objective`] over (0, 1) for a
/// recovery horizon of `m` rankings, found by golden-section search on
/// `[1e-4, 1 - 1e-6]` to an absolute tolerance of 1e-6.
pub fn optimal_rho(m: u32) -> f64 {
    assert!(m >= 1, "horizon m must be at least 1");
    let objective =
        |rho: f64| recovery_objective(rho, m).expect("search stays inside (0, 1)");
    let golden = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (RHO_SEARCH_LO, RHO_SEARCH_HI);
    let mut left = hi - golden * (hi - lo);
    let mut right = lo + golden * (hi - lo);
    let mut f_left = objective(left);
    let mut f_right = objective(right);
    while hi - lo > 1e-6 {
        if f_left > f_right {
            hi = right;
            right = left;
            f_right = f_left;
            left = hi - golden * (hi - lo);
            f_left = objective(left);
        } else {
            lo = left;
            left = right;
            f_left = f_right;
            right = lo + golden * (hi - lo);
            f_right = objective(right);
        }
    }
    0.5 * (lo + hi)
}

fn check_rho(rho: f64) -> Result<(), TheoryError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(TheoryError::InvalidRho(rho));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), TheoryError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(TheoryError::InvalidDelta(delta));
    }
    Ok(())
}

fn guard(denominator: f64) -> f64 {
    if denominator.abs() >= DENOMINATOR_GUARD {
        denominator
    } else if denominator < 0.0 {
        -DENOMINATOR_GUARD
    } else {
        DENOMINATOR_GUARD
    }
}
