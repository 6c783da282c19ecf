//! Rank aggregation for ranking streams whose underlying consensus drifts.
//!
//! The crate has five layers:
//!
//! - [`permutation`] — rankings in rank-vector form (`sigma(i)` is the rank
//!   of item `i`), Kendall's-tau distance in O(n log n), composition,
//!   inversion, and exhaustive enumeration for small `n`.
//! - [`mallows`] — the Mallows distribution over rankings: exact PMF,
//!   closed-form normalization, expected distance, concentration calibration,
//!   and an exact sampler.
//! - [`aggregate`] — voting rules. [`UBordaState`] maintains fading Borda
//!   scores incrementally in O(n) per ranking: with fading factor `rho`, a
//!   ranking seen `t` steps ago weighs `rho^t`, so the aggregate tracks a
//!   drifting consensus; `rho = 1` is classic Borda. Votes with arbitrary
//!   non-negative reliability weights feed the weighted frequency/majority
//!   matrices behind exact Kemeny and Copeland.
//! - [`theory`] — how many post-drift rankings the fading aggregate needs to
//!   recover the new consensus, in expectation and with high probability,
//!   plus the fading factor that makes a given recovery horizon most
//!   reliable.
//! - [`stream`] — evolving-Mallows stream generation over drift schedules
//!   and a reproducible test-then-train experiment harness.
//!
//! ```
//! use rankstream::{Permutation, UBordaState};
//!
//! let mut state = UBordaState::new(3, 0.9).unwrap();
//! state.update(&"2,1,3".parse::<Permutation>().unwrap()).unwrap();
//! state.update(&"1,2,3".parse::<Permutation>().unwrap()).unwrap();
//! assert_eq!(state.ranking().unwrap().to_string(), "1,2,3");
//! ```

pub mod aggregate;
pub mod mallows;
pub mod permutation;
pub mod stream;
pub mod theory;

pub use aggregate::{AggregateError, PairwiseMatrices, UBordaState, WeightedVote};
pub use mallows::{MallowsError, MallowsModel};
pub use permutation::{ItemPair, Permutation, PermutationError};
pub use stream::{DriftSchedule, EvaluationRecord, ExperimentConfig, StreamError, SummaryRow};
pub use theory::{DriftBoundInputs, Horizon, RecoveryBound, TheoryError};
