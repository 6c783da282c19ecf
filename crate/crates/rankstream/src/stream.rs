//! Evolving-Mallows streams and the drift experiment harness.
//!
//! A [`DriftSchedule`] concatenates Mallows segments with a shared
//! concentration; [`generate_stream`] samples it lazily; [`run_experiment`]
//! evaluates fading-factor aggregation over the incremental-reversal
//! schedule with the test-then-train protocol (each arriving ranking scores
//! the current estimate before being absorbed).

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::UBordaState;
use crate::mallows::{calibrate_theta, MallowsError, MallowsModel};
use crate::permutation::Permutation;

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error(transparent)]
    Mallows(#[from] MallowsError),
    #[error("schedule must contain at least one segment")]
    EmptySchedule,
    #[error("segment centers must all rank the same number of items")]
    MixedSizes,
    #[error("segment lengths must be at least 1")]
    ZeroLength,
    #[error("experiment needs at least one fading factor")]
    NoRhoValues,
    #[error("fading factor must lie in (0, 1], got {0}")]
    InvalidRho(f64),
    #[error("experiment needs at least one run")]
    NoRuns,
    #[error("experiment needs at least two items")]
    TooFewItems,
    #[error("nothing to summarize")]
    NoRecords,
}

/// One stationary stretch of the stream: `length` draws from a Mallows model
/// centered at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub center: Permutation,
    pub length: u64,
}

/// A piecewise-stationary ranking distribution: an ordered list of segments
/// sharing one concentration `theta`. Consecutive centers may differ —
/// each such boundary is a drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct DriftSchedule {
    theta: f64,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    theta: f64,
    segments: Vec<Segment>,
}

impl TryFrom<ScheduleRepr> for DriftSchedule {
    type Error = StreamError;

    fn try_from(raw: ScheduleRepr) -> Result<Self, Self::Error> {
        DriftSchedule::new(raw.segments, raw.theta)
    }
}

impl From<DriftSchedule> for ScheduleRepr {
    fn from(schedule: DriftSchedule) -> Self {
        ScheduleRepr {
            theta: schedule.theta,
            segments: schedule.segments,
        }
    }
}

impl DriftSchedule {
    pub fn new(segments: Vec<Segment>, theta: f64) -> Result<Self, StreamError> {
        if segments.is_empty() {
            return Err(StreamError::EmptySchedule);
        }
        let n = segments[0].center.len();
        for segment in &segments {
            if segment.center.len() != n {
                return Err(StreamError::MixedSizes);
            }
            if segment.length == 0 {
                return Err(StreamError::ZeroLength);
            }
        }
        // validates theta
        MallowsModel::new(segments[0].center.clone(), theta)?;
        Ok(Self { theta, segments })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn n(&self) -> usize {
        self.segments[0].center.len()
    }

    /// Total number of rankings the schedule emits.
    pub fn total_length(&self) -> u64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Rankings absorbed since the segment's start, per global step: the
    /// within-segment index of each emission.
    pub fn since_drift_indices(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.total_length() as usize);
        for segment in &self.segments {
            out.extend(0..segment.length);
        }
        out
    }
}

/// The abrupt-drift schedule that walks the modal ranking from the identity
/// to its reverse through adjacent transpositions (bubble passes, left to
/// right), one segment of `segment_len` rankings per center. The walk is
/// minimal, so it has `n(n-1)/2` drifts, `n(n-1)/2 + 1` segments, and
/// consecutive centers at Kendall distance exactly 1.
pub fn incremental_reversal_schedule(
    n: usize,
    segment_len: u64,
    theta: f64,
) -> Result<DriftSchedule, StreamError> {
    if n < 2 {
        return Err(StreamError::TooFewItems);
    }
    if segment_len == 0 {
        return Err(StreamError::ZeroLength);
    }
    let mut items: Vec<usize> = (1..=n).collect();
    let mut centers = vec![Permutation::from_ordering(&items).expect("valid ordering")];
    for pass in 0..(n - 1) {
        for pos in 0..(n - 1 - pass) {
            items.swap(pos, pos + 1);
            centers.push(Permutation::from_ordering(&items).expect("valid ordering"));
        }
    }
    let segments = centers
        .into_iter()
        .map(|center| Segment {
            center,
            length: segment_len,
        })
        .collect();
    DriftSchedule::new(segments, theta)
}

/// Lazily samples the schedule: each emission is `(draw, truth)` where
/// `truth` is the center of the segment the draw came from. O(n) memory.
pub fn generate_stream<'a, R: Rng>(
    schedule: &'a DriftSchedule,
    rng: &'a mut R,
) -> StreamIter<'a, R> {
    StreamIter {
        schedule,
        rng,
        segment: 0,
        emitted: 0,
        model: None,
    }
}

pub struct StreamIter<'a, R: Rng> {
    schedule: &'a DriftSchedule,
    rng: &'a mut R,
    segment: usize,
    emitted: u64,
    model: Option<MallowsModel>,
}

impl<R: Rng> Iterator for StreamIter<'_, R> {
    type Item = (Permutation, Permutation);

    fn next(&mut self) -> Option<Self::Item> {
        let segments = self.schedule.segments();
        while self.segment < segments.len() && self.emitted >= segments[self.segment].length {
            self.segment += 1;
            self.emitted = 0;
            self.model = None;
        }
        if self.segment >= segments.len() {
            return None;
        }
        let segment = &segments[self.segment];
        if self.model.is_none() {
            self.model = Some(
                MallowsModel::new(segment.center.clone(), self.schedule.theta())
                    .expect("schedule validated on construction"),
            );
        }
        self.emitted += 1;
        let draw = self.model.as_ref().unwrap().sample(self.rng);
        Some((draw, segment.center.clone()))
    }
}

/// Test-then-train evaluation of one fading-factor learner: for each
/// `(ranking, truth)` pair the current estimate is scored against `truth`
/// (Kendall distance) BEFORE the ranking is absorbed. Before any ranking has
/// been absorbed the estimate is the tie-break ranking of the all-zero score
/// vector, i.e. the identity.
pub fn test_then_train<I>(n: usize, rho: f64, stream: I) -> Result<Vec<u64>, StreamError>
where
    I: IntoIterator<Item = (Permutation, Permutation)>,
{
    let mut state = UBordaState::new(n, rho).map_err(|_| StreamError::InvalidRho(rho))?;
    let identity = Permutation::identity(n);
    let mut errors = Vec::new();
    for (ranking, truth) in stream {
        let estimate = if state.count() == 0 {
            identity.clone()
        } else {
            state.ranking().expect("state is non-empty")
        };
        errors.push(
            estimate
                .kendall_distance(&truth)
                .expect("stream emissions share the schedule size"),
        );
        state
            .update(&ranking)
            .expect("stream emissions share the schedule size");
    }
    Ok(errors)
}

/// Parameters of the reversal-drift experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Number of ranked items.
    pub n: usize,
    /// Rankings per concept (the segment length T).
    pub segment_len: u64,
    /// Fading factors to evaluate side by side.
    pub rho_values: Vec<f64>,
    /// Independent repetitions.
    pub runs: u32,
    /// Root seed; every (run, rho) pair derives its own substream.
    pub seed: u64,
    /// Recovery horizon the default middle fading factor is tuned for.
    pub m_target: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 7,
            segment_len: 100,
            rho_values: vec![0.8, 0.9295, 1.0],
            runs: 30,
            seed: 1,
            m_target: 20,
        }
    }
}

/// One test-then-train measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub rho: f64,
    pub run: u32,
    /// Global index of the evaluated ranking within its stream.
    pub step: u64,
    /// Same-concept rankings already absorbed when the error was recorded.
    pub since_drift: u64,
    /// Kendall distance between the estimate and the current truth.
    pub error: u64,
}

/// Runs the reversal-drift experiment: for every run and fading factor, a
/// fresh learner consumes a fresh stream of the incremental-reversal
/// schedule, scored test-then-train. The concentration is calibrated so the
/// expected distance to the truth is one third of the uniform mean, i.e.
/// `n(n-1)/12`. Deterministic for a fixed config; records are sorted by
/// (rho, run, step).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<EvaluationRecord>, StreamError> {
    if config.runs == 0 {
        return Err(StreamError::NoRuns);
    }
    if config.rho_values.is_empty() {
        return Err(StreamError::NoRhoValues);
    }
    for &rho in &config.rho_values {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(StreamError::InvalidRho(rho));
        }
    }
    let theta = calibrate_theta(config.n, (config.n * (config.n - 1)) as f64 / 12.0)
        .map_err(|_| StreamError::TooFewItems)?;
    let schedule = incremental_reversal_schedule(config.n, config.segment_len, theta)?;
    let since_drift = schedule.since_drift_indices();

    let jobs: Vec<(u32, usize)> = (0..config.runs)
        .flat_map(|run| (0..config.rho_values.len()).map(move |q| (run, q)))
        .collect();
    let chunks: Vec<Vec<EvaluationRecord>> = jobs
        .par_iter()
        .map(|&(run, q)| {
            let rho = config.rho_values[q];
            let mut rng = derive_rng(config.seed, run, q);
            let errors = test_then_train(config.n, rho, generate_stream(&schedule, &mut rng))
                .expect("validated config");
            errors
                .into_iter()
                .enumerate()
                .map(|(step, error)| EvaluationRecord {
                    rho,
                    run,
                    step: step as u64,
                    since_drift: since_drift[step],
                    error,
                })
                .collect()
        })
        .collect();

    let mut records: Vec<EvaluationRecord> = chunks.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.rho
            .total_cmp(&b.rho)
            .then(a.run.cmp(&b.run))
            .then(a.step.cmp(&b.step))
    });
    Ok(records)
}

/// Every (run, rho) pair owns an independent deterministic substream.
fn derive_rng(seed: u64, run: u32, rho_index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&run.to_le_bytes());
    key[12..20].copy_from_slice(&(rho_index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Per-(rho, step) mean error with a normal-approximation 95% confidence
/// band across runs. A single run yields a zero-width band by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rho: f64,
    pub step: u64,
    pub mean_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn summarize(records: &[EvaluationRecord]) -> Result<Vec<SummaryRow>, StreamError> {
    if records.is_empty() {
        return Err(StreamError::NoRecords);
    }
    // positive floats order like their bit patterns
    let mut groups: std::collections::BTreeMap<(u64, u64), Vec<f64>> =
        std::collections::BTreeMap::new();
    for record in records {
        groups
            .entry((record.rho.to_bits(), record.step))
            .or_default()
            .push(record.error as f64);
    }
    let rows = groups
        .into_iter()
        .map(|((rho_bits, step), errors)| {
            let k = errors.len() as f64;
            let mean = errors.iter().sum::<f64>() / k;
            let half_width = if errors.len() < 2 {
                0.0
            } else {
                let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
                1.96 * (var / k).sqrt()
            };
            SummaryRow {
                rho: f64::from_bits(rho_bits),
                step,
                mean_error: mean,
                ci_low: mean - half_width,
                ci_high: mean + half_width,
            }
        })
        .collect();
    Ok(rows)
}

/// Writes the per-record CSV: `rho,run,step,since_drift,error`.
pub fn write_records_csv<W: Write>(
    mut out: W,
    records: &[EvaluationRecord],
) -> std::io::Result<()> {
    writeln!(out, "rho,run,step,since_drift,error")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.rho, r.run, r.step, r.since_drift, r.error
        )?;
    }
    Ok(())
}

/// Writes the summary CSV: `rho,step,mean_error,ci_low,ci_high`.
pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "rho,step,mean_error,ci_low,ci_high")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.rho, r.step, r.mean_error, r.ci_low, r.ci_high
        )?;
    }
    Ok(())
}
