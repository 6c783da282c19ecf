//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line with the measured quantities (run with `--nocapture` to
//! see them on success).

use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankstream::aggregate::{
    borda, kemeny_exact, pairwise_matrices, weighted_borda, UBordaState, WeightedVote,
};
use rankstream::mallows::{calibrate_theta, expected_distance, MallowsModel};
use rankstream::permutation::{enumerate_permutations, ItemPair, Permutation};
use rankstream::stream::{run_experiment, EvaluationRecord, ExperimentConfig};
use rankstream::theory::{
    delta_ij_forms, epsilon, expected_recovery_bound, optimal_rho, Horizon,
};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Permutation {
    let mut ranks: Vec<usize> = (1..=n).collect();
    ranks.shuffle(rng);
    Permutation::from_ranks(ranks).unwrap()
}

#[test]
fn criterion_01_rho_star_reproduction() {
    let start = Instant::now();
    let rho_star = optimal_rho(20);
    let elapsed = start.elapsed();
    let pass = (rho_star - 0.9295).abs() <= 1e-3 && elapsed.as_secs_f64() < 1.0;
    println!(
        "criterion 01 (rho-star reproduction): {} — optimal_rho(20) = {rho_star:.6}, runtime {elapsed:?}",
        verdict(pass)
    );
    assert!(pass, "rho_star={rho_star}, runtime={elapsed:?}");
}

#[test]
fn criterion_02_figure_scale_reproduction() {
    let start = Instant::now();
    let config = ExperimentConfig {
        seed: 1,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&config).unwrap();
    let t = config.segment_len;
    let total = records.iter().map(|r| r.step).max().unwrap() + 1;

    let drifted = |r: &&EvaluationRecord| r.step >= t; // segments preceded by a drift
    let mean = |errors: Vec<f64>| errors.iter().sum::<f64>() / errors.len() as f64;
    let variance = |errors: &[f64]| {
        let m = errors.iter().sum::<f64>() / errors.len() as f64;
        errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (errors.len() as f64 - 1.0)
    };
    let collect = |rho: f64, keep: &dyn Fn(&&EvaluationRecord) -> bool| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.rho == rho && keep(r))
            .map(|r| r.error as f64)
            .collect()
    };

    // (a) recovered error 20 rankings after each drift
    let recovered = mean(collect(0.9295, &|r| drifted(r) && r.since_drift == 20));
    // (b) final-segment means
    let final_opt = mean(collect(0.9295, &|r| r.step >= total - t));
    let final_one = mean(collect(1.0, &|r| r.step >= total - t));
    // (c) post-recovery variance, steps 20..=99 after each drift
    let window = |r: &&EvaluationRecord| drifted(r) && (20..=99).contains(&r.since_drift);
    let var_08 = variance(&collect(0.8, &window));
    let var_opt = variance(&collect(0.9295, &window));

    let elapsed = start.elapsed();
    let pass_a = recovered < 1.0;
    let pass_b = final_one >= 2.0 * final_opt;
    let pass_c = var_08 > var_opt;
    let pass_time = elapsed.as_secs_f64() < 120.0;
    let pass = pass_a && pass_b && pass_c && pass_time;
    println!(
        "criterion 02 (figure-scale reproduction): {} — mean@20 after drift (rho 0.9295) = {recovered:.4}; \
         final-segment means rho=1: {final_one:.3} vs rho=0.9295: {final_opt:.3}; \
         post-recovery variances rho=0.8: {var_08:.4} vs rho=0.9295: {var_opt:.4}; runtime {elapsed:?}",
        verdict(pass)
    );
    assert!(pass_a, "recovered error {recovered} >= 1.0");
    assert!(pass_b, "final-segment ratio {final_one}/{final_opt} < 2");
    assert!(pass_c, "variance ordering violated: {var_08} <= {var_opt}");
    assert!(pass_time, "runtime {elapsed:?} exceeded two minutes");
}

#[test]
fn criterion_03_expected_recovery_bound_sanity() {
    let rho = 0.9f64;
    let bound = expected_recovery_bound(rho).unwrap();
    let n = 5usize;
    let theta = calibrate_theta(n, (n * (n - 1)) as f64 / 12.0).unwrap();
    let center = Permutation::identity(n);
    let (i, j) = (2usize, 3usize); // adjacent ranks under the identity
    let swapped = center.adjacent_swap(i, j).unwrap();
    let old_model = MallowsModel::new(center, theta).unwrap();
    let new_model = MallowsModel::new(swapped, theta).unwrap();

    // estimated E[B(j) - B(i)] after m post-drift rankings, over 2000 streams
    let gap_stats = |m: usize, seed: u64| {
        let streams = 2000usize;
        let depth = 200usize; // rho^200 makes the truncated tail negligible
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..streams {
            let mut state = UBordaState::new(n, rho).unwrap();
            for age in (0..depth).rev() {
                let draw = if age >= m {
                    old_model.sample(&mut rng)
                } else {
                    new_model.sample(&mut rng)
                };
                state.update(&draw).unwrap();
            }
            let gap = state.scores()[j - 1] - state.scores()[i - 1];
            sum += gap;
            sum_sq += gap * gap;
        }
        let mean = sum / streams as f64;
        let var = (sum_sq - sum * sum / streams as f64) / (streams as f64 - 1.0);
        (mean, (var / streams as f64).sqrt())
    };

    let (gap_recovered, se_recovered) = gap_stats(10, 301);
    let (gap_fresh, se_fresh) = gap_stats(1, 302);

    // m = 10 > bound: the new truth prefers j, so B(j) < B(i);
    // m = 1 < bound: still ranked by the old truth, which prefers i
    let pass_bound = (bound - 6.5788).abs() < 1e-2 && 10.0 > bound && 1.0 < bound;
    let pass_recovered = gap_recovered < 0.0 && gap_recovered.abs() > 3.0 * se_recovered;
    let pass_fresh = gap_fresh > 0.0 && gap_fresh > 3.0 * se_fresh;
    let pass = pass_bound && pass_recovered && pass_fresh;
    println!(
        "criterion 03 (expected-recovery sanity): {} — bound(0.9) = {bound:.3}; \
         gap at m=10: {gap_recovered:.4} (se {se_recovered:.4}); gap at m=1: {gap_fresh:.4} (se {se_fresh:.4})",
        verdict(pass)
    );
    assert!(pass_bound, "bound={bound}");
    assert!(pass_recovered, "m=10 gap {gap_recovered} se {se_recovered}");
    assert!(pass_fresh, "m=1 gap {gap_fresh} se {se_fresh}");
}

#[test]
fn criterion_04_oracle_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    // uborda at rho = 1 reproduces batch Borda exactly
    let mut borda_matches = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let len = rng.random_range(1..=30);
        let sample: Vec<Permutation> = (0..len).map(|_| random_permutation(n, &mut rng)).collect();
        let mut state = UBordaState::new(n, 1.0).unwrap();
        for p in &sample {
            state.update(p).unwrap();
        }
        if state.ranking().unwrap() == borda(&sample).unwrap().1 {
            borda_matches += 1;
        }
    }

    // exact Kemeny equals the exhaustive sum-of-distances minimizer
    let mut kemeny_matches = 0usize;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let len = rng.random_range(1..=8);
        let votes: Vec<WeightedVote> = (0..len)
            .map(|_| WeightedVote::unit(random_permutation(n, &mut rng)))
            .collect();
        let by_margin = kemeny_exact(&votes).unwrap();
        let by_distance = enumerate_permutations(n)
            .unwrap()
            .min_by_key(|candidate| {
                votes
                    .iter()
                    .map(|v| candidate.kendall_distance(v.ranking()).unwrap())
                    .sum::<u64>()
            })
            .unwrap();
        if by_margin == by_distance {
            kemeny_matches += 1;
        }
    }

    // integer weights behave exactly like replicated unit votes
    let mut replication_matches = 0usize;
    for _ in 0..20 {
        let n = rng.random_range(2..=5);
        let len = rng.random_range(1..=5);
        let weighted: Vec<WeightedVote> = (0..len)
            .map(|_| {
                let w = rng.random_range(1..=4) as f64;
                WeightedVote::new(random_permutation(n, &mut rng), w).unwrap()
            })
            .collect();
        let replicated: Vec<WeightedVote> = weighted
            .iter()
            .flat_map(|v| {
                std::iter::repeat_with(|| WeightedVote::unit(v.ranking().clone()))
                    .take(v.weight() as usize)
            })
            .collect();
        let same_matrices =
            pairwise_matrices(&weighted).unwrap() == pairwise_matrices(&replicated).unwrap();
        let same_borda =
            weighted_borda(&weighted).unwrap().1 == weighted_borda(&replicated).unwrap().1;
        let same_kemeny = kemeny_exact(&weighted).unwrap() == kemeny_exact(&replicated).unwrap();
        if same_matrices && same_borda && same_kemeny {
            replication_matches += 1;
        }
    }

    let pass = borda_matches == 100 && kemeny_matches == 50 && replication_matches == 20;
    println!(
        "criterion 04 (oracle equivalences): {} — uborda(rho=1)==borda {borda_matches}/100, \
         kemeny==distance-minimizer {kemeny_matches}/50, integer-weight replication {replication_matches}/20",
        verdict(pass)
    );
    assert!(pass);
}

#[test]
fn criterion_05_mallows_exactness() {
    // pmf sums to 1 across sizes and concentrations
    let mut worst_sum_gap: f64 = 0.0;
    for n in 2..=6 {
        for theta in [0.0, 0.1, 1.0, 5.0] {
            let model = MallowsModel::new(Permutation::identity(n), theta).unwrap();
            let total: f64 = enumerate_permutations(n)
                .unwrap()
                .map(|p| model.pmf(&p).unwrap())
                .sum();
            worst_sum_gap = worst_sum_gap.max((total - 1.0).abs());
        }
    }
    let pass_sums = worst_sum_gap <= 1e-12;

    // sampler frequencies against the exact pmf
    let model = MallowsModel::new(Permutation::identity(4), 1.0).unwrap();
    let draws = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut counts = std::collections::HashMap::new();
    for _ in 0..draws {
        *counts.entry(model.sample(&mut rng)).or_insert(0usize) += 1;
    }
    let mut worst_freq_gap: f64 = 0.0;
    for p in enumerate_permutations(4).unwrap() {
        let freq = counts.get(&p).copied().unwrap_or(0) as f64 / draws as f64;
        worst_freq_gap = worst_freq_gap.max((freq - model.pmf(&p).unwrap()).abs());
    }
    let pass_freqs = worst_freq_gap <= 0.01;

    // calibration round trip
    let mut worst_round_trip: f64 = 0.0;
    for theta in [0.05, 0.2, 0.5, 1.0, 1.7, 2.4, 2.9] {
        let back = calibrate_theta(7, expected_distance(7, theta)).unwrap();
        worst_round_trip = worst_round_trip.max((back - theta).abs());
    }
    let pass_round_trip = worst_round_trip <= 1e-8;

    let pass = pass_sums && pass_freqs && pass_round_trip;
    println!(
        "criterion 05 (Mallows exactness): {} — worst pmf-sum gap {worst_sum_gap:.2e}, \
         worst sampler-frequency gap {worst_freq_gap:.4} at 1e6 draws, worst calibration round-trip {worst_round_trip:.2e}",
        verdict(pass)
    );
    assert!(pass_sums, "pmf sum gap {worst_sum_gap}");
    assert!(pass_freqs, "frequency gap {worst_freq_gap}");
    assert!(pass_round_trip, "round trip {worst_round_trip}");
}

#[test]
fn criterion_06_adjacent_swap_expectation_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(3..=6);
        let theta = 0.1 + rng.random::<f64>() * 2.4;
        let center = random_permutation(n, &mut rng);
        let ordering = center.ordering();
        let k = rng.random_range(0..n - 1);
        let (i, j) = (ordering[k], ordering[k + 1]); // center ranks i just above j
        let base = MallowsModel::new(center.clone(), theta).unwrap();
        let swapped =
            MallowsModel::new(center.adjacent_swap(i, j).unwrap(), theta).unwrap();
        let e_base = base.expected_rank_vector().unwrap();
        let e_swapped = swapped.expected_rank_vector().unwrap();
        worst = worst.max((e_swapped[i - 1] - e_base[j - 1]).abs());
        worst = worst.max((e_swapped[j - 1] - e_base[i - 1]).abs());
    }
    let pass = worst <= 1e-10;
    println!(
        "criterion 06 (adjacent-swap expectation identity): {} — worst gap {worst:.2e} over 20 cases",
        verdict(pass)
    );
    assert!(pass, "worst gap {worst}");
}

#[test]
fn criterion_07_delta_dual_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_gap: f64 = 0.0;
    let mut positivity = true;
    for n in 3..=6 {
        for _ in 0..5 {
            let theta = 0.1 + rng.random::<f64>() * 2.0;
            let center = random_permutation(n, &mut rng);
            let model = MallowsModel::new(center.clone(), theta).unwrap();
            for i in 1..=n {
                for j in 1..=n {
                    if i == j {
                        continue;
                    }
                    let pair = ItemPair::new(i, j).unwrap();
                    let (expectation, pairwise) = delta_ij_forms(&model, pair).unwrap();
                    worst_gap = worst_gap.max((expectation - pairwise).abs());
                    if center.rank_of(i) < center.rank_of(j) && expectation <= 0.0 {
                        positivity = false;
                    }
                }
            }
        }
    }
    let pass = worst_gap <= 1e-10 && positivity;
    println!(
        "criterion 07 (Delta_ij dual path): {} — worst form disagreement {worst_gap:.2e}, positivity {}",
        verdict(pass),
        positivity
    );
    assert!(pass, "worst gap {worst_gap}, positivity {positivity}");
}

#[test]
fn criterion_08_deviation_coverage() {
    let n = 5usize;
    let rho = 0.9f64;
    let delta = 0.1f64;
    let window = 30u32; // deviation window [0, 30): streams of 30 rankings
    let streams = 2000usize;
    let theta = calibrate_theta(n, (n * (n - 1)) as f64 / 12.0).unwrap();
    let model = MallowsModel::new(Permutation::identity(n), theta).unwrap();
    let expected = model.expected_rank_vector().unwrap();
    let bound = epsilon(n, rho, delta, 0, Horizon::Finite(window)).unwrap();
    // expectation of the normalized score over the window
    let discounted_mass = (1.0 - rho.powi(window as i32)) / (1.0 - rho);

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut exceedances = vec![0usize; n];
    for _ in 0..streams {
        let mut state = UBordaState::new(n, rho).unwrap();
        for _ in 0..window {
            state.update(&model.sample(&mut rng)).unwrap();
        }
        for (item, &normalized) in state.normalized_scores().iter().enumerate() {
            let center = (1.0 - rho) * discounted_mass * expected[item];
            if (normalized - center).abs() > bound {
                exceedances[item] += 1;
            }
        }
    }
    let worst_fraction = exceedances
        .iter()
        .map(|&e| e as f64 / streams as f64)
        .fold(0.0f64, f64::max);
    let pass = worst_fraction <= 2.0 * delta;
    println!(
        "criterion 08 (deviation coverage): {} — worst per-item exceedance fraction {worst_fraction:.4} \
         (envelope {bound:.4}, budget {:.1})",
        verdict(pass),
        2.0 * delta
    );
    assert!(pass, "worst fraction {worst_fraction}");
}

#[test]
fn criterion_09_update_cost() {
    let n = 10usize;
    let updates = 1_000_000usize;
    let model = MallowsModel::new(Permutation::identity(n), 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let pool: Vec<Permutation> = (0..1024).map(|_| model.sample(&mut rng)).collect();
    let mut state = UBordaState::new(n, 0.999).unwrap();
    let start = Instant::now();
    for k in 0..updates {
        state.update(&pool[k & 1023]).unwrap();
    }
    let elapsed = start.elapsed();
    // memory stays at one score per item no matter how long the stream ran
    let pass = elapsed.as_secs_f64() < 1.0 && state.scores().len() == n && state.count() == updates as u64;
    println!(
        "criterion 09 (update cost): {} — 1e6 updates at n=10 in {elapsed:?}, state holds {} scores",
        verdict(pass),
        state.scores().len()
    );
    assert!(pass, "elapsed {elapsed:?}");
}

#[test]
fn criterion_10_simulation_determinism() {
    let binary = env!("CARGO_BIN_EXE_rankstream");
    let scratch = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = scratch.path().join(dir);
        let status = Command::new(binary)
            .args([
                "simulate",
                "--n",
                "5",
                "--T",
                "20",
                "--rho",
                "0.8,1.0",
                "--runs",
                "3",
                "--seed",
                "7",
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        (
            std::fs::read(out.join("records.csv")).unwrap(),
            std::fs::read(out.join("summary.csv")).unwrap(),
        )
    };
    let (records_a, summary_a) = run("first");
    let (records_b, summary_b) = run("second");
    let pass = records_a == records_b && summary_a == summary_b && !records_a.is_empty();
    println!(
        "criterion 10 (simulation determinism): {} — records {} bytes, summary {} bytes, byte-identical across runs",
        verdict(pass),
        records_a.len(),
        summary_a.len()
    );
    assert!(pass);
}
