//! Command-line front end: batch aggregation of vote files, stream
//! simulation, recovery bounds, fading-factor optimization, and Mallows
//! sampling.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankstream::aggregate::{
    borda, copeland, kemeny_exact, pairwise_matrices, parse_votes, weighted_borda, WeightedVote,
};
use rankstream::mallows::MallowsModel;
use rankstream::permutation::{ItemPair, Permutation};
use rankstream::stream::{run_experiment, summarize, write_records_csv, write_summary_csv,
    ExperimentConfig};
use rankstream::theory::{
    delta_ij, expected_recovery_bound, hp_recovery_bound_with_delta, optimal_rho,
};

#[derive(Parser)]
#[command(name = "rankstream", version, about = "Rank aggregation over drifting ranking streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a votes file into one consensus ranking
    Aggregate {
        /// Votes file: one `w;r1,r2,...,rn` per line, weight optional
        #[arg(long)]
        votes: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Fading factor for uborda; file order is oldest-first
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Run the reversal-drift experiment and write records/summary CSVs
    Simulate {
        /// Number of ranked items
        #[arg(long, default_value_t = 7)]
        n: usize,
        /// Rankings per concept
        #[arg(long = "T", default_value_t = 100)]
        segment_len: u64,
        /// Fading factors, comma separated
        #[arg(long = "rho", value_delimiter = ',', default_values_t = vec![0.8, 0.9295, 1.0])]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        runs: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for records.csv and summary.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Print drift-recovery bounds for one adjacent-swap drift
    Bounds {
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Drifted adjacent pair as `i,j` (default 1,2 under the identity)
        #[arg(long)]
        pair: Option<String>,
        /// Explicit expected-rank gap, bypassing exact enumeration
        #[arg(long = "delta-ij")]
        delta_ij: Option<f64>,
    },
    /// Print the fading factor that best supports recovery within m rankings
    RhoOpt {
        #[arg(long)]
        m: u32,
    },
    /// Draw rankings from a Mallows model, one per line
    Sample {
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Modal ranking (default: identity)
        #[arg(long)]
        center: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Borda,
    Uborda,
    Kemeny,
    Copeland,
}

/// Usage errors exit with 1, anything that fails while touching data with 2.
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Data(err)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Data(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Aggregate { votes, method, rho } => cmd_aggregate(&votes, method, rho),
        Command::Simulate {
            n,
            segment_len,
            rho,
            runs,
            seed,
            out,
        } => cmd_simulate(n, segment_len, rho, runs, seed, &out),
        Command::Bounds {
            n,
            rho,
            theta,
            delta,
            pair,
            delta_ij,
        } => cmd_bounds(n, rho, theta, delta, pair.as_deref(), delta_ij),
        Command::RhoOpt { m } => cmd_rho_opt(m),
        Command::Sample {
            n,
            theta,
            count,
            seed,
            center,
        } => cmd_sample(n, theta, count, seed, center.as_deref()),
    }
}

fn cmd_aggregate(votes_path: &PathBuf, method: Method, rho: Option<f64>) -> Result<(), CliError> {
    if let Some(rho) = rho {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(CliError::Usage(format!(
                "--rho must lie in (0, 1], got {rho}"
            )));
        }
    }
    let file = File::open(votes_path)
        .with_context(|| format!("opening votes file {}", votes_path.display()))
        .map_err(CliError::Data)?;
    let votes = parse_votes(BufReader::new(file))
        .with_context(|| format!("parsing {}", votes_path.display()))
        .map_err(CliError::Data)?;
    let consensus = match method {
        Method::Borda => {
            if votes.iter().all(|v| v.weight() == 1.0) {
                let rankings: Vec<Permutation> =
                    votes.iter().map(|v| v.ranking().clone()).collect();
                borda(&rankings).map_err(into_data)?.1
            } else {
                weighted_borda(&votes).map_err(into_data)?.1
            }
        }
        Method::Uborda => {
            let rho = rho.ok_or_else(|| {
                CliError::Usage("method uborda requires --rho".to_string())
            })?;
            // oldest-first file order: line t of k gets weight w_t * rho^(k-1-t)
            let k = votes.len();
            let faded = votes
                .iter()
                .enumerate()
                .map(|(t, v)| {
                    WeightedVote::new(
                        v.ranking().clone(),
                        v.weight() * rho.powi((k - 1 - t) as i32),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(into_data)?;
            weighted_borda(&faded).map_err(into_data)?.1
        }
        Method::Kemeny => kemeny_exact(&votes).map_err(into_data)?,
        Method::Copeland => copeland(&pairwise_matrices(&votes).map_err(into_data)?),
    };
    println!("{consensus}");
    Ok(())
}

fn cmd_simulate(
    n: usize,
    segment_len: u64,
    rho_values: Vec<f64>,
    runs: u32,
    seed: u64,
    out: &PathBuf,
) -> Result<(), CliError> {
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".to_string()));
    }
    if segment_len == 0 {
        return Err(CliError::Usage("--T must be at least 1".to_string()));
    }
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".to_string()));
    }
    if rho_values.is_empty() {
        return Err(CliError::Usage("--rho needs at least one value".to_string()));
    }
    for &rho in &rho_values {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(CliError::Usage(format!(
                "--rho values must lie in (0, 1], got {rho}"
            )));
        }
    }
    let config = ExperimentConfig {
        n,
        segment_len,
        rho_values,
        runs,
        seed,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&config)
        .map_err(|e| CliError::Data(anyhow!(e)))?;
    let summary = summarize(&records).map_err(|e| CliError::Data(anyhow!(e)))?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))
        .map_err(CliError::Data)?;
    let records_path = out.join("records.csv");
    let summary_path = out.join("summary.csv");
    let mut writer = BufWriter::new(
        File::create(&records_path)
            .with_context(|| format!("creating {}", records_path.display()))
            .map_err(CliError::Data)?,
    );
    write_records_csv(&mut writer, &records)
        .and_then(|()| writer.flush())
        .with_context(|| format!("writing {}", records_path.display()))
        .map_err(CliError::Data)?;
    let mut writer = BufWriter::new(
        File::create(&summary_path)
            .with_context(|| format!("creating {}", summary_path.display()))
            .map_err(CliError::Data)?,
    );
    write_summary_csv(&mut writer, &summary)
        .and_then(|()| writer.flush())
        .with_context(|| format!("writing {}", summary_path.display()))
        .map_err(CliError::Data)?;
    println!("records: {}", records_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

fn cmd_bounds(
    n: usize,
    rho: f64,
    theta: f64,
    delta: f64,
    pair: Option<&str>,
    delta_override: Option<f64>,
) -> Result<(), CliError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(CliError::Usage(format!(
            "--rho must lie strictly inside (0, 1), got {rho}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::Usage(format!(
            "--delta must lie strictly inside (0, 1), got {delta}"
        )));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(CliError::Usage(format!(
            "--theta must be finite and non-negative, got {theta}"
        )));
    }
    let pair = match pair {
        Some(text) => parse_pair(text)?,
        None => ItemPair::new(1, 2).expect("static pair"),
    };

    let gap = match delta_override {
        Some(gap) => {
            if gap.is_nan() || gap <= 0.0 {
                return Err(CliError::Usage(format!(
                    "--delta-ij must be positive, got {gap}"
                )));
            }
            gap
        }
        None => {
            let model = MallowsModel::new(Permutation::identity(n), theta)
                .map_err(|e| CliError::Data(anyhow!(e)))?;
            delta_ij(&model, pair).map_err(|e| CliError::Data(anyhow!(e)))?
        }
    };
    let expected = expected_recovery_bound(rho).map_err(|e| CliError::Data(anyhow!(e)))?;
    let hp = hp_recovery_bound_with_delta(n, rho, delta, gap)
        .map_err(|e| CliError::Data(anyhow!(e)))?;
    println!("expected_bound: {expected:.6}");
    println!("delta_ij: {gap:.6}");
    println!("hp_bound: {hp}");
    Ok(())
}

fn cmd_rho_opt(m: u32) -> Result<(), CliError> {
    if m == 0 {
        return Err(CliError::Usage("--m must be at least 1".to_string()));
    }
    println!("{:.6}", optimal_rho(m));
    Ok(())
}

fn cmd_sample(
    n: usize,
    theta: f64,
    count: u64,
    seed: u64,
    center: Option<&str>,
) -> Result<(), CliError> {
    let center = match center {
        Some(text) => text
            .parse::<Permutation>()
            .map_err(|e| CliError::Data(anyhow!(e)))?,
        None => {
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".to_string()));
            }
            Permutation::identity(n)
        }
    };
    let model = MallowsModel::new(center, theta).map_err(|e| CliError::Data(anyhow!(e)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for _ in 0..count {
        writeln!(out, "{}", model.sample(&mut rng))
            .context("writing samples")
            .map_err(CliError::Data)?;
    }
    out.flush().context("flushing samples").map_err(CliError::Data)?;
    Ok(())
}

fn parse_pair(text: &str) -> Result<ItemPair, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "--pair must look like `i,j`, got {text:?}"
        )));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| CliError::Usage(format!("--pair: {e}")))
    };
    ItemPair::new(parse(parts[0])?, parse(parts[1])?)
        .map_err(|e| CliError::Usage(format!("--pair: {e}")))
}

fn into_data(err: rankstream::AggregateError) -> CliError {
    CliError::Data(anyhow!(err))
}
