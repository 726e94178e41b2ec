//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use monotest::error::Error;
use monotest::geometry::CubePointSet;
use monotest::harness::{
    self, experiment_duo, experiment_lindeberg, ExperimentConfig, MetricRow, RunReport,
};
use monotest::instances::{sample_no, sample_yes, HardInstanceFamily, QueryMatrix};
use monotest::mollifier::derivative_bound_check;
use monotest::monotone::{exact_distance_to_monotone, fourier_negative_mass, TruthTable};
use monotest::moments::{find_mu, YesNoPair};
use monotest::pruning::{is_scattered, prune_query_matrix, PruneParams};
use monotest::rng::stream;
use monotest::verify;

#[derive(Parser)]
#[command(name = "monotest", version, about = "Hard instances and measurements for non-adaptive monotonicity testing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the moment-matched yes/no coefficient pair.
    BuildRv {
        #[arg(long)]
        ell: usize,
        /// Mean shift; the smallest feasible integer when omitted.
        #[arg(long)]
        mu: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample threshold functions from the yes or no distribution.
    Sample {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long)]
        mu: Option<u64>,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, value_parser = ["yes", "no"], default_value = "yes")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact distance to monotonicity of no-distribution draws.
    Dist {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Union-of-orthants distance between the coefficient sums.
    Duo {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long)]
        mu: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Also enumerate the exact value (guarded by instance size).
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prune a query set until it is scattered.
    Prune {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        h: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Threshold scale; 1.0 is the defining threshold.
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
        /// Read the query matrix from a JSON file instead of sampling.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scatteredness report for a query matrix file.
    ScatterCheck {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 3)]
        h: usize,
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
    },
    /// Numerical derivative-ceiling check for the smooth step.
    MollCheck {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 300)]
        grid: usize,
    },
    /// Replacement-step experiment across a dimension grid.
    Lindeberg {
        #[arg(long, value_delimiter = ',', default_value = "256,1024")]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long, default_value_t = 2_000)]
        samples: u64,
        #[arg(long, default_value_t = 24)]
        i_count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full acceptance suite.
    VerifyAll {
        /// Trim Monte Carlo sample counts (tolerances unchanged).
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParam(_)
                | Error::EvenMomentOrder(_)
                | Error::MomentOrderCap(_, _)
                | Error::ResourceGuard(_)
                | Error::Precondition(_)
                | Error::DimensionMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::BuildRv { ell, mu, out } => {
            let mu = match mu {
                Some(m) => m,
                None => find_mu(ell)?,
            };
            let pair = YesNoPair::build(ell, mu)?;
            let body = serde_json::json!({
                "pair": pair,
                "max_relative_moment_error": pair.max_moment_error(),
                "yes_support": pair.yes_rv.support_size(),
                "no_support": pair.no_rv.support_size(),
                "no_negative_mass": pair.no_rv.negative_mass(),
            });
            write_json(&body, harness::output_dir(out), "yesno_pair.json")?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sample { n, ell, mu, count, kind, seed, out } => {
            let family = family(n, ell, mu)?;
            let mut rng = stream(seed, 0);
            let draws: Vec<_> = (0..count)
                .map(|_| {
                    if kind == "yes" {
                        sample_yes(&family, &mut rng)
                    } else {
                        sample_no(&family, &mut rng)
                    }
                })
                .collect();
            write_json(&serde_json::json!(draws), harness::output_dir(out), "ltfs.json")?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Dist { n, ell, seed, draws, out } => {
            let family = family(n, ell, None)?;
            let mut rng = stream(seed, 0);
            let mut rows = Vec::new();
            for i in 0..draws {
                let f = sample_no(&family, &mut rng);
                let t = TruthTable::from_ltf(&f)?;
                let dist = exact_distance_to_monotone(&t)?;
                let floor = 0.25 * fourier_negative_mass(&t);
                for (metric, value) in [
                    ("exact_distance", dist.value()),
                    ("fourier_quarter_floor", floor),
                ] {
                    rows.push(MetricRow {
                        metric: format!("{metric}_draw{i}"),
                        n,
                        d: 0,
                        ell: family.ell,
                        mu: family.mu,
                        method: "exact".into(),
                        value,
                        stderr: 0.0,
                        samples: 0,
                        seed,
                    });
                }
            }
            let config = ExperimentConfig {
                seed,
                n,
                d: 0,
                ell: Some(ell),
                samples: 0,
                ..Default::default()
            };
            let (resolved, _) = config.resolve()?;
            harness::emit(&RunReport::new(resolved, rows, 0.0), harness::output_dir(out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Duo { n, d, ell, mu, seed, samples, exact, out } => {
            let config = ExperimentConfig {
                seed,
                n,
                d,
                ell: Some(ell),
                mu,
                samples,
                ..Default::default()
            };
            let report = experiment_duo(&config, exact)?;
            harness::emit(&report, harness::output_dir(out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Prune { n, d, h, seed, factor, matrix, out } => {
            let qm = match matrix {
                Some(path) => read_matrix(&path)?,
                None => QueryMatrix::random(n, d, &mut stream(seed, 0)),
            };
            let params = PruneParams { threshold_factor: factor, seed, ..Default::default() };
            let (pruned, trace) = prune_query_matrix(&qm, h, &params)?;
            let set = CubePointSet::from_rows_dedup(pruned.n, &pruned.rows)?;
            let report = is_scattered(&set, h, &params)?;
            let body = serde_json::json!({
                "trace": trace,
                "pruned": pruned,
                "scattered": report.scattered,
                "mode": report.mode,
            });
            write_json(&body, harness::output_dir(out), "prune_trace.json")?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ScatterCheck { matrix, h, factor } => {
            let qm = read_matrix(&matrix)?;
            let set = CubePointSet::from_rows_dedup(qm.n, &qm.rows)?;
            let params = PruneParams { threshold_factor: factor, ..Default::default() };
            let report = is_scattered(&set, h, &params)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::MollCheck { eps, k, grid } => {
            let report = derivative_bound_check(eps, k, grid)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Lindeberg { n_grid, d, eps, ell, samples, i_count, seed, out } => {
            let config = ExperimentConfig {
                seed,
                d,
                eps: Some(eps),
                ell: Some(ell),
                samples,
                ..Default::default()
            };
            let report = experiment_lindeberg(&config, &n_grid, i_count)?;
            harness::emit(&report, harness::output_dir(out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::VerifyAll { quick } => {
            let results = verify::run_all(quick);
            let mut all_ok = true;
            for r in &results {
                println!("{r}");
                all_ok &= r.passed;
            }
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn family(n: usize, ell: usize, mu: Option<u64>) -> Result<HardInstanceFamily, Error> {
    let mut family = HardInstanceFamily::new(n, 1.0, Some(ell))?;
    if let Some(mu) = mu {
        family.mu = mu;
        family.pair = YesNoPair::build(ell, mu)?;
    }
    Ok(family)
}

fn read_matrix(path: &PathBuf) -> Result<QueryMatrix, Error> {
    let text = std::fs::read_to_string(path)?;
    let qm: QueryMatrix = serde_json::from_str(&text)?;
    qm.validate()?;
    Ok(qm)
}

fn write_json(
    body: &serde_json::Value,
    dir: Option<PathBuf>,
    name: &str,
) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(body)?;
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}
