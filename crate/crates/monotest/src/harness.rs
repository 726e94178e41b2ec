//! Experiment configuration, reproducible reports, and the experiment
//! runners behind the CLI.
//!
//! Every run is a pure function of its config: samplers draw from
//! numbered streams of the config seed, reports echo all derived
//! parameters, and CSV bodies are byte-identical across reruns of the
//! same config (wall time lives only in the JSON report).

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instances::{choose_h, QueryMatrix};
use crate::mollifier::OrthantMollifier;
use crate::moments::{find_mu, YesNoPair};
use crate::orthants::{
    duo_exact_small, duo_monte_carlo, lindeberg_step_gap, mollified_gap_direct,
};
use crate::pruning::{prune_query_matrix, PruneParams};
use crate::rng::stream;

/// CSV schema version; bump on any column change.
pub const CSV_SCHEMA: u32 = 1;

/// User-facing experiment parameters. Optional fields are derived at
/// resolve time and echoed in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    /// Exponent gap of the target family; sets `h`.
    pub c: f64,
    /// Moment order; defaults to `h^3`, which is only usable for tiny
    /// `h` — desk-scale runs override it.
    #[serde(default)]
    pub ell: Option<usize>,
    #[serde(default)]
    pub mu: Option<u64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub samples: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            n: 64,
            d: 4,
            c: 1.0,
            ell: Some(3),
            mu: None,
            eps: None,
            delta: None,
            samples: 100_000,
            workers: 1,
        }
    }
}

/// Fully derived parameters, echoed verbatim into reports.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub h: usize,
    pub ell: usize,
    pub ell_overridden: bool,
    pub mu: u64,
    pub eps: f64,
    pub delta: f64,
    pub samples: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<(ResolvedConfig, YesNoPair)> {
        let h = choose_h(self.c);
        let ell = self.ell.unwrap_or(h * h * h);
        let mu = match self.mu {
            Some(m) => m,
            None => find_mu(ell)?,
        };
        let pair = YesNoPair::build(ell, mu)?;
        let nf = self.n as f64;
        Ok((
            ResolvedConfig {
                seed: self.seed,
                n: self.n,
                d: self.d,
                c: self.c,
                h,
                ell,
                ell_overridden: self.ell.is_some(),
                mu,
                eps: self.eps.unwrap_or_else(|| nf.powf(4.0 / h as f64 - 0.5)),
                delta: self.delta.unwrap_or_else(|| nf.powf(-0.5)),
                samples: self.samples,
                workers: self.workers,
            },
            pair,
        ))
    }
}

/// One measured quantity with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub mu: u64,
    pub method: String,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// A full experiment report: config echo plus metric rows.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ResolvedConfig,
    pub rows: Vec<MetricRow>,
    pub wall_time_secs: f64,
    pub version: String,
}

impl RunReport {
    pub fn new(config: ResolvedConfig, rows: Vec<MetricRow>, wall_time_secs: f64) -> Self {
        RunReport {
            config,
            rows,
            wall_time_secs,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// The metrics table; bodies are byte-identical for identical
    /// configs (no timestamps).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("schema,metric,n,d,ell,mu,method,value,stderr,samples,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                CSV_SCHEMA,
                r.metric,
                r.n,
                r.d,
                r.ell,
                r.mu,
                r.method,
                r.value,
                r.stderr,
                r.samples,
                r.seed
            ));
        }
        out
    }

    /// Writes `report.json` and `metrics.csv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::File::create(dir.join("report.json"))?.write_all(json.as_bytes())?;
        std::fs::File::create(dir.join("metrics.csv"))?.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// The union of all orthants whose first coordinate is positive; a
/// fixed nontrivial target for the replacement experiments.
pub fn half_space_union(d: usize, eps: f64) -> Result<OrthantMollifier> {
    let orthants: Vec<Vec<i8>> = (0..1u32 << (d - 1))
        .map(|code| {
            let mut o = vec![1i8];
            for b in 0..d - 1 {
                o.push(if code >> b & 1 == 1 { 1 } else { -1 });
            }
            o
        })
        .collect();
    OrthantMollifier::new(d, eps, orthants)
}

fn evenly_spaced(n: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|j| 1 + (j as u64 * (n as u64 - 1) / (count as u64 - 1).max(1)) as usize)
        .collect();
    out.dedup();
    out
}

/// Replacement-step experiment: mean and summed one-step gaps over a
/// sample of swap positions, against the direct two-sided gap, across a
/// grid of dimensions at fixed query count and mollifier width.
pub fn experiment_lindeberg(
    config: &ExperimentConfig,
    n_grid: &[usize],
    i_count: usize,
) -> Result<RunReport> {
    let t0 = std::time::Instant::now();
    let (resolved, pair) = config.resolve()?;
    let mut rows = Vec::new();
    for (n_idx, &n) in n_grid.iter().enumerate() {
        let moll = half_space_union(config.d, resolved.eps)?;
        let mut qm_rng = stream(config.seed, (1 << 40) | (n_idx as u64) << 20);
        let qm = QueryMatrix::random(n, config.d, &mut qm_rng);
        let positions = evenly_spaced(n, i_count.min(n));
        let mut gaps = Vec::with_capacity(positions.len());
        let mut se_sq_sum = 0.0;
        for (j, &i) in positions.iter().enumerate() {
            let mut rng = stream(config.seed, (2 << 40) | ((n_idx as u64) << 20) | j as u64);
            let (gap, se) =
                lindeberg_step_gap(&qm, &pair, &moll, i, config.samples, &mut rng)?;
            gaps.push(gap);
            se_sq_sum += se * se;
        }
        let m = gaps.len() as f64;
        let mean: f64 = gaps.iter().sum::<f64>() / m;
        let spread: f64 = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>()
            / (m - 1.0).max(1.0);
        let mean_se = (se_sq_sum / (m * m)).sqrt() + (spread / m).sqrt();
        rows.push(MetricRow {
            metric: "lindeberg_mean_step_gap".into(),
            n,
            d: config.d,
            ell: resolved.ell,
            mu: resolved.mu,
            method: "monte_carlo_paired".into(),
            value: mean,
            stderr: mean_se,
            samples: config.samples,
            seed: config.seed,
        });
        let scale = n as f64;
        rows.push(MetricRow {
            metric: "lindeberg_sum_gaps".into(),
            n,
            d: config.d,
            ell: resolved.ell,
            mu: resolved.mu,
            method: "monte_carlo_paired".into(),
            value: scale * mean,
            stderr: scale * mean_se,
            samples: config.samples * positions.len() as u64,
            seed: config.seed,
        });
        let mut rng = stream(config.seed, (3 << 40) | (n_idx as u64) << 20);
        let (direct, direct_se) =
            mollified_gap_direct(&qm, &pair, &moll, config.samples * 4, &mut rng)?;
        rows.push(MetricRow {
            metric: "lindeberg_direct_gap".into(),
            n,
            d: config.d,
            ell: resolved.ell,
            mu: resolved.mu,
            method: "monte_carlo".into(),
            value: direct,
            stderr: direct_se,
            samples: config.samples * 4,
            seed: config.seed,
        });
    }
    Ok(RunReport::new(resolved, rows, t0.elapsed().as_secs_f64()))
}

/// Query-budget sweep: random query sets at `d = floor(n^gamma)`,
/// pruned, with distance estimates before and after.
pub fn experiment_lowerbound_sweep(
    config: &ExperimentConfig,
    n_grid: &[usize],
    gammas: &[f64],
) -> Result<RunReport> {
    let t0 = std::time::Instant::now();
    let (resolved, pair) = config.resolve()?;
    let mut rows = Vec::new();
    for (n_idx, &n) in n_grid.iter().enumerate() {
        for (g_idx, &gamma) in gammas.iter().enumerate() {
            let d = ((n as f64).powf(gamma).floor() as usize).max(1);
            let sid = (4u64 << 40) | ((n_idx as u64) << 20) | (g_idx as u64) << 10;
            let mut qm_rng = stream(config.seed, sid);
            let qm = QueryMatrix::random(n, d, &mut qm_rng);
            let params = PruneParams { seed: config.seed, ..Default::default() };
            let (pruned, trace) = prune_query_matrix(&qm, resolved.h, &params)?;
            let mut rng = stream(config.seed, sid | 1);
            let before = duo_monte_carlo(&qm, &pair, config.samples, &mut rng)?;
            let after = if pruned.rows == qm.rows {
                before.clone()
            } else {
                duo_monte_carlo(&pruned, &pair, config.samples, &mut rng)?
            };
            for (name, est) in [("duo_before_prune", &before), ("duo_after_prune", &after)] {
                rows.push(MetricRow {
                    metric: format!("{name}_gamma{gamma}"),
                    n,
                    d,
                    ell: resolved.ell,
                    mu: resolved.mu,
                    method: est.method.to_string(),
                    value: est.value,
                    stderr: est.stderr,
                    samples: est.samples,
                    seed: config.seed,
                });
            }
            rows.push(MetricRow {
                metric: format!("pruned_size_gamma{gamma}"),
                n,
                d,
                ell: resolved.ell,
                mu: resolved.mu,
                method: "exact".into(),
                value: trace.final_size as f64,
                stderr: 0.0,
                samples: 0,
                seed: config.seed,
            });
        }
    }
    Ok(RunReport::new(resolved, rows, t0.elapsed().as_secs_f64()))
}

/// Exact-against-sampled distance comparison on one instance, as rows.
pub fn experiment_duo(config: &ExperimentConfig, exact: bool) -> Result<RunReport> {
    let t0 = std::time::Instant::now();
    let (resolved, pair) = config.resolve()?;
    let mut qm_rng = stream(config.seed, 5 << 40);
    let qm = QueryMatrix::random(config.n, config.d, &mut qm_rng);
    let mut rows = Vec::new();
    if exact {
        let est = duo_exact_small(&qm, &pair)?;
        rows.push(MetricRow {
            metric: "duo_exact".into(),
            n: config.n,
            d: config.d,
            ell: resolved.ell,
            mu: resolved.mu,
            method: est.method.to_string(),
            value: est.value,
            stderr: est.stderr,
            samples: est.samples,
            seed: config.seed,
        });
    }
    let mut rng = stream(config.seed, (5 << 40) | 1);
    let mc = duo_monte_carlo(&qm, &pair, config.samples, &mut rng)?;
    rows.push(MetricRow {
        metric: "duo_monte_carlo".into(),
        n: config.n,
        d: config.d,
        ell: resolved.ell,
        mu: resolved.mu,
        method: mc.method.to_string(),
        value: mc.value,
        stderr: mc.stderr,
        samples: mc.samples,
        seed: config.seed,
    });
    rows.push(MetricRow {
        metric: "duo_monte_carlo_bias_bound".into(),
        n: config.n,
        d: config.d,
        ell: resolved.ell,
        mu: resolved.mu,
        method: "plug_in_bound".into(),
        value: mc.bias_bound,
        stderr: 0.0,
        samples: mc.samples,
        seed: config.seed,
    });
    Ok(RunReport::new(resolved, rows, t0.elapsed().as_secs_f64()))
}

/// Writes a report to `dir`, or prints the CSV to stdout when `dir` is
/// `None`.
pub fn emit(report: &RunReport, dir: Option<&Path>) -> Result<()> {
    match dir {
        Some(dir) => report.write_to(dir),
        None => {
            print!("{}", report.to_csv());
            Ok(())
        }
    }
}

/// Output directory override: flag value, else the `MONOTEST_OUT`
/// environment variable, else stdout.
pub fn output_dir(flag: Option<std::path::PathBuf>) -> Option<std::path::PathBuf> {
    flag.or_else(|| std::env::var_os("MONOTEST_OUT").map(std::path::PathBuf::from))
}
