//! Replacement experiment: swap the yes-coefficients out for
//! no-coefficients one position at a time and watch the per-step effect
//! on a mollified union of orthants shrink with the dimension.
//!
//! Run with `cargo run --release --example lindeberg_trend`.

use monotest::harness::{experiment_lindeberg, ExperimentConfig};

fn main() -> monotest::Result<()> {
    let config = ExperimentConfig {
        seed: 1,
        d: 4,
        eps: Some(0.2),
        ell: Some(3),
        samples: 2_000,
        ..Default::default()
    };
    let grid = [256usize, 1024];
    let report = experiment_lindeberg(&config, &grid, 24)?;

    println!(
        "family: h = {}, ell = {}, mu = {}, eps = {}",
        report.config.h, report.config.ell, report.config.mu, report.config.eps
    );
    println!("\n{:>6} {:>26} {:>26} {:>26}", "n", "mean step gap", "summed step gaps", "direct gap");
    for &n in &grid {
        let get = |metric: &str| {
            report
                .rows
                .iter()
                .find(|r| r.metric == metric && r.n == n)
                .map(|r| format!("{:.3e} +- {:.1e}", r.value, r.stderr))
                .unwrap_or_default()
        };
        println!(
            "{n:>6} {:>26} {:>26} {:>26}",
            get("lindeberg_mean_step_gap"),
            get("lindeberg_sum_gaps"),
            get("lindeberg_direct_gap")
        );
    }

    println!("\nmetrics.csv body:\n{}", report.to_csv());
    Ok(())
}
