//! Prune a clustered query set until it is scattered, then measure what
//! the removals cost in union-of-orthants distance.
//!
//! At the defining threshold `r |X| log^5 n` desk-scale sets are almost
//! always already scattered, so this walkthrough shrinks the threshold
//! to force the machinery through nontrivial removals.
//!
//! Run with `cargo run --release --example prune_queries`.

use monotest::geometry::CubePointSet;
use monotest::instances::QueryMatrix;
use monotest::moments::{find_mu, YesNoPair};
use monotest::pruning::{duo_drift_check, is_scattered, prune_query_matrix, PruneParams};
use monotest::rng::stream;
use rand::Rng;

fn main() -> monotest::Result<()> {
    let n = 64;
    let mut rng = stream(11, 0);

    // A base query plus sign-flip clusters hugging its span, plus some
    // exact duplicates and a few far queries.
    let base: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect();
    let mut rows = vec![base.clone(), base.clone()];
    for j in 0..10 {
        let mut p = base.clone();
        for b in 0..=(j % 2) {
            p[(5 * j + b) % n] = -p[(5 * j + b) % n];
        }
        rows.push(p);
    }
    for _ in 0..6 {
        rows.push((0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect());
    }
    let qm = QueryMatrix::new(n, rows)?;
    println!("query set: {} rows (with duplicates) at n = {n}", qm.d());

    // Tuned so only the tight cluster violates: removals happen at small
    // radii, which is exactly the regime where pruning is supposed to be
    // cheap for the distance.
    let params = PruneParams { threshold_factor: 1.2e-3, ..Default::default() };
    let (pruned, trace) = prune_query_matrix(&qm, 3, &params)?;
    println!(
        "pruned: {} -> {} after dedup -> {} rows in {} removal step(s), sum of radii {:.4}",
        trace.initial_size,
        trace.after_dedup,
        trace.final_size,
        trace.steps.len(),
        trace.sum_r
    );
    for (i, step) in trace.steps.iter().enumerate() {
        println!(
            "  step {i}: |A| = {}, r = {:.4}, removed {} of {}",
            step.a_points.len(),
            step.r,
            step.removed.len(),
            step.size_before
        );
    }
    println!("telescoping sum {:.4} (bound 2 ln|X| = {:.4})", trace.telescoping_sum(), 2.0 * (qm.d() as f64).ln());

    let set = CubePointSet::from_rows_dedup(n, &pruned.rows)?;
    let report = is_scattered(&set, 3, &params)?;
    println!("pruned set scattered: {} ({} subsets checked, mode {:?})", report.scattered, report.subsets_checked, report.mode);

    // What the removals cost: the distance loss scales with the removal
    // radii, so pruning is nearly free when violations only occur at
    // tiny r (as with exact duplicates) and visible at cluster scale.
    let pair = YesNoPair::build(3, find_mu(3)?)?;
    let before_set = CubePointSet::from_rows_dedup(n, &qm.rows)?;
    let drift = duo_drift_check(&before_set, &set, &pair, 200_000, &mut stream(11, 1))?;
    println!(
        "\ndistance before {:.4} +- {:.4}, after {:.4} +- {:.4}",
        drift.before.value, drift.before.stderr, drift.after.value, drift.after.stderr
    );
    println!(
        "drift {:.4} against total removal radius {:.4}",
        drift.drift, trace.sum_r
    );
    Ok(())
}
