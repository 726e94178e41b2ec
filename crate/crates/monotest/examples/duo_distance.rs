//! Union-of-orthants distance between the two coefficient sums: exact
//! enumeration against the Monte Carlo estimator, and the exact
//! invariance under duplicated queries.
//!
//! Run with `cargo run --release --example duo_distance`.

use monotest::instances::QueryMatrix;
use monotest::moments::{find_mu, YesNoPair};
use monotest::orthants::{duo_exact_small, duo_monte_carlo};
use monotest::rng::stream;

fn main() -> monotest::Result<()> {
    let ell = 3;
    let mu = find_mu(ell)?;
    let pair = YesNoPair::build(ell, mu)?;

    let n = 8;
    let qm = QueryMatrix::random(n, 3, &mut stream(3, 0));
    let exact = duo_exact_small(&qm, &pair)?;
    println!(
        "exact distance over {} coefficient assignments: {:.6}",
        exact.samples, exact.value
    );

    for samples in [50_000u64, 500_000] {
        let mc = duo_monte_carlo(&qm, &pair, samples, &mut stream(3, 1))?;
        println!(
            "monte carlo at {samples:>7} samples: {:.6} +- {:.6} (plug-in bias <= {:.6})",
            mc.value, mc.stderr, mc.bias_bound
        );
    }

    // Duplicating a query row never moves the distance: sign patterns
    // collapse.
    let base = QueryMatrix::random(n, 1, &mut stream(3, 2));
    let mut rows = vec![base.rows[0].clone()];
    for _ in 0..4 {
        rows.push(base.rows[0].clone());
    }
    let dup = QueryMatrix::new(n, rows)?;
    let one = duo_exact_small(&base, &pair)?;
    let five = duo_exact_small(&dup, &pair)?;
    println!(
        "\nduplication: 1 row gives {:.6}, the same row 5 times gives {:.6} (equal: {})",
        one.value,
        five.value,
        one.value == five.value
    );
    Ok(())
}
