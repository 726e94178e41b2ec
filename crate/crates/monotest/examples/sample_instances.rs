//! Sample the yes/no threshold-function distributions and run the edge
//! tester against them.
//!
//! Run with `cargo run --release --example sample_instances`.

use monotest::instances::{sample_no, sample_yes, HardInstanceFamily};
use monotest::monotone::{edge_tester, is_monotone, TruthTable};
use monotest::rng::stream;

fn main() -> monotest::Result<()> {
    let n = 12;
    let family = HardInstanceFamily::new(n, 1.0, Some(3))?;
    println!(
        "family: n = {n}, c = {}, h = {}, ell = {} (overridden: {}), mu = {}",
        family.c, family.h, family.ell, family.ell_overridden, family.mu
    );

    let mut rng = stream(7, 0);
    let mut monotone_yes = 0;
    for _ in 0..50 {
        let f = sample_yes(&family, &mut rng);
        if is_monotone(&TruthTable::from_ltf(&f)?) {
            monotone_yes += 1;
        }
    }
    println!("yes draws monotone: {monotone_yes}/50 (nonnegative coefficients force this)");

    let mut monotone_no = 0;
    for _ in 0..50 {
        let f = sample_no(&family, &mut rng);
        if is_monotone(&TruthTable::from_ltf(&f)?) {
            monotone_no += 1;
        }
    }
    println!("no draws monotone: {monotone_no}/50 (negative coefficients usually break it)\n");

    // The edge tester queries both endpoints of random hypercube edges.
    let yes = sample_yes(&family, &mut rng);
    let t_yes = TruthTable::from_ltf(&yes)?;
    let report = edge_tester(
        |x| t_yes.values[index_of(x)],
        n,
        10 * n,
        &mut stream(7, 1),
    );
    println!("edge tester on a yes draw: rejected = {}, violations = {}", report.rejected, report.violations);

    let no = sample_no(&family, &mut rng);
    let t_no = TruthTable::from_ltf(&no)?;
    let q = 200 * n;
    let report = edge_tester(|x| t_no.values[index_of(x)], n, q, &mut stream(7, 2));
    let rate = report.violations as f64 / q as f64;
    let se = (rate * (1.0 - rate) / q as f64).sqrt();
    println!(
        "edge tester on a no draw:  rejected = {}, first hit at round {:?}, rate {rate:.4} +- {se:.4}",
        report.rejected, report.first_violation
    );
    Ok(())
}

fn index_of(x: &[i8]) -> usize {
    x.iter().enumerate().fold(0, |acc, (j, &b)| acc | ((b == 1) as usize) << j)
}
