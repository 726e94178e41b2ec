//! Measure how far no-distribution draws sit from every monotone
//! function: exact min-cut distance against the degree-1 Fourier floor,
//! plus the Hermite/Fourier comparison for regular threshold functions.
//!
//! Run with `cargo run --release --example distance_to_monotone`.

use monotest::instances::{sample_no, HardInstanceFamily};
use monotest::monotone::{
    exact_distance_to_monotone, fourier_degree1, fourier_negative_mass, hermite_degree1,
    regularity, TruthTable,
};
use monotest::rng::stream;

fn main() -> monotest::Result<()> {
    let n = 14;
    let family = HardInstanceFamily::new(n, 1.0, Some(3))?;
    let mut rng = stream(21, 0);

    println!("exact distance vs (1/4) * negative Fourier mass, n = {n}:");
    for draw in 0..8 {
        let f = sample_no(&family, &mut rng);
        let t = TruthTable::from_ltf(&f)?;
        let dist = exact_distance_to_monotone(&t)?;
        let floor = 0.25 * fourier_negative_mass(&t);
        println!(
            "  draw {draw}: distance {}/{} = {:.4} >= floor {:.4}",
            dist.disagreements,
            dist.total,
            dist.value(),
            floor
        );
    }

    // For regular threshold functions the closed-form Hermite
    // coefficients track the cube Fourier coefficients.
    println!("\nHermite vs Fourier degree-1 coefficients across dimensions:");
    for n in [10usize, 14] {
        let family = HardInstanceFamily::new(n, 1.0, Some(3))?;
        let f = sample_no(&family, &mut stream(22, n as u64));
        let t = TruthTable::from_ltf(&f)?;
        let fourier = fourier_degree1(&t);
        let hermite = hermite_degree1(&f)?;
        let tau = regularity(&f)?;
        let gap: f64 = fourier
            .iter()
            .zip(&hermite)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        println!("  n = {n:2}: tau = {tau:.3}, sum (hermite - fourier)^2 = {gap:.5}");
    }
    Ok(())
}
