//! The smooth indicator machinery: the 1-D step, orthant-union and box
//! mollifiers, and the numerically verified derivative ceilings.
//!
//! Run with `cargo run --release --example mollifier_checks`.

use monotest::mollifier::{
    alpha, bump_eval, derivative_bound_check, phi_eps, psi_support_check, BoxMollifierPair,
    OrthantMollifier,
};
use monotest::rng::stream;
use rand::Rng;

fn main() -> monotest::Result<()> {
    println!("bump values: b(0) = {:.6}, b(+-1) = {} / {}", bump_eval(0.0), bump_eval(1.0), bump_eval(-1.0));

    let eps = 0.2;
    println!("\nsmooth step of width {eps}:");
    for x in [-0.05, 0.0, 0.05, 0.1, 0.15, 0.2, 0.3] {
        println!("  phi({x:>5}) = {:.6}", phi_eps(x, eps));
    }

    println!("\nderivative ceilings alpha(k)/eps^k:");
    for k in 1..=3 {
        let report = derivative_bound_check(eps, k, 300)?;
        println!(
            "  k = {k}: max |phi^({k})| = {:.4e} <= {:.4e} (alpha({k}) = {:.4e})",
            report.max_abs_derivative,
            report.bound,
            alpha(k)?
        );
    }

    // Union mollifier: 1 deep inside a listed orthant, 0 outside the
    // union, and mixed derivatives supported only on the collar.
    let moll = OrthantMollifier::new(3, eps, vec![vec![1, 1, 1], vec![-1, 1, 1]])?;
    println!("\nunion mollifier on two orthants:");
    println!("  deep inside:  {}", moll.eval(&[0.5, 0.5, 0.5]));
    println!("  outside:      {}", moll.eval(&[0.5, -0.5, 0.5]));
    println!("  on a collar:  {:.4}", moll.eval(&[0.08, 0.5, 0.5]));
    let support = psi_support_check(&moll, &[0, 2], 400, &mut stream(13, 0))?;
    println!(
        "  support check: max off-support mixed derivative {:.2e} (floor {:.2e}), ok = {}",
        support.max_outside_derivative, support.noise_floor, support.ok
    );

    // Box pair: an inner and an outer smooth indicator bracketing the
    // box probability of any random vector.
    let pair = BoxMollifierPair::new(0.4, 0.3, 2)?;
    let mut rng = stream(13, 1);
    let samples = 100_000;
    let (mut e_in, mut e_box, mut e_out) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
        e_in += pair.psi_in(&x);
        if pair.contains(&x) {
            e_box += 1.0;
        }
        e_out += pair.psi_out(&x);
    }
    let nf = samples as f64;
    println!(
        "\nbox sandwich on uniform samples: E[psi_in] = {:.4} <= Pr[box] = {:.4} <= E[psi_out] = {:.4}",
        e_in / nf,
        e_box / nf,
        e_out / nf
    );
    Ok(())
}
