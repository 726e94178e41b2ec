//! The cube-versus-subspace toolkit: span distances, rounding covers,
//! low-weight representations, and compatibility verdicts.
//!
//! Run with `cargo run --release --example geometry_cover`.

use monotest::geometry::{
    compatibility, cover_points, cube_points_near_span, dist_to_span, gram_det_check,
    low_weight_rep, CubePointSet,
};
use monotest::rng::stream;
use rand::Rng;

fn random_point(n: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect()
}

fn main() -> monotest::Result<()> {
    let n = 32;
    let mut rng = stream(5, 0);
    let a = CubePointSet::new(
        n,
        (0..3).map(|_| random_point(n, &mut rng)).collect(),
    )?;

    // Rounding cover of the span: every sign pattern a linear functional
    // can realize on the defining columns, ties rounding up.
    let cover = cover_points(&a)?;
    println!("cover of a 3-point span at n = {n}: {} rounded points (cap 2^9 = 512)", cover.len());

    let v = random_point(n, &mut rng);
    println!("distance of a random cube point to the span: {:.4}", dist_to_span(&v, &a)?);

    let x = CubePointSet::new(n, (0..12).map(|_| random_point(n, &mut rng)).collect())?;
    for r in [0.5, 0.8, 1.0] {
        let near = cube_points_near_span(&x, &a, r)?;
        println!("points of a 12-point set within {r:.1} of the span: {}", near.len());
    }

    // Low-weight representation: bounded coefficients at a bounded
    // distance blowup.
    let rep = low_weight_rep(&v, &a)?;
    println!(
        "\nlow-weight representation: coefficients {:?}\n  realized gamma1 = {:.3}, distance ratio = {:.3}",
        rep.betas.iter().map(|b| (b * 1e3).round() / 1e3).collect::<Vec<_>>(),
        rep.realized_gamma1,
        rep.realized_gamma2_ratio
    );

    // Compatibility: can a bounded combination push the coordinate sum
    // of V - U past the (||V - U|| + eps) log n envelope?
    let balanced: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let lopsided = vec![1i8; n];
    let set = CubePointSet::new(n, vec![balanced])?;
    for (label, point, eps) in [("typical", &v, 0.1), ("lopsided", &lopsided, 0.001)] {
        let verdict = compatibility(point, &set, eps, 1.5)?;
        println!(
            "{label} point at eps = {eps}: compatible = {}, margin = {:.3}",
            verdict.compatible, verdict.margin
        );
    }

    // Gram identity: det(A A^T) equals the product of squared
    // sequential Gram-Schmidt residuals.
    let rows: Vec<Vec<f64>> = (0..3).map(|i| a.scaled(i)).collect();
    let (det, prod) = gram_det_check(&rows)?;
    println!("\ndet(A A^T) = {det:.6e}, residual product = {prod:.6e}");
    Ok(())
}
