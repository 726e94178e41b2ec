//! Construct the moment-matched coefficient pair and check the
//! supporting moment identities.
//!
//! Run with `cargo run --release --example build_rv`.

use monotest::moments::{
    det_b, find_mu, gaussian_raw_moments, hankel_matrices, psd_feasibility,
    truncation_moment_gap, YesNoPair,
};

fn main() -> monotest::Result<()> {
    for ell in [3usize, 5, 7] {
        let mu = find_mu(ell)?;
        let pair = YesNoPair::build(ell, mu)?;
        println!("order {ell}: smallest feasible shift mu = {mu}");
        println!("  yes atoms  {:?}", pair.yes_rv.atoms);
        println!("  yes probs  {:?}", pair.yes_rv.probs);
        println!("  no  atoms  {:?}", pair.no_rv.atoms);
        println!("  no  probs  {:?}", pair.no_rv.probs);
        println!("  negative mass of the no-variable: {:.6}", pair.no_rv.negative_mass());
        let target = gaussian_raw_moments(mu as f64, ell);
        for k in 1..=ell {
            println!(
                "  m_{k}: target {:>14.6}  yes {:>14.6}  no {:>14.6}",
                target.get(k),
                pair.yes_rv.moment(k),
                pair.no_rv.moment(k)
            );
        }
        println!("  max relative moment error: {:.3e}", pair.max_moment_error());

        // Feasibility of the two moment matrices: the shifted matrix
        // only clears the nonnegative-support test once mu is large
        // enough for the quadrature nodes.
        let hp = hankel_matrices(&target)?;
        let report = psd_feasibility(&hp);
        println!(
            "  moment matrices: real-line feasible = {}, nonnegative feasible = {}",
            report.real_line_feasible, report.nonneg_feasible
        );
        println!();
    }

    println!("exact determinants of the double-factorial matrices:");
    for ell in [1usize, 3, 5, 7, 9] {
        println!("  order {ell}: det = {}", det_b(ell)?);
    }

    println!("\ntruncation moment gaps against the closed-form ceiling:");
    for mu in [1.0f64, 3.0, 6.0] {
        let (gap, bound) = truncation_moment_gap(mu, 4);
        println!("  mu = {mu}, k = 4: gap {gap:.3e} <= bound {bound:.3e}");
    }
    Ok(())
}
