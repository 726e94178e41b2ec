//! Smooth indicator approximations.
//!
//! The 1-D smooth step rises from an exact 0 below 0 to an exact 1 above
//! `eps`; it is the convolution of a compactly supported bump with a
//! shifted step, which reduces to the bump's CDF. Products of the step
//! give mollifiers for orthants and (reflected) for boxes. Derivative
//! ceilings are verified numerically by Richardson-extrapolated central
//! differences rather than symbolically.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::rng::Stream;

/// The standard bump `b(x) = c exp(-1/(1-x^2))` on `(-1,1)`, scaled to
/// integrate to 1. Its value never exceeds `c/e < 1`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub normalization: f64,
}

fn bump_raw(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

impl Bump {
    pub fn standard() -> Self {
        static NORM: OnceLock<f64> = OnceLock::new();
        let c = *NORM.get_or_init(|| 1.0 / adaptive_simpson(&bump_raw, -1.0, 1.0, 1e-14));
        Bump { normalization: c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.normalization * bump_raw(x)
    }

    /// CDF of the bump at `t`, by composite Gauss-Legendre quadrature.
    /// Accurate to ~1e-14; used where the table would be too coarse.
    pub fn cdf_precise(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let panels = (((t + 1.0) / 0.25).ceil() as usize).max(1);
        (gauss_legendre(&bump_raw, -1.0, t, panels) * self.normalization).clamp(0.0, 1.0)
    }
}

/// Free-standing bump evaluation (normalized).
pub fn bump_eval(x: f64) -> f64 {
    Bump::standard().eval(x)
}

const TABLE_INTERVALS: usize = 10_000;

/// Shared monotone-cubic interpolation table for the standard bump CDF
/// on [-1, 1]. One table serves every width because the smooth step at
/// width `eps` is the standard CDF evaluated at `2x/eps - 1`.
struct CdfTable {
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

fn cdf_table() -> &'static CdfTable {
    static TABLE: OnceLock<CdfTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let bump = Bump::standard();
        let n = TABLE_INTERVALS;
        let h = 2.0 / n as f64;
        // Cumulative Simpson on the table intervals keeps the table
        // itself accurate to ~1e-13.
        let mut ys = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        ys.push(0.0);
        for i in 0..n {
            let a = -1.0 + i as f64 * h;
            acc += adaptive_simpson(&bump_raw, a, a + h, 1e-15);
            ys.push(acc * bump.normalization);
        }
        let last = *ys.last().unwrap();
        for y in &mut ys {
            *y /= last;
        }
        // Fritsch-Carlson slopes: harmonic means preserve monotonicity.
        let deltas: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n + 1];
        slopes[0] = deltas[0];
        slopes[n] = deltas[n - 1];
        for i in 1..n {
            let (a, b) = (deltas[i - 1], deltas[i]);
            slopes[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
        }
        CdfTable { ys, slopes }
    })
}

impl CdfTable {
    fn eval(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let n = TABLE_INTERVALS;
        let h = 2.0 / n as f64;
        let pos = (t + 1.0) / h;
        let i = (pos.floor() as usize).min(n - 1);
        let s = pos - i as f64;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        v.clamp(0.0, 1.0)
    }
}

/// Smooth step of width `eps`: exactly 0 below 0, exactly 1 above `eps`,
/// nondecreasing in between.
#[derive(Debug, Clone, Copy)]
pub struct Mollifier1D {
    pub eps: f64,
}

impl Mollifier1D {
    pub fn new(eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidParam("mollifier width must be positive".into()));
        }
        cdf_table(); // build the shared table eagerly
        Ok(Mollifier1D { eps })
    }

    /// Table-backed evaluation, O(1); accurate to ~1e-12.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.eps {
            1.0
        } else {
            cdf_table().eval(2.0 * x / self.eps - 1.0)
        }
    }

    /// Quadrature-backed evaluation, accurate to ~1e-14. Slow; meant for
    /// finite-difference probes.
    pub fn eval_precise(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.eps {
            1.0
        } else {
            Bump::standard().cdf_precise(2.0 * x / self.eps - 1.0)
        }
    }
}

/// Smooth step of width `eps` evaluated at `x`.
pub fn phi_eps(x: f64, eps: f64) -> f64 {
    Mollifier1D { eps }.eval(x)
}

/// Mollifier of a union of (distinct) orthants in `R^d`: the sum over
/// orthants of the product of reflected smooth steps.
#[derive(Debug, Clone)]
pub struct OrthantMollifier {
    pub d: usize,
    pub eps: f64,
    pub orthants: Vec<Vec<i8>>,
}

impl OrthantMollifier {
    pub fn new(d: usize, eps: f64, orthants: Vec<Vec<i8>>) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidParam("mollifier width must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &orthants {
            if o.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: o.len() });
            }
            if o.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::InvalidParam("orthant signs must be +-1".into()));
            }
            if !seen.insert(o.clone()) {
                return Err(Error::InvalidParam("orthant list contains duplicates".into()));
            }
        }
        cdf_table();
        Ok(OrthantMollifier { d, eps, orthants })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with(x, |v| phi_eps(v, self.eps))
    }

    /// Quadrature-backed evaluation for finite-difference probes.
    pub fn eval_precise(&self, x: &[f64]) -> f64 {
        let m = Mollifier1D { eps: self.eps };
        self.eval_with(x, |v| m.eval_precise(v))
    }

    fn eval_with<F: Fn(f64) -> f64>(&self, x: &[f64], phi: F) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut total = 0.0;
        for o in &self.orthants {
            let mut prod = 1.0;
            for (&s, &v) in o.iter().zip(x) {
                prod *= phi(s as f64 * v);
                if prod == 0.0 {
                    break;
                }
            }
            total += prod;
        }
        total
    }

    /// Whether `x` lies in the union (under the `sign(0) = +1` rule).
    pub fn contains(&self, x: &[f64]) -> bool {
        let pattern: Vec<i8> = x.iter().map(|&v| crate::instances::sign_plus(v)).collect();
        self.orthants.iter().any(|o| *o == pattern)
    }
}

/// Derivative growth ceiling `2e 64^k k! k^(2k+2)`.
pub fn alpha(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let mut v = 2.0 * std::f64::consts::E;
    v *= 64.0f64.powi(k as i32);
    for i in 1..=k {
        v *= i as f64;
    }
    v *= (k as f64).powi(2 * k as i32 + 2);
    if !v.is_finite() {
        return Err(Error::InvalidParam(format!("alpha({k}) overflows f64")));
    }
    Ok(v)
}

/// Report from a finite-difference derivative-ceiling check.
#[derive(Debug, Clone, Serialize)]
pub struct DerivBoundReport {
    pub k: usize,
    pub eps: f64,
    pub max_abs_derivative: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Central-difference stencil of order `k` (k <= 4) with Richardson
/// extrapolation over four step sizes.
fn central_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, k: usize, h0: f64) -> f64 {
    let raw = |h: f64| -> f64 {
        match k {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
                / (2.0 * h * h * h),
            4 => {
                (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                    / (h * h * h * h)
            }
            _ => unreachable!("stencils defined for k <= 4"),
        }
    };
    // Richardson on the O(h^2) error expansion.
    let mut row: Vec<f64> = (0..4).map(|i| raw(h0 / 2f64.powi(i))).collect();
    let mut order = 2.0;
    while row.len() > 1 {
        let f = 2f64.powf(order);
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        order += 2.0;
    }
    row[0]
}

/// Estimates the max absolute `k`-th derivative of the width-`eps`
/// smooth step on a dense grid and compares it against
/// `alpha(k) / eps^k`.
pub fn derivative_bound_check(eps: f64, k: usize, grid_size: usize) -> Result<DerivBoundReport> {
    if k > 4 {
        return Err(Error::InvalidParam(
            "finite differences above order 4 are noise-dominated".into(),
        ));
    }
    let m = Mollifier1D::new(eps)?;
    let f = |x: f64| m.eval_precise(x);
    let h0 = eps / 100.0;
    let mut max_abs: f64 = 0.0;
    for i in 0..=grid_size {
        // Derivatives vanish outside [0, eps]; pad slightly to see it.
        let x = -0.05 * eps + 1.1 * eps * i as f64 / grid_size as f64;
        max_abs = max_abs.max(central_derivative(&f, x, k, h0).abs());
    }
    let bound = alpha(k)? / eps.powi(k as i32);
    Ok(DerivBoundReport { k, eps, max_abs_derivative: max_abs, bound, ok: max_abs <= bound })
}

/// Report from the mixed-derivative support check.
#[derive(Debug, Clone, Serialize)]
pub struct SupportCheckReport {
    pub probes: usize,
    pub outside_cases: usize,
    pub max_outside_derivative: f64,
    pub noise_floor: f64,
    pub max_inside_derivative: f64,
    pub ok: bool,
}

/// Verifies that the mixed derivative of the union mollifier along
/// `j_support` vanishes whenever some probed coordinate in the support
/// exceeds `eps` in absolute value or the point is outside the union.
pub fn psi_support_check(
    m: &OrthantMollifier,
    j_support: &[usize],
    samples: usize,
    rng: &mut Stream,
) -> Result<SupportCheckReport> {
    use rand::Rng;
    if j_support.is_empty() {
        return Err(Error::InvalidParam("support set must be nonempty".into()));
    }
    let order = j_support.len();
    if order > 3 {
        return Err(Error::ResourceGuard("mixed FD probes limited to 3 coordinates".into()));
    }
    let h = m.eps / 100.0;
    let mut outside_max: f64 = 0.0;
    let mut inside_max: f64 = 0.0;
    let mut outside_cases = 0usize;
    for _ in 0..samples {
        let x: Vec<f64> = (0..m.d).map(|_| rng.random_range(-2.0 * m.eps..2.0 * m.eps)).collect();
        // Mixed first-order central difference over the support coords.
        let mut d = 0.0;
        for mask in 0..1u32 << order {
            let mut y = x.clone();
            let mut sign = 1.0;
            for (b, &j) in j_support.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    y[j] += h;
                } else {
                    y[j] -= h;
                    sign = -sign;
                }
            }
            d += sign * m.eval_precise(&y);
        }
        d /= (2.0 * h).powi(order as i32);
        let off_support = j_support.iter().any(|&j| x[j].abs() > m.eps + 2.0 * h);
        let outside = !m.contains(&x);
        if off_support || outside {
            outside_cases += 1;
            outside_max = outside_max.max(d.abs());
        } else {
            inside_max = inside_max.max(d.abs());
        }
    }
    let noise_floor = 1e-6 * inside_max.max(1.0);
    Ok(SupportCheckReport {
        probes: samples,
        outside_cases,
        max_outside_derivative: outside_max,
        noise_floor,
        max_inside_derivative: inside_max,
        ok: outside_max <= noise_floor,
    })
}

/// Inner/outer box mollifier pair: `psi_in` is 1 on the shrunk box and 0
/// outside the target box; `psi_out` is 1 on the target box and 0
/// outside the grown box.
#[derive(Debug, Clone, Copy)]
pub struct BoxMollifierPair {
    pub eps: f64,
    pub xi: f64,
    pub dim: usize,
}

impl BoxMollifierPair {
    pub fn new(eps: f64, xi: f64, dim: usize) -> Result<Self> {
        if !(xi > 0.0 && xi < 2.0 * eps) {
            return Err(Error::InvalidParam("need 0 < xi < 2 eps".into()));
        }
        cdf_table();
        Ok(BoxMollifierPair { eps, xi, dim })
    }

    fn phi_in_1d(&self, x: f64) -> f64 {
        // Reflected step: rises across [-2e, -2e+xi], falls across
        // [2e-xi, 2e].
        if x >= 0.0 {
            phi_eps(-x + 2.0 * self.eps, self.xi)
        } else {
            phi_eps(x + 2.0 * self.eps, self.xi)
        }
    }

    fn phi_out_1d(&self, x: f64) -> f64 {
        if x >= 0.0 {
            phi_eps(-x + 2.0 * self.eps + self.xi, self.xi)
        } else {
            phi_eps(x + 2.0 * self.eps + self.xi, self.xi)
        }
    }

    pub fn psi_in(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&v| self.phi_in_1d(v)).product()
    }

    pub fn psi_out(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&v| self.phi_out_1d(v)).product()
    }

    /// The target box `[-2 eps, 2 eps]^dim`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v.abs() <= 2.0 * self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn bump_vanishes_at_support_edge() {
        assert_eq!(bump_eval(1.0), 0.0);
        assert_eq!(bump_eval(-1.0), 0.0);
        assert_eq!(bump_eval(1.7), 0.0);
    }

    #[test]
    fn bump_center_value_matches_quadrature_oracle() {
        // Independent normalization estimate via Gauss-Legendre.
        let mass = gauss_legendre(&bump_raw, -1.0, 1.0, 8);
        let c = 1.0 / mass;
        assert!((bump_eval(0.0) - c * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn bump_integrates_to_one() {
        let total = gauss_legendre(&bump_eval, -1.0, 1.0, 16);
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn phi_hard_zero_and_one() {
        let eps = 0.3;
        assert_eq!(phi_eps(-0.1, eps), 0.0);
        assert_eq!(phi_eps(0.0, eps), 0.0);
        assert_eq!(phi_eps(2.0 * eps, eps), 1.0);
        assert_eq!(phi_eps(eps, eps), 1.0);
    }

    #[test]
    fn phi_midpoint_is_half() {
        // The bump is even, so its CDF at the center is exactly 1/2.
        for eps in [0.05, 0.2, 1.0] {
            assert!((phi_eps(eps / 2.0, eps) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_table_matches_precise_eval() {
        let m = Mollifier1D::new(0.17).unwrap();
        for i in 0..400 {
            let x = -0.02 + 0.21 * i as f64 / 400.0;
            assert!((m.eval(x) - m.eval_precise(x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn phi_is_nondecreasing() {
        let m = Mollifier1D::new(0.1).unwrap();
        let mut prev = -1.0;
        for i in 0..=2000 {
            let v = m.eval(-0.05 + 0.2 * i as f64 / 2000.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn orthant_mollifier_inside_outside() {
        let m = OrthantMollifier::new(3, 0.2, vec![vec![1, 1, -1]]).unwrap();
        assert_eq!(m.eval(&[0.5, 0.3, -0.4]), 1.0);
        assert_eq!(m.eval(&[-0.5, 0.3, -0.4]), 0.0);
        // Inside the orthant but within the collar: strictly between.
        let v = m.eval(&[0.1, 0.3, -0.4]);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn full_union_is_one_off_the_collar() {
        let d = 2;
        let orthants: Vec<Vec<i8>> = (0..4u32)
            .map(|b| (0..d).map(|i| if b >> i & 1 == 1 { 1i8 } else { -1 }).collect())
            .collect();
        let m = OrthantMollifier::new(d, 0.2, orthants).unwrap();
        let mut rng = stream(13, 0);
        for _ in 0..200 {
            let x: Vec<f64> = (0..d)
                .map(|_| {
                    let mag = rng.random_range(0.2..1.0);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            assert!((m.eval(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn at_most_one_orthant_term_is_nonzero() {
        let d = 3;
        let orthants: Vec<Vec<i8>> = (0..8u32)
            .map(|b| (0..d).map(|i| if b >> i & 1 == 1 { 1i8 } else { -1 }).collect())
            .collect();
        let eps = 0.3;
        let mut rng = stream(14, 0);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nonzero = orthants
                .iter()
                .filter(|o| {
                    o.iter().zip(&x).map(|(&s, &v)| phi_eps(s as f64 * v, eps)).product::<f64>()
                        > 0.0
                })
                .count();
            assert!(nonzero <= 1);
        }
    }

    #[test]
    fn duplicate_orthants_rejected() {
        assert!(OrthantMollifier::new(2, 0.1, vec![vec![1, 1], vec![1, 1]]).is_err());
    }

    #[test]
    fn alpha_values() {
        assert!((alpha(1).unwrap() - 128.0 * std::f64::consts::E).abs() < 1e-10);
        let want = 2.0 * std::f64::consts::E * 4096.0 * 2.0 * 64.0;
        assert!((alpha(2).unwrap() - want).abs() < 1e-6);
        let mut prev = 0.0;
        for k in 1..=8 {
            let v = alpha(k).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn first_derivative_matches_density_maximum() {
        // Phi' = (2/eps) b(2x/eps - 1), so the max slope is
        // (2/eps) c e^{-1}, attained at the midpoint.
        let eps = 0.2;
        let report = derivative_bound_check(eps, 1, 400).unwrap();
        let c = Bump::standard().normalization;
        let want = 2.0 / eps * c * (-1.0f64).exp();
        assert!((report.max_abs_derivative - want).abs() / want < 1e-6);
        assert!(report.ok);
    }

    #[test]
    fn derivative_bounds_hold_up_to_third_order() {
        for eps in [0.05, 0.1, 0.5] {
            for k in 1..=3 {
                let report = derivative_bound_check(eps, k, 250).unwrap();
                assert!(report.ok, "k={k} eps={eps}: {report:?}");
                // The cited ceiling is loose by orders of magnitude.
                assert!(report.max_abs_derivative < 0.01 * report.bound);
            }
        }
    }

    #[test]
    fn support_check_passes() {
        let m = OrthantMollifier::new(3, 0.25, vec![vec![1, 1, 1], vec![-1, 1, 1]]).unwrap();
        let mut rng = stream(15, 0);
        let report = psi_support_check(&m, &[0, 2], 300, &mut rng).unwrap();
        assert!(report.ok, "{report:?}");
        assert!(report.outside_cases > 0);
        assert!(report.max_inside_derivative > 0.0);
    }

    #[test]
    fn box_pair_values() {
        let eps = 0.2;
        let xi = 0.1;
        let pair = BoxMollifierPair::new(eps, xi, 3).unwrap();
        assert_eq!(pair.psi_in(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(pair.psi_out(&[0.0, 0.0, 0.0]), 1.0);
        let far = [3.0 * eps, 0.0, 0.0];
        assert_eq!(pair.psi_in(&far), 0.0);
        assert_eq!(pair.psi_out(&far), 0.0);
        // On the box boundary psi_out is exactly 1 and psi_in has fallen.
        let edge = [2.0 * eps, 0.0, 0.0];
        assert_eq!(pair.psi_out(&edge), 1.0);
        assert_eq!(pair.psi_in(&edge), 0.0);
        assert!(BoxMollifierPair::new(eps, 2.0 * eps, 3).is_err());
    }

    #[test]
    fn box_pair_sandwiches_gaussian_mass() {
        use rand_distr::StandardNormal;
        let pair = BoxMollifierPair::new(0.4, 0.3, 2).unwrap();
        let mut rng = stream(16, 0);
        let n = 200_000usize;
        let (mut e_in, mut e_box, mut e_out) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: Vec<f64> = (0..2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            e_in += pair.psi_in(&x);
            e_box += if pair.contains(&x) { 1.0 } else { 0.0 };
            e_out += pair.psi_out(&x);
        }
        let (e_in, e_box, e_out) = (e_in / n as f64, e_box / n as f64, e_out / n as f64);
        let se = 3.0 / (n as f64).sqrt();
        assert!(e_in <= e_box + se);
        assert!(e_box <= e_out + se);
        assert!(e_out - e_in < 0.5); // the collar is thin relative to the box
    }
}
