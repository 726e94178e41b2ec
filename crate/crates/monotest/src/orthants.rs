//! Union-of-orthants distance between the yes-side and no-side
//! coefficient sums, exact by enumeration at tiny scale and by Monte
//! Carlo otherwise, plus the replacement-step and anticoncentration
//! experiments built on the same samplers.
//!
//! Orthants are labeled by sign patterns with the global `sign(0) = +1`
//! rule, so the distance is the total variation between the two
//! sign-pattern distributions; that equals the maximum probability gap
//! over unions of orthants because the maximizing union collects the
//! patterns with positive mass difference.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::QueryMatrix;
use crate::mollifier::OrthantMollifier;
use crate::moments::{DiscreteRV, YesNoPair};
use crate::rng::Stream;

/// Enumeration guard for the exact distance: atom-assignment count.
pub const EXACT_COMBO_GUARD: u64 = 10_000_000;

/// Patterns are stored as bitmasks: bit `r` is set iff coordinate `r`
/// is nonnegative.
pub fn sign_pattern(v: &[f64]) -> u64 {
    debug_assert!(v.len() <= 64);
    v.iter()
        .enumerate()
        .fold(0u64, |acc, (r, &x)| if x >= 0.0 { acc | 1 << r } else { acc })
}

/// The `{-1,+1}` sign vector of a pattern key.
pub fn pattern_signs(key: u64, d: usize) -> Vec<i8> {
    (0..d).map(|r| if key >> r & 1 == 1 { 1i8 } else { -1 }).collect()
}

/// A distribution over `{-1,+1}^d` orthant labels.
#[derive(Debug, Clone, Serialize)]
pub struct SignPatternDistribution {
    pub d: usize,
    pub mass: BTreeMap<u64, f64>,
}

impl SignPatternDistribution {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.mass.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!("pattern masses sum to {total}")));
        }
        if self.d < 64 && self.mass.keys().any(|&k| k >> self.d != 0) {
            return Err(Error::InvalidParam("pattern key wider than d".into()));
        }
        Ok(())
    }

    pub fn from_counts(d: usize, counts: &BTreeMap<u64, u64>, total: u64) -> Self {
        let mass = counts.iter().map(|(&k, &c)| (k, c as f64 / total as f64)).collect();
        SignPatternDistribution { d, mass }
    }

    /// Total variation distance over the pattern algebra.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        let mut it_a = self.mass.iter().peekable();
        let mut it_b = other.mass.iter().peekable();
        loop {
            match (it_a.peek(), it_b.peek()) {
                (Some((&ka, &va)), Some((&kb, &vb))) => {
                    if ka == kb {
                        acc += (va - vb).abs();
                        it_a.next();
                        it_b.next();
                    } else if ka < kb {
                        acc += va;
                        it_a.next();
                    } else {
                        acc += vb;
                        it_b.next();
                    }
                }
                (Some((_, &va)), None) => {
                    acc += va;
                    it_a.next();
                }
                (None, Some((_, &vb))) => {
                    acc += vb;
                    it_b.next();
                }
                (None, None) => break,
            }
        }
        0.5 * acc
    }

    /// Probability gap `|P - Q|` on one union of orthants, the union
    /// given as a predicate on pattern keys.
    pub fn union_gap<F: Fn(u64) -> bool>(&self, other: &Self, in_union: F) -> f64 {
        let p: f64 = self.mass.iter().filter(|(&k, _)| in_union(k)).map(|(_, &v)| v).sum();
        let q: f64 = other.mass.iter().filter(|(&k, _)| in_union(k)).map(|(_, &v)| v).sum();
        (p - q).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DuoMethod {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for DuoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DuoMethod::Exact => write!(f, "exact"),
            DuoMethod::MonteCarlo => write!(f, "monte_carlo"),
        }
    }
}

/// A union-of-orthants distance estimate with its uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct DuoEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: DuoMethod,
    pub samples: u64,
    /// Additive plug-in bias ceiling `sqrt(2^d / samples)` (0 in exact
    /// mode), capped at 1.
    pub bias_bound: f64,
}

/// Exact sign-pattern distribution of `sum_i w_i X^(i)` with `w_i`
/// i.i.d. from `rv`, by enumerating all atom assignments.
pub fn exact_pattern_distribution(
    qm: &QueryMatrix,
    rv: &DiscreteRV,
) -> Result<SignPatternDistribution> {
    let combos = (rv.support_size() as u64).checked_pow(qm.n as u32);
    match combos {
        Some(c) if c <= EXACT_COMBO_GUARD => {}
        _ => {
            return Err(Error::ResourceGuard(format!(
                "{}^{} atom assignments exceed the exact-mode guard",
                rv.support_size(),
                qm.n
            )))
        }
    }
    if qm.d() > 64 {
        return Err(Error::ResourceGuard("exact mode is limited to 64 queries".into()));
    }
    // Unscaled sign columns; sums are accumulated in the same fold order
    // and scaling as `QueryMatrix::apply`, so boundary mass (sums landing
    // exactly on zero) is classified identically to the samplers. Each
    // depth gets its own buffer: no add-then-subtract backtracking drift.
    let columns: Vec<Vec<f64>> =
        (0..qm.n).map(|j| qm.rows.iter().map(|row| row[j] as f64).collect()).collect();
    let mut mass = BTreeMap::new();
    let mut levels = vec![vec![0.0f64; qm.d()]; qm.n + 1];
    enumerate(&columns, rv, 0, 1.0, &mut levels, &mut mass);
    let dist = SignPatternDistribution { d: qm.d(), mass };
    dist.validate()?;
    Ok(dist)
}

fn enumerate(
    columns: &[Vec<f64>],
    rv: &DiscreteRV,
    depth: usize,
    prob: f64,
    levels: &mut Vec<Vec<f64>>,
    mass: &mut BTreeMap<u64, f64>,
) {
    if depth == columns.len() {
        // Positive scaling cannot flip a sign, so the pattern of the
        // unscaled sums equals the pattern of the scaled ones.
        *mass.entry(sign_pattern(&levels[depth])).or_insert(0.0) += prob;
        return;
    }
    for (&atom, &p) in rv.atoms.iter().zip(&rv.probs) {
        let (head, tail) = levels.split_at_mut(depth + 1);
        for (next, (&cur, &col)) in
            tail[0].iter_mut().zip(head[depth].iter().zip(&columns[depth]))
        {
            *next = cur + col * atom;
        }
        enumerate(columns, rv, depth + 1, prob * p, levels, mass);
    }
}

/// Exact union-of-orthants distance by full enumeration of both
/// coefficient assignments.
pub fn duo_exact_small(qm: &QueryMatrix, pair: &YesNoPair) -> Result<DuoEstimate> {
    let p_s = exact_pattern_distribution(qm, &pair.yes_rv)?;
    let p_t = exact_pattern_distribution(qm, &pair.no_rv)?;
    let combos = (pair.yes_rv.support_size() as u64).pow(qm.n as u32)
        + (pair.no_rv.support_size() as u64).pow(qm.n as u32);
    Ok(DuoEstimate {
        value: p_s.tv_distance(&p_t),
        stderr: 0.0,
        method: DuoMethod::Exact,
        samples: combos,
        bias_bound: 0.0,
    })
}

/// Empirical sign-pattern counts of `samples` draws.
pub fn sample_pattern_counts(
    qm: &QueryMatrix,
    rv: &DiscreteRV,
    samples: u64,
    rng: &mut Stream,
) -> BTreeMap<u64, u64> {
    let mut counts = BTreeMap::new();
    let mut coeffs = vec![0.0f64; qm.n];
    for _ in 0..samples {
        for w in coeffs.iter_mut() {
            *w = rv.sample(rng);
        }
        let s = qm.apply(&coeffs);
        *counts.entry(sign_pattern(&s)).or_insert(0) += 1;
    }
    counts
}

/// Exact multinomial resample of `total` draws from empirical counts,
/// via ordered uniforms generated as normalized exponential spacings:
/// O(total + keys) per call regardless of how spread the counts are.
/// `scratch` is reused across calls to avoid reallocating.
fn multinomial_resample(
    counts: &[(u64, u64)],
    total: u64,
    rng: &mut Stream,
    scratch: &mut Vec<f64>,
) -> Vec<(u64, u64)> {
    use rand::Rng;
    let n = total as usize;
    scratch.clear();
    scratch.reserve(n + 1);
    let mut acc = 0.0f64;
    for _ in 0..n + 1 {
        let e: f64 = rng.sample(rand_distr::Exp1);
        acc += e;
        scratch.push(acc);
    }
    let grand = *scratch.last().expect("nonempty");
    // scratch[i] / grand for i < n are the order statistics of n
    // uniforms; count how many land in each key's probability interval.
    let mut out = Vec::with_capacity(counts.len());
    let mut cum = 0u64;
    let mut i = 0usize;
    for &(k, c) in counts {
        cum += c;
        let boundary = cum as f64 / total as f64 * grand;
        let start = i;
        while i < n && scratch[i] <= boundary {
            i += 1;
        }
        if i > start {
            out.push((k, (i - start) as u64));
        }
    }
    // Rounding leftovers (if any) belong to the last interval.
    if i < n {
        if let Some(last) = out.last_mut() {
            last.1 += (n - i) as u64;
        }
    }
    out
}

fn tv_from_sorted_counts(a: &[(u64, u64)], b: &[(u64, u64)], total: u64) -> f64 {
    let mut acc = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ka, va)), Some(&(kb, vb))) => {
                if ka == kb {
                    acc += va.abs_diff(vb);
                    i += 1;
                    j += 1;
                } else if ka < kb {
                    acc += va;
                    i += 1;
                } else {
                    acc += vb;
                    j += 1;
                }
            }
            (Some(&(_, va)), None) => {
                acc += va;
                i += 1;
            }
            (None, Some(&(_, vb))) => {
                acc += vb;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    0.5 * acc as f64 / total as f64
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Plug-in total-variation estimate over empirical sign patterns, with a
/// bootstrap standard error (200 resamples) and the additive plug-in
/// bias ceiling.
pub fn duo_monte_carlo(
    qm: &QueryMatrix,
    pair: &YesNoPair,
    samples: u64,
    rng: &mut Stream,
) -> Result<DuoEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidParam("need at least 1e4 samples".into()));
    }
    let counts_s = sample_pattern_counts(qm, &pair.yes_rv, samples, rng);
    let counts_t = sample_pattern_counts(qm, &pair.no_rv, samples, rng);
    let d = qm.d();
    let p_s = SignPatternDistribution::from_counts(d, &counts_s, samples);
    let p_t = SignPatternDistribution::from_counts(d, &counts_t, samples);
    let value = p_s.tv_distance(&p_t);

    let flat_s: Vec<(u64, u64)> = counts_s.iter().map(|(&k, &c)| (k, c)).collect();
    let flat_t: Vec<(u64, u64)> = counts_t.iter().map(|(&k, &c)| (k, c)).collect();
    let mut scratch = Vec::new();
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let rs = multinomial_resample(&flat_s, samples, rng, &mut scratch);
        let rt = multinomial_resample(&flat_t, samples, rng, &mut scratch);
        boot.push(tv_from_sorted_counts(&rs, &rt, samples));
    }
    let mean: f64 = boot.iter().sum::<f64>() / boot.len() as f64;
    let var: f64 =
        boot.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (boot.len() - 1) as f64;
    let bias_bound = (2.0f64.powi(d as i32) / samples as f64).sqrt().min(1.0);
    Ok(DuoEstimate {
        value,
        stderr: var.sqrt(),
        method: DuoMethod::MonteCarlo,
        samples,
        bias_bound,
    })
}

/// One replacement step: the gap `|E[Psi(Q^(i-1))] - E[Psi(Q^(i))]|`
/// estimated with common random numbers (the shared part of the hybrid
/// is sampled once per draw and only coordinate `i` is swapped).
/// Returns the gap and the standard error of the paired difference.
pub fn lindeberg_step_gap(
    qm: &QueryMatrix,
    pair: &YesNoPair,
    moll: &OrthantMollifier,
    i: usize,
    samples: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    if i == 0 || i > qm.n {
        return Err(Error::InvalidParam(format!("step index {i} out of 1..={}", qm.n)));
    }
    if moll.d != qm.d() {
        return Err(Error::DimensionMismatch { expected: qm.d(), got: moll.d });
    }
    let col: Vec<f64> = qm.scaled_column(i - 1);
    let mut coeffs = vec![0.0f64; qm.n];
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        for (j, w) in coeffs.iter_mut().enumerate() {
            *w = if j + 1 < i {
                pair.no_rv.sample(rng)
            } else if j + 1 > i {
                pair.yes_rv.sample(rng)
            } else {
                0.0
            };
        }
        let base = qm.apply(&coeffs);
        let u = pair.yes_rv.sample(rng);
        let v = pair.no_rv.sample(rng);
        let with_u: Vec<f64> = base.iter().zip(&col).map(|(b, c)| b + u * c).collect();
        let with_v: Vec<f64> = base.iter().zip(&col).map(|(b, c)| b + v * c).collect();
        let diff = moll.eval(&with_u) - moll.eval(&with_v);
        sum += diff;
        sumsq += diff * diff;
    }
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean * mean).max(0.0);
    Ok((mean.abs(), (var / samples as f64).sqrt()))
}

/// Direct estimate of `|E[Psi(S)] - E[Psi(T)]|` with independent
/// samples of both sides; returns the gap and combined standard error.
pub fn mollified_gap_direct(
    qm: &QueryMatrix,
    pair: &YesNoPair,
    moll: &OrthantMollifier,
    samples: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    if moll.d != qm.d() {
        return Err(Error::DimensionMismatch { expected: qm.d(), got: moll.d });
    }
    let mut est = [0.0f64; 2];
    let mut var = [0.0f64; 2];
    let mut coeffs = vec![0.0f64; qm.n];
    for (side, rv) in [&pair.yes_rv, &pair.no_rv].into_iter().enumerate() {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..samples {
            for w in coeffs.iter_mut() {
                *w = rv.sample(rng);
            }
            let v = moll.eval(&qm.apply(&coeffs));
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / samples as f64;
        est[side] = mean;
        var[side] = (sumsq / samples as f64 - mean * mean).max(0.0) / samples as f64;
    }
    Ok(((est[0] - est[1]).abs(), (var[0] + var[1]).sqrt()))
}

/// Parameters of the anticoncentration probes: the mollifier width, the
/// per-coordinate swap radius, and the largest atom magnitude.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnticoncentrationParams {
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    pub h: usize,
}

impl AnticoncentrationParams {
    /// Defaults from the instance family: `eps = n^(4/h - 1/2)`,
    /// `delta = n^(-1/2)`, `beta` the largest atom magnitude.
    pub fn for_family(n: usize, h: usize, pair: &YesNoPair) -> Self {
        let nf = n as f64;
        AnticoncentrationParams {
            eps: nf.powf(4.0 / h as f64 - 0.5),
            delta: nf.powf(-0.5),
            beta: pair.max_abs_atom(),
            h,
        }
    }
}

/// An axis-aligned box.
#[derive(Debug, Clone, Serialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn centered(halfwidths: &[f64]) -> Self {
        BoxRegion { lo: halfwidths.iter().map(|w| -w).collect(), hi: halfwidths.to_vec() }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(&lo, &hi)| (hi - lo).max(0.0)).product()
    }
}

/// Estimates the probability that the hybrid sum missing coordinate `i`,
/// projected onto the distinct queries of `index_tuple`, lands in the
/// origin-centered box of halfwidth `eps + beta * delta`.
pub fn anticoncentration_probe(
    qm: &QueryMatrix,
    pair: &YesNoPair,
    index_tuple: &[usize],
    params: &AnticoncentrationParams,
    i: usize,
    samples: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    if index_tuple.is_empty() || index_tuple.len() > params.h + 1 {
        return Err(Error::Precondition(format!(
            "index tuple size {} outside 1..={}",
            index_tuple.len(),
            params.h + 1
        )));
    }
    if index_tuple.iter().any(|&r| r >= qm.d()) {
        return Err(Error::InvalidParam("query index out of range".into()));
    }
    if i == 0 || i > qm.n {
        return Err(Error::InvalidParam(format!("coordinate {i} out of 1..={}", qm.n)));
    }
    let mut support: Vec<usize> = index_tuple.to_vec();
    support.sort_unstable();
    support.dedup();
    let halfwidth = params.eps + params.beta * params.delta;
    let mut coeffs = vec![0.0f64; qm.n];
    let mut hits = 0u64;
    for _ in 0..samples {
        for (j, w) in coeffs.iter_mut().enumerate() {
            *w = if j + 1 < i {
                pair.no_rv.sample(rng)
            } else if j + 1 > i {
                pair.yes_rv.sample(rng)
            } else {
                0.0
            };
        }
        let s = qm.apply(&coeffs);
        if support.iter().all(|&r| s[r].abs() <= halfwidth) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Monte Carlo estimate of `Pr[G in box]` for the Gaussian with mean
/// `mu * (sum of columns)` and covariance `A A^T`, sampled as
/// `mu * colsum + A z` with standard normal `z` (rank deficiency is
/// handled by construction).
pub fn gaussian_box_prob(
    a_rows: &[Vec<f64>],
    mu: f64,
    region: &BoxRegion,
    samples: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let t = a_rows.len();
    if t == 0 || region.dim() != t {
        return Err(Error::DimensionMismatch { expected: t, got: region.dim() });
    }
    let n = a_rows[0].len();
    if a_rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParam("ragged row matrix".into()));
    }
    let mean: Vec<f64> = a_rows.iter().map(|row| mu * row.iter().sum::<f64>()).collect();
    let mut hits = 0u64;
    let mut z = vec![0.0f64; n];
    let mut g = vec![0.0f64; t];
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (r, row) in a_rows.iter().enumerate() {
            g[r] = mean[r] + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        }
        if region.contains(&g) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sample_coeff_vector, Ltf};
    use crate::rng::stream;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn desk_pair(ell: usize) -> YesNoPair {
        let mu = crate::moments::find_mu(ell).unwrap();
        YesNoPair::build(ell, mu).unwrap()
    }

    #[test]
    fn sign_pattern_tie_rule() {
        assert_eq!(sign_pattern(&[0.3, -0.1]), 0b01);
        assert_eq!(sign_pattern(&[0.0, 0.0]), 0b11);
        assert_eq!(pattern_signs(0b01, 2), vec![1, -1]);
    }

    #[test]
    fn pattern_of_sum_matches_function_values() {
        let mut rng = stream(41, 0);
        let qm = QueryMatrix::random(8, 5, &mut rng);
        let pair = desk_pair(3);
        let mut rng2 = stream(41, 1);
        let coeffs: Vec<f64> = (0..8).map(|_| pair.yes_rv.sample(&mut rng2)).collect();
        let s = qm.apply(&coeffs);
        let f = Ltf::new(coeffs);
        let pattern = sign_pattern(&s);
        for (r, row) in qm.rows.iter().enumerate() {
            let want = f.eval(row).unwrap();
            let got = if pattern >> r & 1 == 1 { 1 } else { -1 };
            assert_eq!(got, want);
        }
    }

    #[test]
    fn identical_variables_have_zero_distance() {
        let mut rng = stream(42, 0);
        let qm = QueryMatrix::random(6, 2, &mut rng);
        let pair = desk_pair(3);
        let same = YesNoPair {
            ell: pair.ell,
            mu: pair.mu,
            yes_rv: pair.yes_rv.clone(),
            no_rv: pair.yes_rv.clone(),
        };
        let est = duo_exact_small(&qm, &same).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.method, DuoMethod::Exact);
    }

    #[test]
    fn two_case_enumeration_frozen() {
        // One query, one coordinate: u = {1}, v = {-1, 3} half-half.
        let qm = QueryMatrix::new(1, vec![vec![1]]).unwrap();
        let pair = YesNoPair {
            ell: 1,
            mu: 1,
            yes_rv: DiscreteRV::new(vec![1.0], vec![1.0]).unwrap(),
            no_rv: DiscreteRV::new(vec![-1.0, 3.0], vec![0.5, 0.5]).unwrap(),
        };
        let est = duo_exact_small(&qm, &pair).unwrap();
        assert!((est.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn union_maximization_equals_tv() {
        let mut rng = stream(43, 0);
        let pair = desk_pair(3);
        for d in [2usize, 3] {
            let qm = QueryMatrix::random(7, d, &mut rng);
            let p_s = exact_pattern_distribution(&qm, &pair.yes_rv).unwrap();
            let p_t = exact_pattern_distribution(&qm, &pair.no_rv).unwrap();
            let tv = p_s.tv_distance(&p_t);
            let mut best = 0.0f64;
            for union_code in 0u64..1 << (1 << d) {
                let gap = p_s.union_gap(&p_t, |k| union_code >> k & 1 == 1);
                best = best.max(gap);
            }
            assert!((best - tv).abs() < 1e-12, "d={d}: {best} vs {tv}");
        }
    }

    #[test]
    fn exact_guard_rejects_large_instances() {
        let mut rng = stream(44, 0);
        let qm = QueryMatrix::random(64, 2, &mut rng);
        let pair = desk_pair(3);
        assert!(matches!(duo_exact_small(&qm, &pair), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let mut rng = stream(45, 0);
        let qm = QueryMatrix::random(8, 3, &mut rng);
        let pair = desk_pair(3);
        let exact = duo_exact_small(&qm, &pair).unwrap();
        let mc = duo_monte_carlo(&qm, &pair, 200_000, &mut rng).unwrap();
        assert!(
            (mc.value - exact.value).abs() <= 3.0 * mc.stderr + mc.bias_bound,
            "{} vs {} (se {}, bias {})",
            mc.value,
            exact.value,
            mc.stderr,
            mc.bias_bound
        );
    }

    #[test]
    fn monte_carlo_same_rv_is_near_zero() {
        let mut rng = stream(46, 0);
        let qm = QueryMatrix::random(10, 3, &mut rng);
        let pair = desk_pair(3);
        let same = YesNoPair {
            ell: pair.ell,
            mu: pair.mu,
            yes_rv: pair.yes_rv.clone(),
            no_rv: pair.yes_rv.clone(),
        };
        let mc = duo_monte_carlo(&qm, &same, 50_000, &mut rng).unwrap();
        assert!(mc.value <= 3.0 * mc.stderr + mc.bias_bound);
    }

    #[test]
    fn duplicated_rows_collapse_exactly() {
        let mut rng = stream(47, 0);
        let pair = desk_pair(3);
        let base = QueryMatrix::random(7, 1, &mut rng);
        let dup = QueryMatrix::new(
            7,
            vec![base.rows[0].clone(), base.rows[0].clone(), base.rows[0].clone()],
        )
        .unwrap();
        let one = duo_exact_small(&base, &pair).unwrap();
        let many = duo_exact_small(&dup, &pair).unwrap();
        assert_eq!(one.value, many.value);
    }

    #[test]
    fn monte_carlo_rejects_tiny_sample_counts() {
        let mut rng = stream(48, 0);
        let qm = QueryMatrix::random(6, 2, &mut rng);
        let pair = desk_pair(3);
        assert!(duo_monte_carlo(&qm, &pair, 100, &mut rng).is_err());
    }

    #[test]
    fn lindeberg_gap_small_for_matched_moments() {
        let pair = desk_pair(3);
        let mut rng = stream(49, 0);
        let qm = QueryMatrix::random(64, 2, &mut rng);
        let moll = OrthantMollifier::new(2, 0.5, vec![vec![1, 1], vec![-1, 1]]).unwrap();
        let (gap, se) = lindeberg_step_gap(&qm, &pair, &moll, 7, 40_000, &mut rng).unwrap();
        assert!(gap <= 4.0 * se + 1e-3, "gap {gap} se {se}");
    }

    #[test]
    fn lindeberg_steps_dominate_direct_gap() {
        let pair = desk_pair(3);
        let mut rng = stream(50, 0);
        let n = 16;
        let qm = QueryMatrix::random(n, 2, &mut rng);
        let moll = OrthantMollifier::new(2, 0.3, vec![vec![1, 1]]).unwrap();
        let mut total = 0.0;
        let mut err_sq = 0.0;
        for i in 1..=n {
            let (gap, se) = lindeberg_step_gap(&qm, &pair, &moll, i, 30_000, &mut rng).unwrap();
            total += gap;
            err_sq += se * se;
        }
        let (direct, direct_se) =
            mollified_gap_direct(&qm, &pair, &moll, 60_000, &mut rng).unwrap();
        let slack = 3.0 * (err_sq.sqrt() + direct_se);
        assert!(total >= direct - slack, "sum {total} vs direct {direct} (slack {slack})");
    }

    #[test]
    fn probe_with_huge_box_is_one() {
        let pair = desk_pair(3);
        let mut rng = stream(51, 0);
        let qm = QueryMatrix::random(16, 3, &mut rng);
        let params = AnticoncentrationParams { eps: 1e6, delta: 0.1, beta: 1.0, h: 3 };
        let (p, _) =
            anticoncentration_probe(&qm, &pair, &[0, 1], &params, 3, 2_000, &mut rng).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn probe_tuple_size_guard() {
        let pair = desk_pair(3);
        let mut rng = stream(52, 0);
        let qm = QueryMatrix::random(16, 6, &mut rng);
        let params = AnticoncentrationParams { eps: 0.1, delta: 0.1, beta: 1.0, h: 3 };
        let err = anticoncentration_probe(&qm, &pair, &[0, 1, 2, 3, 4], &params, 1, 100, &mut rng);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn duplicated_index_tuple_collapses() {
        let pair = desk_pair(3);
        let qm = QueryMatrix::random(16, 4, &mut stream(53, 0));
        let params =
            AnticoncentrationParams { eps: 0.5, delta: 0.1, beta: pair.max_abs_atom(), h: 3 };
        let (a, _) =
            anticoncentration_probe(&qm, &pair, &[2, 2, 2], &params, 5, 20_000, &mut stream(53, 1))
                .unwrap();
        let (b, _) =
            anticoncentration_probe(&qm, &pair, &[2], &params, 5, 20_000, &mut stream(53, 1))
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_dimensional_probe_matches_gaussian_window() {
        // A single query: the sum is an i.i.d. weighted sum with unit
        // total variance, so the window mass is Gaussian up to a
        // Berry-Esseen-sized error.
        let pair = desk_pair(3);
        let n = 256;
        let qm = QueryMatrix::random(n, 1, &mut stream(54, 0));
        let params =
            AnticoncentrationParams { eps: 0.4, delta: 0.0, beta: pair.max_abs_atom(), h: 3 };
        let (p, se) =
            anticoncentration_probe(&qm, &pair, &[0], &params, n / 2, 100_000, &mut stream(54, 1))
                .unwrap();
        let mean: f64 = pair.mu as f64 * qm.rows[0].iter().map(|&b| b as f64).sum::<f64>()
            / (n as f64).sqrt();
        let var = (n - 1) as f64 / n as f64; // one coordinate is swapped out
        let normal = Normal::new(mean, var.sqrt()).unwrap();
        let want = normal.cdf(params.eps) - normal.cdf(-params.eps);
        assert!((p - want).abs() < 0.02 + 4.0 * se, "{p} vs {want}");
    }

    #[test]
    fn gaussian_box_prob_matches_scalar_cdf() {
        let n = 32;
        let s = 1.0 / (n as f64).sqrt();
        let row = vec![s; n];
        let mu = 0.7;
        let region = BoxRegion { lo: vec![3.0], hi: vec![5.0] };
        let (p, se) = gaussian_box_prob(&[row], mu, &region, 400_000, &mut stream(55, 0)).unwrap();
        // G ~ N(mu sqrt(n), 1).
        let normal = Normal::new(mu * (n as f64).sqrt(), 1.0).unwrap();
        let want = normal.cdf(5.0) - normal.cdf(3.0);
        assert!((p - want).abs() < 4.0 * se + 1e-4, "{p} vs {want}");
    }

    #[test]
    fn empty_box_probability_zero() {
        let region = BoxRegion::centered(&[0.0, 0.0]);
        let rows = vec![vec![0.5, 0.5], vec![0.5, -0.5]];
        let (p, _) = gaussian_box_prob(&rows, 1.0, &region, 10_000, &mut stream(56, 0)).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn gaussian_density_ceiling_on_box_mass() {
        // With the box centered at the mean, Pr[G in box] <= vol(box)
        // times the density maximum 1 / ((2 pi)^(t/2) sqrt(det A A^T)).
        let rows = vec![vec![0.6, 0.3, -0.2, 0.4], vec![-0.1, 0.5, 0.4, -0.3]];
        let a = nalgebra::DMatrix::from_fn(2, 4, |i, j| rows[i][j]);
        let det = (a.clone() * a.transpose()).determinant();
        let region = BoxRegion::centered(&[0.3, 0.2]);
        let (p, se) = gaussian_box_prob(&rows, 0.0, &region, 300_000, &mut stream(57, 0)).unwrap();
        let ceiling = region.volume() / (2.0 * std::f64::consts::PI * det.sqrt());
        assert!(p <= ceiling + 3.0 * se, "{p} vs ceiling {ceiling}");
    }

    #[test]
    fn mollifier_sandwich_on_samples() {
        let pair = desk_pair(3);
        let qm = QueryMatrix::random(12, 2, &mut stream(58, 0));
        let eps = 0.3;
        let orthants = vec![vec![1i8, 1], vec![1, -1]];
        let moll = OrthantMollifier::new(2, eps, orthants).unwrap();
        let mut rng = stream(58, 1);
        let samples = 100_000usize;
        let (mut e_psi, mut p_in, mut p_collar) = (0.0, 0.0, 0.0);
        for _ in 0..samples {
            let s = sample_coeff_vector(&qm, &pair.yes_rv, &mut rng);
            let inside = moll.contains(&s);
            e_psi += moll.eval(&s);
            if inside {
                p_in += 1.0;
                if s.iter().any(|v| v.abs() < eps) {
                    p_collar += 1.0;
                }
            }
        }
        let nf = samples as f64;
        let (e_psi, p_in, p_collar) = (e_psi / nf, p_in / nf, p_collar / nf);
        let se = 3.0 / nf.sqrt();
        assert!(e_psi <= p_in + se);
        assert!(p_in <= e_psi + p_collar + 3.0 * se);
    }
}
