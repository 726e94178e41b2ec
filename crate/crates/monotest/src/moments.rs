//! Constrained moment problems behind the yes/no coefficient
//! distributions.
//!
//! The "yes" variable is the Gaussian quadrature rule of `N(mu,1)`
//! determined by its first moments: it is supported on nonnegative reals
//! once `mu` clears the largest node offset. The "no" variable matches
//! the same moments but is forced to carry the Gaussian's negative-tail
//! mass below zero; it is found as a basic feasible solution of a small
//! equality-form linear program over a candidate atom grid.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rng::Stream;

/// Hankel matrices beyond this order are numerically meaningless in f64.
pub const MOMENT_ORDER_CAP: usize = 15;

/// Raw moments `m_1..m_K` of `N(mu, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub mu: f64,
    pub entries: Vec<f64>,
}

impl MomentVector {
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// `m_k`, with `m_0 = 1`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.entries[k - 1]
        }
    }
}

/// Double factorial `(k)!!` with `(-1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> f64 {
    double_factorial_exact(k)
        .to_string()
        .parse::<f64>()
        .expect("double factorial fits f64 range")
}

fn double_factorial_exact(k: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = k;
    while i >= 2 {
        acc *= i;
        i -= 2;
    }
    acc
}

fn binomial_exact(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    v.to_string().parse::<f64>().expect("value fits f64 range")
}

/// Raw moments of `N(mu,1)` up to order `kmax`, by the exact binomial sum
/// `m_k = sum_j C(k,2j) (2j-1)!! mu^(k-2j)`.
pub fn gaussian_raw_moments(mu: f64, kmax: usize) -> MomentVector {
    assert!(kmax >= 1, "kmax must be at least 1");
    let mut entries = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let mut m = 0.0;
        for j in 0..=k / 2 {
            let c = bigint_to_f64(&binomial_exact(k, 2 * j));
            let df = double_factorial(2 * j as i64 - 1);
            m += c * df * mu.powi((k - 2 * j) as i32);
        }
        entries.push(m);
    }
    MomentVector { mu, entries }
}

/// Exact-integer raw moments of `N(mu,1)` for integer `mu`, `m_1..m_kmax`.
pub fn gaussian_raw_moments_exact(mu: u64, kmax: usize) -> Vec<BigInt> {
    (1..=kmax)
        .map(|k| {
            let mut m = BigInt::zero();
            for j in 0..=k / 2 {
                m += binomial_exact(k, 2 * j)
                    * double_factorial_exact(2 * j as i64 - 1)
                    * BigInt::from(mu).pow((k - 2 * j) as u32);
            }
            m
        })
        .collect()
}

/// The pair of moment matrices whose positive semidefiniteness
/// characterizes realizability on the real line and on the nonnegative
/// half-line.
#[derive(Debug, Clone)]
pub struct HankelPair {
    /// `(n+1) x (n+1)` with entry `(i,j) = m_(i+j)`, `m_0 = 1`.
    pub a_r: DMatrix<f64>,
    /// `(n+1) x (n+1)` with entry `(i,j) = m_(i+j+1)`.
    pub a_r_plus: DMatrix<f64>,
    pub order: usize,
}

/// Builds the moment-matrix pair for an odd-order moment vector
/// `ell = 2n + 1`.
pub fn hankel_matrices(m: &MomentVector) -> Result<HankelPair> {
    let ell = m.order();
    if ell % 2 == 0 {
        return Err(Error::EvenMomentOrder(ell));
    }
    if ell > MOMENT_ORDER_CAP {
        return Err(Error::MomentOrderCap(ell, MOMENT_ORDER_CAP));
    }
    let n = (ell - 1) / 2;
    let a_r = DMatrix::from_fn(n + 1, n + 1, |i, j| m.get(i + j));
    let a_r_plus = DMatrix::from_fn(n + 1, n + 1, |i, j| m.get(i + j + 1));
    Ok(HankelPair { a_r, a_r_plus, order: ell })
}

/// Eigenvalue feasibility report for a [`HankelPair`].
#[derive(Debug, Clone, Serialize)]
pub struct PsdReport {
    pub min_eig_a: f64,
    pub min_eig_a_plus: f64,
    pub real_line_feasible: bool,
    pub nonneg_feasible: bool,
}

fn min_max_eig(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v.abs());
    }
    (lo, hi)
}

/// Reports the minimum eigenvalue of each moment matrix and whether each
/// clears the PSD tolerance `lambda_min >= -1e-10 * sigma_max`.
pub fn psd_feasibility(h: &HankelPair) -> PsdReport {
    let (lo_a, hi_a) = min_max_eig(&h.a_r);
    let (lo_p, hi_p) = min_max_eig(&h.a_r_plus);
    PsdReport {
        min_eig_a: lo_a,
        min_eig_a_plus: lo_p,
        real_line_feasible: lo_a >= -1e-10 * hi_a.max(1.0),
        nonneg_feasible: lo_p >= -1e-10 * hi_p.max(1.0),
    }
}

/// Finite-support real random variable: sorted atoms with probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteRV {
    pub atoms: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteRV {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let rv = DiscreteRV { atoms, probs };
        rv.validate()?;
        Ok(rv)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.len() != self.probs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.atoms.len(),
                got: self.probs.len(),
            });
        }
        if self.probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidParam("negative probability".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        if self.atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParam("atoms must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    /// `E[X^k]`.
    pub fn moment(&self, k: usize) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .map(|(&x, &p)| p * x.powi(k as i32))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Total probability on strictly negative atoms.
    pub fn negative_mass(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .filter(|(&x, _)| x < 0.0)
            .map(|(_, &p)| p)
            .sum()
    }

    pub fn max_abs_atom(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()))
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        use rand::Rng;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (&x, &p) in self.atoms.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return x;
            }
        }
        *self.atoms.last().expect("nonempty support")
    }
}

/// Moment-matched coefficient distributions: `yes` is nonnegative, `no`
/// carries negative mass, and both match the first `ell` moments of
/// `N(mu,1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YesNoPair {
    pub ell: usize,
    pub mu: u64,
    pub yes_rv: DiscreteRV,
    pub no_rv: DiscreteRV,
}

impl YesNoPair {
    pub fn build(ell: usize, mu: u64) -> Result<Self> {
        Ok(YesNoPair {
            ell,
            mu,
            yes_rv: build_yes_rv(ell, mu)?,
            no_rv: build_no_rv(ell, mu)?,
        })
    }

    pub fn max_abs_atom(&self) -> f64 {
        self.yes_rv.max_abs_atom().max(self.no_rv.max_abs_atom())
    }

    /// Largest relative error over `k in 1..=ell` between the moments of
    /// either variable and the target Gaussian moments.
    pub fn max_moment_error(&self) -> f64 {
        let target = gaussian_raw_moments(self.mu as f64, self.ell);
        let mut worst: f64 = 0.0;
        for k in 1..=self.ell {
            let m = target.get(k);
            let denom = m.abs().max(1.0);
            worst = worst.max((self.yes_rv.moment(k) - m).abs() / denom);
            worst = worst.max((self.no_rv.moment(k) - m).abs() / denom);
        }
        worst
    }
}

fn check_order(ell: usize) -> Result<usize> {
    if ell % 2 == 0 {
        return Err(Error::EvenMomentOrder(ell));
    }
    if ell > MOMENT_ORDER_CAP {
        return Err(Error::MomentOrderCap(ell, MOMENT_ORDER_CAP));
    }
    Ok((ell + 1) / 2)
}

/// The `(ell+1)/2`-node Gaussian quadrature rule of `N(mu,1)`: nodes are
/// the eigenvalues of the symmetric tridiagonal recurrence matrix built
/// from the standard-normal moment sequence, shifted by `mu`; weights
/// come from the first eigenvector components. Matches `m_1..m_ell` and
/// fails if any node lands below zero.
pub fn build_yes_rv(ell: usize, mu: u64) -> Result<DiscreteRV> {
    let s = check_order(ell)?;
    let central = gaussian_raw_moments(0.0, 2 * s);
    // Three-term recurrence coefficients from the Cholesky factor of the
    // (s+1) x (s+1) standard-normal moment matrix.
    let hankel = DMatrix::from_fn(s + 1, s + 1, |i, j| central.get(i + j));
    let chol = hankel.cholesky().ok_or(Error::RecurrenceBreakdown)?;
    let r = chol.l().transpose(); // upper triangular
    let mut alpha = vec![0.0; s];
    let mut beta = vec![0.0; s]; // beta[0] unused
    for j in 0..s {
        let above = if j == 0 { 0.0 } else { r[(j - 1, j)] / r[(j - 1, j - 1)] };
        alpha[j] = r[(j, j + 1)] / r[(j, j)] - above;
        if j > 0 {
            beta[j] = r[(j, j)] / r[(j - 1, j - 1)];
        }
    }
    let mut jacobi = DMatrix::zeros(s, s);
    for j in 0..s {
        jacobi[(j, j)] = alpha[j];
        if j > 0 {
            jacobi[(j, j - 1)] = beta[j];
            jacobi[(j - 1, j)] = beta[j];
        }
    }
    let eig = jacobi.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..s)
        .map(|i| {
            let node = eig.eigenvalues[i] + mu as f64;
            let w = eig.eigenvectors[(0, i)].powi(2);
            (node, w)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut atoms = Vec::with_capacity(s);
    let mut probs = Vec::with_capacity(s);
    for (node, w) in rule {
        if node < -1e-9 {
            return Err(Error::NegativeNode(node));
        }
        atoms.push(node.max(0.0));
        probs.push(w);
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    let rv = DiscreteRV::new(atoms, probs)?;

    // The rule must reproduce the target moments; a failure here means the
    // recurrence lost the moment matrix to rounding.
    let target = gaussian_raw_moments(mu as f64, ell);
    for k in 1..=ell {
        let m = target.get(k);
        if (rv.moment(k) - m).abs() / m.abs().max(1.0) > 1e-9 {
            return Err(Error::RecurrenceBreakdown);
        }
    }
    Ok(rv)
}

/// Candidate atom grid for [`build_no_rv`]: quantiles of `N(mu,1)` plus
/// explicit negative candidates and a few tail atoms.
fn no_rv_grid(mu: f64, g: usize) -> Vec<f64> {
    let normal = Normal::new(mu, 1.0).expect("valid normal");
    let mut xs: Vec<f64> = (1..=g)
        .map(|i| normal.inverse_cdf(i as f64 / (g + 1) as f64))
        .collect();
    xs.extend_from_slice(&[-2.0, -1.0, -0.5]);
    for t in [3.0, 3.5, 4.0] {
        xs.push(mu - t);
        xs.push(mu + t);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    xs
}

/// Builds the negative-mass moment match: a finite-support variable with
/// `E[X^k] = m_k(mu)` for `k in 1..=ell` whose mass below zero equals
/// `Pr[N(mu,1) < 0]`. Solved as an equality-form LP over the candidate
/// grid; the basic feasible solution keeps at most `ell + 2` atoms.
pub fn build_no_rv(ell: usize, mu: u64) -> Result<DiscreteRV> {
    check_order(ell)?;
    if mu == 0 {
        return Err(Error::InvalidParam("mu must be positive".into()));
    }
    let muf = mu as f64;
    let target = gaussian_raw_moments(muf, ell);
    let neg_mass = Normal::new(0.0, 1.0).expect("standard normal").cdf(-muf);

    let mut last_residual = f64::INFINITY;
    for round in 0..4 {
        let grid = no_rv_grid(muf, 200 << round);
        if let Some(rv) = try_no_rv_on_grid(&grid, &target, neg_mass) {
            let rv = refine_support(&rv, &target, neg_mass, muf).unwrap_or(rv);
            let resid = moment_residual(&rv, &target);
            if resid <= 1e-9 && (rv.negative_mass() - neg_mass).abs() <= 1e-6 {
                return Ok(rv);
            }
            last_residual = last_residual.min(resid);
        }
    }
    Err(Error::GridInfeasible { rounds: 4, residual: last_residual })
}

/// Swaps the LP vertex for a better-dispersed feasible support of the
/// same size. Simplex optima tend to split the bulk across adjacent
/// grid atoms; the resulting near-lattice coefficient sums make sampled
/// threshold functions monotone far too often at desk-scale dimensions.
/// Enumerates (ell+2)-subsets of a small pool (base atoms, the explicit
/// negatives, spread quantiles), solves each square system exactly, and
/// keeps the feasible support with the widest minimum gap between
/// carrying atoms.
fn refine_support(
    base: &DiscreteRV,
    target: &MomentVector,
    neg_mass: f64,
    mu: f64,
) -> Option<DiscreteRV> {
    let ell = target.order();
    let size = ell + 2;
    let normal = Normal::new(mu, 1.0).expect("valid normal");
    let mut pool: Vec<f64> = base.atoms.clone();
    pool.extend_from_slice(&[-2.0, -1.0, -0.5]);
    let quantiles = 8;
    for i in 1..=quantiles {
        pool.push(normal.inverse_cdf((2 * i - 1) as f64 / (2 * quantiles) as f64));
    }
    pool.sort_by(f64::total_cmp);
    pool.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    if pool.len() > size + 6 {
        // Keep the extremes and thin the middle deterministically.
        let keep_every = pool.len() as f64 / (size + 6) as f64;
        let mut thinned = Vec::new();
        let mut next = 0.0;
        for (i, &x) in pool.iter().enumerate() {
            if i as f64 >= next || x < 0.0 {
                thinned.push(x);
                next = i as f64 + keep_every;
            }
        }
        pool = thinned;
    }
    if pool.len() < size {
        return None;
    }

    let mut best: Option<(f64, f64, DiscreteRV)> = None;
    let mut subset: Vec<usize> = (0..size).collect();
    loop {
        let atoms: Vec<f64> = subset.iter().map(|&i| pool[i]).collect();
        if atoms.iter().any(|&x| x < 0.0) {
            if let Some(rv) = solve_square_support(&atoms, target, neg_mass) {
                if moment_residual(&rv, target) <= 1e-9
                    && (rv.negative_mass() - neg_mass).abs() <= 1e-6
                {
                    // Only count atoms that carry real mass and are well
                    // separated: near-equal atoms behave as one value in
                    // the coefficient-sum lattice. The score favors a
                    // balanced split of the positive bulk (largest
                    // second-heaviest carrying mass), then deeper
                    // negative support.
                    let carrying: Vec<(f64, f64)> = rv
                        .atoms
                        .iter()
                        .zip(&rv.probs)
                        .filter(|(_, &p)| p >= 0.05)
                        .map(|(&x, &p)| (x, p))
                        .collect();
                    let min_gap = carrying
                        .windows(2)
                        .map(|w| w[1].0 - w[0].0)
                        .fold(f64::INFINITY, f64::min);
                    if min_gap < 0.4 {
                        advance(&mut subset, pool.len(), size);
                        if subset.is_empty() {
                            return best.map(|(_, _, rv)| rv);
                        }
                        continue;
                    }
                    let mut positive_masses: Vec<f64> = carrying
                        .iter()
                        .filter(|(x, _)| *x > 0.0)
                        .map(|(_, p)| *p)
                        .collect();
                    positive_masses.sort_by(f64::total_cmp);
                    positive_masses.reverse();
                    let split = positive_masses.get(1).copied().unwrap_or(0.0);
                    let lowest = -rv.atoms[0];
                    let better = match &best {
                        None => true,
                        Some((s, l, _)) => {
                            split > *s + 1e-12 || (split > *s - 1e-12 && lowest > *l)
                        }
                    };
                    if better {
                        best = Some((split, lowest, rv));
                    }
                }
            }
        }
        advance(&mut subset, pool.len(), size);
        if subset.is_empty() {
            return best.map(|(_, _, rv)| rv);
        }
    }
}

/// Steps to the next lexicographic subset, clearing it when exhausted.
fn advance(subset: &mut Vec<usize>, pool_len: usize, size: usize) {
    let mut i = size;
    loop {
        if i == 0 {
            subset.clear();
            return;
        }
        i -= 1;
        if subset[i] != i + pool_len - size {
            subset[i] += 1;
            for j in i + 1..size {
                subset[j] = subset[j - 1] + 1;
            }
            return;
        }
    }
}

/// Exact probabilities over a fixed support: the square system of the
/// normalization, moment, and negative-mass rows.
fn solve_square_support(
    atoms: &[f64],
    target: &MomentVector,
    neg_mass: f64,
) -> Option<DiscreteRV> {
    let ell = target.order();
    let rows = ell + 2;
    debug_assert_eq!(atoms.len(), rows);
    let scales: Vec<f64> = (0..rows)
        .map(|i| {
            if i == 0 || i > ell {
                1.0
            } else {
                atoms.iter().fold(1.0f64, |acc, x| acc.max(x.abs().powi(i as i32)))
            }
        })
        .collect();
    let m = DMatrix::from_fn(rows, rows, |i, j| {
        let x = atoms[j];
        let raw = if i == 0 {
            1.0
        } else if i <= ell {
            x.powi(i as i32)
        } else if x < 0.0 {
            1.0
        } else {
            0.0
        };
        raw / scales[i]
    });
    let mut rhs = nalgebra::DVector::zeros(rows);
    rhs[0] = 1.0;
    for k in 1..=ell {
        rhs[k] = target.get(k) / scales[k];
    }
    rhs[ell + 1] = neg_mass;
    let sol = m.lu().solve(&rhs)?;
    if sol.iter().any(|&p| p < -1e-10) {
        return None;
    }
    let total: f64 = sol.iter().map(|&p| p.max(0.0)).sum();
    let probs: Vec<f64> = sol.iter().map(|&p| p.max(0.0) / total).collect();
    DiscreteRV::new(atoms.to_vec(), probs).ok()
}

/// Deterministic pseudo-noise in [0, 1) keyed to the atom value.
fn value_noise(x: f64) -> f64 {
    let mut h = x.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^= h >> 29;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 32;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn moment_residual(rv: &DiscreteRV, target: &MomentVector) -> f64 {
    (1..=target.order())
        .map(|k| {
            let m = target.get(k);
            (rv.moment(k) - m).abs() / m.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

fn try_no_rv_on_grid(grid: &[f64], target: &MomentVector, neg_mass: f64) -> Option<DiscreteRV> {
    let ell = target.order();
    let ncols = grid.len();
    // Rows: normalization, m_1..m_ell, negative-mass indicator. Each
    // moment row is scaled by its largest entry to keep the tableau
    // conditioned.
    let mut a = Vec::with_capacity(ell + 2);
    let mut b = Vec::with_capacity(ell + 2);
    a.push(vec![1.0; ncols]);
    b.push(1.0);
    for k in 1..=ell {
        let row: Vec<f64> = grid.iter().map(|x| x.powi(k as i32)).collect();
        let scale = row.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        a.push(row.iter().map(|v| v / scale).collect());
        b.push(target.get(k) / scale);
    }
    a.push(grid.iter().map(|&x| if x < 0.0 { 1.0 } else { 0.0 }).collect());
    b.push(neg_mass);

    // Among the feasible vertices, push the negative mass onto the most
    // negative atoms: the Gaussian's tail sits well below zero, and
    // near-zero negative atoms would make the sampled threshold
    // functions trivially close to monotone. The tiny value-keyed
    // perturbation steers the simplex off degenerate vertices that
    // split one atom across two adjacent grid points.
    let objective: Vec<f64> =
        grid.iter().map(|&x| (-x).max(0.0) + 1e-3 * value_noise(x)).collect();
    let p = crate::lp::equality_maximize(&a, &b, Some(&objective))?;
    let support: Vec<usize> = (0..ncols).filter(|&j| p[j] > 1e-13).collect();
    if support.is_empty() || support.len() > ell + 2 {
        return None;
    }
    // Polish the kept atoms against the unscaled constraints.
    let rows = ell + 2;
    let mat = DMatrix::from_fn(rows, support.len(), |i, j| {
        let x = grid[support[j]];
        if i == 0 {
            1.0
        } else if i <= ell {
            x.powi(i as i32)
        } else if x < 0.0 {
            1.0
        } else {
            0.0
        }
    });
    let mut rhs = nalgebra::DVector::zeros(rows);
    rhs[0] = 1.0;
    for k in 1..=ell {
        rhs[k] = target.get(k);
    }
    rhs[ell + 1] = neg_mass;
    let probs: Vec<f64> = match mat.clone().svd(true, true).solve(&rhs, 1e-13) {
        Ok(sol) if sol.iter().all(|&v| v >= -1e-12) => {
            sol.iter().map(|&v| v.max(0.0)).collect()
        }
        _ => support.iter().map(|&j| p[j]).collect(),
    };
    let atoms: Vec<f64> = support.iter().map(|&j| grid[j]).collect();
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|v| v / total).collect();
    DiscreteRV::new(atoms, probs).ok()
}

/// Smallest positive integer `mu` for which the order-`ell` nonnegative
/// quadrature rule exists (PSD feasibility plus nonnegative nodes).
pub fn find_mu(ell: usize) -> Result<u64> {
    check_order(ell)?;
    let cap = 10 * ell as u64;
    for mu in 1..=cap {
        let pair = hankel_matrices(&gaussian_raw_moments(mu as f64, ell))?;
        let report = psd_feasibility(&pair);
        if !(report.real_line_feasible && report.nonneg_feasible) {
            continue;
        }
        if build_yes_rv(ell, mu).is_ok() {
            return Ok(mu);
        }
    }
    Err(Error::MuSearchExhausted { ell, cap })
}

/// Exact integer determinant of the `r x r` matrix with entries
/// `(2(i+j)-3)!!` (1-based), `r = (ell+1)/2`. Equals the product of the
/// factorials of the odd integers up to `ell`.
pub fn det_b(ell: usize) -> Result<BigInt> {
    check_order(ell)?;
    let r = (ell + 1) / 2;
    let m: Vec<Vec<BigInt>> = (1..=r)
        .map(|i| {
            (1..=r)
                .map(|j| double_factorial_exact(2 * (i + j) as i64 - 3))
                .collect()
        })
        .collect();
    Ok(bareiss_det(m))
}

/// Exact integer determinant of the shifted moment matrix `A_R^+` of
/// `N(mu,1)` at odd order `ell` (entries `m_(i+j+1)`, 0-based).
pub fn hankel_plus_exact_det(ell: usize, mu: u64) -> Result<BigInt> {
    check_order(ell)?;
    let moments = gaussian_raw_moments_exact(mu, 2 * ell + 1);
    let size = ell + 1;
    let m: Vec<Vec<BigInt>> = (0..size)
        .map(|i| (0..size).map(|j| moments[i + j].clone()).collect())
        .collect();
    Ok(bareiss_det(m))
}

/// Fraction-free (Bareiss) integer determinant.
fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Moment gap introduced by truncating `N(mu,1)` at zero, with its
/// closed-form ceiling: returns
/// `(|E[max(z,0)^k] - E[z^k]|, exp(-mu^2/2) * (k-1)!!)`.
pub fn truncation_moment_gap(mu: f64, k: usize) -> (f64, f64) {
    assert!(mu > 0.0 && k >= 1);
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |t: f64| t.powi(k as i32) * (-0.5 * (t + mu) * (t + mu)).exp() * norm;
    // Unit panels keep the adaptive probe from stepping over the mass,
    // which is concentrated within a few units of the origin.
    let upper = 10 + 3 * k;
    let tol = (-0.5 * mu * mu).exp() * 1e-13 / upper as f64;
    let gap: f64 = (0..upper)
        .map(|p| adaptive_simpson(&integrand, p as f64, (p + 1) as f64, tol.max(1e-300)))
        .sum();
    let bound = (-0.5 * mu * mu).exp() * double_factorial(k as i64 - 1);
    (gap.abs(), bound)
}
