//! Dense tableau simplex, sized for the tiny linear programs this crate
//! needs: equality-form feasibility (basic feasible solutions for atom
//! grids) and small bounded maximizations (strict sign-pattern
//! feasibility with a margin variable). Bland's rule throughout, so no
//! cycling.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;

/// Two-phase simplex for `max c . x` over `a x = b`, `x >= 0`. With no
/// objective this is plain feasibility; either way the answer is a
/// basic feasible solution with at most `a.len()` nonzero entries, or
/// `None` when the phase-1 optimum leaves artificial mass behind.
pub fn equality_maximize(a: &[Vec<f64>], b: &[f64], c: Option<&[f64]>) -> Option<Vec<f64>> {
    let m = a.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let n = a[0].len();
    // Flip rows so the right-hand side is nonnegative, then start from the
    // artificial basis and minimize total artificial mass.
    let mut t = vec![vec![0.0; n + m + 1]; m];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][n + m] = s * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Maximize -(sum of artificials): cost row starts as the sum of
    // constraint rows restricted to the structural columns.
    let mut cost = vec![0.0; n + m + 1];
    for i in 0..m {
        for j in 0..n {
            cost[j] += t[i][j];
        }
        cost[n + m] += t[i][n + m];
    }
    let scale: f64 = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if !simplex(&mut t, &mut cost, &mut basis, n + m) {
        return None;
    }
    if cost[n + m].abs() > 1e-8 * scale {
        return None;
    }
    if let Some(c) = c {
        // Phase 2: reduce the objective against the current basis and
        // keep pivoting, with artificial columns barred from entering.
        let mut cost2 = vec![0.0; n + m + 1];
        cost2[..n].copy_from_slice(c);
        for (i, &bi) in basis.iter().enumerate() {
            if bi < n && c[bi] != 0.0 {
                let f = c[bi];
                for k in 0..=n + m {
                    cost2[k] -= f * t[i][k];
                }
            }
        }
        if !simplex_limited(&mut t, &mut cost2, &mut basis, n + m, n) {
            return None;
        }
    }
    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[i][n + m].max(0.0);
        }
    }
    Some(x)
}

/// Maximizes `c . x` subject to `a x <= b`, `x >= 0`, with `b >= 0`
/// (slack basis start); returns the optimum, or `None` on an unbounded
/// ray.
pub fn maximize_leq(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let mut t = vec![vec![0.0; n + m + 1]; m];
    for i in 0..m {
        debug_assert!(b[i] >= 0.0);
        t[i][..n].copy_from_slice(&a[i][..n]);
        t[i][n + i] = 1.0;
        t[i][n + m] = b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut cost = vec![0.0; n + m + 1];
    cost[..n].copy_from_slice(c);
    if !simplex(&mut t, &mut cost, &mut basis, n + m) {
        return None;
    }
    // The cost-row right-hand side tracks the negated objective.
    Some(-cost[n + m])
}

/// Primal simplex on a tableau whose cost row holds reduced costs for a
/// maximization. Returns false if an unbounded ray is detected.
fn simplex(t: &mut [Vec<f64>], cost: &mut [f64], basis: &mut [usize], ncols: usize) -> bool {
    simplex_limited(t, cost, basis, ncols, ncols)
}

/// Simplex with entering candidates restricted to the first
/// `enter_limit` columns (used to bar artificials in phase 2).
fn simplex_limited(
    t: &mut [Vec<f64>],
    cost: &mut [f64],
    basis: &mut [usize],
    ncols: usize,
    enter_limit: usize,
) -> bool {
    let m = t.len();
    loop {
        // Bland: smallest-index column with positive reduced cost.
        let mut enter = None;
        for j in 0..enter_limit {
            if cost[j] > COST_TOL {
                enter = Some(j);
                break;
            }
        }
        let Some(j) = enter else { return true };
        // Ratio test, ties broken by smallest basis variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > PIVOT_TOL {
                let ratio = t[i][ncols] / t[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else { return false };
        // Pivot on (r, j).
        let piv = t[r][j];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i != r && t[i][j].abs() > 0.0 {
                let f = t[i][j];
                for k in 0..=ncols {
                    t[i][k] -= f * t[r][k];
                }
                t[i][j] = 0.0;
            }
        }
        let f = cost[j];
        if f.abs() > 0.0 {
            for k in 0..=ncols {
                cost[k] -= f * t[r][k];
            }
            cost[j] = 0.0;
        }
        basis[r] = j;
    }
}
