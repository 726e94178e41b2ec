//! The cube-versus-subspace toolkit: distances from scaled hypercube
//! points to spans, rounding covers of a span (enumerated through the
//! central hyperplane arrangement of its column points), low-weight
//! representations, and the compatibility test between a point and a
//! small set.
//!
//! Points live in `{+-1/sqrt(n)}^n` and are stored unscaled as `{+-1}`
//! vectors; scaling is applied on access.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp;
use crate::moments::DiscreteRV;
use crate::rng::Stream;

/// A set of distinct scaled-cube points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubePointSet {
    pub n: usize,
    pub points: Vec<Vec<i8>>,
}

impl CubePointSet {
    pub fn new(n: usize, points: Vec<Vec<i8>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &points {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            if p.iter().any(|&b| b != 1 && b != -1) {
                return Err(Error::InvalidParam("cube entries must be +-1".into()));
            }
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidParam("cube points must be distinct".into()));
            }
        }
        Ok(CubePointSet { n, points })
    }

    /// Builds a set from possibly repeated rows, dropping duplicates.
    pub fn from_rows_dedup(n: usize, rows: &[Vec<i8>]) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut points = Vec::new();
        for r in rows {
            if seen.insert(r.clone()) {
                points.push(r.clone());
            }
        }
        CubePointSet::new(n, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Point `i` as a scaled vector.
    pub fn scaled(&self, i: usize) -> Vec<f64> {
        let s = self.scale();
        self.points[i].iter().map(|&b| b as f64 * s).collect()
    }

    pub fn scaled_point(&self, p: &[i8]) -> Vec<f64> {
        let s = self.scale();
        p.iter().map(|&b| b as f64 * s).collect()
    }
}

/// Orthonormal basis of the span of the given vectors (modified
/// Gram-Schmidt with one re-orthogonalization pass; near-zero residuals
/// are dropped).
fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 * scale.max(1.0) {
            for x in w.iter_mut() {
                *x /= norm;
            }
            basis.push(w);
        }
    }
    basis
}

/// Precomputed projector onto the span of a point set, for repeated
/// distance queries.
pub struct SpanProjector {
    basis: Vec<Vec<f64>>,
    n: usize,
}

impl SpanProjector {
    pub fn new(a: &CubePointSet) -> Self {
        let vectors: Vec<Vec<f64>> = (0..a.len()).map(|i| a.scaled(i)).collect();
        SpanProjector { basis: orthonormal_basis(&vectors), n: a.n }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Projection of `v` onto the span and the residual distance.
    pub fn project(&self, v: &[f64]) -> (Vec<f64>, f64) {
        debug_assert_eq!(v.len(), self.n);
        let mut proj = vec![0.0f64; self.n];
        for b in &self.basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (p, y) in proj.iter_mut().zip(b) {
                *p += dot * y;
            }
        }
        let dist: f64 =
            v.iter().zip(&proj).map(|(x, p)| (x - p) * (x - p)).sum::<f64>().sqrt();
        (proj, dist)
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        self.project(v).1
    }
}

/// Least-squares distance from a cube point to the span of a set.
pub fn dist_to_span(v: &[i8], a: &CubePointSet) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidParam("span of an empty set".into()));
    }
    if v.len() != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: v.len() });
    }
    let (_, residual) = least_squares(&a.scaled_point(v), a);
    Ok(residual)
}

/// Minimum-norm least-squares coefficients of `v` against the scaled
/// points of `a`, with the residual distance.
fn least_squares(v: &[f64], a: &CubePointSet) -> (Vec<f64>, f64) {
    let n = a.n;
    let k = a.len();
    let m = DMatrix::from_fn(n, k, |i, j| a.points[j][i] as f64 * a.scale());
    let rhs = nalgebra::DVector::from_row_slice(v);
    let svd = m.clone().svd(true, true);
    let beta = svd.solve(&rhs, 1e-13).expect("svd solve");
    let residual = (&m * &beta - &rhs).norm();
    (beta.iter().copied().collect(), residual)
}

const STRICT_MARGIN: f64 = 1e-9;

/// Enumerates the sign patterns realizable on `columns` by a linear
/// functional: pattern `p` is kept iff some `alpha` has
/// `alpha . col_i > 0` where `p_i = -1` is required negative, and
/// `alpha . col_i >= 0` (ties allowed, `strict = false`) or `> 0`
/// (`strict = true`) where `p_i = +1`. Incremental insertion with one
/// margin-LP feasibility check per extension.
pub fn enumerate_sign_patterns(
    columns: &[Vec<f64>],
    strict: bool,
    cap: usize,
) -> Result<Vec<Vec<i8>>> {
    if columns.is_empty() {
        return Ok(vec![vec![]]);
    }
    let k = columns[0].len();
    let mut frontier: Vec<Vec<i8>> = vec![vec![]];
    for t in 0..columns.len() {
        let mut next = Vec::new();
        for partial in &frontier {
            for sign in [1i8, -1] {
                let mut cand = partial.clone();
                cand.push(sign);
                if pattern_feasible(columns, &cand, strict) {
                    next.push(cand);
                }
            }
            if next.len() > cap {
                return Err(Error::ResourceGuard(format!(
                    "sign-pattern enumeration exceeded cap {cap} at column {t}"
                )));
            }
        }
        frontier = next;
    }
    let _ = k;
    Ok(frontier)
}

fn pattern_feasible(columns: &[Vec<f64>], signs: &[i8], strict: bool) -> bool {
    let k = columns[0].len();
    let strict_rows: Vec<usize> = signs
        .iter()
        .enumerate()
        .filter(|(_, &s)| strict || s == -1)
        .map(|(i, _)| i)
        .collect();
    if strict_rows.is_empty() {
        // alpha = 0 realizes the all-ties pattern.
        return true;
    }
    // Variables: alpha = a - b with 0 <= a, b <= 1, plus the margin m.
    let nv = 2 * k + 1;
    let mut a_ub: Vec<Vec<f64>> = Vec::new();
    let mut b_ub: Vec<f64> = Vec::new();
    for (i, &s) in signs.iter().enumerate() {
        let mut row = vec![0.0; nv];
        let sf = s as f64;
        for j in 0..k {
            // -s (alpha . col) <= 0, with margin on strict rows.
            row[j] = -sf * columns[i][j];
            row[k + j] = sf * columns[i][j];
        }
        if strict_rows.contains(&i) {
            row[2 * k] = 1.0;
        }
        a_ub.push(row);
        b_ub.push(0.0);
    }
    for j in 0..2 * k + 1 {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        a_ub.push(row);
        b_ub.push(1.0);
    }
    let mut c = vec![0.0; nv];
    c[2 * k] = 1.0;
    match lp::maximize_leq(&c, &a_ub, &b_ub) {
        Some(value) => value > STRICT_MARGIN,
        None => false,
    }
}

/// Distinct column types of the `k x n` matrix whose rows are the
/// points of `a`, with the coordinate positions carrying each type.
pub fn type_decomposition(a: &CubePointSet) -> (Vec<Vec<i8>>, Vec<Vec<usize>>) {
    let mut groups: BTreeMap<Vec<i8>, Vec<usize>> = BTreeMap::new();
    for i in 0..a.n {
        let column: Vec<i8> = a.points.iter().map(|p| p[i]).collect();
        groups.entry(column).or_default().push(i);
    }
    (groups.keys().cloned().collect(), groups.values().cloned().collect())
}

/// Realizable tie-to-plus sign assignments on a set of distinct column
/// types. Shared by [`cover_set`] and callers that cache patterns by
/// type signature.
pub fn patterns_for_types(type_columns: &[Vec<i8>]) -> Result<Vec<Vec<i8>>> {
    let k = type_columns.first().map(|c| c.len()).unwrap_or(0);
    if k == 0 || k > 8 {
        return Err(Error::ResourceGuard("cover enumeration guarded at k <= 8".into()));
    }
    let columns_f: Vec<Vec<f64>> =
        type_columns.iter().map(|c| c.iter().map(|&b| b as f64).collect()).collect();
    // 2^(k^2) bounds the number of k-variable threshold functions for
    // k >= 2; the k = 1 count is exactly 4 (constants and +-identity).
    let cap = if k == 1 { 4 } else { 1usize << (k * k).min(30) };
    let patterns = enumerate_sign_patterns(&columns_f, false, cap)?;
    if patterns.len() > cap {
        return Err(Error::CoverOverflow { got: patterns.len(), cap });
    }
    Ok(patterns)
}

/// The rounding cover of a span, organized by the distinct column types
/// of the defining point set.
#[derive(Debug, Clone)]
pub struct CoverSet {
    pub n: usize,
    /// Distinct columns of the point matrix, as `{+-1}^k` vectors.
    pub type_columns: Vec<Vec<i8>>,
    /// Coordinate positions carrying each column type.
    pub type_positions: Vec<Vec<usize>>,
    /// One realizable sign assignment to the types per cover point.
    pub type_patterns: Vec<Vec<i8>>,
}

impl CoverSet {
    pub fn len(&self) -> usize {
        self.type_patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.type_patterns.is_empty()
    }

    /// Cover point `idx` lifted to an unscaled cube vector.
    pub fn point(&self, idx: usize) -> Vec<i8> {
        let mut out = vec![0i8; self.n];
        for (t, positions) in self.type_positions.iter().enumerate() {
            for &p in positions {
                out[p] = self.type_patterns[idx][t];
            }
        }
        out
    }

    pub fn points(&self) -> Result<CubePointSet> {
        CubePointSet::new(self.n, (0..self.len()).map(|i| self.point(i)).collect())
    }

    /// Index and Hamming distance of the nearest cover point to `w`
    /// (ties break to the lowest index).
    pub fn nearest_to(&self, w: &[i8]) -> (usize, u64) {
        let plus_counts: Vec<u64> = self
            .type_positions
            .iter()
            .map(|positions| positions.iter().filter(|&&p| w[p] == 1).count() as u64)
            .collect();
        let totals: Vec<u64> = self.type_positions.iter().map(|p| p.len() as u64).collect();
        let mut best = (0usize, u64::MAX);
        for (idx, pattern) in self.type_patterns.iter().enumerate() {
            let mut ham = 0u64;
            for (t, &s) in pattern.iter().enumerate() {
                ham += if s == 1 { totals[t] - plus_counts[t] } else { plus_counts[t] };
            }
            if ham < best.1 {
                best = (idx, ham);
            }
        }
        best
    }
}

/// Enumerates the set of cube roundings of the span of `a`: the sign
/// patterns realizable on the column points of `a`, with ties rounding
/// to `+`. The result has at most `2^(k^2)` points.
pub fn cover_set(a: &CubePointSet) -> Result<CoverSet> {
    if a.is_empty() {
        return Err(Error::InvalidParam("cover of an empty set".into()));
    }
    let (type_columns, type_positions) = type_decomposition(a);
    let type_patterns = patterns_for_types(&type_columns)?;
    Ok(CoverSet { n: a.n, type_columns, type_positions, type_patterns })
}

impl CoverSet {
    /// Assembles a cover from a cached pattern enumeration.
    pub fn from_parts(
        n: usize,
        type_columns: Vec<Vec<i8>>,
        type_positions: Vec<Vec<usize>>,
        type_patterns: Vec<Vec<i8>>,
    ) -> Self {
        CoverSet { n, type_columns, type_positions, type_patterns }
    }
}

/// Convenience: the cover as a plain point set.
pub fn cover_points(a: &CubePointSet) -> Result<CubePointSet> {
    cover_set(a)?.points()
}

/// The subset of `x` within distance `r` of the span of `a`.
pub fn cube_points_near_span(
    x: &CubePointSet,
    a: &CubePointSet,
    r: f64,
) -> Result<CubePointSet> {
    let idx = cube_point_indices_near_span(x, a, r)?;
    CubePointSet::new(x.n, idx.into_iter().map(|i| x.points[i].clone()).collect())
}

pub fn cube_point_indices_near_span(
    x: &CubePointSet,
    a: &CubePointSet,
    r: f64,
) -> Result<Vec<usize>> {
    if a.is_empty() {
        return Err(Error::InvalidParam("span of an empty set".into()));
    }
    let projector = SpanProjector::new(a);
    let tol = 1e-12 * (1.0 + r);
    Ok((0..x.len())
        .filter(|&i| projector.distance(&x.scaled(i)) <= r + tol)
        .collect())
}

/// A bounded-coefficient representative of a point in a span.
#[derive(Debug, Clone, Serialize)]
pub struct LowWeightRep {
    /// The representative `u = sum_j betas_j V^(j)` (scaled coords).
    pub u: Vec<f64>,
    pub betas: Vec<f64>,
    pub realized_gamma1: f64,
    /// `||v - u|| / dist(v, span)`, or 1 when the distance vanishes.
    pub realized_gamma2_ratio: f64,
}

/// Precomputed per-subset state for the operations that are evaluated
/// against many points of the same subset: the span projector, the
/// Gram factor for least squares, the column-type decomposition, and
/// the scaled column sums.
pub struct SubsetContext {
    pub a: CubePointSet,
    projector: SpanProjector,
    /// Scaled coordinate sums of each defining point.
    col_sums: Vec<f64>,
    gram_chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    type_columns: Vec<Vec<i8>>,
}

impl SubsetContext {
    pub fn new(a: &CubePointSet) -> Result<Self> {
        if a.is_empty() || a.len() > 8 {
            return Err(Error::InvalidParam("set size must be in 1..=8".into()));
        }
        let k = a.len();
        let s = a.scale();
        let projector = SpanProjector::new(a);
        let col_sums: Vec<f64> =
            (0..k).map(|j| a.points[j].iter().map(|&b| b as f64 * s).sum()).collect();
        let gram = DMatrix::from_fn(k, k, |i, j| {
            a.points[i]
                .iter()
                .zip(&a.points[j])
                .map(|(&x, &y)| x as f64 * y as f64 / a.n as f64)
                .sum()
        });
        let gram_chol = gram.cholesky();
        let (type_columns, _) = type_decomposition(a);
        Ok(SubsetContext { a: a.clone(), projector, col_sums, gram_chol, type_columns })
    }

    pub fn distance(&self, v_scaled: &[f64]) -> f64 {
        self.projector.distance(v_scaled)
    }

    /// Least-squares coefficients of `v` against the scaled points,
    /// through the Gram factor when the points are independent and the
    /// SVD otherwise.
    fn least_squares_betas(&self, v_scaled: &[f64]) -> Vec<f64> {
        let k = self.a.len();
        let s = self.a.scale();
        match &self.gram_chol {
            Some(chol) => {
                let b = nalgebra::DVector::from_fn(k, |j, _| {
                    self.a.points[j]
                        .iter()
                        .zip(v_scaled)
                        .map(|(&p, &x)| p as f64 * s * x)
                        .sum()
                });
                chol.solve(&b).iter().copied().collect()
            }
            None => least_squares(v_scaled, &self.a).0,
        }
    }

    /// Constructive low-weight representation: the least-squares
    /// projection when its small-coordinate column types span full
    /// dimension, and the auxiliary-row system otherwise.
    pub fn low_weight_rep(&self, v: &[i8]) -> Result<LowWeightRep> {
        let a = &self.a;
        if v.len() != a.n {
            return Err(Error::DimensionMismatch { expected: a.n, got: v.len() });
        }
        let k = a.len();
        let n = a.n;
        let s = a.scale();
        let v_scaled = a.scaled_point(v);
        let betas = self.least_squares_betas(&v_scaled);
        let dist = self.projector.distance(&v_scaled);

        // Column types with small projection coordinates
        // (|u_i| <= 2/sqrt(n)); coordinates of one type share a value.
        let type_values: Vec<f64> = self
            .type_columns
            .iter()
            .map(|ty| ty.iter().zip(&betas).map(|(&c, b)| c as f64 * s * b).sum())
            .collect();
        let small_types: Vec<&Vec<i8>> = self
            .type_columns
            .iter()
            .zip(&type_values)
            .filter(|(_, val)| val.abs() <= 2.0 * s + 1e-12)
            .map(|(ty, _)| ty)
            .collect();

        // Greedy independent subset of the small-coordinate column types.
        let mut chosen: Vec<Vec<f64>> = Vec::new();
        let mut chosen_cols: Vec<Vec<f64>> = Vec::new();
        for ty in &small_types {
            let col: Vec<f64> = ty.iter().map(|&b| b as f64).collect();
            let mut w = col.clone();
            for b in &chosen {
                let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for x in w.iter_mut() {
                    *x /= norm;
                }
                chosen.push(w);
                chosen_cols.push(col);
            }
            if chosen.len() == k {
                break;
            }
        }

        if chosen.len() == k {
            // Full-dimensional case: the projection coefficients are
            // already the bounded representation.
            let u: Vec<f64> = (0..n)
                .map(|i| (0..k).map(|j| betas[j] * a.points[j][i] as f64 * s).sum())
                .collect();
            let gamma1 = betas.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
            return Ok(LowWeightRep {
                u,
                betas,
                realized_gamma1: gamma1,
                realized_gamma2_ratio: 1.0,
            });
        }

        // Deficient case: keep the small-type equations and zero out the
        // remaining directions against auxiliary cube rows, drawn from a
        // deterministic sign-vector sequence until the system is square.
        let mut rows: Vec<Vec<f64>> = chosen_cols.clone();
        let mut rhs: Vec<f64> = chosen_cols
            .iter()
            .map(|col| col.iter().zip(&betas).map(|(c, b)| c * b).sum())
            .collect();
        let mut basis = chosen.clone();
        let mut code = 1u32;
        while rows.len() < k {
            if code >= 1 << k {
                return Err(Error::RankDeficient);
            }
            let cand: Vec<f64> =
                (0..k).map(|b| if code >> b & 1 == 1 { 1.0 } else { -1.0 }).collect();
            code += 1;
            let mut w = cand.clone();
            for b in &basis {
                let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for x in w.iter_mut() {
                    *x /= norm;
                }
                basis.push(w);
                rows.push(cand);
                rhs.push(0.0);
            }
        }
        let m = DMatrix::from_fn(k, k, |i, jj| rows[i][jj]);
        let b = nalgebra::DVector::from_row_slice(&rhs);
        let alphas = m
            .lu()
            .solve(&b)
            .ok_or(Error::RankDeficient)?
            .iter()
            .copied()
            .collect::<Vec<f64>>();
        let w_point: Vec<f64> = (0..n)
            .map(|i| (0..k).map(|jj| alphas[jj] * a.points[jj][i] as f64 * s).sum())
            .collect();
        let err: f64 =
            v_scaled.iter().zip(&w_point).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let ratio = if dist <= 1e-12 { 1.0 } else { err / dist };
        let gamma1 = alphas.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        Ok(LowWeightRep {
            u: w_point,
            betas: alphas,
            realized_gamma1: gamma1,
            realized_gamma2_ratio: ratio,
        })
    }
}

/// Constructive low-weight representation of `v` against `a`.
pub fn low_weight_rep(v: &[i8], a: &CubePointSet) -> Result<LowWeightRep> {
    SubsetContext::new(a)?.low_weight_rep(v)
}

/// Verdict of the coordinate-sum envelope test.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityVerdict {
    pub compatible: bool,
    pub witness_betas: Option<Vec<f64>>,
    /// Best found value of `|sum(V-U)| - (||V-U|| + eps) log n`. For a
    /// cheaply certified compatible verdict this is an upper bound.
    pub margin: f64,
}

/// Direct re-evaluation of the incompatibility inequality at a witness.
pub fn incompatibility_witness_holds(
    v: &[i8],
    a: &CubePointSet,
    eps: f64,
    betas: &[f64],
) -> bool {
    let s = a.scale();
    let c = (a.n as f64).ln();
    let mut coord_sum = 0.0;
    let mut norm_sq = 0.0;
    for i in 0..a.n {
        let u: f64 = (0..a.len()).map(|j| betas[j] * a.points[j][i] as f64 * s).sum();
        let r = v[i] as f64 * s - u;
        coord_sum += r;
        norm_sq += r * r;
    }
    coord_sum.abs() > (norm_sq.sqrt() + eps) * c
}

impl SubsetContext {
    /// Decides whether some coefficient vector in the box `[-g1, g1]^k`
    /// pushes the coordinate sum of `V - U(beta)` past the
    /// `(||V - U(beta)|| + eps) log n` envelope. Two concave
    /// maximizations (affine minus a norm) over the box, each certified
    /// to additive 1e-8 by branch-and-bound on tangent-plane bounds.
    pub fn compatibility(
        &self,
        v: &[i8],
        eps: f64,
        gamma1: f64,
    ) -> Result<CompatibilityVerdict> {
        let a = &self.a;
        if gamma1 <= 0.0 {
            return Err(Error::InvalidParam("gamma1 must be positive".into()));
        }
        if v.len() != a.n {
            return Err(Error::DimensionMismatch { expected: a.n, got: v.len() });
        }
        let n = a.n;
        let k = a.len();
        let s = a.scale();
        let c = (n as f64).ln();
        let threshold = eps * c;
        let v_scaled = a.scaled_point(v);

        // Cheap certificate: |L(beta)| <= |L0| + g1 sum_j |colsum_j| and
        // ||r(beta)|| >= dist(v, span), so if the bound clears the
        // envelope no beta can violate it.
        let l0: f64 = v_scaled.iter().sum();
        let rho = self.projector.distance(&v_scaled);
        let cheap_ub =
            l0.abs() + gamma1 * self.col_sums.iter().map(|g| g.abs()).sum::<f64>() - c * rho;
        if cheap_ub <= threshold {
            return Ok(CompatibilityVerdict {
                compatible: true,
                witness_betas: None,
                margin: cheap_ub - threshold,
            });
        }

        let mut best_val = f64::NEG_INFINITY;
        let mut best_beta = vec![0.0; k];
        for sgn in [1.0f64, -1.0] {
            let eval = |beta: &[f64]| -> (f64, Vec<f64>) {
                // r = v - sum_j beta_j A_j; f = sgn * (1 . r) - c ||r||.
                let mut r = v_scaled.clone();
                for (j, &b) in beta.iter().enumerate() {
                    for (ri, &pi) in r.iter_mut().zip(&a.points[j]) {
                        *ri -= b * pi as f64 * s;
                    }
                }
                let l: f64 = r.iter().sum();
                let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                let f = sgn * l - c * norm;
                let mut grad = vec![0.0f64; k];
                for (j, g) in grad.iter_mut().enumerate() {
                    let aj: f64 = self.col_sums[j];
                    let mut dot_ar = 0.0;
                    for (ri, &pi) in r.iter().zip(&a.points[j]) {
                        dot_ar += ri * pi as f64 * s;
                    }
                    // d/db_j: -sgn colsum_j from the affine part,
                    // +c (A_j . r)/||r|| from the norm.
                    *g = -sgn * aj + if norm > 1e-300 { c * dot_ar / norm } else { 0.0 };
                }
                (f, grad)
            };
            let (val, beta) = maximize_concave_box(&eval, gamma1, k, 1e-8, Some(threshold))?;
            if val > best_val {
                best_val = val;
                best_beta = beta;
            }
            if best_val > threshold {
                break;
            }
        }

        if best_val > threshold {
            Ok(CompatibilityVerdict {
                compatible: false,
                witness_betas: Some(best_beta),
                margin: best_val - threshold,
            })
        } else {
            Ok(CompatibilityVerdict {
                compatible: true,
                witness_betas: None,
                margin: best_val - threshold,
            })
        }
    }
}

/// Compatibility of `v` with `a` at envelope width `eps` and coefficient
/// box `[-gamma1, gamma1]^k`.
pub fn compatibility(
    v: &[i8],
    a: &CubePointSet,
    eps: f64,
    gamma1: f64,
) -> Result<CompatibilityVerdict> {
    SubsetContext::new(a)?.compatibility(v, eps, gamma1)
}

/// Maximizes a concave function over `[-half, half]^k` to additive
/// `tol`, by projected gradient ascent for lower bounds and tangent
/// branch-and-bound for the certificate. Stops early once the lower
/// bound clears `stop_above`.
fn maximize_concave_box<F: Fn(&[f64]) -> (f64, Vec<f64>)>(
    eval: &F,
    half: f64,
    k: usize,
    tol: f64,
    stop_above: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    let clamp = |x: f64| x.clamp(-half, half);
    // Gradient ascent from the center for a good incumbent.
    let mut beta = vec![0.0f64; k];
    let (mut best_val, _) = eval(&beta);
    let mut best_beta = beta.clone();
    let mut step = half;
    for _ in 0..200 {
        let (val, grad) = eval(&beta);
        if val > best_val {
            best_val = val;
            best_beta = beta.clone();
        }
        let mut trial: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| clamp(b + step * g)).collect();
        let (mut tval, _) = eval(&trial);
        let mut tries = 0;
        while tval < val && tries < 30 {
            step *= 0.5;
            trial = beta.iter().zip(&grad).map(|(b, g)| clamp(b + step * g)).collect();
            tval = eval(&trial).0;
            tries += 1;
        }
        if tval <= val + 1e-14 {
            break;
        }
        beta = trial;
        step *= 1.5;
    }
    if let Some(limit) = stop_above {
        if best_val > limit {
            return Ok((best_val, best_beta));
        }
    }

    // Branch-and-bound: the tangent plane at the box center dominates a
    // concave function, so each box has upper bound f(c) + |g| . half.
    #[derive(PartialEq)]
    struct Node {
        ub: f64,
        center: Vec<f64>,
        halves: Vec<f64>,
    }
    impl Eq for Node {}
    impl Ord for Node {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.ub.total_cmp(&other.ub)
        }
    }
    impl PartialOrd for Node {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    let mut heap = std::collections::BinaryHeap::new();
    let root_center = vec![0.0f64; k];
    let (rv, rg) = eval(&root_center);
    if rv > best_val {
        best_val = rv;
        best_beta = root_center.clone();
    }
    let root_ub = rv + rg.iter().map(|g| g.abs() * half).sum::<f64>();
    heap.push(Node { ub: root_ub, center: root_center, halves: vec![half; k] });
    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        if node.ub <= best_val + tol {
            break; // certified
        }
        if let Some(limit) = stop_above {
            if best_val > limit {
                break;
            }
            if node.ub <= limit {
                // Nothing above the heap top can cross the limit either.
                break;
            }
        }
        nodes += 1;
        if nodes > 500_000 {
            return Err(Error::OptimizerFailed(format!(
                "branch-and-bound exceeded {nodes} nodes (gap {:.3e})",
                node.ub - best_val
            )));
        }
        // Split along the widest axis.
        let (axis, _) = node
            .halves
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        for side in [-0.5f64, 0.5] {
            let mut center = node.center.clone();
            center[axis] += side * node.halves[axis];
            let mut halves = node.halves.clone();
            halves[axis] *= 0.5;
            let (val, grad) = eval(&center);
            if val > best_val {
                best_val = val;
                best_beta = center.clone();
            }
            let ub = val + grad.iter().zip(&halves).map(|(g, h)| g.abs() * h).sum::<f64>();
            if ub > best_val + tol {
                heap.push(Node { ub, center, halves });
            }
        }
    }
    Ok((best_val, best_beta))
}

/// Monte Carlo probability that the stacked `(A, V)` coefficient sums
/// all land in `[-2 eps, 2 eps]`, for a point `v` certified
/// incompatible with `a` (the precondition is re-checked).
pub fn incompatibility_box_probe(
    a: &CubePointSet,
    v: &[i8],
    rv: &DiscreteRV,
    eps: f64,
    samples: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    let rep = low_weight_rep(v, a)?;
    let verdict = compatibility(v, a, eps, rep.realized_gamma1.max(1.0))?;
    if verdict.compatible {
        return Err(Error::Precondition(
            "box probe requires an incompatible (v, a) pair".into(),
        ));
    }
    let s = a.scale();
    let mut rows: Vec<Vec<f64>> =
        a.points.iter().map(|p| p.iter().map(|&b| b as f64 * s).collect()).collect();
    rows.push(v.iter().map(|&b| b as f64 * s).collect());
    let mut hits = 0u64;
    let mut coeffs = vec![0.0f64; a.n];
    for _ in 0..samples {
        for w in coeffs.iter_mut() {
            *w = rv.sample(rng);
        }
        let inside = rows.iter().all(|row| {
            let dot: f64 = row.iter().zip(&coeffs).map(|(x, w)| x * w).sum();
            dot.abs() <= 2.0 * eps
        });
        if inside {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Report of the coefficient-sum concentration probe.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub threshold: f64,
    pub empirical_prob: f64,
    pub stderr: f64,
    pub hoeffding_bound: f64,
}

/// Estimates `Pr[|sum w_i omega_i - E| >= ||w|| (log n)^(3/4)]` and the
/// Hoeffding ceiling for the same event.
pub fn concentration_probe(
    w: &[f64],
    rv: &DiscreteRV,
    samples: u64,
    rng: &mut Stream,
) -> ConcentrationReport {
    let n = w.len();
    let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = norm * (n as f64).ln().max(0.0).powf(0.75);
    let mean_coeff = rv.mean();
    let expected: f64 = w.iter().map(|x| x * mean_coeff).sum();
    let mut hits = 0u64;
    for _ in 0..samples {
        let sum: f64 = w.iter().map(|&x| x * rv.sample(rng)).sum();
        if (sum - expected).abs() >= threshold && threshold > 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let range = rv.atoms.last().unwrap_or(&0.0) - rv.atoms.first().unwrap_or(&0.0);
    let denom: f64 = w.iter().map(|x| (x * range) * (x * range)).sum();
    let hoeffding = if denom > 0.0 {
        (2.0 * (-2.0 * threshold * threshold / denom).exp()).min(1.0)
    } else {
        0.0
    };
    ConcentrationReport {
        threshold,
        empirical_prob: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        hoeffding_bound: hoeffding,
    }
}

/// Gram-determinant identity check: `det(A A^T)` against the product of
/// squared sequential Gram-Schmidt residual norms.
pub fn gram_det_check(rows: &[Vec<f64>]) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Err(Error::InvalidParam("empty row matrix".into()));
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParam("ragged row matrix".into()));
    }
    let t = rows.len();
    let a = DMatrix::from_fn(t, n, |i, j| rows[i][j]);
    let det = (a.clone() * a.transpose()).determinant();

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut product = 1.0f64;
    for row in rows {
        let mut w = row.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-10 * scale.max(1.0) {
            return Err(Error::RankDeficient);
        }
        product *= norm * norm;
        for x in w.iter_mut() {
            *x /= norm;
        }
        basis.push(w);
    }
    Ok((det, product))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random_cube_set(n: usize, k: usize, rng: &mut Stream) -> CubePointSet {
        loop {
            let rows: Vec<Vec<i8>> = (0..k)
                .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect())
                .collect();
            if let Ok(set) = CubePointSet::new(n, rows) {
                return set;
            }
        }
    }

    fn random_cube_point(n: usize, rng: &mut Stream) -> Vec<i8> {
        (0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect()
    }

    #[test]
    fn distance_of_member_is_zero() {
        let mut rng = stream(61, 0);
        let a = random_cube_set(16, 3, &mut rng);
        let d = dist_to_span(&a.points[1].clone(), &a).unwrap();
        assert!(d < 1e-10);
    }

    #[test]
    fn distance_of_orthogonal_point_is_one() {
        let a = CubePointSet::new(4, vec![vec![1, 1, 1, 1]]).unwrap();
        let d = dist_to_span(&[1, 1, -1, -1], &a).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_gram_schmidt_oracle() {
        let mut rng = stream(62, 0);
        for _ in 0..20 {
            let a = random_cube_set(24, 3, &mut rng);
            let v = random_cube_point(24, &mut rng);
            let want = {
                // Independent orthonormalization route.
                let vectors: Vec<Vec<f64>> = (0..3).map(|i| a.scaled(i)).collect();
                let basis = orthonormal_basis(&vectors);
                let vs = a.scaled_point(&v);
                let mut resid = vs.clone();
                for b in &basis {
                    let dot: f64 = resid.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in resid.iter_mut().zip(b) {
                        *x -= dot * y;
                    }
                }
                resid.iter().map(|x| x * x).sum::<f64>().sqrt()
            };
            let got = dist_to_span(&v, &a).unwrap();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn projector_agrees_with_least_squares() {
        let mut rng = stream(63, 0);
        let a = random_cube_set(32, 4, &mut rng);
        let projector = SpanProjector::new(&a);
        for _ in 0..10 {
            let v = random_cube_point(32, &mut rng);
            let d1 = projector.distance(&a.scaled_point(&v));
            let d2 = dist_to_span(&v, &a).unwrap();
            assert!((d1 - d2).abs() < 1e-10);
        }
    }

    #[test]
    fn cover_of_single_point() {
        let v = vec![1, 1, -1, 1];
        let a = CubePointSet::new(4, vec![v.clone()]).unwrap();
        let cover = cover_points(&a).unwrap();
        let neg: Vec<i8> = v.iter().map(|&b| -b).collect();
        let all_plus = vec![1i8; 4];
        assert_eq!(cover.len(), 3);
        assert!(cover.points.contains(&v));
        assert!(cover.points.contains(&neg));
        assert!(cover.points.contains(&all_plus));
    }

    #[test]
    fn cover_size_within_ltf_count_bound() {
        let mut rng = stream(64, 0);
        // The 2^(k^2) threshold-function bound holds from k = 2; the
        // one-point cover is exactly {V, -V, all-plus}, of size <= 4.
        let a1 = random_cube_set(12, 1, &mut rng);
        assert!(cover_set(&a1).unwrap().len() <= 4);
        for k in 2..=4usize {
            let a = random_cube_set(12, k, &mut rng);
            let cover = cover_set(&a).unwrap();
            assert!(cover.len() <= 1 << (k * k), "k={k}: {}", cover.len());
        }
    }

    #[test]
    fn strict_cells_match_arrangement_formula_and_sampler() {
        // General-position points in R^k: the central arrangement of n
        // hyperplanes has 2 sum_(i<k) C(n-1, i) full-dimensional cells.
        use rand_distr::StandardNormal;
        let mut rng = stream(65, 0);
        for (k, n) in [(2usize, 5usize), (3, 6), (2, 9)] {
            let columns: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let cells = enumerate_sign_patterns(&columns, true, 1 << 20).unwrap();
            let want: usize = 2 * (0..k).map(|i| binom(n - 1, i)).sum::<usize>();
            assert_eq!(cells.len(), want, "k={k} n={n}");
            // Random-direction sampler soundness: it can miss thin
            // cells, but everything it finds must be enumerated.
            let cells_set: std::collections::BTreeSet<Vec<i8>> = cells.into_iter().collect();
            for _ in 0..100_000 {
                let alpha: Vec<f64> =
                    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let pattern: Vec<i8> = columns
                    .iter()
                    .map(|c| {
                        let dot: f64 = c.iter().zip(&alpha).map(|(x, y)| x * y).sum();
                        if dot >= 0.0 {
                            1i8
                        } else {
                            -1
                        }
                    })
                    .collect();
                assert!(cells_set.contains(&pattern), "sampler found an unenumerated cell");
            }
        }
    }

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut acc = 1usize;
        for i in 0..k.min(n - k) {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn near_span_with_unit_radius_is_everything() {
        let mut rng = stream(66, 0);
        let a = random_cube_set(10, 2, &mut rng);
        let x = CubePointSet::new(
            10,
            (0..20).map(|_| random_cube_point(10, &mut rng)).collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
        )
        .unwrap();
        let near = cube_points_near_span(&x, &a, 1.0).unwrap();
        assert_eq!(near.len(), x.len());
    }

    #[test]
    fn span_cube_intersection_obeys_dimension_bound() {
        // r = 0: the intersection of a k-point span with the cube has at
        // most 2^k points.
        let mut rng = stream(67, 0);
        for k in 1..=3usize {
            let n = 10;
            let a = random_cube_set(n, k, &mut rng);
            let full: Vec<Vec<i8>> = (0..1u32 << n)
                .map(|code| {
                    (0..n).map(|b| if code >> b & 1 == 1 { 1i8 } else { -1 }).collect()
                })
                .collect();
            let x = CubePointSet::new(n, full).unwrap();
            let inter = cube_points_near_span(&x, &a, 0.0).unwrap();
            assert!(inter.len() <= 1 << k, "k={k}: {}", inter.len());
            // The defining points themselves are always there.
            for p in &a.points {
                assert!(inter.points.contains(p));
            }
        }
    }

    #[test]
    fn near_points_are_hamming_covered() {
        let mut rng = stream(68, 0);
        let n = 16;
        let a = random_cube_set(n, 2, &mut rng);
        let cover = cover_set(&a).unwrap();
        let x = CubePointSet::from_rows_dedup(
            n,
            &(0..60).map(|_| random_cube_point(n, &mut rng)).collect::<Vec<_>>(),
        )
        .unwrap();
        for r in [0.3, 0.6] {
            let near = cube_points_near_span(&x, &a, r).unwrap();
            for p in &near.points {
                let (_, ham) = cover.nearest_to(p);
                assert!(
                    ham as f64 <= r * r * n as f64 + 1e-9,
                    "hamming {ham} vs r^2 n = {}",
                    r * r * n as f64
                );
            }
        }
    }

    #[test]
    fn rounding_contraction_inequality() {
        // d_Ham(round(U), V) <= ||U - V||^2 n for any U in the span and
        // cube point V: disagreeing coordinates cost at least 1/sqrt(n).
        let mut rng = stream(69, 0);
        let n = 16;
        let a = random_cube_set(n, 3, &mut rng);
        for _ in 0..50 {
            let betas: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let u: Vec<f64> = (0..n)
                .map(|i| {
                    (0..3)
                        .map(|j| betas[j] * a.points[j][i] as f64 * a.scale())
                        .sum()
                })
                .collect();
            let round: Vec<i8> = u.iter().map(|&x| if x >= 0.0 { 1i8 } else { -1 }).collect();
            let v = random_cube_point(n, &mut rng);
            let dist: f64 = u
                .iter()
                .zip(a.scaled_point(&v))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
            let ham = round.iter().zip(&v).filter(|(a, b)| a != b).count();
            assert!(ham as f64 <= dist * n as f64 + 1e-9);
        }
    }

    #[test]
    fn low_weight_rep_single_point() {
        let mut rng = stream(70, 0);
        let n = 16;
        let a = random_cube_set(n, 1, &mut rng);
        let v = random_cube_point(n, &mut rng);
        let rep = low_weight_rep(&v, &a).unwrap();
        // beta_1 = <V, V1> in [-1, 1].
        let dot: f64 = v
            .iter()
            .zip(&a.points[0])
            .map(|(&x, &y)| x as f64 * y as f64 / n as f64)
            .sum();
        assert!((rep.betas[0] - dot).abs() < 1e-10);
        assert!(rep.realized_gamma1 <= 1.0 + 1e-12);
    }

    #[test]
    fn low_weight_rep_member_is_exact() {
        let mut rng = stream(71, 0);
        let a = random_cube_set(12, 3, &mut rng);
        let v = a.points[2].clone();
        let rep = low_weight_rep(&v, &a).unwrap();
        let vs = a.scaled_point(&v);
        let err: f64 =
            vs.iter().zip(&rep.u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert!(err < 1e-9);
        assert!((rep.realized_gamma2_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn low_weight_rep_reconstructs_and_stays_bounded_across_n() {
        let mut rng = stream(72, 0);
        for n in [16usize, 32, 64] {
            for _ in 0..5 {
                let a = random_cube_set(n, 3, &mut rng);
                let v = random_cube_point(n, &mut rng);
                let rep = low_weight_rep(&v, &a).unwrap();
                // Reconstruction: u = sum beta_j V_j exactly.
                let recon: Vec<f64> = (0..n)
                    .map(|i| {
                        (0..3)
                            .map(|j| rep.betas[j] * a.points[j][i] as f64 * a.scale())
                            .sum()
                    })
                    .collect();
                let resid: f64 = recon
                    .iter()
                    .zip(&rep.u)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(resid <= 1e-10);
                assert!(rep.realized_gamma2_ratio >= 1.0 - 1e-9);
                // Realized constants stay modest independent of n.
                assert!(rep.realized_gamma1 < 50.0, "gamma1 {}", rep.realized_gamma1);
                assert!(rep.realized_gamma2_ratio < 50.0);
            }
        }
    }

    #[test]
    fn compatibility_of_typical_self_pair() {
        // A random point against itself: coordinate sums are O(1) and
        // stay under the log n envelope for every beta in the box.
        let mut rng = stream(73, 7);
        let n = 64;
        let v = loop {
            let v = random_cube_point(n, &mut rng);
            let sum: i32 = v.iter().map(|&b| b as i32).sum();
            if (sum.abs() as f64) / (n as f64).sqrt() < 1.0 {
                break v;
            }
        };
        let a = CubePointSet::new(n, vec![v.clone()]).unwrap();
        let verdict = compatibility(&v, &a, 0.1, 2.0).unwrap();
        assert!(verdict.compatible, "margin {}", verdict.margin);
    }

    #[test]
    fn lopsided_point_is_incompatible_at_small_eps() {
        // The all-plus point has coordinate sum sqrt(n) > log n; against
        // a balanced far-away set no box coefficient can absorb it.
        let n = 64;
        let v = vec![1i8; n];
        let balanced: Vec<i8> =
            (0..n).map(|i| if i % 2 == 0 { 1i8 } else { -1 }).collect();
        let a = CubePointSet::new(n, vec![balanced]).unwrap();
        let verdict = compatibility(&v, &a, 0.001, 1.0).unwrap();
        assert!(!verdict.compatible);
        let witness = verdict.witness_betas.unwrap();
        assert!(witness.iter().all(|b| b.abs() <= 1.0 + 1e-12));
        assert!(incompatibility_witness_holds(&v, &a, 0.001, &witness));
        assert!(verdict.margin > 0.0);
    }

    #[test]
    fn optimizer_matches_grid_search_oracle() {
        let mut rng = stream(74, 0);
        let n = 32;
        let c = (n as f64).ln();
        for trial in 0..10 {
            let a = random_cube_set(n, 1, &mut rng);
            let v = random_cube_point(n, &mut rng);
            let eps = 0.05;
            let gamma1 = 1.5;
            // Dense beta grid oracle at resolution 1e-3.
            let vs = a.scaled_point(&v);
            let mut grid_best = f64::NEG_INFINITY;
            let mut b = -gamma1;
            while b <= gamma1 {
                let mut l = 0.0;
                let mut norm_sq = 0.0;
                for i in 0..n {
                    let r = vs[i] - b * a.points[0][i] as f64 * a.scale();
                    l += r;
                    norm_sq += r * r;
                }
                grid_best = grid_best.max(l.abs() - c * norm_sq.sqrt());
                b += 1e-3;
            }
            let verdict = compatibility(&v, &a, eps, gamma1).unwrap();
            let threshold = eps * c;
            let oracle_incompatible = grid_best > threshold + 1e-6;
            if (grid_best - threshold).abs() > 1e-5 {
                assert_eq!(
                    !verdict.compatible, oracle_incompatible,
                    "trial {trial}: grid {grid_best} vs threshold {threshold}"
                );
            }
            if !verdict.compatible {
                assert!(incompatibility_witness_holds(
                    &v,
                    &a,
                    eps,
                    &verdict.witness_betas.unwrap()
                ));
            }
        }
    }

    #[test]
    fn compatibility_monotone_in_gamma1() {
        let mut rng = stream(75, 0);
        let n = 32;
        for _ in 0..10 {
            let a = random_cube_set(n, 2, &mut rng);
            let v = random_cube_point(n, &mut rng);
            let small = compatibility(&v, &a, 0.01, 0.2).unwrap();
            let large = compatibility(&v, &a, 0.01, 2.0).unwrap();
            // Enlarging the box can only flip compatible -> incompatible.
            if !small.compatible {
                assert!(!large.compatible);
            }
        }
    }

    #[test]
    fn box_probe_rejects_compatible_inputs() {
        let mut rng = stream(76, 1);
        let n = 64;
        let v = loop {
            let v = random_cube_point(n, &mut rng);
            let sum: i32 = v.iter().map(|&b| b as i32).sum();
            if sum.abs() < 6 {
                break v;
            }
        };
        let a = CubePointSet::new(n, vec![v.clone()]).unwrap();
        let rv = DiscreteRV::new(vec![1.0], vec![1.0]).unwrap();
        let err = incompatibility_box_probe(&a, &v, &rv, 1.0, 100, &mut rng);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn box_probe_is_statistically_zero_when_incompatible() {
        let mut rng = stream(77, 0);
        let n = 256;
        let v = vec![1i8; n];
        let balanced: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1i8 } else { -1 }).collect();
        let a = CubePointSet::new(n, vec![balanced]).unwrap();
        let pair = crate::moments::YesNoPair::build(3, 1).unwrap();
        let samples = 100_000u64;
        let (p, _) =
            incompatibility_box_probe(&a, &v, &pair.yes_rv, 0.001, samples, &mut rng).unwrap();
        assert!(p <= 10.0 / samples as f64);
    }

    #[test]
    fn box_probe_with_huge_width_hits_everything() {
        let mut rng = stream(78, 0);
        let n = 256;
        let v = vec![1i8; n];
        let balanced: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1i8 } else { -1 }).collect();
        let a = CubePointSet::new(n, vec![balanced.clone()]).unwrap();
        let pair = crate::moments::YesNoPair::build(3, 1).unwrap();
        // The coefficient sums are bounded by max_atom * sqrt(n), so a
        // box that wide contains every draw.
        let s = a.scale();
        let rows = [balanced, v.clone()];
        let reach: f64 = rows
            .iter()
            .map(|row| {
                row.iter().map(|&b| (b as f64 * s).abs()).sum::<f64>()
                    * pair.yes_rv.max_abs_atom()
            })
            .fold(0.0, f64::max);
        let eps = reach; // box [-2 eps, 2 eps] swallows the whole range
        let (p, _) = incompatibility_box_probe(&a, &v, &pair.yes_rv, eps, 5_000, &mut rng)
            .map_or((1.0, 0.0), |x| x);
        assert!(p > 0.99);
    }

    #[test]
    fn concentration_probe_zero_vector() {
        let rv = DiscreteRV::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let report = concentration_probe(&[0.0; 8], &rv, 1_000, &mut stream(79, 0));
        assert_eq!(report.empirical_prob, 0.0);
    }

    #[test]
    fn concentration_probe_single_coordinate_exact() {
        // One nonzero weight: the deviation event is a two-point
        // computation.
        let rv = DiscreteRV::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let mut w = vec![0.0; 16];
        w[3] = 1.0;
        let report = concentration_probe(&w, &rv, 200_000, &mut stream(80, 0));
        // |omega - 1| = 1 always; threshold = (ln 16)^(3/4) > 1, so the
        // event never fires.
        assert!(report.threshold > 1.0);
        assert_eq!(report.empirical_prob, 0.0);
    }

    #[test]
    fn concentration_probe_trend_in_n() {
        let pair = crate::moments::YesNoPair::build(3, 1).unwrap();
        let mut probs = Vec::new();
        for n in [64usize, 256, 1024] {
            let mut rng = stream(81, n as u64);
            let w: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 } / (n as f64).sqrt())
                .collect();
            let report = concentration_probe(&w, &pair.yes_rv, 40_000, &mut rng);
            probs.push(report.empirical_prob);
            assert!(report.empirical_prob <= report.hoeffding_bound + 3.0 * report.stderr);
        }
        assert!(probs[2] <= probs[0] + 0.01);
    }

    #[test]
    fn gram_identity_orthonormal_rows() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let (det, prod) = gram_det_check(&rows).unwrap();
        assert!((det - 1.0).abs() < 1e-12);
        assert!((prod - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_identity_two_rows_at_angle() {
        let theta: f64 = 0.7;
        let rows = vec![vec![1.0, 0.0], vec![theta.cos(), theta.sin()]];
        let (det, prod) = gram_det_check(&rows).unwrap();
        let want = theta.sin() * theta.sin();
        assert!((det - want).abs() < 1e-12);
        assert!((prod - want).abs() < 1e-12);
    }

    #[test]
    fn gram_identity_random_cube_rows() {
        let mut rng = stream(82, 0);
        for t in 2..=4usize {
            let a = random_cube_set(20, t, &mut rng);
            let rows: Vec<Vec<f64>> = (0..t).map(|i| a.scaled(i)).collect();
            let (det, prod) = gram_det_check(&rows).unwrap();
            assert!((det - prod).abs() <= 1e-8 * det.abs().max(1.0), "{det} vs {prod}");
        }
    }

    #[test]
    fn gram_rank_deficient_detected() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(gram_det_check(&rows), Err(Error::RankDeficient)));
    }
}
