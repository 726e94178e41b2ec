//! Partitioning, the scatteredness test, and the pruning loop for query
//! sets.
//!
//! For a subset `A` of the query set and a radius `r`, the queries within
//! `r` of `span(A)` split three ways: points incompatible with `A`,
//! one representative per rounding-cover group, and the rest — which a
//! scattered set must keep below `r |X| log^5 n`. Pruning repeatedly
//! removes the overflow at the worst critical radius until every subset
//! passes. All geometry is shared with [`crate::geometry`]; the group
//! assignment used by the sweep is exactly the one `partition_r`
//! materializes, so the two views never disagree.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, CubePointSet};
use crate::instances::QueryMatrix;
use crate::moments::YesNoPair;
use crate::orthants::{duo_monte_carlo, DuoEstimate};
use crate::rng::{stream, Stream};

/// Tuning knobs shared by the partition, scatter, and prune operations.
#[derive(Debug, Clone)]
pub struct PruneParams {
    /// Compatibility envelope width; defaults to `n^(4/h - 1/2)`.
    pub eps: Option<f64>,
    /// Scales the `r |X| log^5 n` threshold. 1.0 is the definition;
    /// tests and experiments shrink it to exercise nontrivial pruning.
    pub threshold_factor: f64,
    /// Exhaustive subset enumeration while `sum_k C(|X|, k)` stays under
    /// this budget; sampled subsets otherwise.
    pub exhaustive_budget: u64,
    /// Sampled subsets per size when over budget.
    pub sampled_per_size: usize,
    /// Seed for sampled-mode subset selection.
    pub seed: u64,
}

impl Default for PruneParams {
    fn default() -> Self {
        PruneParams {
            eps: None,
            threshold_factor: 1.0,
            exhaustive_budget: 2_000_000,
            sampled_per_size: 10_000,
            seed: 0,
        }
    }
}

impl PruneParams {
    fn eps_for(&self, n: usize, h: usize) -> f64 {
        self.eps.unwrap_or_else(|| (n as f64).powf(4.0 / h as f64 - 0.5))
    }
}

fn check_ambient(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidParam(format!(
            "ambient dimension {n} < 8 makes the log-power thresholds degenerate"
        )));
    }
    Ok(())
}

/// How each non-member point relates to the current subset.
struct PointProfile {
    /// Index into the full point set.
    idx: usize,
    dist: f64,
    incompatible: bool,
    /// Rounding-cover group (nearest cover point), for compatible points.
    group: usize,
}

/// Cache of cover-pattern enumerations keyed by the distinct column
/// types of the subset: subsets sharing a type signature share the
/// arrangement, which makes the exhaustive sweep affordable.
type PatternCache = std::sync::Mutex<std::collections::HashMap<Vec<Vec<i8>>, std::sync::Arc<Vec<Vec<i8>>>>>;

fn cached_patterns(
    type_columns: &[Vec<i8>],
    cache: Option<&PatternCache>,
) -> Result<std::sync::Arc<Vec<Vec<i8>>>> {
    if let Some(cache) = cache {
        if let Some(hit) = cache.lock().expect("cache lock").get(type_columns) {
            return Ok(hit.clone());
        }
    }
    let patterns = std::sync::Arc::new(geometry::patterns_for_types(type_columns)?);
    if let Some(cache) = cache {
        cache
            .lock()
            .expect("cache lock")
            .insert(type_columns.to_vec(), patterns.clone());
    }
    Ok(patterns)
}

/// Distances, compatibility, and rounding groups of every point of `x`
/// outside `a`. This is the single source of truth for both
/// `partition_r` and the critical-radius sweep.
fn profile_points(
    x: &CubePointSet,
    a_indices: &[usize],
    eps: f64,
    cache: Option<&PatternCache>,
) -> Result<(CubePointSet, Vec<PointProfile>)> {
    let a = CubePointSet::new(x.n, a_indices.iter().map(|&i| x.points[i].clone()).collect())?;
    let ctx = geometry::SubsetContext::new(&a)?;
    let (type_columns, type_positions) = geometry::type_decomposition(&a);
    let patterns = cached_patterns(&type_columns, cache)?;
    let cover = geometry::CoverSet::from_parts(
        a.n,
        type_columns,
        type_positions,
        patterns.as_ref().clone(),
    );
    let member: std::collections::BTreeSet<usize> = a_indices.iter().copied().collect();
    let mut profiles = Vec::with_capacity(x.len() - a_indices.len());
    for idx in 0..x.len() {
        if member.contains(&idx) {
            continue;
        }
        let w = &x.points[idx];
        let dist = ctx.distance(&x.scaled_point(w));
        let rep = ctx.low_weight_rep(w)?;
        let verdict = ctx.compatibility(w, eps, rep.realized_gamma1.max(1.0))?;
        let group = if verdict.compatible { cover.nearest_to(w).0 } else { usize::MAX };
        profiles.push(PointProfile { idx, dist, incompatible: !verdict.compatible, group });
    }
    Ok((a, profiles))
}

/// The three-way split of the points within `r` of `span(a)`.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionResult {
    pub cover: Vec<Vec<i8>>,
    pub remove: Vec<Vec<i8>>,
    pub incomp: Vec<Vec<i8>>,
    pub r: f64,
    pub a_points: Vec<Vec<i8>>,
}

/// Partitions `R = (X ∩ B(span(A), r)) \ A` into incompatible points,
/// one representative per rounding group, and the removable rest.
/// Verifies the `4r` coverage radius and the `(r + eps) log^2 n`
/// coordinate-sum envelope between every covered pair, aborting with a
/// diagnostic if either fails.
pub fn partition_r(
    x: &CubePointSet,
    a_indices: &[usize],
    r: f64,
    h: usize,
    params: &PruneParams,
) -> Result<PartitionResult> {
    check_ambient(x.n)?;
    if a_indices.is_empty() || a_indices.len() > h {
        return Err(Error::Precondition(format!(
            "subset size {} outside 1..={h}",
            a_indices.len()
        )));
    }
    if r < 0.0 {
        return Err(Error::InvalidParam("radius must be nonnegative".into()));
    }
    let eps = params.eps_for(x.n, h);
    let (a, profiles) = profile_points(x, a_indices, eps, None)?;
    let tol = 1e-12 * (1.0 + r);

    let mut incomp = Vec::new();
    let mut cover_reps: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut remove = Vec::new();
    for p in &profiles {
        if p.dist > r + tol {
            continue;
        }
        if p.incompatible {
            incomp.push(x.points[p.idx].clone());
        } else if let std::collections::btree_map::Entry::Vacant(e) = cover_reps.entry(p.group) {
            e.insert(p.idx);
        } else {
            remove.push(x.points[p.idx].clone());
        }
    }
    let cover: Vec<Vec<i8>> = cover_reps.values().map(|&i| x.points[i].clone()).collect();

    let cap = 1usize << (h * h).min(30);
    if cover.len() > cap {
        return Err(Error::CoverOverflow { got: cover.len(), cap });
    }
    // Every removable point must sit within 4r of some representative,
    // and covered pairs must respect the coordinate-sum envelope. The
    // envelope is a consequence of compatibility, not a tunable: the
    // threshold factor never touches it.
    let n = x.n as f64;
    let envelope = (r + eps) * n.ln() * n.ln();
    for w in &remove {
        let mut covered = false;
        for v in &cover {
            let ham = v.iter().zip(w).filter(|(a, b)| a != b).count() as f64;
            let dist = 2.0 * (ham / n).sqrt();
            if dist <= 4.0 * r + tol {
                covered = true;
                let coord_sum: f64 = v
                    .iter()
                    .zip(w)
                    .map(|(&vi, &wi)| (vi as f64 - wi as f64) / n.sqrt())
                    .sum();
                if coord_sum.abs() > envelope + 1e-9 {
                    return Err(Error::PartitionViolation(format!(
                        "coordinate sum {:.4} exceeds envelope {:.4} at r={r}",
                        coord_sum.abs(),
                        envelope
                    )));
                }
            }
        }
        if !covered {
            return Err(Error::PartitionViolation(format!(
                "removable point not within 4r = {} of any representative",
                4.0 * r
            )));
        }
    }
    Ok(PartitionResult { cover, remove, incomp, r, a_points: a.points })
}

/// One scatteredness violation: subset, critical radius, and the counts.
#[derive(Debug, Clone, Serialize)]
pub struct ScatterViolation {
    pub a_indices: Vec<usize>,
    pub r: f64,
    pub removed: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScatterMode {
    Exhaustive,
    Sampled,
}

/// Outcome of the scatteredness test.
#[derive(Debug, Clone, Serialize)]
pub struct ScatterReport {
    pub scattered: bool,
    pub violations: Vec<ScatterViolation>,
    pub mode: ScatterMode,
    pub subsets_checked: u64,
}

fn binom_saturating(n: u64, k: u64) -> u64 {
    let mut acc = 1u64;
    for i in 0..k.min(n.saturating_sub(k)) {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > u64::MAX / (n + 1) {
            return u64::MAX;
        }
    }
    if k > n {
        0
    } else {
        acc
    }
}

fn enumerate_subsets(count: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, count: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..count {
            current.push(i);
            rec(i + 1, count, size, current, out);
            current.pop();
        }
    }
    rec(0, count, size, &mut current, &mut out);
    out
}

fn sample_subsets(count: usize, size: usize, how_many: usize, rng: &mut Stream) -> Vec<Vec<usize>> {
    use rand::seq::index::sample;
    let mut out = std::collections::BTreeSet::new();
    for _ in 0..how_many {
        let mut pick: Vec<usize> = sample(rng, count, size).into_iter().collect();
        pick.sort_unstable();
        out.insert(pick);
    }
    out.into_iter().collect()
}

/// Critical-radius sweep for one subset: returns every violating
/// `(r, removed, threshold)` triple, using the fact that the partition
/// only changes when `r` crosses a realized span distance.
fn sweep_subset(
    x: &CubePointSet,
    a_indices: &[usize],
    h: usize,
    params: &PruneParams,
    cache: Option<&PatternCache>,
) -> Result<Vec<(f64, usize, f64)>> {
    let eps = params.eps_for(x.n, h);
    let (_, mut profiles) = profile_points(x, a_indices, eps, cache)?;
    profiles.sort_by(|p, q| p.dist.total_cmp(&q.dist));
    let log5 = (x.n as f64).ln().powi(5);
    let scale = params.threshold_factor * x.len() as f64 * log5;

    let mut violations = Vec::new();
    let mut groups_seen = std::collections::BTreeSet::new();
    let mut compatible_in = 0usize;
    let mut i = 0;
    while i < profiles.len() {
        // Absorb the whole block of equal distances before testing.
        let d = profiles[i].dist;
        while i < profiles.len() && profiles[i].dist <= d + 1e-12 {
            if !profiles[i].incompatible {
                compatible_in += 1;
                groups_seen.insert(profiles[i].group);
            }
            i += 1;
        }
        if d <= 1e-12 {
            continue; // the scattered condition quantifies over r > 0
        }
        let removed = compatible_in - groups_seen.len();
        let threshold = scale * d;
        if removed as f64 > threshold {
            violations.push((d, removed, threshold));
        }
    }
    Ok(violations)
}

/// Tests whether every subset of size `1..=h` keeps its removable mass
/// under `r |X| log^5 n` at every critical radius. Exhaustive when the
/// subset count fits the budget, sampled (and labeled so) otherwise.
pub fn is_scattered(x: &CubePointSet, h: usize, params: &PruneParams) -> Result<ScatterReport> {
    check_ambient(x.n)?;
    if x.is_empty() {
        return Err(Error::InvalidParam("empty query set".into()));
    }
    let sizes: Vec<usize> = (1..=h.min(x.len())).collect();
    let total: u64 = sizes
        .iter()
        .map(|&s| binom_saturating(x.len() as u64, s as u64))
        .fold(0u64, u64::saturating_add);
    let exhaustive = total <= params.exhaustive_budget;
    let mut subsets = Vec::new();
    if exhaustive {
        for &s in &sizes {
            subsets.extend(enumerate_subsets(x.len(), s));
        }
    } else {
        let mut rng = stream(params.seed, 0x5c);
        for &s in &sizes {
            subsets.extend(sample_subsets(x.len(), s, params.sampled_per_size, &mut rng));
        }
    }
    let subsets_checked = subsets.len() as u64;
    let cache = PatternCache::default();
    let mut results: Vec<(usize, Vec<(f64, usize, f64)>)> = subsets
        .par_iter()
        .enumerate()
        .map(|(i, a)| sweep_subset(x, a, h, params, Some(&cache)).map(|v| (i, v)))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(i, _)| *i);
    let mut violations = Vec::new();
    for (i, list) in results {
        for (r, removed, threshold) in list {
            violations.push(ScatterViolation {
                a_indices: subsets[i].clone(),
                r,
                removed,
                threshold,
            });
        }
    }
    Ok(ScatterReport {
        scattered: violations.is_empty(),
        violations,
        mode: if exhaustive { ScatterMode::Exhaustive } else { ScatterMode::Sampled },
        subsets_checked,
    })
}

/// One pruning step: the subset, the radius used, and what was removed.
#[derive(Debug, Clone, Serialize)]
pub struct PruneStep {
    pub a_points: Vec<Vec<i8>>,
    pub r: f64,
    pub removed: Vec<Vec<i8>>,
    /// Working-set size before this step.
    pub size_before: usize,
}

/// Full record of a pruning run.
#[derive(Debug, Clone, Serialize)]
pub struct PruneTrace {
    pub initial_size: usize,
    /// Size after the duplicate pre-pass (sign-pattern distributions are
    /// invariant under duplication).
    pub after_dedup: usize,
    pub steps: Vec<PruneStep>,
    pub final_size: usize,
    pub sum_r: f64,
}

impl PruneTrace {
    /// `sum_i removed_i / size_i`, the telescoping quantity bounded by
    /// the harmonic sum.
    pub fn telescoping_sum(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.removed.len() as f64 / s.size_before as f64)
            .sum()
    }
}

/// Iteratively removes the worst overflow until the set is scattered.
/// Scans subsets by size then lexicographic order; for the first
/// violating subset, removes the partition at its largest violating
/// critical radius. Every step drops at least one point, and the
/// violating subset itself always survives its own step.
pub fn prune(
    x: &CubePointSet,
    h: usize,
    params: &PruneParams,
) -> Result<(CubePointSet, PruneTrace)> {
    check_ambient(x.n)?;
    let initial = x.len();
    let mut work = x.clone();
    let mut steps: Vec<PruneStep> = Vec::new();
    loop {
        let report = is_scattered(&work, h, params)?;
        if report.scattered {
            break;
        }
        // First violating subset in scan order; its largest violating
        // critical radius.
        let worst = report
            .violations
            .iter()
            .min_by(|a, b| {
                (a.a_indices.len(), &a.a_indices)
                    .cmp(&(b.a_indices.len(), &b.a_indices))
            })
            .expect("nonscattered report has violations");
        let r = report
            .violations
            .iter()
            .filter(|v| v.a_indices == worst.a_indices)
            .map(|v| v.r)
            .fold(0.0f64, f64::max);
        let part = partition_r(&work, &worst.a_indices, r, h, params)?;
        if part.remove.is_empty() {
            return Err(Error::PartitionViolation(
                "violating subset produced an empty removal list".into(),
            ));
        }
        let removed_set: std::collections::BTreeSet<Vec<i8>> =
            part.remove.iter().cloned().collect();
        let size_before = work.len();
        let kept: Vec<Vec<i8>> = work
            .points
            .iter()
            .filter(|p| !removed_set.contains(*p))
            .cloned()
            .collect();
        steps.push(PruneStep { a_points: part.a_points.clone(), r, removed: part.remove.clone(), size_before });
        work = CubePointSet::new(work.n, kept)?;
        if work.is_empty() {
            return Err(Error::PartitionViolation("pruning emptied the query set".into()));
        }
    }
    let sum_r = steps.iter().map(|s| s.r).sum();
    let trace = PruneTrace {
        initial_size: initial,
        after_dedup: initial,
        steps,
        final_size: work.len(),
        sum_r,
    };
    Ok((work, trace))
}

/// Duplicate-aware entry point: dedups the rows of a query matrix, runs
/// the pruning loop, and returns the surviving rows as a matrix.
pub fn prune_query_matrix(
    qm: &QueryMatrix,
    h: usize,
    params: &PruneParams,
) -> Result<(QueryMatrix, PruneTrace)> {
    let set = CubePointSet::from_rows_dedup(qm.n, &qm.rows)?;
    let after_dedup = set.len();
    let (kept, mut trace) = prune(&set, h, params)?;
    trace.initial_size = qm.d();
    trace.after_dedup = after_dedup;
    let out = QueryMatrix::new(qm.n, kept.points.clone())?;
    Ok((out, trace))
}

/// Before/after distance estimates across a pruning step.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub before: DuoEstimate,
    pub after: DuoEstimate,
    pub drift: f64,
}

/// Monte Carlo estimates of the union-of-orthants distance on the
/// original and pruned sets and their gap. Identical sets reuse one
/// estimate, making the drift exactly zero.
pub fn duo_drift_check(
    x: &CubePointSet,
    pruned: &CubePointSet,
    pair: &YesNoPair,
    samples: u64,
    rng: &mut Stream,
) -> Result<DriftReport> {
    let x_set: std::collections::BTreeSet<&Vec<i8>> = x.points.iter().collect();
    if !pruned.points.iter().all(|p| x_set.contains(p)) {
        return Err(Error::Precondition("pruned set must be a subset".into()));
    }
    let qm_before = QueryMatrix::new(x.n, x.points.clone())?;
    let before = duo_monte_carlo(&qm_before, pair, samples, rng)?;
    let after = if pruned.points == x.points {
        before.clone()
    } else {
        let qm_after = QueryMatrix::new(pruned.n, pruned.points.clone())?;
        duo_monte_carlo(&qm_after, pair, samples, rng)?
    };
    let drift = (before.value - after.value).abs();
    Ok(DriftReport { before, after, drift })
}
