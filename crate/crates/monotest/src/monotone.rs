//! Monotonicity measures: the exhaustive edge check, exact distance to
//! monotonicity as a minimum s-t cut (isotone 0/1 regression on the
//! hypercube order), degree-1 Fourier/Hermite coefficients, and the
//! classic edge tester.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::Ltf;
use crate::rng::Stream;

/// Exact-mode resource guard: 2^20 nodes is where the cut graph stops
/// being desk-sized.
pub const EXACT_N_CAP: usize = 20;

/// A full truth table over `{-1,+1}^n`, indexed by the binary encoding
/// of the point with `-1 -> 0` (bit `j` of the index is coordinate `j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub n: usize,
    pub values: Vec<i8>,
}

impl TruthTable {
    pub fn from_values(n: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: values.len() });
        }
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParam("table values must be +-1".into()));
        }
        Ok(TruthTable { n, values })
    }

    pub fn from_fn<F: FnMut(&[i8]) -> i8>(n: usize, mut f: F) -> Self {
        let mut point = vec![-1i8; n];
        let values = (0..1usize << n)
            .map(|idx| {
                for (j, p) in point.iter_mut().enumerate() {
                    *p = if idx >> j & 1 == 1 { 1 } else { -1 };
                }
                f(&point)
            })
            .collect();
        TruthTable { n, values }
    }

    pub fn from_ltf(f: &Ltf) -> Result<Self> {
        let n = f.dimension();
        if n > EXACT_N_CAP {
            return Err(Error::ResourceGuard(format!("truth table at n={n} exceeds {EXACT_N_CAP}")));
        }
        let mut err = None;
        let t = TruthTable::from_fn(n, |x| match f.eval(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                1
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(t),
        }
    }

    /// Packs the table into bytes, one bit per point (`+1 -> 1`),
    /// little-endian in the point index.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.values.len().div_ceil(8)];
        for (idx, &v) in self.values.iter().enumerate() {
            if v == 1 {
                out[idx / 8] |= 1 << (idx % 8);
            }
        }
        out
    }

    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        let len = 1usize << n;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::DimensionMismatch { expected: len.div_ceil(8), got: bytes.len() });
        }
        let values = (0..len)
            .map(|idx| if bytes[idx / 8] >> (idx % 8) & 1 == 1 { 1i8 } else { -1 })
            .collect();
        TruthTable::from_values(n, values)
    }
}

/// True iff no hypercube edge decreases: raising any single coordinate
/// never flips the value from +1 to -1.
pub fn is_monotone(t: &TruthTable) -> bool {
    for j in 0..t.n {
        let bit = 1usize << j;
        for idx in 0..t.values.len() {
            if idx & bit == 0 && t.values[idx] > t.values[idx | bit] {
                return false;
            }
        }
    }
    true
}

/// Exact distance to monotonicity as a dyadic rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactDistance {
    pub disagreements: u64,
    pub total: u64,
}

impl ExactDistance {
    pub fn value(&self) -> f64 {
        self.disagreements as f64 / self.total as f64
    }
}

/// Minimum disagreement with any monotone function, computed exactly as
/// a minimum s-t cut: up-sets of the hypercube order are exactly the
/// monotone functions, order edges get infinite capacity, and each
/// point pays 1 on the side that disagrees with it.
pub fn exact_distance_to_monotone(t: &TruthTable) -> Result<ExactDistance> {
    if t.n > EXACT_N_CAP {
        return Err(Error::ResourceGuard(format!(
            "exact distance guarded at n <= {EXACT_N_CAP}, got {}",
            t.n
        )));
    }
    let points = t.values.len();
    let source = points as u32;
    let sink = points as u32 + 1;
    let mut flow = Dinic::new(points + 2);
    for (idx, &v) in t.values.iter().enumerate() {
        if v == 1 {
            flow.add_edge(source, idx as u32, 1);
        } else {
            flow.add_edge(idx as u32, sink, 1);
        }
    }
    for j in 0..t.n {
        let bit = 1usize << j;
        for idx in 0..points {
            if idx & bit == 0 {
                // Cutting source-side x from sink-side y for x < y would
                // pick a non-up-set; forbid it.
                flow.add_edge(idx as u32, (idx | bit) as u32, Dinic::INF);
            }
        }
    }
    let cut = flow.max_flow(source, sink);
    Ok(ExactDistance { disagreements: cut as u64, total: points as u64 })
}

struct Dinic {
    to: Vec<u32>,
    cap: Vec<u32>,
    head: Vec<Vec<u32>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    const INF: u32 = u32::MAX / 2;

    fn new(n: usize) -> Self {
        Dinic { to: Vec::new(), cap: Vec::new(), head: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    fn add_edge(&mut self, u: u32, v: u32, cap: u32) {
        let e = self.to.len() as u32;
        self.to.push(v);
        self.cap.push(cap);
        self.to.push(u);
        self.cap.push(0);
        self.head[u as usize].push(e);
        self.head[v as usize].push(e + 1);
    }

    fn bfs(&mut self, s: u32, t: u32) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s as usize] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u as usize] {
                let v = self.to[e as usize];
                if self.cap[e as usize] > 0 && self.level[v as usize] < 0 {
                    self.level[v as usize] = self.level[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t as usize] >= 0
    }

    fn dfs(&mut self, u: u32, t: u32, limit: u32) -> u32 {
        if u == t {
            return limit;
        }
        while self.iter[u as usize] < self.head[u as usize].len() {
            let e = self.head[u as usize][self.iter[u as usize]];
            let v = self.to[e as usize];
            if self.cap[e as usize] > 0 && self.level[v as usize] == self.level[u as usize] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e as usize]));
                if pushed > 0 {
                    self.cap[e as usize] -= pushed;
                    self.cap[(e ^ 1) as usize] += pushed;
                    return pushed;
                }
            }
            self.iter[u as usize] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: u32, t: u32) -> u64 {
        let mut total = 0u64;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let pushed = self.dfs(s, t, Self::INF);
                if pushed == 0 {
                    break;
                }
                total += pushed as u64;
            }
        }
        total
    }
}

/// Degree-1 spectral data of a threshold function: cube Fourier
/// coefficients, Gaussian Hermite coefficients, and the regularity
/// parameter.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub fourier1: Vec<f64>,
    pub hermite1: Vec<f64>,
    pub tau: f64,
}

impl SpectralSummary {
    /// Exact summary from the full table (dimension-guarded).
    pub fn for_ltf(f: &Ltf) -> Result<SpectralSummary> {
        let t = TruthTable::from_ltf(f)?;
        let summary = SpectralSummary {
            fourier1: fourier_degree1(&t),
            hermite1: hermite_degree1(f)?,
            tau: regularity(f)?,
        };
        debug_assert!(summary.fourier1.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-12);
        Ok(summary)
    }

    /// Squared gap between the two degree-1 views.
    pub fn hermite_fourier_gap(&self) -> f64 {
        self.fourier1
            .iter()
            .zip(&self.hermite1)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Exact degree-1 Fourier coefficients `E[f(x) x_i]` from a truth table.
pub fn fourier_degree1(t: &TruthTable) -> Vec<f64> {
    let total = t.values.len() as f64;
    (0..t.n)
        .map(|j| {
            let bit = 1usize << j;
            let sum: i64 = t
                .values
                .iter()
                .enumerate()
                .map(|(idx, &v)| if idx & bit == 0 { -v as i64 } else { v as i64 })
                .sum();
            sum as f64 / total
        })
        .collect()
}

/// Sampled degree-1 Fourier coefficients of a threshold function, for
/// dimensions where the table does not fit. Returns the estimates and
/// the shared Monte Carlo standard error.
pub fn fourier_degree1_sampled(f: &Ltf, samples: usize, rng: &mut Stream) -> (Vec<f64>, f64) {
    use rand::Rng;
    let n = f.dimension();
    let mut acc = vec![0.0f64; n];
    let mut x = vec![0i8; n];
    for _ in 0..samples {
        for b in x.iter_mut() {
            *b = if rng.random::<bool>() { 1 } else { -1 };
        }
        let v = f.eval(&x).expect("dimensions match") as f64;
        for (a, &b) in acc.iter_mut().zip(&x) {
            *a += v * b as f64;
        }
    }
    let est: Vec<f64> = acc.iter().map(|a| a / samples as f64).collect();
    // |f(x) x_i| = 1, so the per-coordinate variance is at most 1.
    (est, 1.0 / (samples as f64).sqrt())
}

/// Closed-form degree-1 Hermite coefficients of a threshold function
/// under Gaussian inputs: `sqrt(2/pi) v_i / ||v||`.
pub fn hermite_degree1(f: &Ltf) -> Result<Vec<f64>> {
    let norm = f.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParam("zero weight vector".into()));
    }
    let c = (2.0 / std::f64::consts::PI).sqrt();
    Ok(f.weights.iter().map(|w| c * w / norm).collect())
}

/// Largest single-coordinate share of the weight norm.
pub fn regularity(f: &Ltf) -> Result<f64> {
    let norm = f.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParam("zero weight vector".into()));
    }
    Ok(f.weights.iter().fold(0.0f64, |acc, w| acc.max(w.abs())) / norm)
}

/// Squared Fourier mass on negative degree-1 coefficients. The exact
/// distance to monotonicity is at least a quarter of this value, since
/// monotone functions have nonnegative degree-1 coefficients.
pub fn fourier_negative_mass(t: &TruthTable) -> f64 {
    fourier_degree1(t).iter().filter(|&&c| c < 0.0).map(|c| c * c).sum()
}

/// Outcome of a run of the edge tester.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeTesterReport {
    pub rejected: bool,
    pub rounds: usize,
    /// 1-based round of the first observed violation.
    pub first_violation: Option<usize>,
    pub violations: usize,
}

/// Queries both endpoints of `q` uniformly random hypercube edges and
/// rejects iff some edge decreases.
pub fn edge_tester<F: FnMut(&[i8]) -> i8>(
    mut oracle: F,
    n: usize,
    q: usize,
    rng: &mut Stream,
) -> EdgeTesterReport {
    use rand::Rng;
    assert!(q >= 1);
    let mut first = None;
    let mut violations = 0usize;
    let mut point = vec![0i8; n];
    for round in 1..=q {
        let idx: u64 = rng.random_range(0..1u64 << n);
        let j = rng.random_range(0..n);
        for (b, p) in point.iter_mut().enumerate() {
            *p = if idx >> b & 1 == 1 { 1 } else { -1 };
        }
        point[j] = -1;
        let low = oracle(&point);
        point[j] = 1;
        let high = oracle(&point);
        if low > high {
            violations += 1;
            first.get_or_insert(round);
        }
    }
    EdgeTesterReport { rejected: violations > 0, rounds: q, first_violation: first, violations }
}

/// All monotone truth tables at dimension `n <= 4`, by filtered
/// enumeration. Exhaustive oracle for the min-cut distance.
pub fn enumerate_monotone_tables(n: usize) -> Result<Vec<TruthTable>> {
    if n > 4 {
        return Err(Error::ResourceGuard("monotone enumeration guarded at n <= 4".into()));
    }
    let len = 1usize << n;
    let mut out = Vec::new();
    for code in 0u64..1 << len {
        let values: Vec<i8> =
            (0..len).map(|i| if code >> i & 1 == 1 { 1i8 } else { -1 }).collect();
        let t = TruthTable { n, values };
        if is_monotone(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sample_no, sample_yes, sign_plus, HardInstanceFamily};
    use crate::rng::stream;
    use rand::Rng;

    fn majority3() -> TruthTable {
        TruthTable::from_ltf(&Ltf::new(vec![1.0, 1.0, 1.0])).unwrap()
    }

    fn negated_dictator(n: usize) -> TruthTable {
        let mut w = vec![0.0; n];
        w[0] = -1.0;
        TruthTable::from_ltf(&Ltf::new(w)).unwrap()
    }

    #[test]
    fn majority_is_monotone() {
        assert!(is_monotone(&majority3()));
    }

    #[test]
    fn negated_dictator_is_not_monotone() {
        assert!(!is_monotone(&negated_dictator(3)));
    }

    #[test]
    fn yes_draws_are_monotone() {
        let family = HardInstanceFamily::new(10, 1.0, Some(3)).unwrap();
        let mut rng = stream(31, 0);
        for _ in 0..25 {
            let f = sample_yes(&family, &mut rng);
            assert!(is_monotone(&TruthTable::from_ltf(&f).unwrap()));
        }
    }

    #[test]
    fn distance_of_monotone_is_zero() {
        let d = exact_distance_to_monotone(&majority3()).unwrap();
        assert_eq!(d.disagreements, 0);
    }

    #[test]
    fn distance_of_negated_dictator_n1() {
        let t = negated_dictator(1);
        let d = exact_distance_to_monotone(&t).unwrap();
        assert_eq!((d.disagreements, d.total), (1, 2));
        assert_eq!(d.value(), 0.5);
    }

    #[test]
    fn dedekind_count_at_n4() {
        assert_eq!(enumerate_monotone_tables(4).unwrap().len(), 168);
        assert_eq!(enumerate_monotone_tables(2).unwrap().len(), 6);
    }

    #[test]
    fn min_cut_matches_exhaustive_enumeration() {
        let monotone = enumerate_monotone_tables(4).unwrap();
        let mut rng = stream(32, 0);
        for _ in 0..60 {
            let values: Vec<i8> =
                (0..16).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect();
            let t = TruthTable::from_values(4, values).unwrap();
            let cut = exact_distance_to_monotone(&t).unwrap();
            let best = monotone
                .iter()
                .map(|g| {
                    g.values.iter().zip(&t.values).filter(|(a, b)| a != b).count() as u64
                })
                .min()
                .unwrap();
            assert_eq!(cut.disagreements, best);
        }
    }

    #[test]
    fn fourier_of_dictator() {
        let t = TruthTable::from_ltf(&Ltf::new(vec![1.0, 0.0, 0.0])).unwrap();
        let c = fourier_degree1(&t);
        assert_eq!(c, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn fourier_of_majority() {
        let c = fourier_degree1(&majority3());
        for v in c {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_degree1_bound() {
        let mut rng = stream(33, 0);
        for _ in 0..20 {
            let values: Vec<i8> =
                (0..32).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect();
            let t = TruthTable::from_values(5, values).unwrap();
            let mass: f64 = fourier_degree1(&t).iter().map(|c| c * c).sum();
            assert!(mass <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sampled_fourier_tracks_exact() {
        let f = Ltf::new(vec![2.0, -1.0, 0.5, 1.0]);
        let t = TruthTable::from_ltf(&f).unwrap();
        let exact = fourier_degree1(&t);
        let (est, se) = fourier_degree1_sampled(&f, 200_000, &mut stream(34, 0));
        for (a, b) in est.iter().zip(&exact) {
            assert!((a - b).abs() < 4.0 * se);
        }
    }

    #[test]
    fn hermite_closed_form() {
        let f = Ltf::new(vec![1.0, 0.0, 0.0]);
        let h = hermite_degree1(&f).unwrap();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        assert!((h[0] - c).abs() < 1e-15);
        assert_eq!(&h[1..], &[0.0, 0.0]);
        // The closed form always has norm^2 = 2/pi.
        let f2 = Ltf::new(vec![0.3, -2.0, 1.1]);
        let n2: f64 = hermite_degree1(&f2).unwrap().iter().map(|v| v * v).sum();
        assert!((n2 - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!(hermite_degree1(&Ltf::new(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn hermite_matches_gaussian_monte_carlo() {
        use rand_distr::StandardNormal;
        let f = Ltf::new(vec![1.5, -0.7, 0.2, 0.9]);
        let want = hermite_degree1(&f).unwrap();
        let mut rng = stream(35, 0);
        let samples = 400_000usize;
        let mut acc = vec![0.0f64; 4];
        for _ in 0..samples {
            let g: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let dot: f64 = f.weights.iter().zip(&g).map(|(w, x)| w * x).sum();
            let v = sign_plus(dot) as f64;
            for (a, &x) in acc.iter_mut().zip(&g) {
                *a += v * x;
            }
        }
        let se = 1.0 / (samples as f64).sqrt();
        for (a, w) in acc.iter().zip(&want) {
            assert!((a / samples as f64 - w).abs() < 4.0 * se);
        }
    }

    #[test]
    fn regularity_values() {
        let eq = Ltf::new(vec![1.0; 100]);
        assert!((regularity(&eq).unwrap() - 0.1).abs() < 1e-15);
        let dict = Ltf::new(vec![0.0, 3.0, 0.0]);
        assert_eq!(regularity(&dict).unwrap(), 1.0);
    }

    #[test]
    fn negative_mass_and_quarter_bound() {
        let t = negated_dictator(3);
        assert!((fourier_negative_mass(&t) - 1.0).abs() < 1e-12);
        let d = exact_distance_to_monotone(&t).unwrap();
        assert!(d.value() >= 0.25 * fourier_negative_mass(&t) - 1e-12);
    }

    #[test]
    fn quarter_bound_on_no_draws() {
        let family = HardInstanceFamily::new(12, 1.0, Some(3)).unwrap();
        let mut rng = stream(36, 0);
        for _ in 0..10 {
            let f = sample_no(&family, &mut rng);
            let t = TruthTable::from_ltf(&f).unwrap();
            let d = exact_distance_to_monotone(&t).unwrap();
            assert!(d.value() >= 0.25 * fourier_negative_mass(&t) - 1e-12);
        }
    }

    #[test]
    fn hermite_fourier_gap_shrinks_with_dimension() {
        // The closed-form Gaussian coefficients track the cube Fourier
        // coefficients better as the draws get more regular; no constant
        // asserted, just the trend averaged over draws.
        let mut gaps = Vec::new();
        for n in [8usize, 16] {
            let family = HardInstanceFamily::new(n, 1.0, Some(3)).unwrap();
            let mut rng = stream(44, n as u64);
            let mut total = 0.0;
            let draws = 6;
            for _ in 0..draws {
                let f = sample_no(&family, &mut rng);
                let summary = SpectralSummary::for_ltf(&f).unwrap();
                assert!(summary.tau > 0.0 && summary.tau <= 1.0);
                total += summary.hermite_fourier_gap();
            }
            gaps.push(total / draws as f64);
        }
        assert!(gaps[1] <= gaps[0] + 0.01, "{gaps:?}");
    }

    #[test]
    fn monotone_ltf_with_positive_weights() {
        let mut rng = stream(37, 0);
        for _ in 0..10 {
            let w: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..2.0)).collect();
            assert!(is_monotone(&TruthTable::from_ltf(&Ltf::new(w)).unwrap()));
        }
    }

    #[test]
    fn edge_tester_accepts_monotone() {
        let t = majority3();
        let mut rng = stream(38, 0);
        let report = edge_tester(|x| t.values[table_index(x)], 3, 500, &mut rng);
        assert!(!report.rejected);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn edge_tester_rejection_rate_is_one_over_n() {
        let n = 8;
        let t = negated_dictator(n);
        // Analytic count: exactly the coordinate-0 picks violate.
        let mut violating = 0u64;
        for idx in 0..1usize << n {
            for j in 0..n {
                let low = idx & !(1 << j);
                let high = idx | 1 << j;
                if t.values[low] > t.values[high] {
                    violating += 1;
                    assert_eq!(j, 0);
                }
            }
        }
        assert_eq!(violating, 1 << n);
        let mut rng = stream(39, 0);
        let q = 20_000;
        let report = edge_tester(|x| t.values[table_index(x)], n, q, &mut rng);
        let p = 1.0 / n as f64;
        let se = (p * (1.0 - p) / q as f64).sqrt();
        let rate = report.violations as f64 / q as f64;
        assert!((rate - p).abs() < 4.0 * se, "{rate} vs {p}");
        assert!(report.rejected && report.first_violation.is_some());
    }

    #[test]
    fn table_bytes_round_trip() {
        let t = majority3();
        let bytes = t.to_bytes();
        assert_eq!(bytes.len(), 1);
        let back = TruthTable::from_bytes(3, &bytes).unwrap();
        assert_eq!(back, t);
        // Spot-check the bit layout: index 0 = all -1 -> majority -1 -> bit 0.
        assert_eq!(bytes[0] & 1, 0);
        // Index 7 = all +1 -> +1 -> bit set.
        assert_eq!(bytes[0] >> 7 & 1, 1);
    }

    fn table_index(x: &[i8]) -> usize {
        x.iter().enumerate().fold(0, |acc, (j, &b)| acc | ((b == 1) as usize) << j)
    }
}
