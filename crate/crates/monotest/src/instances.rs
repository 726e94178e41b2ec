//! Sampling of the yes/no threshold functions and of the coefficient
//! sums induced by a query matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{DiscreteRV, YesNoPair};
use crate::rng::Stream;

/// Linear threshold function `x -> sign(w . x - threshold)` with
/// `sign(0) = +1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ltf {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub threshold: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// The global tie rule: `sign(0) = +1`.
pub fn sign_plus(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

impl Ltf {
    pub fn new(weights: Vec<f64>) -> Self {
        Ltf { weights, threshold: 0.0 }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// Evaluates the function on a `{-1,+1}` point.
    pub fn eval(&self, x: &[i8]) -> Result<i8> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: x.len() });
        }
        let dot: f64 = self.weights.iter().zip(x).map(|(&w, &b)| w * b as f64).sum();
        Ok(sign_plus(dot - self.threshold))
    }
}

/// A `d x n` query matrix over `{+-1/sqrt(n)}`. Rows are stored as
/// unscaled `{+-1}` strings; the `1/sqrt(n)` factor is applied on access
/// so every scaled entry is the same bit pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryMatrix {
    pub n: usize,
    pub rows: Vec<Vec<i8>>,
}

impl QueryMatrix {
    pub fn new(n: usize, rows: Vec<Vec<i8>>) -> Result<Self> {
        let qm = QueryMatrix { n, rows };
        qm.validate()?;
        Ok(qm)
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if row.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, got: row.len() });
            }
            if row.iter().any(|&b| b != 1 && b != -1) {
                return Err(Error::InvalidParam("query entries must be +-1".into()));
            }
        }
        Ok(())
    }

    /// Query count `d`.
    pub fn d(&self) -> usize {
        self.rows.len()
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Uniformly random query matrix.
    pub fn random(n: usize, d: usize, rng: &mut Stream) -> Self {
        use rand::Rng;
        let rows = (0..d)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }).collect())
            .collect();
        QueryMatrix { n, rows }
    }

    /// Accumulates `w_i * X^(i)` over columns `i`, i.e. the dot product
    /// of every scaled row with the coefficient vector.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        let s = self.scale();
        self.rows
            .iter()
            .map(|row| {
                let dot: f64 = row.iter().zip(coeffs).map(|(&b, &w)| b as f64 * w).sum();
                dot * s
            })
            .collect()
    }

    /// Column `j` as a scaled vector of length `d`.
    pub fn scaled_column(&self, j: usize) -> Vec<f64> {
        let s = self.scale();
        self.rows.iter().map(|row| row[j] as f64 * s).collect()
    }
}

/// A full hard-instance description: dimension, exponent gap, derived
/// odd constant, moment order, shift, and the coefficient pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardInstanceFamily {
    pub n: usize,
    pub c: f64,
    pub h: usize,
    pub ell: usize,
    pub mu: u64,
    pub pair: YesNoPair,
    /// True when `ell` was overridden below the `h^3` default.
    pub ell_overridden: bool,
}

/// Smallest odd integer `>= 5/c`.
pub fn choose_h(c: f64) -> usize {
    assert!(c > 0.0, "c must be positive");
    let lo = (5.0 / c).ceil() as usize;
    let lo = lo.max(1);
    if lo % 2 == 1 {
        lo
    } else {
        lo + 1
    }
}

impl HardInstanceFamily {
    /// Builds the family for gap `c`, with the moment order defaulting to
    /// `h^3` and overridable for desk-scale work (the override is
    /// recorded).
    pub fn new(n: usize, c: f64, ell_override: Option<usize>) -> Result<Self> {
        let h = choose_h(c);
        let ell = ell_override.unwrap_or(h * h * h);
        let mu = crate::moments::find_mu(ell)?;
        let pair = YesNoPair::build(ell, mu)?;
        Ok(HardInstanceFamily {
            n,
            c,
            h,
            ell,
            mu,
            pair,
            ell_overridden: ell_override.is_some(),
        })
    }
}

/// Draws a monotone instance: i.i.d. nonnegative coefficients.
pub fn sample_yes(family: &HardInstanceFamily, rng: &mut Stream) -> Ltf {
    sample_ltf(&family.pair.yes_rv, family.n, rng)
}

/// Draws a far-from-monotone candidate: i.i.d. coefficients with
/// negative mass.
pub fn sample_no(family: &HardInstanceFamily, rng: &mut Stream) -> Ltf {
    sample_ltf(&family.pair.no_rv, family.n, rng)
}

fn sample_ltf(rv: &DiscreteRV, n: usize, rng: &mut Stream) -> Ltf {
    Ltf::new((0..n).map(|_| rv.sample(rng)).collect())
}

/// One draw of the coefficient sum `sum_i w_i X^(i)` with `w_i` i.i.d.
/// from `rv`. This realizes the yes-side sum when `rv` is the yes
/// variable and the no-side sum when it is the no variable.
pub fn sample_coeff_vector(qm: &QueryMatrix, rv: &DiscreteRV, rng: &mut Stream) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..qm.n).map(|_| rv.sample(rng)).collect();
    qm.apply(&coeffs)
}

/// One draw of the swap-interpolation hybrid: coefficients `1..=i` come
/// from the no variable, the rest from the yes variable. `i = 0` is the
/// yes-side sum, `i = n` the no-side sum.
pub fn sample_hybrid(
    qm: &QueryMatrix,
    pair: &YesNoPair,
    i: usize,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    if i > qm.n {
        return Err(Error::InvalidParam(format!("hybrid index {i} out of range 0..={}", qm.n)));
    }
    let coeffs: Vec<f64> = (0..qm.n)
        .map(|j| if j < i { pair.no_rv.sample(rng) } else { pair.yes_rv.sample(rng) })
        .collect();
    Ok(qm.apply(&coeffs))
}
