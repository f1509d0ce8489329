//! Rank correlation and normality testing for layer-wise series.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;
use thiserror::Error;

pub const DEFAULT_PERMUTATIONS: usize = 100_000;
pub const NORMALITY_TEST: &str = "shapiro-wilk";

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {found}")]
    TooShort { needed: usize, found: usize },
    #[error("at most {max} values are supported, got {found}")]
    TooLong { max: usize, found: usize },
    #[error("series is constant; the statistic is undefined")]
    Constant,
    #[error("series contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    TApprox,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum PValueMethod {
    TApprox,
    MonteCarlo { permutations: usize, seed: u64 },
}

impl PValueMethod {
    pub fn monte_carlo(seed: u64) -> Self {
        PValueMethod::MonteCarlo {
            permutations: DEFAULT_PERMUTATIONS,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r_s: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: CorrelationMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub normal_at_05: bool,
}

/// Spearman correlation with the Student-t p-value.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    spearman_with(xs, ys, PValueMethod::TApprox)
}

pub fn spearman_with(xs: &[f64], ys: &[f64], method: PValueMethod) -> Result<CorrelationResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, found: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let r_s = pearson(&rx, &ry).ok_or(StatsError::Constant)?;

    let (p_value, method) = match method {
        PValueMethod::TApprox => (t_approx_p(r_s, n), CorrelationMethod::TApprox),
        PValueMethod::MonteCarlo { permutations, seed } => {
            (permutation_p(&rx, &ry, r_s, permutations, seed), CorrelationMethod::MonteCarlo)
        }
    };
    Ok(CorrelationResult {
        r_s,
        p_value,
        n,
        method,
    })
}

/// Two-sided p-value of a rank correlation from the t statistic with n - 2
/// degrees of freedom. `|r| = 1` gives 0.
pub fn t_approx_p(r_s: f64, n: usize) -> f64 {
    if r_s.abs() >= 1.0 {
        return 0.0;
    }
    let df = n - 2;
    let t = r_s * (df as f64 / (1.0 - r_s * r_s)).sqrt();
    student_t_sf(t, df)
}

/// Two-sided tail probability `2 P(T >= |t|)` for Student's t with `df` degrees
/// of freedom, via the regularized incomplete beta function.
pub fn student_t_sf(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let df = df as f64;
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold rank (start+1 + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Permutation p-value `(hits + 1) / (permutations + 1)` where a hit is a
/// shuffled correlation at least as extreme as the observed one. Permutation
/// `k` draws from ChaCha stream `k`, so the count is independent of threading.
fn permutation_p(rx: &[f64], ry: &[f64], observed: f64, permutations: usize, seed: u64) -> f64 {
    let threshold = observed.abs() - 1e-12;
    let hits: usize = (0..permutations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let mut shuffled = ry.to_vec();
            shuffled.shuffle(&mut rng);
            let r = pearson(rx, &shuffled).unwrap_or(0.0);
            usize::from(r.abs() >= threshold)
        })
        .sum();
    (hits + 1) as f64 / (permutations + 1) as f64
}

/// Shapiro-Wilk W and p-value using Royston's polynomial approximations
/// (the AS R94 algorithm).
pub fn normality_test(xs: &[f64]) -> Result<NormalityResult, StatsError> {
    let n = xs.len();
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, found: n });
    }
    if n > 5000 {
        return Err(StatsError::TooLong { max: 5000, found: n });
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut x = xs.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(StatsError::Constant);
    }

    let coef = swilk_coefficients(n);
    let nf = n as f64;
    // W as the squared correlation between ordered data and coefficients,
    // computed as 1 - W to keep precision near W = 1.
    let scaled: Vec<f64> = x.iter().map(|v| v / range).collect();
    let mean_x = scaled.iter().sum::<f64>() / nf;
    let mean_a = coef.iter().sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (a, v) in coef.iter().zip(&scaled) {
        let da = a - mean_a;
        let dx = v - mean_x;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let root = (ssa * ssx).sqrt();
    let w1 = (root - sax) * (root + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p_value = swilk_p_value(w1, nf);
    Ok(NormalityResult {
        test: NORMALITY_TEST.to_string(),
        statistic: w,
        p_value,
        normal_at_05: p_value >= 0.05,
    })
}

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Antisymmetric weights for the ordered sample, lowest value first.
fn swilk_coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];

    let half = n / 2;
    let nf = n as f64;
    let normal = std_normal();
    let m: Vec<f64> = (1..=half)
        .map(|i| normal.inverse_cdf((i as f64 - 0.375) / (nf + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / nf.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    let first_rest;
    let fac;
    if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[1] = a2;
        first_rest = 2;
    } else {
        fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        first_rest = 1;
    }
    a[0] = a1;
    for i in first_rest..half {
        a[i] = -m[i] / fac;
    }

    let mut coef = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate() {
        coef[i] = -ai;
        coef[n - 1 - i] = ai;
    }
    coef
}

fn swilk_p_value(w1: f64, n: f64) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    if w1 <= 0.0 {
        return 1.0;
    }
    let mut y = w1.ln();
    let (mean, sd) = if n <= 11.0 {
        let gamma = poly(&G, n);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, n), poly(&C4, n).exp())
    } else {
        let ln_n = n.ln();
        (poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    1.0 - std_normal().cdf((y - mean) / sd)
}
