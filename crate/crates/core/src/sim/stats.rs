use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::CompensatedSum;

/// Two-sided 99% normal quantile.
pub const WILSON_Z99: f64 = 2.575_829_303_548_901;

const MIN_SAMPLES: usize = 8;
const MAX_BATCHES: usize = 50;
const MIN_BATCHES: usize = 20;
/// Each batch needs at least four values for its own fourth k-statistic.
const MIN_BATCH_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeMethod {
    Batch,
    Jackknife,
}

/// Unbiased k-statistics `k_1..k_4` with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCumulants {
    pub n: usize,
    pub k: [f64; 4],
    pub se: [f64; 4],
    pub se_method: SeMethod,
    pub batches: usize,
}

impl EmpiricalCumulants {
    /// `|k_j - exact| / se_j` for `j = 1..4`.
    pub fn z_scores(&self, exact: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|j| (self.k[j] - exact[j]).abs() / self.se[j])
    }
}

fn raw_k(values: &[f64]) -> [f64; 4] {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let (mut s2, mut s3, mut s4) =
        (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for &x in values {
        let d = x - mean;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    let (m2, m3, m4) = (s2.value() / n, s3.value() / n, s4.value() / n);
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
        / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    [mean, k2, k3, k4]
}

fn spread(samples: &[[f64; 4]], j: usize) -> f64 {
    let b = samples.len() as f64;
    let mean = samples.iter().map(|s| s[j]).sum::<f64>() / b;
    samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>()
}

/// k-statistics with standard errors from up to 50 equal batches, or from
/// the jackknife when fewer than 20 batches of four values are available.
pub fn k_statistics(values: &[f64]) -> Result<EmpiricalCumulants> {
    let n = values.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: n, need: MIN_SAMPLES });
    }
    let k = raw_k(values);
    let batches = MAX_BATCHES.min(n / MIN_BATCH_LEN);
    if batches >= MIN_BATCHES {
        let len = n / batches;
        let per: Vec<[f64; 4]> = values.chunks_exact(len).take(batches).map(raw_k).collect();
        let b = batches as f64;
        // sd of batch estimates / sqrt(B)
        let se = std::array::from_fn(|j| (spread(&per, j) / (b - 1.0) / b).sqrt());
        return Ok(EmpiricalCumulants { n, k, se, se_method: SeMethod::Batch, batches });
    }
    let mut rest = Vec::with_capacity(n - 1);
    let leave_one_out: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            rest.clear();
            rest.extend(values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x));
            raw_k(&rest)
        })
        .collect();
    let nf = n as f64;
    let se = std::array::from_fn(|j| ((nf - 1.0) / nf * spread(&leave_one_out, j)).sqrt());
    Ok(EmpiricalCumulants { n, k, se, se_method: SeMethod::Jackknife, batches: 0 })
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `1 - Φ(z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub z: f64,
    pub exceedance: f64,
    pub lower: f64,
    pub upper: f64,
    pub bound: f64,
    /// The 99% interval for the exceedance reaches down to the bound.
    pub holds: bool,
}

/// Empirical `P(|X - center| >= z sqrt(variance))` against `bound(z)`.
pub fn tail_check(
    values: &[f64],
    center: f64,
    variance: f64,
    z_grid: &[f64],
    bound: impl Fn(f64) -> f64,
) -> Vec<TailRow> {
    let sd = variance.sqrt();
    let n = values.len();
    z_grid
        .iter()
        .map(|&z| {
            let hits = values.iter().filter(|&&x| (x - center).abs() >= z * sd).count();
            let (lower, upper) = wilson_interval(hits, n, WILSON_Z99);
            let b = bound(z);
            TailRow { z, exceedance: hits as f64 / n as f64, lower, upper, bound: b, holds: lower <= b }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRow {
    pub z: f64,
    pub tail: f64,
    pub ratio: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
}

/// `P(X >= z) / (1 - Φ(z))` for standardized values, with a 99% band.
pub fn cramer_ratio(values: &[f64], z_grid: &[f64]) -> Vec<CramerRow> {
    let n = values.len();
    z_grid
        .iter()
        .map(|&z| {
            let hits = values.iter().filter(|&&x| x >= z).count();
            let (lo, hi) = wilson_interval(hits, n, WILSON_Z99);
            let normal = normal_upper_tail(z);
            let tail = hits as f64 / n as f64;
            CramerRow { z, tail, ratio: tail / normal, ratio_lower: lo / normal, ratio_upper: hi / normal }
        })
        .collect()
}
