//! U-statistics with a kernel that does not depend on the intensity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{AtomSpace, CompensatedSum, SymmetricKernel};

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedKernelConfig {
    /// Probability space: total mass one.
    pub space: AtomSpace,
    pub f: SymmetricKernel,
    /// Intensity multiplier, at least one.
    pub t: f64,
}

impl FixedKernelConfig {
    pub fn new(space: AtomSpace, f: SymmetricKernel, t: f64) -> Result<Self> {
        let mass = space.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass must be 1, got {mass}")));
        }
        f.check_space(&space)?;
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::InvalidConfig(format!("t must be at least 1, got {t}")));
        }
        Ok(Self { space, f, t })
    }
}

/// `v_f = q² ∫ (∫ f(x, x_1..x_{q-1}) dμ^{q-1})² μ(dx)`.
pub fn v_f(config: &FixedKernelConfig) -> f64 {
    let f = &config.f;
    let w = config.space.weights();
    let n = w.len();
    let q = f.order();
    let inner_len = n.pow((q - 1) as u32);
    // μ^{q-1} weight of each trailing tuple, in row-major order
    let mut tuple_weights = vec![1.0; inner_len];
    for (idx, tw) in tuple_weights.iter_mut().enumerate() {
        let mut rest = idx;
        for _ in 0..q - 1 {
            *tw *= w[rest % n];
            rest /= n;
        }
    }
    let outer: CompensatedSum = f
        .values()
        .chunks_exact(inner_len)
        .zip(w)
        .map(|(row, &wx)| {
            let g: CompensatedSum = row.iter().zip(&tuple_weights).map(|(v, tw)| v * tw).collect();
            wx * g.value() * g.value()
        })
        .collect();
    (q * q) as f64 * outer.value()
}

/// `√t / (q^{3q} max{r³, r})` with `r = ‖f‖∞ / √v_f`.
pub fn tau_fixed(config: &FixedKernelConfig) -> Result<f64> {
    let v = v_f(config);
    if !(v > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let q = config.f.order() as f64;
    let r = config.f.sup_norm() / v.sqrt();
    Ok(config.t.sqrt() / (q.powf(3.0 * q) * (r * r * r).max(r)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedKernelSummary {
    pub q: usize,
    pub t: f64,
    pub v_f: f64,
    pub sup_norm: f64,
    pub tau: f64,
}

pub fn summary(config: &FixedKernelConfig) -> Result<FixedKernelSummary> {
    Ok(FixedKernelSummary {
        q: config.f.order(),
        t: config.t,
        v_f: v_f(config),
        sup_norm: config.f.sup_norm(),
        tau: tau_fixed(config)?,
    })
}
