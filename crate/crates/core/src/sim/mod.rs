//! Seeded Monte Carlo on finite atom spaces.
//!
//! Every replica draws from its own ChaCha8 stream, seeded from the master
//! seed and the replica index by [`replica_seed`]. Replicas may run on any
//! number of threads; results are always collected in index order.

mod charlier_sums;
mod eval;
mod stats;

pub use charlier_sums::CharlierSampler;
pub use eval::{eval_ustat, eval_wi_pathwise, PathwiseIntegral, MAX_TUPLES};
pub use stats::{
    cramer_ratio, k_statistics, normal_upper_tail, tail_check, wilson_interval, CramerRow,
    EmpiricalCumulants, SeMethod, TailRow, WILSON_Z99,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::AtomSpace;

/// Largest mean sampled by inversion; larger means use `rand_distr`.
pub const INVERSION_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub master_seed: u64,
    pub replicas: usize,
    /// Intensity multiplier: the process has intensity `t μ`.
    pub t: f64,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidConfig("replicas must be at least 1".into()));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidConfig(format!("t must be positive, got {}", self.t)));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master) + index)`.
pub fn replica_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed).wrapping_add(index))
}

pub fn replica_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(master_seed, index))
}

/// Runs `f` for replicas `0..replicas` in parallel, returning results in
/// index order.
pub fn replicate<T, F>(master_seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| f(i, &mut replica_rng(master_seed, i)))
        .collect()
}

/// One Poisson(mean) variate.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean > INVERSION_LIMIT {
        let dist = Poisson::new(mean).expect("finite positive mean");
        return dist.sample(rng) as u64;
    }
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        if p == 0.0 {
            break;
        }
        cdf += p;
    }
    k
}

/// Occupation numbers of a Poisson process on the atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSample {
    pub counts: Vec<u64>,
}

impl CountSample {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Draws independent Poisson(`t w_x`) counts.
pub fn sample_with<R: Rng + ?Sized>(space: &AtomSpace, t: f64, rng: &mut R) -> CountSample {
    CountSample { counts: space.weights().iter().map(|&w| poisson(rng, t * w)).collect() }
}

/// The sample of replica `index`.
pub fn sample(space: &AtomSpace, config: &SampleConfig, index: u64) -> CountSample {
    sample_with(space, config.t, &mut replica_rng(config.master_seed, index))
}
