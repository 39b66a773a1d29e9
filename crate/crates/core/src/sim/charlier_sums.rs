use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::charlier::charlier;

/// Values of a Poisson(1) variable beyond this are lumped into the last
/// cell; its probability is below `10^-80`.
const TABLE_LEN: usize = 60;

/// Samples `S_n = Σ_{k=1}^n H_q(Z_k)` with `Z_k` i.i.d. Poisson(1).
///
/// Only the histogram of `Z_1..Z_n` matters, so each draw samples the
/// multinomial cell counts by successive binomials instead of `n`
/// individual Poisson variables.
#[derive(Debug, Clone)]
pub struct CharlierSampler {
    n: u64,
    /// `P(Z = v | Z >= v)`.
    conditional: Vec<f64>,
    h_values: Vec<f64>,
}

impl CharlierSampler {
    pub fn new(q: usize, n: u64) -> Self {
        let mut pmf = vec![0.0; TABLE_LEN + 1];
        pmf[0] = (-1f64).exp();
        for v in 1..=TABLE_LEN {
            pmf[v] = pmf[v - 1] / v as f64;
        }
        // tails summed from the top so small cells are not lost to cancellation
        let mut tail = vec![0.0; TABLE_LEN + 2];
        for v in (0..=TABLE_LEN).rev() {
            tail[v] = tail[v + 1] + pmf[v];
        }
        let conditional = (0..=TABLE_LEN).map(|v| (pmf[v] / tail[v]).min(1.0)).collect();
        let h = charlier(q);
        let h_values = (0..=TABLE_LEN).map(|v| h.eval(v as f64)).collect();
        Self { n, conditional, h_values }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut left = self.n;
        let mut sum = 0.0;
        for v in 0..TABLE_LEN {
            if left == 0 {
                break;
            }
            let c = Binomial::new(left, self.conditional[v]).expect("probability in [0, 1]").sample(rng);
            sum += c as f64 * self.h_values[v];
            left -= c;
        }
        sum + left as f64 * self.h_values[TABLE_LEN]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::replicate;

    #[test]
    fn moments_of_linear_sums() {
        // H_1(Z) = Z - 1, so S_n is a centered Poisson(n) variable
        let sampler = CharlierSampler::new(1, 50);
        let xs = replicate(3, 200_000, |_, rng| sampler.sample(rng));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 5.0 * (50.0 / n).sqrt(), "{mean}");
        assert!((var - 50.0).abs() < 5.0 * 50.0 * (2.0 / n).sqrt() * 1.5, "{var}");
    }

    #[test]
    fn single_term_matches_direct_draws() {
        // n = 1: S_1 = H_2(Z); E = 0, Var = 2
        let sampler = CharlierSampler::new(2, 1);
        let xs = replicate(11, 200_000, |_, rng| sampler.sample(rng));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        assert!(mean.abs() < 5.0 * (2.0 / n).sqrt());
        assert!((var - 2.0).abs() < 0.1);
    }
}
