use crate::error::{Error, Result};
use crate::measure::{integral, marginal_kernel, AtomSpace, CompensatedSum, SymmetricKernel};

use super::CountSample;

/// Upper bound on `(number of points)^q` accepted by the evaluators.
pub const MAX_TUPLES: f64 = 1e8;

fn check_size(sample: &CountSample, order: usize) -> Result<()> {
    let points = sample.total();
    if (points as f64).powi(order as i32) > MAX_TUPLES {
        return Err(Error::TooManyPoints { points, order });
    }
    Ok(())
}

/// `Σ_{(x_1..x_q) ∈ η^q_≠} f(x_1, ..., x_q)`.
///
/// An atom holding `n` points contributes `n (n-1) ... (n-r+1)` ordered
/// choices when it fills `r` slots, so the sum runs over nondecreasing atom
/// tuples weighted by `q! / Π r_x!` times those falling factorials.
pub fn eval_ustat(sample: &CountSample, f: &SymmetricKernel) -> Result<f64> {
    if sample.counts.len() != f.num_atoms() {
        return Err(Error::ShapeMismatch(format!(
            "sample has {} atoms, kernel {}",
            sample.counts.len(),
            f.num_atoms()
        )));
    }
    check_size(sample, f.order())?;
    let support: Vec<(usize, u64)> =
        sample.counts.iter().copied().enumerate().filter(|&(_, n)| n > 0).collect();
    let q = f.order();
    let q_fact: f64 = (1..=q).map(|i| i as f64).product();
    let mut tuple = Vec::with_capacity(q);
    let mut acc = CompensatedSum::default();
    fill(&support, 0, q, 1.0, &mut tuple, &mut |t, w| acc.add(w * f.value(t)));
    Ok(q_fact * acc.value())
}

/// Walks nondecreasing tuples over `support[from..]`; `weight` is
/// `Π n_x^{(r_x)} / r_x!` for the slots filled so far.
fn fill(
    support: &[(usize, u64)],
    from: usize,
    left: usize,
    weight: f64,
    tuple: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize], f64),
) {
    if left == 0 {
        visit(tuple, weight);
        return;
    }
    for s in from..support.len() {
        let (atom, n) = support[s];
        let mut w = weight;
        for r in 1..=left.min(n as usize) {
            w *= (n as usize - r + 1) as f64 / r as f64;
            tuple.push(atom);
            fill(support, s + 1, left - r, w, tuple, visit);
        }
        tuple.truncate(tuple.len() - left.min(n as usize));
    }
}

/// Pathwise multiple integral `I_q(f)` for a fixed kernel and intensity.
///
/// Inclusion–exclusion over the slots that are integrated against the
/// intensity gives `I_q(f) = Σ_{j=0}^q (-1)^{q-j} S(f_j)`, where `f_j` is
/// the marginal kernel of order `j` (binomial factor included) and `S(f_0)`
/// is the full integral `∫ f dμ^q`.
#[derive(Debug, Clone)]
pub struct PathwiseIntegral {
    order: usize,
    marginals: Vec<SymmetricKernel>,
    full: f64,
}

impl PathwiseIntegral {
    /// `intensity` is the mean measure of the process, i.e. `t μ`.
    pub fn new(f: &SymmetricKernel, intensity: &AtomSpace) -> Result<Self> {
        let marginals =
            (1..=f.order()).map(|j| marginal_kernel(f, intensity, j)).collect::<Result<_>>()?;
        Ok(Self { order: f.order(), marginals, full: integral(f, intensity)? })
    }

    pub fn eval(&self, sample: &CountSample) -> Result<f64> {
        let q = self.order;
        let mut acc = CompensatedSum::default();
        acc.add(if q.is_multiple_of(2) { self.full } else { -self.full });
        for (j, g) in (1..=q).zip(&self.marginals) {
            let s = eval_ustat(sample, g)?;
            acc.add(if (q - j).is_multiple_of(2) { s } else { -s });
        }
        Ok(acc.value())
    }
}

pub fn eval_wi_pathwise(
    sample: &CountSample,
    f: &SymmetricKernel,
    intensity: &AtomSpace,
) -> Result<f64> {
    PathwiseIntegral::new(f, intensity)?.eval(sample)
}
