//! Exact moments and cumulants of multiple Wiener-Itô integrals and Poisson
//! U-statistics on finite atom spaces, and the cumulant-bound parameters
//! derived from them.
//!
//! Every quantity is a sum of merged tensor integrals over one of the
//! partition classes:
//!
//! | quantity                          | class  |
//! |-----------------------------------|--------|
//! | `E[I_{q1}(f1) ... I_{qm}(fm)]`    | `Π≥2`  |
//! | `cum(I_{q1}(f1), ..., I_{qm}(fm))`| `Π̃≥2`  |
//! | `cum(S1, ..., Sm)`                | `Π̃`    |
//! | `E[(S1 - ES1) ... (Sm - ESm)]`    | `Π̄`    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{
    integral, l2_norm_sq, marginal_kernel, merged_integral_unchecked, AtomSpace, CompensatedSum,
    SymmetricKernel,
};
use crate::partitions::{enumerate, factorial, for_each_partition, DiagramShape, Guard, PartitionClass};

/// Default highest cumulant order for reports and bound fitting.
pub const DEFAULT_M_MAX: usize = 5;

fn shape_of(kernels: &[&SymmetricKernel], space: &AtomSpace) -> Result<DiagramShape> {
    for k in kernels {
        k.check_space(space)?;
    }
    DiagramShape::new(kernels.iter().map(|k| k.order()).collect())
}

/// Sum of merged integrals over every partition in `class`.
fn partition_sum(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    class: PartitionClass,
    guard: Guard,
) -> Result<f64> {
    let shape = shape_of(kernels, space)?;
    let mut acc = CompensatedSum::default();
    for_each_partition(&shape, class, guard, |blocks| {
        acc.add(merged_integral_unchecked(kernels, space, &shape, blocks));
    })?;
    Ok(acc.value())
}

/// Largest absolute merged integral over `class`, or 0 for an empty class.
fn partition_max(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    class: PartitionClass,
    guard: Guard,
) -> Result<f64> {
    let shape = shape_of(kernels, space)?;
    let mut best = 0.0f64;
    for_each_partition(&shape, class, guard, |blocks| {
        best = best.max(merged_integral_unchecked(kernels, space, &shape, blocks).abs());
    })?;
    Ok(best)
}

pub fn wi_joint_moment(kernels: &[&SymmetricKernel], space: &AtomSpace, guard: Guard) -> Result<f64> {
    partition_sum(kernels, space, PartitionClass::NoSingletons, guard)
}

pub fn wi_joint_cumulant(kernels: &[&SymmetricKernel], space: &AtomSpace, guard: Guard) -> Result<f64> {
    partition_sum(kernels, space, PartitionClass::ConnectedNoSingletons, guard)
}

/// Joint cumulant of the U-statistics with the given kernels. With a
/// single kernel this is the mean.
pub fn ustat_joint_cumulant(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    guard: Guard,
) -> Result<f64> {
    partition_sum(kernels, space, PartitionClass::Connected, guard)
}

pub fn ustat_central_moment(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    guard: Guard,
) -> Result<f64> {
    partition_sum(kernels, space, PartitionClass::RowCovering, guard)
}

/// `E S = ∫ f dμ^q`.
pub fn ustat_mean(f: &SymmetricKernel, space: &AtomSpace) -> Result<f64> {
    integral(f, space)
}

/// Kernels `f_1, ..., f_q` of the chaos expansion `S = E S + Σ I_i(f_i)`.
pub fn chaos_expansion(f: &SymmetricKernel, space: &AtomSpace) -> Result<Vec<SymmetricKernel>> {
    (1..=f.order()).map(|i| marginal_kernel(f, space, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    WienerIto,
    UStatistic,
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::WienerIto => "wiener-ito",
            ElementKind::UStatistic => "u-statistic",
        }
    }

    fn cumulant_class(self) -> PartitionClass {
        match self {
            ElementKind::WienerIto => PartitionClass::ConnectedNoSingletons,
            ElementKind::UStatistic => PartitionClass::Connected,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wiener-ito" | "wi" => Ok(ElementKind::WienerIto),
            "u-statistic" | "ustat" => Ok(ElementKind::UStatistic),
            _ => Err(Error::InvalidConfig(format!("unknown element kind {s:?}"))),
        }
    }
}

/// `Σ c_i I_{q_i}(f_i)` or `Σ c_i S(f_i)` on a fixed atom space.
///
/// Summands of equal order are added together on construction, so the
/// stored orders are distinct and ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosElement {
    kind: ElementKind,
    space: AtomSpace,
    kernels: Vec<SymmetricKernel>,
}

impl ChaosElement {
    pub fn new(
        kind: ElementKind,
        space: AtomSpace,
        summands: Vec<(f64, SymmetricKernel)>,
    ) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::InvalidKernel("element has no summands".into()));
        }
        let mut kernels: Vec<SymmetricKernel> = Vec::new();
        for (c, k) in summands {
            k.check_space(&space)?;
            match kernels.iter_mut().find(|x| x.order() == k.order()) {
                Some(existing) => *existing = existing.add_scaled(c, &k)?,
                None => kernels.push(k.scaled(c)),
            }
        }
        kernels.sort_by_key(|k| k.order());
        Ok(Self { kind, space, kernels })
    }

    pub fn single(kind: ElementKind, space: AtomSpace, f: SymmetricKernel) -> Result<Self> {
        Self::new(kind, space, vec![(1.0, f)])
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn space(&self) -> &AtomSpace {
        &self.space
    }

    /// Merged kernels, ascending in order.
    pub fn kernels(&self) -> &[SymmetricKernel] {
        &self.kernels
    }

    /// Highest order `q`.
    pub fn max_order(&self) -> usize {
        self.kernels.last().map_or(0, |k| k.order())
    }

    /// Number of summands `k` after merging.
    pub fn num_summands(&self) -> usize {
        self.kernels.len()
    }
}

/// `Var F = Σ q_i! ‖f_i‖²` for integrals; for U-statistics the summands'
/// chaos expansions are added order by order first.
pub fn variance(element: &ChaosElement) -> Result<f64> {
    let space = &element.space;
    let mut acc = CompensatedSum::default();
    match element.kind {
        ElementKind::WienerIto => {
            for f in &element.kernels {
                acc.add(factorial(f.order()) as f64 * l2_norm_sq(f, space)?);
            }
        }
        ElementKind::UStatistic => {
            for i in 1..=element.max_order() {
                let mut combined: Option<SymmetricKernel> = None;
                for f in element.kernels.iter().filter(|f| f.order() >= i) {
                    let fi = marginal_kernel(f, space, i)?;
                    combined = Some(match combined {
                        Some(c) => c.add_scaled(1.0, &fi)?,
                        None => fi,
                    });
                }
                if let Some(c) = combined {
                    acc.add(factorial(i) as f64 * l2_norm_sq(&c, space)?);
                }
            }
        }
    }
    let var = acc.value();
    if var > 0.0 {
        Ok(var)
    } else {
        Err(Error::DegenerateVariance)
    }
}

/// Nondecreasing index tuples of length `m` over `0..k`, each with the
/// number of orderings it stands for.
fn multisets(k: usize, m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(k: usize, m: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if cur.len() == m {
            let mut denom = 1u128;
            let mut run = 1;
            for w in cur.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    denom *= factorial(run);
                    run = 1;
                }
            }
            denom *= factorial(run);
            out.push((cur.clone(), (factorial(m) / denom) as f64));
            return;
        }
        for i in from..k {
            cur.push(i);
            rec(k, m, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, m, 0, &mut Vec::with_capacity(m), &mut out);
    out
}

/// `κ_m` of the element, expanded by multilinearity over its summands.
pub fn element_cumulant(element: &ChaosElement, m: usize, guard: Guard) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidConfig("cumulant order must be positive".into()));
    }
    let class = element.kind.cumulant_class();
    let mut acc = CompensatedSum::default();
    for (idx, mult) in multisets(element.kernels.len(), m) {
        let kernels: Vec<&SymmetricKernel> = idx.iter().map(|&i| &element.kernels[i]).collect();
        acc.add(mult * partition_sum(&kernels, &element.space, class, guard)?);
    }
    Ok(acc.value())
}

/// `κ_1, ..., κ_{m_max}`.
pub fn element_cumulants(element: &ChaosElement, m_max: usize, guard: Guard) -> Result<Vec<f64>> {
    (1..=m_max).map(|m| element_cumulant(element, m, guard)).collect()
}

/// `c_{q,k} = 1 / (k q^q)^3`.
pub fn c_qk(q: usize, k: usize) -> f64 {
    let base = k as f64 * (q as f64).powi(q as i32);
    1.0 / base.powi(3)
}

/// Smallest `Δ` with `|κ_m| <= (m!)^{1+γ} / Δ^{m-2}` for `m = 3..=M`, where
/// `cumulants[m-1] = κ_m` of a normalized variable.
pub fn fit_delta(cumulants: &[f64], gamma: f64) -> Result<f64> {
    if cumulants.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "need cumulants up to order at least 3, got {}",
            cumulants.len()
        )));
    }
    if (cumulants[1] - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(cumulants[1]));
    }
    let mut delta = f64::INFINITY;
    for (i, &k) in cumulants.iter().enumerate().skip(2) {
        if k == 0.0 {
            continue;
        }
        let m = i + 1;
        let fact = (factorial(m) as f64).powf(1.0 + gamma);
        delta = delta.min((fact / k.abs()).powf(1.0 / (m - 2) as f64));
    }
    Ok(delta)
}

/// Smallest `α` (integrals) or `β` (U-statistics) with
/// `Var^{-m/2} |∫ (⊗ f_{i_l})_σ dμ^{|σ|}| <= α^{m-2}` for every `m` in
/// `3..=m_max`, every choice of summands and every `σ` in the cumulant class.
pub fn bound_parameter(element: &ChaosElement, m_max: usize, guard: Guard) -> Result<f64> {
    if m_max < 3 {
        return Err(Error::InvalidConfig(format!("m_max must be at least 3, got {m_max}")));
    }
    let var = variance(element)?;
    let class = element.kind.cumulant_class();
    let mut param = 0.0f64;
    for m in 3..=m_max {
        for (idx, _) in multisets(element.kernels.len(), m) {
            let kernels: Vec<&SymmetricKernel> = idx.iter().map(|&i| &element.kernels[i]).collect();
            let largest = partition_max(&kernels, &element.space, class, guard)?;
            let ratio = largest / var.powf(m as f64 / 2.0);
            param = param.max(ratio.powf(1.0 / (m - 2) as f64));
        }
    }
    Ok(param)
}

pub fn alpha_bound(element: &ChaosElement, m_max: usize, guard: Guard) -> Result<f64> {
    if element.kind != ElementKind::WienerIto {
        return Err(Error::InvalidConfig("alpha is defined for Wiener-Itô integrals".into()));
    }
    bound_parameter(element, m_max, guard)
}

pub fn beta_bound(element: &ChaosElement, m_max: usize, guard: Guard) -> Result<f64> {
    if element.kind != ElementKind::UStatistic {
        return Err(Error::InvalidConfig("beta is defined for U-statistics".into()));
    }
    bound_parameter(element, m_max, guard)
}

/// `2 exp(-¼ min{z² / 2^{1+γ}, (zΔ)^{1/(1+γ)}})`.
pub fn ci_bound(z: f64, gamma: f64, delta: f64) -> f64 {
    let gauss = z * z / 2f64.powf(1.0 + gamma);
    let heavy = (z * delta).powf(1.0 / (1.0 + gamma));
    2.0 * (-0.25 * gauss.min(heavy)).exp()
}

/// Exact cumulants of an element with the fitted and theorem-derived bound
/// parameters. Non-finite values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub kind: ElementKind,
    pub orders: Vec<usize>,
    pub cumulants: Vec<f64>,
    pub normalized: Vec<f64>,
    pub variance: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha_or_beta: f64,
    pub q: usize,
    pub k: usize,
    pub c_qk: f64,
    /// `c_{q,k} / α` (or `/ β`), the scale the theorems guarantee.
    pub theorem_delta: f64,
}

/// Below `m_max = 3` there is nothing to fit: `Δ` is infinite and `α` (or
/// `β`) is zero.
pub fn cumulant_report(element: &ChaosElement, m_max: usize, guard: Guard) -> Result<CumulantReport> {
    if m_max == 0 {
        return Err(Error::InvalidConfig("m_max must be positive".into()));
    }
    let variance = variance(element)?;
    let cumulants = element_cumulants(element, m_max, guard)?;
    let normalized: Vec<f64> = cumulants
        .iter()
        .enumerate()
        .map(|(i, &k)| if i == 0 { 0.0 } else { k / variance.powf((i + 1) as f64 / 2.0) })
        .collect();
    let q = element.max_order();
    let k = element.num_summands();
    let gamma = (q - 1) as f64;
    let (delta, alpha_or_beta) = if m_max >= 3 {
        (fit_delta(&normalized, gamma)?, bound_parameter(element, m_max, guard)?)
    } else {
        (f64::INFINITY, 0.0)
    };
    let c = c_qk(q, k);
    Ok(CumulantReport {
        kind: element.kind,
        orders: (1..=m_max).collect(),
        cumulants,
        normalized,
        variance,
        gamma,
        delta,
        alpha_or_beta,
        q,
        k,
        c_qk: c,
        theorem_delta: c / alpha_or_beta,
    })
}

/// Relative gap between `E[I(f1) ... I(fm)]` and the same moment rebuilt
/// from joint cumulants over all set partitions of the factors.
pub fn moment_cumulant_consistency(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    guard: Guard,
) -> Result<f64> {
    let m = kernels.len();
    if !(1..=4).contains(&m) {
        return Err(Error::InvalidConfig(format!("consistency check needs 1..=4 factors, got {m}")));
    }
    let moment = wi_joint_moment(kernels, space, guard)?;
    let rows = DiagramShape::uniform(1, m)?;
    let mut rebuilt = CompensatedSum::default();
    for rho in enumerate(&rows, PartitionClass::All)? {
        let mut term = 1.0;
        for block in rho.blocks() {
            let sub: Vec<&SymmetricKernel> = block.iter().map(|&i| kernels[i]).collect();
            term *= wi_joint_cumulant(&sub, space, guard)?;
        }
        rebuilt.add(term);
    }
    let rebuilt = rebuilt.value();
    let scale = moment.abs().max(rebuilt.abs());
    Ok(if scale == 0.0 { 0.0 } else { (moment - rebuilt).abs() / scale })
}
