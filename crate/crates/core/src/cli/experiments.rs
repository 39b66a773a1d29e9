use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::apps::{fixed, ou, rgg};
use crate::chaos::{c_qk, ci_bound, cumulant_report, element_cumulants, ChaosElement, ElementKind};
use crate::charlier::{charlier, poisson_moment};
use crate::measure::{KernelFile, SymmetricKernel};
use crate::sim::{
    cramer_ratio, eval_ustat, k_statistics, replicate, sample_with, tail_check, CharlierSampler,
    PathwiseIntegral, TailRow,
};

use super::{CliError, ExperimentSpec, Globals, Report, Table};

/// Standardized deviations at which tails are compared with the bounds.
pub const DEFAULT_Z_GRID: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
/// Largest accepted `|estimate - exact| / se`.
pub const SE_LIMIT: f64 = 5.0;

fn default_z_grid() -> Vec<f64> {
    DEFAULT_Z_GRID.to_vec()
}

fn one() -> f64 {
    1.0
}

/// One summand `coefficient · kernel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub kernel: String,
    #[serde(default = "one")]
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: KernelFile,
    pub kind: ElementKind,
    /// Empty means every kernel with coefficient one.
    #[serde(default)]
    pub terms: Vec<Term>,
    /// Intensity multiplier applied to the atom weights.
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedKernelRunConfig {
    pub model: KernelFile,
    /// Defaults to the first kernel in the model.
    #[serde(default)]
    pub kernel: Option<String>,
    pub t: f64,
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RggRunConfig {
    #[serde(flatten)]
    pub model: rgg::RggConfig,
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuRunConfig {
    #[serde(flatten)]
    pub model: ou::OuConfig,
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharlierSimConfig {
    pub q: usize,
    pub n: u64,
    pub z_grid: Vec<f64>,
}

/// Reads a config, or the spec embedded in an earlier summary. Values from
/// the summary fill in globals not given on the command line.
fn load<T: DeserializeOwned>(path: &Path, command: &str, g: &Globals) -> Result<(T, Globals), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let located = |e: serde_json::Error| {
        CliError::Input(format!("{}: {e}", path.display()))
    };
    let value: Value = serde_json::from_str(&text).map_err(located)?;
    let Some(spec) = value.get("spec") else {
        return Ok((serde_json::from_str(&text).map_err(located)?, *g));
    };
    let spec: ExperimentSpec<T> = serde_json::from_value(spec.clone())
        .map_err(|e| CliError::Input(format!("{}: spec: {e}", path.display())))?;
    if spec.command != command {
        return Err(CliError::Input(format!(
            "{}: summary is for {:?}, not {command:?}",
            path.display(),
            spec.command
        )));
    }
    let merged = Globals {
        seed: g.seed.or(Some(spec.seed)),
        replicas: g.replicas.or(Some(spec.replicas)),
        guard_n: g.guard_n.or(Some(spec.guard_n)),
    };
    Ok((spec.config, merged))
}

fn values_table(values: &[f64]) -> Table {
    let mut table = Table::new(&["replica", "value"]);
    for (i, v) in values.iter().enumerate() {
        table.push(vec![i.to_string(), v.to_string()]);
    }
    table
}

fn z_within(z: &[f64]) -> bool {
    z.iter().all(|&z| z <= SE_LIMIT)
}

fn tails_hold(rows: &[TailRow]) -> bool {
    rows.iter().all(|r| r.holds)
}

fn check_z_grid(z_grid: &[f64]) -> Result<(), CliError> {
    if z_grid.is_empty() || z_grid.iter().any(|z| !(*z >= 0.0 && z.is_finite())) {
        return Err(CliError::Input("z_grid needs finite nonnegative values".into()));
    }
    Ok(())
}

fn collect<T>(results: Vec<crate::Result<T>>) -> Result<Vec<T>, CliError> {
    Ok(results.into_iter().collect::<crate::Result<Vec<T>>>()?)
}

enum Evaluator {
    Integral(PathwiseIntegral),
    Ustat(SymmetricKernel),
}

pub(super) fn simulate(path: &Path, g: &Globals) -> Result<Report, CliError> {
    let (mut cfg, g): (SimulateConfig, _) = load(path, "simulate", g)?;
    check_z_grid(&cfg.z_grid)?;
    let (space, kernels) = cfg.model.resolve()?;
    if cfg.terms.is_empty() {
        cfg.terms = kernels.iter().map(|k| Term { kernel: k.name.clone(), coefficient: 1.0 }).collect();
    }
    let mut chosen = Vec::with_capacity(cfg.terms.len());
    for term in &cfg.terms {
        let k = kernels
            .iter()
            .find(|k| k.name == term.kernel)
            .ok_or_else(|| CliError::Input(format!("no kernel named {:?}", term.kernel)))?;
        chosen.push((term.coefficient, k.kernel.clone()));
    }
    if !(cfg.t > 0.0 && cfg.t.is_finite()) {
        return Err(CliError::Input(format!("t must be positive, got {}", cfg.t)));
    }
    let intensity = space.scaled(cfg.t)?;
    let element = ChaosElement::new(cfg.kind, intensity.clone(), chosen.clone())?;
    let exact = cumulant_report(&element, 4, g.guard())?;
    let evaluators: Vec<(f64, Evaluator)> = chosen
        .into_iter()
        .map(|(c, f)| {
            Ok((
                c,
                match cfg.kind {
                    ElementKind::WienerIto => Evaluator::Integral(PathwiseIntegral::new(&f, &intensity)?),
                    ElementKind::UStatistic => Evaluator::Ustat(f),
                },
            ))
        })
        .collect::<crate::Result<_>>()?;
    let spec = g.spec("simulate", cfg);
    let cfg = &spec.config;
    let values = collect(replicate(spec.seed, spec.replicas, |_, rng| {
        let sample = sample_with(&space, cfg.t, rng);
        let mut total = 0.0;
        for (c, e) in &evaluators {
            total += c * match e {
                Evaluator::Integral(p) => p.eval(&sample)?,
                Evaluator::Ustat(f) => eval_ustat(&sample, f)?,
            };
        }
        Ok(total)
    }))?;
    let stats = k_statistics(&values)?;
    let target: [f64; 4] = std::array::from_fn(|j| exact.cumulants[j]);
    let z = stats.z_scores(&target);
    let (gamma, delta) = (exact.gamma, exact.theorem_delta);
    let tails = tail_check(&values, target[0], exact.variance, &cfg.z_grid, |z| ci_bound(z, gamma, delta));
    let sd = exact.variance.sqrt();
    let standardized: Vec<f64> = values.iter().map(|v| (v - target[0]) / sd).collect();
    let cramer = cramer_ratio(&standardized, &cfg.z_grid);
    let cumulants_ok = z_within(&z);
    let tails_ok = tails_hold(&tails);
    let summary = json!({
        "spec": spec,
        "exact": exact,
        "empirical": stats,
        "z_scores": z,
        "tail": tails,
        "cramer": cramer,
        "checks": { "cumulants_within_se": cumulants_ok, "tail_bound": tails_ok },
    });
    Ok(Report::new(summary, values_table(&values), "batch.csv")?
        .fail_unless(cumulants_ok, "k-statistics differ from exact cumulants")
        .fail_unless(tails_ok, "tail frequency above the concentration bound"))
}

pub(super) fn fixed_kernel(path: &Path, g: &Globals) -> Result<Report, CliError> {
    let (mut cfg, g): (FixedKernelRunConfig, _) = load(path, "fixed-kernel", g)?;
    check_z_grid(&cfg.z_grid)?;
    let (space, kernels) = cfg.model.resolve()?;
    let named = match &cfg.kernel {
        Some(name) => kernels
            .iter()
            .find(|k| &k.name == name)
            .ok_or_else(|| CliError::Input(format!("no kernel named {name:?}")))?,
        None => kernels.first().ok_or_else(|| CliError::Input("model has no kernels".into()))?,
    };
    cfg.kernel = Some(named.name.clone());
    let f = named.kernel.clone();
    let model = fixed::FixedKernelConfig::new(space.clone(), f.clone(), cfg.t)?;
    let constants = fixed::summary(&model)?;
    let element = ChaosElement::single(ElementKind::UStatistic, space.scaled(cfg.t)?, f.clone())?;
    let exact = element_cumulants(&element, 4, g.guard())?;
    let variance = crate::chaos::variance(&element)?;
    let spec = g.spec("fixed-kernel", cfg);
    let cfg = &spec.config;
    let values = collect(replicate(spec.seed, spec.replicas, |_, rng| eval_ustat(&sample_with(&space, cfg.t, rng), &f)))?;
    let stats = k_statistics(&values)?;
    let target: [f64; 4] = std::array::from_fn(|j| exact[j]);
    let z = stats.z_scores(&target);
    let gamma = (f.order() - 1) as f64;
    let tau = constants.tau;
    let tails = tail_check(&values, target[0], variance, &cfg.z_grid, |z| ci_bound(z, gamma, tau));
    let cumulants_ok = z_within(&z);
    let tails_ok = tails_hold(&tails);
    let summary = json!({
        "spec": spec,
        "constants": constants,
        "exact_cumulants": exact,
        "empirical": stats,
        "z_scores": z,
        "tail": tails,
        "checks": { "cumulants_within_se": cumulants_ok, "tail_bound": tails_ok },
    });
    Ok(Report::new(summary, values_table(&values), "batch.csv")?
        .fail_unless(cumulants_ok, "k-statistics differ from exact cumulants")
        .fail_unless(tails_ok, "tail frequency above the concentration bound"))
}

pub(super) fn rgg(path: &Path, g: &Globals) -> Result<Report, CliError> {
    let (cfg, g): (RggRunConfig, _) = load(path, "rgg", g)?;
    check_z_grid(&cfg.z_grid)?;
    cfg.model.validate()?;
    let tau = rgg::tau_rgg(&cfg.model)?;
    let spec = g.spec("rgg", cfg);
    let model = &spec.config.model;
    let runs = collect(replicate(spec.seed, spec.replicas, |_, rng| {
        let points = rgg::sample_points(model, rng);
        Ok((points.len(), rgg::statistic(model, &points)?))
    }))?;
    let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let stats = k_statistics(&values)?;
    let variance_check = rgg::vrgg_bound(model, stats.k[1], stats.se[1])?;
    let q = model.graphs.iter().map(|t| t.graph.vertices).max().unwrap_or(1);
    let gamma = (q - 1) as f64;
    let tails = tail_check(&values, stats.k[0], stats.k[1], &spec.config.z_grid, |z| ci_bound(z, gamma, tau));
    let tails_ok = tails_hold(&tails);
    let mut table = Table::new(&["replica", "points", "value"]);
    for (i, (n, v)) in runs.iter().enumerate() {
        table.push(vec![i.to_string(), n.to_string(), v.to_string()]);
    }
    let variance_ok = variance_check.holds;
    let summary = json!({
        "spec": spec,
        "tau": tau,
        "unit_ball_volume": rgg::unit_ball_volume(model.dimension),
        "variance_check": variance_check,
        "empirical": stats,
        "tail": tails,
        "checks": { "variance_bound": variance_ok, "tail_bound": tails_ok },
    });
    Ok(Report::new(summary, table, "batch.csv")?
        .fail_unless(variance_ok, "estimated variance below the assumed lower bound")
        .fail_unless(tails_ok, "tail frequency above the concentration bound"))
}

pub(super) fn ou(path: &Path, g: &Globals) -> Result<Report, CliError> {
    let (cfg, g): (OuRunConfig, _) = load(path, "ou", g)?;
    check_z_grid(&cfg.z_grid)?;
    cfg.model.validate()?;
    let exact = ou::summary(&cfg.model)?;
    let spec = g.spec("ou", cfg);
    let model = &spec.config.model;
    let values = replicate(spec.seed, spec.replicas, |_, rng| ou::ou_simulate(model, rng));
    let stats = k_statistics(&values)?;
    let mean_z = (stats.k[0] - exact.mean).abs() / stats.se[0];
    let var_z = (stats.k[1] - exact.variance).abs() / stats.se[1];
    let tau = exact.tau;
    let tails = tail_check(&values, exact.mean, exact.variance, &spec.config.z_grid, |z| ci_bound(z, 1.0, tau));
    let moments_ok = z_within(&[mean_z, var_z]);
    let tails_ok = tails_hold(&tails);
    let summary = json!({
        "spec": spec,
        "exact": exact,
        "empirical": stats,
        "mean_z": mean_z,
        "variance_z": var_z,
        "tail": tails,
        "checks": { "moments_within_se": moments_ok, "tail_bound": tails_ok },
    });
    Ok(Report::new(summary, values_table(&values), "batch.csv")?
        .fail_unless(moments_ok, "mean or variance of Q(T) differs from the exact value")
        .fail_unless(tails_ok, "tail frequency above the concentration bound"))
}

/// Exact cumulants of `S_n / √(n q!)`.
pub fn charlier_sum_cumulants(q: usize, n: u64) -> crate::Result<[f64; 4]> {
    let h = charlier(q);
    let mu = |j: u32| poisson_moment(&h.pow(j), 1e-15);
    let (m2, m3, m4) = (mu(2)?, mu(3)?, mu(4)?);
    let nf = n as f64;
    let var = nf * m2;
    Ok([0.0, 1.0, nf * m3 / var.powf(1.5), nf * (m4 - 3.0 * m2 * m2) / (var * var)])
}

pub(super) fn charlier_simulate(q: usize, n: u64, g: &Globals) -> Result<Report, CliError> {
    if q == 0 || n == 0 {
        return Err(CliError::Input("q and n must be positive".into()));
    }
    let cfg = CharlierSimConfig { q, n, z_grid: DEFAULT_Z_GRID.to_vec() };
    let spec = g.spec("charlier simulate", cfg);
    let sampler = CharlierSampler::new(q, n);
    let q_fact: f64 = (1..=q).map(|i| i as f64).product();
    let scale = (n as f64 * q_fact).sqrt();
    let values = replicate(spec.seed, spec.replicas, |_, rng| sampler.sample(rng) / scale);
    let exact = charlier_sum_cumulants(q, n)?;
    let stats = k_statistics(&values)?;
    let z = stats.z_scores(&exact);
    let gamma = (q - 1) as f64;
    let delta = c_qk(q, 1) * (n as f64).sqrt();
    let tails = tail_check(&values, 0.0, 1.0, &spec.config.z_grid, |z| ci_bound(z, gamma, delta));
    let cramer = cramer_ratio(&values, &spec.config.z_grid);
    let cumulants_ok = z_within(&z);
    let tails_ok = tails_hold(&tails);
    let summary = json!({
        "spec": spec,
        "delta": delta,
        "gamma": gamma,
        "exact_cumulants": exact,
        "empirical": stats,
        "z_scores": z,
        "tail": tails,
        "cramer": cramer,
        "checks": { "cumulants_within_se": cumulants_ok, "tail_bound": tails_ok },
    });
    Ok(Report::new(summary, values_table(&values), "batch.csv")?
        .fail_unless(cumulants_ok, "k-statistics differ from exact cumulants")
        .fail_unless(tails_ok, "tail frequency above the concentration bound"))
}
