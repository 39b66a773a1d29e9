//! Subgraph counts in random geometric graphs on a box `[0, L]^d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{poisson, MAX_TUPLES};

pub const MAX_GRAPH_VERTICES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Induced,
    Subgraph,
}

/// A small connected pattern graph on vertices `0..vertices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl PatternGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Self { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn path(vertices: usize) -> Self {
        Self { vertices, edges: (1..vertices).map(|i| (i - 1, i)).collect() }
    }

    pub fn complete(vertices: usize) -> Self {
        let edges = (0..vertices).flat_map(|i| (i + 1..vertices).map(move |j| (i, j))).collect();
        Self { vertices, edges }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.vertices;
        if q == 0 || q > MAX_GRAPH_VERTICES {
            return Err(Error::InvalidConfig(format!(
                "pattern graphs need 1..={MAX_GRAPH_VERTICES} vertices, got {q}"
            )));
        }
        for &(a, b) in &self.edges {
            if a >= q || b >= q || a == b {
                return Err(Error::InvalidConfig(format!("bad edge ({a}, {b}) for {q} vertices")));
            }
        }
        // connectivity by flooding from vertex 0
        let adj = self.mask();
        let mut seen = 1u32;
        loop {
            let mut next = seen;
            for i in 0..q {
                if seen >> i & 1 == 1 {
                    for j in 0..q {
                        if adj & (1 << pair_bit(i, j)) != 0 && i != j {
                            next |= 1 << j;
                        }
                    }
                }
            }
            if next == seen {
                break;
            }
            seen = next;
        }
        if seen != (1 << q) - 1 {
            return Err(Error::InvalidConfig("pattern graph must be connected".into()));
        }
        Ok(())
    }

    /// Edge set as a bitmask over the pairs `i < j`.
    fn mask(&self) -> u32 {
        self.edges.iter().fold(0, |m, &(a, b)| m | 1 << pair_bit(a, b))
    }
}

/// Bit index of the unordered pair `{i, j}` among 4 vertices.
fn pair_bit(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * MAX_GRAPH_VERTICES + b
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..q).collect();
    heap_permute(q, &mut perm, &mut out);
    out
}

fn heap_permute(k: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(perm.clone());
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, perm, out);
        if k.is_multiple_of(2) {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
    }
}

/// For every labelled graph `H` on `q` vertices (by edge mask): whether
/// `H ≅ G` and how many spanning subgraphs of `H` are isomorphic to `G`.
#[derive(Debug, Clone)]
struct PatternTable {
    q: usize,
    induced: Vec<bool>,
    copies: Vec<u32>,
}

impl PatternTable {
    fn new(g: &PatternGraph) -> Self {
        let q = g.vertices;
        let perms = permutations(q);
        let image = |p: &[usize]| g.edges.iter().fold(0u32, |m, &(a, b)| m | 1 << pair_bit(p[a], p[b]));
        let g_mask = g.mask();
        let automorphisms = perms.iter().filter(|p| image(p) == g_mask).count() as u32;
        let images: Vec<u32> = perms.iter().map(|p| image(p)).collect();
        let size = 1usize << (MAX_GRAPH_VERTICES * MAX_GRAPH_VERTICES);
        let mut induced = vec![false; size];
        let mut copies = vec![0u32; size];
        for h in all_masks(q) {
            let embeddings = images.iter().filter(|&&m| m & h == m).count() as u32;
            copies[h as usize] = embeddings / automorphisms;
            induced[h as usize] = images.contains(&h);
        }
        Self { q, induced, copies }
    }
}

/// All edge masks on vertices `0..q`.
fn all_masks(q: usize) -> Vec<u32> {
    let bits: Vec<usize> = (0..q).flat_map(|i| (i + 1..q).map(move |j| pair_bit(i, j))).collect();
    (0..1u32 << bits.len())
        .map(|s| bits.iter().enumerate().filter(|(k, _)| s >> k & 1 == 1).fold(0, |m, (_, &b)| m | 1 << b))
        .collect()
}

fn adjacent(a: &[f64], b: &[f64], r: f64) -> bool {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    d2 > 0.0 && d2.sqrt() <= r
}

/// Induced and non-induced copy counts of one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub induced: u64,
    pub subgraph: u64,
}

/// `S^=(G)` and `S^⊂(G)` for each pattern in `graphs`.
///
/// Only connected vertex subsets can host a copy of a connected pattern, so
/// the connected `q`-subsets of the geometric graph are enumerated once each
/// (ESU extension order) and looked up in a per-pattern table.
pub fn rgg_counts(points: &[Vec<f64>], r: f64, graphs: &[PatternGraph]) -> Result<Vec<GraphCounts>> {
    let n = points.len();
    for g in graphs {
        g.validate()?;
        if (n as f64).powi(g.vertices as i32) > MAX_TUPLES {
            return Err(Error::TooManyPoints { points: n as u64, order: g.vertices });
        }
    }
    let mut neighbours = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if adjacent(&points[i], &points[j], r) {
                neighbours[i].push(j);
                neighbours[j].push(i);
            }
        }
    }
    let tables: Vec<PatternTable> = graphs.iter().map(PatternTable::new).collect();
    let mut counts = vec![GraphCounts { induced: 0, subgraph: 0 }; graphs.len()];
    let max_q = graphs.iter().map(|g| g.vertices).max().unwrap_or(0);
    let mut esu = Esu { neighbours: &neighbours, subset: Vec::with_capacity(max_q) };
    for size in 1..=max_q {
        esu.run(size, &mut |subset| {
            let mask = induced_mask(subset, &neighbours);
            for (t, c) in tables.iter().zip(counts.iter_mut()) {
                if t.q == size {
                    c.induced += t.induced[mask as usize] as u64;
                    c.subgraph += t.copies[mask as usize] as u64;
                }
            }
        });
    }
    Ok(counts)
}

fn induced_mask(subset: &[usize], neighbours: &[Vec<usize>]) -> u32 {
    let mut m = 0;
    for a in 0..subset.len() {
        for b in a + 1..subset.len() {
            if neighbours[subset[a]].contains(&subset[b]) {
                m |= 1 << pair_bit(a, b);
            }
        }
    }
    m
}

struct Esu<'a> {
    neighbours: &'a [Vec<usize>],
    subset: Vec<usize>,
}

impl Esu<'_> {
    fn run(&mut self, size: usize, visit: &mut impl FnMut(&[usize])) {
        for v in 0..self.neighbours.len() {
            self.subset.clear();
            self.subset.push(v);
            let ext: Vec<usize> = self.neighbours[v].iter().copied().filter(|&u| u > v).collect();
            self.extend(size, ext, v, visit);
        }
    }

    fn extend(&mut self, size: usize, mut ext: Vec<usize>, root: usize, visit: &mut impl FnMut(&[usize])) {
        if self.subset.len() == size {
            visit(&self.subset);
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &self.neighbours[w] {
                let exclusive = u > root
                    && !self.subset.contains(&u)
                    && !next.contains(&u)
                    && !self.subset.iter().any(|&s| self.neighbours[s].contains(&u));
                if exclusive {
                    next.push(u);
                }
            }
            self.subset.push(w);
            self.extend(size, next, root, visit);
            self.subset.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTerm {
    pub graph: PatternGraph,
    pub mode: CountMode,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RggConfig {
    pub dimension: usize,
    /// Side length of the observation box.
    pub side: f64,
    pub t: f64,
    pub r: f64,
    pub graphs: Vec<GraphTerm>,
    /// Variance lower-bound constant.
    pub v: f64,
}

impl RggConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        for (name, x) in [("side", self.side), ("t", self.t), ("r", self.r), ("v", self.v)] {
            if !positive(x) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {x}")));
            }
        }
        if self.graphs.is_empty() {
            return Err(Error::InvalidConfig("at least one graph term is required".into()));
        }
        for term in &self.graphs {
            term.graph.validate()?;
            if term.coefficient == 0.0 || !term.coefficient.is_finite() {
                return Err(Error::InvalidConfig("graph coefficients must be finite and nonzero".into()));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dimension as i32)
    }

    fn orders(&self) -> (usize, usize) {
        let qs = self.graphs.iter().map(|g| g.graph.vertices);
        (qs.clone().min().unwrap_or(1), qs.max().unwrap_or(1))
    }

    fn max_coefficient(&self) -> f64 {
        self.graphs.iter().map(|g| g.coefficient.abs()).fold(0.0, f64::max)
    }

    /// `κ_d r^d`.
    fn ball(&self) -> f64 {
        unit_ball_volume(self.dimension) * self.r.powi(self.dimension as i32)
    }
}

/// `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / libm::tgamma(h + 1.0)
}

pub fn tau_rgg(config: &RggConfig) -> Result<f64> {
    config.validate()?;
    let (p, q) = config.orders();
    let k = config.graphs.len() as f64;
    let a = config.max_coefficient();
    let (v, t) = (config.v, config.t);
    let num = (v * t * (t * config.ball()).min(1.0).powi(p as i32 - 1)).sqrt();
    let kq = k * (q as f64).powi(q as i32);
    Ok(num / (kq.powi(3) * a.max(a.powi(3) * config.volume() / v)))
}

/// `v max{t^{2q-1} (κ_d r^d)^{2q-2}, t^p (κ_d r^d)^{p-1}}`.
pub fn vrgg_threshold(config: &RggConfig) -> Result<f64> {
    config.validate()?;
    let (p, q) = config.orders();
    let (t, b) = (config.t, config.ball());
    let dense = t.powi(2 * q as i32 - 1) * b.powi(2 * q as i32 - 2);
    let sparse = t.powi(p as i32) * b.powi(p as i32 - 1);
    Ok(config.v * dense.max(sparse))
}

/// Standard errors of slack allowed when comparing an estimate to the bound.
pub const VARIANCE_SE_MULTIPLIER: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub threshold: f64,
    pub estimate: f64,
    pub se: f64,
    pub holds: bool,
}

/// Whether the estimated variance is consistent with the assumed lower bound.
pub fn vrgg_bound(config: &RggConfig, estimate: f64, se: f64) -> Result<VarianceCheck> {
    let threshold = vrgg_threshold(config)?;
    let holds = estimate + VARIANCE_SE_MULTIPLIER * se >= threshold;
    Ok(VarianceCheck { threshold, estimate, se, holds })
}

/// Uniform Poisson points of intensity `t` in the box.
pub fn sample_points<R: Rng + ?Sized>(config: &RggConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let n = poisson(rng, config.t * config.volume());
    (0..n)
        .map(|_| (0..config.dimension).map(|_| rng.random::<f64>() * config.side).collect())
        .collect()
}

/// `Σ a_i S^{mode_i}(G_i)` for one point configuration.
pub fn statistic(config: &RggConfig, points: &[Vec<f64>]) -> Result<f64> {
    let graphs: Vec<PatternGraph> = config.graphs.iter().map(|g| g.graph.clone()).collect();
    let counts = rgg_counts(points, config.r, &graphs)?;
    Ok(config
        .graphs
        .iter()
        .zip(counts)
        .map(|(term, c)| {
            let s = match term.mode {
                CountMode::Induced => c.induced,
                CountMode::Subgraph => c.subgraph,
            };
            term.coefficient * s as f64
        })
        .sum())
}
