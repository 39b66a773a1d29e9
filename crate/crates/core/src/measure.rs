//! Finite weighted atom spaces, symmetric kernels on them, and the merged
//! tensor integrals `∫ (f1 ⊗ ... ⊗ fm)_σ dμ^{|σ|}`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{binomial, DiagramPartition, DiagramShape};

/// Largest number of stored values for a dense kernel.
pub const MAX_KERNEL_VALUES: usize = 1_000_000;

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// A finite set of atoms with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpace {
    ids: Vec<String>,
    weights: Vec<f64>,
}

impl AtomSpace {
    pub fn new(ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if ids.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} ids but {} weights",
                ids.len(),
                weights.len()
            )));
        }
        if let Some((id, w)) = ids.iter().zip(&weights).find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("atom {id:?} has weight {w}")));
        }
        let mut seen = HashMap::new();
        for (i, id) in ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::InvalidMeasure(format!("duplicate atom id {id:?}")));
            }
        }
        Ok(Self { ids, weights })
    }

    /// Atoms named `x1, x2, ...` with the given weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let ids = (1..=weights.len()).map(|i| format!("x{i}")).collect();
        Self::new(ids, weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().copied().collect::<CompensatedSum>().value()
    }

    /// The same atoms with every weight multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.ids.clone(), self.weights.iter().map(|w| w * t).collect())
    }
}

/// A symmetric function on `q`-tuples of atoms, stored as a dense
/// row-major tensor with `n^q` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKernel {
    order: usize,
    atoms: usize,
    values: Vec<f64>,
}

fn dense_len(atoms: usize, order: usize) -> Result<usize> {
    let too_large = || Error::KernelTooLarge { atoms, order };
    let len = atoms.checked_pow(order as u32).ok_or_else(too_large)?;
    if len > MAX_KERNEL_VALUES {
        return Err(too_large());
    }
    Ok(len)
}

impl SymmetricKernel {
    /// Builds a kernel from its values on nondecreasing tuples.
    pub fn from_fn<F>(order: usize, atoms: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        if order == 0 {
            return Err(Error::InvalidKernel("order must be positive".into()));
        }
        let len = dense_len(atoms, order)?;
        let mut values = vec![0.0; len];
        let mut tuple = vec![0usize; order];
        let mut sorted = vec![0usize; order];
        for idx in 0..len {
            sorted.copy_from_slice(&tuple);
            sorted.sort_unstable();
            // the sorted rearrangement is the lexicographically smallest, so it
            // has already been filled unless it is the tuple itself
            values[idx] = if sorted == tuple {
                let v = f(&tuple);
                if !v.is_finite() {
                    return Err(Error::InvalidKernel(format!("value at {tuple:?} is {v}")));
                }
                v
            } else {
                values[flat_index(&sorted, atoms)]
            };
            increment(&mut tuple, atoms);
        }
        Ok(Self { order, atoms, values })
    }

    pub fn constant(order: usize, atoms: usize, c: f64) -> Result<Self> {
        Self::from_fn(order, atoms, |_| c)
    }

    /// Wraps a full tensor, checking that it is symmetric.
    pub fn from_dense(order: usize, atoms: usize, values: Vec<f64>) -> Result<Self> {
        let len = dense_len(atoms, order)?;
        if values.len() != len {
            return Err(Error::InvalidKernel(format!("expected {len} values, got {}", values.len())));
        }
        let kernel = Self::from_fn(order, atoms, |t| values[flat_index(t, atoms)])?;
        if kernel.values != values {
            return Err(Error::InvalidKernel("tensor is not symmetric".into()));
        }
        Ok(kernel)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms
    }

    pub fn value(&self, tuple: &[usize]) -> f64 {
        debug_assert_eq!(tuple.len(), self.order);
        self.values[flat_index(tuple, self.atoms)]
    }

    /// Dense row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        if self.atoms != other.atoms {
            return Err(Error::ShapeMismatch(format!(
                "kernels on {} and {} atoms",
                self.atoms, other.atoms
            )));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub(crate) fn check_space(&self, space: &AtomSpace) -> Result<()> {
        if self.atoms != space.len() {
            return Err(Error::ShapeMismatch(format!(
                "kernel on {} atoms, space has {}",
                self.atoms,
                space.len()
            )));
        }
        Ok(())
    }
}

fn flat_index(tuple: &[usize], atoms: usize) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * atoms + x)
}

fn increment(tuple: &mut [usize], atoms: usize) {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < atoms {
            return;
        }
        *slot = 0;
    }
}

/// Integrates out the last axis of a dense tensor against the weights.
fn contract_last(values: &[f64], weights: &[f64]) -> Vec<f64> {
    values
        .chunks_exact(weights.len())
        .map(|row| row.iter().zip(weights).map(|(v, w)| v * w).collect::<CompensatedSum>().value())
        .collect()
}

/// `∫ f dμ^q`.
pub fn integral(f: &SymmetricKernel, space: &AtomSpace) -> Result<f64> {
    f.check_space(space)?;
    let mut values = f.values.clone();
    for _ in 0..f.order {
        values = contract_last(&values, space.weights());
    }
    Ok(values[0])
}

/// `f_i(y_1..y_i) = C(q, i) ∫ f(y_1..y_i, x_1..x_{q-i}) dμ^{q-i}(x)`.
pub fn marginal_kernel(f: &SymmetricKernel, space: &AtomSpace, i: usize) -> Result<SymmetricKernel> {
    f.check_space(space)?;
    if i == 0 || i > f.order {
        return Err(Error::IndexOutOfRange { index: i, max: f.order });
    }
    let mut values = f.values.clone();
    for _ in i..f.order {
        values = contract_last(&values, space.weights());
    }
    let c = binomial(f.order, i) as f64;
    values.iter_mut().for_each(|v| *v *= c);
    Ok(SymmetricKernel { order: i, atoms: f.atoms, values })
}

/// `⟨f, g⟩` in `L²(μ^q)`.
pub fn inner_product(f: &SymmetricKernel, g: &SymmetricKernel, space: &AtomSpace) -> Result<f64> {
    if f.order != g.order {
        return Err(Error::OrderMismatch(f.order, g.order));
    }
    f.check_space(space)?;
    g.check_space(space)?;
    let mut values: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    for _ in 0..f.order {
        values = contract_last(&values, space.weights());
    }
    Ok(values[0])
}

pub fn l2_norm_sq(f: &SymmetricKernel, space: &AtomSpace) -> Result<f64> {
    inner_product(f, f, space)
}

/// A table over a sorted list of block variables.
struct Factor {
    vars: Vec<usize>,
    data: Vec<f64>,
}

/// `∫ (f1 ⊗ ... ⊗ fm)_σ dμ^{|σ|}`: every element of a block of `σ` gets the
/// same atom, each kernel reads its row, and each block carries the weight
/// of its atom.
///
/// The sum over `|X|^{|σ|}` assignments is organized as variable
/// elimination. Blocks are variables and each kernel is a factor on the
/// blocks meeting its row; because kernels are symmetric, that factor is
/// the kernel tensor itself with the blocks in ascending order. Blocks are
/// eliminated greedily, always picking one whose elimination touches the
/// fewest variables.
pub fn merged_tensor_integral(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    sigma: &DiagramPartition,
) -> Result<f64> {
    let shape = sigma.shape();
    if kernels.len() != shape.num_rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} kernels for a diagram with {} rows",
            kernels.len(),
            shape.num_rows()
        )));
    }
    for (row, (k, &q)) in kernels.iter().zip(shape.rows()).enumerate() {
        if k.order != q {
            return Err(Error::ShapeMismatch(format!(
                "row {} has {q} elements, kernel has order {}",
                row + 1,
                k.order
            )));
        }
        k.check_space(space)?;
    }
    if !sigma.is_row_compatible() {
        return Err(Error::NotRowCompatible);
    }
    Ok(merged_integral_unchecked(kernels, space, shape, sigma.blocks()))
}

/// Variable elimination for [`merged_tensor_integral`] on canonical blocks
/// already known to fit the kernels.
pub(crate) fn merged_integral_unchecked(
    kernels: &[&SymmetricKernel],
    space: &AtomSpace,
    shape: &DiagramShape,
    blocks: &[Vec<usize>],
) -> f64 {
    let n = space.len();
    let mut labels = vec![0; shape.total()];
    for (b, block) in blocks.iter().enumerate() {
        for &e in block {
            labels[e] = b;
        }
    }
    let mut factors: Vec<Factor> = kernels
        .iter()
        .enumerate()
        .map(|(row, k)| {
            let mut vars: Vec<usize> = shape.row_range(row).map(|e| labels[e]).collect();
            vars.sort_unstable();
            Factor { vars, data: k.values.clone() }
        })
        .collect();

    let mut remaining: Vec<usize> = (0..blocks.len()).collect();
    while !remaining.is_empty() {
        let (pos, var) = remaining
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(_, v)| (union_vars(&factors, v).len(), v))
            .expect("nonempty");
        remaining.swap_remove(pos);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        factors.push(eliminate(&touching, var, n, space.weights()));
    }

    factors.iter().map(|f| f.data[0]).product()
}

fn union_vars(factors: &[Factor], var: usize) -> Vec<usize> {
    let mut vars: Vec<usize> = factors
        .iter()
        .filter(|f| f.vars.contains(&var))
        .flat_map(|f| f.vars.iter().copied())
        .collect();
    vars.sort_unstable();
    vars.dedup();
    vars
}

/// Sums `var` out of the product of `touching`, weighting each atom.
fn eliminate(touching: &[Factor], var: usize, n: usize, weights: &[f64]) -> Factor {
    let mut union: Vec<usize> = touching.iter().flat_map(|f| f.vars.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let kept: Vec<usize> = union.iter().copied().filter(|&v| v != var).collect();

    // strides[f][j]: step in factor f's table per unit of kept variable j
    let stride_in = |f: &Factor, v: usize| -> usize {
        match f.vars.iter().position(|&u| u == v) {
            Some(p) => n.pow((f.vars.len() - 1 - p) as u32),
            None => 0,
        }
    };
    let strides: Vec<Vec<usize>> =
        touching.iter().map(|f| kept.iter().map(|&v| stride_in(f, v)).collect()).collect();
    let var_strides: Vec<usize> = touching.iter().map(|f| stride_in(f, var)).collect();

    let len = n.pow(kept.len() as u32);
    let mut data = Vec::with_capacity(len);
    let mut assignment = vec![0usize; kept.len()];
    let mut base = vec![0usize; touching.len()];
    for _ in 0..len {
        for (b, s) in base.iter_mut().zip(&strides) {
            *b = assignment.iter().zip(s).map(|(a, s)| a * s).sum();
        }
        let mut acc = CompensatedSum::default();
        for (x, &w) in weights.iter().enumerate() {
            let mut term = w;
            for ((f, b), vs) in touching.iter().zip(&base).zip(&var_strides) {
                term *= f.data[b + x * vs];
            }
            acc.add(term);
        }
        data.push(acc.value());
        increment(&mut assignment, n);
    }
    Factor { vars: kept, data }
}

/// JSON file holding a weighted atom set and named kernels. Tuples not
/// listed take the kernel's `default` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub atoms: Vec<AtomEntry>,
    pub kernels: Vec<KernelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomEntry {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub name: String,
    pub order: usize,
    #[serde(default)]
    pub entries: Vec<TupleValue>,
    #[serde(default)]
    pub default: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleValue {
    pub tuple: Vec<String>,
    pub value: f64,
}

/// A named kernel after resolution against its atom space.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedKernel {
    pub name: String,
    pub kernel: SymmetricKernel,
}

impl KernelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!("kernel file: {e}"))
        })
    }

    pub fn space(&self) -> Result<AtomSpace> {
        AtomSpace::new(
            self.atoms.iter().map(|a| a.id.clone()).collect(),
            self.atoms.iter().map(|a| a.weight).collect(),
        )
    }

    pub fn resolve(&self) -> Result<(AtomSpace, Vec<NamedKernel>)> {
        let space = self.space()?;
        let mut kernels = Vec::with_capacity(self.kernels.len());
        for entry in &self.kernels {
            kernels.push(NamedKernel { name: entry.name.clone(), kernel: entry.resolve(&space)? });
        }
        Ok((space, kernels))
    }

    /// Lists every nonzero value on nondecreasing tuples, with default 0.
    pub fn from_parts(space: &AtomSpace, kernels: &[NamedKernel]) -> Self {
        let atoms = space
            .ids()
            .iter()
            .zip(space.weights())
            .map(|(id, &weight)| AtomEntry { id: id.clone(), weight })
            .collect();
        let kernels = kernels
            .iter()
            .map(|nk| {
                let k = &nk.kernel;
                let mut entries = Vec::new();
                let mut tuple = vec![0usize; k.order];
                for idx in 0..k.values.len() {
                    let v = k.values[idx];
                    if v != 0.0 && tuple.windows(2).all(|w| w[0] <= w[1]) {
                        entries.push(TupleValue {
                            tuple: tuple.iter().map(|&a| space.ids()[a].clone()).collect(),
                            value: v,
                        });
                    }
                    increment(&mut tuple, k.atoms);
                }
                KernelEntry { name: nk.name.clone(), order: k.order, entries, default: 0.0 }
            })
            .collect();
        Self { atoms, kernels }
    }
}

impl KernelEntry {
    fn resolve(&self, space: &AtomSpace) -> Result<SymmetricKernel> {
        let mut table: HashMap<Vec<usize>, f64> = HashMap::new();
        for tv in &self.entries {
            if tv.tuple.len() != self.order {
                return Err(Error::InvalidKernel(format!(
                    "kernel {:?}: tuple {:?} has length {}, order is {}",
                    self.name,
                    tv.tuple,
                    tv.tuple.len(),
                    self.order
                )));
            }
            let mut key = Vec::with_capacity(self.order);
            for id in &tv.tuple {
                let idx = space.index_of(id).ok_or_else(|| {
                    Error::InvalidKernel(format!("kernel {:?}: unknown atom {id:?}", self.name))
                })?;
                key.push(idx);
            }
            key.sort_unstable();
            if table.insert(key, tv.value).is_some() {
                return Err(Error::InvalidKernel(format!(
                    "kernel {:?}: tuple {:?} listed twice",
                    self.name, tv.tuple
                )));
            }
        }
        SymmetricKernel::from_fn(self.order, space.len(), |t| {
            table.get(t).copied().unwrap_or(self.default)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition(rows: &[usize], text: &str) -> DiagramPartition {
        DiagramPartition::parse(&DiagramShape::new(rows.to_vec()).unwrap(), text).unwrap()
    }

    #[test]
    fn kernel_is_symmetric() {
        let f = SymmetricKernel::from_fn(3, 3, |t| (t[0] + 10 * t[1] + 100 * t[2]) as f64).unwrap();
        assert_eq!(f.value(&[2, 0, 1]), 210.0);
        assert_eq!(f.value(&[1, 2, 0]), 210.0);
        assert!(SymmetricKernel::from_dense(2, 2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn dense_guard() {
        assert_eq!(
            SymmetricKernel::constant(7, 8, 1.0),
            Err(Error::KernelTooLarge { atoms: 8, order: 7 })
        );
    }

    #[test]
    fn order_one_integral() {
        let space = AtomSpace::from_weights(vec![0.5, 2.0]).unwrap();
        let f = SymmetricKernel::from_fn(1, 2, |t| [3.0, -1.0][t[0]]).unwrap();
        let v = merged_tensor_integral(&[&f], &space, &partition(&[1], "1")).unwrap();
        assert_eq!(v, 1.5 - 2.0);
    }

    #[test]
    fn matching_gives_squared_norm() {
        let space = AtomSpace::from_weights(vec![1.0, 2.0, 0.5]).unwrap();
        let f = SymmetricKernel::from_fn(2, 3, |t| 1.0 + t[0] as f64 * 0.5 - t[1] as f64).unwrap();
        let v = merged_tensor_integral(&[&f, &f], &space, &partition(&[2, 2], "1,3|2,4")).unwrap();
        assert!((v - l2_norm_sq(&f, &space).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn single_atom_triple_block() {
        let space = AtomSpace::from_weights(vec![1.0]).unwrap();
        let f = SymmetricKernel::constant(1, 1, 1.7).unwrap();
        let v = merged_tensor_integral(&[&f, &f, &f], &space, &partition(&[1, 1, 1], "1,2,3"))
            .unwrap();
        assert!((v - 1.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn marginal_examples() {
        let one = AtomSpace::from_weights(vec![1.0]).unwrap();
        let f = SymmetricKernel::constant(2, 1, 0.7).unwrap();
        assert_eq!(marginal_kernel(&f, &one, 2).unwrap(), f);
        assert_eq!(marginal_kernel(&f, &one, 1).unwrap().values(), &[1.4]);
        let two = AtomSpace::from_weights(vec![1.0, 1.0]).unwrap();
        let g = SymmetricKernel::constant(2, 2, 1.0).unwrap();
        assert_eq!(marginal_kernel(&g, &two, 1).unwrap().values(), &[4.0, 4.0]);
        assert_eq!(
            marginal_kernel(&g, &two, 3),
            Err(Error::IndexOutOfRange { index: 3, max: 2 })
        );
    }

    #[test]
    fn inner_products() {
        let space = AtomSpace::from_weights(vec![2.0, 3.0]).unwrap();
        let one = SymmetricKernel::constant(1, 2, 1.0).unwrap();
        assert_eq!(l2_norm_sq(&one, &space).unwrap(), 5.0);
        let a = SymmetricKernel::from_fn(1, 2, |t| (t[0] == 0) as u8 as f64).unwrap();
        let b = SymmetricKernel::from_fn(1, 2, |t| (t[0] == 1) as u8 as f64).unwrap();
        assert_eq!(inner_product(&a, &b, &space).unwrap(), 0.0);
        let c = SymmetricKernel::constant(2, 2, 1.0).unwrap();
        assert_eq!(inner_product(&a, &c, &space), Err(Error::OrderMismatch(1, 2)));
    }

    #[test]
    fn kernel_file_round_trip() {
        let text = r#"{
            "atoms": [{"id": "a", "weight": 1.0}, {"id": "b", "weight": 0.5}],
            "kernels": [{"name": "f", "order": 2,
                         "entries": [{"tuple": ["b", "a"], "value": 2.0}],
                         "default": 1.0}]
        }"#;
        let file = KernelFile::from_json(text).unwrap();
        let (space, kernels) = file.resolve().unwrap();
        assert_eq!(kernels[0].kernel.values(), &[1.0, 2.0, 2.0, 1.0]);
        let again = KernelFile::from_parts(&space, &kernels).resolve().unwrap();
        assert_eq!(again.1, kernels);
    }

    #[test]
    fn kernel_file_errors() {
        let bad = r#"{"atoms": [{"id": "a", "weight": 1.0}],
                      "kernels": [{"name": "f", "order": 1, "entries": [{"tuple": ["z"], "value": 1}]}]}"#;
        assert!(matches!(KernelFile::from_json(bad).unwrap().resolve(), Err(Error::InvalidKernel(_))));
        let err = KernelFile::from_json("{\n  \"atoms\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
