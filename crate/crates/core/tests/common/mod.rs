//! Brute-force references shared by the integration suites. Nothing here
//! calls the enumeration or integration code under test.

#![allow(dead_code)]

use poisson_chaos::measure::{AtomSpace, SymmetricKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All set partitions of `0..n` as restricted-growth strings.
pub fn restricted_growth_strings(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for label in 0..=max + 1 {
            if cur.is_empty() && label > 0 {
                break;
            }
            cur.push(label);
            rec(n, cur, if cur.len() == 1 { 0 } else { max.max(label) }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return vec![Vec::new()];
    }
    rec(n, &mut Vec::with_capacity(n), 0, &mut out);
    out
}

/// Blocks of a restricted-growth string, each sorted, ordered by minimum.
pub fn blocks_of(rgs: &[usize]) -> Vec<Vec<usize>> {
    let k = rgs.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); k];
    for (e, &b) in rgs.iter().enumerate() {
        blocks[b].push(e);
    }
    blocks
}

pub fn row_of(rows: &[usize], e: usize) -> usize {
    let mut acc = 0;
    for (r, &q) in rows.iter().enumerate() {
        acc += q;
        if e < acc {
            return r;
        }
    }
    panic!("element {e} outside shape {rows:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flags {
    pub row_compatible: bool,
    pub no_singletons: bool,
    pub connected: bool,
    pub row_covering: bool,
}

pub fn flags(rows: &[usize], blocks: &[Vec<usize>]) -> Flags {
    let m = rows.len();
    let row_compatible = blocks.iter().all(|b| {
        let mut rs: Vec<usize> = b.iter().map(|&e| row_of(rows, e)).collect();
        rs.sort();
        rs.dedup();
        rs.len() == b.len()
    });
    let no_singletons = blocks.iter().all(|b| b.len() > 1);
    // rows reachable from row 0 through shared blocks
    let mut reach = vec![false; m];
    reach[0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for b in blocks {
            let rs: Vec<usize> = b.iter().map(|&e| row_of(rows, e)).collect();
            if rs.iter().any(|&r| reach[r]) {
                for r in rs {
                    if !reach[r] {
                        reach[r] = true;
                        changed = true;
                    }
                }
            }
        }
    }
    let connected = reach.iter().all(|&x| x);
    let row_covering = (0..m).all(|r| blocks.iter().any(|b| b.len() > 1 && b.iter().any(|&e| row_of(rows, e) == r)));
    Flags { row_compatible, no_singletons, connected, row_covering }
}

/// Class membership by tag name, written from the definitions.
pub fn in_class(name: &str, f: Flags) -> bool {
    f.row_compatible
        && match name {
            "all" => true,
            "no-singletons" => f.no_singletons,
            "connected" => f.connected,
            "connected-no-singletons" => f.connected && f.no_singletons,
            "row-covering" => f.row_covering,
            other => panic!("unknown class {other}"),
        }
}

pub const CLASS_NAMES: [&str; 5] = ["all", "no-singletons", "connected", "connected-no-singletons", "row-covering"];

/// `Σ_{assignments of atoms to blocks} Π_blocks w · Π_rows f_ℓ(row tuple)`.
pub fn brute_merged_integral(
    kernels: &[&SymmetricKernel],
    weights: &[f64],
    rows: &[usize],
    blocks: &[Vec<usize>],
) -> f64 {
    let n = weights.len();
    let k = blocks.len();
    let total: usize = rows.iter().sum();
    let mut label = vec![0usize; total];
    for (b, block) in blocks.iter().enumerate() {
        for &e in block {
            label[e] = b;
        }
    }
    let mut assign = vec![0usize; k];
    let mut sum = 0.0;
    loop {
        let mut term: f64 = assign.iter().map(|&a| weights[a]).product();
        let mut start = 0;
        for (r, &q) in rows.iter().enumerate() {
            let tuple: Vec<usize> = (start..start + q).map(|e| assign[label[e]]).collect();
            term *= kernels[r].value(&tuple);
            start += q;
        }
        sum += term;
        let mut i = 0;
        loop {
            if i == k {
                return sum;
            }
            assign[i] += 1;
            if assign[i] < n {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_space(rng: &mut impl Rng, atoms: usize) -> AtomSpace {
    AtomSpace::from_weights((0..atoms).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap()
}

pub fn random_kernel(rng: &mut impl Rng, order: usize, atoms: usize) -> SymmetricKernel {
    SymmetricKernel::from_fn(order, atoms, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_positive_kernel(rng: &mut impl Rng, order: usize, atoms: usize) -> SymmetricKernel {
    SymmetricKernel::from_fn(order, atoms, |_| rng.random_range(0.1..1.0)).unwrap()
}

/// `Σ_x w_x f(x)·g(x)` over all ordered tuples.
pub fn brute_inner(f: &SymmetricKernel, g: &SymmetricKernel, w: &[f64]) -> f64 {
    let q = f.order();
    let n = w.len();
    let mut tuple = vec![0usize; q];
    let mut sum = 0.0;
    for _ in 0..n.pow(q as u32) {
        let weight: f64 = tuple.iter().map(|&a| w[a]).product();
        sum += weight * f.value(&tuple) * g.value(&tuple);
        for slot in tuple.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    sum
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// All shapes with `m <= max_rows` rows of sizes `1..=max_q`.
pub fn shapes(max_rows: usize, max_q: usize, max_n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(rows: &mut Vec<usize>, max_rows: usize, max_q: usize, max_n: usize, out: &mut Vec<Vec<usize>>) {
        if !rows.is_empty() {
            out.push(rows.clone());
        }
        if rows.len() == max_rows {
            return;
        }
        for q in 1..=max_q {
            if rows.iter().sum::<usize>() + q <= max_n {
                rows.push(q);
                rec(rows, max_rows, max_q, max_n, out);
                rows.pop();
            }
        }
    }
    rec(&mut Vec::new(), max_rows, max_q, max_n, &mut out);
    out
}
