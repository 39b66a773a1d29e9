mod common;

use common::{
    blocks_of, brute_inner, brute_merged_integral, factorial, random_kernel, random_space,
    restricted_growth_strings, rel_err, rng, shapes,
};
use poisson_chaos::chaos::{
    variance, wi_joint_cumulant, wi_joint_moment, ustat_joint_cumulant, ustat_mean, ChaosElement,
    ElementKind,
};
use poisson_chaos::measure::{integral, merged_tensor_integral, AtomSpace, SymmetricKernel};
use poisson_chaos::partitions::{count, enumerate, DiagramShape, Guard, PartitionClass};
use poisson_chaos::sim::replica_rng;
use rand::{Rng, RngCore};

const G: Guard = Guard { max_elements: 20 };

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn kernels_for(r: &mut impl Rng, rows: &[usize], atoms: usize) -> Vec<SymmetricKernel> {
    rows.iter().map(|&q| random_kernel(r, q, atoms)).collect()
}

#[test]
fn merged_integral_matches_brute_force() {
    let mut r = rng(1);
    for rows in shapes(3, 3, 6) {
        let atoms = 3;
        let space = random_space(&mut r, atoms);
        let ks = kernels_for(&mut r, &rows, atoms);
        let refs: Vec<&SymmetricKernel> = ks.iter().collect();
        let shape = DiagramShape::new(rows.clone()).unwrap();
        for p in enumerate(&shape, PartitionClass::All).unwrap() {
            let lib = merged_tensor_integral(&refs, &space, &p).unwrap();
            let brute = brute_merged_integral(&refs, space.weights(), &rows, p.blocks());
            assert!(close(lib, brute, 1e-12), "{rows:?} {p}: {lib} vs {brute}");
        }
    }
}

#[test]
fn singletons_factorize() {
    let mut r = rng(2);
    for rows in shapes(3, 3, 7) {
        let space = random_space(&mut r, 3);
        let ks = kernels_for(&mut r, &rows, 3);
        let refs: Vec<&SymmetricKernel> = ks.iter().collect();
        let shape = DiagramShape::new(rows).unwrap();
        let p = poisson_chaos::partitions::DiagramPartition::singletons(&shape);
        let product: f64 = ks.iter().map(|k| integral(k, &space).unwrap()).product();
        assert!(close(merged_tensor_integral(&refs, &space, &p).unwrap(), product, 1e-12));
    }
}

fn permute(k: &SymmetricKernel, perm: &[usize]) -> SymmetricKernel {
    // g(x) = f(π^{-1} x), so relabelling atoms by π carries f to g
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    SymmetricKernel::from_fn(k.order(), k.num_atoms(), |t| {
        let back: Vec<usize> = t.iter().map(|&a| inv[a]).collect();
        k.value(&back)
    })
    .unwrap()
}

#[test]
fn atom_relabelling_invariance() {
    let mut r = rng(3);
    let perm = [2, 0, 3, 1];
    for rows in shapes(3, 2, 5) {
        let space = random_space(&mut r, 4);
        let mut w = vec![0.0; 4];
        for (i, &p) in perm.iter().enumerate() {
            w[p] = space.weight(i);
        }
        let moved = AtomSpace::from_weights(w).unwrap();
        let ks = kernels_for(&mut r, &rows, 4);
        let pk: Vec<SymmetricKernel> = ks.iter().map(|k| permute(k, &perm)).collect();
        let a: Vec<&SymmetricKernel> = ks.iter().collect();
        let b: Vec<&SymmetricKernel> = pk.iter().collect();
        let shape = DiagramShape::new(rows).unwrap();
        for p in enumerate(&shape, PartitionClass::All).unwrap() {
            let x = merged_tensor_integral(&a, &space, &p).unwrap();
            let y = merged_tensor_integral(&b, &moved, &p).unwrap();
            assert!(close(x, y, 1e-12), "{p}");
        }
    }
}

#[test]
fn merged_integral_is_multilinear() {
    let mut r = rng(4);
    for rows in shapes(3, 3, 6) {
        let space = random_space(&mut r, 3);
        let ks = kernels_for(&mut r, &rows, 3);
        let g = random_kernel(&mut r, rows[0], 3);
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let mixed = ks[0].scaled(a).add_scaled(b, &g).unwrap();
        let shape = DiagramShape::new(rows.clone()).unwrap();
        for p in enumerate(&shape, PartitionClass::All).unwrap() {
            let with = |first: &SymmetricKernel| {
                let mut refs: Vec<&SymmetricKernel> = ks.iter().collect();
                refs[0] = first;
                merged_tensor_integral(&refs, &space, &p).unwrap()
            };
            let lhs = with(&mixed);
            let rhs = a * with(&ks[0]) + b * with(&g);
            assert!(close(lhs, rhs, 1e-12), "{rows:?} {p}");
        }
    }
}

#[test]
fn envelope_bound() {
    let mut r = rng(5);
    for rows in shapes(3, 3, 7) {
        let space = random_space(&mut r, 3);
        let ks = kernels_for(&mut r, &rows, 3);
        let refs: Vec<&SymmetricKernel> = ks.iter().collect();
        let sup: f64 = ks.iter().map(|k| k.sup_norm()).product();
        let shape = DiagramShape::new(rows).unwrap();
        for p in enumerate(&shape, PartitionClass::All).unwrap() {
            let v = merged_tensor_integral(&refs, &space, &p).unwrap();
            let bound = sup * space.total_mass().powi(p.num_blocks() as i32);
            assert!(v.abs() <= bound * (1.0 + 1e-12), "{p}");
        }
    }
}

#[test]
fn wi_second_cumulant_is_variance() {
    let mut r = rng(6);
    for q in 1..=4 {
        let space = random_space(&mut r, 3);
        let f = random_kernel(&mut r, q, 3);
        let expected = factorial(q) * brute_inner(&f, &f, space.weights());
        let k2 = wi_joint_cumulant(&[&f, &f], &space, G).unwrap();
        assert!(close(k2, expected, 1e-12), "q={q}");
        assert!(close(wi_joint_moment(&[&f, &f], &space, G).unwrap(), expected, 1e-12));
        let element = ChaosElement::single(ElementKind::WienerIto, space, f).unwrap();
        assert!(close(variance(&element).unwrap(), expected, 1e-12));
    }
}

#[test]
fn unit_atom_moments_count_partitions() {
    let space = AtomSpace::from_weights(vec![1.0]).unwrap();
    for q in 1..=3 {
        let f = SymmetricKernel::constant(q, 1, 1.0).unwrap();
        for m in 1..=5 {
            if q * m > 12 {
                break;
            }
            let refs = vec![&f; m];
            let shape = DiagramShape::uniform(q, m).unwrap();
            let moment = wi_joint_moment(&refs, &space, G).unwrap();
            assert_eq!(moment, count(&shape, PartitionClass::NoSingletons).unwrap() as f64);
            let cum = wi_joint_cumulant(&refs, &space, G).unwrap();
            assert_eq!(cum, count(&shape, PartitionClass::ConnectedNoSingletons).unwrap() as f64);
        }
    }
}

#[test]
fn joint_cumulants_are_multilinear() {
    let mut r = rng(7);
    for rows in shapes(3, 2, 6) {
        let space = random_space(&mut r, 3);
        let ks = kernels_for(&mut r, &rows, 3);
        let g = random_kernel(&mut r, rows[0], 3);
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let mixed = ks[0].scaled(a).add_scaled(b, &g).unwrap();
        let with = |first: &SymmetricKernel| {
            let mut refs: Vec<&SymmetricKernel> = ks.iter().collect();
            refs[0] = first;
            (wi_joint_cumulant(&refs, &space, G).unwrap(), ustat_joint_cumulant(&refs, &space, G).unwrap())
        };
        let (wl, ul) = with(&mixed);
        let (w0, u0) = with(&ks[0]);
        let (wg, ug) = with(&g);
        assert!(close(wl, a * w0 + b * wg, 1e-11), "{rows:?}");
        assert!(close(ul, a * u0 + b * ug, 1e-11), "{rows:?}");
    }
}

/// `∫ f(head, x) dμ^{q-|head|}(x)` by enumerating the free tuple.
fn partial_integral(f: &SymmetricKernel, w: &[f64], head: &[usize]) -> f64 {
    let free = f.order() - head.len();
    let n = w.len();
    let mut tail = vec![0usize; free];
    let mut sum = 0.0;
    for _ in 0..n.pow(free as u32) {
        let full: Vec<usize> = head.iter().chain(&tail).copied().collect();
        sum += tail.iter().map(|&a| w[a]).product::<f64>() * f.value(&full);
        for slot in tail.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    sum
}

#[test]
fn ustat_mean_and_variance_from_definitions() {
    let mut r = rng(8);
    for q in 1..=3 {
        let space = random_space(&mut r, 3);
        let f = random_kernel(&mut r, q, 3);
        let one = SymmetricKernel::constant(q, 3, 1.0).unwrap();
        let mean = brute_inner(&f, &one, space.weights());
        assert!(close(ustat_mean(&f, &space).unwrap(), mean, 1e-12));
        assert!(close(ustat_joint_cumulant(&[&f], &space, G).unwrap(), mean, 1e-12));

        // Var S = Σ_i i! ‖f_i‖² with f_i = C(q,i) ∫ f dμ^{q-i}
        let mut var = 0.0;
        for i in 1..=q {
            let c = factorial(q) / (factorial(i) * factorial(q - i));
            let fi = SymmetricKernel::from_fn(i, 3, |head| c * partial_integral(&f, space.weights(), head)).unwrap();
            var += factorial(i) * brute_inner(&fi, &fi, space.weights());
        }
        let k2 = ustat_joint_cumulant(&[&f, &f], &space, G).unwrap();
        assert!(close(k2, var, 1e-12), "q={q}: {k2} vs {var}");
        let element = ChaosElement::single(ElementKind::UStatistic, space, f).unwrap();
        assert!(rel_err(variance(&element).unwrap(), var) < 1e-12);
    }
}

#[test]
fn brute_references_agree_with_each_other() {
    // the brute merged integral over the singleton partition of one row is ∫ f
    let mut r = rng(9);
    let space = random_space(&mut r, 3);
    let f = random_kernel(&mut r, 2, 3);
    let blocks = blocks_of(&restricted_growth_strings(2)[1]);
    let one = SymmetricKernel::constant(2, 3, 1.0).unwrap();
    let a = brute_merged_integral(&[&f], space.weights(), &[2], &blocks);
    assert!(close(a, brute_inner(&f, &one, space.weights()), 1e-14));
}

#[test]
fn replica_streams_look_independent() {
    let n = 20_000;
    let draws = |i: u64| -> Vec<f64> {
        let mut g = replica_rng(42, i);
        (0..n).map(|_| (g.next_u64() >> 11) as f64 / (1u64 << 53) as f64).collect()
    };
    for i in 0..8 {
        let (x, y) = (draws(i), draws(i + 1));
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n as f64;
        let corr = cov * 12.0;
        // |corr| has standard deviation 1/√n ≈ 0.007
        assert!(corr.abs() < 0.04, "streams {i}, {}: {corr}", i + 1);
        assert!((mx - 0.5).abs() < 0.02);
    }
    assert_ne!(draws(0)[..4], draws(1)[..4]);
}
