mod common;

use poisson_chaos::apps::{rgg_counts, tau_fixed, FixedKernelConfig, PatternGraph};
use poisson_chaos::charlier::charlier;
use poisson_chaos::measure::{AtomSpace, SymmetricKernel};
use poisson_chaos::partitions::{count, enumerate, DiagramShape, PartitionClass};
use proptest::prelude::*;

fn patterns() -> Vec<PatternGraph> {
    vec![
        PatternGraph::path(2),
        PatternGraph::path(3),
        PatternGraph::complete(3),
        PatternGraph::path(4),
        PatternGraph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap(),
        PatternGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap(),
        PatternGraph::new(4, vec![(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap(),
        PatternGraph::complete(4),
    ]
}

fn adjacent(a: &[f64], b: &[f64], r: f64) -> bool {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    d2 > 0.0 && d2.sqrt() <= r
}

fn has_edge(g: &PatternGraph, a: usize, b: usize) -> bool {
    g.edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
}

/// Injective maps of the pattern into the points, split into edge-preserving
/// and edge-and-non-edge-preserving ones.
fn injective_maps(points: &[Vec<f64>], r: f64, g: &PatternGraph) -> (u64, u64) {
    let n = points.len();
    let q = g.vertices;
    let (mut sub, mut ind) = (0, 0);
    let mut image = vec![0usize; q];
    fn rec(i: usize, image: &mut Vec<usize>, n: usize, visit: &mut impl FnMut(&[usize])) {
        if i == image.len() {
            visit(image);
            return;
        }
        for p in 0..n {
            if !image[..i].contains(&p) {
                image[i] = p;
                rec(i + 1, image, n, visit);
            }
        }
    }
    rec(0, &mut image, n, &mut |im| {
        let mut preserves = true;
        let mut exact = true;
        for a in 0..q {
            for b in a + 1..q {
                let e = adjacent(&points[im[a]], &points[im[b]], r);
                if has_edge(g, a, b) {
                    preserves &= e;
                } else {
                    exact &= !e;
                }
            }
        }
        if preserves {
            sub += 1;
            if exact {
                ind += 1;
            }
        }
    });
    (sub, ind)
}

fn automorphisms(g: &PatternGraph) -> u64 {
    let q = g.vertices;
    let mut perm: Vec<usize> = (0..q).collect();
    let mut total = 0;
    permute_all(&mut perm, 0, &mut |p| {
        let ok = (0..q).all(|a| (a + 1..q).all(|b| has_edge(g, a, b) == has_edge(g, p[a], p[b])));
        total += ok as u64;
    });
    total
}

fn permute_all(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute_all(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn point_cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    // a coarse grid makes coincident points and exact-radius ties likely
    prop::collection::vec(prop::collection::vec((0u8..6).prop_map(|v| v as f64 * 0.25), 2), 0..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rgg_counts_match_injective_maps(points in point_cloud(), r in 0.2f64..1.0) {
        let graphs = patterns();
        let counts = rgg_counts(&points, r, &graphs).unwrap();
        for (g, c) in graphs.iter().zip(&counts) {
            let aut = automorphisms(g);
            let (sub, ind) = injective_maps(&points, r, g);
            prop_assert_eq!(sub % aut, 0);
            prop_assert_eq!(c.subgraph, sub / aut, "{:?}", g);
            prop_assert_eq!(c.induced, ind / aut, "{:?}", g);
        }
    }

    #[test]
    fn rgg_counts_ignore_point_order(points in point_cloud(), r in 0.2f64..1.0, seed in any::<u64>()) {
        let graphs = patterns();
        let mut shuffled = points.clone();
        let len = shuffled.len();
        let mut s = seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(rgg_counts(&points, r, &graphs).unwrap(), rgg_counts(&shuffled, r, &graphs).unwrap());
    }

    #[test]
    fn three_vertex_count_identity(points in point_cloud(), r in 0.2f64..1.0) {
        // a connected 3-set is an induced path or a triangle; a triangle holds three paths
        let c = rgg_counts(&points, r, &[PatternGraph::path(3), PatternGraph::complete(3)]).unwrap();
        prop_assert_eq!(c[0].subgraph, c[0].induced + 3 * c[1].induced);
        prop_assert_eq!(c[1].subgraph, c[1].induced);
    }

    #[test]
    fn tau_fixed_is_scale_free(
        weights in prop::collection::vec(0.1f64..1.0, 1..4),
        seed in any::<u64>(),
        q in 1usize..=3,
        c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        t in 1.0f64..100.0,
    ) {
        let total: f64 = weights.iter().sum();
        let space = AtomSpace::from_weights(weights.iter().map(|w| w / total).collect()).unwrap();
        let mut r = common::rng(seed);
        let f = common::random_positive_kernel(&mut r, q, space.len());
        let base = FixedKernelConfig::new(space.clone(), f.clone(), t).unwrap();
        let scaled = FixedKernelConfig::new(space, f.scaled(c), t).unwrap();
        let (a, b) = (tau_fixed(&base).unwrap(), tau_fixed(&scaled).unwrap());
        prop_assert!(common::rel_err(b, a) < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn count_equals_enumeration_length(rows in prop::collection::vec(1usize..=3, 1..=4), class in 0usize..5) {
        prop_assume!(rows.iter().sum::<usize>() <= 9);
        let shape = DiagramShape::new(rows).unwrap();
        let class = PartitionClass::ALL[class];
        prop_assert_eq!(count(&shape, class).unwrap(), enumerate(&shape, class).unwrap().len() as u128);
    }

    #[test]
    fn charlier_three_term_recurrence(q in 1usize..12, x in 0u32..30) {
        // H_{q+1}(x) = (x - q - 1) H_q(x) - q H_{q-1}(x)
        let x = x as f64;
        let lhs = charlier(q + 1).eval(x);
        let rhs = (x - q as f64 - 1.0) * charlier(q).eval(x) - q as f64 * charlier(q - 1).eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn constant_kernels_scale_linearly(c in -3.0f64..3.0, q in 1usize..=3) {
        let space = AtomSpace::from_weights(vec![0.5, 0.5]).unwrap();
        let one = SymmetricKernel::constant(q, 2, 1.0).unwrap();
        let f = SymmetricKernel::constant(q, 2, c).unwrap();
        let a = poisson_chaos::measure::integral(&one, &space).unwrap();
        let b = poisson_chaos::measure::integral(&f, &space).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-14);
    }
}
