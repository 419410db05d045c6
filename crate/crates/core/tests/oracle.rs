mod common;

use common::*;
use iedc_core::*;
use rand::Rng;

const TOL: f64 = 1e-10;

#[test]
fn association_kernels_match_enumeration() {
    let mut rng = rng(11);
    for trial in 0..100 {
        let f = random_fixture(&mut rng, 30, 4);
        let p = f.membership();

        let ia = internal_association(&p, &f.graph).unwrap();
        assert!(max_diff(&naive_ia(&f.adj, &f.p), &ia) < TOL, "IA trial {trial}");

        let rho = sparsity_rho(&p, &f.graph).unwrap();
        assert!((rho - naive_rho(&f.adj, &f.p)).abs() < TOL, "rho trial {trial}");

        let im = interaction_matrix(&p, &f.graph).unwrap();
        let beta = naive_beta(&f.adj, &f.p);
        assert!(max_diff(&beta, &im.beta) < TOL * beta_scale(&beta), "beta trial {trial}");

        let ea = external_association(&p, &f.graph, &im).unwrap();
        let expected = naive_ea(&f.adj, &f.p, &as_rows(&im.beta));
        assert!(max_diff(&expected, &ea) < TOL * beta_scale(&beta), "EA trial {trial}");
    }
}

/// Absolute tolerance is relative to the size of beta, which grows like
/// 1 / (1 - rho) on sparse graphs.
fn beta_scale(beta: &[Vec<f64>]) -> f64 {
    beta.iter().flatten().fold(1.0, |m: f64, &x| m.max(x))
}

#[test]
fn update_matches_formula() {
    let mut rng = rng(12);
    for _ in 0..50 {
        let f = random_fixture(&mut rng, 20, 4);
        let p = f.membership();
        let k = p.k();
        let ia = internal_association(&p, &f.graph).unwrap();
        let im = interaction_matrix(&p, &f.graph).unwrap();
        let ea = external_association(&p, &f.graph, &im).unwrap();
        let p1: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let w = ImportanceWeights {
            p2: p1.iter().map(|x| 1.0 - x).collect(),
            p1,
        };
        let out = update_propagation(&ia, &ea, &w).unwrap();
        for v in 0..p.n() {
            let raw: Vec<f64> = (0..k).map(|c| w.p1[c] * ia.get(v, c) + w.p2[c] * ea.get(v, c)).collect();
            let s: f64 = raw.iter().sum();
            for (c, &r) in raw.iter().enumerate() {
                let expected = if s > 0.0 { r / s } else { 1.0 / k as f64 };
                assert!((out.get(v, c) - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn partition_nmi_matches_contingency_table() {
    let mut rng = rng(13);
    for _ in 0..100 {
        let n = 20;
        let (ka, kb) = (rng.random_range(1..6), rng.random_range(1..6));
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        let ca = CommunityCover::from_labels(&a, ka).unwrap();
        let cb = CommunityCover::from_labels(&b, kb).unwrap();
        let got = nmi_partition(&ca, &cb, n).unwrap();
        assert!((got - naive_nmi_partition(&a, &b)).abs() < TOL);
    }
}

#[test]
fn overlapping_nmi_matches_binary_entropy_definition() {
    let mut rng = rng(14);
    for _ in 0..100 {
        let n = 12;
        let a = random_cover(&mut rng, n, 3, 0.15);
        let b = random_cover(&mut rng, n, 3, 0.15);
        let got = nmi_overlapping(&a, &b, n).unwrap();
        let expected = naive_nmi_overlapping(a.communities(), b.communities(), n);
        assert!((got - expected).abs() < TOL, "{got} vs {expected}");
    }
}

#[test]
fn modularity_and_conductance_match_enumeration() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let f = random_fixture(&mut rng, 25, 1);
        let n = f.graph.n();
        let k = rng.random_range(1..5);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let cover = CommunityCover::from_labels(&labels, k).unwrap();
        let q = modularity(&f.graph, &cover).unwrap();
        assert!((q - naive_modularity(&f.adj, &labels)).abs() < 1e-12);

        let mut total = 0.0;
        let mut count = 0;
        for c in cover.communities().iter().filter(|c| !c.is_empty()) {
            let got = conductance(&f.graph, c).unwrap();
            let expected = naive_conductance(&f.adj, c);
            assert!((got - expected).abs() < 1e-12);
            total += expected;
            count += 1;
        }
        let avg = avg_conductance(&f.graph, &cover).unwrap();
        assert!((avg - total / count as f64).abs() < 1e-12);
    }
}
