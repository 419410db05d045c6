//! Shared fixtures for the criterion benches in `benches/`.

use iedc_core::gen::{generate_lfr_lite, LfrLiteParams};
use iedc_core::{init_edge_clustering, Graph, InitConfig, InitMethod, MembershipMatrix};

/// A sparse LFR-lite graph with about `10 n` edges and `k` communities.
pub fn lfr_graph(n: usize, k: usize, seed: u64) -> Graph {
    let params = LfrLiteParams {
        n,
        k,
        mu: 0.1,
        avg_degree: 20.0,
        max_degree: 100.min(n / 2),
        overlap_nodes: n / 20,
        seed,
        ..LfrLiteParams::sparse_regime(seed)
    };
    generate_lfr_lite(&params).expect("bench fixture parameters are feasible").0
}

/// `lfr_graph` plus its edge-clustering initialization.
pub fn initialized(n: usize, k: usize, seed: u64) -> (Graph, MembershipMatrix) {
    let g = lfr_graph(n, k, seed);
    let p = init_edge_clustering(&g, &InitConfig::new(InitMethod::EdgeClustering, k, seed))
        .expect("fixture has at least k edges");
    (g, p)
}
