//! Overlapping and non-overlapping community detection by combining each
//! node's internal association (neighbor memberships) with a block-model
//! external association (community interaction strengths).
//!
//! The crate also ships the pieces needed to evaluate it: synthetic
//! generators with planted covers ([`gen`]), cover metrics ([`metrics`]) and
//! an experiment harness ([`harness`]).
//!
//! ```
//! use iedc_core::{detect, Graph, IedcConfig, InitConfig, InitMethod};
//!
//! let (g, _) = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
//! let init = InitConfig::new(InitMethod::EdgeClustering, 2, 7);
//! let result = detect(&g, &init, &IedcConfig::default()).unwrap();
//! assert_eq!(result.cover.len(), 2);
//! ```

pub mod error;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod iedc;
pub mod init;
pub mod membership;
pub mod metrics;

pub use error::{Error, Result};
pub use graph::{load_cover, load_edge_list, write_cover, Graph, LoadReport, NodeId};
pub use iedc::{
    detect, external_association, importance_weights, interaction_matrix, internal_association,
    run_iedc, sparsity_rho, update_propagation, DetectionResult, IedcConfig, ImportanceWeights,
    InteractionMatrix,
};
pub use init::{init_edge_clustering, init_equal, initialize, InitConfig, InitMethod};
pub use membership::{
    normalize_rows, threshold_assign, threshold_assign_counted, CommunityCover, Matrix,
    MembershipMatrix, ThresholdStrategy,
};
pub use metrics::{
    avg_conductance, conductance, f1_score, modularity, nmi_overlapping, nmi_partition,
    MetricReport,
};
