//! Tree representations of finite metric spaces.
//!
//! The centerpiece is [`treerep`], which turns any finite metric into a
//! weighted tree (with Steiner nodes) whose path metric reproduces the input
//! exactly when the input is a tree metric. Around it sit the usual pieces of
//! an evaluation pipeline: δ-hyperbolicity, Neighbor Joining and MST
//! baselines, distortion and MAP scores, least-squares weight refinement,
//! Sarkar's Poincaré-disk embedding, and synthetic data generators.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod hyperbolic;
pub mod io;
pub mod metric;
pub mod refinement;
pub mod tree;
pub mod treerep;

pub use baselines::{mst_complete, mst_prim, neighbor_join};
pub use datagen::{random_tree_metric, sample_hyperboloid};
pub use error::{Error, Result};
pub use evaluation::{average_distortion, map_score, optimal_scale, EvalReport, Scale};
pub use hyperbolic::{hyperboloid_distance, poincare_distance, sarkar_embed, DiskPoint, HyperboloidPoint};
pub use metric::{delta_hyperbolicity, gromov_product, normalize_max, DeltaEstimate, DeltaMode, DistanceMatrix};
pub use refinement::{build_path_system, refine_weights, PairSelection, PathSystem};
pub use tree::{bfs_apsp, contract_zero_edges, tree_metric, Edge, Graph, NodeKind, Restrict, WeightedTree};
pub use treerep::{treerep, treerep_best, treerep_with, Criterion, TreeRepConfig};
