//! Connectivity-aware promising regions for heuristic sampling-based path planning.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid_map`]: occupancy grids, continuous states, supercover collision checks, PGM/JSON I/O.
//! - [`region_graph`]: the edge-labelled map graph (x/y edge fields), region decoding and metrics.
//! - [`mst_cbpt`]: maximum spanning forest over edge probabilities and its merge tree.
//! - [`losses`]: directional BCE, pooled Dice and the maximin connectivity loss, with gradients.
//! - [`heuristic`]: the promising-region biased sampler.
//! - [`planners`]: RRT, RRT*, initial-solution BIT* and lazy states contraction.
//! - [`dataset_gen`]: random obstacle maps and RRT-derived ground truth.
//! - [`bench`]: seeded multi-trial experiments, bias sweeps and prediction evaluation.
//!
//! Numeric code is generic over [`Scalar`]; the `*64` / `*32` aliases below fix the
//! precision for the common cases.

pub mod bench;
pub mod dataset_gen;
pub mod error;
pub mod fixtures;
pub mod grid_map;
pub mod heuristic;
pub mod losses;
pub mod mst_cbpt;
pub mod planners;
pub mod region_graph;
mod scalar;

pub use error::{Error, Result};
pub use grid_map::{GridMap, Path, PlanningProblem, State};
pub use heuristic::HeuristicSampler;
pub use losses::LossOutput;
pub use mst_cbpt::{Cbpt, EdgeRecord};
pub use planners::{PlannerConfig, PlannerResult, Tree};
pub use region_graph::{EdgeField, NodePairField, RegionMask};
pub use scalar::Scalar;

pub type State64 = State<f64>;
pub type State32 = State<f32>;
pub type Path64 = Path<f64>;
pub type Path32 = Path<f32>;
pub type PlanningProblem64 = PlanningProblem<f64>;
pub type PlanningProblem32 = PlanningProblem<f32>;
pub type EdgeField64 = EdgeField<f64>;
pub type EdgeField32 = EdgeField<f32>;
pub type NodePairField64 = NodePairField<f64>;
pub type NodePairField32 = NodePairField<f32>;
pub type LossOutput64 = LossOutput<f64>;
pub type LossOutput32 = LossOutput<f32>;
pub type Cbpt64 = Cbpt<f64>;
pub type Cbpt32 = Cbpt<f32>;
pub type PlannerConfig64 = PlannerConfig<f64>;
pub type PlannerResult64 = PlannerResult<f64>;
pub type PlannerResult32 = PlannerResult<f32>;
pub type Tree64 = Tree<f64>;
