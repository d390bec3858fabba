//! Context-driven exploration: a similarity oracle over depth columns, the
//! text-conditioned value map, frontier extraction and ranking, the
//! once-per-episode room override, and the grid local planner.

mod frontiers;
mod planner;
mod value_map;

pub use frontiers::{
    apply_room_override, extract_frontiers, rank_frontiers, ExplorationExhausted,
    ExplorationState, Frontier, MIN_FRONTIER_CLUSTER,
};
pub use planner::{plan_local, LocalPlan, WAYPOINT_REACHED_M};
pub use value_map::{oracle_similarity, update_value_map, SimilarityConfig, SimilarityField};
