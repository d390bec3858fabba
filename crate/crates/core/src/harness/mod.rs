//! Episode orchestration: the perceive / map / explore / verify loop, SR and
//! SPL metrics, a procedural scene generator, and file export.

mod episode;
mod export;
mod metrics;
mod scenegen;

pub use episode::{
    gt_goal_matches, ground_truth_grid, run_episode, Ablation, EpisodeOptions, EpisodeResult,
    GateConfig, MetricProfile, StopVerdict, TraceEvent,
};
pub use export::{export_map_render, load_result, save_result, ExportError, ResultFile, RunSpec};
pub use metrics::{compute_metrics, Metrics, MetricsError};
pub use scenegen::{generate_scene, write_scene_bundle, GenConfig, GenError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
    #[error(transparent)]
    Goal(#[from] crate::goal::GoalError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("configuration error: {0}")]
    Config(String),
}
