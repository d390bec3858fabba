//! Success rate and success weighted by path length, both in percent.

use super::episode::EpisodeResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sr: f64,
    pub spl: f64,
    pub episodes: usize,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no episode results")]
    Empty,
    #[error("episode {0} has non-positive shortest path {1}")]
    BadShortestPath(usize, f64),
}

/// SR is the success mean; SPL weights each success by the ratio of the
/// shortest path to the longer of the agent's path and the shortest path.
pub fn compute_metrics(results: &[EpisodeResult]) -> Result<Metrics, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = results.len() as f64;
    let mut sr = 0.0;
    let mut spl = 0.0;
    for (i, r) in results.iter().enumerate() {
        if r.shortest_path <= 0.0 {
            return Err(MetricsError::BadShortestPath(i, r.shortest_path));
        }
        let s = if r.success { 1.0 } else { 0.0 };
        sr += s;
        spl += s * r.shortest_path / r.path_length.max(r.shortest_path);
    }
    Ok(Metrics {
        sr: 100.0 * sr / n,
        spl: 100.0 * spl / n,
        episodes: results.len(),
    })
}
