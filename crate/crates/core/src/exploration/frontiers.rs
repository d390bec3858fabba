//! Frontier extraction over the occupancy layer, value ranking, and the
//! single-use room-level override.

use crate::geom::Vec2;
use crate::goal::GoalSpec;
use crate::mapping::{GridStack, InstanceStore, Occupancy, VerificationState};
use thiserror::Error;

/// Clusters below this size are rasterization noise.
pub const MIN_FRONTIER_CLUSTER: usize = 5;

/// A cluster of free cells bordering unknown space.
#[derive(Clone, Debug)]
pub struct Frontier {
    /// Cluster centroid snapped to the nearest member cell.
    pub representative: (usize, usize),
    pub cells: Vec<(usize, usize)>,
    /// Value-layer lookup at the representative.
    pub value: f64,
    pub room: Option<u32>,
}

impl Frontier {
    pub fn representative_point(&self, grids: &GridStack) -> Vec2 {
        grids.cell_center(self.representative.0, self.representative.1)
    }
}

#[derive(Debug, Error)]
#[error("no frontiers remain: exploration exhausted")]
pub struct ExplorationExhausted;

/// Episode-scoped exploration bookkeeping. The room override can fire at
/// most once.
#[derive(Clone, Debug)]
pub struct ExplorationState {
    pub override_available: bool,
    pub waypoint: Option<Vec2>,
    /// Reached waypoints, quantized to 0.1 m.
    pub visited: Vec<(i64, i64)>,
}

impl Default for ExplorationState {
    fn default() -> Self {
        ExplorationState {
            override_available: true,
            waypoint: None,
            visited: Vec::new(),
        }
    }
}

/// Extracts 8-connected clusters of frontier cells (free cells adjacent to
/// at least one unknown cell), discarding clusters smaller than
/// [`MIN_FRONTIER_CLUSTER`].
pub fn extract_frontiers(grids: &GridStack) -> Vec<Frontier> {
    let w = grids.width();
    let h = grids.height();
    let is_frontier = |x: usize, y: usize| -> bool {
        if !grids.is_free(x, y) {
            return false;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                if grids.occupancy_at(nx as usize, ny as usize) == Occupancy::Unknown {
                    return true;
                }
            }
        }
        false
    };

    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            mask[y * w + x] = is_frontier(x, y);
        }
    }

    let mut seen = vec![false; w * h];
    let mut frontiers = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            let start = sy * w + sx;
            if !mask[start] || seen[start] {
                continue;
            }
            let mut cells = Vec::new();
            let mut stack = vec![(sx, sy)];
            seen[start] = true;
            while let Some((x, y)) = stack.pop() {
                cells.push((x, y));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                            continue;
                        }
                        let j = ny as usize * w + nx as usize;
                        if mask[j] && !seen[j] {
                            seen[j] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            if cells.len() < MIN_FRONTIER_CLUSTER {
                continue;
            }
            cells.sort_by_key(|&(x, y)| (y, x));
            let centroid = cells.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| {
                (ax + x as f64, ay + y as f64)
            });
            let n = cells.len() as f64;
            let centroid = (centroid.0 / n, centroid.1 / n);
            let representative = *cells
                .iter()
                .min_by(|&&(ax, ay), &&(bx, by)| {
                    let da = (ax as f64 - centroid.0).powi(2) + (ay as f64 - centroid.1).powi(2);
                    let db = (bx as f64 - centroid.0).powi(2) + (by as f64 - centroid.1).powi(2);
                    da.total_cmp(&db).then((ay, ax).cmp(&(by, bx)))
                })
                .expect("non-empty cluster");
            frontiers.push(Frontier {
                value: grids.value_at(representative.0, representative.1),
                room: grids.room_id_at(representative.0, representative.1),
                representative,
                cells,
            });
        }
    }
    frontiers
}

/// Orders frontiers by descending value, breaking ties by geodesic distance
/// from the agent and then by representative cell order. Fails when the
/// frontier list is empty (exploration exhausted).
pub fn rank_frontiers(
    mut frontiers: Vec<Frontier>,
    grids: &GridStack,
    agent: Vec2,
) -> Result<Vec<Frontier>, ExplorationExhausted> {
    if frontiers.is_empty() {
        return Err(ExplorationExhausted);
    }
    let dist_field = grids.distances_from(agent);
    let w = grids.width();
    let dist = |f: &Frontier| dist_field[f.representative.1 * w + f.representative.0];
    frontiers.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then_with(|| dist(a).total_cmp(&dist(b)))
            .then_with(|| {
                (a.representative.1, a.representative.0)
                    .cmp(&(b.representative.1, b.representative.0))
            })
    });
    Ok(frontiers)
}

/// Room-level override: if an unrejected target record exists, some goal
/// context category is still unseen in its room, and that room has
/// frontiers, steer to the geodesically nearest in-room frontier once.
/// Otherwise (or afterwards) the head of the ranked list wins.
pub fn apply_room_override(
    xs: &mut ExplorationState,
    grids: &GridStack,
    store: &InstanceStore,
    goal: &GoalSpec,
    ranked: &[Frontier],
    agent: Vec2,
) -> Frontier {
    assert!(!ranked.is_empty(), "ranked frontier list must be non-empty");
    if !xs.override_available {
        return ranked[0].clone();
    }
    // (i) a target-category instance has been detected (and not rejected)
    let target_rec = store
        .records()
        .iter()
        .filter(|r| {
            r.category == goal.target_category && r.state != VerificationState::Rejected
        })
        .max_by_key(|r| r.id);
    let Some(target_rec) = target_rec else {
        return ranked[0].clone();
    };
    let Some(target_room) = grids.room_of_point(target_rec.center, 1.5) else {
        return ranked[0].clone();
    };
    // (ii) at least one relation context category unseen in that room
    let needed = goal.relation_context_categories();
    let missing_context = needed.iter().any(|cat| {
        !store.records().iter().any(|r| {
            r.category == *cat && grids.room_of_point(r.center, 1.5) == Some(target_room)
        })
    });
    if !missing_context {
        return ranked[0].clone();
    }
    // (iii) unexplored frontiers inside that room
    let dist_field = grids.distances_from(agent);
    let w = grids.width();
    let in_room = ranked
        .iter()
        .filter(|f| f.room == Some(target_room))
        .min_by(|a, b| {
            let da = dist_field[a.representative.1 * w + a.representative.0];
            let db = dist_field[b.representative.1 * w + b.representative.0];
            da.total_cmp(&db).then_with(|| {
                (a.representative.1, a.representative.0)
                    .cmp(&(b.representative.1, b.representative.0))
            })
        });
    match in_room {
        Some(f) => {
            xs.override_available = false; // consumed
            f.clone()
        }
        None => ranked[0].clone(),
    }
}
