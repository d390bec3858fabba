//! Grid local planner: 8-connected A* over the current map (unknown cells
//! traversable at double cost), turned into discrete actions. Replanned from
//! scratch every step by the episode loop.

use crate::geom::{normalize_angle, Vec2};
use crate::mapping::{GridStack, Occupancy};
use crate::scene::{Action, AgentState};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// The planner reports arrival within this distance of the waypoint.
pub const WAYPOINT_REACHED_M: f64 = 0.2;
/// Forward is emitted once the heading error drops below this.
const HEADING_ALIGN_RAD: f64 = 15.0 * std::f64::consts::PI / 180.0;
/// Aim at the path point roughly this far ahead to avoid chattering between
/// adjacent 0.05 m cells.
const LOOKAHEAD_M: f64 = 0.3;
const UNKNOWN_COST_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalPlan {
    Act(Action),
    /// Within [`WAYPOINT_REACHED_M`] of the waypoint (the stop signal).
    Arrived,
    /// No traversable path; the caller should pick another waypoint.
    Unreachable,
}

#[derive(PartialEq)]
struct Node {
    priority: f64,
    cost: f64,
    idx: usize,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One planning step toward `waypoint` from the current state.
pub fn plan_local(grids: &GridStack, state: &AgentState, waypoint: Vec2) -> LocalPlan {
    if state.position.distance(waypoint) <= WAYPOINT_REACHED_M {
        return LocalPlan::Arrived;
    }
    let Some(goal) = grids.cell_of(waypoint) else {
        return LocalPlan::Unreachable;
    };
    if grids.occupancy_at(goal.0, goal.1) == Occupancy::Occupied {
        return LocalPlan::Unreachable;
    }
    let Some(start) = grids.cell_of(state.position) else {
        return LocalPlan::Unreachable;
    };
    let Some(path) = astar(grids, start, goal) else {
        return LocalPlan::Unreachable;
    };

    // steer at the first path point beyond the lookahead distance
    let aim = path
        .iter()
        .map(|&(x, y)| grids.cell_center(x, y))
        .find(|p| state.position.distance(*p) >= LOOKAHEAD_M)
        .unwrap_or(waypoint);
    let desired = (aim.y - state.position.y).atan2(aim.x - state.position.x);
    let error = normalize_angle(desired - state.heading);
    if error.abs() <= HEADING_ALIGN_RAD {
        LocalPlan::Act(Action::Forward)
    } else if error > 0.0 {
        // ties at pi resolve toward positive yaw by the wrap convention
        LocalPlan::Act(Action::TurnLeft)
    } else {
        LocalPlan::Act(Action::TurnRight)
    }
}

/// 8-connected A* over free/unknown cells; returns the path excluding the
/// start cell. Occupied cells are inflated by the agent radius so that the
/// disc-shaped body can execute the path; the start and goal cells are
/// always treated as traversable.
fn astar(grids: &GridStack, start: (usize, usize), goal: (usize, usize)) -> Option<Vec<(usize, usize)>> {
    if start == goal {
        return Some(vec![goal]);
    }
    let w = grids.width();
    let h = grids.height();
    let idx = |x: usize, y: usize| y * w + x;
    let inflate = (crate::scene::AGENT_RADIUS / grids.resolution()).floor() as i64;
    let mut blocked = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if grids.occupancy_at(x, y) != Occupancy::Occupied {
                continue;
            }
            let x_lo = (x as i64 - inflate).max(0) as usize;
            let x_hi = ((x as i64 + inflate) as usize).min(w - 1);
            let y_lo = (y as i64 - inflate).max(0) as usize;
            let y_hi = ((y as i64 + inflate) as usize).min(h - 1);
            for by in y_lo..=y_hi {
                for bx in x_lo..=x_hi {
                    blocked[idx(bx, by)] = true;
                }
            }
        }
    }
    blocked[idx(start.0, start.1)] = false;
    blocked[idx(goal.0, goal.1)] = false;
    let passable = |x: usize, y: usize| !blocked[idx(x, y)];
    let octile = |x: usize, y: usize| -> f64 {
        let dx = (x as f64 - goal.0 as f64).abs();
        let dy = (y as f64 - goal.1 as f64).abs();
        dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
    };
    let mut cost = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut heap = BinaryHeap::new();
    cost[idx(start.0, start.1)] = 0.0;
    heap.push(Node {
        priority: octile(start.0, start.1),
        cost: 0.0,
        idx: idx(start.0, start.1),
    });
    while let Some(Node { cost: c, idx: i, .. }) = heap.pop() {
        if c > cost[i] {
            continue;
        }
        let (x, y) = (i % w, i / w);
        if (x, y) == goal {
            let mut path = Vec::new();
            let mut cur = i;
            while cur != idx(start.0, start.1) {
                path.push((cur % w, cur / w));
                cur = parent[cur];
            }
            path.reverse();
            return Some(path);
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
                let (ux, uy) = (nx as usize, ny as usize);
                if !passable(ux, uy) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && !(passable(ux, y) && passable(x, uy)) {
                    continue;
                }
                let base = if diagonal {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
                let factor = if grids.occupancy_at(ux, uy) == Occupancy::Unknown {
                    UNKNOWN_COST_FACTOR
                } else {
                    1.0
                };
                let next = c + base * factor;
                let j = idx(ux, uy);
                if next < cost[j] {
                    cost[j] = next;
                    parent[j] = i;
                    heap.push(Node {
                        priority: next + octile(ux, uy),
                        cost: next,
                        idx: j,
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::DEFAULT_RESOLUTION;

    fn open_grid() -> GridStack {
        let mut g = GridStack::new(Vec2::new(0.0, 0.0), 120, 120, DEFAULT_RESOLUTION);
        for y in 0..120 {
            for x in 0..120 {
                g.mark_free(x, y);
            }
        }
        g
    }

    #[test]
    fn aligned_waypoint_yields_forward() {
        let g = open_grid();
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.0);
        assert_eq!(
            plan_local(&g, &state, Vec2::new(2.0, 1.0)),
            LocalPlan::Act(Action::Forward)
        );
    }

    #[test]
    fn waypoint_behind_turns_with_positive_yaw() {
        let g = open_grid();
        let state = AgentState::at(Vec2::new(2.0, 1.0), 0.0);
        // directly behind: heading error is exactly pi -> positive turn
        assert_eq!(
            plan_local(&g, &state, Vec2::new(1.0, 1.0)),
            LocalPlan::Act(Action::TurnLeft)
        );
        // slightly below the axis behind the agent: negative error
        assert_eq!(
            plan_local(&g, &state, Vec2::new(1.0, 0.9)),
            LocalPlan::Act(Action::TurnRight)
        );
    }

    #[test]
    fn close_waypoint_is_arrival() {
        let g = open_grid();
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.0);
        assert_eq!(plan_local(&g, &state, Vec2::new(1.1, 1.0)), LocalPlan::Arrived);
    }

    #[test]
    fn walled_off_waypoint_is_unreachable() {
        let mut g = open_grid();
        // box around (3, 3)
        g.rasterize_wall_segment(Vec2::new(2.5, 2.5), Vec2::new(3.5, 2.5));
        g.rasterize_wall_segment(Vec2::new(2.5, 3.5), Vec2::new(3.5, 3.5));
        g.rasterize_wall_segment(Vec2::new(2.5, 2.5), Vec2::new(2.5, 3.5));
        g.rasterize_wall_segment(Vec2::new(3.5, 2.5), Vec2::new(3.5, 3.5));
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.0);
        assert_eq!(plan_local(&g, &state, Vec2::new(3.0, 3.0)), LocalPlan::Unreachable);
    }

    #[test]
    fn unknown_cells_are_traversable_at_cost() {
        let mut g = GridStack::new(Vec2::new(0.0, 0.0), 120, 120, DEFAULT_RESOLUTION);
        // only a small free patch around the agent; the waypoint sits in
        // unknown territory
        for y in 0..40 {
            for x in 0..40 {
                g.mark_free(x, y);
            }
        }
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.0);
        match plan_local(&g, &state, Vec2::new(4.0, 4.0)) {
            LocalPlan::Act(_) => {}
            other => panic!("expected an action, got {other:?}"),
        }
    }

    #[test]
    fn detour_prefers_known_free_space() {
        let mut g = open_grid();
        // unknown strip across the middle except a free gap at the top
        for y in 0..120 {
            for x in 55..65 {
                g.mark_unknown_for_test(x, y);
            }
        }
        for y in 110..120 {
            for x in 55..65 {
                g.mark_free(x, y);
            }
        }
        let start = (20usize, 115usize);
        let goal = (100usize, 115usize);
        let path = astar(&g, start, goal).unwrap();
        // the free gap at the top is on the straight line; path stays free
        for &(x, y) in &path {
            assert_eq!(g.occupancy_at(x, y), Occupancy::Free, "cell ({x},{y})");
        }
    }

    /// On a static fully-known map with a reachable waypoint, the geodesic
    /// distance to the waypoint does not increase over any 12-action window.
    #[test]
    fn progress_over_turn_budget() {
        let scene = crate::scene::fixtures::one_room_scene();
        // 8 x 6 m fully known grid matching the room
        let mut g = GridStack::new(Vec2::new(0.0, 0.0), 160, 120, DEFAULT_RESOLUTION);
        for y in 0..120 {
            for x in 0..160 {
                g.mark_free(x, y);
            }
        }
        // mirror the room's furniture into the grid so collisions and the
        // planner agree
        for inst in &scene.instances {
            for y in 0..g.height() {
                for x in 0..g.width() {
                    if crate::geom::point_in_polygon(g.cell_center(x, y), &inst.footprint) {
                        g.mark_occupied(x, y);
                    }
                }
            }
        }
        let waypoint = Vec2::new(7.2, 5.2);
        let mut state = AgentState::at(Vec2::new(1.0, 1.0), -2.0);
        let mut last_window_d = g.geodesic_distance(state.position, waypoint).unwrap();
        for step in 1..=120 {
            match plan_local(&g, &state, waypoint) {
                LocalPlan::Act(a) => state = crate::scene::step_agent(&scene, &state, a),
                LocalPlan::Arrived => break,
                LocalPlan::Unreachable => panic!("waypoint must stay reachable"),
            }
            if step % 12 == 0 {
                let d = g
                    .geodesic_distance(state.position, waypoint)
                    .expect("agent stays in free space");
                assert!(
                    d <= last_window_d + 1e-9,
                    "distance grew from {last_window_d} to {d} at step {step}"
                );
                last_window_d = d;
            }
        }
        assert!(state.position.distance(waypoint) <= 0.45, "made it close");
    }
}
