//! Discrete embodiment. The agent is a disc of radius 0.18 m; a forward
//! either completes the full 0.25 m displacement or fails atomically when the
//! swept disc would touch a wall segment, an instance footprint, or the scene
//! boundary.

use super::{Action, AgentState, Scene};
use crate::geom::{normalize_angle, polygon_edges, segment_segment_distance, Segment, Vec2};

pub const FORWARD_STEP_M: f64 = 0.25;
pub const TURN_STEP_RAD: f64 = std::f64::consts::PI / 6.0;
pub const AGENT_RADIUS: f64 = 0.18;

/// Applies one action. Blocked forwards leave the position unchanged but
/// still count as a step; `Stop` freezes the state entirely.
pub fn step_agent(scene: &Scene, state: &AgentState, action: Action) -> AgentState {
    let mut next = *state;
    match action {
        Action::Stop => return next,
        Action::TurnLeft => {
            next.heading = normalize_angle(next.heading + TURN_STEP_RAD);
        }
        Action::TurnRight => {
            next.heading = normalize_angle(next.heading - TURN_STEP_RAD);
        }
        Action::Forward => {
            let target = next.position + Vec2::from_angle(next.heading) * FORWARD_STEP_M;
            if forward_clear(scene, next.position, target) {
                next.path_length += next.position.distance(target);
                next.position = target;
            }
        }
    }
    next.step_count += 1;
    next
}

/// True if the disc swept from `from` to `to` stays clear of all walls,
/// footprints, and the bounds rectangle.
pub fn forward_clear(scene: &Scene, from: Vec2, to: Vec2) -> bool {
    let sweep = Segment::new(from, to);
    for wall in &scene.walls {
        if segment_segment_distance(&sweep, &wall.segment) < AGENT_RADIUS {
            return false;
        }
    }
    for inst in &scene.instances {
        for edge in polygon_edges(&inst.footprint) {
            if segment_segment_distance(&sweep, &edge) < AGENT_RADIUS {
                return false;
            }
        }
    }
    let b = &scene.bounds;
    to.x - AGENT_RADIUS >= b.x_min
        && to.x + AGENT_RADIUS <= b.x_max
        && to.y - AGENT_RADIUS >= b.y_min
        && to.y + AGENT_RADIUS <= b.y_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn forward_in_open_space() {
        let scene = fixtures::one_room_scene();
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.0);
        let next = step_agent(&scene, &state, Action::Forward);
        assert_relative_eq!(next.position.x, 1.25, epsilon = 1e-12);
        assert_relative_eq!(next.position.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(next.path_length, 0.25, epsilon = 1e-12);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn twelve_left_turns_return_heading() {
        let scene = fixtures::one_room_scene();
        let mut state = AgentState::at(Vec2::new(1.0, 1.0), 0.4);
        for _ in 0..12 {
            state = step_agent(&scene, &state, Action::TurnLeft);
        }
        assert_relative_eq!(state.heading, 0.4, epsilon = 1e-9);
        assert_eq!(state.step_count, 12);
    }

    #[test]
    fn forward_into_wall_is_blocked() {
        let scene = fixtures::one_room_scene();
        // wall at x=8; stand 0.1 m short of touching it (disc radius 0.18)
        let state = AgentState::at(Vec2::new(8.0 - AGENT_RADIUS - 0.1, 3.0), 0.0);
        let next = step_agent(&scene, &state, Action::Forward);
        assert_eq!(next.position, state.position);
        assert_eq!(next.step_count, 1);
        assert_eq!(next.path_length, 0.0);
    }

    #[test]
    fn forward_into_furniture_is_blocked() {
        let scene = fixtures::one_room_scene();
        // bed footprint spans x in [5.05, 6.95] at y=3
        let state = AgentState::at(Vec2::new(5.05 - AGENT_RADIUS - 0.05, 3.0), 0.0);
        let next = step_agent(&scene, &state, Action::Forward);
        assert_eq!(next.position, state.position);
    }

    #[test]
    fn stop_freezes_state() {
        let scene = fixtures::one_room_scene();
        let state = AgentState::at(Vec2::new(1.0, 1.0), 0.3);
        let next = step_agent(&scene, &state, Action::Stop);
        assert_eq!(next, state);
    }

    #[test]
    fn heading_stays_normalized() {
        let scene = fixtures::one_room_scene();
        let mut state = AgentState::at(Vec2::new(1.0, 1.0), 3.0);
        for _ in 0..40 {
            state = step_agent(&scene, &state, Action::TurnRight);
            assert!(state.heading > -std::f64::consts::PI);
            assert!(state.heading <= std::f64::consts::PI);
        }
    }
}
