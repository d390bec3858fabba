//! Plan-view depth rendering. Each column casts a 2D ray against wall
//! segments and instance footprint edges; the nearest hit within max range
//! wins. Vertical extents of whatever was hit travel as metadata, so one row
//! of ranges is enough for the rest of the pipeline.

use super::{AgentState, ColumnSample, DepthImage, RayHit, Scene, SensorConfig};
use crate::geom::{polygon_edges, ray_segment_intersection, Vec2};

/// Renders one depth frame at `state`. Deterministic given its inputs.
pub fn render_depth(scene: &Scene, state: &AgentState, sensor: &SensorConfig) -> DepthImage {
    let mut columns = Vec::with_capacity(sensor.columns);
    for i in 0..sensor.columns {
        let offset = sensor.hfov / 2.0 - (i as f64 + 0.5) * sensor.hfov / sensor.columns as f64;
        let dir = Vec2::from_angle(state.heading + offset);
        columns.push(cast_ray(scene, state.position, dir, sensor.max_range));
    }
    DepthImage {
        config: *sensor,
        pose: *state,
        columns,
    }
}

fn cast_ray(scene: &Scene, origin: Vec2, dir: Vec2, max_range: f64) -> ColumnSample {
    let mut best: Option<(f64, RayHit)> = None;
    for (wi, wall) in scene.walls.iter().enumerate() {
        if let Some(t) = ray_segment_intersection(origin, dir, &wall.segment) {
            if t > 1e-9 && best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                best = Some((t, RayHit::Wall(wi)));
            }
        }
    }
    for inst in &scene.instances {
        for edge in polygon_edges(&inst.footprint) {
            if let Some(t) = ray_segment_intersection(origin, dir, &edge) {
                if t > 1e-9 && best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                    best = Some((t, RayHit::Instance(inst.id.clone())));
                }
            }
        }
    }
    match best {
        Some((t, hit)) if t <= max_range => ColumnSample {
            range: Some(t),
            hit: Some(hit),
        },
        _ => ColumnSample {
            range: None,
            hit: None,
        },
    }
}
