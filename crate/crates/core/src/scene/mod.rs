//! Ground-truth 2.5D world: walls, labeled instances, agent embodiment, a
//! depth sensor by plan-view ray casting, and perception oracles.

mod agent;
mod io;
mod oracles;
mod sensor;

pub use agent::{step_agent, AGENT_RADIUS, FORWARD_STEP_M, TURN_STEP_RAD};
pub use io::{load_scene, load_scene_str, save_scene, scene_to_string, SceneError};
pub use oracles::{
    oracle_detect, oracle_vqa_attribute, oracle_vqa_category, DetectorNoise, OracleError,
    VqaAttributeNoise, VqaCategoryNoise, COCO_CATEGORIES,
};
pub use sensor::render_depth;

use crate::geom::{normalize_angle, point_in_polygon, polygon_centroid, Segment, Vec2};
use std::collections::BTreeMap;

/// Axis-aligned scene extent in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// A vertical wall: a ground-plane segment extruded from z=0 to `height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub segment: Segment,
    pub height: f64,
}

/// A placed object with category, optional color/shape attributes, a convex
/// ground footprint, and a vertical extent.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthInstance {
    pub id: String,
    pub category: String,
    pub attributes: BTreeMap<AttrKeyRaw, String>,
    pub footprint: Vec<Vec2>,
    pub base_z: f64,
    pub top_z: f64,
    pub room_hint: Option<String>,
}

/// Attribute keys allowed on ground-truth instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttrKeyRaw {
    Color,
    Shape,
}

impl AttrKeyRaw {
    pub fn as_str(self) -> &'static str {
        match self {
            AttrKeyRaw::Color => "color",
            AttrKeyRaw::Shape => "shape",
        }
    }
}

impl GroundTruthInstance {
    /// Ground-plane centroid of the footprint.
    pub fn center(&self) -> Vec2 {
        polygon_centroid(&self.footprint)
    }

    /// Mid-height of the vertical extent.
    pub fn mid_z(&self) -> f64 {
        0.5 * (self.base_z + self.top_z)
    }
}

/// Spawn pose for the agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spawn {
    pub position: Vec2,
    pub heading: f64,
}

/// Immutable ground-truth world shared by the simulator and the oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub bounds: Bounds,
    pub walls: Vec<Wall>,
    pub instances: Vec<GroundTruthInstance>,
    pub spawn: Spawn,
}

impl Scene {
    pub fn instance(&self, id: &str) -> Option<&GroundTruthInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// True if `p` lies inside any instance footprint.
    pub fn inside_any_footprint(&self, p: Vec2) -> bool {
        self.instances
            .iter()
            .any(|i| point_in_polygon(p, &i.footprint))
    }
}

/// Discrete agent actions. Forward displaces 0.25 m along the heading; turns
/// rotate by exactly 30 degrees; stop freezes the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Planar agent pose plus episode accounting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub heading: f64,
    pub step_count: u32,
    pub path_length: f64,
}

impl AgentState {
    pub fn at(position: Vec2, heading: f64) -> Self {
        AgentState {
            position,
            heading: normalize_angle(heading),
            step_count: 0,
            path_length: 0.0,
        }
    }

    pub fn from_spawn(spawn: &Spawn) -> Self {
        AgentState::at(spawn.position, spawn.heading)
    }
}

/// Depth sensor configuration. Defaults: 79 degree horizontal FOV, 128
/// columns, 5 m max range, camera 0.88 m above the floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorConfig {
    pub hfov: f64,
    pub columns: usize,
    pub max_range: f64,
    pub camera_height: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            hfov: 79.0f64.to_radians(),
            columns: 128,
            max_range: 5.0,
            camera_height: 0.88,
        }
    }
}

/// What a depth column hit. Wall hits carry the wall index; instance hits the
/// instance id. Hit identity is ground truth reserved for the oracles, never
/// for the policy.
#[derive(Clone, Debug, PartialEq)]
pub enum RayHit {
    Wall(usize),
    Instance(String),
}

/// One depth column: range to the first surface, or `None` past max range.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSample {
    pub range: Option<f64>,
    pub hit: Option<RayHit>,
}

/// A single 1.5D depth frame: one row of ranges across the horizontal FOV,
/// captured at `pose`. Vertical extents of hit surfaces come from scene
/// metadata rather than extra pixel rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub config: SensorConfig,
    pub pose: AgentState,
    pub columns: Vec<ColumnSample>,
}

impl DepthImage {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// World-frame direction of column `i`. Column 0 is the leftmost ray.
    pub fn column_direction(&self, i: usize) -> Vec2 {
        Vec2::from_angle(self.pose.heading + self.column_offset(i))
    }

    /// Angular offset of column `i` from the optical axis (positive = left).
    pub fn column_offset(&self, i: usize) -> f64 {
        let w = self.config.columns as f64;
        self.config.hfov / 2.0 - (i as f64 + 0.5) * self.config.hfov / w
    }

    /// World endpoint of column `i`: hit point, or the max-range point.
    pub fn column_endpoint(&self, i: usize) -> Vec2 {
        let r = self.columns[i].range.unwrap_or(self.config.max_range);
        self.pose.position + self.column_direction(i) * r
    }
}

/// A detector proposal over one depth frame. `instance_id` is the hidden
/// ground-truth identity; the policy must rely on `proposed_category`,
/// `confidence`, and the mask alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub instance_id: String,
    pub proposed_category: String,
    pub confidence: f64,
    pub mask: Vec<usize>,
    pub is_coco: bool,
}

impl Detection {
    /// Fraction of the frame covered by the mask.
    pub fn mask_fraction(&self, width: usize) -> f64 {
        self.mask.len() as f64 / width.max(1) as f64
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn rect_footprint(cx: f64, cy: f64, w: f64, h: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(cx - w / 2.0, cy - h / 2.0),
            Vec2::new(cx + w / 2.0, cy - h / 2.0),
            Vec2::new(cx + w / 2.0, cy + h / 2.0),
            Vec2::new(cx - w / 2.0, cy + h / 2.0),
        ]
    }

    pub fn boxed_room(width: f64, height: f64) -> Vec<Wall> {
        let h = 2.6;
        vec![
            Wall {
                segment: Segment::new(Vec2::new(0.0, 0.0), Vec2::new(width, 0.0)),
                height: h,
            },
            Wall {
                segment: Segment::new(Vec2::new(width, 0.0), Vec2::new(width, height)),
                height: h,
            },
            Wall {
                segment: Segment::new(Vec2::new(width, height), Vec2::new(0.0, height)),
                height: h,
            },
            Wall {
                segment: Segment::new(Vec2::new(0.0, height), Vec2::new(0.0, 0.0)),
                height: h,
            },
        ]
    }

    pub fn instance(
        id: &str,
        category: &str,
        footprint: Vec<Vec2>,
        base_z: f64,
        top_z: f64,
    ) -> GroundTruthInstance {
        GroundTruthInstance {
            id: id.to_string(),
            category: category.to_string(),
            attributes: BTreeMap::new(),
            footprint,
            base_z,
            top_z,
            room_hint: None,
        }
    }

    /// 8 x 6 m single room with one bed and one dresser.
    pub fn one_room_scene() -> Scene {
        let mut bed = instance("bed0", "bed", rect_footprint(6.0, 3.0, 1.9, 1.5), 0.0, 0.55);
        bed.attributes.insert(AttrKeyRaw::Color, "blue".into());
        let mut dresser = instance(
            "dresser0",
            "dresser",
            rect_footprint(2.0, 5.0, 1.0, 0.5),
            0.0,
            1.1,
        );
        dresser
            .attributes
            .insert(AttrKeyRaw::Color, "white".into());
        Scene {
            bounds: Bounds {
                x_min: 0.0,
                y_min: 0.0,
                x_max: 8.0,
                y_max: 6.0,
            },
            walls: boxed_room(8.0, 6.0),
            instances: vec![bed, dresser],
            spawn: Spawn {
                position: Vec2::new(1.0, 1.0),
                heading: 0.0,
            },
        }
    }
}
