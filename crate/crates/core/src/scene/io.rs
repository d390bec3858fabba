//! Scene file schema: lengths in meters, angles in degrees on disk and
//! radians in memory.

use super::{AttrKeyRaw, Bounds, GroundTruthInstance, Scene, Spawn, Wall};
use crate::geom::{point_in_polygon, Segment, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene parse error at {field}: {message}")]
    Parse { field: String, message: String },
    #[error("scene validation error at {field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> SceneError {
    SceneError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Serialize, Deserialize)]
struct BoundsDoc {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

#[derive(Serialize, Deserialize)]
struct WallDoc {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    id: String,
    category: String,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
    footprint: Vec<[f64; 2]>,
    base_z: f64,
    top_z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    room_hint: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SpawnDoc {
    x: f64,
    y: f64,
    heading_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    bounds: BoundsDoc,
    walls: Vec<WallDoc>,
    instances: Vec<InstanceDoc>,
    spawn: SpawnDoc,
}

/// Loads and validates a scene document from a file.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path)?;
    load_scene_str(&text)
}

/// Loads and validates a scene document from a JSON string.
pub fn load_scene_str(text: &str) -> Result<Scene, SceneError> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| SceneError::Parse {
        field: json_error_field(&e),
        message: e.to_string(),
    })?;
    validate(doc)
}

fn json_error_field(e: &serde_json::Error) -> String {
    // serde points at the offending key in its message; surface line/column
    // so hand-edited files are easy to fix.
    format!("line {} column {}", e.line(), e.column())
}

fn validate(doc: SceneDoc) -> Result<Scene, SceneError> {
    let bounds = Bounds {
        x_min: doc.bounds.x_min,
        y_min: doc.bounds.y_min,
        x_max: doc.bounds.x_max,
        y_max: doc.bounds.y_max,
    };
    if bounds.width() <= 0.0 || bounds.height() <= 0.0 {
        return Err(invalid("bounds", "empty or inverted rectangle"));
    }

    let mut walls = Vec::with_capacity(doc.walls.len());
    for (i, w) in doc.walls.iter().enumerate() {
        if w.height <= 0.0 {
            return Err(invalid(
                &format!("walls[{i}].height"),
                format!("wall height must be > 0, got {}", w.height),
            ));
        }
        walls.push(Wall {
            segment: Segment::new(Vec2::new(w.x1, w.y1), Vec2::new(w.x2, w.y2)),
            height: w.height,
        });
    }

    let mut seen = BTreeSet::new();
    let mut instances = Vec::with_capacity(doc.instances.len());
    for (i, inst) in doc.instances.into_iter().enumerate() {
        let field = format!("instances[{i}]");
        if !seen.insert(inst.id.clone()) {
            return Err(invalid(
                &format!("{field}.id"),
                format!("duplicate instance id {:?}", inst.id),
            ));
        }
        if inst.top_z <= inst.base_z {
            return Err(invalid(
                &format!("{field}.top_z"),
                format!("top_z {} must exceed base_z {}", inst.top_z, inst.base_z),
            ));
        }
        if inst.footprint.len() < 3 {
            return Err(invalid(
                &format!("{field}.footprint"),
                "footprint needs at least 3 vertices",
            ));
        }
        let footprint: Vec<Vec2> = inst
            .footprint
            .iter()
            .map(|&[x, y]| Vec2::new(x, y))
            .collect();
        if footprint.iter().any(|p| !bounds.contains(*p)) {
            return Err(invalid(
                &format!("{field}.footprint"),
                "footprint vertex outside scene bounds",
            ));
        }
        let mut attributes = BTreeMap::new();
        for (k, v) in inst.attributes {
            let key = match k.as_str() {
                "color" => AttrKeyRaw::Color,
                "shape" => AttrKeyRaw::Shape,
                other => {
                    return Err(invalid(
                        &format!("{field}.attributes"),
                        format!("unknown attribute key {other:?} (allowed: color, shape)"),
                    ))
                }
            };
            if v.trim().is_empty() {
                return Err(invalid(
                    &format!("{field}.attributes.{k}"),
                    "attribute value must be non-empty",
                ));
            }
            attributes.insert(key, v);
        }
        instances.push(GroundTruthInstance {
            id: inst.id,
            category: inst.category,
            attributes,
            footprint,
            base_z: inst.base_z,
            top_z: inst.top_z,
            room_hint: inst.room_hint,
        });
    }

    let spawn_pos = Vec2::new(doc.spawn.x, doc.spawn.y);
    if !bounds.contains(spawn_pos) {
        return Err(invalid("spawn", "spawn point outside scene bounds"));
    }
    let scene = Scene {
        bounds,
        walls,
        instances,
        spawn: Spawn {
            position: spawn_pos,
            heading: doc.spawn.heading_deg.to_radians(),
        },
    };
    if scene.instances.iter().any(|i| {
        point_in_polygon(scene.spawn.position, &i.footprint)
    }) {
        return Err(invalid("spawn", "spawn point inside an instance footprint"));
    }
    Ok(scene)
}

/// Serializes a scene back to its file schema.
pub fn scene_to_string(scene: &Scene) -> String {
    let doc = SceneDoc {
        bounds: BoundsDoc {
            x_min: scene.bounds.x_min,
            y_min: scene.bounds.y_min,
            x_max: scene.bounds.x_max,
            y_max: scene.bounds.y_max,
        },
        walls: scene
            .walls
            .iter()
            .map(|w| WallDoc {
                x1: w.segment.a.x,
                y1: w.segment.a.y,
                x2: w.segment.b.x,
                y2: w.segment.b.y,
                height: w.height,
            })
            .collect(),
        instances: scene
            .instances
            .iter()
            .map(|i| InstanceDoc {
                id: i.id.clone(),
                category: i.category.clone(),
                attributes: i
                    .attributes
                    .iter()
                    .map(|(k, v)| (k.as_str().to_string(), v.clone()))
                    .collect(),
                footprint: i.footprint.iter().map(|p| [p.x, p.y]).collect(),
                base_z: i.base_z,
                top_z: i.top_z,
                room_hint: i.room_hint.clone(),
            })
            .collect(),
        spawn: SpawnDoc {
            x: scene.spawn.position.x,
            y: scene.spawn.position.y,
            heading_deg: scene.spawn.heading.to_degrees(),
        },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("scene serialization");
    out.push('\n');
    out
}

/// Writes a scene document to a file.
pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<(), SceneError> {
    std::fs::write(path, scene_to_string(scene))?;
    Ok(())
}
