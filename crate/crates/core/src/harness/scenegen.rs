//! Procedural scene generator: a grid of rectangular rooms joined by
//! doorways, a goal template placed in one room, same-category distractors
//! whose context is absent (or, in attribute mode, whose color is wrong),
//! and filler furniture. Every emitted scene passes a ground-truth
//! self-check before it leaves the generator.

use super::episode::{ground_truth_grid, gt_goal_matches};
use crate::geom::{segment_segment_distance, Segment, Vec2};
use crate::goal::{
    caption_from_spec, default_question, GoalSpec, Relation, RelationTriple,
};
use crate::mapping::DEFAULT_RESOLUTION;
use crate::scene::{AttrKeyRaw, Bounds, GroundTruthInstance, Scene, Spawn, Wall};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

const ROOM_W: f64 = 5.6;
const ROOM_H: f64 = 4.6;
const WALL_HEIGHT: f64 = 2.6;
const DOOR_WIDTH: f64 = 0.9;
/// Minimum ground-truth geodesic between a distractor and any goal-context
/// instance; keeps the 3 m co-location gate decisive even on partial maps.
const DISTRACTOR_CONTEXT_MARGIN: f64 = 4.5;
const MAX_ATTEMPTS: usize = 60;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unsupported room count {0} (supported: 1..=6)")]
    RoomCount(usize),
    #[error("placement failed for seed {seed} after {attempts} attempts")]
    Placement { seed: u64, attempts: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub rooms: usize,
    pub distractors: usize,
    /// Distractors satisfy the spatial relations but carry the wrong color.
    pub attribute_distractors: bool,
    /// Sealed inner walls (no doorways); used by room-logic fixtures.
    pub sealed_rooms: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rooms: 2,
            distractors: 1,
            attribute_distractors: false,
            sealed_rooms: false,
        }
    }
}

/// A generated episode setup, with ground-truth bookkeeping for tests.
#[derive(Clone, Debug)]
pub struct GeneratedScene {
    pub scene: Scene,
    pub goal: GoalSpec,
    pub target_instance: String,
    pub distractor_instances: Vec<String>,
}

struct ObjectDims {
    w: f64,
    d: f64,
    base_z: f64,
    top_z: f64,
    wall_mounted: bool,
}

fn dims(category: &str) -> ObjectDims {
    let (w, d, base_z, top_z, wall) = match category {
        "cabinet" => (0.9, 0.45, 0.0, 1.0, false),
        "staircase" => (1.8, 0.9, 0.0, 1.6, false),
        "bed" => (1.8, 1.4, 0.0, 0.55, false),
        "dresser" => (1.0, 0.5, 0.0, 1.1, false),
        "plant" => (0.35, 0.35, 0.0, 1.2, false),
        "table" => (1.1, 0.7, 0.0, 0.74, false),
        "chair" => (0.45, 0.45, 0.0, 0.9, false),
        "sofa" => (1.7, 0.8, 0.0, 0.8, false),
        "nightstand" => (0.45, 0.45, 0.0, 0.6, false),
        "lamp" => (0.3, 0.3, 0.0, 1.5, false),
        "mirror" => (0.6, 0.08, 1.2, 1.8, true),
        "picture" => (0.8, 0.08, 1.3, 1.9, true),
        "tv" => (1.0, 0.1, 0.9, 1.6, true),
        other => panic!("no dimensions for category {other:?}"),
    };
    ObjectDims {
        w,
        d,
        base_z,
        top_z,
        wall_mounted: wall,
    }
}

const COLORS: &[&str] = &["red", "blue", "green", "yellow", "white", "black", "brown"];
const FILLER_POOL: &[&str] = &["chair", "sofa", "nightstand", "lamp", "table", "plant"];

#[derive(Clone, Copy)]
enum TemplateKind {
    /// Wall-mounted target: above the anchor (z) and near it.
    WallAboveAnchor,
    /// Wall-mounted target above the anchor, second context near.
    WallAboveAnchorPlusNear,
    /// Grounded target with a wall-mounted satellite above it and a
    /// grounded neighbor near it.
    SatelliteAbove,
    /// Grounded target near a grounded neighbor.
    NearNeighbor,
}

struct Template {
    target: &'static str,
    kind: TemplateKind,
    anchor: &'static str,
    extra: Option<&'static str>,
}

const TEMPLATES: &[Template] = &[
    Template {
        target: "picture",
        kind: TemplateKind::WallAboveAnchor,
        anchor: "cabinet",
        extra: None,
    },
    Template {
        target: "picture",
        kind: TemplateKind::WallAboveAnchorPlusNear,
        anchor: "cabinet",
        extra: Some("staircase"),
    },
    Template {
        target: "tv",
        kind: TemplateKind::WallAboveAnchor,
        anchor: "cabinet",
        extra: None,
    },
    Template {
        target: "dresser",
        kind: TemplateKind::SatelliteAbove,
        anchor: "mirror",
        extra: Some("bed"),
    },
    Template {
        target: "plant",
        kind: TemplateKind::NearNeighbor,
        anchor: "table",
        extra: None,
    },
];

#[derive(Clone, Copy, Debug)]
struct Room {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

#[derive(Clone, Copy)]
enum Side {
    South,
    North,
    West,
    East,
}

fn grid_dims(rooms: usize) -> Option<(usize, usize)> {
    match rooms {
        1 => Some((1, 1)),
        2 => Some((2, 1)),
        3 => Some((3, 1)),
        4 => Some((2, 2)),
        5 => Some((5, 1)),
        6 => Some((3, 2)),
        _ => None,
    }
}

struct Layout {
    rooms: Vec<Room>,
    walls: Vec<Wall>,
    doorways: Vec<Segment>,
    bounds: Bounds,
}

fn build_layout<R: Rng>(rx: usize, ry: usize, sealed: bool, rng: &mut R) -> Layout {
    let width = rx as f64 * ROOM_W;
    let height = ry as f64 * ROOM_H;
    let mut rooms = Vec::new();
    for j in 0..ry {
        for i in 0..rx {
            rooms.push(Room {
                x0: i as f64 * ROOM_W,
                y0: j as f64 * ROOM_H,
                x1: (i + 1) as f64 * ROOM_W,
                y1: (j + 1) as f64 * ROOM_H,
            });
        }
    }
    let wall = |a: Vec2, b: Vec2| Wall {
        segment: Segment::new(a, b),
        height: WALL_HEIGHT,
    };
    let mut walls = vec![
        wall(Vec2::new(0.0, 0.0), Vec2::new(width, 0.0)),
        wall(Vec2::new(width, 0.0), Vec2::new(width, height)),
        wall(Vec2::new(width, height), Vec2::new(0.0, height)),
        wall(Vec2::new(0.0, height), Vec2::new(0.0, 0.0)),
    ];
    let mut doorways = Vec::new();
    // vertical dividers
    for i in 1..rx {
        let x = i as f64 * ROOM_W;
        for j in 0..ry {
            let y0 = j as f64 * ROOM_H;
            let y1 = (j + 1) as f64 * ROOM_H;
            if sealed {
                walls.push(wall(Vec2::new(x, y0), Vec2::new(x, y1)));
            } else {
                let g = y0 + rng.random_range(0.7..(ROOM_H - 0.7 - DOOR_WIDTH));
                walls.push(wall(Vec2::new(x, y0), Vec2::new(x, g)));
                walls.push(wall(Vec2::new(x, g + DOOR_WIDTH), Vec2::new(x, y1)));
                doorways.push(Segment::new(Vec2::new(x, g), Vec2::new(x, g + DOOR_WIDTH)));
            }
        }
    }
    // horizontal dividers
    for j in 1..ry {
        let y = j as f64 * ROOM_H;
        for i in 0..rx {
            let x0 = i as f64 * ROOM_W;
            let x1 = (i + 1) as f64 * ROOM_W;
            if sealed {
                walls.push(wall(Vec2::new(x0, y), Vec2::new(x1, y)));
            } else {
                let g = x0 + rng.random_range(0.7..(ROOM_W - 0.7 - DOOR_WIDTH));
                walls.push(wall(Vec2::new(x0, y), Vec2::new(g, y)));
                walls.push(wall(Vec2::new(g + DOOR_WIDTH, y), Vec2::new(x1, y)));
                doorways.push(Segment::new(Vec2::new(g, y), Vec2::new(g + DOOR_WIDTH, y)));
            }
        }
    }
    Layout {
        rooms,
        walls,
        doorways,
        bounds: Bounds {
            x_min: 0.0,
            y_min: 0.0,
            x_max: width,
            y_max: height,
        },
    }
}

fn rect_footprint(center: Vec2, w: f64, d: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(center.x - w / 2.0, center.y - d / 2.0),
        Vec2::new(center.x + w / 2.0, center.y - d / 2.0),
        Vec2::new(center.x + w / 2.0, center.y + d / 2.0),
        Vec2::new(center.x - w / 2.0, center.y + d / 2.0),
    ]
}

fn rects_clear(a: &[Vec2], b: &[Vec2], gap: f64) -> bool {
    // axis-aligned rects: interval test with the gap added
    let (ax0, ax1) = (a[0].x, a[2].x);
    let (ay0, ay1) = (a[0].y, a[2].y);
    let (bx0, bx1) = (b[0].x, b[2].x);
    let (by0, by1) = (b[0].y, b[2].y);
    ax1 + gap < bx0 || bx1 + gap < ax0 || ay1 + gap < by0 || by1 + gap < ay0
}

struct Placer {
    instances: Vec<GroundTruthInstance>,
    counter: usize,
}

impl Placer {
    fn new() -> Self {
        Placer {
            instances: Vec::new(),
            counter: 0,
        }
    }

    fn footprint_ok(&self, fp: &[Vec2], room: &Room, doorways: &[Segment]) -> bool {
        for p in fp {
            if p.x < room.x0 + 0.08
                || p.x > room.x1 - 0.08
                || p.y < room.y0 + 0.08
                || p.y > room.y1 - 0.08
            {
                return false;
            }
        }
        for other in &self.instances {
            if !rects_clear(fp, &other.footprint, 0.25) {
                return false;
            }
        }
        // keep passage through doorways clear
        for d in doorways {
            for edge in crate::geom::polygon_edges(fp) {
                if segment_segment_distance(&edge, d) < 0.8 {
                    return false;
                }
            }
        }
        true
    }

    fn add(
        &mut self,
        category: &str,
        footprint: Vec<Vec2>,
        base_z: f64,
        top_z: f64,
        color: Option<&str>,
        room_idx: usize,
    ) -> String {
        let id = format!("{category}_{}", self.counter);
        self.counter += 1;
        let mut attributes = BTreeMap::new();
        if let Some(c) = color {
            attributes.insert(AttrKeyRaw::Color, c.to_string());
        }
        self.instances.push(GroundTruthInstance {
            id: id.clone(),
            category: category.to_string(),
            attributes,
            footprint,
            base_z,
            top_z,
            room_hint: Some(format!("room_{room_idx}")),
        });
        id
    }

    /// Wall-mounted placement: a thin rect offset 0.1 into the room from a
    /// random side, clear of doorways. Returns (id, wall point, side).
    fn place_on_wall<R: Rng>(
        &mut self,
        category: &str,
        color: Option<&str>,
        room: &Room,
        room_idx: usize,
        doorways: &[Segment],
        along_hint: Option<(Side, f64)>,
        rng: &mut R,
    ) -> Option<(String, Vec2, Side)> {
        let od = dims(category);
        for _ in 0..40 {
            let (side, along) = match along_hint {
                Some((side, along)) => (side, along + rng.random_range(-0.1..0.1)),
                None => {
                    let side = match rng.random_range(0..4) {
                        0 => Side::South,
                        1 => Side::North,
                        2 => Side::West,
                        _ => Side::East,
                    };
                    let span = match side {
                        Side::South | Side::North => room.x1 - room.x0,
                        _ => room.y1 - room.y0,
                    };
                    (side, rng.random_range(0.9..(span - 0.9)))
                }
            };
            let (center, w, d) = match side {
                Side::South => (
                    Vec2::new(room.x0 + along, room.y0 + 0.10 + od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::North => (
                    Vec2::new(room.x0 + along, room.y1 - 0.10 - od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::West => (
                    Vec2::new(room.x0 + 0.10 + od.d / 2.0, room.y0 + along),
                    od.d,
                    od.w,
                ),
                Side::East => (
                    Vec2::new(room.x1 - 0.10 - od.d / 2.0, room.y0 + along),
                    od.d,
                    od.w,
                ),
            };
            let fp = rect_footprint(center, w, d);
            if !self.footprint_ok(&fp, room, doorways) {
                continue;
            }
            let id = self.add(category, fp, od.base_z, od.top_z, color, room_idx);
            return Some((id, center, side));
        }
        None
    }

    /// Grounded placement, optionally inside an annulus around an anchor.
    fn place_grounded<R: Rng>(
        &mut self,
        category: &str,
        color: Option<&str>,
        room: &Room,
        room_idx: usize,
        doorways: &[Segment],
        near: Option<(Vec2, f64, f64)>,
        rng: &mut R,
    ) -> Option<String> {
        let od = dims(category);
        let margin = 0.35 + od.w.max(od.d) / 2.0;
        for _ in 0..60 {
            let center = match near {
                Some((anchor, r_min, r_max)) => {
                    let theta = rng.random_range(0.0..std::f64::consts::TAU);
                    let r = rng.random_range(r_min..r_max);
                    anchor + Vec2::from_angle(theta) * r
                }
                None => Vec2::new(
                    rng.random_range((room.x0 + margin)..(room.x1 - margin)),
                    rng.random_range((room.y0 + margin)..(room.y1 - margin)),
                ),
            };
            let fp = rect_footprint(center, od.w, od.d);
            if !self.footprint_ok(&fp, room, doorways) {
                continue;
            }
            return Some(self.add(category, fp, od.base_z, od.top_z, color, room_idx));
        }
        None
    }
}

/// Lays out the template's target (returning its id) plus context objects in
/// the given room. Used for the goal cluster and for attribute distractors.
#[allow(clippy::too_many_arguments)]
fn place_cluster<R: Rng>(
    placer: &mut Placer,
    template: &Template,
    color: &str,
    room: &Room,
    room_idx: usize,
    doorways: &[Segment],
    rng: &mut R,
) -> Option<String> {
    match template.kind {
        TemplateKind::WallAboveAnchor | TemplateKind::WallAboveAnchorPlusNear => {
            let (target_id, wall_point, side) = placer.place_on_wall(
                template.target,
                Some(color),
                room,
                room_idx,
                doorways,
                None,
                rng,
            )?;
            // anchor against the same wall, shifted along it so the target
            // stays visible from the room
            let shift = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let anchor_along = match side {
                Side::South | Side::North => wall_point.x - room.x0 + shift,
                Side::West | Side::East => wall_point.y - room.y0 + shift,
            };
            let od = dims(template.anchor);
            let (center, w, d) = match side {
                Side::South => (
                    Vec2::new(room.x0 + anchor_along, room.y0 + 0.12 + od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::North => (
                    Vec2::new(room.x0 + anchor_along, room.y1 - 0.12 - od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::West => (
                    Vec2::new(room.x0 + 0.12 + od.d / 2.0, room.y0 + anchor_along),
                    od.d,
                    od.w,
                ),
                Side::East => (
                    Vec2::new(room.x1 - 0.12 - od.d / 2.0, room.y0 + anchor_along),
                    od.d,
                    od.w,
                ),
            };
            let fp = rect_footprint(center, w, d);
            if !placer.footprint_ok(&fp, room, doorways) {
                return None;
            }
            placer.add(template.anchor, fp, od.base_z, od.top_z, None, room_idx);
            if matches!(template.kind, TemplateKind::WallAboveAnchorPlusNear) {
                let extra = template.extra.expect("template has a second context");
                placer.place_grounded(
                    extra,
                    None,
                    room,
                    room_idx,
                    doorways,
                    Some((wall_point, 1.0, 1.7)),
                    rng,
                )?;
            }
            Some(target_id)
        }
        TemplateKind::SatelliteAbove => {
            // grounded target against a wall, satellite above it on the same
            // wall, neighbor nearby
            let (satellite_id, wall_point, side) = placer.place_on_wall(
                template.anchor,
                None,
                room,
                room_idx,
                doorways,
                None,
                rng,
            )?;
            let _ = satellite_id;
            let shift = if rng.random_bool(0.5) { 1.1 } else { -1.1 };
            let along = match side {
                Side::South | Side::North => wall_point.x - room.x0 + shift,
                Side::West | Side::East => wall_point.y - room.y0 + shift,
            };
            let od = dims(template.target);
            let (center, w, d) = match side {
                Side::South => (
                    Vec2::new(room.x0 + along, room.y0 + 0.12 + od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::North => (
                    Vec2::new(room.x0 + along, room.y1 - 0.12 - od.d / 2.0),
                    od.w,
                    od.d,
                ),
                Side::West => (
                    Vec2::new(room.x0 + 0.12 + od.d / 2.0, room.y0 + along),
                    od.d,
                    od.w,
                ),
                Side::East => (
                    Vec2::new(room.x1 - 0.12 - od.d / 2.0, room.y0 + along),
                    od.d,
                    od.w,
                ),
            };
            let fp = rect_footprint(center, w, d);
            if !placer.footprint_ok(&fp, room, doorways) {
                return None;
            }
            let target_id = placer.add(
                template.target,
                fp,
                od.base_z,
                od.top_z,
                Some(color),
                room_idx,
            );
            let neighbor = template.extra.expect("template has a neighbor");
            placer.place_grounded(
                neighbor,
                None,
                room,
                room_idx,
                doorways,
                Some((center, 1.3, 2.0)),
                rng,
            )?;
            Some(target_id)
        }
        TemplateKind::NearNeighbor => {
            let target_id = placer.place_grounded(
                template.target,
                Some(color),
                room,
                room_idx,
                doorways,
                None,
                rng,
            )?;
            let center = placer
                .instances
                .iter()
                .find(|i| i.id == target_id)
                .map(|i| i.center())?;
            placer.place_grounded(
                template.anchor,
                None,
                room,
                room_idx,
                doorways,
                Some((center, 0.8, 1.3)),
                rng,
            )?;
            Some(target_id)
        }
    }
}

fn goal_from_template(template: &Template, color: &str, caption: bool) -> GoalSpec {
    let target = template.target.to_string();
    let mut spec = GoalSpec {
        target_category: target.clone(),
        ..GoalSpec::default()
    };
    spec.intrinsic.insert(crate::goal::AttrKey::Color, color.to_string());
    spec.synonym_map.insert(target.clone(), target.clone());
    let mut add_context = |cat: &str| {
        spec.context_categories.insert(cat.to_string());
        spec.synonym_map.insert(cat.to_string(), cat.to_string());
    };
    match template.kind {
        TemplateKind::WallAboveAnchor => {
            add_context(template.anchor);
            spec.relations = vec![
                RelationTriple::new(template.anchor, target.clone(), Relation::Above),
                RelationTriple::new(template.anchor, target.clone(), Relation::Near),
            ];
        }
        TemplateKind::WallAboveAnchorPlusNear => {
            let extra = template.extra.expect("second context");
            add_context(template.anchor);
            add_context(extra);
            spec.relations = vec![
                RelationTriple::new(template.anchor, target.clone(), Relation::Above),
                RelationTriple::new(extra, target.clone(), Relation::Near),
            ];
        }
        TemplateKind::SatelliteAbove => {
            let neighbor = template.extra.expect("neighbor");
            add_context(template.anchor);
            add_context(neighbor);
            spec.relations = vec![
                RelationTriple::new(target.clone(), template.anchor, Relation::Above),
                RelationTriple::new(neighbor, target.clone(), Relation::Near),
            ];
        }
        TemplateKind::NearNeighbor => {
            add_context(template.anchor);
            spec.relations = vec![RelationTriple::new(
                template.anchor,
                target.clone(),
                Relation::Near,
            )];
        }
    }
    spec.questions = spec
        .intrinsic
        .iter()
        .map(|(&k, v)| default_question(&spec.target_category, k, v))
        .collect();
    if caption {
        if let Some(c) = caption_from_spec(&spec) {
            spec.raw_caption = c;
        }
    }
    spec
}

/// Generates a scene/goal pair, deterministic per seed.
pub fn generate_scene(seed: u64, cfg: &GenConfig) -> Result<GeneratedScene, GenError> {
    let (rx, ry) = grid_dims(cfg.rooms).ok_or(GenError::RoomCount(cfg.rooms))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..MAX_ATTEMPTS {
        if let Some(generated) = try_generate(&mut rng, rx, ry, cfg) {
            return Ok(generated);
        }
    }
    Err(GenError::Placement {
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

fn try_generate<R: Rng>(rng: &mut R, rx: usize, ry: usize, cfg: &GenConfig) -> Option<GeneratedScene> {
    let layout = build_layout(rx, ry, cfg.sealed_rooms, rng);
    let template = &TEMPLATES[rng.random_range(0..TEMPLATES.len())];
    let target_color = COLORS[rng.random_range(0..COLORS.len())];
    let goal = goal_from_template(template, target_color, true);

    let target_room = rng.random_range(0..layout.rooms.len());
    let mut placer = Placer::new();
    let target_id = place_cluster(
        &mut placer,
        template,
        target_color,
        &layout.rooms[target_room].clone(),
        target_room,
        &layout.doorways,
        rng,
    )?;

    // distractors in other rooms (or far corners of a single room)
    let mut distractor_ids = Vec::new();
    let other_rooms: Vec<usize> = (0..layout.rooms.len())
        .filter(|&r| r != target_room || layout.rooms.len() == 1)
        .collect();
    for k in 0..cfg.distractors {
        let room_idx = other_rooms[k % other_rooms.len()];
        let room = layout.rooms[room_idx];
        if cfg.attribute_distractors {
            let wrong_color = COLORS
                .iter()
                .find(|c| **c != target_color)
                .expect("palette has more than one color");
            let id = place_cluster(
                &mut placer,
                template,
                wrong_color,
                &room,
                room_idx,
                &layout.doorways,
                rng,
            )?;
            distractor_ids.push(id);
        } else {
            let od = dims(template.target);
            let id = if od.wall_mounted {
                placer
                    .place_on_wall(
                        template.target,
                        Some(target_color),
                        &room,
                        room_idx,
                        &layout.doorways,
                        None,
                        rng,
                    )?
                    .0
            } else {
                placer.place_grounded(
                    template.target,
                    Some(target_color),
                    &room,
                    room_idx,
                    &layout.doorways,
                    None,
                    rng,
                )?
            };
            distractor_ids.push(id);
        }
    }

    // filler furniture in rooms without goal content
    let goal_cats: Vec<&str> = std::iter::once(goal.target_category.as_str())
        .chain(goal.context_categories.iter().map(String::as_str))
        .collect();
    for (idx, room) in layout.rooms.iter().enumerate() {
        if idx == target_room {
            continue;
        }
        let n = rng.random_range(0..=1);
        for _ in 0..n {
            let pool: Vec<&str> = FILLER_POOL
                .iter()
                .copied()
                .filter(|c| !goal_cats.contains(c))
                .collect();
            if pool.is_empty() {
                break;
            }
            let cat = pool[rng.random_range(0..pool.len())];
            let color = COLORS[rng.random_range(0..COLORS.len())];
            // fillers are optional texture; ignore placement failures
            let _ = placer.place_grounded(
                cat,
                Some(color),
                room,
                idx,
                &layout.doorways,
                None,
                rng,
            );
        }
    }

    // spawn in a non-target room when possible
    let spawn_room = if layout.rooms.len() > 1 {
        let candidates: Vec<usize> = (0..layout.rooms.len()).filter(|&r| r != target_room).collect();
        candidates[rng.random_range(0..candidates.len())]
    } else {
        target_room
    };
    let spawn = sample_spawn(&placer, &layout.rooms[spawn_room], rng)?;
    let heading = rng.random_range(0..12) as f64 * 30.0f64.to_radians();

    let scene = Scene {
        bounds: layout.bounds,
        walls: layout.walls.clone(),
        instances: placer.instances.clone(),
        spawn: Spawn {
            position: spawn,
            heading,
        },
    };

    self_check(&scene, &goal, &target_id, &distractor_ids, cfg).then(|| GeneratedScene {
        scene,
        goal,
        target_instance: target_id,
        distractor_instances: distractor_ids,
    })
}

fn sample_spawn<R: Rng>(placer: &Placer, room: &Room, rng: &mut R) -> Option<Vec2> {
    for _ in 0..60 {
        let p = Vec2::new(
            rng.random_range((room.x0 + 0.5)..(room.x1 - 0.5)),
            rng.random_range((room.y0 + 0.5)..(room.y1 - 0.5)),
        );
        let clear = placer.instances.iter().all(|inst| {
            crate::geom::point_polygon_distance(p, &inst.footprint) > 0.45
        });
        if clear {
            return Some(p);
        }
    }
    None
}

fn self_check(
    scene: &Scene,
    goal: &GoalSpec,
    target_id: &str,
    distractor_ids: &[String],
    cfg: &GenConfig,
) -> bool {
    let lexicon = crate::goal::Lexicon::default();
    let gt = ground_truth_grid(scene, DEFAULT_RESOLUTION);

    // the intended target is the unique goal-matching instance
    if !gt_goal_matches(scene, goal, target_id, &gt, &lexicon) {
        return false;
    }
    for inst in &scene.instances {
        if inst.id != target_id
            && inst.category == goal.target_category
            && gt_goal_matches(scene, goal, &inst.id, &gt, &lexicon)
        {
            return false;
        }
    }

    // plain distractors must sit far (geodesically) from every goal context
    if !cfg.attribute_distractors {
        for did in distractor_ids {
            let d = scene.instance(did).expect("distractor exists");
            for ctx in scene
                .instances
                .iter()
                .filter(|i| goal.context_categories.contains(&i.category))
            {
                match gt.geodesic_between(d.center(), ctx.center(), 1.5) {
                    Some(dist) if dist < DISTRACTOR_CONTEXT_MARGIN => return false,
                    _ => {}
                }
            }
        }
    }

    // the goal region must be reachable from spawn and not trivially close
    let target = scene.instance(target_id).expect("target exists");
    let dist = gt.distances_from(scene.spawn.position);
    let mut reach = f64::INFINITY;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let d = dist[y * gt.width() + x];
            if d.is_finite()
                && crate::geom::point_polygon_distance(gt.cell_center(x, y), &target.footprint)
                    <= 0.25
            {
                reach = reach.min(d);
            }
        }
    }
    if !cfg.sealed_rooms && !reach.is_finite() {
        return false;
    }
    if reach.is_finite() && reach < 1.0 {
        return false;
    }
    true
}

/// Writes `scene_{seed}.json` and `goal_{seed}.json` into `dir`.
pub fn write_scene_bundle(
    generated: &GeneratedScene,
    dir: impl AsRef<Path>,
    seed: u64,
) -> Result<(PathBuf, PathBuf), GenError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let scene_path = dir.join(format!("scene_{seed:04}.json"));
    let goal_path = dir.join(format!("goal_{seed:04}.json"));
    std::fs::write(&scene_path, crate::scene::scene_to_string(&generated.scene))?;
    std::fs::write(&goal_path, crate::goal::goal_to_string(&generated.goal))?;
    Ok((scene_path, goal_path))
}
