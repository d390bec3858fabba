//! Extrinsic verification: room-level filtering of context instances,
//! candidate viewpoint sampling around the relation geometry, and the search
//! for one viewpoint from which every instantiated relation holds.

use super::frame::align_frame;
use super::predicates::{eval_predicate, Tolerances};
use crate::geom::Vec2;
use crate::goal::{GoalSpec, Relation};
use crate::mapping::{GridStack, InstanceRecord, InstanceStore};

/// Geodesic co-location gate for Step 1 (meters).
pub const ROOM_FILTER_GEODESIC_M: f64 = 3.0;
/// Snap radius used to resolve instance centers to rooms and free cells.
pub const CENTER_SNAP_M: f64 = 1.5;

pub const VIEWPOINT_RADII: [f64; 4] = [0.8, 1.2, 1.6, 2.0];
pub const VIEWPOINT_BEARINGS: usize = 24;

/// One goal triple bound to concrete record candidates. Pairs are ordered
/// nearest-to-target first.
#[derive(Clone, Debug)]
pub struct InstantiatedTriple {
    pub relation: Relation,
    pub ref_category: String,
    pub tgt_category: String,
    pub pairs: Vec<(u32, u32)>,
}

/// Everything the viewpoint search needs after room filtering.
#[derive(Clone, Debug)]
pub struct VerificationSetup {
    pub target_id: u32,
    pub target_room: u32,
    pub surviving_contexts: Vec<u32>,
    pub triples: Vec<InstantiatedTriple>,
    /// Center set: the candidate plus every instance appearing in a pair.
    pub centers: Vec<Vec2>,
}

#[derive(Clone, Debug)]
pub enum RoomFilterOutcome {
    Verifiable(VerificationSetup),
    /// No context survives the room gate, or no triple can be instantiated:
    /// the relation check is skipped and exploration resumes.
    Rejected { reason: String },
    /// The target's room is not labeled yet; try again once the map grows.
    Deferred,
}

/// Step 1: keep context instances co-located with the target in the same
/// wall-bounded room within 3 m geodesic, then instantiate candidate pairs
/// for every triple whose endpoint categories both have survivors.
pub fn room_filter(
    target: &InstanceRecord,
    contexts: &[&InstanceRecord],
    grids: &GridStack,
    goal: &GoalSpec,
) -> RoomFilterOutcome {
    let Some(target_room) = grids.room_of_point(target.center, CENTER_SNAP_M) else {
        return RoomFilterOutcome::Deferred;
    };
    let mut survivors: Vec<&InstanceRecord> = Vec::new();
    for rec in contexts {
        if rec.id == target.id {
            continue;
        }
        if grids.room_of_point(rec.center, CENTER_SNAP_M) != Some(target_room) {
            continue;
        }
        match grids.geodesic_between(target.center, rec.center, CENTER_SNAP_M) {
            Some(d) if d <= ROOM_FILTER_GEODESIC_M => survivors.push(rec),
            _ => {}
        }
    }
    if survivors.is_empty() {
        return RoomFilterOutcome::Rejected {
            reason: "no context instance shares the target's room within 3 m".into(),
        };
    }

    let mut by_distance = survivors.clone();
    by_distance.sort_by(|a, b| {
        a.center
            .distance(target.center)
            .total_cmp(&b.center.distance(target.center))
            .then(a.id.cmp(&b.id))
    });

    let candidates_for = |category: &str| -> Vec<u32> {
        if category == goal.target_category {
            vec![target.id]
        } else {
            by_distance
                .iter()
                .filter(|r| r.category == category)
                .map(|r| r.id)
                .collect()
        }
    };

    let mut triples = Vec::new();
    let mut used_ids: Vec<u32> = vec![target.id];
    for t in &goal.relations {
        let refs = candidates_for(&t.reference);
        let tgts = candidates_for(&t.target);
        if refs.is_empty() || tgts.is_empty() {
            continue; // unobserved endpoint category: triple not checkable yet
        }
        let mut pairs = Vec::new();
        for &r in &refs {
            for &g in &tgts {
                if r != g {
                    pairs.push((r, g));
                }
            }
        }
        if pairs.is_empty() {
            continue;
        }
        for &(r, g) in &pairs {
            for id in [r, g] {
                if !used_ids.contains(&id) {
                    used_ids.push(id);
                }
            }
        }
        triples.push(InstantiatedTriple {
            relation: t.relation,
            ref_category: t.reference.clone(),
            tgt_category: t.target.clone(),
            pairs,
        });
    }
    if triples.is_empty() {
        return RoomFilterOutcome::Rejected {
            reason: "no relation triple could be instantiated".into(),
        };
    }

    let centers = used_ids
        .iter()
        .filter_map(|&id| {
            if id == target.id {
                Some(target.center)
            } else {
                survivors.iter().find(|r| r.id == id).map(|r| r.center)
            }
        })
        .collect();
    RoomFilterOutcome::Verifiable(VerificationSetup {
        target_id: target.id,
        target_room,
        surviving_contexts: survivors.iter().map(|r| r.id).collect(),
        triples,
        centers,
    })
}

impl VerificationSetup {
    /// Anchor set for viewpoint sampling: every relation-pair midpoint plus
    /// the centroid of the center set.
    pub fn anchors(&self, store: &InstanceStore) -> Vec<Vec2> {
        let mut anchors: Vec<Vec2> = Vec::new();
        let push_unique = |p: Vec2, anchors: &mut Vec<Vec2>| {
            if !anchors.iter().any(|a| a.distance(p) < 1e-9) {
                anchors.push(p);
            }
        };
        for triple in &self.triples {
            for &(r, t) in &triple.pairs {
                if let (Some(a), Some(b)) = (store.get(r), store.get(t)) {
                    push_unique((a.center + b.center) * 0.5, &mut anchors);
                }
            }
        }
        if !self.centers.is_empty() {
            let centroid = self
                .centers
                .iter()
                .fold(Vec2::default(), |acc, &c| acc + c)
                * (1.0 / self.centers.len() as f64);
            push_unique(centroid, &mut anchors);
        }
        anchors
    }
}

/// The candidate viewpoint set: 24 evenly spaced bearings at radii
/// {0.8, 1.2, 1.6, 2.0} around every anchor, deduplicated per grid cell.
#[derive(Clone, Debug)]
pub struct ViewpointSet {
    pub anchors: Vec<Vec2>,
    /// All generated viewpoints in anchor, radius, bearing order.
    pub raw: Vec<Vec2>,
    /// Deduplicated viewpoints in first-occurrence order.
    pub points: Vec<Vec2>,
}

/// Step 2: sample candidate viewpoints around the anchors.
pub fn sample_viewpoints(anchors: &[Vec2], grids: &GridStack) -> ViewpointSet {
    let mut raw = Vec::with_capacity(anchors.len() * VIEWPOINT_RADII.len() * VIEWPOINT_BEARINGS);
    for m in anchors {
        for r in VIEWPOINT_RADII {
            for k in 0..VIEWPOINT_BEARINGS {
                let theta = std::f64::consts::TAU * k as f64 / VIEWPOINT_BEARINGS as f64;
                raw.push(*m + Vec2::new(theta.cos(), theta.sin()) * r);
            }
        }
    }
    let res = grids.resolution();
    let origin = grids.origin();
    let mut seen = std::collections::BTreeSet::new();
    let mut points = Vec::new();
    for &p in &raw {
        let key = (
            ((p.x - origin.x) / res).floor() as i64,
            ((p.y - origin.y) / res).floor() as i64,
        );
        if seen.insert(key) {
            points.push(p);
        }
    }
    ViewpointSet {
        anchors: anchors.to_vec(),
        raw,
        points,
    }
}

#[derive(Clone, Debug)]
pub enum ExtrinsicOutcome {
    /// Some viewpoint satisfies every triple; the bindings record which
    /// instance pair certified each relation.
    Confirmed {
        viewpoint: Vec2,
        bindings: Vec<(Relation, u32, u32)>,
    },
    Rejected {
        viewpoints_tried: usize,
    },
}

/// Steps 3-4: search the viewpoint set in order for one pose that shares a
/// room with every relation endpoint and satisfies all predicates at once.
pub fn verify_extrinsic(
    setup: &VerificationSetup,
    store: &InstanceStore,
    grids: &GridStack,
    viewpoints: &ViewpointSet,
    tol: &Tolerances,
) -> ExtrinsicOutcome {
    // precompute room membership per record involved
    let mut rooms: std::collections::BTreeMap<u32, Option<u32>> = std::collections::BTreeMap::new();
    for triple in &setup.triples {
        for &(r, t) in &triple.pairs {
            for id in [r, t] {
                rooms.entry(id).or_insert_with(|| {
                    store
                        .get(id)
                        .and_then(|rec| grids.room_of_point(rec.center, CENTER_SNAP_M))
                });
            }
        }
    }
    let mut tried = 0usize;
    for &v in &viewpoints.points {
        let Some((cx, cy)) = grids.cell_of(v) else {
            continue;
        };
        if !grids.is_free(cx, cy) {
            continue; // occupied or unknown cells cannot certify a room
        }
        let Some(room_v) = grids.component_at(cx, cy) else {
            continue;
        };
        tried += 1;
        let mut bindings = Vec::with_capacity(setup.triples.len());
        let mut all_hold = true;
        for triple in &setup.triples {
            let mut satisfied = None;
            for &(rid, tid) in &triple.pairs {
                if rooms[&rid] != Some(room_v) || rooms[&tid] != Some(room_v) {
                    continue;
                }
                let (Some(r), Some(t)) = (store.get(rid), store.get(tid)) else {
                    continue;
                };
                let Ok(frame) = align_frame(v, r.center) else {
                    continue;
                };
                if eval_predicate(
                    triple.relation,
                    &frame,
                    r.center,
                    t.center,
                    r.z_hat,
                    t.z_hat,
                    tol,
                ) {
                    satisfied = Some((triple.relation, rid, tid));
                    break;
                }
            }
            match satisfied {
                Some(b) => bindings.push(b),
                None => {
                    all_hold = false;
                    break;
                }
            }
        }
        if all_hold {
            return ExtrinsicOutcome::Confirmed {
                viewpoint: v,
                bindings,
            };
        }
    }
    ExtrinsicOutcome::Rejected {
        viewpoints_tried: tried,
    }
}
