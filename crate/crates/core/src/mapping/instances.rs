//! Instance-level 3D mapping: voxel-overlap scoring and the two-pass
//! observation association (proximity first, voxel overlap second).

use super::MappingError;
use crate::geom::Vec2;
use std::collections::BTreeSet;

/// Voxel intersection normalized by the smaller set. Point sets larger than
/// `max_samples` are thinned by an even index stride before voxelization, so
/// the score is deterministic for a given point order.
pub fn voxel_overlap(
    a: &[[f64; 3]],
    b: &[[f64; 3]],
    resolution: f64,
    max_samples: usize,
) -> Result<f64, MappingError> {
    if a.is_empty() || b.is_empty() {
        return Err(MappingError::EmptyPointSet);
    }
    assert!(resolution > 0.0, "voxel resolution must be positive");
    let va = voxel_set(a, resolution, max_samples);
    let vb = voxel_set(b, resolution, max_samples);
    let inter = va.intersection(&vb).count() as f64;
    Ok(inter / va.len().min(vb.len()) as f64)
}

fn voxel_set(points: &[[f64; 3]], resolution: f64, max_samples: usize) -> BTreeSet<[i64; 3]> {
    let subsample = points.len() > max_samples && max_samples > 0;
    let n = if subsample { max_samples } else { points.len() };
    (0..n)
        .map(|i| {
            let p = if subsample {
                points[i * points.len() / max_samples]
            } else {
                points[i]
            };
            [
                (p[0] / resolution).floor() as i64,
                (p[1] / resolution).floor() as i64,
                (p[2] / resolution).floor() as i64,
            ]
        })
        .collect()
}

/// Vertical centroid of a point set; the per-instance height estimate.
pub fn instance_height(points: &[[f64; 3]]) -> f64 {
    debug_assert!(!points.is_empty());
    points.iter().map(|p| p[2]).sum::<f64>() / points.len() as f64
}

fn ground_centroid(points: &[[f64; 3]]) -> Vec2 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    Vec2::new(sx / n, sy / n)
}

/// Agent belief about one mapped instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerificationState {
    Unverified,
    CategoryVerified,
    Rejected,
    Confirmed,
}

#[derive(Clone, Debug)]
pub struct InstanceRecord {
    pub id: u32,
    pub category: String,
    pub points: Vec<[f64; 3]>,
    pub center: Vec2,
    pub z_hat: f64,
    pub state: VerificationState,
    pub observation_count: u32,
}

impl InstanceRecord {
    fn refresh(&mut self) {
        self.center = ground_centroid(&self.points);
        self.z_hat = instance_height(&self.points);
    }
}

/// Association thresholds. Defaults: merge below 0.26 m center distance,
/// or above 0.45 voxel overlap at 0.05 m resolution with a 5,000-point
/// sampling cap.
#[derive(Clone, Copy, Debug)]
pub struct AssociationConfig {
    pub proximity_m: f64,
    pub overlap_threshold: f64,
    pub voxel_resolution: f64,
    pub max_samples: usize,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        AssociationConfig {
            proximity_m: 0.26,
            overlap_threshold: 0.45,
            voxel_resolution: 0.05,
            max_samples: 5000,
        }
    }
}

/// All instance records of one episode.
#[derive(Clone, Debug, Default)]
pub struct InstanceStore {
    records: Vec<InstanceRecord>,
    next_id: u32,
}

impl InstanceStore {
    pub fn new() -> Self {
        InstanceStore::default()
    }

    pub fn records(&self) -> &[InstanceRecord] {
        &self.records
    }

    pub fn get(&self, id: u32) -> Option<&InstanceRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn get_mut(&mut self, id: u32) -> Option<&mut InstanceRecord> {
        self.records.iter_mut().find(|r| r.id == id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_category<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a InstanceRecord> {
        self.records.iter().filter(move |r| r.category == category)
    }
}

/// Two-pass association. Pass 1 merges into the nearest same-category record
/// whose 2D center is within the proximity threshold; pass 2 merges into the
/// same-category record with the highest voxel overlap above the overlap
/// threshold; otherwise a new record is created. Returns the record id.
pub fn associate_instance(
    store: &mut InstanceStore,
    obs: &[[f64; 3]],
    category: &str,
    cfg: &AssociationConfig,
) -> u32 {
    assert!(!obs.is_empty(), "observation point set must be non-empty");
    let obs_center = ground_centroid(obs);

    let mut nearest: Option<(u32, f64)> = None;
    for rec in store.records.iter().filter(|r| r.category == category) {
        let d = rec.center.distance(obs_center);
        if d < cfg.proximity_m && nearest.map_or(true, |(_, best)| d < best) {
            nearest = Some((rec.id, d));
        }
    }
    if let Some((id, _)) = nearest {
        merge(store, id, obs);
        return id;
    }

    let mut best: Option<(u32, f64)> = None;
    for rec in store.records.iter().filter(|r| r.category == category) {
        let s = voxel_overlap(&rec.points, obs, cfg.voxel_resolution, cfg.max_samples)
            .expect("both point sets are non-empty");
        if s > cfg.overlap_threshold && best.map_or(true, |(_, b)| s > b) {
            best = Some((rec.id, s));
        }
    }
    if let Some((id, _)) = best {
        merge(store, id, obs);
        return id;
    }

    let id = store.next_id;
    store.next_id += 1;
    let mut rec = InstanceRecord {
        id,
        category: category.to_string(),
        points: obs.to_vec(),
        center: Vec2::default(),
        z_hat: 0.0,
        state: VerificationState::Unverified,
        observation_count: 1,
    };
    rec.refresh();
    store.records.push(rec);
    id
}

fn merge(store: &mut InstanceStore, id: u32, obs: &[[f64; 3]]) {
    let rec = store.get_mut(id).expect("merge target exists");
    rec.points.extend_from_slice(obs);
    rec.observation_count += 1;
    rec.refresh();
}
