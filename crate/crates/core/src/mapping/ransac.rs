//! Iterative RANSAC extraction of vertical wall planes. Hypotheses come from
//! seeded 3-point samples; consensus planes are refit by PCA over their
//! inliers, and accepted planes must be near-vertical, tall enough, and
//! supported by enough points.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

/// A fitted plane n . p = offset with unit normal.
#[derive(Clone, Debug)]
pub struct PlaneModel {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inliers: Vec<[f64; 3]>,
}

impl PlaneModel {
    pub fn distance(&self, p: &[f64; 3]) -> f64 {
        (self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] - self.offset).abs()
    }

    /// Vertical spread of the inlier set.
    pub fn vertical_extent(&self) -> f64 {
        let (min, max) = self
            .inliers
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[2]), hi.max(p[2]))
            });
        (max - min).max(0.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RansacConfig {
    /// Inlier point-to-plane distance threshold (m).
    pub inlier_threshold: f64,
    /// Minimum supporting points per accepted plane.
    pub min_inliers: usize,
    /// Iteration cap per plane.
    pub max_iterations: usize,
    /// Maximum structural planes returned per call.
    pub max_planes: usize,
    /// Vertical-plane constraint on the unit normal.
    pub max_nz: f64,
    /// Minimum vertical inlier extent; shorter consensus sets are discarded
    /// as furniture faces.
    pub min_wall_height: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            inlier_threshold: 0.03,
            min_inliers: 400,
            max_iterations: 1500,
            max_planes: 3,
            max_nz: 0.3,
            min_wall_height: 1.0,
        }
    }
}

/// Extracts up to `max_planes` vertical planes. Input points are expected to
/// be range- and height-gated already. Inliers of each consensus set are
/// removed before the next iteration whether or not the plane is kept.
pub fn extract_wall_planes<R: Rng>(
    points: &[[f64; 3]],
    cfg: &RansacConfig,
    rng: &mut R,
) -> Vec<PlaneModel> {
    let mut remaining: Vec<[f64; 3]> = points.to_vec();
    let mut planes = Vec::new();
    let max_rounds = cfg.max_planes + 3;
    for _ in 0..max_rounds {
        if planes.len() >= cfg.max_planes || remaining.len() < cfg.min_inliers.max(3) {
            break;
        }
        let Some(consensus) = best_consensus(&remaining, cfg, rng) else {
            break;
        };
        let Some(plane) = refit(&consensus, &remaining, cfg) else {
            break;
        };
        // consume the supporting points either way so the search progresses
        remaining.retain(|p| plane.distance(p) > cfg.inlier_threshold);
        let vertical_ok = plane.normal[2].abs() <= cfg.max_nz;
        let tall_enough = plane.vertical_extent() >= cfg.min_wall_height;
        if vertical_ok && plane.inliers.len() >= cfg.min_inliers && tall_enough {
            planes.push(plane);
        }
    }
    planes
}

struct Hypothesis {
    normal: Vector3<f64>,
    offset: f64,
    inlier_count: usize,
}

fn best_consensus<R: Rng>(
    points: &[[f64; 3]],
    cfg: &RansacConfig,
    rng: &mut R,
) -> Option<Hypothesis> {
    let n = points.len();
    let mut best: Option<Hypothesis> = None;
    let mut needed = cfg.max_iterations;
    let mut it = 0;
    while it < needed.min(cfg.max_iterations) {
        it += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let k = rng.random_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let a = Vector3::from(points[i]);
        let b = Vector3::from(points[j]);
        let c = Vector3::from(points[k]);
        let normal = (b - a).cross(&(c - a));
        let norm = normal.norm();
        if norm < 1e-9 {
            continue;
        }
        let normal = normal / norm;
        if normal.z.abs() > cfg.max_nz {
            continue; // cannot become a vertical plane
        }
        let offset = normal.dot(&a);
        let count = points
            .iter()
            .filter(|p| (normal.dot(&Vector3::from(**p)) - offset).abs() <= cfg.inlier_threshold)
            .count();
        if best.as_ref().map_or(true, |h| count > h.inlier_count) {
            // standard adaptive termination at 99% confidence
            let w = count as f64 / n as f64;
            let denom = (1.0 - w.powi(3)).max(1e-12).ln();
            let adaptive = ((1.0f64 - 0.99).ln() / denom).ceil();
            needed = (adaptive.max(32.0) as usize).min(cfg.max_iterations);
            best = Some(Hypothesis {
                normal,
                offset,
                inlier_count: count,
            });
        }
    }
    // refit can only grow the set modestly, so half-support consensus sets
    // are already hopeless
    best.filter(|h| h.inlier_count >= (cfg.min_inliers / 2).max(3))
}

/// PCA refit over the consensus inliers, then one inlier re-selection pass.
fn refit(hyp: &Hypothesis, points: &[[f64; 3]], cfg: &RansacConfig) -> Option<PlaneModel> {
    let members: Vec<&[f64; 3]> = points
        .iter()
        .filter(|p| (hyp.normal.dot(&Vector3::from(**p)) - hyp.offset).abs() <= cfg.inlier_threshold)
        .collect();
    if members.len() < 3 {
        return None;
    }
    let n = members.len() as f64;
    let centroid = members
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(**p))
        / n;
    let mut cov = Matrix3::zeros();
    for p in &members {
        let d = Vector3::from(**p) - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eigen = cov.symmetric_eigen();
    let min_idx = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    let mut normal = eigen.eigenvectors.column(min_idx).into_owned();
    let norm = normal.norm();
    if norm < 1e-12 {
        return None;
    }
    normal /= norm;
    // canonical sign: prefer n_z >= 0, then lexicographic on (x, y)
    let flip = normal.z < -1e-9
        || (normal.z.abs() <= 1e-9 && (normal.x < -1e-9 || (normal.x.abs() <= 1e-9 && normal.y < 0.0)));
    if flip {
        normal = -normal;
    }
    let offset = normal.dot(&centroid);
    let inliers: Vec<[f64; 3]> = points
        .iter()
        .filter(|p| (normal.dot(&Vector3::from(**p)) - offset).abs() <= cfg.inlier_threshold)
        .copied()
        .collect();
    Some(PlaneModel {
        normal: [normal.x, normal.y, normal.z],
        offset,
        inliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Noisy points on the vertical plane a*x + b*y = d spanning ~3 m wide
    /// and z in [0.2, 2.4].
    pub(crate) fn plane_points<R: Rng>(
        normal_xy: (f64, f64),
        d: f64,
        count: usize,
        sigma: f64,
        rng: &mut R,
    ) -> Vec<[f64; 3]> {
        let (a, b) = normal_xy;
        let norm = (a * a + b * b).sqrt();
        let (a, b) = (a / norm, b / norm);
        let tangent = (-b, a);
        (0..count)
            .map(|_| {
                let along: f64 = rng.random_range(-1.5..1.5);
                let z: f64 = rng.random_range(0.2..2.4);
                let noise: f64 = rng.random_range(-1.0..1.0) * sigma * 3.0f64.sqrt();
                [
                    a * d + tangent.0 * along + a * noise,
                    b * d + tangent.1 * along + b * noise,
                    z,
                ]
            })
            .collect()
    }

    #[test]
    fn recovers_single_vertical_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points = plane_points((1.0, 0.0), 2.0, 1000, 0.005, &mut rng);
        let planes = extract_wall_planes(&points, &RansacConfig::default(), &mut rng);
        assert_eq!(planes.len(), 1);
        let p = &planes[0];
        assert!(p.normal[0].abs() > 0.99, "normal {:?}", p.normal);
        assert!((p.offset.abs() - 2.0).abs() < 0.02);
        assert!(p.inliers.len() >= 400);
    }

    #[test]
    fn horizontal_plane_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let points: Vec<[f64; 3]> = (0..1000)
            .map(|_| {
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    1.0 + rng.random_range(-0.005..0.005),
                ]
            })
            .collect();
        let planes = extract_wall_planes(&points, &RansacConfig::default(), &mut rng);
        assert!(planes.is_empty());
    }

    #[test]
    fn two_perpendicular_walls_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut points = plane_points((1.0, 0.0), 2.0, 800, 0.005, &mut rng);
        points.extend(plane_points((0.0, 1.0), -1.0, 800, 0.005, &mut rng));
        let planes = extract_wall_planes(&points, &RansacConfig::default(), &mut rng);
        assert_eq!(planes.len(), 2);
        for p in &planes {
            let align_x = p.normal[0].abs();
            let align_y = p.normal[1].abs();
            let cos = align_x.max(align_y);
            assert!(cos.acos().to_degrees() <= 2.0, "normal {:?}", p.normal);
        }
    }

    #[test]
    fn short_furniture_face_is_discarded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // a dense vertical face only 0.6 m tall
        let points: Vec<[f64; 3]> = (0..900)
            .map(|_| {
                [
                    1.5 + rng.random_range(-0.004..0.004),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.8..1.4),
                ]
            })
            .collect();
        let planes = extract_wall_planes(&points, &RansacConfig::default(), &mut rng);
        assert!(planes.is_empty());
    }

    #[test]
    fn too_few_points_yield_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let planes = extract_wall_planes(
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]],
            &RansacConfig::default(),
            &mut rng,
        );
        assert!(planes.is_empty());
    }

    #[test]
    fn accepted_planes_satisfy_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut points = plane_points((1.0, 0.2), 1.4, 900, 0.005, &mut rng);
        points.extend(plane_points((0.3, 1.0), -0.8, 700, 0.005, &mut rng));
        let cfg = RansacConfig::default();
        for p in extract_wall_planes(&points, &cfg, &mut rng) {
            let n = Vector3::from(p.normal);
            assert!((n.norm() - 1.0).abs() < 1e-9);
            assert!(p.normal[2] <= cfg.max_nz);
            assert!(p.inliers.len() >= cfg.min_inliers);
            assert!(p.vertical_extent() >= cfg.min_wall_height);
            for q in &p.inliers {
                assert!(p.distance(q) <= cfg.inlier_threshold + 1e-12);
            }
        }
    }
}
