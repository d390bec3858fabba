//! Score binning and the seven binary spatial predicates, evaluated in a
//! viewpoint-aligned frame. Above/below compare fused height estimates only
//! and ignore the frame entirely.

use super::frame::{to_local, LocalFrame};
use super::intrinsic::Bin;
use super::VerifyError;
use crate::geom::Vec2;
use crate::goal::Relation;

/// Predicate tolerances: 0.15 m position, 25 degrees bearing, 2.0 m
/// nearness, 0.15 m height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub eps_m: f64,
    pub eps_theta: f64,
    pub d_near: f64,
    pub eps_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_m: 0.15,
            eps_theta: 25.0f64.to_radians(),
            d_near: 2.0,
            eps_z: 0.15,
        }
    }
}

/// Discretizes a 0..=15 VQA score into No / Unknown / Yes.
pub fn bin_score(score: u16) -> Result<Bin, VerifyError> {
    match score {
        0..=4 => Ok(Bin::No),
        5..=10 => Ok(Bin::Unknown),
        11..=15 => Ok(Bin::Yes),
        other => Err(VerifyError::ScoreOutOfRange(other)),
    }
}

/// Evaluates one relation predicate for reference center `c_r` and target
/// center `c_t` (heights `z_r`, `z_t`) in a frame aligned to the reference.
pub fn eval_predicate(
    rho: Relation,
    frame: &LocalFrame,
    c_r: Vec2,
    c_t: Vec2,
    z_r: f64,
    z_t: f64,
    tol: &Tolerances,
) -> bool {
    let r = to_local(frame, c_r);
    let t = to_local(frame, c_t);
    match rho {
        Relation::Left => t.y - r.y >= tol.eps_m,
        Relation::Right => r.y - t.y >= tol.eps_m,
        Relation::Front => match t.bearing {
            Some(b) => b.abs() <= tol.eps_theta && t.x <= r.x - tol.eps_m,
            None => false,
        },
        Relation::Behind => match t.bearing {
            Some(b) => b.abs() <= tol.eps_theta && t.x >= r.x + tol.eps_m,
            None => false,
        },
        Relation::Near => c_t.distance(c_r) <= tol.d_near,
        Relation::Above => z_t - z_r >= tol.eps_z,
        Relation::Below => z_r - z_t >= tol.eps_z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goal::ALL_RELATIONS;
    use crate::verification::align_frame;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn bins_partition_the_range() {
        assert_eq!(bin_score(3).unwrap(), Bin::No);
        assert_eq!(bin_score(7).unwrap(), Bin::Unknown);
        assert_eq!(bin_score(12).unwrap(), Bin::Yes);
        for s in 0..=15u16 {
            let b = bin_score(s).unwrap();
            let expected = match s {
                0..=4 => Bin::No,
                5..=10 => Bin::Unknown,
                _ => Bin::Yes,
            };
            assert_eq!(b, expected);
        }
        assert!(bin_score(16).is_err());
    }

    #[test]
    fn left_in_identity_frame() {
        let v = Vec2::new(0.0, 0.0);
        let c_r = Vec2::new(2.0, 0.0);
        let c_t = Vec2::new(2.0, 1.0);
        let f = align_frame(v, c_r).unwrap();
        assert!(eval_predicate(Relation::Left, &f, c_r, c_t, 0.5, 0.5, &tol()));
        assert!(!eval_predicate(Relation::Right, &f, c_r, c_t, 0.5, 0.5, &tol()));
    }

    #[test]
    fn front_by_hand_evaluation() {
        let v = Vec2::new(0.0, 0.0);
        let c_r = Vec2::new(3.0, 0.0);
        let c_t = Vec2::new(2.0, 0.0);
        let f = align_frame(v, c_r).unwrap();
        // bearing 0 <= 25 degrees and 2 <= 3 - 0.15
        assert!(eval_predicate(Relation::Front, &f, c_r, c_t, 0.5, 0.5, &tol()));
        assert!(!eval_predicate(Relation::Behind, &f, c_r, c_t, 0.5, 0.5, &tol()));
    }

    #[test]
    fn above_below_use_heights_only() {
        let v = Vec2::new(0.0, 0.0);
        let c_r = Vec2::new(2.0, 0.5);
        let c_t = Vec2::new(2.0, 0.6);
        let f = align_frame(v, c_r).unwrap();
        assert!(eval_predicate(Relation::Above, &f, c_r, c_t, 0.5, 1.7, &tol()));
        assert!(!eval_predicate(Relation::Below, &f, c_r, c_t, 0.5, 1.7, &tol()));
        assert!(eval_predicate(Relation::Below, &f, c_r, c_t, 1.7, 0.5, &tol()));
    }

    #[test]
    fn near_is_a_plain_distance_gate() {
        let v = Vec2::new(0.0, 0.0);
        let c_r = Vec2::new(1.0, 0.0);
        let f = align_frame(v, c_r).unwrap();
        assert!(eval_predicate(Relation::Near, &f, c_r, Vec2::new(1.0, 1.9), 0.0, 0.0, &tol()));
        assert!(!eval_predicate(Relation::Near, &f, c_r, Vec2::new(1.0, 2.1), 0.0, 0.0, &tol()));
    }

    proptest! {
        /// Left and right are mutually exclusive whenever the lateral gap
        /// clears the tolerance.
        #[test]
        fn left_right_mutually_exclusive(
            vx in -5.0..5.0f64, vy in -5.0..5.0f64,
            rx in -5.0..5.0f64, ry in -5.0..5.0f64,
            tx in -5.0..5.0f64, ty in -5.0..5.0f64,
        ) {
            let v = Vec2::new(vx, vy);
            let c_r = Vec2::new(rx, ry);
            let c_t = Vec2::new(tx, ty);
            prop_assume!(v.distance(c_r) > 1e-6);
            let f = align_frame(v, c_r).unwrap();
            let l = eval_predicate(Relation::Left, &f, c_r, c_t, 0.0, 0.0, &tol());
            let r = eval_predicate(Relation::Right, &f, c_r, c_t, 0.0, 0.0, &tol());
            prop_assert!(!(l && r));
        }

        /// Rotating the whole configuration about the origin changes no
        /// predicate outcome: aligned frames absorb global rotation.
        #[test]
        fn rotation_equivariance(
            vx in -5.0..5.0f64, vy in -5.0..5.0f64,
            rx in -5.0..5.0f64, ry in -5.0..5.0f64,
            tx in -5.0..5.0f64, ty in -5.0..5.0f64,
            z_r in 0.0..2.0f64, z_t in 0.0..2.0f64,
            angle in 0.0..std::f64::consts::TAU,
        ) {
            let v = Vec2::new(vx, vy);
            let c_r = Vec2::new(rx, ry);
            let c_t = Vec2::new(tx, ty);
            prop_assume!(v.distance(c_r) > 1e-3);
            let rot = |p: Vec2| Vec2::new(
                p.x * angle.cos() - p.y * angle.sin(),
                p.x * angle.sin() + p.y * angle.cos(),
            );
            let f = align_frame(v, c_r).unwrap();
            let g = align_frame(rot(v), rot(c_r)).unwrap();
            for rho in ALL_RELATIONS {
                let a = eval_predicate(rho, &f, c_r, c_t, z_r, z_t, &tol());
                let b = eval_predicate(rho, &g, rot(c_r), rot(c_t), z_r, z_t, &tol());
                prop_assert_eq!(a, b, "relation {} disagrees", rho.as_str());
            }
        }
    }
}
