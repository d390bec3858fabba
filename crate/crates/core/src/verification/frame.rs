//! Viewpoint-aligned local frames: +x points from the viewpoint at the
//! reference center, +y is its counterclockwise perpendicular, and bearings
//! are atan2(y, x) in that frame.

use super::VerifyError;
use crate::geom::Vec2;

/// A 2D frame anchored at a candidate viewpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec2,
    pub yaw: f64,
    pub u_x: Vec2,
    pub u_y: Vec2,
}

/// Aligns a frame at `v` so that +x points at the reference center `c_r`.
pub fn align_frame(v: Vec2, c_r: Vec2) -> Result<LocalFrame, VerifyError> {
    if v == c_r {
        return Err(VerifyError::DegenerateFrame);
    }
    let yaw = (c_r.y - v.y).atan2(c_r.x - v.x);
    Ok(LocalFrame {
        origin: v,
        yaw,
        u_x: Vec2::new(yaw.cos(), yaw.sin()),
        u_y: Vec2::new(-yaw.sin(), yaw.cos()),
    })
}

/// Coordinates of a point expressed in a local frame. The bearing is
/// undefined when the point coincides with the frame origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalCoords {
    pub x: f64,
    pub y: f64,
    pub bearing: Option<f64>,
}

/// Projects `q` into the frame by inner products and computes its bearing.
pub fn to_local(frame: &LocalFrame, q: Vec2) -> LocalCoords {
    let d = q - frame.origin;
    let x = d.dot(frame.u_x);
    let y = d.dot(frame.u_y);
    let bearing = if d.norm_sq() < 1e-24 {
        None
    } else {
        Some(y.atan2(x))
    };
    LocalCoords { x, y, bearing }
}
