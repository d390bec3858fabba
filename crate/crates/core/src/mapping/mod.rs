//! Online maps: co-registered occupancy / wall / room / value layers, the
//! instance-level 3D point-cloud store with two-pass association, RANSAC
//! wall-plane extraction, room segmentation, and geodesic queries.

mod grid;
mod instances;
mod paths;
mod ransac;
mod rooms;

pub use grid::{GridStack, Occupancy, DEFAULT_RESOLUTION};
pub use instances::{
    associate_instance, instance_height, voxel_overlap, AssociationConfig, InstanceRecord,
    InstanceStore, VerificationState,
};
pub use ransac::{extract_wall_planes, PlaneModel, RansacConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("point ({0}, {1}) outside the grid")]
    OutOfGrid(f64, f64),
}

#[cfg(test)]
pub(crate) mod test_grids {
    use super::{GridStack, DEFAULT_RESOLUTION};
    use crate::geom::Vec2;

    /// 10 x 6 m two-room grid: dividing wall at x=5 with an optional 0.9 m
    /// doorway at y in [2.5, 3.4]. Interior cells are free; the grid carries
    /// a margin so wall rasterization never triggers expansion.
    pub fn two_room_grid(doorway_open: bool) -> GridStack {
        let mut g = GridStack::new(Vec2::new(-0.5, -0.5), 220, 140, DEFAULT_RESOLUTION);
        for x in 0..220 {
            for y in 0..140 {
                let c = g.cell_center(x, y);
                if (0.0..=10.0).contains(&c.x) && (0.0..=6.0).contains(&c.y) {
                    g.mark_free(x, y);
                }
            }
        }
        g.rasterize_wall_segment(Vec2::new(0.0, 0.01), Vec2::new(9.99, 0.01));
        g.rasterize_wall_segment(Vec2::new(0.0, 5.99), Vec2::new(9.99, 5.99));
        g.rasterize_wall_segment(Vec2::new(0.01, 0.0), Vec2::new(0.01, 5.99));
        g.rasterize_wall_segment(Vec2::new(9.99, 0.0), Vec2::new(9.99, 5.99));
        if doorway_open {
            g.rasterize_wall_segment(Vec2::new(5.0, 0.0), Vec2::new(5.0, 2.5));
            g.rasterize_wall_segment(Vec2::new(5.0, 3.4), Vec2::new(5.0, 5.99));
        } else {
            g.rasterize_wall_segment(Vec2::new(5.0, 0.0), Vec2::new(5.0, 5.99));
        }
        g.segment_rooms();
        g
    }
}
