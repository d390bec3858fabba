//! Grid storage, depth integration, wall rasterization, and the shared cell
//! traversal. All layers share one origin, resolution, and extent; the grid
//! grows automatically when rays leave it.

use crate::geom::Vec2;
use crate::scene::{AgentState, DepthImage};
use super::PlaneModel;

pub const DEFAULT_RESOLUTION: f64 = 0.05;
const EXPAND_CHUNK: usize = 64;

/// Per-cell occupancy state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Occupancy {
    Unknown,
    Free,
    Occupied,
}

/// Co-registered top-down layers.
#[derive(Clone, Debug)]
pub struct GridStack {
    origin: Vec2,
    resolution: f64,
    width: usize,
    height: usize,
    occupancy: Vec<Occupancy>,
    wall: Vec<bool>,
    /// Room component per cell (0 = none). Covers every non-wall cell of a
    /// component that contains free space, so instance centers inside
    /// footprints still resolve to a room.
    pub(super) component: Vec<u32>,
    pub(super) room_count: u32,
    value: Vec<f64>,
    confidence: Vec<f64>,
    wall_version: u64,
}

impl GridStack {
    pub fn new(origin: Vec2, width: usize, height: usize, resolution: f64) -> Self {
        let n = width * height;
        GridStack {
            origin,
            resolution,
            width,
            height,
            occupancy: vec![Occupancy::Unknown; n],
            wall: vec![false; n],
            component: vec![0; n],
            room_count: 0,
            value: vec![0.0; n],
            confidence: vec![0.0; n],
            wall_version: 0,
        }
    }

    /// Grid centered on `center` with the given half extent per axis.
    pub fn around(center: Vec2, half_extent: f64, resolution: f64) -> Self {
        let cells = ((2.0 * half_extent) / resolution).ceil() as usize;
        let origin = Vec2::new(center.x - half_extent, center.y - half_extent);
        GridStack::new(origin, cells, cells, resolution)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Monotone counter bumped whenever a new wall cell appears.
    pub fn wall_version(&self) -> u64 {
        self.wall_version
    }

    pub fn room_count(&self) -> u32 {
        self.room_count
    }

    fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let cx = ((p.x - self.origin.x) / self.resolution).floor();
        let cy = ((p.y - self.origin.y) / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.width as f64 || cy >= self.height as f64 {
            None
        } else {
            Some((cx as usize, cy as usize))
        }
    }

    pub fn cell_center(&self, x: usize, y: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (x as f64 + 0.5) * self.resolution,
            self.origin.y + (y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn occupancy_at(&self, x: usize, y: usize) -> Occupancy {
        self.occupancy[self.idx(x, y)]
    }

    pub fn is_free(&self, x: usize, y: usize) -> bool {
        self.occupancy_at(x, y) == Occupancy::Free
    }

    pub fn wall_at(&self, x: usize, y: usize) -> bool {
        self.wall[self.idx(x, y)]
    }

    pub fn value_at(&self, x: usize, y: usize) -> f64 {
        self.value[self.idx(x, y)]
    }

    pub fn confidence_at(&self, x: usize, y: usize) -> f64 {
        self.confidence[self.idx(x, y)]
    }

    /// Room id at a cell: set only on free cells (the exported room layer).
    pub fn room_id_at(&self, x: usize, y: usize) -> Option<u32> {
        let i = self.idx(x, y);
        if self.occupancy[i] == Occupancy::Free && self.component[i] != 0 {
            Some(self.component[i])
        } else {
            None
        }
    }

    /// Room component at a cell regardless of occupancy (internal lookups
    /// for instance centers and viewpoints).
    pub fn component_at(&self, x: usize, y: usize) -> Option<u32> {
        let c = self.component[self.idx(x, y)];
        if c == 0 {
            None
        } else {
            Some(c)
        }
    }

    /// Marks a cell free unless it is already occupied.
    pub fn mark_free(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        if self.occupancy[i] != Occupancy::Occupied {
            self.occupancy[i] = Occupancy::Free;
        }
    }

    pub fn mark_occupied(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        self.occupancy[i] = Occupancy::Occupied;
    }

    pub fn mark_wall(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        if !self.wall[i] {
            self.wall[i] = true;
            self.wall_version += 1;
        }
        self.occupancy[i] = Occupancy::Occupied;
    }

    /// Confidence-weighted value fusion; keeps both channels in [0, 1] for
    /// inputs in [0, 1].
    pub fn fuse_value(&mut self, x: usize, y: usize, v_obs: f64, c_obs: f64) {
        if c_obs <= 0.0 {
            return;
        }
        let i = self.idx(x, y);
        let (v_prev, c_prev) = (self.value[i], self.confidence[i]);
        let denom = c_prev + c_obs;
        self.value[i] = (c_prev * v_prev + c_obs * v_obs) / denom;
        self.confidence[i] = (c_prev * c_prev + c_obs * c_obs) / denom;
    }

    /// Grows the grid so that `p` (plus one cell of margin) is inside,
    /// shifting the origin and copying all layers.
    pub fn ensure_contains(&mut self, p: Vec2) {
        let cx = ((p.x - self.origin.x) / self.resolution).floor() as i64;
        let cy = ((p.y - self.origin.y) / self.resolution).floor() as i64;
        let mut grow_left = 0usize;
        let mut grow_bottom = 0usize;
        let mut grow_right = 0usize;
        let mut grow_top = 0usize;
        if cx < 1 {
            grow_left = ((1 - cx) as usize).div_ceil(EXPAND_CHUNK) * EXPAND_CHUNK;
        }
        if cy < 1 {
            grow_bottom = ((1 - cy) as usize).div_ceil(EXPAND_CHUNK) * EXPAND_CHUNK;
        }
        if cx >= self.width as i64 - 1 {
            grow_right =
                ((cx - self.width as i64 + 2) as usize).div_ceil(EXPAND_CHUNK) * EXPAND_CHUNK;
        }
        if cy >= self.height as i64 - 1 {
            grow_top =
                ((cy - self.height as i64 + 2) as usize).div_ceil(EXPAND_CHUNK) * EXPAND_CHUNK;
        }
        if grow_left + grow_bottom + grow_right + grow_top == 0 {
            return;
        }
        let new_w = self.width + grow_left + grow_right;
        let new_h = self.height + grow_bottom + grow_top;
        let copy = |src: &mut Vec<Occupancy>| {
            let mut dst = vec![Occupancy::Unknown; new_w * new_h];
            for y in 0..self.height {
                let s = y * self.width;
                let d = (y + grow_bottom) * new_w + grow_left;
                dst[d..d + self.width].copy_from_slice(&src[s..s + self.width]);
            }
            *src = dst;
        };
        copy(&mut self.occupancy);
        fn copy_layer<T: Copy + Default>(
            src: &mut Vec<T>,
            w: usize,
            h: usize,
            new_w: usize,
            new_h: usize,
            off_x: usize,
            off_y: usize,
        ) {
            let mut dst = vec![T::default(); new_w * new_h];
            for y in 0..h {
                let s = y * w;
                let d = (y + off_y) * new_w + off_x;
                dst[d..d + w].copy_from_slice(&src[s..s + w]);
            }
            *src = dst;
        }
        copy_layer(&mut self.wall, self.width, self.height, new_w, new_h, grow_left, grow_bottom);
        copy_layer(&mut self.component, self.width, self.height, new_w, new_h, grow_left, grow_bottom);
        copy_layer(&mut self.value, self.width, self.height, new_w, new_h, grow_left, grow_bottom);
        copy_layer(&mut self.confidence, self.width, self.height, new_w, new_h, grow_left, grow_bottom);
        self.origin.x -= grow_left as f64 * self.resolution;
        self.origin.y -= grow_bottom as f64 * self.resolution;
        self.width = new_w;
        self.height = new_h;
    }

    /// Visits the cells crossed by the segment from `from` to `to` in order
    /// (Amanatides-Woo). Stops early when `visit` returns false. Cells
    /// outside the grid are skipped.
    pub fn traverse(&self, from: Vec2, to: Vec2, mut visit: impl FnMut(usize, usize) -> bool) {
        let res = self.resolution;
        let mut cx = ((from.x - self.origin.x) / res).floor() as i64;
        let mut cy = ((from.y - self.origin.y) / res).floor() as i64;
        let end_x = ((to.x - self.origin.x) / res).floor() as i64;
        let end_y = ((to.y - self.origin.y) / res).floor() as i64;
        let d = to - from;
        let step_x: i64 = if d.x > 0.0 { 1 } else { -1 };
        let step_y: i64 = if d.y > 0.0 { 1 } else { -1 };
        let next_boundary = |c: i64, step: i64, o: f64| -> f64 {
            let edge = if step > 0 { c + 1 } else { c };
            o + edge as f64 * res
        };
        let mut t_max_x = if d.x.abs() < 1e-15 {
            f64::INFINITY
        } else {
            (next_boundary(cx, step_x, self.origin.x) - from.x) / d.x
        };
        let mut t_max_y = if d.y.abs() < 1e-15 {
            f64::INFINITY
        } else {
            (next_boundary(cy, step_y, self.origin.y) - from.y) / d.y
        };
        let t_delta_x = if d.x.abs() < 1e-15 {
            f64::INFINITY
        } else {
            res / d.x.abs()
        };
        let t_delta_y = if d.y.abs() < 1e-15 {
            f64::INFINITY
        } else {
            res / d.y.abs()
        };
        // bounded by the cell count along the segment plus slack
        let max_steps = ((d.x.abs() + d.y.abs()) / res).ceil() as usize + 4;
        for _ in 0..=max_steps {
            if cx >= 0 && cy >= 0 && cx < self.width as i64 && cy < self.height as i64 {
                if !visit(cx as usize, cy as usize) {
                    return;
                }
            }
            if cx == end_x && cy == end_y {
                return;
            }
            if t_max_x < t_max_y {
                t_max_x += t_delta_x;
                cx += step_x;
            } else {
                t_max_y += t_delta_y;
                cy += step_y;
            }
        }
    }

    /// Integrates one depth frame: cells along each ray become free, hit
    /// cells become occupied, and the grid expands to fit the frame first.
    /// Monotone (no cell returns to unknown) and idempotent per frame.
    pub fn integrate_depth(&mut self, depth: &DepthImage, state: &AgentState) {
        self.ensure_contains(state.position);
        for i in 0..depth.width() {
            self.ensure_contains(depth.column_endpoint(i));
        }
        if let Some((ax, ay)) = self.cell_of(state.position) {
            self.mark_free(ax, ay); // the agent's own cell is trivially free
        }
        for i in 0..depth.width() {
            let endpoint = depth.column_endpoint(i);
            let hit = depth.columns[i].range.is_some();
            let hit_cell = self.cell_of(endpoint);
            let mut free_cells: Vec<(usize, usize)> = Vec::new();
            self.traverse(state.position, endpoint, |x, y| {
                free_cells.push((x, y));
                true
            });
            for &(x, y) in &free_cells {
                if hit && Some((x, y)) == hit_cell {
                    continue;
                }
                self.mark_free(x, y);
            }
            if hit {
                if let Some((hx, hy)) = hit_cell {
                    self.mark_occupied(hx, hy);
                }
            }
        }
    }

    /// Stamps the ground projection of accepted wall-plane inliers into the
    /// wall layer (cumulative across frames).
    pub fn rasterize_walls(&mut self, planes: &[PlaneModel]) {
        for plane in planes {
            for p in &plane.inliers {
                let w = Vec2::new(p[0], p[1]);
                self.ensure_contains(w);
                if let Some((x, y)) = self.cell_of(w) {
                    self.mark_wall(x, y);
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn mark_unknown_for_test(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        self.occupancy[i] = Occupancy::Unknown;
    }

    /// Stamps one world segment directly into the wall layer. Used for
    /// ground-truth grids in fixtures and the scene generator.
    pub fn rasterize_wall_segment(&mut self, a: Vec2, b: Vec2) {
        self.ensure_contains(a);
        self.ensure_contains(b);
        let mut cells = Vec::new();
        self.traverse(a, b, |x, y| {
            cells.push((x, y));
            true
        });
        for (x, y) in cells {
            self.mark_wall(x, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{fixtures, render_depth, SensorConfig};

    fn empty_grid() -> GridStack {
        GridStack::new(Vec2::new(0.0, 0.0), 200, 200, DEFAULT_RESOLUTION)
    }

    /// Independent ray-march oracle: walk tiny steps and collect the cells.
    fn raymarch_cells(from: Vec2, to: Vec2, res: f64) -> Vec<(i64, i64)> {
        let mut cells = Vec::new();
        let n = ((to - from).norm() / (res * 0.01)).ceil() as usize;
        for k in 0..=n {
            let p = from + (to - from) * (k as f64 / n as f64);
            let c = ((p.x / res).floor() as i64, (p.y / res).floor() as i64);
            if cells.last() != Some(&c) {
                cells.push(c);
            }
        }
        cells
    }

    #[test]
    fn traversal_matches_raymarch_oracle() {
        let grid = empty_grid();
        // generic-position endpoints: exact cell-corner crossings admit two
        // equally valid digitizations
        let cases = [
            (Vec2::new(0.26, 0.11), Vec2::new(4.87, 2.93)),
            (Vec2::new(3.013, 3.017), Vec2::new(0.21, 0.73)),
            (Vec2::new(1.03, 1.04), Vec2::new(1.03, 4.02)),
            (Vec2::new(1.02, 2.03), Vec2::new(4.51, 2.03)),
        ];
        for (from, to) in cases {
            let mut got = Vec::new();
            grid.traverse(from, to, |x, y| {
                got.push((x as i64, y as i64));
                true
            });
            let expect = raymarch_cells(from, to, DEFAULT_RESOLUTION);
            assert_eq!(got, expect, "from {from:?} to {to:?}");
        }
    }

    #[test]
    fn single_ray_marks_free_then_occupied() {
        let mut grid = empty_grid();
        let scene = crate::scene::Scene {
            bounds: crate::scene::Bounds {
                x_min: 0.0,
                y_min: 0.0,
                x_max: 9.0,
                y_max: 9.0,
            },
            walls: vec![crate::scene::Wall {
                segment: crate::geom::Segment::new(Vec2::new(4.5, 0.0), Vec2::new(4.5, 9.0)),
                height: 2.5,
            }],
            instances: vec![],
            spawn: crate::scene::Spawn {
                position: Vec2::new(2.5, 2.5),
                heading: 0.0,
            },
        };
        let state = crate::scene::AgentState::at(Vec2::new(2.5, 2.5), 0.0);
        let sensor = SensorConfig {
            columns: 1,
            hfov: 0.001,
            ..SensorConfig::default()
        };
        let depth = render_depth(&scene, &state, &sensor);
        assert!((depth.columns[0].range.unwrap() - 2.0).abs() < 1e-6);
        grid.integrate_depth(&depth, &state);
        // free run: ~2 m / 0.05 m = 40 cells; the wall cell is occupied
        let mut free = 0;
        let mut occupied = 0;
        for x in 0..grid.width() {
            for y in 0..grid.height() {
                match grid.occupancy_at(x, y) {
                    Occupancy::Free => free += 1,
                    Occupancy::Occupied => occupied += 1,
                    Occupancy::Unknown => {}
                }
            }
        }
        assert_eq!(occupied, 1);
        assert!((38..=41).contains(&free), "free cells {free}");
        let (hx, hy) = grid.cell_of(Vec2::new(4.5, 2.5)).unwrap();
        assert_eq!(grid.occupancy_at(hx, hy), Occupancy::Occupied);
    }

    #[test]
    fn no_hit_ray_frees_to_max_range() {
        let mut grid = empty_grid();
        let scene = fixtures::one_room_scene();
        let state = crate::scene::AgentState::at(Vec2::new(1.0, 1.0), 0.5);
        let sensor = SensorConfig {
            columns: 1,
            hfov: 0.001,
            max_range: 3.0,
            ..SensorConfig::default()
        };
        // heading 0.5 rad into open interior: no surface within 3 m
        let depth = render_depth(&scene, &state, &sensor);
        assert!(depth.columns[0].range.is_none());
        grid.integrate_depth(&depth, &state);
        let occupied = (0..grid.width())
            .flat_map(|x| (0..grid.height()).map(move |y| (x, y)))
            .filter(|&(x, y)| grid.occupancy_at(x, y) == Occupancy::Occupied)
            .count();
        assert_eq!(occupied, 0);
        // a 3 m ray at 0.5 rad crosses ~(|dx|+|dy|)/res cells
        let expected = (3.0 * (0.5f64.cos() + 0.5f64.sin()) / 0.05).round() as usize;
        let free = (0..grid.width())
            .flat_map(|x| (0..grid.height()).map(move |y| (x, y)))
            .filter(|&(x, y)| grid.occupancy_at(x, y) == Occupancy::Free)
            .count();
        assert!(
            free.abs_diff(expected) <= 4,
            "free cells {free}, expected about {expected}"
        );
    }

    #[test]
    fn integration_is_idempotent() {
        let scene = fixtures::one_room_scene();
        let state = crate::scene::AgentState::from_spawn(&scene.spawn);
        let depth = render_depth(&scene, &state, &SensorConfig::default());
        let mut once = GridStack::around(state.position, 4.0, DEFAULT_RESOLUTION);
        once.integrate_depth(&depth, &state);
        let mut twice = once.clone();
        twice.integrate_depth(&depth, &state);
        assert_eq!(once.occupancy, twice.occupancy);
    }

    #[test]
    fn grid_expands_and_preserves_layers() {
        let mut grid = GridStack::new(Vec2::new(0.0, 0.0), 40, 40, DEFAULT_RESOLUTION);
        grid.mark_wall(10, 10);
        grid.mark_free(5, 5);
        grid.fuse_value(5, 5, 0.7, 1.0);
        let wall_world = grid.cell_center(10, 10);
        let free_world = grid.cell_center(5, 5);
        grid.ensure_contains(Vec2::new(-3.0, -3.0));
        grid.ensure_contains(Vec2::new(6.0, 6.0));
        assert!(grid.cell_of(Vec2::new(-3.0, -3.0)).is_some());
        let (wx, wy) = grid.cell_of(wall_world).unwrap();
        assert!(grid.wall_at(wx, wy));
        let (fx, fy) = grid.cell_of(free_world).unwrap();
        assert_eq!(grid.occupancy_at(fx, fy), Occupancy::Free);
        assert!((grid.value_at(fx, fy) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn value_fusion_weighted_average() {
        let mut grid = empty_grid();
        grid.fuse_value(3, 3, 0.2, 1.0);
        grid.fuse_value(3, 3, 0.8, 1.0);
        assert!((grid.value_at(3, 3) - 0.5).abs() < 1e-12);
        assert!(grid.confidence_at(3, 3) <= 1.0);
        assert_eq!(grid.value_at(4, 4), 0.0);
        assert_eq!(grid.confidence_at(4, 4), 0.0);
    }
}
