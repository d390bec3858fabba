//! Wall-bounded room segmentation. The wall layer is dilated by one cell to
//! close rasterization pinholes, then 4-connected components are grown over
//! everything that is not wall. Occupancy-only obstacles (furniture) sit
//! inside a component without splitting it, so instance centers resolve to
//! rooms too. A component counts as a room only if it contains free space.

use super::grid::{GridStack, Occupancy};
use crate::geom::Vec2;

impl GridStack {
    /// Recomputes the room component layer from the current wall layer.
    pub fn segment_rooms(&mut self) {
        let w = self.width();
        let h = self.height();
        let n = w * h;
        let mut blocked = vec![false; n];
        for y in 0..h {
            for x in 0..w {
                if self.wall_at(x, y) {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let nx = x as i64 + dx;
                            let ny = y as i64 + dy;
                            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                                blocked[ny as usize * w + nx as usize] = true;
                            }
                        }
                    }
                }
            }
        }

        let mut raw = vec![0u32; n];
        let mut next_raw = 0u32;
        // whether each raw component contains free space
        let mut has_free: Vec<bool> = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            if blocked[start] || raw[start] != 0 {
                continue;
            }
            next_raw += 1;
            let id = next_raw;
            has_free.push(false);
            raw[start] = id;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % w, i / w);
                if self.occupancy_at(x, y) == Occupancy::Free {
                    has_free[(id - 1) as usize] = true;
                }
                let neighbors = [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ];
                for (nx, ny) in neighbors {
                    if nx < w && ny < h {
                        let j = ny * w + nx;
                        if !blocked[j] && raw[j] == 0 {
                            raw[j] = id;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }

        // rooms = components with free space; raw ids are already in raster
        // order of their seed cell, which does not depend on occupancy
        let mut relabel = vec![0u32; next_raw as usize + 1];
        let mut rooms = 0u32;
        for raw_id in 1..=next_raw {
            if has_free[(raw_id - 1) as usize] {
                rooms += 1;
                relabel[raw_id as usize] = rooms;
            }
        }
        for i in 0..n {
            self.component[i] = relabel[raw[i] as usize];
        }
        self.room_count = rooms;
    }

    /// Room component at a world point, falling back to the nearest labeled
    /// cell within `radius` when the point's own cell is wall-dilated or
    /// outside the grid.
    pub fn room_of_point(&self, p: Vec2, radius: f64) -> Option<u32> {
        if let Some((x, y)) = self.cell_of(p) {
            if let Some(c) = self.component_at(x, y) {
                return Some(c);
            }
        }
        let r_cells = (radius / self.resolution()).ceil() as i64;
        let cx = ((p.x - self.origin().x) / self.resolution()).floor() as i64;
        let cy = ((p.y - self.origin().y) / self.resolution()).floor() as i64;
        let mut best: Option<(f64, usize, usize)> = None;
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                let nx = cx + dx;
                let ny = cy + dy;
                if nx < 0 || ny < 0 || nx as usize >= self.width() || ny as usize >= self.height()
                {
                    continue;
                }
                let (ux, uy) = (nx as usize, ny as usize);
                if self.component_at(ux, uy).is_none() {
                    continue;
                }
                let d = self.cell_center(ux, uy).distance(p);
                if d <= radius
                    && best.map_or(true, |(bd, by, bx)| {
                        (d, uy, ux) < (bd, by, bx)
                    })
                {
                    best = Some((d, uy, ux));
                }
            }
        }
        best.map(|(_, y, x)| self.component_at(x, y).expect("labeled cell"))
    }
}
