//! File outputs: episode result documents, layered graymaps with a JSON
//! sidecar, the instance-store dump, and an SVG overview panel. All writers
//! are deterministic so re-exports are byte-identical.

use super::episode::{EpisodeResult, StopVerdict};
use crate::mapping::{GridStack, InstanceStore, Occupancy};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("result parse error: {0}")]
    Parse(String),
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    std::fs::write(path, bytes).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Everything needed to re-run (and therefore re-render) an episode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSpec {
    pub scene: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    pub profile: super::episode::MetricProfile,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u32>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ablate: Vec<super::episode::Ablation>,
}

/// A stored episode: the spec that produced it plus its result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub spec: RunSpec,
    pub result: EpisodeResult,
}

pub fn save_result(file: &ResultFile, path: impl AsRef<Path>) -> Result<(), ExportError> {
    let mut text = serde_json::to_string_pretty(file).expect("result serialization");
    text.push('\n');
    write_file(path.as_ref(), text.as_bytes())
}

pub fn load_result(path: impl AsRef<Path>) -> Result<ResultFile, ExportError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| ExportError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ExportError::Parse(e.to_string()))
}

fn pgm(width: usize, height: usize, pixel: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    // image rows run top to bottom; grid rows bottom to top
    for y in (0..height).rev() {
        for x in 0..width {
            bytes.push(pixel(x, y));
        }
    }
    bytes
}

/// Writes the four graymap layers, the grid sidecar, the instance dump, and
/// an SVG overview with walls, room tints, value heat, the trajectory, and
/// the stop marker.
pub fn export_map_render(
    grids: &GridStack,
    store: &InstanceStore,
    trajectory: &[(f64, f64, f64)],
    verdict: StopVerdict,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<String>, ExportError> {
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out).map_err(|source| ExportError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let w = grids.width();
    let h = grids.height();
    let mut written = Vec::new();

    let layers: [(&str, Box<dyn Fn(usize, usize) -> u8>); 4] = [
        (
            "occupancy.pgm",
            Box::new(|x, y| match grids.occupancy_at(x, y) {
                Occupancy::Unknown => 127,
                Occupancy::Free => 255,
                Occupancy::Occupied => 0,
            }),
        ),
        (
            "walls.pgm",
            Box::new(|x, y| if grids.wall_at(x, y) { 0 } else { 255 }),
        ),
        (
            "rooms.pgm",
            Box::new(|x, y| match grids.room_id_at(x, y) {
                Some(id) => (55 + (id as usize * 53) % 200) as u8,
                None => 0,
            }),
        ),
        (
            "value.pgm",
            Box::new(|x, y| (grids.value_at(x, y).clamp(0.0, 1.0) * 255.0).round() as u8),
        ),
    ];
    for (name, pixel) in &layers {
        let path = out.join(name);
        write_file(&path, &pgm(w, h, pixel))?;
        written.push(name.to_string());
    }

    let sidecar = serde_json::json!({
        "origin": [grids.origin().x, grids.origin().y],
        "resolution": grids.resolution(),
        "extent": [w, h],
        "rooms": grids.room_count(),
    });
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar");
    text.push('\n');
    write_file(&out.join("map_meta.json"), text.as_bytes())?;
    written.push("map_meta.json".into());

    let instances: Vec<serde_json::Value> = store
        .records()
        .iter()
        .map(|r| {
            serde_json::json!({
                "id": r.id,
                "category": r.category,
                "center": [r.center.x, r.center.y],
                "z_hat": r.z_hat,
                "n_points": r.points.len(),
                "state": format!("{:?}", r.state),
            })
        })
        .collect();
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Array(instances)).expect("instances");
    text.push('\n');
    write_file(&out.join("instances.json"), text.as_bytes())?;
    written.push("instances.json".into());

    let svg = render_svg(grids, trajectory, verdict);
    write_file(&out.join("overview.svg"), svg.as_bytes())?;
    written.push("overview.svg".into());
    Ok(written)
}

const ROOM_TINTS: [&str; 6] = ["#cfe8ff", "#ffe3cf", "#d6f5cf", "#f3cfff", "#fff3b0", "#cffcf2"];

fn render_svg(grids: &GridStack, trajectory: &[(f64, f64, f64)], verdict: StopVerdict) -> String {
    let res = grids.resolution();
    let w_m = grids.width() as f64 * res;
    let h_m = grids.height() as f64 * res;
    let scale = 100.0; // px per meter
    let ox = grids.origin().x;
    let oy = grids.origin().y;
    let px = |x: f64| (x - ox) * scale;
    // svg y axis points down
    let py = |y: f64| (h_m - (y - oy)) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        w_m * scale,
        h_m * scale,
        w_m * scale,
        h_m * scale
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>");

    // room tints and value heat at 4x4-cell blocks
    let block = 4;
    let bpx = block as f64 * res * scale;
    for by in (0..grids.height()).step_by(block) {
        for bx in (0..grids.width()).step_by(block) {
            let mut room = None;
            let mut value: f64 = 0.0;
            for dy in 0..block.min(grids.height() - by) {
                for dx in 0..block.min(grids.width() - bx) {
                    room = room.or(grids.room_id_at(bx + dx, by + dy));
                    value = value.max(grids.value_at(bx + dx, by + dy));
                }
            }
            let x0 = bx as f64 * res * scale;
            let y0 = (h_m - (by as f64 + block as f64) * res) * scale;
            if let Some(id) = room {
                let tint = ROOM_TINTS[(id as usize - 1) % ROOM_TINTS.len()];
                let _ = writeln!(
                    svg,
                    "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{bpx:.1}\" height=\"{bpx:.1}\" fill=\"{tint}\"/>"
                );
            }
            if value > 0.05 {
                let _ = writeln!(
                    svg,
                    "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{bpx:.1}\" height=\"{bpx:.1}\" fill=\"#ff3b00\" fill-opacity=\"{:.3}\"/>",
                    0.55 * value
                );
            }
        }
    }

    // walls in black, cell by cell
    let cpx = res * scale;
    for y in 0..grids.height() {
        for x in 0..grids.width() {
            if grids.wall_at(x, y) {
                let x0 = x as f64 * res * scale;
                let y0 = (h_m - (y as f64 + 1.0) * res) * scale;
                let _ = writeln!(
                    svg,
                    "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{cpx:.1}\" height=\"{cpx:.1}\" fill=\"#111111\"/>"
                );
            }
        }
    }

    if trajectory.len() >= 2 {
        let mut points = String::new();
        for (x, y, _) in trajectory {
            let _ = write!(points, "{:.1},{:.1} ", px(*x), py(*y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#ff8800\" stroke-width=\"3\"/>",
            points.trim_end()
        );
    }
    if let Some((x, y, _)) = trajectory.last() {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"8\" fill=\"#ff8800\" stroke=\"#803f00\" stroke-width=\"2\"/>",
            px(*x),
            py(*y)
        );
        let label = match verdict {
            StopVerdict::Target => "Target",
            StopVerdict::Distractor => "Distractor",
            StopVerdict::OffTarget => "Off-target",
            StopVerdict::TimeOut => "Time-out",
        };
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"22\" fill=\"#202020\">{}</text>",
            px(*x) + 12.0,
            py(*y) - 12.0,
            label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::mapping::DEFAULT_RESOLUTION;

    fn grid_with_content() -> (GridStack, InstanceStore) {
        let mut g = GridStack::new(Vec2::new(0.0, 0.0), 80, 60, DEFAULT_RESOLUTION);
        for y in 0..60 {
            for x in 0..80 {
                g.mark_free(x, y);
            }
        }
        g.rasterize_wall_segment(Vec2::new(0.2, 0.2), Vec2::new(3.5, 0.2));
        g.segment_rooms();
        for x in 10..30 {
            g.fuse_value(x, 20, 0.8, 1.0);
        }
        let mut store = InstanceStore::new();
        crate::mapping::associate_instance(
            &mut store,
            &[[1.0, 1.0, 0.5], [1.1, 1.0, 0.6]],
            "bed",
            &crate::mapping::AssociationConfig::default(),
        );
        (g, store)
    }

    #[test]
    fn export_writes_expected_manifest() {
        let (g, store) = grid_with_content();
        let dir = tempfile::tempdir().unwrap();
        let traj = vec![(0.5, 0.5, 0.0), (0.75, 0.5, 0.0), (1.0, 0.5, 0.3)];
        let files =
            export_map_render(&g, &store, &traj, StopVerdict::Target, dir.path()).unwrap();
        assert_eq!(
            files,
            vec![
                "occupancy.pgm",
                "walls.pgm",
                "rooms.pgm",
                "value.pgm",
                "map_meta.json",
                "instances.json",
                "overview.svg"
            ]
        );
        for f in &files {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        let svg = std::fs::read_to_string(dir.path().join("overview.svg")).unwrap();
        assert!(svg.contains("polyline"));
        assert!(svg.contains("Target"));
    }

    #[test]
    fn empty_trajectory_still_renders_marker_free_svg() {
        let (g, store) = grid_with_content();
        let dir = tempfile::tempdir().unwrap();
        export_map_render(&g, &store, &[], StopVerdict::TimeOut, dir.path()).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("overview.svg")).unwrap();
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn single_pose_trajectory_gets_a_marker() {
        let (g, store) = grid_with_content();
        let dir = tempfile::tempdir().unwrap();
        export_map_render(&g, &store, &[(1.0, 1.0, 0.0)], StopVerdict::OffTarget, dir.path())
            .unwrap();
        let svg = std::fs::read_to_string(dir.path().join("overview.svg")).unwrap();
        assert!(!svg.contains("polyline"));
        assert!(svg.contains("circle"));
        assert!(svg.contains("Off-target"));
    }

    #[test]
    fn re_export_is_byte_identical() {
        let (g, store) = grid_with_content();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let traj = vec![(0.5, 0.5, 0.0), (1.0, 0.5, 0.0)];
        export_map_render(&g, &store, &traj, StopVerdict::Target, dir_a.path()).unwrap();
        export_map_render(&g, &store, &traj, StopVerdict::Target, dir_b.path()).unwrap();
        for f in ["occupancy.pgm", "walls.pgm", "rooms.pgm", "value.pgm", "overview.svg"] {
            let a = std::fs::read(dir_a.path().join(f)).unwrap();
            let b = std::fs::read(dir_b.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs");
        }
    }

    #[test]
    fn result_round_trip() {
        let file = ResultFile {
            spec: RunSpec {
                scene: "scene.json".into(),
                goal: Some("goal.json".into()),
                caption: None,
                profile: super::super::episode::MetricProfile::Coin,
                seed: 7,
                max_steps: None,
                noise: 0.0,
                ablate: vec![],
            },
            result: EpisodeResult {
                success: true,
                steps: 42,
                path_length: 3.25,
                shortest_path: 3.0,
                verdict: StopVerdict::Target,
                stop_position: Some((1.0, 2.0)),
                trajectory: vec![(0.0, 0.0, 0.0)],
                trace: vec![],
                seed: 7,
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        save_result(&file, &path).unwrap();
        let loaded = load_result(&path).unwrap();
        assert_eq!(loaded.result.steps, 42);
        assert_eq!(loaded.spec.seed, 7);
    }
}
