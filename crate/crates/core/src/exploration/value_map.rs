//! Text-conditioned value signal. A ground-truth similarity oracle stands in
//! for the text-image encoder: columns looking at the target or its context
//! categories score high, everything else sits at a low base value. Column
//! scores are splatted along their rays into the value layer with a cos^2
//! angular confidence falloff and confidence-weighted fusion.

use crate::geom::{point_segment_distance, Segment, Vec2};
use crate::goal::GoalSpec;
use crate::mapping::GridStack;
use crate::scene::{AgentState, DepthImage, RayHit, Scene};
use rand::Rng;

/// Per-column similarity aligned with one depth frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityField {
    pub values: Vec<f64>,
}

impl SimilarityField {
    pub fn width(&self) -> usize {
        self.values.len()
    }
}

/// Magnitudes are arbitrary but fixed: only the induced ranking matters.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityConfig {
    pub base: f64,
    pub context_bonus: f64,
    pub target_bonus: f64,
    /// A ray passing within this distance of a context instance center also
    /// collects the context bonus.
    pub context_radius: f64,
    /// Uniform additive noise amplitude.
    pub noise: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            base: 0.1,
            context_bonus: 0.3,
            target_bonus: 0.5,
            context_radius: 1.0,
            noise: 0.0,
        }
    }
}

/// Scores each depth column against the goal using ground truth.
pub fn oracle_similarity<R: Rng>(
    scene: &Scene,
    depth: &DepthImage,
    goal: &GoalSpec,
    cfg: &SimilarityConfig,
    rng: &mut R,
) -> SimilarityField {
    let context_centers: Vec<Vec2> = scene
        .instances
        .iter()
        .filter(|i| goal.context_categories.contains(&i.category))
        .map(|i| i.center())
        .collect();
    let mut values = Vec::with_capacity(depth.width());
    for i in 0..depth.width() {
        let mut v = cfg.base;
        let endpoint = depth.column_endpoint(i);
        let ray = Segment::new(depth.pose.position, endpoint);
        let hit_category = match &depth.columns[i].hit {
            Some(RayHit::Instance(id)) => scene.instance(id).map(|inst| inst.category.as_str()),
            _ => None,
        };
        let hits_context = hit_category.is_some_and(|c| goal.context_categories.contains(c));
        let passes_context = context_centers
            .iter()
            .any(|c| point_segment_distance(*c, &ray) <= cfg.context_radius);
        if hits_context || passes_context {
            v += cfg.context_bonus;
        }
        if hit_category == Some(goal.target_category.as_str()) {
            v += cfg.target_bonus;
        }
        if cfg.noise > 0.0 {
            v += rng.random_range(-cfg.noise..cfg.noise);
        }
        values.push(v.clamp(0.0, 1.0));
    }
    SimilarityField { values }
}

/// Projects one similarity field into the value layer: each column's score is
/// fused into the free cells its ray traverses, weighted by a cos^2 falloff
/// from the optical axis.
pub fn update_value_map(
    grids: &mut GridStack,
    sim: &SimilarityField,
    depth: &DepthImage,
    state: &AgentState,
) {
    assert_eq!(sim.width(), depth.width(), "similarity/depth misalignment");
    let half_fov = depth.config.hfov / 2.0;
    for i in 0..depth.width() {
        let offset = depth.column_offset(i);
        let conf = (offset / half_fov * std::f64::consts::FRAC_PI_2).cos().powi(2);
        let endpoint = depth.column_endpoint(i);
        let mut cells = Vec::new();
        grids.traverse(state.position, endpoint, |x, y| {
            cells.push((x, y));
            true
        });
        for (x, y) in cells {
            if grids.is_free(x, y) {
                grids.fuse_value(x, y, sim.values[i], conf);
            }
        }
    }
}
