//! The episode loop: render depth, gate detections, grow the maps, update
//! the value layer, verify candidates, and steer to frontiers until the
//! agent stops at a confirmed instance or the budget runs out.

use crate::exploration::{
    apply_room_override, extract_frontiers, oracle_similarity, plan_local, rank_frontiers,
    update_value_map, ExplorationState, LocalPlan, SimilarityConfig,
};
use crate::geom::{point_polygon_distance, point_segment_distance, Segment, Vec2};
use crate::goal::{GoalSpec, Lexicon};
use crate::mapping::{
    associate_instance, extract_wall_planes, AssociationConfig, GridStack, InstanceStore,
    Occupancy, RansacConfig, VerificationState, DEFAULT_RESOLUTION,
};
use crate::scene::{
    oracle_detect, oracle_vqa_attribute, oracle_vqa_category, render_depth, step_agent, Action,
    AgentState, DetectorNoise, RayHit, Scene, SensorConfig, VqaAttributeNoise,
};
use crate::verification::{
    room_filter, sample_viewpoints, verify_extrinsic, ExtrinsicOutcome, IntrinsicSession,
    IntrinsicVerdict, RoomFilterOutcome, Tolerances, VerifyError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Success radius / step budget bundles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricProfile {
    Coin,
    InstanceNav,
}

impl MetricProfile {
    pub fn success_radius(self) -> f64 {
        match self {
            MetricProfile::Coin => 0.25,
            MetricProfile::InstanceNav => 1.0,
        }
    }

    pub fn max_steps(self) -> u32 {
        match self {
            MetricProfile::Coin => 500,
            MetricProfile::InstanceNav => 1000,
        }
    }
}

/// Pipeline stages that can be switched off for ablation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Rank frontiers by distance only (nearest-frontier exploration).
    ValueMap,
    /// Skip the yes/no VLM gate on open-set detections.
    CategoryVerify,
    /// Skip intrinsic attribute verification.
    Intrinsic,
    /// Skip extrinsic relation verification.
    Extrinsic,
}

impl Ablation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "value-map" => Some(Ablation::ValueMap),
            "category-verify" => Some(Ablation::CategoryVerify),
            "intrinsic" => Some(Ablation::Intrinsic),
            "extrinsic" => Some(Ablation::Extrinsic),
            _ => None,
        }
    }
}

/// Detection acceptance thresholds: 0.45 for open-vocabulary proposals, 0.8
/// for COCO-confirmed ones, 0.6 for the yes/no VLM gate.
#[derive(Clone, Copy, Debug)]
pub struct GateConfig {
    pub open_vocab_min: f64,
    pub coco_min: f64,
    pub vqa_min: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            open_vocab_min: 0.45,
            coco_min: 0.8,
            vqa_min: 0.6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeOptions {
    pub profile: MetricProfile,
    pub seed: u64,
    /// Overrides the profile's step budget when set.
    pub max_steps: Option<u32>,
    /// Overrides the profile's success radius when set.
    pub success_radius: Option<f64>,
    /// Oracle noise level in [0, 1]; 0 keeps every oracle exact.
    pub noise: f64,
    pub ablations: BTreeSet<Ablation>,
    pub sensor: SensorConfig,
    pub gates: GateConfig,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions {
            profile: MetricProfile::Coin,
            seed: 0,
            max_steps: None,
            success_radius: None,
            noise: 0.0,
            ablations: BTreeSet::new(),
            sensor: SensorConfig::default(),
            gates: GateConfig::default(),
        }
    }
}

impl EpisodeOptions {
    pub fn max_steps(&self) -> u32 {
        self.max_steps.unwrap_or_else(|| self.profile.max_steps())
    }

    pub fn success_radius(&self) -> f64 {
        self.success_radius
            .unwrap_or_else(|| self.profile.success_radius())
    }

    fn ablated(&self, a: Ablation) -> bool {
        self.ablations.contains(&a)
    }
}

/// Where the episode ended, following the usual outcome taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopVerdict {
    /// Stopped within the success radius of a goal-matching instance.
    Target,
    /// Stopped at a same-category instance that does not match the goal.
    Distractor,
    /// Stopped away from any same-category instance.
    OffTarget,
    /// Budget exhausted without stopping.
    TimeOut,
}

/// Verification events logged for trace export.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    CandidateDetected {
        step: u32,
        record: u32,
        category: String,
    },
    IntrinsicResolved {
        step: u32,
        record: u32,
        accepted: bool,
        bins: Vec<(usize, u8, String)>,
    },
    RoomFilter {
        step: u32,
        record: u32,
        outcome: String,
        surviving_contexts: usize,
    },
    ExtrinsicChecked {
        step: u32,
        record: u32,
        viewpoints: usize,
        confirmed: bool,
        viewpoint: Option<(f64, f64)>,
    },
    OverrideFired {
        step: u32,
        room: u32,
    },
    Exhausted {
        step: u32,
    },
    Stopped {
        step: u32,
        verdict: StopVerdict,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: u32,
    pub path_length: f64,
    pub shortest_path: f64,
    pub verdict: StopVerdict,
    pub stop_position: Option<(f64, f64)>,
    pub trajectory: Vec<(f64, f64, f64)>,
    pub trace: Vec<TraceEvent>,
    pub seed: u64,
}

/// Rasterizes the full scene into a grid: interior free, footprints
/// occupied, walls stamped into the wall layer, rooms segmented. Used for
/// ground-truth queries (shortest paths, generator self-checks).
pub fn ground_truth_grid(scene: &Scene, resolution: f64) -> GridStack {
    let margin = 0.6;
    let width = ((scene.bounds.width() + 2.0 * margin) / resolution).ceil() as usize;
    let height = ((scene.bounds.height() + 2.0 * margin) / resolution).ceil() as usize;
    let origin = Vec2::new(scene.bounds.x_min - margin, scene.bounds.y_min - margin);
    let mut g = GridStack::new(origin, width, height, resolution);
    for y in 0..height {
        for x in 0..width {
            if scene.bounds.contains(g.cell_center(x, y)) {
                g.mark_free(x, y);
            }
        }
    }
    for inst in &scene.instances {
        for y in 0..height {
            for x in 0..width {
                if crate::geom::point_in_polygon(g.cell_center(x, y), &inst.footprint) {
                    g.mark_occupied(x, y);
                }
            }
        }
        for edge in crate::geom::polygon_edges(&inst.footprint) {
            let mut cells = Vec::new();
            g.traverse(edge.a, edge.b, |x, y| {
                cells.push((x, y));
                true
            });
            for (x, y) in cells {
                g.mark_occupied(x, y);
            }
        }
    }
    for wall in &scene.walls {
        g.rasterize_wall_segment(wall.segment.a, wall.segment.b);
    }
    g.segment_rooms();
    g
}

/// Ground-truth goal check for one instance: category, intrinsic attributes,
/// and (when the goal has relations) extrinsic verification over the
/// ground-truth map. Defines which instance(s) count as the described goal.
pub fn gt_goal_matches(
    scene: &Scene,
    goal: &GoalSpec,
    instance_id: &str,
    gt_grid: &GridStack,
    lexicon: &Lexicon,
) -> bool {
    let Some(inst) = scene.instance(instance_id) else {
        return false;
    };
    if lexicon.canonical(&inst.category) != goal.target_category {
        return false;
    }
    for (key, want) in &goal.intrinsic {
        let raw = match key {
            crate::goal::AttrKey::Color => crate::scene::AttrKeyRaw::Color,
            crate::goal::AttrKey::Shape => crate::scene::AttrKeyRaw::Shape,
        };
        match inst.attributes.get(&raw) {
            Some(have) if have.to_lowercase() == want.to_lowercase() => {}
            _ => return false,
        }
    }
    if goal.relations.is_empty() {
        return true;
    }
    // ground-truth instance store mirroring the scene
    let mut store = InstanceStore::new();
    let mut target_rec_id = None;
    for gt in &scene.instances {
        let c = gt.center();
        let obs = vec![[c.x, c.y, gt.mid_z()]];
        let id = associate_instance(
            &mut store,
            &obs,
            &lexicon.canonical(&gt.category),
            &AssociationConfig {
                proximity_m: 1e-6, // keep every ground-truth instance distinct
                overlap_threshold: 1.1,
                ..AssociationConfig::default()
            },
        );
        store.get_mut(id).unwrap().state = VerificationState::CategoryVerified;
        if gt.id == instance_id {
            target_rec_id = Some(id);
        }
    }
    let Some(target_rec_id) = target_rec_id else {
        return false;
    };
    let target = store.get(target_rec_id).unwrap().clone();
    let contexts: Vec<&crate::mapping::InstanceRecord> = store
        .records()
        .iter()
        .filter(|r| r.id != target_rec_id)
        .collect();
    match room_filter(&target, &contexts, gt_grid, goal) {
        RoomFilterOutcome::Verifiable(setup) => {
            let viewpoints = sample_viewpoints(&setup.anchors(&store), gt_grid);
            matches!(
                verify_extrinsic(&setup, &store, gt_grid, &viewpoints, &Tolerances::default()),
                ExtrinsicOutcome::Confirmed { .. }
            )
        }
        _ => false,
    }
}

/// Expands the scalar noise level into per-oracle noise models.
fn noise_models(level: f64) -> (DetectorNoise, VqaAttributeNoise, SimilarityConfig, f64) {
    let mut det = DetectorNoise {
        flip_prob: 0.1 * level,
        confidence_jitter: 0.5 * level,
        ..DetectorNoise::default()
    };
    if level > 0.0 {
        for (a, b) in [("dresser", "cabinet"), ("cabinet", "dresser"), ("sofa", "bed")] {
            det.confusion.insert(a.to_string(), b.to_string());
        }
    }
    let attr = VqaAttributeNoise {
        max_offset: (3.0 * level).round() as i16,
        force_unknown_prob: 0.1 * level,
    };
    let sim = SimilarityConfig {
        noise: 0.1 * level,
        ..SimilarityConfig::default()
    };
    (det, attr, sim, 0.3 * level)
}

/// Per-column hit converted to gated 3D points for wall-plane extraction.
fn wall_points(scene: &Scene, depth: &crate::scene::DepthImage) -> Vec<[f64; 3]> {
    let mut points = Vec::new();
    for (i, col) in depth.columns.iter().enumerate() {
        let Some(range) = col.range else { continue };
        if !(0.5..=5.0).contains(&range) {
            continue;
        }
        let p = depth.column_endpoint(i);
        let (lo, hi) = match &col.hit {
            Some(RayHit::Wall(wi)) => (0.0, scene.walls[*wi].height),
            Some(RayHit::Instance(id)) => {
                let inst = scene.instance(id).expect("hit instance exists");
                (inst.base_z, inst.top_z)
            }
            None => continue,
        };
        let lo = lo.max(0.8);
        let hi = hi.min(3.0);
        let mut z = lo;
        while z <= hi + 1e-9 {
            points.push([p.x, p.y, z]);
            z += 0.1;
        }
    }
    points
}

/// Observed 3D points for one detection: the hit point of each mask column,
/// sampled across the instance's vertical extent.
fn detection_points(
    scene: &Scene,
    depth: &crate::scene::DepthImage,
    det: &crate::scene::Detection,
) -> Vec<[f64; 3]> {
    let inst = scene.instance(&det.instance_id).expect("detected instance");
    let mut points = Vec::new();
    for &col in &det.mask {
        let p = depth.column_endpoint(col);
        let mut z = inst.base_z;
        while z <= inst.top_z + 1e-9 {
            points.push([p.x, p.y, z]);
            z += 0.1;
        }
        if points
            .last()
            .is_some_and(|q| (q[2] - inst.top_z).abs() > 1e-9)
        {
            points.push([p.x, p.y, inst.top_z]);
        }
    }
    points
}

struct PendingIntrinsic {
    record: u32,
    gt_instance: String,
    session: IntrinsicSession,
}

/// A confirmed instance being approached.
struct Approach {
    record: u32,
    goal_cell: Option<Vec2>,
    /// Staging cells that did not yield a legal stop.
    tried_cells: Vec<Vec2>,
    /// (quantized position, absolute heading index) of forwards the
    /// environment refused; the greedy skips them.
    banned_moves: BTreeSet<((i64, i64), i32)>,
}

fn heading_index(heading: f64) -> i32 {
    let steps = heading / crate::scene::TURN_STEP_RAD;
    (steps.round() as i32).rem_euclid(12)
}

/// Clearance check against the agent's own map: true when no occupied cell
/// sits within the disc radius of the swept segment.
fn grid_forward_clear(grids: &GridStack, from: Vec2, to: Vec2) -> bool {
    let r = crate::scene::AGENT_RADIUS;
    let sweep = Segment::new(from, to);
    let lo_x = from.x.min(to.x) - r - 0.05;
    let hi_x = from.x.max(to.x) + r + 0.05;
    let lo_y = from.y.min(to.y) - r - 0.05;
    let hi_y = from.y.max(to.y) + r + 0.05;
    let res = grids.resolution();
    let origin = grids.origin();
    let x0 = (((lo_x - origin.x) / res).floor().max(0.0)) as usize;
    let y0 = (((lo_y - origin.y) / res).floor().max(0.0)) as usize;
    let x1 = ((((hi_x - origin.x) / res).ceil()) as usize).min(grids.width().saturating_sub(1));
    let y1 = ((((hi_y - origin.y) / res).ceil()) as usize).min(grids.height().saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            if grids.occupancy_at(x, y) == Occupancy::Occupied
                && point_segment_distance(grids.cell_center(x, y), &sweep) < r - 0.5 * res
            {
                return false;
            }
        }
    }
    true
}

/// Runs one episode. Deterministic for a fixed (scene, goal, options) tuple.
pub fn run_episode(scene: &Scene, goal: &GoalSpec, opts: &EpisodeOptions) -> EpisodeResult {
    let lexicon = Lexicon::default();
    // canonical category labels throughout the pipeline
    let mut scene = scene.clone();
    for inst in &mut scene.instances {
        inst.category = lexicon.canonical(&inst.category);
    }
    let scene = &scene;

    let max_steps = opts.max_steps();
    let success_radius = opts.success_radius();
    let (det_noise, attr_noise, sim_cfg, vqa_blend) = noise_models(opts.noise);
    let vqa_cat_noise = crate::scene::VqaCategoryNoise {
        blend_to_half: vqa_blend,
        ambiguity_mask_fraction: 0.0,
    };
    let assoc_cfg = AssociationConfig::default();
    let ransac_cfg = RansacConfig::default();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let gt_grid = ground_truth_grid(scene, DEFAULT_RESOLUTION);
    let matching: Vec<&crate::scene::GroundTruthInstance> = scene
        .instances
        .iter()
        .filter(|inst| gt_goal_matches(scene, goal, &inst.id, &gt_grid, &lexicon))
        .collect();
    let shortest_path = shortest_path_to_goal(scene, &gt_grid, &matching, success_radius);

    let mut state = AgentState::from_spawn(&scene.spawn);
    let mut grids = GridStack::around(state.position, 3.0, DEFAULT_RESOLUTION);
    let mut store = InstanceStore::new();
    let mut xs = ExplorationState::default();
    let mut trajectory = vec![(state.position.x, state.position.y, state.heading)];
    let mut trace: Vec<TraceEvent> = Vec::new();

    let mut blacklist: BTreeSet<u32> = BTreeSet::new();
    let mut intrinsic_passed: BTreeSet<u32> = BTreeSet::new();
    let mut intrinsic_done: BTreeSet<u32> = BTreeSet::new();
    let mut pending: Option<PendingIntrinsic> = None;
    let mut approach: Option<Approach> = None;
    // majority ground-truth contributor per record, for oracle binding
    let mut record_gt: BTreeMap<u32, BTreeMap<String, u32>> = BTreeMap::new();
    // last extrinsic attempt signature per record
    let mut extrinsic_sig: BTreeMap<u32, (u64, usize, u32)> = BTreeMap::new();
    let mut segmented_wall_version = u64::MAX;
    let mut stall_steps = 0u32;
    let mut last_position = state.position;
    let mut skip_waypoints: BTreeMap<(i64, i64), u32> = BTreeMap::new();
    let mut exhausted_logged = false;

    let mut final_verdict = StopVerdict::TimeOut;
    let mut stop_position = None;

    for step in 0..max_steps {
        // ---- perceive ----
        let depth = render_depth(scene, &state, &opts.sensor);
        grids.integrate_depth(&depth, &state);

        let detections = oracle_detect(scene, &depth, &det_noise, &mut rng);
        for det in &detections {
            let category = lexicon.canonical(&det.proposed_category);
            let accepted = if det.is_coco {
                det.confidence >= opts.gates.coco_min
            } else if det.confidence < opts.gates.open_vocab_min {
                false
            } else if opts.ablated(Ablation::CategoryVerify) {
                true
            } else {
                oracle_vqa_category(
                    scene,
                    &det.instance_id,
                    &category,
                    det.mask_fraction(depth.width()),
                    &lexicon,
                    &vqa_cat_noise,
                )
                .map(|p| p >= opts.gates.vqa_min)
                .unwrap_or(false)
            };
            if !accepted {
                continue;
            }
            let points = detection_points(scene, &depth, det);
            if points.is_empty() {
                continue;
            }
            let id = associate_instance(&mut store, &points, &category, &assoc_cfg);
            let rec = store.get_mut(id).unwrap();
            if rec.state == VerificationState::Unverified {
                rec.state = VerificationState::CategoryVerified;
            }
            *record_gt
                .entry(id)
                .or_default()
                .entry(det.instance_id.clone())
                .or_insert(0) += 1;
        }

        // ---- wall map ----
        let gated = wall_points(scene, &depth);
        if gated.len() >= ransac_cfg.min_inliers {
            let planes = extract_wall_planes(&gated, &ransac_cfg, &mut rng);
            grids.rasterize_walls(&planes);
        }
        if grids.wall_version() != segmented_wall_version {
            grids.segment_rooms();
            segmented_wall_version = grids.wall_version();
        }

        // ---- value map ----
        let sim = oracle_similarity(scene, &depth, goal, &sim_cfg, &mut rng);
        let frame_score = sim.values.iter().copied().fold(0.0f64, f64::max);
        if !opts.ablated(Ablation::ValueMap) {
            update_value_map(&mut grids, &sim, &depth, &state);
        }

        // ---- verification ----
        if approach.is_none() {
            let majority_gt =
                |record: u32, record_gt: &BTreeMap<u32, BTreeMap<String, u32>>| -> Option<String> {
                    record_gt.get(&record).and_then(|m| {
                        m.iter()
                            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                            .map(|(id, _)| id.clone())
                    })
                };

            if let Some(p) = pending.as_mut() {
                let gt_id = p.gt_instance.clone();
                let mut scorer = |q: &crate::goal::AttributeQuestion, _frame: usize| {
                    oracle_vqa_attribute(scene, &gt_id, q, &attr_noise, &mut rng)
                        .map_err(|e| VerifyError::Oracle(e.to_string()))
                };
                let verdict = p
                    .session
                    .push_frame(step as usize + 1, frame_score, &mut scorer)
                    .expect("attribute oracle cannot fail on live records");
                if p.session.is_resolved() {
                    let record = p.record;
                    let bins = p
                        .session
                        .history
                        .iter()
                        .map(|e| (e.question_index, e.score, format!("{:?}", e.bin)))
                        .collect();
                    let accepted = verdict == IntrinsicVerdict::Accepted;
                    trace.push(TraceEvent::IntrinsicResolved {
                        step,
                        record,
                        accepted,
                        bins,
                    });
                    intrinsic_done.insert(record);
                    if accepted {
                        intrinsic_passed.insert(record);
                    } else {
                        blacklist.insert(record);
                        if let Some(r) = store.get_mut(record) {
                            r.state = VerificationState::Rejected;
                        }
                    }
                    pending = None;
                }
            } else {
                // pick the next unexamined target-category candidate
                let candidate = store
                    .records()
                    .iter()
                    .filter(|r| {
                        r.category == goal.target_category
                            && r.state == VerificationState::CategoryVerified
                            && !blacklist.contains(&r.id)
                            && !intrinsic_done.contains(&r.id)
                    })
                    .map(|r| r.id)
                    .min();
                if let Some(record) = candidate {
                    trace.push(TraceEvent::CandidateDetected {
                        step,
                        record,
                        category: goal.target_category.clone(),
                    });
                    if opts.ablated(Ablation::Intrinsic) || goal.questions.is_empty() {
                        intrinsic_done.insert(record);
                        intrinsic_passed.insert(record);
                    } else if let Some(gt_instance) = majority_gt(record, &record_gt) {
                        let gt_id = gt_instance.clone();
                        let mut scorer = |q: &crate::goal::AttributeQuestion, _frame: usize| {
                            oracle_vqa_attribute(scene, &gt_id, q, &attr_noise, &mut rng)
                                .map_err(|e| VerifyError::Oracle(e.to_string()))
                        };
                        let session = IntrinsicSession::start(goal, &mut scorer)
                            .expect("attribute oracle cannot fail on live records");
                        if session.is_resolved() {
                            let accepted = session.verdict() == IntrinsicVerdict::Accepted;
                            let bins = session
                                .history
                                .iter()
                                .map(|e| (e.question_index, e.score, format!("{:?}", e.bin)))
                                .collect();
                            trace.push(TraceEvent::IntrinsicResolved {
                                step,
                                record,
                                accepted,
                                bins,
                            });
                            intrinsic_done.insert(record);
                            if accepted {
                                intrinsic_passed.insert(record);
                            } else {
                                blacklist.insert(record);
                                if let Some(r) = store.get_mut(record) {
                                    r.state = VerificationState::Rejected;
                                }
                            }
                        } else {
                            pending = Some(PendingIntrinsic {
                                record,
                                gt_instance,
                                session,
                            });
                        }
                    }
                }
            }

            // extrinsic attempts for intrinsically accepted candidates
            let ready: Vec<u32> = intrinsic_passed
                .iter()
                .copied()
                .filter(|id| !blacklist.contains(id))
                .collect();
            for record in ready {
                let Some(rec) = store.get(record) else { continue };
                let sig = (grids.wall_version(), store.len(), rec.observation_count);
                if extrinsic_sig.get(&record) == Some(&sig) {
                    continue; // nothing changed since the last attempt
                }
                extrinsic_sig.insert(record, sig);

                if opts.ablated(Ablation::Extrinsic) || goal.relations.is_empty() {
                    if let Some(r) = store.get_mut(record) {
                        r.state = VerificationState::Confirmed;
                    }
                    approach = Some(Approach {
                        record,
                        goal_cell: None,
                    });
                    break;
                }
                let target = store.get(record).unwrap().clone();
                let contexts: Vec<&crate::mapping::InstanceRecord> = store
                    .records()
                    .iter()
                    .filter(|r| {
                        r.id != record
                            && goal.context_categories.contains(&r.category)
                            && r.state != VerificationState::Rejected
                    })
                    .collect();
                match room_filter(&target, &contexts, &grids, goal) {
                    RoomFilterOutcome::Verifiable(setup) => {
                        trace.push(TraceEvent::RoomFilter {
                            step,
                            record,
                            outcome: "verifiable".into(),
                            surviving_contexts: setup.surviving_contexts.len(),
                        });
                        let viewpoints = sample_viewpoints(&setup.anchors(&store), &grids);
                        match verify_extrinsic(&setup, &store, &grids, &viewpoints, &tol) {
                            ExtrinsicOutcome::Confirmed { viewpoint, .. } => {
                                trace.push(TraceEvent::ExtrinsicChecked {
                                    step,
                                    record,
                                    viewpoints: viewpoints.points.len(),
                                    confirmed: true,
                                    viewpoint: Some((viewpoint.x, viewpoint.y)),
                                });
                                if let Some(r) = store.get_mut(record) {
                                    r.state = VerificationState::Confirmed;
                                }
                                approach = Some(Approach {
                                    record,
                                    goal_cell: None,
                                });
                            }
                            ExtrinsicOutcome::Rejected { viewpoints_tried } => {
                                trace.push(TraceEvent::ExtrinsicChecked {
                                    step,
                                    record,
                                    viewpoints: viewpoints_tried,
                                    confirmed: false,
                                    viewpoint: None,
                                });
                                blacklist.insert(record);
                                intrinsic_passed.remove(&record);
                                if let Some(r) = store.get_mut(record) {
                                    r.state = VerificationState::Rejected;
                                }
                            }
                        }
                    }
                    RoomFilterOutcome::Rejected { reason } => {
                        // context not found yet: keep exploring, try again
                        // when the map changes
                        trace.push(TraceEvent::RoomFilter {
                            step,
                            record,
                            outcome: reason,
                            surviving_contexts: 0,
                        });
                    }
                    RoomFilterOutcome::Deferred => {}
                }
                if approach.is_some() {
                    break;
                }
            }
        }

        // ---- act ----
        let action = if let Some(ap) = approach.as_mut() {
            approach_action(&grids, &store, &state, ap, success_radius)
        } else {
            explore_action(
                &grids,
                &store,
                goal,
                &mut xs,
                &state,
                opts,
                step,
                &mut skip_waypoints,
                &mut trace,
                &mut exhausted_logged,
            )
        };

        if action == Action::Stop {
            stop_position = Some(state.position);
            let verdict = classify_stop(scene, goal, &matching, state.position, success_radius);
            trace.push(TraceEvent::Stopped { step, verdict });
            final_verdict = verdict;
            break;
        }

        state = step_agent(scene, &state, action);
        trajectory.push((state.position.x, state.position.y, state.heading));

        // watchdog: discard the waypoint if the agent is pinned in place
        if state.position.distance(last_position) < 1e-9 {
            stall_steps += 1;
        } else {
            stall_steps = 0;
            last_position = state.position;
        }
        if stall_steps > 14 {
            if let Some(wp) = xs.waypoint.take() {
                let key = quantize(wp);
                skip_waypoints.insert(key, state.step_count + 60);
            }
            if let Some(ap) = approach.as_mut() {
                ap.goal_cell = None; // re-derive the approach cell
            }
            stall_steps = 0;
        }
    }

    let success = final_verdict == StopVerdict::Target;
    EpisodeResult {
        success,
        steps: state.step_count,
        path_length: state.path_length,
        shortest_path,
        verdict: final_verdict,
        stop_position: stop_position.map(|p| (p.x, p.y)),
        trajectory,
        trace,
        seed: opts.seed,
    }
}

fn quantize(p: Vec2) -> (i64, i64) {
    ((p.x / 0.1).round() as i64, (p.y / 0.1).round() as i64)
}

/// Ground-truth shortest path from spawn into the success region around any
/// goal-matching instance, floored at one cell.
fn shortest_path_to_goal(
    scene: &Scene,
    gt_grid: &GridStack,
    matching: &[&crate::scene::GroundTruthInstance],
    success_radius: f64,
) -> f64 {
    let spawn = scene.spawn.position;
    let dist = gt_grid.distances_from(spawn);
    let mut best = f64::INFINITY;
    for inst in matching {
        for y in 0..gt_grid.height() {
            for x in 0..gt_grid.width() {
                let d = dist[y * gt_grid.width() + x];
                if !d.is_finite() || d >= best {
                    continue;
                }
                let c = gt_grid.cell_center(x, y);
                if point_polygon_distance(c, &inst.footprint) <= success_radius {
                    best = d;
                }
            }
        }
    }
    if !best.is_finite() {
        // unreachable goal: fall back to the straight-line lower bound
        best = matching
            .iter()
            .map(|i| spawn.distance(i.center()))
            .fold(f64::INFINITY, f64::min);
    }
    best.max(gt_grid.resolution())
}

fn classify_stop(
    scene: &Scene,
    goal: &GoalSpec,
    matching: &[&crate::scene::GroundTruthInstance],
    position: Vec2,
    success_radius: f64,
) -> StopVerdict {
    for inst in matching {
        if point_polygon_distance(position, &inst.footprint) <= success_radius {
            return StopVerdict::Target;
        }
    }
    for inst in &scene.instances {
        if inst.category == goal.target_category
            && point_polygon_distance(position, &inst.footprint) <= success_radius
        {
            return StopVerdict::Distractor;
        }
    }
    StopVerdict::OffTarget
}

/// Final-approach controller: head for a free cell adjacent to the believed
/// instance surface, switch to greedy one-step lookahead nearby, and stop as
/// soon as the believed distance clears the success radius.
fn approach_action(
    grids: &GridStack,
    store: &InstanceStore,
    state: &AgentState,
    ap: &mut Approach,
    success_radius: f64,
) -> Action {
    let Some(rec) = store.get(ap.record) else {
        return Action::Stop;
    };
    let surface: Vec<Vec2> = rec.points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
    let believed = surface
        .iter()
        .map(|p| state.position.distance(*p))
        .fold(f64::INFINITY, f64::min);
    if believed <= success_radius - 0.01 {
        return Action::Stop;
    }

    if believed <= 1.2 {
        // greedy lookahead over the 12 headings
        let mut best: Option<(f64, Action)> = None;
        for k in 0..12i32 {
            let heading = state.heading + k as f64 * crate::scene::TURN_STEP_RAD;
            let landing = state.position + Vec2::from_angle(heading) * crate::scene::FORWARD_STEP_M;
            if !grid_forward_clear(grids, state.position, landing) {
                continue;
            }
            let d = surface
                .iter()
                .map(|p| landing.distance(*p))
                .fold(f64::INFINITY, f64::min);
            let first_action = if k == 0 {
                Action::Forward
            } else if k <= 6 {
                Action::TurnLeft
            } else {
                Action::TurnRight
            };
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, first_action));
            }
        }
        if let Some((d, action)) = best {
            if d < believed - 1e-6 {
                return action;
            }
        }
    }

    // global approach: plan to a non-occupied cell within the success radius
    // of the believed surface (the local planner crosses unknown space)
    if ap.goal_cell.is_none() {
        ap.goal_cell = nearest_approach_cell(grids, state.position, &surface, success_radius);
    }
    match ap.goal_cell {
        Some(goal_cell) => match plan_local(grids, state, goal_cell) {
            LocalPlan::Act(a) => a,
            LocalPlan::Arrived => {
                // arrived at the staging cell but still outside the radius:
                // nudge with the lookahead next step
                ap.goal_cell = None;
                Action::TurnLeft
            }
            LocalPlan::Unreachable => {
                ap.goal_cell = None;
                Action::TurnLeft
            }
        },
        None => Action::TurnLeft,
    }
}

fn nearest_approach_cell(
    grids: &GridStack,
    from: Vec2,
    surface: &[Vec2],
    success_radius: f64,
) -> Option<Vec2> {
    let res = grids.resolution();
    let origin = grids.origin();
    let (lo, hi) = surface.iter().fold(
        (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), p| {
            (
                Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        },
    );
    let x0 = (((lo.x - success_radius - origin.x) / res).floor().max(0.0)) as usize;
    let y0 = (((lo.y - success_radius - origin.y) / res).floor().max(0.0)) as usize;
    let x1 = ((((hi.x + success_radius - origin.x) / res).ceil()) as usize)
        .min(grids.width().saturating_sub(1));
    let y1 = ((((hi.y + success_radius - origin.y) / res).ceil()) as usize)
        .min(grids.height().saturating_sub(1));
    let mut best: Option<(f64, Vec2)> = None;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if grids.occupancy_at(x, y) == Occupancy::Occupied {
                continue;
            }
            let c = grids.cell_center(x, y);
            if !surface
                .iter()
                .any(|p| c.distance(*p) <= success_radius - 0.02)
            {
                continue;
            }
            let d = from.distance(c);
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, c));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Frontier-driven exploration action for one step.
#[allow(clippy::too_many_arguments)]
fn explore_action(
    grids: &GridStack,
    store: &InstanceStore,
    goal: &GoalSpec,
    xs: &mut ExplorationState,
    state: &AgentState,
    opts: &EpisodeOptions,
    step: u32,
    skip_waypoints: &mut BTreeMap<(i64, i64), u32>,
    trace: &mut Vec<TraceEvent>,
    exhausted_logged: &mut bool,
) -> Action {
    skip_waypoints.retain(|_, expiry| *expiry > step);
    for attempt in 0..2 {
        if let Some(wp) = xs.waypoint {
            match plan_local(grids, state, wp) {
                LocalPlan::Act(a) => return a,
                LocalPlan::Arrived => {
                    xs.visited.push(quantize(wp));
                    xs.waypoint = None;
                }
                LocalPlan::Unreachable => {
                    skip_waypoints.insert(quantize(wp), step + 40);
                    xs.waypoint = None;
                }
            }
        }
        if attempt == 1 {
            break;
        }
        // pick a new waypoint
        let frontiers: Vec<_> = extract_frontiers(grids)
            .into_iter()
            .filter(|f| {
                let p = f.representative_point(grids);
                !skip_waypoints.contains_key(&quantize(p))
            })
            .collect();
        let nearest_mode = opts.ablations.contains(&Ablation::ValueMap);
        let ranked = if nearest_mode {
            let dist_field = grids.distances_from(state.position);
            let w = grids.width();
            let mut fs = frontiers;
            fs.sort_by(|a, b| {
                let da = dist_field[a.representative.1 * w + a.representative.0];
                let db = dist_field[b.representative.1 * w + b.representative.0];
                da.total_cmp(&db).then_with(|| {
                    (a.representative.1, a.representative.0)
                        .cmp(&(b.representative.1, b.representative.0))
                })
            });
            fs
        } else {
            match rank_frontiers(frontiers, grids, state.position) {
                Ok(r) => r,
                Err(_) => Vec::new(),
            }
        };
        if ranked.is_empty() {
            if !*exhausted_logged {
                trace.push(TraceEvent::Exhausted { step });
                *exhausted_logged = true;
            }
            return Action::TurnLeft; // keep scanning until the budget ends
        }
        let chosen = if nearest_mode {
            ranked[0].clone()
        } else {
            let before = xs.override_available;
            let f = apply_room_override(xs, grids, store, goal, &ranked, state.position);
            if before && !xs.override_available {
                if let Some(room) = f.room {
                    trace.push(TraceEvent::OverrideFired { step, room });
                }
            }
            f
        };
        xs.waypoint = Some(chosen.representative_point(grids));
    }
    Action::TurnLeft
}
