//! Perception oracles computed from ground truth. Each stands in for one
//! neural component: an open-vocabulary detector, a yes/no category VLM, and
//! a 0..15 attribute-scoring VLM. Noise is opt-in and seeded; the noise-free
//! configurations are exact functions of the scene.

use super::{DepthImage, Detection, RayHit, Scene};
use crate::goal::{AttrKey, AttributeQuestion, Lexicon};
use crate::scene::AttrKeyRaw;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Categories the class-specific (COCO) detector can confirm directly; all
/// others go through the yes/no VLM gate.
pub const COCO_CATEGORIES: &[&str] = &[
    "bed", "chair", "sofa", "tv", "toilet", "plant", "table", "book", "clock", "vase",
];

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown instance id {0:?}")]
    UnknownInstance(String),
}

/// Detector noise model. The default is the identity oracle.
#[derive(Clone, Debug)]
pub struct DetectorNoise {
    /// Minimum fraction of frame columns a mask must cover to be proposed.
    pub min_mask_fraction: f64,
    /// Probability of corrupting the proposed category via the confusion table.
    pub flip_prob: f64,
    /// Confusable category pairs, e.g. dresser -> cabinet.
    pub confusion: BTreeMap<String, String>,
    /// Confidence is drawn uniformly from [1 - jitter, 1].
    pub confidence_jitter: f64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        DetectorNoise {
            min_mask_fraction: 0.01,
            flip_prob: 0.0,
            confusion: BTreeMap::new(),
            confidence_jitter: 0.0,
        }
    }
}

/// Proposes one detection per ground-truth instance visible in `depth`.
/// Acceptance thresholds (0.45 open-vocab, 0.8 COCO, 0.6 VQA) are the
/// caller's job.
pub fn oracle_detect<R: Rng>(
    scene: &Scene,
    depth: &DepthImage,
    noise: &DetectorNoise,
    rng: &mut R,
) -> Vec<Detection> {
    let mut masks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (col, sample) in depth.columns.iter().enumerate() {
        if let Some(RayHit::Instance(id)) = &sample.hit {
            masks.entry(id.as_str()).or_default().push(col);
        }
    }
    let width = depth.width().max(1);
    let mut out = Vec::new();
    // iterate in scene order so rng consumption is reproducible
    for inst in &scene.instances {
        let Some(mask) = masks.get(inst.id.as_str()) else {
            continue;
        };
        if (mask.len() as f64) / (width as f64) < noise.min_mask_fraction {
            continue;
        }
        let mut proposed = inst.category.clone();
        if noise.flip_prob > 0.0 && rng.random::<f64>() < noise.flip_prob {
            if let Some(confused) = noise.confusion.get(&proposed) {
                proposed = confused.clone();
            }
        }
        let confidence = if noise.confidence_jitter > 0.0 {
            1.0 - rng.random::<f64>() * noise.confidence_jitter
        } else {
            1.0
        };
        let is_coco = COCO_CATEGORIES.contains(&proposed.as_str());
        out.push(Detection {
            instance_id: inst.id.clone(),
            proposed_category: proposed,
            confidence,
            mask: mask.clone(),
            is_coco,
        });
    }
    out
}

/// Category noise model for the yes/no VLM.
#[derive(Clone, Debug, Default)]
pub struct VqaCategoryNoise {
    /// Blends the exact answer toward 0.5: p' = p + blend * (0.5 - p).
    pub blend_to_half: f64,
    /// Masks smaller than this fraction of the frame answer 0.5 (too small
    /// to judge).
    pub ambiguity_mask_fraction: f64,
}

/// Asks "is this outlined instance a `proposed_category`?". Noise-free: 1.0
/// on canonical category equality, else 0.0. The caller applies the 0.6 gate.
pub fn oracle_vqa_category(
    scene: &Scene,
    instance_id: &str,
    proposed_category: &str,
    mask_fraction: f64,
    lexicon: &Lexicon,
    noise: &VqaCategoryNoise,
) -> Result<f64, OracleError> {
    let inst = scene
        .instance(instance_id)
        .ok_or_else(|| OracleError::UnknownInstance(instance_id.to_string()))?;
    if noise.ambiguity_mask_fraction > 0.0 && mask_fraction < noise.ambiguity_mask_fraction {
        return Ok(0.5);
    }
    let exact = if lexicon.canonical(proposed_category) == lexicon.canonical(&inst.category) {
        1.0
    } else {
        0.0
    };
    Ok(exact + noise.blend_to_half * (0.5 - exact))
}

/// Attribute-score noise model for the 0..15 VLM judge.
#[derive(Clone, Debug, Default)]
pub struct VqaAttributeNoise {
    /// Maximum absolute offset added to the exact score.
    pub max_offset: i16,
    /// Probability of answering 7 (mid Unknown band) regardless of truth.
    pub force_unknown_prob: f64,
}

/// Scores an attribute claim about an instance on the 0..15 scale. Noise-free
/// bands: 13 when the questioned value matches ground truth, 2 when it
/// contradicts it, 7 when the instance has no value for that attribute.
pub fn oracle_vqa_attribute<R: Rng>(
    scene: &Scene,
    instance_id: &str,
    question: &AttributeQuestion,
    noise: &VqaAttributeNoise,
    rng: &mut R,
) -> Result<u8, OracleError> {
    let inst = scene
        .instance(instance_id)
        .ok_or_else(|| OracleError::UnknownInstance(instance_id.to_string()))?;
    if noise.force_unknown_prob > 0.0 && rng.random::<f64>() < noise.force_unknown_prob {
        return Ok(7);
    }
    let key = match question.atype {
        AttrKey::Color => AttrKeyRaw::Color,
        AttrKey::Shape => AttrKeyRaw::Shape,
    };
    let base: i16 = match inst.attributes.get(&key) {
        None => 7,
        Some(truth) => {
            let q = question.text.to_lowercase();
            if q.contains(&truth.to_lowercase()) {
                13
            } else {
                2
            }
        }
    };
    let score = if noise.max_offset > 0 {
        let off = rng.random_range(-noise.max_offset..=noise.max_offset);
        (base + off).clamp(0, 15)
    } else {
        base
    };
    Ok(score as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{fixtures, render_depth, AgentState, SensorConfig};
    use crate::geom::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn noise_free_detection_is_identity() {
        let scene = fixtures::one_room_scene();
        // face the dresser at (2, 5) from below
        let state = AgentState::at(Vec2::new(2.0, 2.0), std::f64::consts::FRAC_PI_2);
        let depth = render_depth(&scene, &state, &SensorConfig::default());
        let dets = oracle_detect(&scene, &depth, &DetectorNoise::default(), &mut rng());
        let dresser: Vec<_> = dets
            .iter()
            .filter(|d| d.instance_id == "dresser0")
            .collect();
        assert_eq!(dresser.len(), 1);
        assert_eq!(dresser[0].proposed_category, "dresser");
        assert_eq!(dresser[0].confidence, 1.0);
        assert!(!dresser[0].is_coco);
        assert!(!dresser[0].mask.is_empty());
    }

    #[test]
    fn confusion_flip_applies_with_certainty() {
        let scene = fixtures::one_room_scene();
        let state = AgentState::at(Vec2::new(2.0, 2.0), std::f64::consts::FRAC_PI_2);
        let depth = render_depth(&scene, &state, &SensorConfig::default());
        let mut noise = DetectorNoise {
            flip_prob: 1.0,
            ..DetectorNoise::default()
        };
        noise
            .confusion
            .insert("dresser".to_string(), "cabinet".to_string());
        let dets = oracle_detect(&scene, &depth, &noise, &mut rng());
        let dresser = dets.iter().find(|d| d.instance_id == "dresser0").unwrap();
        assert_eq!(dresser.proposed_category, "cabinet");
    }

    #[test]
    fn occluded_instance_is_not_detected() {
        let scene = fixtures::one_room_scene();
        // face away from everything: wall at x=0 is 1 m away
        let state = AgentState::at(Vec2::new(1.0, 1.0), std::f64::consts::PI);
        let depth = render_depth(&scene, &state, &SensorConfig::default());
        let dets = oracle_detect(&scene, &depth, &DetectorNoise::default(), &mut rng());
        assert!(dets.is_empty());
    }

    #[test]
    fn detection_is_deterministic_per_seed() {
        let scene = fixtures::one_room_scene();
        let state = AgentState::at(Vec2::new(2.0, 2.0), std::f64::consts::FRAC_PI_2);
        let depth = render_depth(&scene, &state, &SensorConfig::default());
        let noise = DetectorNoise {
            confidence_jitter: 0.4,
            ..DetectorNoise::default()
        };
        let a = oracle_detect(&scene, &depth, &noise, &mut rng());
        let b = oracle_detect(&scene, &depth, &noise, &mut rng());
        assert_eq!(a, b);
    }

    #[test]
    fn vqa_category_gate_values() {
        let scene = fixtures::one_room_scene();
        let lex = Lexicon::default();
        let noise = VqaCategoryNoise::default();
        let yes =
            oracle_vqa_category(&scene, "dresser0", "dresser", 0.2, &lex, &noise).unwrap();
        assert_eq!(yes, 1.0);
        assert!(yes >= 0.6);
        let no = oracle_vqa_category(&scene, "dresser0", "bed", 0.2, &lex, &noise).unwrap();
        assert_eq!(no, 0.0);
        let ambiguous = oracle_vqa_category(
            &scene,
            "dresser0",
            "dresser",
            0.005,
            &lex,
            &VqaCategoryNoise {
                ambiguity_mask_fraction: 0.02,
                ..VqaCategoryNoise::default()
            },
        )
        .unwrap();
        assert_eq!(ambiguous, 0.5);
        assert!(ambiguous < 0.6);
        assert!(oracle_vqa_category(&scene, "ghost", "bed", 0.2, &lex, &noise).is_err());
    }

    #[test]
    fn attribute_scores_hit_the_bands() {
        let scene = fixtures::one_room_scene();
        let noise = VqaAttributeNoise::default();
        let q = |text: &str| AttributeQuestion {
            atype: AttrKey::Color,
            text: text.to_string(),
        };
        let yes = oracle_vqa_attribute(
            &scene,
            "dresser0",
            &q("Is the outlined dresser mainly white?"),
            &noise,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(yes, 13);
        let no = oracle_vqa_attribute(
            &scene,
            "dresser0",
            &q("Is the outlined dresser mainly red?"),
            &noise,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(no, 2);
        let shape_q = AttributeQuestion {
            atype: AttrKey::Shape,
            text: "Is the outlined dresser round?".to_string(),
        };
        let unknown =
            oracle_vqa_attribute(&scene, "dresser0", &shape_q, &noise, &mut rng()).unwrap();
        assert_eq!(unknown, 7);
    }

    #[test]
    fn forced_unknown_then_clean_requery() {
        let scene = fixtures::one_room_scene();
        let q = AttributeQuestion {
            atype: AttrKey::Color,
            text: "Is the outlined dresser mainly white?".to_string(),
        };
        let forced = VqaAttributeNoise {
            force_unknown_prob: 1.0,
            ..VqaAttributeNoise::default()
        };
        let first =
            oracle_vqa_attribute(&scene, "dresser0", &q, &forced, &mut rng()).unwrap();
        assert_eq!(first, 7);
        let clean = VqaAttributeNoise::default();
        let second =
            oracle_vqa_attribute(&scene, "dresser0", &q, &clean, &mut rng()).unwrap();
        assert_eq!(second, 13);
    }
}
