//! Goal decomposition: a text goal becomes a target category, intrinsic
//! color/shape attributes with yes/no questions, canonical context
//! categories, and spatial-relation triples. Two front ends produce the same
//! [`GoalSpec`]: validated JSON in the decomposition output schema, and a
//! deterministic constrained-grammar parser for simple captions.

mod ingest;
mod lexicon;
mod parser;

pub use ingest::{emit_goal_json, goal_to_string, ingest_goal_json, ingest_goal_str, load_goal};
pub use lexicon::{canonicalize_terms, Lexicon};
pub use parser::{caption_from_spec, parse_caption};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Intrinsic attribute kinds the pipeline reasons about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKey {
    Color,
    Shape,
}

impl AttrKey {
    pub fn as_str(self) -> &'static str {
        match self {
            AttrKey::Color => "color",
            AttrKey::Shape => "shape",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "color" => Some(AttrKey::Color),
            "shape" => Some(AttrKey::Shape),
            _ => None,
        }
    }
}

/// The seven-relation vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Left,
    Right,
    Front,
    Behind,
    Near,
    Above,
    Below,
}

pub const ALL_RELATIONS: [Relation; 7] = [
    Relation::Left,
    Relation::Right,
    Relation::Front,
    Relation::Behind,
    Relation::Near,
    Relation::Above,
    Relation::Below,
];

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Left => "left",
            Relation::Right => "right",
            Relation::Front => "front",
            Relation::Behind => "behind",
            Relation::Near => "near",
            Relation::Above => "above",
            Relation::Below => "below",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(Relation::Left),
            "right" => Some(Relation::Right),
            "front" => Some(Relation::Front),
            "behind" => Some(Relation::Behind),
            "near" => Some(Relation::Near),
            "above" => Some(Relation::Above),
            "below" => Some(Relation::Below),
            _ => None,
        }
    }

    /// The relation that swaps roles at a fixed viewpoint; `Near` is its own
    /// opposite (symmetric).
    pub fn opposite(self) -> Relation {
        match self {
            Relation::Left => Relation::Right,
            Relation::Right => Relation::Left,
            Relation::Front => Relation::Behind,
            Relation::Behind => Relation::Front,
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::Near => Relation::Near,
        }
    }

    pub fn is_directional(self) -> bool {
        self != Relation::Near
    }
}

/// One parsed relation: `target` stands in relation `relation` to
/// `reference`, e.g. (cabinet, picture, above) reads "the picture is above
/// the cabinet".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationTriple {
    pub reference: String,
    pub target: String,
    pub relation: Relation,
}

impl RelationTriple {
    pub fn new(reference: impl Into<String>, target: impl Into<String>, relation: Relation) -> Self {
        RelationTriple {
            reference: reference.into(),
            target: target.into(),
            relation,
        }
    }
}

/// A yes/no question about one intrinsic attribute of the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeQuestion {
    pub atype: AttrKey,
    pub text: String,
}

/// Fully decomposed goal.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GoalSpec {
    pub target_category: String,
    pub intrinsic: BTreeMap<AttrKey, String>,
    pub questions: Vec<AttributeQuestion>,
    pub context_categories: BTreeSet<String>,
    pub synonym_map: BTreeMap<String, String>,
    pub relations: Vec<RelationTriple>,
    pub raw_caption: String,
}

pub const MAX_RELATIONS: usize = 6;

#[derive(Debug, Error)]
pub enum GoalError {
    #[error("failed to read goal file: {0}")]
    Io(#[from] std::io::Error),
    #[error("goal parse error: {0}")]
    Json(String),
    #[error("unknown relation type {0:?} (allowed: left, right, front, behind, near, above, below)")]
    Vocabulary(String),
    #[error("relation endpoint {0:?} is not an allowed term")]
    Reference(String),
    #[error("too many relations: {0} (at most {MAX_RELATIONS})")]
    Cardinality(usize),
    #[error("contradictory relations: {0} conflicts with {1}")]
    Contradiction(String, String),
    #[error("invalid question: {0}")]
    Question(String),
    #[error("invalid attribute: {0}")]
    Attribute(String),
    #[error("caption outside grammar, unconsumed suffix: {0:?}")]
    Caption(String),
}

impl GoalSpec {
    /// Categories a relation endpoint may use.
    pub fn allowed_endpoints(&self) -> BTreeSet<&str> {
        let mut set: BTreeSet<&str> = self
            .context_categories
            .iter()
            .map(String::as_str)
            .collect();
        set.insert(self.target_category.as_str());
        set
    }

    /// Context categories that participate in at least one relation.
    pub fn relation_context_categories(&self) -> BTreeSet<&str> {
        self.relations
            .iter()
            .flat_map(|t| [t.reference.as_str(), t.target.as_str()])
            .filter(|c| *c != self.target_category)
            .collect()
    }

    /// Checks the structural invariants shared by both front ends.
    pub fn validate(&self) -> Result<(), GoalError> {
        if self.relations.len() > MAX_RELATIONS {
            return Err(GoalError::Cardinality(self.relations.len()));
        }
        let allowed = self.allowed_endpoints();
        for t in &self.relations {
            for endpoint in [&t.reference, &t.target] {
                if !allowed.contains(endpoint.as_str()) {
                    return Err(GoalError::Reference(endpoint.clone()));
                }
            }
        }
        check_pairwise_consistency(&self.relations)?;
        for q in &self.questions {
            if q.text.trim().is_empty() {
                return Err(GoalError::Question("empty question text".into()));
            }
            if !self.intrinsic.contains_key(&q.atype) {
                return Err(GoalError::Question(format!(
                    "question about {:?} but no such intrinsic attribute",
                    q.atype.as_str()
                )));
            }
            if !q
                .text
                .to_lowercase()
                .contains(&self.target_category.to_lowercase())
            {
                return Err(GoalError::Question(format!(
                    "question {:?} does not mention the target {:?}",
                    q.text, self.target_category
                )));
            }
        }
        for (k, v) in &self.intrinsic {
            if v.trim().is_empty() {
                return Err(GoalError::Attribute(format!(
                    "empty value for {}",
                    k.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// Rejects relation pairs no single viewpoint could satisfy: the same ordered
/// pair with opposite directional relations, or the swapped pair with the
/// same directional relation.
fn check_pairwise_consistency(relations: &[RelationTriple]) -> Result<(), GoalError> {
    for (i, a) in relations.iter().enumerate() {
        for b in &relations[i + 1..] {
            let same_pair = a.reference == b.reference && a.target == b.target;
            let swapped = a.reference == b.target && a.target == b.reference;
            let conflict = (same_pair && a.relation.is_directional() && b.relation == a.relation.opposite())
                || (swapped && a.relation.is_directional() && b.relation == a.relation);
            if conflict {
                return Err(GoalError::Contradiction(
                    format!("({}, {}, {})", a.reference, a.target, a.relation.as_str()),
                    format!("({}, {}, {})", b.reference, b.target, b.relation.as_str()),
                ));
            }
        }
    }
    Ok(())
}

/// Default question wording for an intrinsic attribute.
pub fn default_question(target: &str, key: AttrKey, value: &str) -> AttributeQuestion {
    let text = match key {
        AttrKey::Color => format!("Is the outlined {target} mainly {value}?"),
        AttrKey::Shape => format!("Is the outlined {target} {value} in shape?"),
    };
    AttributeQuestion { atype: key, text }
}
