//! Goal JSON front end. The schema mirrors the decomposition output formats:
//! `{target, attributes:{color?,shape?}, questions:[{atype,q}],
//! groups:{canonical:[terms]}, relations:[{ref,tgt,rtype}], caption?}`.

use super::lexicon::normalize;
use super::{
    default_question, AttrKey, AttributeQuestion, GoalError, GoalSpec, Relation, RelationTriple,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct QuestionDoc {
    atype: String,
    q: String,
}

#[derive(Serialize, Deserialize)]
struct RelationDoc {
    #[serde(rename = "ref")]
    reference: String,
    tgt: String,
    rtype: String,
}

#[derive(Serialize, Deserialize)]
struct GoalDoc {
    target: String,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
    #[serde(default)]
    questions: Option<Vec<QuestionDoc>>,
    #[serde(default)]
    groups: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    relations: Vec<RelationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    caption: Option<String>,
}

/// Loads a goal document from a file.
pub fn load_goal(path: impl AsRef<Path>) -> Result<GoalSpec, GoalError> {
    let text = std::fs::read_to_string(path)?;
    ingest_goal_str(&text)
}

/// Parses and validates a goal document from a JSON string.
pub fn ingest_goal_str(text: &str) -> Result<GoalSpec, GoalError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| GoalError::Json(e.to_string()))?;
    ingest_goal_json(&doc)
}

/// Validates a goal document already parsed as JSON.
pub fn ingest_goal_json(doc: &serde_json::Value) -> Result<GoalSpec, GoalError> {
    let doc: GoalDoc =
        serde_json::from_value(doc.clone()).map_err(|e| GoalError::Json(e.to_string()))?;
    let target = normalize(&doc.target);
    if target.is_empty() {
        return Err(GoalError::Json("empty target category".into()));
    }

    // synonym groups; any group containing the target collapses onto it
    let mut synonym_map: BTreeMap<String, String> = BTreeMap::new();
    let mut context = std::collections::BTreeSet::new();
    for (canonical, terms) in &doc.groups {
        let mut label = normalize(canonical);
        if terms.iter().any(|t| normalize(t) == target) {
            label = target.clone();
        }
        if label != target {
            context.insert(label.clone());
        }
        for term in terms {
            synonym_map.insert(normalize(term), label.clone());
        }
    }

    let mut intrinsic = BTreeMap::new();
    for (k, v) in &doc.attributes {
        let key = AttrKey::parse(k)
            .ok_or_else(|| GoalError::Attribute(format!("unknown attribute key {k:?}")))?;
        if v.trim().is_empty() {
            return Err(GoalError::Attribute(format!("empty value for {k:?}")));
        }
        intrinsic.insert(key, v.clone());
    }

    let mut relations: Vec<RelationTriple> = Vec::new();
    for r in &doc.relations {
        let relation =
            Relation::parse(&normalize(&r.rtype)).ok_or_else(|| GoalError::Vocabulary(r.rtype.clone()))?;
        let map_endpoint = |raw: &str| -> Result<String, GoalError> {
            let n = normalize(raw);
            if let Some(c) = synonym_map.get(&n) {
                Ok(c.clone())
            } else if n == target {
                Ok(target.clone())
            } else {
                Err(GoalError::Reference(raw.to_string()))
            }
        };
        let triple = RelationTriple {
            reference: map_endpoint(&r.reference)?,
            target: map_endpoint(&r.tgt)?,
            relation,
        };
        if !relations.contains(&triple) {
            relations.push(triple);
        }
    }

    let questions = match doc.questions {
        Some(qs) => qs
            .into_iter()
            .map(|q| {
                let atype = AttrKey::parse(&q.atype)
                    .ok_or_else(|| GoalError::Question(format!("unknown atype {:?}", q.atype)))?;
                Ok(AttributeQuestion { atype, text: q.q })
            })
            .collect::<Result<Vec<_>, GoalError>>()?,
        None => intrinsic
            .iter()
            .map(|(&k, v)| default_question(&target, k, v))
            .collect(),
    };

    let spec = GoalSpec {
        target_category: target,
        intrinsic,
        questions,
        context_categories: context,
        synonym_map,
        relations,
        raw_caption: doc.caption.unwrap_or_default(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Serializes a spec back to the goal document schema.
pub fn emit_goal_json(spec: &GoalSpec) -> serde_json::Value {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (term, canonical) in &spec.synonym_map {
        groups.entry(canonical.clone()).or_default().push(term.clone());
    }
    for terms in groups.values_mut() {
        terms.sort();
    }
    let doc = GoalDoc {
        target: spec.target_category.clone(),
        attributes: spec
            .intrinsic
            .iter()
            .map(|(k, v)| (k.as_str().to_string(), v.clone()))
            .collect(),
        questions: Some(
            spec.questions
                .iter()
                .map(|q| QuestionDoc {
                    atype: q.atype.as_str().to_string(),
                    q: q.text.clone(),
                })
                .collect(),
        ),
        groups,
        relations: spec
            .relations
            .iter()
            .map(|t| RelationDoc {
                reference: t.reference.clone(),
                tgt: t.target.clone(),
                rtype: t.relation.as_str().to_string(),
            })
            .collect(),
        caption: if spec.raw_caption.is_empty() {
            None
        } else {
            Some(spec.raw_caption.clone())
        },
    };
    serde_json::to_value(doc).expect("goal serialization")
}

/// Pretty-printed goal document with trailing newline.
pub fn goal_to_string(spec: &GoalSpec) -> String {
    let mut s = serde_json::to_string_pretty(&emit_goal_json(spec)).expect("goal serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const PICTURE_GOAL: &str = r#"{
        "target": "picture",
        "attributes": {"color": "yellow and green"},
        "questions": [{"atype": "color", "q": "Is the outlined picture mainly yellow and green?"}],
        "groups": {
            "picture": ["picture"],
            "cabinet": ["cabinet", "the wooden cabinet"],
            "staircase": ["staircase", "stairs"]
        },
        "relations": [
            {"ref": "cabinet", "tgt": "picture", "rtype": "above"},
            {"ref": "staircase", "tgt": "picture", "rtype": "near"}
        ],
        "caption": "a yellow and green picture above the cabinet near the staircase"
    }"#;

    #[test]
    fn picture_goal_ingests() {
        let spec = ingest_goal_str(PICTURE_GOAL).unwrap();
        assert_eq!(spec.target_category, "picture");
        assert_eq!(spec.intrinsic[&AttrKey::Color], "yellow and green");
        assert_eq!(spec.relations.len(), 2);
        assert!(spec.context_categories.contains("cabinet"));
        assert!(spec.context_categories.contains("staircase"));
        assert!(!spec.context_categories.contains("picture"));
        assert_eq!(
            spec.relations[0],
            RelationTriple::new("cabinet", "picture", Relation::Above)
        );
        // raw endpoint names map through the synonym groups
        assert_eq!(spec.synonym_map["the wooden cabinet"], "cabinet");
    }

    #[test]
    fn degenerate_category_goal_is_valid() {
        let spec = ingest_goal_str(r#"{"target": "bed"}"#).unwrap();
        assert_eq!(spec.target_category, "bed");
        assert!(spec.relations.is_empty());
        assert!(spec.intrinsic.is_empty());
        assert!(spec.questions.is_empty());
    }

    #[test]
    fn unknown_rho_is_vocabulary_error() {
        let bad = PICTURE_GOAL.replace("\"above\"", "\"inside\"");
        assert!(matches!(
            ingest_goal_str(&bad),
            Err(GoalError::Vocabulary(_))
        ));
    }

    #[test]
    fn unknown_endpoint_is_reference_error() {
        let bad = PICTURE_GOAL.replace("\"ref\": \"cabinet\"", "\"ref\": \"fireplace\"");
        assert!(matches!(ingest_goal_str(&bad), Err(GoalError::Reference(_))));
    }

    #[test]
    fn more_than_six_relations_rejected() {
        let rels: Vec<String> = (0..7)
            .map(|i| {
                let rho = ["near", "above", "left", "right", "front", "behind", "below"][i];
                format!(r#"{{"ref": "cabinet", "tgt": "staircase", "rtype": "{rho}"}}"#)
            })
            .collect();
        let doc = format!(
            r#"{{"target": "picture",
                "groups": {{"cabinet": ["cabinet"], "staircase": ["staircase"]}},
                "relations": [{}]}}"#,
            rels.join(",")
        );
        // opposite-direction duplicates would also trip the contradiction
        // check; cardinality is validated first
        match ingest_goal_str(&doc) {
            Err(GoalError::Cardinality(7)) => {}
            other => panic!("expected cardinality error, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_pair_rejected_at_ingest() {
        let doc = r#"{
            "target": "picture",
            "groups": {"cabinet": ["cabinet"]},
            "relations": [
                {"ref": "cabinet", "tgt": "picture", "rtype": "left"},
                {"ref": "cabinet", "tgt": "picture", "rtype": "right"}
            ]
        }"#;
        assert!(matches!(
            ingest_goal_str(doc),
            Err(GoalError::Contradiction(_, _))
        ));
    }

    #[test]
    fn questions_default_from_attributes() {
        let doc = r#"{"target": "dresser", "attributes": {"color": "white"}}"#;
        let spec = ingest_goal_str(doc).unwrap();
        assert_eq!(spec.questions.len(), 1);
        assert!(spec.questions[0].text.contains("dresser"));
        assert!(spec.questions[0].text.contains("white"));
    }

    #[test]
    fn round_trip_is_identity() {
        let spec = ingest_goal_str(PICTURE_GOAL).unwrap();
        let emitted = emit_goal_json(&spec);
        let again = ingest_goal_json(&emitted).unwrap();
        assert_eq!(spec, again);
    }
}
