//! Structured entity relationship map (ERM) documents.
//!
//! An ERM is a JSON object with a `topic`, `cross_reference_tags` and a list
//! of typed `entities`, each carrying free-form `attributes`. Validation never
//! fails: it returns every violation found, each tagged with a JSON pointer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub entity_type: String,
    pub entity_name: String,
    pub attributes: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRelationshipMap {
    pub topic: String,
    pub cross_reference_tags: String,
    pub entities: Vec<Entity>,
}

impl EntityRelationshipMap {
    /// Converts a JSON value that passes [`validate_erm`].
    pub fn from_value(value: &Value) -> std::result::Result<Self, Vec<Violation>> {
        let violations = validate_erm(value);
        if !violations.is_empty() {
            return Err(violations);
        }
        serde_json::from_value(value.clone()).map_err(|e| {
            vec![Violation {
                path: String::new(),
                message: e.to_string(),
            }]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// JSON pointer to the offending location (`""` is the document root).
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parses ERM text. Generated ERMs often carry trailing commas (the generation
/// template itself has them), so JSON5 syntax is accepted.
pub fn parse_erm_text(text: &str) -> Result<Value> {
    match serde_json::from_str(text) {
        Ok(v) => Ok(v),
        Err(_) => json5::from_str(text).map_err(|e| Error::parse("erm", e)),
    }
}

pub fn validate_erm(document: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(root) = document.as_object() else {
        out.push(Violation::new("", "document must be a JSON object"));
        return out;
    };

    for key in ["topic", "cross_reference_tags"] {
        match root.get(key) {
            None => out.push(Violation::new(format!("/{key}"), "missing required key")),
            Some(Value::String(_)) => {}
            Some(_) => out.push(Violation::new(format!("/{key}"), "must be a string")),
        }
    }

    match root.get("entities") {
        None => out.push(Violation::new("/entities", "missing required key")),
        Some(Value::Array(entities)) => {
            for (i, entity) in entities.iter().enumerate() {
                validate_entity(i, entity, &mut out);
            }
        }
        Some(_) => out.push(Violation::new("/entities", "must be a list")),
    }
    out
}

fn validate_entity(index: usize, entity: &Value, out: &mut Vec<Violation>) {
    let base = format!("/entities/{index}");
    let Some(obj) = entity.as_object() else {
        out.push(Violation::new(base, "entity must be a JSON object"));
        return;
    };
    for key in ["entity_type", "entity_name"] {
        let path = format!("{base}/{key}");
        match obj.get(key) {
            None => out.push(Violation::new(path, "missing required key")),
            Some(Value::String(s)) if s.is_empty() => out.push(Violation::new(path, "must be non-empty")),
            Some(Value::String(_)) => {}
            Some(_) => out.push(Violation::new(path, "must be a string")),
        }
    }
    match obj.get("attributes") {
        None => out.push(Violation::new(format!("{base}/attributes"), "missing required key")),
        Some(Value::Object(_)) => {}
        Some(_) => out.push(Violation::new(format!("{base}/attributes"), "must be a JSON object")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn valid_doc() -> Value {
        json!({
            "topic": "Commercial lease",
            "cross_reference_tags": "lease, rent",
            "entities": [
                {"entity_type": "Party", "entity_name": "Acme Ltd", "attributes": {"role": "tenant"}},
                {"entity_type": "Term", "entity_name": "Lease term", "attributes": {"years": 5, "break": [2, 4]}}
            ]
        })
    }

    fn paths(v: &Value) -> Vec<String> {
        validate_erm(v).into_iter().map(|v| v.path).collect()
    }

    #[test]
    fn empty_skeleton_is_valid() {
        let skeleton = json!({"topic": "", "cross_reference_tags": "", "entities": []});
        assert!(validate_erm(&skeleton).is_empty());
    }

    #[test]
    fn missing_topic() {
        let mut doc = valid_doc();
        doc.as_object_mut().unwrap().remove("topic");
        assert_eq!(paths(&doc), vec!["/topic"]);
    }

    #[test]
    fn empty_entity_name() {
        let mut doc = valid_doc();
        doc["entities"][0]["entity_name"] = json!("");
        assert_eq!(paths(&doc), vec!["/entities/0/entity_name"]);
    }

    #[test]
    fn entities_must_be_list() {
        let mut doc = valid_doc();
        doc["entities"] = json!({});
        assert_eq!(paths(&doc), vec!["/entities"]);
    }

    #[test]
    fn non_object_root() {
        assert_eq!(paths(&json!([1, 2])), vec![""]);
    }

    #[test]
    fn reports_every_violation() {
        let doc = json!({"entities": [{"entity_type": "", "attributes": 3}]});
        assert_eq!(
            paths(&doc),
            vec![
                "/topic",
                "/cross_reference_tags",
                "/entities/0/entity_type",
                "/entities/0/entity_name",
                "/entities/0/attributes"
            ]
        );
    }

    #[test]
    fn trailing_commas_accepted() {
        let text = r#"{"topic": "t", "cross_reference_tags": "", "entities": [{"entity_type": "a", "entity_name": "b", "attributes": {},}],}"#;
        let v = parse_erm_text(text).unwrap();
        assert!(validate_erm(&v).is_empty());
        let erm = EntityRelationshipMap::from_value(&v).unwrap();
        assert_eq!(erm.entities[0].entity_name, "b");
    }

    #[derive(Debug, Clone)]
    enum Mutation {
        DropTopic,
        DropTags,
        DropEntities,
        TopicNotString,
        EntitiesNotList,
        EmptyType(usize),
        EmptyName(usize),
        AttributesNotObject(usize),
    }

    fn apply(doc: &mut Value, m: &Mutation) -> String {
        let n = doc["entities"].as_array().unwrap().len();
        match *m {
            Mutation::DropTopic => {
                doc.as_object_mut().unwrap().remove("topic");
                "/topic".into()
            }
            Mutation::DropTags => {
                doc.as_object_mut().unwrap().remove("cross_reference_tags");
                "/cross_reference_tags".into()
            }
            Mutation::DropEntities => {
                doc.as_object_mut().unwrap().remove("entities");
                "/entities".into()
            }
            Mutation::TopicNotString => {
                doc["topic"] = json!(12);
                "/topic".into()
            }
            Mutation::EntitiesNotList => {
                doc["entities"] = json!("none");
                "/entities".into()
            }
            Mutation::EmptyType(i) => {
                let i = i % n;
                doc["entities"][i]["entity_type"] = json!("");
                format!("/entities/{i}/entity_type")
            }
            Mutation::EmptyName(i) => {
                let i = i % n;
                doc["entities"][i]["entity_name"] = json!("");
                format!("/entities/{i}/entity_name")
            }
            Mutation::AttributesNotObject(i) => {
                let i = i % n;
                doc["entities"][i]["attributes"] = json!([]);
                format!("/entities/{i}/attributes")
            }
        }
    }

    fn mutation() -> impl Strategy<Value = Mutation> {
        prop_oneof![
            Just(Mutation::DropTopic),
            Just(Mutation::DropTags),
            Just(Mutation::DropEntities),
            Just(Mutation::TopicNotString),
            Just(Mutation::EntitiesNotList),
            (0usize..8).prop_map(Mutation::EmptyType),
            (0usize..8).prop_map(Mutation::EmptyName),
            (0usize..8).prop_map(Mutation::AttributesNotObject),
        ]
    }

    proptest! {
        #[test]
        fn single_mutation_reported_at_its_path(m in mutation()) {
            let mut doc = valid_doc();
            prop_assert!(validate_erm(&doc).is_empty());
            let expected = apply(&mut doc, &m);
            prop_assert_eq!(paths(&doc), vec![expected]);
        }
    }
}
