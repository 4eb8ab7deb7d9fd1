//! Canonical JSON model documents and content hashing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Activity, DataObject, ProcessModel, Resource, SequenceFlow, Vcc};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version `{0}`")]
    UnsupportedVersion(String),
}

impl FormatError {
    pub fn name(&self) -> &'static str {
        match self {
            FormatError::Parse { .. } => "ParseError",
            FormatError::UnsupportedVersion(_) => "UnsupportedVersion",
        }
    }

    fn from_json(e: serde_json::Error) -> Self {
        FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    fn structural(message: String) -> Self {
        FormatError::Parse {
            line: 0,
            column: 0,
            message,
        }
    }
}

/// On-disk shape of a model. Field order here is the canonical key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default = "default_version")]
    pub format_version: String,
    pub id: String,
    pub max_activities: usize,
    pub start: String,
    pub end: String,
    #[serde(default)]
    pub activities: Vec<Activity>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default)]
    pub data_objects: Vec<DataObject>,
    #[serde(default)]
    pub flows: Vec<SequenceFlow>,
    #[serde(default)]
    pub vccs: Vec<Vcc>,
}

fn default_version() -> String {
    FORMAT_VERSION.to_owned()
}

impl From<&ProcessModel> for ModelDocument {
    fn from(m: &ProcessModel) -> Self {
        ModelDocument {
            format_version: FORMAT_VERSION.to_owned(),
            id: m.id.clone(),
            max_activities: m.max_activities,
            start: m.start.clone(),
            end: m.end.clone(),
            activities: m.activities.values().cloned().collect(),
            resources: m.resources.values().cloned().collect(),
            data_objects: m.data_objects.values().cloned().collect(),
            flows: m.flows.iter().cloned().collect(),
            vccs: m.vccs.iter().cloned().collect(),
        }
    }
}

impl TryFrom<ModelDocument> for ProcessModel {
    type Error = FormatError;

    fn try_from(doc: ModelDocument) -> Result<Self, Self::Error> {
        if doc.format_version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(doc.format_version));
        }
        let mut ids = BTreeSet::from([doc.start.clone()]);
        if !ids.insert(doc.end.clone()) {
            return Err(FormatError::structural("start and end share an id".into()));
        }
        let all = doc
            .activities
            .iter()
            .map(|a| &a.id)
            .chain(doc.resources.iter().map(|r| &r.id))
            .chain(doc.data_objects.iter().map(|d| &d.id));
        for id in all {
            if !ids.insert(id.clone()) {
                return Err(FormatError::structural(format!("duplicate id `{id}`")));
            }
        }
        let mut pairs = BTreeSet::new();
        for f in &doc.flows {
            if !pairs.insert((&f.source, &f.target)) {
                return Err(FormatError::structural(format!(
                    "duplicate flow {} -> {}",
                    f.source, f.target
                )));
            }
        }
        let mut m = ProcessModel::new(doc.id, doc.max_activities);
        m.start = doc.start;
        m.end = doc.end;
        for a in doc.activities {
            m.activities.insert(a.id.clone(), a);
        }
        for r in doc.resources {
            m.resources.insert(r.id.clone(), r);
        }
        for d in doc.data_objects {
            m.data_objects.insert(d.id.clone(), d);
        }
        m.flows = doc.flows.into_iter().collect();
        m.vccs = doc.vccs.into_iter().collect();
        Ok(m)
    }
}

/// Parses a model document. Well-formedness is not checked here.
pub fn load_model(bytes: &[u8]) -> Result<ProcessModel, FormatError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(FormatError::from_json)?;
    if let Some(v) = value.get("format_version") {
        let v = v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string());
        if v != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(v));
        }
    }
    // Re-parse from bytes so errors carry positions.
    let doc: ModelDocument = serde_json::from_slice(bytes).map_err(FormatError::from_json)?;
    ProcessModel::try_from(doc)
}

/// Canonical bytes: sorted arrays, fixed key order, two-space indent, LF,
/// trailing newline.
pub fn save_model(model: &ProcessModel) -> Vec<u8> {
    let doc = ModelDocument::from(model);
    let mut out = serde_json::to_vec_pretty(&doc).expect("model documents always serialize");
    out.push(b'\n');
    out
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical serialization. Sensitive to element ids.
pub fn canonical_hash(model: &ProcessModel) -> String {
    hash_bytes(&save_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn model() -> ProcessModel {
        ProcessModel::new("m", 4)
            .with_activity(Activity::plain("A"))
            .with_flow(SequenceFlow::new("start", "A").with_condition("c1"))
            .with_flow(SequenceFlow::new("A", "end"))
    }

    #[test]
    fn round_trip_keeps_hash() {
        let m = model();
        let loaded = load_model(&save_model(&m)).unwrap();
        assert_eq!(canonical_hash(&loaded), canonical_hash(&m));
        assert_eq!(save_model(&loaded), save_model(&m));
    }

    #[test]
    fn condition_change_changes_hash() {
        let mut m2 = model();
        m2.flows = [
            SequenceFlow::new("start", "A").with_condition("c2"),
            SequenceFlow::new("A", "end"),
        ]
        .into_iter()
        .collect();
        assert_ne!(canonical_hash(&model()), canonical_hash(&m2));
    }

    #[test]
    fn renamed_isomorph_hashes_differently() {
        let renamed = ProcessModel::new("m", 4)
            .with_activity(Activity {
                name: "A".into(),
                ..Activity::plain("X")
            })
            .with_flow(SequenceFlow::new("start", "X").with_condition("c1"))
            .with_flow(SequenceFlow::new("X", "end"));
        assert_ne!(canonical_hash(&model()), canonical_hash(&renamed));
    }

    #[test]
    fn empty_input_is_parse_error() {
        assert!(matches!(load_model(b""), Err(FormatError::Parse { .. })));
    }

    #[test]
    fn future_version_rejected() {
        let mut v: serde_json::Value = serde_json::from_slice(&save_model(&model())).unwrap();
        v["format_version"] = "99".into();
        let err = load_model(v.to_string().as_bytes()).unwrap_err();
        assert_eq!(err, FormatError::UnsupportedVersion("99".into()));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = r#"{"id":"m","max_activities":3,"start":"s","end":"e",
            "activities":[{"id":"A","name":"A","role":"plain"}],
            "resources":[{"id":"A","name":"A","role":"plain","r_f":["x"]}]}"#;
        assert!(matches!(load_model(doc.as_bytes()), Err(FormatError::Parse { .. })));
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = ProcessModel::new("m", 4)
            .with_activity(Activity::plain("B"))
            .with_activity(Activity::plain("A"))
            .with_flow(SequenceFlow::new("A", "B"))
            .with_flow(SequenceFlow::new("start", "A"));
        let b = ProcessModel::new("m", 4)
            .with_flow(SequenceFlow::new("start", "A"))
            .with_activity(Activity::plain("A"))
            .with_flow(SequenceFlow::new("A", "B"))
            .with_activity(Activity::plain("B"));
        assert_eq!(save_model(&a), save_model(&b));
    }
}
