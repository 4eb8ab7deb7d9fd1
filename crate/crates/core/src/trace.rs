//! Evolution traces: an append-only, hash-chained log of pattern
//! applications stored as primitive edits, so it can be replayed and undone
//! without re-running any designer decision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::PatternId;
use crate::edit::{apply_edits, invert_edits, model_diff, Edit};
use crate::io::canonical_hash;
use crate::model::ProcessModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("hash chain broken at entry {seq}: expected {expected}, found {found}")]
    HashChainBroken {
        seq: u64,
        expected: String,
        found: String,
    },
    #[error("entry {seq}: {reason}")]
    EditApplicationFailed { seq: u64, reason: String },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl TraceError {
    pub fn name(&self) -> &'static str {
        match self {
            TraceError::HashChainBroken { .. } => "HashChainBroken",
            TraceError::EditApplicationFailed { .. } => "EditApplicationFailed",
            TraceError::EmptyTrace => "EmptyTrace",
            TraceError::Parse { .. } => "ParseError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub seq: u64,
    pub pattern: PatternId,
    /// Parameter payload exactly as supplied.
    pub params: serde_json::Value,
    pub edits: Vec<Edit>,
    pub pre_hash: String,
    pub post_hash: String,
    /// Informational; never hashed.
    pub timestamp: String,
}

impl TraceEntry {
    /// Builds an unsequenced entry; `record` assigns `seq`.
    pub fn new(
        pattern: PatternId,
        params: serde_json::Value,
        before: &ProcessModel,
        after: &ProcessModel,
    ) -> Self {
        TraceEntry {
            seq: 0,
            pattern,
            params,
            edits: model_diff(before, after),
            pre_hash: canonical_hash(before),
            post_hash: canonical_hash(after),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_post_hash(&self) -> Option<&str> {
        self.entries.last().map(|e| e.post_hash.as_str())
    }

    /// One JSON object per line, in entry order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("trace entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TraceEntry = serde_json::from_str(line).map_err(|e| TraceError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Trace { entries })
    }
}

/// Appends `entry`, numbering it after the current tail. The first entry may
/// start from any model; later ones must continue the hash chain.
pub fn record(trace: &Trace, mut entry: TraceEntry) -> Result<Trace, TraceError> {
    let seq = trace.entries.len() as u64 + 1;
    if let Some(prev) = trace.last_post_hash() {
        if prev != entry.pre_hash {
            return Err(TraceError::HashChainBroken {
                seq,
                expected: prev.to_owned(),
                found: entry.pre_hash,
            });
        }
    }
    entry.seq = seq;
    let mut out = trace.clone();
    out.entries.push(entry);
    Ok(out)
}

pub fn replay(initial: &ProcessModel, trace: &Trace) -> Result<ProcessModel, TraceError> {
    let mut model = initial.clone();
    for (i, e) in trace.entries.iter().enumerate() {
        let expected_seq = i as u64 + 1;
        if e.seq != expected_seq {
            return Err(TraceError::EditApplicationFailed {
                seq: e.seq,
                reason: format!("expected sequence number {expected_seq}"),
            });
        }
        let current = canonical_hash(&model);
        if current != e.pre_hash {
            return Err(TraceError::HashChainBroken {
                seq: e.seq,
                expected: e.pre_hash.clone(),
                found: current,
            });
        }
        model = apply_edits(&model, &e.edits).map_err(|err| TraceError::EditApplicationFailed {
            seq: e.seq,
            reason: err.to_string(),
        })?;
        let after = canonical_hash(&model);
        if after != e.post_hash {
            return Err(TraceError::HashChainBroken {
                seq: e.seq,
                expected: e.post_hash.clone(),
                found: after,
            });
        }
    }
    Ok(model)
}

/// Reverts the last entry and pops it from the trace.
pub fn undo(model: &ProcessModel, trace: &Trace) -> Result<(ProcessModel, Trace), TraceError> {
    let last = trace.entries.last().ok_or(TraceError::EmptyTrace)?;
    let current = canonical_hash(model);
    if current != last.post_hash {
        return Err(TraceError::HashChainBroken {
            seq: last.seq,
            expected: last.post_hash.clone(),
            found: current,
        });
    }
    let reverted = apply_edits(model, &invert_edits(&last.edits)).map_err(|err| {
        TraceError::EditApplicationFailed {
            seq: last.seq,
            reason: err.to_string(),
        }
    })?;
    let found = canonical_hash(&reverted);
    if found != last.pre_hash {
        return Err(TraceError::HashChainBroken {
            seq: last.seq,
            expected: last.pre_hash.clone(),
            found,
        });
    }
    let mut rest = trace.clone();
    rest.entries.pop();
    Ok((reverted, rest))
}
