//! Evolution patterns as atomic model transformations.
//!
//! Every pattern runs its steps on a private copy of the input model and
//! validates the result before returning it, so a failed application is
//! never observable. Sub-patterns invoked from composites are plain steps on
//! that copy; only the outermost pattern commits.

mod activity;
pub(crate) mod elements;
pub mod params;
mod secondary;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::PatternId;
use crate::model::{ElementKind, ModelError, ProcessModel};
use crate::trace::TraceEntry;
use crate::validate::{validate_model, Rule, ValidationReport};

pub use activity::{
    variant_activity_delete, variant_activity_insert, variant_activity_substitute,
    vp_activity_delete, vpai, vpas,
};
pub use params::*;
pub use secondary::{variant_delete, variant_insert, variant_substitute, vp_delete, vp_insert, vp_substitute};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvolutionError {
    #[error("element `{0}` not found")]
    ElementNotFound(String),
    #[error("element `{0}` is already variable")]
    AlreadyVariable(String),
    #[error("capacity reached: {current} of {max} activities")]
    CapacityExceeded { current: usize, max: usize },
    #[error("no flow {after} -> {before}")]
    PositionNotFound { after: String, before: String },
    #[error("resource `{resource}` does not cover {missing:?} for `{activity}` and no fallback was given")]
    MissingResourceCoverage {
        activity: String,
        resource: String,
        missing: Vec<String>,
    },
    #[error("id `{0}` already in use")]
    DuplicateId(String),
    #[error("variation point `{0}` needs at least one variant")]
    MissingVariant(String),
    #[error("`{0}` is not a variation point of the right kind")]
    NoVariationPoint(String),
    #[error("invalid constraint {subject} -> {object}: {reason}")]
    InvalidVcc {
        subject: String,
        object: String,
        reason: String,
    },
    #[error("`{0}` is not a variation point")]
    NotAVariationPoint(String),
    #[error("substituting `{0}` would leave no variant")]
    EmptyResultingVariantSet(String),
    #[error("`{0}` is not a variant")]
    NotAVariant(String),
    #[error("`{variant}` is required by {dependents:?}")]
    DependentVariant {
        variant: String,
        dependents: Vec<String>,
    },
    #[error("`{0}` is the last variant of its variation point")]
    LastVariant(String),
    #[error("target activity `{0}` not found")]
    TargetActivityNotFound(String),
    #[error("coverage violated for {elements:?}: {message}")]
    CoverageViolation { elements: Vec<String>, message: String },
    #[error("`{element}` is used by {users:?}")]
    ElementInUse { element: String, users: Vec<String> },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("`{0}` is an abstract pattern and cannot be applied directly")]
    AbstractPattern(String),
    #[error("result is not well-formed: {0:?}")]
    InvalidResult(ValidationReport),
}

impl EvolutionError {
    pub fn name(&self) -> &'static str {
        match self {
            EvolutionError::ElementNotFound(_) => "ElementNotFound",
            EvolutionError::AlreadyVariable(_) => "AlreadyVariable",
            EvolutionError::CapacityExceeded { .. } => "CapacityExceeded",
            EvolutionError::PositionNotFound { .. } => "PositionNotFound",
            EvolutionError::MissingResourceCoverage { .. } => "MissingResourceCoverage",
            EvolutionError::DuplicateId(_) => "DuplicateId",
            EvolutionError::MissingVariant(_) => "MissingVariant",
            EvolutionError::NoVariationPoint(_) => "NoVariationPoint",
            EvolutionError::InvalidVcc { .. } => "InvalidVcc",
            EvolutionError::NotAVariationPoint(_) => "NotAVariationPoint",
            EvolutionError::EmptyResultingVariantSet(_) => "EmptyResultingVariantSet",
            EvolutionError::NotAVariant(_) => "NotAVariant",
            EvolutionError::DependentVariant { .. } => "DependentVariant",
            EvolutionError::LastVariant(_) => "LastVariant",
            EvolutionError::TargetActivityNotFound(_) => "TargetActivityNotFound",
            EvolutionError::CoverageViolation { .. } => "CoverageViolation",
            EvolutionError::ElementInUse { .. } => "ElementInUse",
            EvolutionError::InvalidParams(_) => "InvalidParams",
            EvolutionError::UnknownPattern(_) => "UnknownPattern",
            EvolutionError::AbstractPattern(_) => "AbstractPattern",
            EvolutionError::InvalidResult(_) => "InvalidResult",
        }
    }

    /// Element ids the error is about.
    pub fn ids(&self) -> Vec<String> {
        match self {
            EvolutionError::ElementNotFound(id)
            | EvolutionError::AlreadyVariable(id)
            | EvolutionError::DuplicateId(id)
            | EvolutionError::MissingVariant(id)
            | EvolutionError::NoVariationPoint(id)
            | EvolutionError::NotAVariationPoint(id)
            | EvolutionError::EmptyResultingVariantSet(id)
            | EvolutionError::NotAVariant(id)
            | EvolutionError::LastVariant(id)
            | EvolutionError::TargetActivityNotFound(id) => vec![id.clone()],
            EvolutionError::PositionNotFound { after, before } => vec![after.clone(), before.clone()],
            EvolutionError::MissingResourceCoverage { activity, resource, .. } => {
                vec![activity.clone(), resource.clone()]
            }
            EvolutionError::InvalidVcc { subject, object, .. } => vec![subject.clone(), object.clone()],
            EvolutionError::DependentVariant { variant, dependents } => {
                std::iter::once(variant.clone()).chain(dependents.iter().cloned()).collect()
            }
            EvolutionError::CoverageViolation { elements, .. } => elements.clone(),
            EvolutionError::ElementInUse { element, users } => {
                std::iter::once(element.clone()).chain(users.iter().cloned()).collect()
            }
            EvolutionError::InvalidResult(r) => {
                let mut ids: Vec<String> = r.violations.iter().flat_map(|v| v.elements.clone()).collect();
                ids.sort();
                ids.dedup();
                ids
            }
            EvolutionError::CapacityExceeded { .. }
            | EvolutionError::InvalidParams(_)
            | EvolutionError::UnknownPattern(_)
            | EvolutionError::AbstractPattern(_) => Vec::new(),
        }
    }
}

impl From<ModelError> for EvolutionError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ElementNotFound(id) => EvolutionError::ElementNotFound(id),
            ModelError::AlreadyVariable(id) => EvolutionError::AlreadyVariable(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplyResult {
    pub model: ProcessModel,
    pub trace_entry: TraceEntry,
}

/// Validates the working copy and packages it with its trace entry.
fn commit<P: Serialize>(
    pattern: PatternId,
    params: &P,
    before: &ProcessModel,
    after: ProcessModel,
) -> Result<ApplyResult, EvolutionError> {
    let report = validate_model(&after);
    if let Some(v) = report.violations.iter().find(|v| v.rule == Rule::W5) {
        return Err(EvolutionError::CoverageViolation {
            elements: v.elements.clone(),
            message: v.message.clone(),
        });
    }
    if !report.is_well_formed() {
        return Err(EvolutionError::InvalidResult(report));
    }
    let params = serde_json::to_value(params).expect("params serialize");
    let trace_entry = TraceEntry::new(pattern, params, before, &after);
    Ok(ApplyResult {
        model: after,
        trace_entry,
    })
}

fn parse<P: DeserializeOwned>(params: &serde_json::Value) -> Result<P, EvolutionError> {
    P::deserialize(params).map_err(|e| EvolutionError::InvalidParams(e.to_string()))
}

/// Applies any concrete pattern with a JSON parameter payload.
pub fn apply_pattern(
    model: &ProcessModel,
    pattern: PatternId,
    params: &serde_json::Value,
) -> Result<ApplyResult, EvolutionError> {
    use PatternId::*;
    if pattern.is_abstract() {
        return Err(EvolutionError::AbstractPattern(pattern.code().to_owned()));
    }
    let kind = pattern.element_kind();
    match pattern {
        Vpai => vpai(model, &parse(params)?),
        Vai => variant_activity_insert(model, &parse(params)?),
        Vpas => vpas(model, &parse(params)?),
        Vas => variant_activity_substitute(model, &parse(params)?),
        Vpad => vp_activity_delete(model, &parse(params)?),
        Vad => variant_activity_delete(model, &parse(params)?),
        Vpri | Vpdi => vp_insert(model, kind, &parse(params)?),
        Vri | Vdi => variant_insert(model, kind, &parse(params)?),
        Vprs | Vpds => vp_substitute(model, kind, &parse(params)?),
        Vrs | Vds => variant_substitute(model, kind, &parse(params)?),
        Vprd | Vpdd => vp_delete(model, kind, &parse(params)?),
        Vrd | Vdd => variant_delete(model, kind, &parse(params)?),
        Ai | As | Ad | Ri | Rs | Rd | Di | Ds | Dd => unreachable!("abstract patterns handled above"),
    }
}

/// Resource and data patterns only.
fn secondary_kind(kind: ElementKind) -> Result<(), EvolutionError> {
    match kind {
        ElementKind::Activity => Err(EvolutionError::InvalidParams(
            "activity patterns have their own entry points".into(),
        )),
        _ => Ok(()),
    }
}
