//! Resource and data patterns, mirroring the activity ones.

use super::elements::*;
use super::params::*;
use super::{commit, secondary_kind, ApplyResult, EvolutionError};
use crate::catalog::{Evolution, Level, PatternId};
use crate::model::{ElementKind, ProcessModel};

type Result<T> = std::result::Result<T, EvolutionError>;

fn pattern(kind: ElementKind, evolution: Evolution, level: Level) -> PatternId {
    PatternId::of(kind, evolution, level)
}

/// VPRI / VPDI.
pub fn vp_insert(model: &ProcessModel, kind: ElementKind, spec: &ElementSpec) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    if spec.vp_type.is_none() {
        return Err(EvolutionError::InvalidParams("vp_type is required".into()));
    }
    let mut m = model.clone();
    insert_element(&mut m, kind, spec)?;
    commit(pattern(kind, Evolution::Insertion, Level::VariationPoint), spec, model, m)
}

/// VRI / VDI.
pub fn variant_insert(model: &ProcessModel, kind: ElementKind, p: &VariantInsertParams) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    let mut m = model.clone();
    add_variant_node(&mut m, kind, &p.vp, &p.variant, p.transform.as_ref())?;
    add_vccs(&mut m, &p.variant.id, &p.variant.vccs)?;
    commit(pattern(kind, Evolution::Insertion, Level::Variant), p, model, m)
}

/// VPRS / VPDS.
pub fn vp_substitute(model: &ProcessModel, kind: ElementKind, p: &VpSubstituteParams) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    let mut m = model.clone();
    substitute_vp(&mut m, kind, &p.old, &p.spec, &p.dispositions, p.cascade)?;
    commit(pattern(kind, Evolution::Substitution, Level::VariationPoint), p, model, m)
}

/// VRS / VDS.
pub fn variant_substitute(
    model: &ProcessModel,
    kind: ElementKind,
    p: &VariantSubstituteParams,
) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    let mut m = model.clone();
    substitute_variant(&mut m, kind, &p.variant, &p.spec, p.replace_vccs)?;
    commit(pattern(kind, Evolution::Substitution, Level::Variant), p, model, m)
}

/// VPRD / VPDD.
pub fn vp_delete(model: &ProcessModel, kind: ElementKind, p: &VpDeleteParams) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    let mut m = model.clone();
    delete_vp(&mut m, kind, &p.vp, p.cascade)?;
    commit(pattern(kind, Evolution::Deletion, Level::VariationPoint), p, model, m)
}

/// VRD / VDD.
pub fn variant_delete(model: &ProcessModel, kind: ElementKind, p: &VariantDeleteParams) -> Result<ApplyResult> {
    secondary_kind(kind)?;
    let mut m = model.clone();
    delete_variants(&mut m, kind, std::slice::from_ref(&p.variant), p.cascade)?;
    commit(pattern(kind, Evolution::Deletion, Level::Variant), p, model, m)
}
