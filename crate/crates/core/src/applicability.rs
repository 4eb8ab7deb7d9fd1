//! Designer guidance: which concrete patterns can be applied to a model,
//! optionally focused on one target element.
//!
//! A verdict is applicable exactly when some parameter set makes the pattern
//! succeed. The target, when given, is the pattern's primary operand: the
//! plain activity to transform for VPAI, the variation point for variant
//! insertion and variation point substitution or deletion, the variant for
//! variant substitution or deletion, and the activity to attach for VPRI and
//! VPDI.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::{Evolution, Level, PatternId};
use crate::evolution::elements::dependents_outside;
use crate::evolution::EvolutionError;
use crate::model::{ElementKind, ProcessModel, Role};

pub const REASON_CAPACITY: &str = "capacity";
pub const REASON_NOT_VARIANT: &str = "target is not a variant";
pub const REASON_NOT_VP: &str = "target is not a variation point";
pub const REASON_NOT_PLAIN_ACTIVITY: &str = "target is not a plain activity";
pub const REASON_NOT_ACTIVITY: &str = "target is not an activity";
pub const REASON_DEPENDENT: &str = "dependent variant";
pub const REASON_LAST: &str = "last variant";
pub const REASON_NO_VP: &str = "no variation point";
pub const REASON_NO_VARIANT: &str = "no variant";
pub const REASON_NO_POSITION: &str = "no insertion position";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicabilityVerdict {
    pub pattern: PatternId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub applicable: bool,
    pub blocking_reasons: Vec<String>,
}

fn has_room(m: &ProcessModel, extra: usize) -> bool {
    m.activity_count() + extra <= m.max_activities
}

fn roles(m: &ProcessModel, kind: ElementKind) -> Vec<(String, Role)> {
    m.ids_of_kind(kind)
        .into_iter()
        .map(|id| {
            let r = m.role_in(kind, &id).cloned().expect("listed id");
            (id, r)
        })
        .collect()
}

/// Why deleting variation point `vp` (with its variants) is blocked.
fn vp_delete_blocker(m: &ProcessModel, vp: &str) -> Option<&'static str> {
    let mut group: BTreeSet<String> = m.variants_of(vp).into_iter().collect();
    group.insert(vp.to_owned());
    (!dependents_outside(m, &group).is_empty()).then_some(REASON_DEPENDENT)
}

/// Why deleting variant `v` alone is blocked.
fn variant_delete_blocker(m: &ProcessModel, v: &str, parent: &str) -> Option<&'static str> {
    if m.variants_of(parent).len() < 2 {
        return Some(REASON_LAST);
    }
    (!dependents_outside(m, &BTreeSet::from([v.to_owned()])).is_empty()).then_some(REASON_DEPENDENT)
}

fn reasons_without_target(m: &ProcessModel, p: PatternId) -> Vec<&'static str> {
    let kind = p.element_kind();
    let elems = roles(m, kind);
    let vps: Vec<&String> = elems.iter().filter(|(_, r)| r.is_variation_point()).map(|(id, _)| id).collect();
    let variants: Vec<(&String, &str)> = elems
        .iter()
        .filter_map(|(id, r)| r.parent().map(|parent| (id, parent)))
        .collect();
    let has_plain = elems.iter().any(|(_, r)| r.is_plain());
    let first_or = |reasons: Vec<&'static str>, fallback: &'static str| -> Vec<&'static str> {
        let set: BTreeSet<&'static str> = reasons.into_iter().collect();
        match set.len() {
            0 => vec![fallback],
            _ => set.into_iter().collect(),
        }
    };
    match (p.evolution(), p.level(), kind) {
        (Evolution::Insertion, Level::VariationPoint, ElementKind::Activity) => {
            let via_flow = !m.flows.is_empty() && has_room(m, 2);
            let via_transform = has_plain && has_room(m, 1);
            if via_flow || via_transform {
                return vec![];
            }
            if m.flows.is_empty() && !has_plain {
                vec![REASON_NO_POSITION]
            } else {
                vec![REASON_CAPACITY]
            }
        }
        (Evolution::Insertion, Level::Variant, ElementKind::Activity) => {
            let mut r = Vec::new();
            if vps.is_empty() && !has_plain {
                r.push(REASON_NO_VP);
            }
            if !has_room(m, 1) {
                r.push(REASON_CAPACITY);
            }
            r
        }
        (Evolution::Insertion, Level::VariationPoint, _) => vec![],
        (Evolution::Insertion, Level::Variant, _) => {
            if vps.is_empty() && !has_plain {
                vec![REASON_NO_VP]
            } else {
                vec![]
            }
        }
        (Evolution::Substitution, Level::VariationPoint, _) => {
            if vps.is_empty() {
                vec![REASON_NO_VP]
            } else {
                vec![]
            }
        }
        (Evolution::Substitution, Level::Variant, _) => {
            if variants.is_empty() {
                vec![REASON_NO_VARIANT]
            } else {
                vec![]
            }
        }
        (Evolution::Deletion, Level::VariationPoint, _) => {
            if vps.is_empty() {
                return vec![REASON_NO_VP];
            }
            let blockers: Vec<_> = vps.iter().map(|vp| vp_delete_blocker(m, vp)).collect();
            if blockers.iter().any(Option::is_none) {
                vec![]
            } else {
                first_or(blockers.into_iter().flatten().collect(), REASON_DEPENDENT)
            }
        }
        (Evolution::Deletion, Level::Variant, _) => {
            if variants.is_empty() {
                return vec![REASON_NO_VARIANT];
            }
            let blockers: Vec<_> = variants.iter().map(|(v, p)| variant_delete_blocker(m, v, p)).collect();
            if blockers.iter().any(Option::is_none) {
                vec![]
            } else {
                first_or(blockers.into_iter().flatten().collect(), REASON_LAST)
            }
        }
        (_, Level::Abstract, _) => unreachable!("only concrete patterns are assessed"),
    }
}

fn reasons_for_target(m: &ProcessModel, p: PatternId, t: &str) -> Vec<&'static str> {
    let kind = p.element_kind();
    let role = m.role_in(kind, t).cloned();
    let mut r = Vec::new();
    match (p.evolution(), p.level(), kind) {
        (Evolution::Insertion, Level::VariationPoint, ElementKind::Activity) => {
            if role != Some(Role::Plain) {
                r.push(REASON_NOT_PLAIN_ACTIVITY);
            }
            if !has_room(m, 1) {
                r.push(REASON_CAPACITY);
            }
        }
        (Evolution::Insertion, Level::VariationPoint, _) => {
            if !m.activities.contains_key(t) {
                r.push(REASON_NOT_ACTIVITY);
            }
        }
        (Evolution::Insertion, Level::Variant, _) => {
            if !matches!(role, Some(Role::Plain | Role::VariationPoint(_))) {
                r.push(REASON_NOT_VP);
            }
            if kind == ElementKind::Activity && !has_room(m, 1) {
                r.push(REASON_CAPACITY);
            }
        }
        (Evolution::Substitution, Level::VariationPoint, _) => {
            if !role.as_ref().is_some_and(Role::is_variation_point) {
                r.push(REASON_NOT_VP);
            }
        }
        (Evolution::Substitution, Level::Variant, _) => {
            if role.as_ref().and_then(Role::parent).is_none() {
                r.push(REASON_NOT_VARIANT);
            }
        }
        (Evolution::Deletion, Level::VariationPoint, _) => match role {
            Some(Role::VariationPoint(_)) => r.extend(vp_delete_blocker(m, t)),
            _ => r.push(REASON_NOT_VP),
        },
        (Evolution::Deletion, Level::Variant, _) => match role {
            Some(Role::Variant { parent, .. }) => r.extend(variant_delete_blocker(m, t, &parent)),
            _ => r.push(REASON_NOT_VARIANT),
        },
        (_, Level::Abstract, _) => unreachable!("only concrete patterns are assessed"),
    }
    r
}

/// One verdict per concrete pattern, in catalog order. Never mutates.
pub fn applicable_patterns(
    model: &ProcessModel,
    target: Option<&str>,
) -> Result<Vec<ApplicabilityVerdict>, EvolutionError> {
    if let Some(t) = target {
        if model.kind_of(t).is_none() {
            return Err(EvolutionError::ElementNotFound(t.to_owned()));
        }
    }
    Ok(PatternId::concrete()
        .map(|p| {
            let reasons = match target {
                Some(t) => reasons_for_target(model, p, t),
                None => reasons_without_target(model, p),
            };
            ApplicabilityVerdict {
                pattern: p,
                target: target.map(str::to_owned),
                applicable: reasons.is_empty(),
                blocking_reasons: reasons.into_iter().map(str::to_owned).collect(),
            }
        })
        .collect())
}
