//! The five evolution constraints as a standalone audit, plus consistency
//! analysis of variant configuration constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Evolution, Level, PatternId};
use crate::evolution::elements::{dependents_outside, resolve_dispositions, surviving_count};
use crate::evolution::{
    Disposition, ElementSpec, VariantDeleteParams, VariantInsertParams, VpDeleteParams, VpSubstituteParams,
    VpaiParams, VpasParams,
};
use crate::model::{ElementKind, ProcessModel, Relation, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvolutionConstraint {
    /// Inserting a variation point brings at least one variant.
    EC1,
    /// Inserting a variant needs a variation point, or a plain element to
    /// transform into one.
    EC2,
    /// Substituting a variation point decides the fate of every old variant.
    EC3,
    /// Deleting a variation point takes all of its variants with it.
    EC4,
    /// Deleting a variant is blocked while another variant requires it.
    EC5,
}

impl EvolutionConstraint {
    pub const ALL: [EvolutionConstraint; 5] = [
        EvolutionConstraint::EC1,
        EvolutionConstraint::EC2,
        EvolutionConstraint::EC3,
        EvolutionConstraint::EC4,
        EvolutionConstraint::EC5,
    ];
}

impl fmt::Display for EvolutionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConstraintStatus {
    Satisfied,
    Violated { ids: Vec<String>, message: String },
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub constraint: EvolutionConstraint,
    #[serde(flatten)]
    pub status: ConstraintStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionConstraintReport {
    pub pattern: PatternId,
    pub results: Vec<ConstraintResult>,
}

impl EvolutionConstraintReport {
    pub fn status(&self, c: EvolutionConstraint) -> &ConstraintStatus {
        &self
            .results
            .iter()
            .find(|r| r.constraint == c)
            .expect("every constraint is reported")
            .status
    }

    pub fn violated(&self) -> Vec<EvolutionConstraint> {
        self.results
            .iter()
            .filter(|r| matches!(r.status, ConstraintStatus::Violated { .. }))
            .map(|r| r.constraint)
            .collect()
    }

    pub fn is_satisfied(&self) -> bool {
        self.violated().is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("`{0}` is not a variant")]
    NotAVariant(String),
}

impl ConstraintError {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintError::UnknownPattern(_) => "UnknownPattern",
            ConstraintError::InvalidParams(_) => "InvalidParams",
            ConstraintError::NotAVariant(_) => "NotAVariant",
        }
    }
}

fn parse<P: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<P, ConstraintError> {
    P::deserialize(v).map_err(|e| ConstraintError::InvalidParams(e.to_string()))
}

fn violated(ids: impl IntoIterator<Item = String>, message: impl Into<String>) -> ConstraintStatus {
    let ids: BTreeSet<String> = ids.into_iter().collect();
    ConstraintStatus::Violated {
        ids: ids.into_iter().collect(),
        message: message.into(),
    }
}

fn ec1(id: &str, variants: usize) -> ConstraintStatus {
    if variants == 0 {
        violated([id.to_owned()], format!("variation point `{id}` is inserted without a variant"))
    } else {
        ConstraintStatus::Satisfied
    }
}

fn ec2(model: &ProcessModel, kind: ElementKind, p: &VariantInsertParams) -> ConstraintStatus {
    match model.role_in(kind, &p.vp) {
        Some(Role::VariationPoint(_)) => ConstraintStatus::Satisfied,
        Some(Role::Plain) if p.transform.is_some() => ConstraintStatus::Satisfied,
        Some(Role::Plain) => violated(
            [p.vp.clone()],
            format!("`{}` is plain and no transformation was requested", p.vp),
        ),
        _ => violated([p.vp.clone()], format!("`{}` is not a {kind} variation point", p.vp)),
    }
}

fn ec3(
    model: &ProcessModel,
    old: &str,
    explicit: &BTreeMap<String, Disposition>,
    compatible: impl Fn(&str) -> bool,
    added: usize,
) -> ConstraintStatus {
    let old_variants = model.variants_of(old);
    if let Some(stray) = explicit.keys().find(|k| !old_variants.contains(k)) {
        return violated(
            [old.to_owned(), stray.clone()],
            format!("`{stray}` is not a variant of `{old}`"),
        );
    }
    let resolved = resolve_dispositions(&old_variants, explicit, compatible).expect("strays checked above");
    if surviving_count(&resolved, added) == 0 {
        return violated([old.to_owned()], format!("no variant of `{old}` survives and none is added"));
    }
    ConstraintStatus::Satisfied
}

fn ec5(model: &ProcessModel, removed: &BTreeSet<String>) -> ConstraintStatus {
    let deps = dependents_outside(model, removed);
    if deps.is_empty() {
        return ConstraintStatus::Satisfied;
    }
    let message = deps
        .iter()
        .map(|(v, by)| format!("`{v}` is required by {}", by.join(", ")))
        .collect::<Vec<_>>()
        .join("; ");
    violated(deps.into_iter().flat_map(|(v, by)| std::iter::once(v).chain(by)), message)
}

type Predicate = Box<dyn Fn(&str) -> bool>;

/// Checks only the constraints relevant to applying `pattern` with `params`;
/// the rest report `NotApplicable`.
pub fn check_evolution_constraints(
    model: &ProcessModel,
    pattern: &str,
    params: &serde_json::Value,
) -> Result<EvolutionConstraintReport, ConstraintError> {
    use EvolutionConstraint::*;
    let pid: PatternId = pattern
        .parse()
        .map_err(|_| ConstraintError::UnknownPattern(pattern.to_owned()))?;
    let kind = pid.element_kind();
    let mut statuses: BTreeMap<EvolutionConstraint, ConstraintStatus> = BTreeMap::new();
    match (pid.evolution(), pid.level()) {
        (_, Level::Abstract) => {}
        (Evolution::Insertion, Level::VariationPoint) => {
            let (id, n) = if kind == ElementKind::Activity {
                let p: VpaiParams = parse(params)?;
                (p.id, p.variants.len())
            } else {
                let p: ElementSpec = parse(params)?;
                (p.id, p.variants.len())
            };
            statuses.insert(EC1, ec1(&id, n));
        }
        (Evolution::Insertion, Level::Variant) => {
            let p: VariantInsertParams = parse(params)?;
            statuses.insert(EC2, ec2(model, kind, &p));
        }
        (Evolution::Substitution, Level::VariationPoint) => {
            let (old, explicit, added, compatible): (String, _, usize, Predicate) =
                if kind == ElementKind::Activity {
                    let p: VpasParams = parse(params)?;
                    let req = p.req_f.clone();
                    let m = model.clone();
                    (
                        p.old_vp,
                        p.dispositions,
                        p.new_variants.len(),
                        Box::new(move |v: &str| m.activities.get(v).is_some_and(|a| a.req_f.is_subset(&req))),
                    )
                } else {
                    let p: VpSubstituteParams = parse(params)?;
                    let spec = p.spec.clone();
                    let m = model.clone();
                    (
                        p.old,
                        p.dispositions,
                        p.spec.variants.len(),
                        Box::new(move |v: &str| match kind {
                            ElementKind::Resource => m.resources.get(v).is_some_and(|r| r.r_f.is_subset(&spec.r_f)),
                            _ => m
                                .data_objects
                                .get(v)
                                .is_some_and(|d| Some(&d.data_type) == spec.data_type.as_ref()),
                        }),
                    )
                };
            let status = if model.role_in(kind, &old).is_some_and(Role::is_variation_point) {
                ec3(model, &old, &explicit, &*compatible, added)
            } else {
                violated([old.clone()], format!("`{old}` is not a {kind} variation point"))
            };
            statuses.insert(EC3, status);
            let old_variants = model.variants_of(&old);
            let deleted: BTreeSet<String> = resolve_dispositions(&old_variants, &explicit, &*compatible)
                .map(|r| {
                    r.into_iter()
                        .filter(|(_, d)| matches!(d, Disposition::Delete))
                        .map(|(v, _)| v)
                        .collect()
                })
                .unwrap_or_default();
            statuses.insert(EC5, ec5(model, &deleted));
        }
        (Evolution::Substitution, Level::Variant) => {}
        (Evolution::Deletion, Level::VariationPoint) => {
            let p: VpDeleteParams = parse(params)?;
            let status = if model.role_in(kind, &p.vp).is_some_and(Role::is_variation_point) {
                let mut group: BTreeSet<String> = model.variants_of(&p.vp).into_iter().collect();
                group.insert(p.vp.clone());
                let deps = dependents_outside(model, &group);
                let users: Vec<String> = if kind == ElementKind::Activity || p.cascade {
                    Vec::new()
                } else {
                    group.iter().flat_map(|g| model.referencing_activities(g)).collect()
                };
                if !deps.is_empty() {
                    violated(
                        deps.into_iter().flat_map(|(v, by)| std::iter::once(v).chain(by)),
                        format!("variants of `{}` are required elsewhere", p.vp),
                    )
                } else if !users.is_empty() {
                    violated(
                        std::iter::once(p.vp.clone()).chain(users),
                        format!("`{}` or its variants are still referenced", p.vp),
                    )
                } else {
                    ConstraintStatus::Satisfied
                }
            } else {
                violated([p.vp.clone()], format!("`{}` is not a {kind} variation point", p.vp))
            };
            statuses.insert(EC4, status);
        }
        (Evolution::Deletion, Level::Variant) => {
            let p: VariantDeleteParams = parse(params)?;
            statuses.insert(EC5, ec5(model, &BTreeSet::from([p.variant])));
        }
    }
    Ok(EvolutionConstraintReport {
        pattern: pid,
        results: EvolutionConstraint::ALL
            .iter()
            .map(|&c| ConstraintResult {
                constraint: c,
                status: statuses.remove(&c).unwrap_or(ConstraintStatus::NotApplicable),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    /// The same ordered pair is both required and excluded.
    Contradiction,
    /// No valid configuration can contain the variant.
    Unselectable,
    /// A variant requires a sibling although a point selects one variant.
    SelfCompetition,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VccConflict {
    pub kind: ConflictKind,
    pub ids: Vec<String>,
    pub message: String,
}

/// Depth-first search for a valid configuration containing `forced`.
fn selectable(model: &ProcessModel, forced: &str) -> bool {
    let Some(forced_vp) = model.role_of(forced).and_then(Role::parent) else {
        return false;
    };
    let points = model.variation_points();
    let options: Vec<Vec<Option<String>>> = points
        .iter()
        .map(|(vp, t)| {
            if vp == forced_vp {
                return vec![Some(forced.to_owned())];
            }
            let mut o: Vec<Option<String>> = Vec::new();
            if t.allows_none() {
                o.push(None);
            }
            o.extend(model.variants_of(vp).into_iter().map(Some));
            o
        })
        .collect();
    // variant id -> index of its variation point in `points`
    let owner: BTreeMap<String, usize> = points
        .iter()
        .enumerate()
        .flat_map(|(i, (vp, _))| model.variants_of(vp).into_iter().map(move |v| (v, i)))
        .collect();
    let vccs: Vec<_> = model
        .vccs
        .iter()
        .filter(|c| owner.contains_key(&c.subject) && owner.contains_key(&c.object))
        .collect();

    fn ok_so_far(
        depth: usize,
        picks: &[Option<String>],
        owner: &BTreeMap<String, usize>,
        vccs: &[&crate::model::Vcc],
    ) -> bool {
        let chosen = |v: &str| picks[owner[v]].as_deref() == Some(v);
        vccs.iter().all(|c| {
            let (si, oi) = (owner[&c.subject], owner[&c.object]);
            if si >= depth || oi >= depth {
                return true;
            }
            match c.relation {
                Relation::Requires => !chosen(&c.subject) || chosen(&c.object),
                Relation::Excludes => !(chosen(&c.subject) && chosen(&c.object)),
            }
        })
    }

    fn search(
        depth: usize,
        picks: &mut Vec<Option<String>>,
        options: &[Vec<Option<String>>],
        owner: &BTreeMap<String, usize>,
        vccs: &[&crate::model::Vcc],
    ) -> bool {
        if depth == options.len() {
            return true;
        }
        for o in &options[depth] {
            picks[depth] = o.clone();
            if ok_so_far(depth + 1, picks, owner, vccs) && search(depth + 1, picks, options, owner, vccs) {
                return true;
            }
        }
        false
    }

    let mut picks = vec![None; options.len()];
    search(0, &mut picks, &options, &owner, &vccs)
}

/// Reports contradictions, unselectable variants and sibling requirements.
pub fn check_vcc_consistency(model: &ProcessModel) -> Vec<VccConflict> {
    let mut out = Vec::new();
    for c in model.vccs.iter().filter(|c| c.relation == Relation::Requires) {
        if model
            .vccs
            .iter()
            .any(|o| o.relation == Relation::Excludes && o.subject == c.subject && o.object == c.object)
        {
            out.push(VccConflict {
                kind: ConflictKind::Contradiction,
                ids: vec![c.subject.clone(), c.object.clone()],
                message: format!("{} both requires and excludes {}", c.subject, c.object),
            });
        }
        let (sp, op) = (
            model.role_of(&c.subject).and_then(Role::parent),
            model.role_of(&c.object).and_then(Role::parent),
        );
        if sp.is_some() && sp == op && c.subject != c.object {
            out.push(VccConflict {
                kind: ConflictKind::SelfCompetition,
                ids: vec![c.subject.clone(), c.object.clone()],
                message: format!(
                    "{} requires its sibling {} under `{}`, which selects at most one",
                    c.subject,
                    c.object,
                    sp.unwrap_or_default()
                ),
            });
        }
    }
    // Constraints can starve variants they never mention, e.g. a mandatory
    // variant requiring one sibling of another group starves the others.
    let variants: Vec<String> = if model.vccs.is_empty() {
        Vec::new()
    } else {
        model
            .variation_points()
            .into_iter()
            .flat_map(|(vp, _)| model.variants_of(&vp))
            .collect()
    };
    for v in &variants {
        if !selectable(model, v) {
            out.push(VccConflict {
                kind: ConflictKind::Unselectable,
                ids: vec![v.clone()],
                message: format!("no valid configuration selects {v}"),
            });
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Variants holding a requires-constraint on `variant`; with `transitive`,
/// everything that reaches it through requires-chains.
pub fn variant_dependents(
    model: &ProcessModel,
    variant: &str,
    transitive: bool,
) -> Result<BTreeSet<String>, ConstraintError> {
    if !model.is_variant(variant) {
        return Err(ConstraintError::NotAVariant(variant.to_owned()));
    }
    let direct = |v: &str| -> Vec<String> {
        model
            .vccs
            .iter()
            .filter(|c| c.relation == Relation::Requires && c.object == v && c.subject != v)
            .map(|c| c.subject.clone())
            .collect()
    };
    let mut out: BTreeSet<String> = direct(variant).into_iter().collect();
    if transitive {
        let mut stack: Vec<String> = out.iter().cloned().collect();
        while let Some(v) = stack.pop() {
            for d in direct(&v) {
                if d != variant && out.insert(d.clone()) {
                    stack.push(d);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, SequenceFlow, Vcc, VpType};
    use serde_json::json;

    fn model() -> ProcessModel {
        let v = |id: &str, p: &str| Activity {
            role: Role::variant_of(p),
            ..Activity::plain(id)
        };
        ProcessModel::new("m", 20)
            .with_activity(Activity {
                role: Role::VariationPoint(VpType::Alternative),
                ..Activity::plain("P")
            })
            .with_activity(v("v1", "P"))
            .with_activity(v("v2", "P"))
            .with_activity(Activity {
                role: Role::VariationPoint(VpType::Optional),
                ..Activity::plain("Q")
            })
            .with_activity(v("v3", "Q"))
            .with_flow(SequenceFlow::new("start", "P"))
            .with_flow(SequenceFlow::new("P", "Q"))
            .with_flow(SequenceFlow::new("Q", "end"))
    }

    #[test]
    fn dependents_direct_and_transitive() {
        let m = model().with_vcc(Vcc::requires("v1", "v3")).with_vcc(Vcc::requires("v2", "v1"));
        assert_eq!(variant_dependents(&m, "v3", false).unwrap(), BTreeSet::from(["v1".to_string()]));
        assert_eq!(
            variant_dependents(&m, "v3", true).unwrap(),
            BTreeSet::from(["v1".to_string(), "v2".to_string()])
        );
        assert_eq!(variant_dependents(&m, "P", false).unwrap_err().name(), "NotAVariant");
        let m = model().with_vcc(Vcc::excludes("v1", "v3"));
        assert!(variant_dependents(&m, "v3", false).unwrap().is_empty());
    }

    #[test]
    fn conflicts() {
        assert!(check_vcc_consistency(&model()).is_empty());
        let m = model().with_vcc(Vcc::requires("v1", "v3")).with_vcc(Vcc::excludes("v1", "v3"));
        let kinds: Vec<_> = check_vcc_consistency(&m).into_iter().map(|c| c.kind).collect();
        assert!(kinds.contains(&ConflictKind::Contradiction));
        assert!(kinds.contains(&ConflictKind::Unselectable));
        let m = model().with_vcc(Vcc::requires("v1", "v3")).with_vcc(Vcc::excludes("v3", "v1"));
        let c = check_vcc_consistency(&m);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].kind, c[0].ids.clone()), (ConflictKind::Unselectable, vec!["v1".to_string()]));
        let m = model().with_vcc(Vcc::requires("v1", "v2"));
        let kinds: Vec<_> = check_vcc_consistency(&m).into_iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ConflictKind::Unselectable, ConflictKind::SelfCompetition]);
    }

    #[test]
    fn irrelevant_constraints_are_not_applicable() {
        let r = check_evolution_constraints(&model(), "VAD", &json!({ "variant": "v1" })).unwrap();
        assert_eq!(r.status(EvolutionConstraint::EC5), &ConstraintStatus::Satisfied);
        for c in [EvolutionConstraint::EC1, EvolutionConstraint::EC2, EvolutionConstraint::EC3, EvolutionConstraint::EC4] {
            assert_eq!(r.status(c), &ConstraintStatus::NotApplicable);
        }
        assert_eq!(
            check_evolution_constraints(&model(), "XYZ", &json!({})).unwrap_err().name(),
            "UnknownPattern"
        );
    }
}
