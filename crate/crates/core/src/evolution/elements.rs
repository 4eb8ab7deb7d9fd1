//! Kind-generic building blocks shared by all patterns. Each step mutates a
//! working copy in place and never validates; the outermost pattern commits.

use std::collections::{BTreeMap, BTreeSet};

use super::params::{Disposition, ElementSpec, VariantSpec, VccSpec};
use super::EvolutionError;
use crate::model::{
    transform_to_variation_point, Activity, DataObject, ElementKind, ProcessModel, Resource, Role,
    Vcc, VpType,
};

type Result<T> = std::result::Result<T, EvolutionError>;

pub(crate) fn ensure_fresh(m: &ProcessModel, id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(EvolutionError::InvalidParams("empty element id".into()));
    }
    if m.id_in_use(id) {
        return Err(EvolutionError::DuplicateId(id.to_owned()));
    }
    Ok(())
}

pub(crate) fn ensure_capacity(m: &ProcessModel) -> Result<()> {
    if m.activity_count() >= m.max_activities {
        return Err(EvolutionError::CapacityExceeded {
            current: m.activity_count(),
            max: m.max_activities,
        });
    }
    Ok(())
}

fn role_in(m: &ProcessModel, kind: ElementKind, id: &str) -> Result<Role> {
    m.role_in(kind, id)
        .cloned()
        .ok_or_else(|| EvolutionError::ElementNotFound(id.to_owned()))
}

/// Fails unless `id` is a variation point of `kind`.
pub(crate) fn require_vp(m: &ProcessModel, kind: ElementKind, id: &str) -> Result<VpType> {
    match role_in(m, kind, id)? {
        Role::VariationPoint(t) => Ok(t),
        _ => Err(EvolutionError::NotAVariationPoint(id.to_owned())),
    }
}

/// Fails unless `id` is a variant of `kind`; returns its parent.
pub(crate) fn require_variant(m: &ProcessModel, kind: ElementKind, id: &str) -> Result<String> {
    match role_in(m, kind, id)? {
        Role::Variant { parent, .. } => Ok(parent),
        _ => Err(EvolutionError::NotAVariant(id.to_owned())),
    }
}

fn check_payload(kind: ElementKind, spec: &VariantSpec) -> Result<()> {
    let bad = match kind {
        ElementKind::Activity => {
            (!spec.r_f.is_empty() || spec.data_type.is_some()).then_some("r_f/data_type")
        }
        ElementKind::Resource => (!spec.req_f.is_empty()
            || spec.resource.is_some()
            || !spec.data.is_empty()
            || spec.data_type.is_some())
        .then_some("req_f/resource/data/data_type"),
        ElementKind::Data => (!spec.req_f.is_empty()
            || spec.resource.is_some()
            || !spec.data.is_empty()
            || !spec.r_f.is_empty())
        .then_some("req_f/resource/data/r_f"),
    };
    match bad {
        Some(fields) => Err(EvolutionError::InvalidParams(format!(
            "{fields} not allowed on a {kind} variant `{}`",
            spec.id
        ))),
        None if kind == ElementKind::Activity && !spec.assign_to.is_empty() => Err(
            EvolutionError::InvalidParams(format!("assign_to not allowed on activity variant `{}`", spec.id)),
        ),
        None => Ok(()),
    }
}

/// Gives `activities` the resource or data element `id`.
pub(crate) fn attach(m: &mut ProcessModel, kind: ElementKind, id: &str, activities: &[String]) -> Result<()> {
    for a in activities {
        let act = m
            .activities
            .get_mut(a)
            .ok_or_else(|| EvolutionError::TargetActivityNotFound(a.clone()))?;
        match kind {
            ElementKind::Resource => act.resource = Some(id.to_owned()),
            ElementKind::Data => {
                act.data.insert(id.to_owned());
            }
            ElementKind::Activity => {
                return Err(EvolutionError::InvalidParams("activities cannot be attached".into()))
            }
        }
    }
    Ok(())
}

/// Adds a variant node under `vp`, optionally turning a plain `vp` into a
/// variation point first. Constraints are added separately by `add_vccs` so
/// that siblings inserted together may reference each other.
pub(crate) fn add_variant_node(
    m: &mut ProcessModel,
    kind: ElementKind,
    vp: &str,
    spec: &VariantSpec,
    transform: Option<&VpType>,
) -> Result<()> {
    check_payload(kind, spec)?;
    match m.role_in(kind, vp).cloned() {
        Some(Role::VariationPoint(_)) => {}
        Some(Role::Plain) if transform.is_some() => {
            *m = transform_to_variation_point(m, vp, transform.cloned().unwrap())?;
        }
        Some(_) => return Err(EvolutionError::NoVariationPoint(vp.to_owned())),
        None if m.id_in_use(vp) => return Err(EvolutionError::NoVariationPoint(vp.to_owned())),
        None => return Err(EvolutionError::ElementNotFound(vp.to_owned())),
    }
    ensure_fresh(m, &spec.id)?;
    let role = Role::Variant {
        parent: vp.to_owned(),
        vsc: spec.vsc.clone(),
    };
    let name = spec.display_name();
    match kind {
        ElementKind::Activity => {
            ensure_capacity(m)?;
            m.activities.insert(
                spec.id.clone(),
                Activity {
                    id: spec.id.clone(),
                    name,
                    role,
                    req_f: spec.req_f.clone(),
                    resource: spec.resource.clone(),
                    data: spec.data.clone(),
                },
            );
        }
        ElementKind::Resource => {
            m.resources.insert(
                spec.id.clone(),
                Resource {
                    id: spec.id.clone(),
                    name,
                    role,
                    r_f: spec.r_f.clone(),
                },
            );
        }
        ElementKind::Data => {
            let data_type = spec.data_type.clone().ok_or_else(|| {
                EvolutionError::InvalidParams(format!("data variant `{}` needs a data_type", spec.id))
            })?;
            m.data_objects.insert(
                spec.id.clone(),
                DataObject {
                    id: spec.id.clone(),
                    name,
                    role,
                    data_type,
                },
            );
        }
    }
    attach(m, kind, &spec.id, &spec.assign_to)
}

/// Adds constraints with `subject` as their subject. Both endpoints must be
/// existing variants.
pub(crate) fn add_vccs(m: &mut ProcessModel, subject: &str, vccs: &[VccSpec]) -> Result<()> {
    for v in vccs {
        let reason = if v.object == subject {
            Some("constraint on itself")
        } else if !m.is_variant(&v.object) {
            Some("object is not an existing variant")
        } else if !m.is_variant(subject) {
            Some("subject is not an existing variant")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(EvolutionError::InvalidVcc {
                subject: subject.to_owned(),
                object: v.object.clone(),
                reason: reason.into(),
            });
        }
        let vcc = Vcc {
            subject: subject.to_owned(),
            relation: v.relation,
            object: v.object.clone(),
        };
        m.vccs.insert(vcc);
    }
    Ok(())
}

/// Inserts a resource or data object, plain or variation point, together
/// with its variants, and attaches it to `spec.assign_to`.
pub(crate) fn insert_element(m: &mut ProcessModel, kind: ElementKind, spec: &ElementSpec) -> Result<()> {
    if kind == ElementKind::Activity {
        return Err(EvolutionError::InvalidParams("element spec describes a resource or data object".into()));
    }
    ensure_fresh(m, &spec.id)?;
    let role = match &spec.vp_type {
        Some(t) => {
            if spec.variants.is_empty() {
                return Err(EvolutionError::MissingVariant(spec.id.clone()));
            }
            Role::VariationPoint(t.clone())
        }
        None if !spec.variants.is_empty() => {
            return Err(EvolutionError::InvalidParams(format!(
                "`{}` has variants but no vp_type",
                spec.id
            )))
        }
        None => Role::Plain,
    };
    match kind {
        ElementKind::Resource => {
            if spec.data_type.is_some() {
                return Err(EvolutionError::InvalidParams("data_type on a resource".into()));
            }
            m.resources.insert(
                spec.id.clone(),
                Resource {
                    id: spec.id.clone(),
                    name: spec.display_name(),
                    role,
                    r_f: spec.r_f.clone(),
                },
            );
        }
        ElementKind::Data => {
            if !spec.r_f.is_empty() {
                return Err(EvolutionError::InvalidParams("r_f on a data object".into()));
            }
            let data_type = spec.data_type.clone().ok_or_else(|| {
                EvolutionError::InvalidParams(format!("data object `{}` needs a data_type", spec.id))
            })?;
            m.data_objects.insert(
                spec.id.clone(),
                DataObject {
                    id: spec.id.clone(),
                    name: spec.display_name(),
                    role,
                    data_type,
                },
            );
        }
        ElementKind::Activity => unreachable!(),
    }
    add_variants(m, kind, &spec.id, &spec.variants)?;
    attach(m, kind, &spec.id, &spec.assign_to)
}

/// Adds several variants under one variation point, then their constraints.
pub(crate) fn add_variants(m: &mut ProcessModel, kind: ElementKind, vp: &str, variants: &[VariantSpec]) -> Result<()> {
    for v in variants {
        add_variant_node(m, kind, vp, v, None)?;
    }
    for v in variants {
        add_vccs(m, &v.id, &v.vccs)?;
    }
    Ok(())
}

/// Replaces variant `old` by a new variant under the same parent.
/// Unspecified activity resource/data and data type are inherited.
pub(crate) fn substitute_variant(
    m: &mut ProcessModel,
    kind: ElementKind,
    old: &str,
    spec: &VariantSpec,
    replace_vccs: bool,
) -> Result<()> {
    let parent = require_variant(m, kind, old)?;
    check_payload(kind, spec)?;
    if spec.id != old {
        ensure_fresh(m, &spec.id)?;
    }
    let role = Role::Variant {
        parent,
        vsc: spec.vsc.clone(),
    };
    let name = spec.display_name();
    match kind {
        ElementKind::Activity => {
            let prev = m.activities.remove(old).expect("checked above");
            m.activities.insert(
                spec.id.clone(),
                Activity {
                    id: spec.id.clone(),
                    name,
                    role,
                    req_f: spec.req_f.clone(),
                    resource: spec.resource.clone().or(prev.resource),
                    data: if spec.data.is_empty() { prev.data } else { spec.data.clone() },
                },
            );
        }
        ElementKind::Resource => {
            m.resources.remove(old);
            m.resources.insert(
                spec.id.clone(),
                Resource {
                    id: spec.id.clone(),
                    name,
                    role,
                    r_f: spec.r_f.clone(),
                },
            );
        }
        ElementKind::Data => {
            let prev = m.data_objects.remove(old).expect("checked above");
            m.data_objects.insert(
                spec.id.clone(),
                DataObject {
                    id: spec.id.clone(),
                    name,
                    role,
                    data_type: spec.data_type.clone().unwrap_or(prev.data_type),
                },
            );
        }
    }
    let vccs = std::mem::take(&mut m.vccs);
    m.vccs = vccs
        .into_iter()
        .filter_map(|mut v| {
            if v.subject == old {
                if replace_vccs {
                    return None;
                }
                v.subject = spec.id.clone();
            }
            if v.object == old {
                v.object = spec.id.clone();
            }
            Some(v)
        })
        .collect();
    m.repoint_references(old, &spec.id);
    add_vccs(m, &spec.id, &spec.vccs)?;
    attach(m, kind, &spec.id, &spec.assign_to)
}

/// Variants outside `removed` holding a requires-constraint on a member.
pub(crate) fn dependents_outside(m: &ProcessModel, removed: &BTreeSet<String>) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in &m.vccs {
        if v.relation == crate::model::Relation::Requires
            && removed.contains(&v.object)
            && !removed.contains(&v.subject)
        {
            out.entry(v.object.clone()).or_default().push(v.subject.clone());
        }
    }
    out
}

fn dependent_error(m: &ProcessModel, removed: &BTreeSet<String>) -> Result<()> {
    match dependents_outside(m, removed).into_iter().next() {
        Some((variant, dependents)) => Err(EvolutionError::DependentVariant { variant, dependents }),
        None => Ok(()),
    }
}

/// Activities referencing any member of `ids`, sorted.
fn users_of(m: &ProcessModel, ids: &BTreeSet<String>) -> Vec<String> {
    let mut users: Vec<String> = ids.iter().flat_map(|id| m.referencing_activities(id)).collect();
    users.sort();
    users.dedup();
    users
}

fn clear_references(m: &mut ProcessModel, ids: &BTreeSet<String>) {
    for a in m.activities.values_mut() {
        if a.resource.as_ref().is_some_and(|r| ids.contains(r)) {
            a.resource = None;
        }
        a.data.retain(|d| !ids.contains(d));
    }
}

/// Guards resource/data removal: referenced elements block unless cascading.
fn release(m: &mut ProcessModel, kind: ElementKind, ids: &BTreeSet<String>, cascade: bool) -> Result<()> {
    if kind == ElementKind::Activity {
        return Ok(());
    }
    let users = users_of(m, ids);
    if users.is_empty() {
        return Ok(());
    }
    if !cascade {
        let element = ids
            .iter()
            .find(|id| !m.referencing_activities(id).is_empty())
            .cloned()
            .unwrap_or_default();
        return Err(EvolutionError::ElementInUse { element, users });
    }
    clear_references(m, ids);
    Ok(())
}

/// Deletes variants of one kind as a batch. Checks, in order: every id is a
/// variant, no variation point loses its last variant, no survivor requires
/// a deleted variant, and resource/data variants are not in use.
pub(crate) fn delete_variants(m: &mut ProcessModel, kind: ElementKind, ids: &[String], cascade: bool) -> Result<()> {
    let set: BTreeSet<String> = ids.iter().cloned().collect();
    let mut parents = BTreeSet::new();
    for id in ids {
        parents.insert(require_variant(m, kind, id)?);
    }
    for p in &parents {
        if m.variants_of(p).iter().all(|v| set.contains(v)) {
            let last = ids
                .iter()
                .find(|v| m.role_of(v).and_then(Role::parent) == Some(p.as_str()))
                .cloned()
                .unwrap_or_default();
            return Err(EvolutionError::LastVariant(last));
        }
    }
    dependent_error(m, &set)?;
    release(m, kind, &set, cascade)?;
    for id in ids {
        m.remove_element(id);
    }
    Ok(())
}

/// Resource/data elements referenced by `deleted` activities that nobody
/// else references any more. A variation point only goes together with all
/// of its variants; a variant never goes if it is the last one left.
fn orphaned_elements(before: &ProcessModel, after: &ProcessModel, deleted: &BTreeSet<String>) -> Vec<String> {
    let mut candidates = BTreeSet::new();
    for a in deleted.iter().filter_map(|id| before.activities.get(id)) {
        candidates.extend(a.resource.iter().cloned());
        candidates.extend(a.data.iter().cloned());
    }
    let unused = |id: &str| after.referencing_activities(id).is_empty();
    let mut out = Vec::new();
    for id in &candidates {
        if !unused(id) {
            continue;
        }
        match after.role_of(id) {
            Some(Role::Plain) => out.push(id.clone()),
            Some(Role::VariationPoint(_)) => {
                let vs = after.variants_of(id);
                if vs.iter().all(|v| unused(v)) {
                    out.push(id.clone());
                    out.extend(vs);
                }
            }
            Some(Role::Variant { parent, .. }) => {
                let parent_goes = candidates.contains(parent)
                    && unused(parent)
                    && after.variants_of(parent).iter().all(|v| unused(v));
                let siblings_left = after
                    .variants_of(parent)
                    .iter()
                    .filter(|v| !candidates.contains(*v) || !unused(v))
                    .count();
                if !parent_goes && siblings_left > 0 {
                    out.push(id.clone());
                }
            }
            None => {}
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Deletes a variation point with all its variants.
pub(crate) fn delete_vp(m: &mut ProcessModel, kind: ElementKind, vp: &str, cascade: bool) -> Result<()> {
    require_vp(m, kind, vp)?;
    let mut set: BTreeSet<String> = m.variants_of(vp).into_iter().collect();
    set.insert(vp.to_owned());
    dependent_error(m, &set)?;
    release(m, kind, &set, cascade)?;
    let before = m.clone();
    if kind == ElementKind::Activity {
        m.bridge_out(vp);
    }
    for id in &set {
        m.remove_element(id);
    }
    if kind == ElementKind::Activity && cascade {
        for id in orphaned_elements(&before, m, &set) {
            m.remove_element(&id);
        }
    }
    Ok(())
}

/// Whether an old resource/data variant fits under the replacement spec.
fn compatible(m: &ProcessModel, kind: ElementKind, variant: &str, spec: &ElementSpec) -> bool {
    match kind {
        ElementKind::Resource => m
            .resources
            .get(variant)
            .is_some_and(|r| r.r_f.is_subset(&spec.r_f)),
        ElementKind::Data => m
            .data_objects
            .get(variant)
            .is_some_and(|d| Some(&d.data_type) == spec.data_type.as_ref()),
        ElementKind::Activity => false,
    }
}

/// Resolves per-variant dispositions: explicit entries win, the rest follow
/// `compatible`. Unknown keys are rejected.
pub(crate) fn resolve_dispositions(
    old_variants: &[String],
    explicit: &BTreeMap<String, Disposition>,
    compatible: impl Fn(&str) -> bool,
) -> Result<Vec<(String, Disposition)>> {
    if let Some(stray) = explicit.keys().find(|k| !old_variants.contains(k)) {
        return Err(EvolutionError::InvalidParams(format!(
            "disposition for `{stray}`, which is not a variant being substituted"
        )));
    }
    Ok(old_variants
        .iter()
        .map(|v| {
            let d = explicit.get(v).cloned().unwrap_or(if compatible(v) {
                Disposition::Keep
            } else {
                Disposition::Delete
            });
            (v.clone(), d)
        })
        .collect())
}

/// Runs resolved dispositions for variants now parented under `vp`:
/// substitutions first, then `new_variants`, then deletions.
pub(crate) fn run_dispositions(
    m: &mut ProcessModel,
    kind: ElementKind,
    vp: &str,
    dispositions: &[(String, Disposition)],
    new_variants: &[VariantSpec],
    cascade: bool,
) -> Result<()> {
    for (old, d) in dispositions {
        if let Disposition::Substitute(spec) = d {
            substitute_variant(m, kind, old, spec, false)?;
        }
    }
    add_variants(m, kind, vp, new_variants)?;
    let deleted: Vec<String> = dispositions
        .iter()
        .filter(|(_, d)| matches!(d, Disposition::Delete))
        .map(|(v, _)| v.clone())
        .collect();
    if !deleted.is_empty() {
        delete_variants(m, kind, &deleted, cascade)?;
    }
    Ok(())
}

pub(crate) fn surviving_count(dispositions: &[(String, Disposition)], added: usize) -> usize {
    dispositions
        .iter()
        .filter(|(_, d)| !matches!(d, Disposition::Delete))
        .count()
        + added
}

/// Moves every variant of `from` under `to`.
pub(crate) fn reparent_variants(m: &mut ProcessModel, from: &str, to: &str) {
    for v in m.variants_of(from) {
        if let Some(Role::Variant { parent, .. }) = m.role_mut(&v) {
            *parent = to.to_owned();
        }
    }
}

/// Substitutes a resource or data variation point by `spec`.
pub(crate) fn substitute_vp(
    m: &mut ProcessModel,
    kind: ElementKind,
    old: &str,
    spec: &ElementSpec,
    explicit: &BTreeMap<String, Disposition>,
    cascade: bool,
) -> Result<()> {
    require_vp(m, kind, old)?;
    let vp_type = spec
        .vp_type
        .clone()
        .ok_or_else(|| EvolutionError::InvalidParams("substitute needs a vp_type".into()))?;
    if spec.id != old {
        ensure_fresh(m, &spec.id)?;
    }
    let old_variants = m.variants_of(old);
    let dispositions = resolve_dispositions(&old_variants, explicit, |v| compatible(m, kind, v, spec))?;
    if surviving_count(&dispositions, spec.variants.len()) == 0 {
        return Err(EvolutionError::EmptyResultingVariantSet(old.to_owned()));
    }
    let role = Role::VariationPoint(vp_type);
    let name = spec.display_name();
    match kind {
        ElementKind::Resource => {
            if spec.data_type.is_some() {
                return Err(EvolutionError::InvalidParams("data_type on a resource".into()));
            }
            m.resources.remove(old);
            m.resources.insert(
                spec.id.clone(),
                Resource {
                    id: spec.id.clone(),
                    name,
                    role,
                    r_f: spec.r_f.clone(),
                },
            );
        }
        ElementKind::Data => {
            if !spec.r_f.is_empty() {
                return Err(EvolutionError::InvalidParams("r_f on a data object".into()));
            }
            let prev = m.data_objects.remove(old).expect("checked above");
            m.data_objects.insert(
                spec.id.clone(),
                DataObject {
                    id: spec.id.clone(),
                    name,
                    role,
                    data_type: spec.data_type.clone().unwrap_or(prev.data_type),
                },
            );
        }
        ElementKind::Activity => {
            return Err(EvolutionError::InvalidParams("use the activity substitution pattern".into()))
        }
    }
    m.repoint_references(old, &spec.id);
    reparent_variants(m, old, &spec.id);
    run_dispositions(m, kind, &spec.id, &dispositions, &spec.variants, cascade)?;
    attach(m, kind, &spec.id, &spec.assign_to)
}

/// Replaces a plain resource or data object by `spec` and repoints every
/// reference to it.
pub(crate) fn replace_plain(m: &mut ProcessModel, kind: ElementKind, old: &str, spec: &ElementSpec) -> Result<()> {
    match role_in(m, kind, old)? {
        Role::Plain => {}
        _ => return Err(EvolutionError::InvalidParams(format!("`{old}` is not a plain element"))),
    }
    let users = m.referencing_activities(old);
    let mut spec = spec.clone();
    for u in users {
        if !spec.assign_to.contains(&u) {
            spec.assign_to.push(u);
        }
    }
    let set = BTreeSet::from([old.to_owned()]);
    clear_references(m, &set);
    m.remove_element(old);
    insert_element(m, kind, &spec)
}

/// Replaces a resource or data object of any non-variant role.
pub(crate) fn replace_element(
    m: &mut ProcessModel,
    kind: ElementKind,
    old: &str,
    spec: &ElementSpec,
    explicit: &BTreeMap<String, Disposition>,
    cascade: bool,
) -> Result<()> {
    match role_in(m, kind, old)? {
        Role::Plain => replace_plain(m, kind, old, spec),
        Role::VariationPoint(_) => substitute_vp(m, kind, old, spec, explicit, cascade),
        Role::Variant { .. } => Err(EvolutionError::InvalidParams(format!(
            "`{old}` is a variant; substitute it with the variant pattern"
        ))),
    }
}
