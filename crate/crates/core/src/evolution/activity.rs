//! Activity patterns: VPAI, VAI, VPAS, VAS, VPAD, VAD.

use super::elements::*;
use super::params::*;
use super::{commit, ApplyResult, EvolutionError};
use crate::catalog::PatternId;
use crate::model::{transform_to_variation_point, Activity, ElementKind, ProcessModel, Role, SequenceFlow, VpType};

type Result<T> = std::result::Result<T, EvolutionError>;

const A: ElementKind = ElementKind::Activity;
const R: ElementKind = ElementKind::Resource;

fn set_incoming_condition(m: &mut ProcessModel, node: &str, condition: &str) {
    let incoming = m.incoming(node);
    for f in incoming {
        m.flows.remove(&f);
        m.flows.insert(SequenceFlow {
            condition: Some(condition.to_owned()),
            ..f
        });
    }
}

/// Inserts a variation point activity, or turns a plain one into a
/// variation point, with its variants, resource and data.
pub fn vpai(model: &ProcessModel, p: &VpaiParams) -> Result<ApplyResult> {
    ensure_capacity(model)?;
    let mut m = model.clone();
    if p.existing {
        if p.position.is_some() {
            return Err(EvolutionError::InvalidParams(
                "position is meaningless when transforming an existing activity".into(),
            ));
        }
        if m.kind_of(&p.id) != Some(A) {
            return Err(EvolutionError::ElementNotFound(p.id.clone()));
        }
        m = transform_to_variation_point(&m, &p.id, p.vp_type.clone())?;
        let act = m.activities.get_mut(&p.id).expect("checked above");
        if let Some(name) = &p.name {
            act.name = name.clone();
        }
        if let Some(c) = &p.condition {
            set_incoming_condition(&mut m, &p.id, c);
        }
    } else {
        let pos = p
            .position
            .as_ref()
            .ok_or_else(|| EvolutionError::InvalidParams("position is required for a new activity".into()))?;
        ensure_fresh(&m, &p.id)?;
        let old = m
            .flow(&pos.after, &pos.before)
            .cloned()
            .ok_or_else(|| EvolutionError::PositionNotFound {
                after: pos.after.clone(),
                before: pos.before.clone(),
            })?;
        m.flows.remove(&old);
        m.flows.insert(SequenceFlow {
            source: pos.after.clone(),
            target: p.id.clone(),
            condition: p.condition.clone().or(old.condition),
        });
        m.flows.insert(SequenceFlow::new(p.id.clone(), pos.before.clone()));
        m.activities.insert(
            p.id.clone(),
            Activity {
                id: p.id.clone(),
                name: p.name.clone().unwrap_or_else(|| p.id.clone()),
                role: Role::VariationPoint(p.vp_type.clone()),
                req_f: Default::default(),
                resource: None,
                data: Default::default(),
            },
        );
    }
    m.activities.get_mut(&p.id).expect("present").req_f = p.req_f.clone();

    if p.variants.is_empty() {
        return Err(EvolutionError::MissingVariant(p.id.clone()));
    }
    add_variants(&mut m, A, &p.id, &p.variants)?;

    if let Some(rc) = &p.resource {
        resolve_resource(&mut m, &p.id, rc)?;
    }
    if let Some(d) = &p.data {
        insert_element(&mut m, ElementKind::Data, d)?;
        m.activities.get_mut(&p.id).expect("present").data.insert(d.id.clone());
    }
    commit(PatternId::Vpai, p, model, m)
}

/// Assigns a covering resource to `activity`, growing or replacing the
/// candidate as the choice prescribes.
fn resolve_resource(m: &mut ProcessModel, activity: &str, rc: &ResourceChoice) -> Result<()> {
    let role = m
        .resources
        .get(&rc.resource)
        .map(|r| r.role.clone())
        .ok_or_else(|| EvolutionError::ElementNotFound(rc.resource.clone()))?;
    let req_f = m.activities[activity].req_f.clone();
    let offered = m.effective_functionalities(&rc.resource);
    if req_f.is_subset(&offered) {
        m.activities.get_mut(activity).expect("present").resource = Some(rc.resource.clone());
        if let Some(v) = &rc.variant {
            let transform = rc.transform_type.clone().unwrap_or(VpType::Alternative);
            match role {
                Role::VariationPoint(_) => add_variant_node(m, R, &rc.resource, v, None)?,
                Role::Plain => add_variant_node(m, R, &rc.resource, v, Some(&transform))?,
                Role::Variant { .. } => {
                    return Err(EvolutionError::InvalidParams(format!(
                        "`{}` is a variant resource and cannot take variants",
                        rc.resource
                    )))
                }
            }
            add_vccs(m, &v.id, &v.vccs)?;
        }
        return Ok(());
    }
    match &rc.fallback {
        Some(spec) => {
            insert_element(m, R, spec)?;
            m.activities.get_mut(activity).expect("present").resource = Some(spec.id.clone());
            Ok(())
        }
        None => Err(EvolutionError::MissingResourceCoverage {
            activity: activity.to_owned(),
            resource: rc.resource.clone(),
            missing: req_f.difference(&offered).cloned().collect(),
        }),
    }
}

/// Adds one variant activity (VAI).
pub fn variant_activity_insert(model: &ProcessModel, p: &VariantInsertParams) -> Result<ApplyResult> {
    let mut m = model.clone();
    add_variant_node(&mut m, A, &p.vp, &p.variant, p.transform.as_ref())?;
    add_vccs(&mut m, &p.variant.id, &p.variant.vccs)?;
    commit(PatternId::Vai, p, model, m)
}

/// Substitutes a variation point activity (VPAS).
pub fn vpas(model: &ProcessModel, p: &VpasParams) -> Result<ApplyResult> {
    let mut m = model.clone();
    require_vp(&m, A, &p.old_vp)?;
    let old = m.activities[&p.old_vp].clone();
    let old_variants = m.variants_of(&p.old_vp);
    let dispositions = resolve_dispositions(&old_variants, &p.dispositions, |v| {
        m.activities[v].req_f.is_subset(&p.req_f)
    })?;
    if surviving_count(&dispositions, p.new_variants.len()) == 0 {
        return Err(EvolutionError::EmptyResultingVariantSet(p.old_vp.clone()));
    }

    let sub = match &p.substitute {
        Substitute::New { id, name } => {
            let role = Role::VariationPoint(p.vp_type.clone());
            if *id == p.old_vp {
                let act = m.activities.get_mut(id).expect("checked above");
                act.role = role;
                act.req_f = p.req_f.clone();
                if let Some(n) = name {
                    act.name = n.clone();
                }
            } else {
                ensure_fresh(&m, id)?;
                m.activities.insert(
                    id.clone(),
                    Activity {
                        id: id.clone(),
                        name: name.clone().unwrap_or_else(|| id.clone()),
                        role,
                        req_f: p.req_f.clone(),
                        resource: old.resource.clone(),
                        data: old.data.clone(),
                    },
                );
                m.rewire(&p.old_vp, id);
                reparent_variants(&mut m, &p.old_vp, id);
                m.remove_element(&p.old_vp);
            }
            id.clone()
        }
        Substitute::Existing(c) => {
            if *c == p.old_vp {
                return Err(EvolutionError::InvalidParams(
                    "the existing substitute must differ from the old variation point".into(),
                ));
            }
            match m.activities.get(c).map(|a| &a.role) {
                None => return Err(EvolutionError::ElementNotFound(c.clone())),
                Some(Role::Plain) => {}
                Some(_) => return Err(EvolutionError::AlreadyVariable(c.clone())),
            }
            let act = m.activities.get_mut(c).expect("checked above");
            act.role = Role::VariationPoint(p.vp_type.clone());
            act.req_f = p.req_f.clone();
            act.data.extend(old.data.iter().cloned());
            m.bridge_out(&p.old_vp);
            reparent_variants(&mut m, &p.old_vp, c);
            m.remove_element(&p.old_vp);
            c.clone()
        }
    };

    run_dispositions(&mut m, A, &sub, &dispositions, &p.new_variants, false)?;

    if let Some(ds) = &p.data_substitution {
        replace_element(&mut m, ElementKind::Data, &ds.old, &ds.new, &ds.dispositions, ds.cascade)?;
    }
    if let Some(d) = &p.data_insert {
        insert_element(&mut m, ElementKind::Data, d)?;
        m.activities.get_mut(&sub).expect("present").data.insert(d.id.clone());
    }
    if let Some(c) = &p.condition {
        set_incoming_condition(&mut m, &sub, c);
    }
    if let Some(rs) = &p.resource {
        substitute_resource(&mut m, &sub, rs)?;
    }
    commit(PatternId::Vpas, p, model, m)
}

fn substitute_resource(m: &mut ProcessModel, activity: &str, rs: &ResourceSubstitution) -> Result<()> {
    let mut target = rs.resource.clone().or_else(|| m.activities[activity].resource.clone());
    if let Some(spec) = &rs.replace {
        let old = target
            .as_deref()
            .ok_or_else(|| EvolutionError::InvalidParams("no resource to replace".into()))?;
        replace_element(m, R, old, spec, &rs.dispositions, rs.cascade)?;
        target = Some(spec.id.clone());
    }
    let Some(target) = target else {
        if rs.variants.is_empty() {
            return Ok(());
        }
        return Err(EvolutionError::InvalidParams("resource variants given without a resource".into()));
    };
    let role = m
        .resources
        .get(&target)
        .map(|r| r.role.clone())
        .ok_or_else(|| EvolutionError::ElementNotFound(target.clone()))?;
    m.activities.get_mut(activity).expect("present").resource = Some(target.clone());
    if rs.variants.is_empty() {
        return Ok(());
    }
    match role {
        Role::VariationPoint(_) => {}
        Role::Plain => {
            *m = transform_to_variation_point(m, &target, rs.transform_type.clone().unwrap_or(VpType::Alternative))?;
        }
        Role::Variant { .. } => {
            return Err(EvolutionError::InvalidParams(format!(
                "`{target}` is a variant resource and cannot take variants"
            )))
        }
    }
    add_variants(m, R, &target, &rs.variants)
}

/// Substitutes one variant activity (VAS).
pub fn variant_activity_substitute(model: &ProcessModel, p: &VariantSubstituteParams) -> Result<ApplyResult> {
    let mut m = model.clone();
    substitute_variant(&mut m, A, &p.variant, &p.spec, p.replace_vccs)?;
    commit(PatternId::Vas, p, model, m)
}

/// Deletes a variation point activity and its variants (VPAD).
pub fn vp_activity_delete(model: &ProcessModel, p: &VpDeleteParams) -> Result<ApplyResult> {
    let mut m = model.clone();
    delete_vp(&mut m, A, &p.vp, p.cascade)?;
    commit(PatternId::Vpad, p, model, m)
}

/// Deletes one variant activity (VAD).
pub fn variant_activity_delete(model: &ProcessModel, p: &VariantDeleteParams) -> Result<ApplyResult> {
    let mut m = model.clone();
    delete_variants(&mut m, A, std::slice::from_ref(&p.variant), p.cascade)?;
    commit(PatternId::Vad, p, model, m)
}
