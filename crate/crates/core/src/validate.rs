//! Well-formedness rules W1–W10. Violations are reported as data.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ElementKind, ProcessModel, Relation, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Flows reference existing nodes; no self-loops, duplicates or id clashes.
    W1,
    /// Every variant has exactly one same-kind variation point parent.
    W2,
    /// Every variation point has at least one variant.
    W3,
    /// Variation point type is a known value.
    W4,
    /// Assigned resources exist and cover the activity's required functionalities.
    W5,
    /// Variant configuration constraints are well-formed.
    W6,
    /// Data references resolve.
    W7,
    /// Activity count within capacity.
    W8,
    /// Every flow-eligible activity lies on a start→end path.
    W9,
    /// Variants never appear on sequence flows.
    W10,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub elements: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_well_formed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, rule: Rule, elements: &[&str], message: impl Into<String>) {
        self.0.push(Violation {
            rule,
            elements: elements.iter().map(|s| s.to_string()).collect(),
            message: message.into(),
        });
    }
}

pub fn validate_model(model: &ProcessModel) -> ValidationReport {
    let mut c = Collector(Vec::new());
    check_flows(model, &mut c);
    check_roles(model, &mut c);
    check_resources(model, &mut c);
    check_vccs(model, &mut c);
    check_data_refs(model, &mut c);
    if model.max_activities == 0 || model.activity_count() > model.max_activities {
        c.push(
            Rule::W8,
            &[&model.id],
            format!(
                "{} activities exceed capacity {}",
                model.activity_count(),
                model.max_activities
            ),
        );
    }
    check_paths(model, &mut c);
    let mut violations = c.0;
    violations.sort();
    violations.dedup();
    ValidationReport { violations }
}

fn is_node(model: &ProcessModel, id: &str) -> bool {
    id == model.start || id == model.end || model.activities.contains_key(id)
}

fn check_flows(model: &ProcessModel, c: &mut Collector) {
    let mut seen_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for id in model
        .activities
        .keys()
        .chain(model.resources.keys())
        .chain(model.data_objects.keys())
        .chain([&model.start, &model.end])
    {
        *seen_ids.entry(id).or_default() += 1;
    }
    for (id, n) in seen_ids {
        if n > 1 {
            c.push(Rule::W1, &[id], format!("identifier `{id}` used {n} times"));
        }
    }

    let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for f in &model.flows {
        for end in [&f.source, &f.target] {
            if !is_node(model, end) {
                c.push(
                    Rule::W1,
                    &[&f.source, &f.target],
                    format!("flow endpoint `{end}` is not a process node"),
                );
            }
        }
        if f.source == f.target {
            c.push(Rule::W1, &[&f.source], "self-loop flow");
        }
        *pairs.entry((&f.source, &f.target)).or_default() += 1;
    }
    for ((s, t), n) in pairs {
        if n > 1 {
            c.push(Rule::W1, &[s, t], "duplicate flow between the same nodes");
        }
    }

    for f in &model.flows {
        for end in [&f.source, &f.target] {
            if model.activities.get(end.as_str()).is_some_and(|a| !a.is_flow_eligible()) {
                c.push(
                    Rule::W10,
                    &[end, &f.source, &f.target],
                    format!("variant `{end}` appears on a sequence flow"),
                );
            }
        }
    }
}

fn check_roles(model: &ProcessModel, c: &mut Collector) {
    for kind in [ElementKind::Activity, ElementKind::Resource, ElementKind::Data] {
        for id in model.ids_of_kind(kind) {
            match model.role_in(kind, &id) {
                Some(Role::Variant { parent, .. }) => {
                    let ok = parent != &id
                        && matches!(model.role_in(kind, parent), Some(Role::VariationPoint(_)));
                    if !ok {
                        c.push(
                            Rule::W2,
                            &[&id, parent],
                            format!("variant `{id}` has no {kind} variation point `{parent}`"),
                        );
                    }
                }
                Some(Role::VariationPoint(t)) => {
                    if !t.is_recognized() {
                        c.push(Rule::W4, &[&id], format!("unknown variation point type `{t}`"));
                    }
                    if model.variants_of(&id).is_empty() {
                        c.push(Rule::W3, &[&id], format!("variation point `{id}` has no variant"));
                    }
                }
                _ => {}
            }
        }
    }
}

fn check_resources(model: &ProcessModel, c: &mut Collector) {
    for r in model.resources.values() {
        if r.r_f.iter().any(|f| f.is_empty()) {
            c.push(Rule::W5, &[&r.id], "empty functionality label");
        }
        if r.r_f.is_empty() && !r.role.is_variation_point() {
            c.push(Rule::W5, &[&r.id], "resource offers no functionality");
        }
    }
    for a in model.activities.values() {
        let Some(rid) = &a.resource else { continue };
        if !model.resources.contains_key(rid) {
            c.push(Rule::W5, &[&a.id, rid], format!("assigned resource `{rid}` does not exist"));
            continue;
        }
        let offered = model.effective_functionalities(rid);
        let missing: Vec<&str> = a
            .req_f
            .iter()
            .filter(|f| !offered.contains(*f))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            c.push(
                Rule::W5,
                &[&a.id, rid],
                format!("`{rid}` does not cover {}", missing.join(", ")),
            );
        }
    }
}

fn check_vccs(model: &ProcessModel, c: &mut Collector) {
    for v in &model.vccs {
        if v.subject == v.object {
            c.push(Rule::W6, &[&v.subject], "constraint on itself");
        }
        for end in [&v.subject, &v.object] {
            if !model.is_variant(end) {
                c.push(
                    Rule::W6,
                    &[&v.subject, &v.object],
                    format!("constraint endpoint `{end}` is not a variant"),
                );
            }
        }
        if v.relation == Relation::Requires
            && model.vccs.iter().any(|o| {
                o.relation == Relation::Excludes && o.subject == v.subject && o.object == v.object
            })
        {
            c.push(
                Rule::W6,
                &[&v.subject, &v.object],
                "pair is constrained by both requires and excludes",
            );
        }
    }
}

fn check_data_refs(model: &ProcessModel, c: &mut Collector) {
    for a in model.activities.values() {
        for d in &a.data {
            if !model.data_objects.contains_key(d) {
                c.push(Rule::W7, &[&a.id, d], format!("data object `{d}` does not exist"));
            }
        }
    }
}

fn reach(model: &ProcessModel, from: &str, forward: bool) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([from.to_owned()]);
    let mut queue = VecDeque::from([from.to_owned()]);
    while let Some(n) = queue.pop_front() {
        for f in &model.flows {
            let (a, b) = if forward {
                (&f.source, &f.target)
            } else {
                (&f.target, &f.source)
            };
            if *a == n && seen.insert(b.clone()) {
                queue.push_back(b.clone());
            }
        }
    }
    seen
}

fn check_paths(model: &ProcessModel, c: &mut Collector) {
    if model.start == model.end {
        c.push(Rule::W9, &[&model.start], "start and end coincide");
        return;
    }
    if model.flows.iter().any(|f| f.target == model.start) {
        c.push(Rule::W9, &[&model.start], "start node has incoming flow");
    }
    if model.flows.iter().any(|f| f.source == model.end) {
        c.push(Rule::W9, &[&model.end], "end node has outgoing flow");
    }
    let from_start = reach(model, &model.start, true);
    let to_end = reach(model, &model.end, false);
    if !from_start.contains(&model.end) {
        c.push(Rule::W9, &[&model.start, &model.end], "end unreachable from start");
    }
    for a in model.activities.values().filter(|a| a.is_flow_eligible()) {
        if !(from_start.contains(&a.id) && to_end.contains(&a.id)) {
            c.push(Rule::W9, &[&a.id], format!("`{}` is not on a start→end path", a.id));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn base() -> ProcessModel {
        ProcessModel::new("m", 10)
            .with_activity(Activity::plain("A"))
            .with_activity(Activity {
                role: Role::VariationPoint(VpType::Alternative),
                ..Activity::plain("B")
            })
            .with_activity(Activity {
                role: Role::variant_of("B"),
                ..Activity::plain("B1")
            })
            .with_activity(Activity {
                role: Role::variant_of("B"),
                ..Activity::plain("B2")
            })
            .with_flow(SequenceFlow::new("start", "A"))
            .with_flow(SequenceFlow::new("A", "B"))
            .with_flow(SequenceFlow::new("B", "end"))
    }

    #[test]
    fn base_is_well_formed() {
        assert_eq!(validate_model(&base()).violations, vec![]);
    }

    #[test]
    fn vp_without_variants() {
        let mut m = base();
        m.activities.remove("B1");
        m.activities.remove("B2");
        assert_eq!(validate_model(&m).rules(), BTreeSet::from([Rule::W3]));
    }

    #[test]
    fn contradictory_vcc_pair() {
        let m = base()
            .with_vcc(Vcc::requires("B1", "B2"))
            .with_vcc(Vcc::excludes("B1", "B2"));
        assert_eq!(validate_model(&m).rules(), BTreeSet::from([Rule::W6]));
    }

    #[test]
    fn validation_is_pure() {
        let mut m = base();
        m.activities.get_mut("A").unwrap().resource = Some("nope".into());
        assert_eq!(validate_model(&m), validate_model(&m));
    }

    #[test]
    fn disconnected_activity_is_w9() {
        let m = base().with_activity(Activity::plain("Z"));
        let r = validate_model(&m);
        assert_eq!(r.rules(), BTreeSet::from([Rule::W9]));
        assert_eq!(r.violations[0].elements, vec!["Z".to_string()]);
    }
}
