//! Primitive model edits, their inverses, and structural diffing.
//!
//! Edits carry full before/after payloads so every edit has an exact inverse
//! and application can refuse to run against a model that does not match.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Activity, DataObject, ElementKind, Functionality, ProcessModel, Resource, Role,
    SequenceFlow, Vcc,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot apply {edit}: {reason}")]
pub struct EditError {
    pub edit: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Activity(Activity),
    Resource(Resource),
    Data(DataObject),
}

impl Node {
    pub fn id(&self) -> &str {
        match self {
            Node::Activity(a) => &a.id,
            Node::Resource(r) => &r.id,
            Node::Data(d) => &d.id,
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            Node::Activity(_) => ElementKind::Activity,
            Node::Resource(_) => ElementKind::Resource,
            Node::Data(_) => ElementKind::Data,
        }
    }

    fn lookup(model: &ProcessModel, id: &str) -> Option<Node> {
        model
            .activities
            .get(id)
            .cloned()
            .map(Node::Activity)
            .or_else(|| model.resources.get(id).cloned().map(Node::Resource))
            .or_else(|| model.data_objects.get(id).cloned().map(Node::Data))
    }
}

/// A single settable attribute with its value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "attr", content = "value", rename_all = "snake_case")]
pub enum Attribute {
    ModelId(String),
    MaxActivities(usize),
    Start(String),
    End(String),
    Name(String),
    Role(Role),
    ReqF(BTreeSet<Functionality>),
    Resource(Option<String>),
    Data(BTreeSet<String>),
    RF(BTreeSet<Functionality>),
    DataType(String),
}

impl Attribute {
    fn same_slot(&self, other: &Attribute) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    fn is_model_level(&self) -> bool {
        matches!(
            self,
            Attribute::ModelId(_) | Attribute::MaxActivities(_) | Attribute::Start(_) | Attribute::End(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AddNode {
        node: Node,
    },
    RemoveNode {
        node: Node,
    },
    /// `element` is `None` for model-level attributes.
    SetAttribute {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        element: Option<String>,
        from: Attribute,
        to: Attribute,
    },
    AddFlow {
        flow: SequenceFlow,
    },
    RemoveFlow {
        flow: SequenceFlow,
    },
    AddConstraint {
        vcc: Vcc,
    },
    RemoveConstraint {
        vcc: Vcc,
    },
}

impl Edit {
    pub fn inverse(&self) -> Edit {
        match self.clone() {
            Edit::AddNode { node } => Edit::RemoveNode { node },
            Edit::RemoveNode { node } => Edit::AddNode { node },
            Edit::SetAttribute { element, from, to } => Edit::SetAttribute {
                element,
                from: to,
                to: from,
            },
            Edit::AddFlow { flow } => Edit::RemoveFlow { flow },
            Edit::RemoveFlow { flow } => Edit::AddFlow { flow },
            Edit::AddConstraint { vcc } => Edit::RemoveConstraint { vcc },
            Edit::RemoveConstraint { vcc } => Edit::AddConstraint { vcc },
        }
    }

    fn describe(&self) -> String {
        match self {
            Edit::AddNode { node } => format!("AddNode({})", node.id()),
            Edit::RemoveNode { node } => format!("RemoveNode({})", node.id()),
            Edit::SetAttribute { element, from, .. } => format!(
                "SetAttribute({}, {:?})",
                element.as_deref().unwrap_or("<model>"),
                std::mem::discriminant(from)
            ),
            Edit::AddFlow { flow } => format!("AddFlow({}, {})", flow.source, flow.target),
            Edit::RemoveFlow { flow } => format!("RemoveFlow({}, {})", flow.source, flow.target),
            Edit::AddConstraint { vcc } => {
                format!("AddConstraint({} {} {})", vcc.subject, vcc.relation, vcc.object)
            }
            Edit::RemoveConstraint { vcc } => {
                format!("RemoveConstraint({} {} {})", vcc.subject, vcc.relation, vcc.object)
            }
        }
    }

    fn fail(&self, reason: impl Into<String>) -> EditError {
        EditError {
            edit: self.describe(),
            reason: reason.into(),
        }
    }

    /// Applies the edit in place, refusing when the model does not match the
    /// edit's recorded "before" state.
    pub fn apply_to(&self, model: &mut ProcessModel) -> Result<(), EditError> {
        match self {
            Edit::AddNode { node } => {
                if model.id_in_use(node.id()) {
                    return Err(self.fail("id already in use"));
                }
                match node.clone() {
                    Node::Activity(a) => {
                        model.activities.insert(a.id.clone(), a);
                    }
                    Node::Resource(r) => {
                        model.resources.insert(r.id.clone(), r);
                    }
                    Node::Data(d) => {
                        model.data_objects.insert(d.id.clone(), d);
                    }
                }
            }
            Edit::RemoveNode { node } => {
                if Node::lookup(model, node.id()).as_ref() != Some(node) {
                    return Err(self.fail("node absent or different"));
                }
                match node.kind() {
                    ElementKind::Activity => {
                        model.activities.remove(node.id());
                    }
                    ElementKind::Resource => {
                        model.resources.remove(node.id());
                    }
                    ElementKind::Data => {
                        model.data_objects.remove(node.id());
                    }
                }
            }
            Edit::SetAttribute { element, from, to } => {
                if !from.same_slot(to) {
                    return Err(self.fail("from/to name different attributes"));
                }
                let slot = match element {
                    None => model_slot(model, from),
                    Some(id) => element_slot(model, id, from),
                }
                .ok_or_else(|| self.fail("no such attribute"))?;
                if slot.current != *from {
                    return Err(self.fail("current value differs"));
                }
                (slot.set)(model, to.clone());
            }
            Edit::AddFlow { flow } => {
                if model.flow(&flow.source, &flow.target).is_some() {
                    return Err(self.fail("flow already present"));
                }
                model.flows.insert(flow.clone());
            }
            Edit::RemoveFlow { flow } => {
                if !model.flows.remove(flow) {
                    return Err(self.fail("flow absent"));
                }
            }
            Edit::AddConstraint { vcc } => {
                if !model.vccs.insert(vcc.clone()) {
                    return Err(self.fail("constraint already present"));
                }
            }
            Edit::RemoveConstraint { vcc } => {
                if !model.vccs.remove(vcc) {
                    return Err(self.fail("constraint absent"));
                }
            }
        }
        Ok(())
    }
}

type Setter = Box<dyn FnOnce(&mut ProcessModel, Attribute)>;

struct Slot {
    current: Attribute,
    set: Setter,
}

fn model_slot(model: &ProcessModel, attr: &Attribute) -> Option<Slot> {
    let current = match attr {
        Attribute::ModelId(_) => Attribute::ModelId(model.id.clone()),
        Attribute::MaxActivities(_) => Attribute::MaxActivities(model.max_activities),
        Attribute::Start(_) => Attribute::Start(model.start.clone()),
        Attribute::End(_) => Attribute::End(model.end.clone()),
        _ => return None,
    };
    Some(Slot {
        current,
        set: Box::new(|m, v| match v {
            Attribute::ModelId(x) => m.id = x,
            Attribute::MaxActivities(x) => m.max_activities = x,
            Attribute::Start(x) => m.start = x,
            Attribute::End(x) => m.end = x,
            _ => unreachable!(),
        }),
    })
}

fn element_slot(model: &ProcessModel, id: &str, attr: &Attribute) -> Option<Slot> {
    if attr.is_model_level() {
        return None;
    }
    let owned = id.to_owned();
    if let Some(a) = model.activities.get(id) {
        let current = match attr {
            Attribute::Name(_) => Attribute::Name(a.name.clone()),
            Attribute::Role(_) => Attribute::Role(a.role.clone()),
            Attribute::ReqF(_) => Attribute::ReqF(a.req_f.clone()),
            Attribute::Resource(_) => Attribute::Resource(a.resource.clone()),
            Attribute::Data(_) => Attribute::Data(a.data.clone()),
            _ => return None,
        };
        return Some(Slot {
            current,
            set: Box::new(move |m, v| {
                let a = m.activities.get_mut(&owned).unwrap();
                match v {
                    Attribute::Name(x) => a.name = x,
                    Attribute::Role(x) => a.role = x,
                    Attribute::ReqF(x) => a.req_f = x,
                    Attribute::Resource(x) => a.resource = x,
                    Attribute::Data(x) => a.data = x,
                    _ => unreachable!(),
                }
            }),
        });
    }
    if let Some(r) = model.resources.get(id) {
        let current = match attr {
            Attribute::Name(_) => Attribute::Name(r.name.clone()),
            Attribute::Role(_) => Attribute::Role(r.role.clone()),
            Attribute::RF(_) => Attribute::RF(r.r_f.clone()),
            _ => return None,
        };
        return Some(Slot {
            current,
            set: Box::new(move |m, v| {
                let r = m.resources.get_mut(&owned).unwrap();
                match v {
                    Attribute::Name(x) => r.name = x,
                    Attribute::Role(x) => r.role = x,
                    Attribute::RF(x) => r.r_f = x,
                    _ => unreachable!(),
                }
            }),
        });
    }
    if let Some(d) = model.data_objects.get(id) {
        let current = match attr {
            Attribute::Name(_) => Attribute::Name(d.name.clone()),
            Attribute::Role(_) => Attribute::Role(d.role.clone()),
            Attribute::DataType(_) => Attribute::DataType(d.data_type.clone()),
            _ => return None,
        };
        return Some(Slot {
            current,
            set: Box::new(move |m, v| {
                let d = m.data_objects.get_mut(&owned).unwrap();
                match v {
                    Attribute::Name(x) => d.name = x,
                    Attribute::Role(x) => d.role = x,
                    Attribute::DataType(x) => d.data_type = x,
                    _ => unreachable!(),
                }
            }),
        });
    }
    None
}

pub fn apply_edits(model: &ProcessModel, edits: &[Edit]) -> Result<ProcessModel, EditError> {
    let mut out = model.clone();
    for e in edits {
        e.apply_to(&mut out)?;
    }
    Ok(out)
}

/// Inverse of a whole edit sequence: inverted edits in reverse order.
pub fn invert_edits(edits: &[Edit]) -> Vec<Edit> {
    edits.iter().rev().map(Edit::inverse).collect()
}

fn set(element: Option<&str>, from: Attribute, to: Attribute, out: &mut Vec<Edit>) {
    if from != to {
        out.push(Edit::SetAttribute {
            element: element.map(str::to_owned),
            from,
            to,
        });
    }
}

fn attribute_edits(before: &Node, after: &Node, out: &mut Vec<Edit>) {
    let id = Some(before.id());
    match (before, after) {
        (Node::Activity(a), Node::Activity(b)) => {
            set(id, Attribute::Name(a.name.clone()), Attribute::Name(b.name.clone()), out);
            set(id, Attribute::Role(a.role.clone()), Attribute::Role(b.role.clone()), out);
            set(id, Attribute::ReqF(a.req_f.clone()), Attribute::ReqF(b.req_f.clone()), out);
            set(
                id,
                Attribute::Resource(a.resource.clone()),
                Attribute::Resource(b.resource.clone()),
                out,
            );
            set(id, Attribute::Data(a.data.clone()), Attribute::Data(b.data.clone()), out);
        }
        (Node::Resource(a), Node::Resource(b)) => {
            set(id, Attribute::Name(a.name.clone()), Attribute::Name(b.name.clone()), out);
            set(id, Attribute::Role(a.role.clone()), Attribute::Role(b.role.clone()), out);
            set(id, Attribute::RF(a.r_f.clone()), Attribute::RF(b.r_f.clone()), out);
        }
        (Node::Data(a), Node::Data(b)) => {
            set(id, Attribute::Name(a.name.clone()), Attribute::Name(b.name.clone()), out);
            set(id, Attribute::Role(a.role.clone()), Attribute::Role(b.role.clone()), out);
            set(
                id,
                Attribute::DataType(a.data_type.clone()),
                Attribute::DataType(b.data_type.clone()),
                out,
            );
        }
        _ => unreachable!("callers pair nodes of the same kind"),
    }
}

fn all_nodes(model: &ProcessModel) -> Vec<Node> {
    model
        .activities
        .values()
        .cloned()
        .map(Node::Activity)
        .chain(model.resources.values().cloned().map(Node::Resource))
        .chain(model.data_objects.values().cloned().map(Node::Data))
        .collect()
}

/// Edits turning `from` into `to`. Removals come first so re-used ids never
/// clash, then attribute changes, then additions.
pub fn model_diff(from: &ProcessModel, to: &ProcessModel) -> Vec<Edit> {
    let mut removals = Vec::new();
    let mut changes = Vec::new();
    let mut additions = Vec::new();

    for v in from.vccs.difference(&to.vccs) {
        removals.push(Edit::RemoveConstraint { vcc: v.clone() });
    }
    for f in from.flows.difference(&to.flows) {
        removals.push(Edit::RemoveFlow { flow: f.clone() });
    }

    for node in all_nodes(from) {
        match Node::lookup(to, node.id()) {
            Some(other) if other.kind() == node.kind() => attribute_edits(&node, &other, &mut changes),
            _ => removals.push(Edit::RemoveNode { node }),
        }
    }
    for node in all_nodes(to) {
        match Node::lookup(from, node.id()) {
            Some(other) if other.kind() == node.kind() => {}
            _ => additions.push(Edit::AddNode { node }),
        }
    }

    set(None, Attribute::ModelId(from.id.clone()), Attribute::ModelId(to.id.clone()), &mut changes);
    set(
        None,
        Attribute::MaxActivities(from.max_activities),
        Attribute::MaxActivities(to.max_activities),
        &mut changes,
    );
    set(None, Attribute::Start(from.start.clone()), Attribute::Start(to.start.clone()), &mut changes);
    set(None, Attribute::End(from.end.clone()), Attribute::End(to.end.clone()), &mut changes);

    for f in to.flows.difference(&from.flows) {
        additions.push(Edit::AddFlow { flow: f.clone() });
    }
    for v in to.vccs.difference(&from.vccs) {
        additions.push(Edit::AddConstraint { vcc: v.clone() });
    }

    removals.extend(changes);
    removals.extend(additions);
    removals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::canonical_hash;
    use crate::model::*;

    fn m1() -> ProcessModel {
        ProcessModel::new("m", 5)
            .with_activity(Activity::plain("A"))
            .with_activity(Activity::plain("B"))
            .with_flow(SequenceFlow::new("start", "A"))
            .with_flow(SequenceFlow::new("B", "end"))
    }

    #[test]
    fn identical_models_have_empty_diff() {
        assert!(model_diff(&m1(), &m1()).is_empty());
    }

    #[test]
    fn single_added_flow() {
        let m2 = m1().with_flow(SequenceFlow::new("A", "B"));
        assert_eq!(
            model_diff(&m1(), &m2),
            vec![Edit::AddFlow {
                flow: SequenceFlow::new("A", "B")
            }]
        );
    }

    #[test]
    fn kind_change_is_remove_then_add() {
        let mut m2 = m1();
        m2.activities.remove("B");
        m2 = m2.with_resource(Resource {
            id: "B".into(),
            name: "B".into(),
            role: Role::Plain,
            r_f: ["f".to_string()].into(),
        });
        let edits = model_diff(&m1(), &m2);
        let out = apply_edits(&m1(), &edits).unwrap();
        assert_eq!(canonical_hash(&out), canonical_hash(&m2));
    }

    #[test]
    fn every_edit_has_an_inverse() {
        let mut m2 = m1().with_vcc(Vcc::excludes("A", "B"));
        m2.max_activities = 9;
        m2.activities.get_mut("A").unwrap().req_f.insert("x".into());
        let edits = model_diff(&m1(), &m2);
        let forward = apply_edits(&m1(), &edits).unwrap();
        for e in &edits {
            let mut m = m1();
            // each edit on its own round-trips wherever it applies
            if e.apply_to(&mut m).is_ok() {
                e.inverse().apply_to(&mut m).unwrap();
                assert_eq!(canonical_hash(&m), canonical_hash(&m1()));
            }
        }
        let back = apply_edits(&forward, &invert_edits(&edits)).unwrap();
        assert_eq!(back, m1());
    }

    #[test]
    fn stale_set_attribute_is_refused() {
        let e = Edit::SetAttribute {
            element: Some("A".into()),
            from: Attribute::Name("nope".into()),
            to: Attribute::Name("A2".into()),
        };
        assert!(apply_edits(&m1(), &[e]).is_err());
    }
}
