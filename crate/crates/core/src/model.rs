//! The configurable process model: a typed graph of activities, resources,
//! data objects and sequence flows, annotated with variability roles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque functionality label (`Req_f` on activities, `R_f` on resources).
pub type Functionality = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("element `{0}` not found")]
    ElementNotFound(String),
    #[error("element `{0}` is already variable")]
    AlreadyVariable(String),
}

/// Variation point type. Unknown labels survive parsing so the validator can
/// report them instead of the loader rejecting the whole document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum VpType {
    Optional,
    Alternative,
    OptionalAlternative,
    Unrecognized(String),
}

impl VpType {
    pub fn as_str(&self) -> &str {
        match self {
            VpType::Optional => "optional",
            VpType::Alternative => "alternative",
            VpType::OptionalAlternative => "optional-alternative",
            VpType::Unrecognized(s) => s,
        }
    }

    pub fn is_recognized(&self) -> bool {
        !matches!(self, VpType::Unrecognized(_))
    }

    /// Whether a configuration may leave this variation point unresolved.
    pub fn allows_none(&self) -> bool {
        matches!(self, VpType::Optional | VpType::OptionalAlternative)
    }
}

impl From<String> for VpType {
    fn from(s: String) -> Self {
        match s.as_str() {
            "optional" => VpType::Optional,
            "alternative" => VpType::Alternative,
            "optional-alternative" => VpType::OptionalAlternative,
            _ => VpType::Unrecognized(s),
        }
    }
}

impl From<VpType> for String {
    fn from(t: VpType) -> Self {
        t.as_str().to_owned()
    }
}

impl fmt::Display for VpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-element variability marker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RoleRepr", into = "RoleRepr")]
pub enum Role {
    Plain,
    VariationPoint(VpType),
    Variant {
        parent: String,
        vsc: Option<String>,
    },
}

impl Role {
    pub fn is_plain(&self) -> bool {
        matches!(self, Role::Plain)
    }

    pub fn is_variation_point(&self) -> bool {
        matches!(self, Role::VariationPoint(_))
    }

    pub fn vp_type(&self) -> Option<&VpType> {
        match self {
            Role::VariationPoint(t) => Some(t),
            _ => None,
        }
    }

    pub fn parent(&self) -> Option<&str> {
        match self {
            Role::Variant { parent, .. } => Some(parent),
            _ => None,
        }
    }

    pub fn variant_of(parent: impl Into<String>) -> Role {
        Role::Variant {
            parent: parent.into(),
            vsc: None,
        }
    }

    /// Diagram annotation carried by an element with this role.
    pub fn annotation(&self) -> Option<&'static str> {
        match self {
            Role::Plain => None,
            Role::VariationPoint(VpType::Optional | VpType::OptionalAlternative) => Some("«Null»"),
            Role::VariationPoint(_) => Some("«VarPoint»"),
            Role::Variant { .. } => Some("«Variant»"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RoleRepr {
    Plain(String),
    Vp {
        vp: VpType,
    },
    Variant {
        variant_of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vsc: Option<String>,
    },
}

impl TryFrom<RoleRepr> for Role {
    type Error = String;

    fn try_from(r: RoleRepr) -> Result<Self, Self::Error> {
        match r {
            RoleRepr::Plain(s) if s == "plain" => Ok(Role::Plain),
            RoleRepr::Plain(s) => Err(format!("unknown role `{s}`")),
            RoleRepr::Vp { vp } => Ok(Role::VariationPoint(vp)),
            RoleRepr::Variant { variant_of, vsc } => Ok(Role::Variant {
                parent: variant_of,
                vsc,
            }),
        }
    }
}

impl From<Role> for RoleRepr {
    fn from(r: Role) -> Self {
        match r {
            Role::Plain => RoleRepr::Plain("plain".into()),
            Role::VariationPoint(vp) => RoleRepr::Vp { vp },
            Role::Variant { parent, vsc } => RoleRepr::Variant {
                variant_of: parent,
                vsc,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub req_f: BTreeSet<Functionality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    #[serde(default)]
    pub data: BTreeSet<String>,
}

impl Activity {
    pub fn plain(id: impl Into<String>) -> Self {
        let id = id.into();
        Activity {
            name: id.clone(),
            id,
            role: Role::Plain,
            req_f: BTreeSet::new(),
            resource: None,
            data: BTreeSet::new(),
        }
    }

    pub fn annotation(&self) -> Option<&'static str> {
        self.role.annotation()
    }

    /// Plain and variation-point activities may sit on sequence flows;
    /// variants hang off their variation point.
    pub fn is_flow_eligible(&self) -> bool {
        !matches!(self.role, Role::Variant { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resource {
    pub id: String,
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub r_f: BTreeSet<Functionality>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataObject {
    pub id: String,
    pub name: String,
    pub role: Role,
    pub data_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFlow {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

impl SequenceFlow {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        SequenceFlow {
            source: source.into(),
            target: target.into(),
            condition: None,
        }
    }

    pub fn with_condition(mut self, condition: impl Into<String>) -> Self {
        self.condition = Some(condition.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Requires,
    Excludes,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Requires => "requires",
            Relation::Excludes => "excludes",
        })
    }
}

/// Variant configuration constraint: `subject requires|excludes object`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vcc {
    pub subject: String,
    pub relation: Relation,
    pub object: String,
}

impl Vcc {
    pub fn requires(subject: impl Into<String>, object: impl Into<String>) -> Self {
        Vcc {
            subject: subject.into(),
            relation: Relation::Requires,
            object: object.into(),
        }
    }

    pub fn excludes(subject: impl Into<String>, object: impl Into<String>) -> Self {
        Vcc {
            subject: subject.into(),
            relation: Relation::Excludes,
            object: object.into(),
        }
    }

    pub fn touches(&self, id: &str) -> bool {
        self.subject == id || self.object == id
    }
}

/// The three element collections an id may live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Activity,
    Resource,
    Data,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Activity => "activity",
            ElementKind::Resource => "resource",
            ElementKind::Data => "data",
        })
    }
}

/// Immutable-by-convention configurable process model. Operations take a
/// reference and return a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessModel {
    pub id: String,
    pub max_activities: usize,
    pub start: String,
    pub end: String,
    pub activities: BTreeMap<String, Activity>,
    pub resources: BTreeMap<String, Resource>,
    pub data_objects: BTreeMap<String, DataObject>,
    pub flows: BTreeSet<SequenceFlow>,
    pub vccs: BTreeSet<Vcc>,
}

impl ProcessModel {
    pub fn new(id: impl Into<String>, max_activities: usize) -> Self {
        ProcessModel {
            id: id.into(),
            max_activities,
            start: "start".into(),
            end: "end".into(),
            activities: BTreeMap::new(),
            resources: BTreeMap::new(),
            data_objects: BTreeMap::new(),
            flows: BTreeSet::new(),
            vccs: BTreeSet::new(),
        }
    }

    pub fn with_activity(mut self, a: Activity) -> Self {
        self.activities.insert(a.id.clone(), a);
        self
    }

    pub fn with_resource(mut self, r: Resource) -> Self {
        self.resources.insert(r.id.clone(), r);
        self
    }

    pub fn with_data(mut self, d: DataObject) -> Self {
        self.data_objects.insert(d.id.clone(), d);
        self
    }

    pub fn with_flow(mut self, f: SequenceFlow) -> Self {
        self.flows.insert(f);
        self
    }

    pub fn with_vcc(mut self, v: Vcc) -> Self {
        self.vccs.insert(v);
        self
    }

    /// C_nbr_A: every activity counts, variants included.
    pub fn activity_count(&self) -> usize {
        self.activities.len()
    }

    pub fn kind_of(&self, id: &str) -> Option<ElementKind> {
        if self.activities.contains_key(id) {
            Some(ElementKind::Activity)
        } else if self.resources.contains_key(id) {
            Some(ElementKind::Resource)
        } else if self.data_objects.contains_key(id) {
            Some(ElementKind::Data)
        } else {
            None
        }
    }

    /// True when `id` is already taken by an element or a start/end node.
    pub fn id_in_use(&self, id: &str) -> bool {
        id == self.start || id == self.end || self.kind_of(id).is_some()
    }

    pub fn role_of(&self, id: &str) -> Option<&Role> {
        self.activities
            .get(id)
            .map(|a| &a.role)
            .or_else(|| self.resources.get(id).map(|r| &r.role))
            .or_else(|| self.data_objects.get(id).map(|d| &d.role))
    }

    pub fn role_mut(&mut self, id: &str) -> Option<&mut Role> {
        if let Some(a) = self.activities.get_mut(id) {
            return Some(&mut a.role);
        }
        if let Some(r) = self.resources.get_mut(id) {
            return Some(&mut r.role);
        }
        self.data_objects.get_mut(id).map(|d| &mut d.role)
    }

    pub fn role_in(&self, kind: ElementKind, id: &str) -> Option<&Role> {
        match kind {
            ElementKind::Activity => self.activities.get(id).map(|a| &a.role),
            ElementKind::Resource => self.resources.get(id).map(|r| &r.role),
            ElementKind::Data => self.data_objects.get(id).map(|d| &d.role),
        }
    }

    pub fn is_variant(&self, id: &str) -> bool {
        matches!(self.role_of(id), Some(Role::Variant { .. }))
    }

    pub fn ids_of_kind(&self, kind: ElementKind) -> Vec<String> {
        match kind {
            ElementKind::Activity => self.activities.keys().cloned().collect(),
            ElementKind::Resource => self.resources.keys().cloned().collect(),
            ElementKind::Data => self.data_objects.keys().cloned().collect(),
        }
    }

    /// Variants attached to `vp_id` within the same element kind, sorted by id.
    pub fn variants_of(&self, vp_id: &str) -> Vec<String> {
        let Some(kind) = self.kind_of(vp_id) else {
            return Vec::new();
        };
        self.ids_of_kind(kind)
            .into_iter()
            .filter(|id| self.role_in(kind, id).and_then(Role::parent) == Some(vp_id))
            .collect()
    }

    /// Every variation point across all kinds, sorted by id.
    pub fn variation_points(&self) -> Vec<(String, VpType)> {
        let mut out: Vec<(String, VpType)> = self
            .activities
            .values()
            .map(|a| (&a.id, &a.role))
            .chain(self.resources.values().map(|r| (&r.id, &r.role)))
            .chain(self.data_objects.values().map(|d| (&d.id, &d.role)))
            .filter_map(|(id, role)| role.vp_type().map(|t| (id.clone(), t.clone())))
            .collect();
        out.sort();
        out
    }

    /// Functionalities a resource can offer: its own plus, for a variation
    /// point, the union over its variants.
    pub fn effective_functionalities(&self, resource_id: &str) -> BTreeSet<Functionality> {
        let Some(r) = self.resources.get(resource_id) else {
            return BTreeSet::new();
        };
        let mut out = r.r_f.clone();
        if r.role.is_variation_point() {
            for v in self.variants_of(resource_id) {
                if let Some(vr) = self.resources.get(&v) {
                    out.extend(vr.r_f.iter().cloned());
                }
            }
        }
        out
    }

    pub fn flow(&self, source: &str, target: &str) -> Option<&SequenceFlow> {
        self.flows
            .iter()
            .find(|f| f.source == source && f.target == target)
    }

    pub fn incoming(&self, node: &str) -> Vec<SequenceFlow> {
        self.flows.iter().filter(|f| f.target == node).cloned().collect()
    }

    pub fn outgoing(&self, node: &str) -> Vec<SequenceFlow> {
        self.flows.iter().filter(|f| f.source == node).cloned().collect()
    }

    /// Activities whose resource assignment or data references point at `id`.
    pub fn referencing_activities(&self, id: &str) -> Vec<String> {
        self.activities
            .values()
            .filter(|a| a.resource.as_deref() == Some(id) || a.data.contains(id))
            .map(|a| a.id.clone())
            .collect()
    }

    /// Removes a node from the flow graph, connecting every predecessor to
    /// every successor. Bridged flows keep the incoming flow's condition.
    pub fn bridge_out(&mut self, node: &str) {
        let incoming = self.incoming(node);
        let outgoing = self.outgoing(node);
        self.flows.retain(|f| f.source != node && f.target != node);
        for inc in &incoming {
            for out in &outgoing {
                if inc.source == out.target || self.flow(&inc.source, &out.target).is_some() {
                    continue;
                }
                self.flows.insert(SequenceFlow {
                    source: inc.source.clone(),
                    target: out.target.clone(),
                    condition: inc.condition.clone(),
                });
            }
        }
    }

    /// Redirects every flow touching `old` to `new`.
    pub fn rewire(&mut self, old: &str, new: &str) {
        let flows = std::mem::take(&mut self.flows);
        self.flows = flows
            .into_iter()
            .map(|mut f| {
                if f.source == old {
                    f.source = new.to_owned();
                }
                if f.target == old {
                    f.target = new.to_owned();
                }
                f
            })
            .collect();
    }

    /// Points every resource assignment and data reference at `old` to `new`.
    pub fn repoint_references(&mut self, old: &str, new: &str) {
        for a in self.activities.values_mut() {
            if a.resource.as_deref() == Some(old) {
                a.resource = Some(new.to_owned());
            }
            if a.data.remove(old) {
                a.data.insert(new.to_owned());
            }
        }
    }

    pub fn remove_element(&mut self, id: &str) {
        self.activities.remove(id);
        self.resources.remove(id);
        self.data_objects.remove(id);
        self.vccs.retain(|v| !v.touches(id));
    }
}

/// Turns a plain element of any kind into a variation point. Leaves the
/// model temporarily without variants for that point; composite patterns add
/// them before committing.
pub fn transform_to_variation_point(
    model: &ProcessModel,
    element_id: &str,
    vp_type: VpType,
) -> Result<ProcessModel, ModelError> {
    let mut out = model.clone();
    let role = out
        .role_mut(element_id)
        .ok_or_else(|| ModelError::ElementNotFound(element_id.to_owned()))?;
    if !role.is_plain() {
        return Err(ModelError::AlreadyVariable(element_id.to_owned()));
    }
    *role = Role::VariationPoint(vp_type);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProcessModel {
        ProcessModel::new("m", 5)
            .with_activity(Activity::plain("A"))
            .with_activity(Activity::plain("C"))
            .with_flow(SequenceFlow::new("start", "A"))
            .with_flow(SequenceFlow::new("A", "C"))
            .with_flow(SequenceFlow::new("C", "end"))
    }

    #[test]
    fn annotation_follows_role() {
        let cases = [
            (Role::Plain, None),
            (Role::VariationPoint(VpType::Alternative), Some("«VarPoint»")),
            (Role::VariationPoint(VpType::Optional), Some("«Null»")),
            (Role::VariationPoint(VpType::OptionalAlternative), Some("«Null»")),
            (Role::variant_of("B"), Some("«Variant»")),
        ];
        for (role, expected) in cases {
            assert_eq!(role.annotation(), expected, "{role:?}");
        }
    }

    #[test]
    fn transform_plain_activity_to_optional_vp() {
        let m = transform_to_variation_point(&sample(), "C", VpType::Optional).unwrap();
        let c = &m.activities["C"];
        assert_eq!(c.role, Role::VariationPoint(VpType::Optional));
        assert_eq!(c.annotation(), Some("«Null»"));
        assert_eq!(m.flows, sample().flows);
    }

    #[test]
    fn transform_missing_element() {
        let err = transform_to_variation_point(&sample(), "Z", VpType::Optional).unwrap_err();
        assert_eq!(err, ModelError::ElementNotFound("Z".into()));
    }

    #[test]
    fn transform_twice_is_rejected() {
        let m = transform_to_variation_point(&sample(), "C", VpType::Optional).unwrap();
        let err = transform_to_variation_point(&m, "C", VpType::Optional).unwrap_err();
        assert_eq!(err, ModelError::AlreadyVariable("C".into()));
    }

    #[test]
    fn role_json_shapes() {
        assert_eq!(serde_json::to_string(&Role::Plain).unwrap(), "\"plain\"");
        assert_eq!(
            serde_json::to_string(&Role::VariationPoint(VpType::OptionalAlternative)).unwrap(),
            r#"{"vp":"optional-alternative"}"#
        );
        let v: Role = serde_json::from_str(r#"{"variant_of":"B","vsc":"x>1"}"#).unwrap();
        assert_eq!(
            v,
            Role::Variant {
                parent: "B".into(),
                vsc: Some("x>1".into())
            }
        );
        assert!(serde_json::from_str::<Role>("\"fancy\"").is_err());
        let odd: Role = serde_json::from_str(r#"{"vp":"sometimes"}"#).unwrap();
        assert_eq!(odd, Role::VariationPoint(VpType::Unrecognized("sometimes".into())));
    }

    #[test]
    fn bridge_keeps_incoming_condition() {
        let mut m = sample();
        m.flows = [
            SequenceFlow::new("start", "A").with_condition("c0"),
            SequenceFlow::new("A", "C"),
            SequenceFlow::new("C", "end"),
        ]
        .into_iter()
        .collect();
        m.bridge_out("A");
        assert!(m.flows.contains(&SequenceFlow::new("start", "C").with_condition("c0")));
        assert_eq!(m.flows.len(), 2);
    }
}
