//! Parameter payloads for pattern applications. These are what a designer
//! writes into a params file and what the trace records verbatim.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Functionality, Relation, VpType};

fn is_false(b: &bool) -> bool {
    !*b
}

/// Constraint attached to a newly inserted variant, which is the subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VccSpec {
    pub relation: Relation,
    pub object: String,
}

/// A variant of any kind. Only the kind-specific payload fields may be set:
/// `req_f`/`resource`/`data` for activities, `r_f` for resources,
/// `data_type` for data objects. `assign_to` lists activities that get the
/// new resource assigned or the new data object referenced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vsc: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub req_f: BTreeSet<Functionality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub data: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub r_f: BTreeSet<Functionality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_type: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vccs: Vec<VccSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assign_to: Vec<String>,
}

impl VariantSpec {
    pub fn new(id: impl Into<String>) -> Self {
        VariantSpec {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.id.clone())
    }
}

/// A resource or data object to insert or substitute in. With `vp_type` set
/// it is a variation point and `variants` must be non-empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vp_type: Option<VpType>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub r_f: BTreeSet<Functionality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_type: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assign_to: Vec<String>,
}

impl ElementSpec {
    pub fn new(id: impl Into<String>) -> Self {
        ElementSpec {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.id.clone())
    }
}

/// Insertion point: the existing flow `after → before` is split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub after: String,
    pub before: String,
}

/// Resource resolution for a new variation point activity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceChoice {
    /// Candidate resource to assign.
    pub resource: String,
    /// Variant resource added under the candidate when it is (or becomes) a
    /// variation point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantSpec>,
    /// Type used when a plain candidate is turned into a variation point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_type: Option<VpType>,
    /// Resource inserted and assigned when the candidate lacks coverage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<ElementSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpaiParams {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Turn the existing plain activity `id` into the variation point instead
    /// of inserting a new node.
    #[serde(default, skip_serializing_if = "is_false")]
    pub existing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
    pub vp_type: VpType,
    #[serde(default)]
    pub req_f: BTreeSet<Functionality>,
    pub variants: Vec<VariantSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<ElementSpec>,
}

/// What happens to an old variant during a variation point substitution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Disposition {
    Keep,
    Delete,
    Substitute(VariantSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substitute {
    /// A fresh variation point activity takes the old one's place.
    New {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// An existing plain activity is turned into the variation point and
    /// the old one is removed from the flow.
    Existing(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSubstitution {
    pub old: String,
    pub new: ElementSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dispositions: BTreeMap<String, Disposition>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cascade: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSubstitution {
    /// Resource assigned to the substitute; defaults to the old variation
    /// point's resource.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    /// Replacement for that resource.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replace: Option<ElementSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dispositions: BTreeMap<String, Disposition>,
    /// Variant resources added under the assigned resource.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_type: Option<VpType>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cascade: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpasParams {
    pub old_vp: String,
    pub substitute: Substitute,
    pub vp_type: VpType,
    #[serde(default)]
    pub req_f: BTreeSet<Functionality>,
    /// Designer overrides; variants not listed are kept when their required
    /// functionalities are a subset of `req_f`, deleted otherwise.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dispositions: BTreeMap<String, Disposition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub new_variants: Vec<VariantSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_substitution: Option<DataSubstitution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_insert: Option<ElementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceSubstitution>,
}

/// VAI / VRI / VDI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantInsertParams {
    pub vp: String,
    pub variant: VariantSpec,
    /// When `vp` names a plain element, turn it into a variation point of
    /// this type first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<VpType>,
}

/// VPRS / VPDS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpSubstituteParams {
    pub old: String,
    pub spec: ElementSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dispositions: BTreeMap<String, Disposition>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cascade: bool,
}

/// VAS / VRS / VDS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSubstituteParams {
    pub variant: String,
    pub spec: VariantSpec,
    /// Drop the old variant's outgoing constraints instead of carrying them
    /// over to the replacement.
    #[serde(default, skip_serializing_if = "is_false")]
    pub replace_vccs: bool,
}

/// VPAD / VPRD / VPDD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpDeleteParams {
    pub vp: String,
    /// Resources: clear assignments. Data: drop references. Activities:
    /// also remove resources and data objects left unreferenced.
    #[serde(default, skip_serializing_if = "is_false")]
    pub cascade: bool,
}

/// VAD / VRD / VDD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantDeleteParams {
    pub variant: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cascade: bool,
}
