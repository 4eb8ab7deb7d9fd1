//! Static catalog of evolution patterns described as P-SIGMA records, and
//! the refines/uses relation graph between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dot::escape;
use crate::model::ElementKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evolution {
    Insertion,
    Substitution,
    Deletion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Abstract,
    VariationPoint,
    Variant,
}

macro_rules! patterns {
    ($($variant:ident => $code:literal, $kind:ident, $evo:ident, $level:ident;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum PatternId {
            $($variant,)*
        }

        impl PatternId {
            pub const ALL: &'static [PatternId] = &[$(PatternId::$variant,)*];

            pub fn code(self) -> &'static str {
                match self {
                    $(PatternId::$variant => $code,)*
                }
            }

            pub fn element_kind(self) -> ElementKind {
                match self {
                    $(PatternId::$variant => ElementKind::$kind,)*
                }
            }

            pub fn evolution(self) -> Evolution {
                match self {
                    $(PatternId::$variant => Evolution::$evo,)*
                }
            }

            pub fn level(self) -> Level {
                match self {
                    $(PatternId::$variant => Level::$level,)*
                }
            }
        }
    };
}

patterns! {
    Ai => "AI", Activity, Insertion, Abstract;
    As => "AS", Activity, Substitution, Abstract;
    Ad => "AD", Activity, Deletion, Abstract;
    Ri => "RI", Resource, Insertion, Abstract;
    Rs => "RS", Resource, Substitution, Abstract;
    Rd => "RD", Resource, Deletion, Abstract;
    Di => "DI", Data, Insertion, Abstract;
    Ds => "DS", Data, Substitution, Abstract;
    Dd => "DD", Data, Deletion, Abstract;
    Vpai => "VPAI", Activity, Insertion, VariationPoint;
    Vai => "VAI", Activity, Insertion, Variant;
    Vpas => "VPAS", Activity, Substitution, VariationPoint;
    Vas => "VAS", Activity, Substitution, Variant;
    Vpad => "VPAD", Activity, Deletion, VariationPoint;
    Vad => "VAD", Activity, Deletion, Variant;
    Vpri => "VPRI", Resource, Insertion, VariationPoint;
    Vri => "VRI", Resource, Insertion, Variant;
    Vprs => "VPRS", Resource, Substitution, VariationPoint;
    Vrs => "VRS", Resource, Substitution, Variant;
    Vprd => "VPRD", Resource, Deletion, VariationPoint;
    Vrd => "VRD", Resource, Deletion, Variant;
    Vpdi => "VPDI", Data, Insertion, VariationPoint;
    Vdi => "VDI", Data, Insertion, Variant;
    Vpds => "VPDS", Data, Substitution, VariationPoint;
    Vds => "VDS", Data, Substitution, Variant;
    Vpdd => "VPDD", Data, Deletion, VariationPoint;
    Vdd => "VDD", Data, Deletion, Variant;
}

impl PatternId {
    pub fn is_abstract(self) -> bool {
        self.level() == Level::Abstract
    }

    pub fn concrete() -> impl Iterator<Item = PatternId> {
        PatternId::ALL.iter().copied().filter(|p| !p.is_abstract())
    }

    /// The abstract pattern of the same kind and evolution type.
    pub fn abstract_parent(self) -> Option<PatternId> {
        if self.is_abstract() {
            return None;
        }
        PatternId::ALL.iter().copied().find(|p| {
            p.is_abstract() && p.element_kind() == self.element_kind() && p.evolution() == self.evolution()
        })
    }

    /// The pattern for a given element kind, evolution type and level.
    pub fn of(kind: ElementKind, evolution: Evolution, level: Level) -> PatternId {
        *PatternId::ALL
            .iter()
            .find(|p| p.element_kind() == kind && p.level() == level && p.evolution() == evolution)
            .expect("catalog is complete")
    }

    fn sibling(self, level: Level, evolution: Evolution) -> PatternId {
        *PatternId::ALL
            .iter()
            .find(|p| {
                p.element_kind() == self.element_kind() && p.level() == level && p.evolution() == evolution
            })
            .expect("catalog is complete")
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pattern `{0}`")]
pub struct UnknownPattern(pub String);

impl FromStr for PatternId {
    type Err = UnknownPattern;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // the activity VP deletion pattern is also known by its short name
        if s.eq_ignore_ascii_case("VPD") {
            return Ok(PatternId::Vpad);
        }
        PatternId::ALL
            .iter()
            .copied()
            .find(|p| p.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownPattern(s.to_owned()))
    }
}

impl Serialize for PatternId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for PatternId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relations {
    pub refines: Option<PatternId>,
    pub uses: BTreeSet<PatternId>,
}

/// P-SIGMA interface and relations parts of a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDescriptor {
    pub identification: PatternId,
    pub name: String,
    pub element_kind: ElementKind,
    pub evolution: Evolution,
    pub level: Level,
    pub classification: Vec<String>,
    pub context: BTreeSet<PatternId>,
    pub problem: String,
    pub force: String,
    pub relations: Relations,
}

fn kind_word(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Activity => "Activity",
        ElementKind::Resource => "Resource",
        ElementKind::Data => "Data",
    }
}

fn evolution_word(e: Evolution) -> &'static str {
    match e {
        Evolution::Insertion => "Insertion",
        Evolution::Substitution => "Substitution",
        Evolution::Deletion => "Deletion",
    }
}

fn display_name(p: PatternId) -> String {
    let kind = kind_word(p.element_kind());
    let evo = evolution_word(p.evolution());
    match p.level() {
        Level::Abstract => format!("{kind} {evo}"),
        Level::VariationPoint => format!("Variation Point {kind} {evo}"),
        Level::Variant => format!("Variant {kind} {evo}"),
    }
}

fn abstract_of(kind: ElementKind, evolution: Evolution) -> PatternId {
    PatternId::ALL
        .iter()
        .copied()
        .find(|p| p.is_abstract() && p.element_kind() == kind && p.evolution() == evolution)
        .expect("catalog is complete")
}

/// Patterns a concrete pattern delegates to.
fn uses_of(p: PatternId) -> BTreeSet<PatternId> {
    use Evolution::*;
    use PatternId::*;
    match p {
        Vpai => [Vai, Di, Ri].into(),
        Vpas => [Ds, Rs, Vas, Vai, Vad].into(),
        _ if p.is_abstract() => BTreeSet::new(),
        _ => match (p.level(), p.evolution()) {
            (Level::VariationPoint, Insertion) => [p.sibling(Level::Variant, Insertion)].into(),
            (Level::VariationPoint, Substitution) => [
                p.sibling(Level::Variant, Substitution),
                p.sibling(Level::Variant, Insertion),
                p.sibling(Level::Variant, Deletion),
            ]
            .into(),
            (Level::VariationPoint, Deletion) => [p.sibling(Level::Variant, Deletion)].into(),
            _ => BTreeSet::new(),
        },
    }
}

fn context_of(p: PatternId) -> BTreeSet<PatternId> {
    use PatternId::*;
    match p {
        Vpai => [Vai, Di, Ri].into(),
        Vpas => [Ds, Rs, Vas, Vai, Vad].into(),
        _ if p.is_abstract() => PatternId::concrete()
            .filter(|c| c.abstract_parent() == Some(p))
            .collect(),
        _ => {
            let mut ctx = uses_of(p);
            // a variant pattern is used from its variation point counterparts
            if p.level() == Level::Variant {
                for evo in [Evolution::Insertion, Evolution::Substitution, Evolution::Deletion] {
                    let vp = p.sibling(Level::VariationPoint, evo);
                    if uses_of(vp).contains(&p) {
                        ctx.insert(vp);
                    }
                }
            }
            ctx
        }
    }
}

fn classification_of(p: PatternId) -> Vec<String> {
    let kind = kind_word(p.element_kind()).to_lowercase();
    let role = match p.level() {
        Level::Abstract => kind.clone(),
        Level::VariationPoint => format!("variation point {kind}"),
        Level::Variant => format!("variant {kind}"),
    };
    vec![
        role,
        evolution_word(p.evolution()).to_lowercase(),
        "configurable process model".to_owned(),
    ]
}

fn problem_of(p: PatternId) -> String {
    let kind = kind_word(p.element_kind()).to_lowercase();
    let what = match p.level() {
        Level::Abstract => format!("a {kind}"),
        Level::VariationPoint => format!("a {kind} acting as a variation point"),
        Level::Variant => format!("a variant {kind} of an existing variation point"),
    };
    match p.evolution() {
        Evolution::Insertion => format!("Add {what} to a configurable process model."),
        Evolution::Substitution => format!("Replace {what} in a configurable process model."),
        Evolution::Deletion => format!("Remove {what} from a configurable process model."),
    }
}

fn force_of(p: PatternId) -> String {
    match (p.level(), p.evolution()) {
        (Level::Abstract, _) => "Groups the specialised patterns of this evolution type.".into(),
        (Level::VariationPoint, Evolution::Insertion) => {
            "Checks capacity, position and at-least-one-variant before adding the variation point.".into()
        }
        (Level::VariationPoint, Evolution::Substitution) => {
            "Checks variant compatibility so no existing variant is orphaned.".into()
        }
        (Level::VariationPoint, Evolution::Deletion) => {
            "Removes the related variants and refuses when a surviving variant requires one.".into()
        }
        (Level::Variant, Evolution::Insertion) => {
            "Requires a variation point, or the transformation of a plain element into one.".into()
        }
        (Level::Variant, Evolution::Substitution) => {
            "Keeps configuration constraints attached to the replacement variant.".into()
        }
        (Level::Variant, Evolution::Deletion) => {
            "Refuses when another variant requires the one being removed.".into()
        }
    }
}

pub fn descriptor(p: PatternId) -> PatternDescriptor {
    PatternDescriptor {
        identification: p,
        name: display_name(p),
        element_kind: p.element_kind(),
        evolution: p.evolution(),
        level: p.level(),
        classification: classification_of(p),
        context: context_of(p),
        problem: problem_of(p),
        force: force_of(p),
        relations: Relations {
            refines: (!p.is_abstract()).then(|| abstract_of(p.element_kind(), p.evolution())),
            uses: uses_of(p),
        },
    }
}

/// The full catalog in stable order: abstract patterns, then activity,
/// resource and data patterns.
pub fn list_patterns() -> Vec<PatternDescriptor> {
    PatternId::ALL.iter().copied().map(descriptor).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Refines,
    Uses,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from: PatternId,
    pub to: PatternId,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationGraph {
    pub nodes: Vec<PatternId>,
    pub edges: Vec<RelationEdge>,
}

impl RelationGraph {
    pub fn has_edge(&self, from: PatternId, to: PatternId, kind: RelationKind) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to && e.kind == kind)
    }

    /// Kahn's algorithm over refines edges; `None` when a cycle exists.
    pub fn refines_topological_order(&self) -> Option<Vec<PatternId>> {
        let mut indegree: BTreeMap<PatternId, usize> = self.nodes.iter().map(|n| (*n, 0)).collect();
        let refines: Vec<&RelationEdge> = self
            .edges
            .iter()
            .filter(|e| e.kind == RelationKind::Refines)
            .collect();
        for e in &refines {
            *indegree.entry(e.to).or_default() += 1;
        }
        let mut ready: Vec<PatternId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::new();
        while let Some(n) = ready.pop() {
            order.push(n);
            for e in refines.iter().filter(|e| e.from == n) {
                let d = indegree.get_mut(&e.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(e.to);
                }
            }
        }
        (order.len() == indegree.len()).then_some(order)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph \"patterns\" {\n  rankdir=BT;\n");
        for n in &self.nodes {
            let shape = if n.is_abstract() { "ellipse" } else { "box" };
            out.push_str(&format!(
                "  \"{}\" [shape={shape}, label=\"{}\"];\n",
                n.code(),
                escape(&display_name(*n))
            ));
        }
        for e in &self.edges {
            let style = match e.kind {
                RelationKind::Refines => "solid",
                RelationKind::Uses => "dashed",
            };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [style={style}, label=\"{}\"];\n",
                e.from.code(),
                e.to.code(),
                match e.kind {
                    RelationKind::Refines => "refines",
                    RelationKind::Uses => "uses",
                }
            ));
        }
        out.push_str("}\n");
        out
    }
}

pub fn pattern_relations() -> RelationGraph {
    let catalog = list_patterns();
    let mut edges = Vec::new();
    for d in &catalog {
        if let Some(parent) = d.relations.refines {
            edges.push(RelationEdge {
                from: d.identification,
                to: parent,
                kind: RelationKind::Refines,
            });
        }
        for u in &d.relations.uses {
            edges.push(RelationEdge {
                from: d.identification,
                to: *u,
                kind: RelationKind::Uses,
            });
        }
    }
    edges.sort();
    RelationGraph {
        nodes: catalog.iter().map(|d| d.identification).collect(),
        edges,
    }
}
