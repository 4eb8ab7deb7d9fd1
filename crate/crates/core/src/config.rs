//! Configurations: one decision per variation point, enumeration of all valid
//! ones, and derivation of plain process variants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ElementKind, ProcessModel, Relation, Role, VpType};

/// Default cap on the raw selection space explored by the enumerator.
pub const DEFAULT_ENUM_BOUND: u128 = 1_000_000;

/// Environment variable overriding `DEFAULT_ENUM_BOUND`.
pub const ENUM_BOUND_VAR: &str = "CPMX_ENUM_BOUND";

/// Variation point id to chosen variant. A missing entry means no choice.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    pub selection: BTreeMap<String, Option<String>>,
}

impl Configuration {
    pub fn chosen(&self, vp: &str) -> Option<&str> {
        self.selection.get(vp).and_then(|c| c.as_deref())
    }

    pub fn chosen_set(&self) -> BTreeSet<&str> {
        self.selection.values().filter_map(|c| c.as_deref()).collect()
    }

    /// Parses `vp=variant,vp2=variant2`. `vp=` or `vp=none` records an
    /// explicit empty choice.
    pub fn parse_selection(text: &str) -> Result<Configuration, String> {
        let mut selection = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (vp, v) = part
                .split_once('=')
                .ok_or_else(|| format!("`{part}` is not of the form vp=variant"))?;
            let (vp, v) = (vp.trim(), v.trim());
            if vp.is_empty() {
                return Err(format!("`{part}` names no variation point"));
            }
            let choice = (!v.is_empty() && v != "none").then(|| v.to_owned());
            if selection.insert(vp.to_owned(), choice).is_some() {
                return Err(format!("`{vp}` selected twice"));
            }
        }
        Ok(Configuration { selection })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionViolationKind {
    UnknownVariationPoint,
    ForeignVariant,
    AlternativeRequiresOne,
    UnrecognizedType,
    RequiresUnmet,
    ExcludesViolated,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectionViolation {
    pub kind: SelectionViolationKind,
    pub ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("selection space of {space} exceeds the bound {bound}")]
    SpaceTooLarge { space: u128, bound: u128 },
    #[error("invalid selection: {}", join_messages(.0))]
    InvalidSelection(Vec<SelectionViolation>),
}

fn join_messages(v: &[SelectionViolation]) -> String {
    v.iter().map(|x| x.message.as_str()).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            ConfigError::SpaceTooLarge { .. } => "SpaceTooLarge",
            ConfigError::InvalidSelection(_) => "InvalidSelection",
        }
    }

    pub fn ids(&self) -> Vec<String> {
        match self {
            ConfigError::SpaceTooLarge { .. } => Vec::new(),
            ConfigError::InvalidSelection(v) => {
                let ids: BTreeSet<String> = v.iter().flat_map(|v| v.ids.iter().cloned()).collect();
                ids.into_iter().collect()
            }
        }
    }
}

fn violation(kind: SelectionViolationKind, ids: &[&str], message: String) -> SelectionViolation {
    SelectionViolation {
        kind,
        ids: ids.iter().map(|s| s.to_string()).collect(),
        message,
    }
}

/// Lists every way `config` breaks the configuration rules of `model`.
pub fn check_selection(model: &ProcessModel, config: &Configuration) -> Vec<SelectionViolation> {
    use SelectionViolationKind::*;
    let vps: BTreeMap<String, VpType> = model.variation_points().into_iter().collect();
    let mut out = Vec::new();
    for (vp, choice) in &config.selection {
        if !vps.contains_key(vp) {
            out.push(violation(UnknownVariationPoint, &[vp], format!("`{vp}` is not a variation point")));
            continue;
        }
        if let Some(v) = choice {
            if model.role_of(v).and_then(Role::parent) != Some(vp.as_str()) {
                out.push(violation(ForeignVariant, &[vp, v], format!("`{v}` is not a variant of `{vp}`")));
            }
        }
    }
    for (vp, t) in &vps {
        match t {
            VpType::Alternative if config.chosen(vp).is_none() => out.push(violation(
                AlternativeRequiresOne,
                &[vp],
                format!("alternative requires exactly one variant for `{vp}`"),
            )),
            VpType::Unrecognized(s) => out.push(violation(
                UnrecognizedType,
                &[vp],
                format!("`{vp}` has unrecognized type `{s}`"),
            )),
            _ => {}
        }
    }
    let chosen = config.chosen_set();
    for c in &model.vccs {
        let (s, o) = (chosen.contains(c.subject.as_str()), chosen.contains(c.object.as_str()));
        match c.relation {
            Relation::Requires if s && !o => out.push(violation(
                RequiresUnmet,
                &[&c.subject, &c.object],
                format!("{} requires {}", c.subject, c.object),
            )),
            Relation::Excludes if s && o => out.push(violation(
                ExcludesViolated,
                &[&c.subject, &c.object],
                format!("{} excludes {}", c.subject, c.object),
            )),
            _ => {}
        }
    }
    out
}

/// The enumeration bound, honouring `CPMX_ENUM_BOUND` when it parses.
pub fn enum_bound() -> u128 {
    std::env::var(ENUM_BOUND_VAR)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_BOUND)
}

/// Options per variation point in enumeration order: `None` first, then
/// variants by id. Alternative points never offer `None`.
fn choice_space(model: &ProcessModel) -> Vec<(String, Vec<Option<String>>)> {
    model
        .variation_points()
        .into_iter()
        .map(|(vp, t)| {
            let mut opts: Vec<Option<String>> = Vec::new();
            if t.allows_none() {
                opts.push(None);
            }
            opts.extend(model.variants_of(&vp).into_iter().map(Some));
            (vp, opts)
        })
        .collect()
}

/// Size of the raw selection space before constraint filtering.
pub fn selection_space(model: &ProcessModel) -> u128 {
    choice_space(model)
        .iter()
        .fold(1u128, |acc, (_, o)| acc.saturating_mul(o.len() as u128))
}

fn for_each_valid(
    model: &ProcessModel,
    bound: u128,
    mut f: impl FnMut(&[(String, Vec<Option<String>>)], &[usize]),
) -> Result<(), ConfigError> {
    let space = choice_space(model);
    let size = selection_space(model);
    if size > bound {
        return Err(ConfigError::SpaceTooLarge { space: size, bound });
    }
    if space.iter().any(|(_, o)| o.is_empty()) {
        return Ok(());
    }
    let vccs: Vec<_> = model.vccs.iter().collect();
    let mut idx = vec![0usize; space.len()];
    loop {
        let chosen: BTreeSet<&str> = space
            .iter()
            .zip(&idx)
            .filter_map(|((_, o), &i)| o[i].as_deref())
            .collect();
        let ok = vccs.iter().all(|c| {
            let (s, o) = (chosen.contains(c.subject.as_str()), chosen.contains(c.object.as_str()));
            match c.relation {
                Relation::Requires => !s || o,
                Relation::Excludes => !(s && o),
            }
        });
        if ok {
            f(&space, &idx);
        }
        // odometer: last variation point varies fastest
        let mut pos = space.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < space[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// All valid configurations, ordered by variation point id then choice.
pub fn enumerate_configurations(model: &ProcessModel) -> Result<Vec<Configuration>, ConfigError> {
    enumerate_configurations_bounded(model, enum_bound())
}

pub fn enumerate_configurations_bounded(model: &ProcessModel, bound: u128) -> Result<Vec<Configuration>, ConfigError> {
    let mut out = Vec::new();
    for_each_valid(model, bound, |space, idx| {
        out.push(Configuration {
            selection: space
                .iter()
                .zip(idx)
                .map(|((vp, o), &i)| (vp.clone(), o[i].clone()))
                .collect(),
        });
    })?;
    Ok(out)
}

/// Number of valid configurations, without materializing them.
pub fn count_configurations(model: &ProcessModel) -> Result<u64, ConfigError> {
    let mut n = 0u64;
    for_each_valid(model, enum_bound(), |_, _| n += 1)?;
    Ok(n)
}

fn join_conditions(flow: Option<&str>, vsc: Option<&str>) -> Option<String> {
    match (flow, vsc) {
        (Some(f), Some(v)) if f != v => Some(format!("{f} and {v}")),
        (Some(f), _) => Some(f.to_owned()),
        (None, v) => v.map(str::to_owned),
    }
}

/// Flattens `model` under `config` into a variability-free model.
///
/// A chosen activity variant takes its variation point's place in the flow;
/// its selection condition is joined onto the incoming flow conditions and it
/// inherits the point's data references. A variation point left without a
/// choice is cut out and its neighbours bridged. References to resource and
/// data variation points move to the chosen variant (or are dropped); other
/// variants survive only where an activity still references them.
pub fn derive_variant(model: &ProcessModel, config: &Configuration) -> Result<ProcessModel, ConfigError> {
    let violations = check_selection(model, config);
    if !violations.is_empty() {
        return Err(ConfigError::InvalidSelection(violations));
    }
    let mut m = model.clone();
    let vps = model.variation_points();

    for (vp, _) in vps.iter().filter(|(id, _)| model.kind_of(id) == Some(ElementKind::Activity)) {
        let variants = model.variants_of(vp);
        match config.chosen(vp) {
            Some(c) => {
                let vsc = match &model.activities[c].role {
                    Role::Variant { vsc, .. } => vsc.clone(),
                    _ => None,
                };
                m.rewire(vp, c);
                for f in m.incoming(c) {
                    m.flows.remove(&f);
                    let condition = join_conditions(f.condition.as_deref(), vsc.as_deref());
                    m.flows.insert(crate::model::SequenceFlow { condition, ..f });
                }
                let inherited = model.activities[vp].data.clone();
                m.activities.get_mut(c).expect("chosen variant exists").data.extend(inherited);
            }
            None => m.bridge_out(vp),
        }
        m.activities.remove(vp);
        for v in variants.iter().filter(|v| Some(v.as_str()) != config.chosen(vp)) {
            m.activities.remove(v);
        }
    }

    for (vp, _) in vps.iter().filter(|(id, _)| model.kind_of(id) != Some(ElementKind::Activity)) {
        let chosen = config.chosen(vp);
        for a in m.activities.values_mut() {
            if a.resource.as_deref() == Some(vp.as_str()) {
                a.resource = chosen.map(str::to_owned);
            }
            if a.data.remove(vp.as_str()) {
                if let Some(c) = chosen {
                    a.data.insert(c.to_owned());
                }
            }
        }
        m.resources.remove(vp);
        m.data_objects.remove(vp);
        for v in model.variants_of(vp) {
            if Some(v.as_str()) != chosen && m.referencing_activities(&v).is_empty() {
                m.resources.remove(&v);
                m.data_objects.remove(&v);
            }
        }
    }

    for a in m.activities.values_mut() {
        a.role = Role::Plain;
    }
    for r in m.resources.values_mut() {
        r.role = Role::Plain;
    }
    for d in m.data_objects.values_mut() {
        d.role = Role::Plain;
    }
    m.vccs.clear();
    Ok(m)
}

/// True when no element carries a variability role and no constraint is left.
pub fn is_variability_free(model: &ProcessModel) -> bool {
    model.vccs.is_empty()
        && model.activities.values().all(|a| a.role.is_plain())
        && model.resources.values().all(|r| r.role.is_plain())
        && model.data_objects.values().all(|d| d.role.is_plain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, SequenceFlow, Vcc};

    fn vp(id: &str, t: VpType) -> Activity {
        Activity {
            role: Role::VariationPoint(t),
            ..Activity::plain(id)
        }
    }

    fn variant(id: &str, parent: &str, vsc: Option<&str>) -> Activity {
        Activity {
            role: Role::Variant {
                parent: parent.into(),
                vsc: vsc.map(String::from),
            },
            ..Activity::plain(id)
        }
    }

    fn two_points() -> ProcessModel {
        ProcessModel::new("m", 10)
            .with_activity(vp("B", VpType::Alternative))
            .with_activity(variant("B1", "B", Some("fast")))
            .with_activity(variant("B2", "B", None))
            .with_activity(vp("X", VpType::Optional))
            .with_activity(variant("X1", "X", None))
            .with_flow(SequenceFlow::new("start", "B").with_condition("c"))
            .with_flow(SequenceFlow::new("B", "X"))
            .with_flow(SequenceFlow::new("X", "end"))
    }

    #[test]
    fn enumeration_order_and_count() {
        let all = enumerate_configurations_bounded(&two_points(), 100).unwrap();
        let rendered: Vec<Vec<Option<String>>> =
            all.iter().map(|c| c.selection.values().cloned().collect()).collect();
        let s = |x: &str| Some(x.to_owned());
        assert_eq!(
            rendered,
            vec![
                vec![s("B1"), None],
                vec![s("B1"), s("X1")],
                vec![s("B2"), None],
                vec![s("B2"), s("X1")],
            ]
        );
    }

    #[test]
    fn vccs_filter_configurations() {
        let m = two_points().with_vcc(Vcc::excludes("B1", "X1")).with_vcc(Vcc::requires("B2", "X1"));
        let all = enumerate_configurations_bounded(&m, 100).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn bound_is_enforced() {
        let err = enumerate_configurations_bounded(&two_points(), 3).unwrap_err();
        assert_eq!(err, ConfigError::SpaceTooLarge { space: 4, bound: 3 });
    }

    #[test]
    fn selection_checks() {
        let m = two_points().with_vcc(Vcc::excludes("B1", "X1"));
        let c = Configuration::parse_selection("B=B1,X=X1").unwrap();
        let kinds: Vec<_> = check_selection(&m, &c).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![SelectionViolationKind::ExcludesViolated]);
        let c = Configuration::parse_selection("X=none").unwrap();
        let kinds: Vec<_> = check_selection(&m, &c).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![SelectionViolationKind::AlternativeRequiresOne]);
        let c = Configuration::parse_selection("B=X1,Q=Q1").unwrap();
        let kinds: Vec<_> = check_selection(&m, &c).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&SelectionViolationKind::ForeignVariant));
        assert!(kinds.contains(&SelectionViolationKind::UnknownVariationPoint));
    }

    #[test]
    fn derivation_replaces_and_bridges() {
        let c = Configuration::parse_selection("B=B1").unwrap();
        let d = derive_variant(&two_points(), &c).unwrap();
        assert!(is_variability_free(&d));
        let flows: Vec<_> = d.flows.iter().cloned().collect();
        assert_eq!(
            flows,
            vec![
                SequenceFlow::new("B1", "end"),
                SequenceFlow::new("start", "B1").with_condition("c and fast"),
            ]
        );
        assert_eq!(d.activities.keys().collect::<Vec<_>>(), vec!["B1"]);
    }

    #[test]
    fn invalid_selection_is_rejected() {
        let c = Configuration::default();
        assert_eq!(derive_variant(&two_points(), &c).unwrap_err().name(), "InvalidSelection");
    }

    #[test]
    fn selection_parsing() {
        assert!(Configuration::parse_selection("B").is_err());
        assert!(Configuration::parse_selection("B=B1,B=B2").is_err());
        assert_eq!(Configuration::parse_selection("").unwrap(), Configuration::default());
    }
}
