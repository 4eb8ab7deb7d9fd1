//! Shared test support: seeded model generation, random pattern
//! invocations, an independent configuration counter and a DOT parser.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use cpmx_core::catalog::PatternId;
use cpmx_core::evolution::*;
use cpmx_core::model::{Activity, DataObject, ElementKind, Relation, Resource, Role, SequenceFlow, Vcc, VpType};
use cpmx_core::{load_model, validate_model, ProcessModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> ProcessModel {
    load_model(&std::fs::read(fixture_path(name)).unwrap()).unwrap()
}

pub fn fixture_json(name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(fixture_path(name)).unwrap()).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_plain: usize,
    pub max_vps: usize,
    pub max_variants: usize,
    pub vccs: bool,
    pub secondary: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_plain: 8,
            max_vps: 6,
            max_variants: 2,
            vccs: true,
            secondary: true,
        }
    }
}

const VP_TYPES: [VpType; 3] = [VpType::Optional, VpType::Alternative, VpType::OptionalAlternative];
const FUNCS: [&str; 3] = ["f1", "f2", "f3"];

fn vp_type(rng: &mut ChaCha8Rng) -> VpType {
    VP_TYPES.choose(rng).unwrap().clone()
}

/// A start→end chain of activities, some of them variation points with
/// off-flow variants. With `secondary`, a plain and a variable resource and
/// data object are added and referenced. The result is always well-formed.
pub fn gen_model(rng: &mut ChaCha8Rng, opt: GenOptions) -> ProcessModel {
    let n = rng.gen_range(1..=opt.max_plain);
    let mut m = ProcessModel::new("gen", 0);
    let mut prev = "start".to_string();
    let mut ids = Vec::new();
    for i in 0..n {
        let id = format!("a{i}");
        m = m.with_activity(Activity::plain(&id)).with_flow(SequenceFlow::new(&prev, &id));
        ids.push(id.clone());
        prev = id;
    }
    m = m.with_flow(SequenceFlow::new(prev, "end"));

    let vps = rng.gen_range(0..=opt.max_vps.min(n));
    let mut chosen = ids.clone();
    chosen.shuffle(rng);
    for vp in chosen.into_iter().take(vps) {
        m.activities.get_mut(&vp).unwrap().role = Role::VariationPoint(vp_type(rng));
        for j in 0..rng.gen_range(1..=opt.max_variants) {
            let mut v = Activity::plain(format!("{vp}v{j}"));
            v.role = Role::variant_of(&vp);
            m = m.with_activity(v);
        }
    }

    if opt.secondary {
        m = m.with_resource(Resource {
            id: "R0".into(),
            name: "R0".into(),
            role: Role::Plain,
            r_f: FUNCS.iter().map(|s| s.to_string()).collect(),
        });
        m = m.with_resource(Resource {
            id: "RV".into(),
            name: "RV".into(),
            role: Role::VariationPoint(vp_type(rng)),
            r_f: BTreeSet::new(),
        });
        for j in 0..rng.gen_range(1..=2) {
            m = m.with_resource(Resource {
                id: format!("RV{j}"),
                name: format!("RV{j}"),
                role: Role::variant_of("RV"),
                r_f: BTreeSet::from(["f1".to_string()]),
            });
        }
        m = m.with_data(DataObject {
            id: "D0".into(),
            name: "D0".into(),
            role: Role::Plain,
            data_type: "t".into(),
        });
        m = m.with_data(DataObject {
            id: "DV".into(),
            name: "DV".into(),
            role: Role::VariationPoint(vp_type(rng)),
            data_type: "t".into(),
        });
        for j in 0..rng.gen_range(1..=2) {
            m = m.with_data(DataObject {
                id: format!("DV{j}"),
                name: format!("DV{j}"),
                role: Role::variant_of("DV"),
                data_type: "t".into(),
            });
        }
        let acts: Vec<String> = m.activities.keys().cloned().collect();
        for a in acts {
            let act = m.activities.get_mut(&a).unwrap();
            if rng.gen_bool(0.3) {
                act.resource = Some("R0".into());
                act.req_f = FUNCS.iter().filter(|_| rng.gen_bool(0.5)).map(|s| s.to_string()).collect();
            }
            if rng.gen_bool(0.3) {
                act.data.insert(if rng.gen_bool(0.5) { "D0" } else { "DV" }.into());
            }
        }
    }

    if opt.vccs {
        let variants: Vec<(String, String)> = all_variants(&m);
        for _ in 0..rng.gen_range(0..=3) {
            if variants.len() < 2 {
                break;
            }
            let (s, sp) = variants.choose(rng).unwrap();
            let (o, op) = variants.choose(rng).unwrap();
            let constrained = m.vccs.iter().any(|c| {
                (&c.subject == s && &c.object == o) || (&c.subject == o && &c.object == s)
            });
            if sp != op && !constrained {
                let rel = if rng.gen_bool(0.5) { Relation::Requires } else { Relation::Excludes };
                m = m.with_vcc(Vcc {
                    subject: s.clone(),
                    relation: rel,
                    object: o.clone(),
                });
            }
        }
    }

    m.max_activities = m.activity_count() + rng.gen_range(0..=4);
    let report = validate_model(&m);
    assert!(report.is_well_formed(), "generator produced an invalid model: {report:?}");
    m
}

/// (variant, parent) pairs across all element kinds.
pub fn all_variants(m: &ProcessModel) -> Vec<(String, String)> {
    let roles = m
        .activities
        .values()
        .map(|a| (&a.id, &a.role))
        .chain(m.resources.values().map(|r| (&r.id, &r.role)))
        .chain(m.data_objects.values().map(|d| (&d.id, &d.role)));
    roles
        .filter_map(|(id, r)| r.parent().map(|p| (id.clone(), p.to_owned())))
        .collect()
}

/// Configuration count by brute force over every subset of variants,
/// independent of the engine's odometer enumeration.
pub fn brute_force_count(m: &ProcessModel) -> u64 {
    let variants = all_variants(m);
    let vps = m.variation_points();
    assert!(variants.len() <= 22, "too many variants for brute force");
    let mut count = 0;
    for mask in 0u64..(1 << variants.len()) {
        let chosen: BTreeSet<&str> = variants
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, (v, _))| v.as_str())
            .collect();
        let ok_types = vps.iter().all(|(vp, t)| {
            let n = variants.iter().filter(|(v, p)| p == vp && chosen.contains(v.as_str())).count();
            if t.allows_none() {
                n <= 1
            } else {
                n == 1
            }
        });
        let ok_vccs = m.vccs.iter().all(|c| match c.relation {
            Relation::Requires => !chosen.contains(c.subject.as_str()) || chosen.contains(c.object.as_str()),
            Relation::Excludes => !(chosen.contains(c.subject.as_str()) && chosen.contains(c.object.as_str())),
        });
        if ok_types && ok_vccs {
            count += 1;
        }
    }
    count
}

/// Closed-form count for VCC-free models: k per alternative VP, k+1 per
/// optional one.
pub fn closed_form_count(m: &ProcessModel) -> u64 {
    m.variation_points()
        .iter()
        .map(|(vp, t)| {
            let k = m.variants_of(vp).len() as u64;
            if t.allows_none() {
                k + 1
            } else {
                k
            }
        })
        .product()
}

/// Random parameter payloads for concrete patterns, drawing ids from the
/// model so that a good share of applications succeed.
pub struct Invoker {
    pub rng: ChaCha8Rng,
    fresh: usize,
}

impl Invoker {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Invoker { rng, fresh: 0 }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn pick(&mut self, ids: Vec<String>) -> String {
        ids.choose(&mut self.rng).cloned().unwrap_or_else(|| "missing".to_string())
    }

    fn of_role(m: &ProcessModel, kind: ElementKind, pred: impl Fn(&Role) -> bool) -> Vec<String> {
        m.ids_of_kind(kind)
            .into_iter()
            .filter(|id| pred(m.role_in(kind, id).unwrap()))
            .collect()
    }

    fn variant(&mut self, m: &ProcessModel, kind: ElementKind) -> VariantSpec {
        let mut v = VariantSpec::new(self.fresh("n"));
        match kind {
            ElementKind::Activity => {}
            ElementKind::Resource => v.r_f = BTreeSet::from(["f1".to_string()]),
            ElementKind::Data => v.data_type = Some("t".into()),
        }
        if self.rng.gen_bool(0.2) {
            let others = all_variants(m).into_iter().map(|(v, _)| v).collect();
            let object = self.pick(others);
            let relation = if self.rng.gen_bool(0.5) { Relation::Requires } else { Relation::Excludes };
            v.vccs.push(VccSpec { relation, object });
        }
        v
    }

    fn element(&mut self, m: &ProcessModel, kind: ElementKind) -> ElementSpec {
        let mut e = ElementSpec::new(self.fresh("e"));
        match kind {
            ElementKind::Resource => e.r_f = FUNCS.iter().map(|s| s.to_string()).collect(),
            ElementKind::Data => e.data_type = Some("t".into()),
            ElementKind::Activity => unreachable!("activities are not element specs"),
        }
        if self.rng.gen_bool(0.5) {
            e.vp_type = Some(vp_type(&mut self.rng));
            for _ in 0..self.rng.gen_range(1..=2) {
                e.variants.push(self.variant(m, kind));
            }
        }
        if self.rng.gen_bool(0.5) {
            let acts = m.ids_of_kind(ElementKind::Activity);
            e.assign_to.push(self.pick(acts));
        }
        e
    }

    /// A random concrete pattern and a payload for it.
    pub fn invocation(&mut self, m: &ProcessModel) -> (PatternId, Value) {
        let patterns: Vec<PatternId> = PatternId::concrete().collect();
        let p = *patterns.choose(&mut self.rng).unwrap();
        let kind = p.element_kind();
        let vps = Self::of_role(m, kind, Role::is_variation_point);
        let variants = Self::of_role(m, kind, |r| r.parent().is_some());
        let plains = Self::of_role(m, kind, Role::is_plain);
        let cascade = self.rng.gen_bool(0.5);
        let params = match p {
            PatternId::Vpai => {
                let existing = !plains.is_empty() && self.rng.gen_bool(0.3);
                let variants: Vec<VariantSpec> =
                    (0..self.rng.gen_range(1..=2)).map(|_| self.variant(m, ElementKind::Activity)).collect();
                let t = vp_type(&mut self.rng);
                if existing {
                    json!({ "id": self.pick(plains), "existing": true, "vp_type": t, "variants": variants })
                } else {
                    let flows: Vec<SequenceFlow> = m.flows.iter().cloned().collect();
                    let f = flows.choose(&mut self.rng).cloned().unwrap();
                    json!({
                        "id": self.fresh("n"),
                        "position": { "after": f.source, "before": f.target },
                        "vp_type": t,
                        "variants": variants,
                        "condition": self.rng.gen_bool(0.3).then_some("c"),
                    })
                }
            }
            PatternId::Vai | PatternId::Vri | PatternId::Vdi => {
                let transform = !plains.is_empty() && (vps.is_empty() || self.rng.gen_bool(0.3));
                let v = self.variant(m, kind);
                if transform {
                    json!({ "vp": self.pick(plains), "variant": v, "transform": vp_type(&mut self.rng) })
                } else {
                    json!({ "vp": self.pick(vps), "variant": v })
                }
            }
            PatternId::Vpas => {
                let old = self.pick(vps);
                let substitute = if !plains.is_empty() && self.rng.gen_bool(0.3) {
                    json!({ "existing": self.pick(plains) })
                } else {
                    json!({ "new": { "id": self.fresh("n") } })
                };
                let mut dispositions = serde_json::Map::new();
                for v in m.variants_of(&old) {
                    match self.rng.gen_range(0..3) {
                        0 => {
                            dispositions.insert(v, json!("delete"));
                        }
                        1 => {
                            dispositions.insert(v, json!("keep"));
                        }
                        _ => {}
                    }
                }
                json!({
                    "old_vp": old,
                    "substitute": substitute,
                    "vp_type": vp_type(&mut self.rng),
                    "req_f": FUNCS.iter().filter(|_| self.rng.gen_bool(0.5)).collect::<Vec<_>>(),
                    "dispositions": dispositions,
                    "new_variants": (0..self.rng.gen_range(0..=1)).map(|_| self.variant(m, ElementKind::Activity)).collect::<Vec<_>>(),
                })
            }
            PatternId::Vas | PatternId::Vrs | PatternId::Vds => {
                let old = self.pick(variants);
                let mut spec = self.variant(m, kind);
                if self.rng.gen_bool(0.3) {
                    spec.id = old.clone();
                }
                json!({ "variant": old, "spec": spec, "replace_vccs": self.rng.gen_bool(0.3) })
            }
            PatternId::Vpad | PatternId::Vprd | PatternId::Vpdd => json!({ "vp": self.pick(vps), "cascade": cascade }),
            PatternId::Vad | PatternId::Vrd | PatternId::Vdd => {
                json!({ "variant": self.pick(variants), "cascade": cascade })
            }
            PatternId::Vpri | PatternId::Vpdi => {
                let mut e = self.element(m, kind);
                if e.vp_type.is_none() {
                    e.vp_type = Some(vp_type(&mut self.rng));
                    e.variants.push(self.variant(m, kind));
                }
                serde_json::to_value(e).unwrap()
            }
            PatternId::Vprs | PatternId::Vpds => {
                let old = self.pick(vps);
                let mut spec = self.element(m, kind);
                if spec.vp_type.is_none() {
                    spec.vp_type = Some(vp_type(&mut self.rng));
                }
                json!({ "old": old, "spec": spec, "cascade": cascade })
            }
            _ => unreachable!("abstract patterns are never drawn"),
        };
        (p, params)
    }
}

/// Minimal DOT grammar check: graph header, statement list, node, edge,
/// attribute and assignment statements, attribute lists and subgraphs.
pub fn check_dot(text: &str) -> Result<(), String> {
    let toks = tokenize(text)?;
    let mut p = DotParser { toks, pos: 0, directed: false };
    p.graph()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing tokens at {}", p.pos));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Punct(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('\\') => {
                        s.push('\\');
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Id(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Punct("->"));
            i += 2;
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            out.push(Tok::Punct("--"));
            i += 2;
        } else if let Some(p) = ["{", "}", "[", "]", ";", ",", "=", ":"].iter().find(|p| p.starts_with(c)) {
            out.push(Tok::Punct(p));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            if i == start {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct DotParser {
    toks: Vec<Tok>,
    pos: usize,
    directed: bool,
}

impl DotParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(k))
    }

    fn expect(&mut self, p: &str) -> Result<(), String> {
        if self.is_punct(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{p}` at token {} ({:?})", self.pos, self.peek()))
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            t => Err(format!("expected identifier at token {}, got {t:?}", self.pos)),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.is_keyword("strict") {
            self.pos += 1;
        }
        match self.id()?.to_ascii_lowercase().as_str() {
            "digraph" => self.directed = true,
            "graph" => self.directed = false,
            other => return Err(format!("expected graph or digraph, got {other}")),
        }
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.block()
    }

    fn block(&mut self) -> Result<(), String> {
        self.expect("{")?;
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return Err("unterminated statement list".into());
            }
            self.stmt()?;
            if self.is_punct(";") {
                self.pos += 1;
            }
        }
        self.expect("}")
    }

    fn stmt(&mut self) -> Result<(), String> {
        if self.is_keyword("graph") || self.is_keyword("node") || self.is_keyword("edge") {
            self.pos += 1;
            return self.attr_lists(true);
        }
        self.operand()?;
        if self.is_punct("=") {
            self.pos += 1;
            self.id()?;
            return Ok(());
        }
        let mut edge = false;
        while self.is_punct("->") || self.is_punct("--") {
            let op = if self.is_punct("->") { "->" } else { "--" };
            if (op == "->") != self.directed {
                return Err(format!("edge operator {op} does not match graph type"));
            }
            self.pos += 1;
            self.operand()?;
            edge = true;
        }
        let _ = edge;
        self.attr_lists(false)
    }

    fn operand(&mut self) -> Result<(), String> {
        if self.is_keyword("subgraph") {
            self.pos += 1;
            if matches!(self.peek(), Some(Tok::Id(_))) {
                self.pos += 1;
            }
            return self.block();
        }
        if self.is_punct("{") {
            return self.block();
        }
        self.id()?;
        if self.is_punct(":") {
            self.pos += 1;
            self.id()?;
        }
        Ok(())
    }

    fn attr_lists(&mut self, required: bool) -> Result<(), String> {
        if required && !self.is_punct("[") {
            return Err("attribute statement without list".into());
        }
        while self.is_punct("[") {
            self.pos += 1;
            while !self.is_punct("]") {
                self.id()?;
                self.expect("=")?;
                self.id()?;
                if self.is_punct(",") || self.is_punct(";") {
                    self.pos += 1;
                }
            }
            self.expect("]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod selftest {
    #[test]
    fn dot_checker_accepts_and_rejects() {
        use super::check_dot;
        assert!(check_dot("digraph g { a -> b [label=\"x\"]; node [shape=box]; rankdir=LR; }").is_ok());
        assert!(check_dot("digraph g { a -- b }").is_err());
        assert!(check_dot("digraph g { a -> }").is_err());
        assert!(check_dot("digraph g { a [label=] }").is_err());
        assert!(check_dot("digraph g { \"unterminated }").is_err());
    }
}
