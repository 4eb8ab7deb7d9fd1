//! Graphviz export of a configurable process model.

use std::fmt::Write;

use crate::model::{ProcessModel, Relation, Role};

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn label(id: &str, name: &str, role: &Role) -> String {
    let mut text = match role.annotation() {
        Some(a) => format!("{a}\\n{}", escape(name)),
        None => escape(name),
    };
    if name != id {
        write!(text, "\\n({})", escape(id)).unwrap();
    }
    text
}

/// Flows become solid edges, variants dashed edges from their variation
/// point, constraints dotted labeled edges, resources and data note nodes.
pub fn export_dot(model: &ProcessModel) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(&model.id)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  \"{}\" [shape=circle, label=\"start\"];", escape(&model.start)).unwrap();
    writeln!(out, "  \"{}\" [shape=doublecircle, label=\"end\"];", escape(&model.end)).unwrap();

    for a in model.activities.values() {
        let style = if a.role.is_plain() { "" } else { ", style=rounded" };
        writeln!(
            out,
            "  \"{}\" [shape=box{style}, label=\"{}\"];",
            escape(&a.id),
            label(&a.id, &a.name, &a.role)
        )
        .unwrap();
    }
    for r in model.resources.values() {
        writeln!(
            out,
            "  \"{}\" [shape=note, label=\"{}\"];",
            escape(&r.id),
            label(&r.id, &r.name, &r.role)
        )
        .unwrap();
    }
    for d in model.data_objects.values() {
        writeln!(
            out,
            "  \"{}\" [shape=folder, label=\"{}\\n: {}\"];",
            escape(&d.id),
            label(&d.id, &d.name, &d.role),
            escape(&d.data_type)
        )
        .unwrap();
    }

    for f in &model.flows {
        match &f.condition {
            Some(c) => writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(&f.source),
                escape(&f.target),
                escape(c)
            ),
            None => writeln!(out, "  \"{}\" -> \"{}\";", escape(&f.source), escape(&f.target)),
        }
        .unwrap();
    }

    let roles = model
        .activities
        .values()
        .map(|a| (&a.id, &a.role))
        .chain(model.resources.values().map(|r| (&r.id, &r.role)))
        .chain(model.data_objects.values().map(|d| (&d.id, &d.role)));
    for (id, role) in roles {
        if let Some(parent) = role.parent() {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [style=dashed, arrowhead=empty];",
                escape(parent),
                escape(id)
            )
            .unwrap();
        }
    }

    for a in model.activities.values() {
        for target in a.resource.iter().chain(a.data.iter()) {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [style=dotted, arrowhead=none, color=gray];",
                escape(&a.id),
                escape(target)
            )
            .unwrap();
        }
    }

    for v in &model.vccs {
        let color = match v.relation {
            Relation::Requires => "blue",
            Relation::Excludes => "red",
        };
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dotted, color={color}, label=\"{}\"];",
            escape(&v.subject),
            escape(&v.object),
            v.relation
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    #[test]
    fn empty_model_has_two_nodes_one_edge() {
        let m = ProcessModel::new("empty", 1).with_flow(SequenceFlow::new("start", "end"));
        let dot = export_dot(&m);
        let nodes = dot.lines().filter(|l| l.contains("[shape=")).count();
        let edges = dot.lines().filter(|l| l.contains("->")).count();
        assert_eq!((nodes, edges), (2, 1));
    }

    #[test]
    fn quotes_are_escaped() {
        let m = ProcessModel::new("q\"m", 1)
            .with_activity(Activity {
                name: "say \"hi\"".into(),
                ..Activity::plain("A")
            })
            .with_flow(SequenceFlow::new("start", "A"))
            .with_flow(SequenceFlow::new("A", "end"));
        let dot = export_dot(&m);
        assert!(dot.contains("digraph \"q\\\"m\""));
        assert!(dot.contains("say \\\"hi\\\""));
    }
}
