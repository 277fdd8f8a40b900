//! Graphviz export for flows and mined patterns.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::flow::FlowSpec;
use crate::model::{Message, Pattern};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn node(m: &Message) -> String {
    quote(&m.canonical())
}

pub fn flow_to_dot(flow: &FlowSpec) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&flow.name)).unwrap();
    for (i, m) in flow.messages().iter().enumerate() {
        let mut attrs = vec![format!("xlabel={}", quote(&flow.ids()[i]))];
        if i == flow.start() {
            attrs.push("style=bold".to_string());
        }
        if flow.terminals().contains(&i) {
            attrs.push("peripheries=2".to_string());
        }
        writeln!(out, "  {} [{}];", node(m), attrs.join(", ")).unwrap();
    }
    for &(from, to) in flow.edges() {
        writeln!(out, "  {} -> {};", node(flow.message(from)), node(flow.message(to))).unwrap();
    }
    out.push_str("}\n");
    out
}

/// One node per distinct message; each pattern contributes its consecutive
/// edges, labelled with the pattern's position in `patterns`.
pub fn patterns_to_dot<'a>(patterns: impl IntoIterator<Item = &'a Pattern>) -> String {
    let patterns: Vec<&Pattern> = patterns.into_iter().collect();
    let nodes: BTreeSet<&Message> = patterns.iter().flat_map(|p| p.messages()).collect();
    let mut out = String::from("digraph patterns {\n");
    for m in nodes {
        writeln!(out, "  {};", node(m)).unwrap();
    }
    for (i, p) in patterns.iter().enumerate() {
        for w in p.messages().windows(2) {
            writeln!(
                out,
                "  {} -> {} [label=\"p{i}\", set=\"{}\"];",
                node(&w[0]),
                node(&w[1]),
                p.origin
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
