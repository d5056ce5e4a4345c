//! Graphviz export.
//!
//! Local edges are solid, synchronizations dashed and edges into the error
//! location dotted; the error location itself is the node `SAD`.

use std::fmt::Write;

use crate::model::{Action, Network};
use crate::regions::{GraphLabel, RegionGraph, System};

/// Name of the distinguished error node.
pub const SAD: &str = "SAD";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeStyle {
    Solid,
    Dashed,
    Dotted,
}

/// Minimal digraph builder.
#[derive(Clone, Debug, Default)]
pub struct DotGraph {
    pub name: String,
    nodes: Vec<(String, String, bool)>,
    edges: Vec<(String, String, String, EdgeStyle)>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n"))
}

impl DotGraph {
    pub fn new(name: &str) -> Self {
        DotGraph { name: name.to_string(), ..Default::default() }
    }

    /// Add a node; `initial` draws it with a double border.
    pub fn node(&mut self, id: &str, label: &str, initial: bool) {
        if !self.nodes.iter().any(|n| n.0 == id) {
            self.nodes.push((id.to_string(), label.to_string(), initial));
        }
    }

    pub fn edge(&mut self, src: &str, dst: &str, label: &str, style: EdgeStyle) {
        self.edges.push((src.to_string(), dst.to_string(), label.to_string(), style));
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph {} {{", quote(&self.name));
        let _ = writeln!(s, "  rankdir=LR;");
        for (id, label, initial) in &self.nodes {
            let mut attrs = format!("label={}", quote(label));
            if id == SAD {
                attrs.push_str(", shape=octagon, color=red");
            } else if *initial {
                attrs.push_str(", peripheries=2");
            }
            let _ = writeln!(s, "  {} [{}];", quote(id), attrs);
        }
        for (a, b, label, style) in &self.edges {
            let st = match style {
                EdgeStyle::Solid => "solid",
                EdgeStyle::Dashed => "dashed",
                EdgeStyle::Dotted => "dotted",
            };
            let _ = writeln!(s, "  {} -> {} [label={}, style={}];", quote(a), quote(b), quote(label), st);
        }
        s.push_str("}\n");
        s
    }
}

pub fn style_of(action: &Action, dst_is_sad: bool) -> EdgeStyle {
    if dst_is_sad {
        EdgeStyle::Dotted
    } else if action.is_sync() {
        EdgeStyle::Dashed
    } else {
        EdgeStyle::Solid
    }
}

/// One cluster-free digraph with every automaton's locations prefixed by its name.
pub fn network_to_dot(net: &Network) -> String {
    let mut g = DotGraph::new("network");
    for a in &net.automata {
        let id = |l: &str| if l == SAD { SAD.to_string() } else { format!("{}.{}", a.name, l) };
        for l in &a.locations {
            let label = if l.inv.is_true() { l.name.clone() } else { format!("{}\n{}", l.name, l.inv) };
            if l.name != SAD {
                g.node(&id(&l.name), &label, l.name == a.init);
            }
        }
        for e in &a.edges {
            let mut label = String::new();
            if !e.guard.is_true() {
                let _ = write!(label, "{}, ", e.guard);
            }
            let _ = write!(label, "{}", e.action);
            if !e.resets.is_empty() {
                let _ = write!(label, ", {{{}}}", e.resets.join(","));
            }
            for (t, src) in &e.copies {
                let _ = write!(label, ", {t}:={src}");
            }
            g.edge(&id(&e.src), &id(&e.dst), &label, style_of(&e.action, e.dst == SAD));
        }
        if a.locations.iter().any(|l| l.name == SAD) {
            g.node(SAD, SAD, false);
        }
    }
    g.render()
}

/// Region graph; nodes are labeled with location names and region descriptions.
pub fn region_graph_to_dot(sys: &System, g: &RegionGraph) -> String {
    let mut d = DotGraph::new("regions");
    for (i, st) in g.states.iter().enumerate() {
        let label = format!("{}\n{}", sys.loc_names(&st.locs).join(","), st.region.describe(&sys.space));
        d.node(&format!("s{i}"), &label, i == 0);
    }
    for (s, t, label) in &g.edges {
        let (text, style) = match label {
            GraphLabel::Delay => ("delay".to_string(), EdgeStyle::Solid),
            GraphLabel::Step { action, .. } => (action.to_string(), style_of(action, false)),
        };
        d.edge(&format!("s{s}"), &format!("s{t}"), &text, style);
    }
    d.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::regions::build_region_graph;

    #[test]
    fn single_location_automaton_is_one_node() {
        let net = parse("automaton A { init l; loc l; }").unwrap();
        let sys = crate::regions::automaton_alone(net.a1());
        let g = build_region_graph(&sys, 100).unwrap();
        // no clocks: exactly one region
        assert_eq!(g.states.len(), 1);
        let dot = region_graph_to_dot(&sys, &g);
        assert_eq!(dot.matches("label=").count() - dot.matches("->").count(), 1);
        let dot = network_to_dot(&net);
        assert_eq!(dot.matches(" [label=").count(), 1);
    }

    #[test]
    fn quotes_are_escaped() {
        let mut g = DotGraph::new("t");
        g.node("a\"b", "x", false);
        assert!(g.render().contains("\"a\\\"b\""));
    }
}
