use std::fmt::Write;

use serde_json::{json, Value};

use crate::diagram::{Colour, Node, Term};
use crate::linalg::scalar_to_json;

#[derive(Clone)]
struct End {
    node: String,
    port: Option<usize>,
    colour: Colour,
}

struct Dot {
    nodes: Vec<String>,
    edges: Vec<String>,
    next: usize,
}

impl Dot {
    fn edge(&mut self, from: &End, to_node: &str, to_port: Option<usize>) {
        let tail = match from.port {
            Some(p) => format!("{}:o{p}", from.node),
            None => from.node.clone(),
        };
        let head = match to_port {
            Some(p) => format!("{to_node}:i{p}"),
            None => to_node.to_string(),
        };
        let style = match from.colour {
            Colour::B => "color=gray50, style=dashed",
            Colour::R => "color=black, penwidth=1.6",
        };
        self.edges.push(format!("  {tail} -> {head} [{style}];"));
    }

    fn wire(&mut self, t: &Term, inputs: Vec<End>) -> Vec<End> {
        match t.node() {
            Node::Id(_) => inputs,
            Node::Swap(..) => vec![inputs[1].clone(), inputs[0].clone()],
            Node::Seq(a, b) => {
                let mid = self.wire(a, inputs);
                self.wire(b, mid)
            }
            Node::Par(a, b) => {
                let k = a.dom().len();
                let mut left = inputs;
                let right = left.split_off(k);
                let mut out = self.wire(a, left);
                out.extend(self.wire(b, right));
                out
            }
            Node::Gen(g) => {
                let name = format!("g{}", self.next);
                self.next += 1;
                let label = match g.param() {
                    Some(p) => format!("{}({p})", g.kind().keyword()),
                    None => g.kind().keyword().to_string(),
                };
                let ins: String = (0..t.dom().len()).map(|i| format!("<i{i}>|")).collect();
                let outs: String = (0..t.cod().len()).map(|i| format!("|<o{i}>")).collect();
                self.nodes.push(format!(
                    "  {name} [shape=record, label=\"{{{{{}}}|{label}|{{{}}}}}\"];",
                    ins.trim_end_matches('|'),
                    outs.trim_start_matches('|')
                ));
                for (i, e) in inputs.iter().enumerate() {
                    self.edge(e, &name, Some(i));
                }
                t.cod()
                    .colours()
                    .iter()
                    .enumerate()
                    .map(|(i, &colour)| End { node: name.clone(), port: Some(i), colour })
                    .collect()
            }
        }
    }
}

/// Renders a term as a left-to-right Graphviz digraph. Boolean wires are
/// dashed grey, real wires solid black. Node ids follow a fixed traversal,
/// so the output is a pure function of the term.
pub fn export_dot(t: &Term) -> String {
    let mut dot = Dot { nodes: Vec::new(), edges: Vec::new(), next: 0 };
    let inputs: Vec<End> = t
        .dom()
        .colours()
        .iter()
        .enumerate()
        .map(|(i, &colour)| {
            let node = format!("in{i}");
            dot.nodes.push(format!("  {node} [shape=point, xlabel=\"{colour}\"];"));
            End { node, port: None, colour }
        })
        .collect();
    let outs = dot.wire(t, inputs);
    for (i, e) in outs.iter().enumerate() {
        let node = format!("out{i}");
        dot.nodes.push(format!("  {node} [shape=point, xlabel=\"{}\"];", e.colour));
        dot.edge(e, &node, None);
    }
    let mut s = String::from("digraph circuit {\n  rankdir=LR;\n");
    for n in &dot.nodes {
        let _ = writeln!(s, "{n}");
    }
    for e in &dot.edges {
        let _ = writeln!(s, "{e}");
    }
    s.push_str("}\n");
    s
}

/// JSON syntax tree with nodes `{kind, params, children, dom, cod}`.
pub fn to_json_ast(t: &Term) -> Value {
    let (kind, params): (String, Vec<Value>) = match t.node() {
        Node::Gen(g) => (g.kind().keyword().to_string(), g.param().map(scalar_to_json).into_iter().collect()),
        Node::Id(w) => ("id".into(), vec![json!(w.letters())]),
        Node::Swap(a, b) => ("swap".into(), vec![json!(a.to_string()), json!(b.to_string())]),
        Node::Seq(..) => ("seq".into(), Vec::new()),
        Node::Par(..) => ("par".into(), Vec::new()),
    };
    let children: Vec<Value> = t.children().into_iter().map(to_json_ast).collect();
    json!({
        "kind": kind,
        "params": params,
        "children": children,
        "dom": t.dom().letters(),
        "cod": t.cod().letters(),
    })
}
