//! One time step of a scheme written as a small computational graph.
//!
//! Nodes compute `LIN` (affine combination of their arguments), `RELU`,
//! `SQ(a) = a²/2`, `PROD`, `MAX`, `ABS` and `ID`; `INPUT` nodes carry the
//! stencil values. Argument order matters for `LIN` and is kept per node.

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Version of the JSON graph layout.
pub const GRAPH_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Input,
    Lin { weights: Vec<f64>, bias: f64 },
    Relu,
    Sq,
    Prod,
    Max,
    Abs,
    Id,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Input => "INPUT",
            NodeKind::Lin { .. } => "LIN",
            NodeKind::Relu => "RELU",
            NodeKind::Sq => "SQ",
            NodeKind::Prod => "PROD",
            NodeKind::Max => "MAX",
            NodeKind::Abs => "ABS",
            NodeKind::Id => "ID",
        }
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            NodeKind::Input => n == 0,
            NodeKind::Lin { weights, .. } => n >= 1 && weights.len() == n,
            NodeKind::Relu | NodeKind::Sq | NodeKind::Abs | NodeKind::Id => n == 1,
            NodeKind::Prod | NodeKind::Max => n == 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    #[serde(flatten)]
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Argument position at the target node.
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GraphFile {
    schema_version: u32,
    nodes: Vec<GraphNode>,
    edges: Vec<Edge>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

/// A validated, acyclic scheme graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeGraph {
    kinds: Vec<NodeKind>,
    args: Vec<Vec<usize>>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    order: Vec<usize>,
}

/// Incremental construction of a [`SchemeGraph`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    kinds: Vec<NodeKind>,
    args: Vec<Vec<usize>>,
    inputs: Vec<usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self) -> usize {
        let id = self.node(NodeKind::Input, &[]);
        self.inputs.push(id);
        id
    }

    pub fn node(&mut self, kind: NodeKind, args: &[usize]) -> usize {
        self.kinds.push(kind);
        self.args.push(args.to_vec());
        self.kinds.len() - 1
    }

    pub fn lin(&mut self, args: &[usize], weights: &[f64], bias: f64) -> usize {
        self.node(NodeKind::Lin { weights: weights.to_vec(), bias }, args)
    }

    pub fn unary(&mut self, kind: NodeKind, a: usize) -> usize {
        self.node(kind, &[a])
    }

    pub fn binary(&mut self, kind: NodeKind, a: usize, b: usize) -> usize {
        self.node(kind, &[a, b])
    }

    pub fn finish(self, outputs: &[usize]) -> Result<SchemeGraph> {
        SchemeGraph::new(self.kinds, self.args, self.inputs, outputs.to_vec())
    }
}

impl SchemeGraph {
    fn new(kinds: Vec<NodeKind>, args: Vec<Vec<usize>>, inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        let n = kinds.len();
        let bad = |msg: String| Err(Error::InvalidGraph(msg));
        for (id, (kind, a)) in kinds.iter().zip(&args).enumerate() {
            if !kind.arity_ok(a.len()) {
                return bad(format!("node {id} ({}) has {} arguments", kind.name(), a.len()));
            }
            if let Some(&s) = a.iter().find(|&&s| s >= n) {
                return bad(format!("node {id} refers to missing node {s}"));
            }
        }
        let declared: Vec<usize> = (0..n).filter(|&i| kinds[i] == NodeKind::Input).collect();
        let mut sorted_inputs = inputs.clone();
        sorted_inputs.sort_unstable();
        if sorted_inputs != declared || sorted_inputs.windows(2).any(|w| w[0] == w[1]) {
            return bad("input list does not match the INPUT nodes".into());
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= n) {
            return bad(format!("output {o} is not a node"));
        }

        let mut g = DiGraph::<(), ()>::with_capacity(n, args.iter().map(Vec::len).sum());
        let idx: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for (to, a) in args.iter().enumerate() {
            for &from in a {
                g.add_edge(idx[from], idx[to], ());
            }
        }
        let order = match toposort(&g, None) {
            Ok(o) => o.into_iter().map(|v| v.index()).collect(),
            Err(c) => return bad(format!("cycle through node {}", c.node_id().index())),
        };
        Ok(SchemeGraph { kinds, args, inputs, outputs, order })
    }

    pub fn n_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn kind(&self, id: usize) -> &NodeKind {
        &self.kinds[id]
    }

    pub fn count(&self, name: &str) -> usize {
        self.kinds.iter().filter(|k| k.name() == name).count()
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.args
            .iter()
            .enumerate()
            .flat_map(|(to, a)| a.iter().enumerate().map(move |(slot, &from)| Edge { from, to, slot }))
            .collect()
    }

    pub fn eval(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::InvalidArgument(format!(
                "graph takes {} inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let mut v = vec![0.0; self.n_nodes()];
        for (&id, &x) in self.inputs.iter().zip(inputs) {
            v[id] = x;
        }
        for &id in &self.order {
            let a = &self.args[id];
            v[id] = match &self.kinds[id] {
                NodeKind::Input => v[id],
                NodeKind::Lin { weights, bias } => weights.iter().zip(a).fold(*bias, |s, (w, &k)| s + w * v[k]),
                NodeKind::Relu => v[a[0]].max(0.0),
                NodeKind::Sq => 0.5 * v[a[0]] * v[a[0]],
                NodeKind::Prod => v[a[0]] * v[a[1]],
                NodeKind::Max => v[a[0]].max(v[a[1]]),
                NodeKind::Abs => v[a[0]].abs(),
                NodeKind::Id => v[a[0]],
            };
        }
        Ok(self.outputs.iter().map(|&o| v[o]).collect())
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph scheme {\n");
        for (id, k) in self.kinds.iter().enumerate() {
            let label = match k {
                NodeKind::Lin { weights, bias } => {
                    let w: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
                    format!("LIN [{}] + {bias}", w.join(", "))
                }
                NodeKind::Input => format!("INPUT {}", self.inputs.iter().position(|&i| i == id).unwrap_or(0)),
                other => other.name().to_string(),
            };
            let shape = if self.outputs.contains(&id) { ", shape=doublecircle" } else { "" };
            let _ = writeln!(s, "  n{id} [label=\"{label}\"{shape}];");
        }
        for e in self.edges() {
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, e.slot);
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GraphFile {
            schema_version: GRAPH_SCHEMA_VERSION,
            nodes: self.kinds.iter().enumerate().map(|(id, k)| GraphNode { id, kind: k.clone() }).collect(),
            edges: self.edges(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        if file.schema_version != GRAPH_SCHEMA_VERSION {
            return Err(Error::InvalidGraph(format!("unsupported schema version {}", file.schema_version)));
        }
        let n = file.nodes.len();
        if file.nodes.iter().enumerate().any(|(i, node)| node.id != i) {
            return Err(Error::InvalidGraph("node ids must be 0..n in order".into()));
        }
        let mut slots: Vec<Vec<Option<usize>>> = file
            .nodes
            .iter()
            .map(|_| Vec::new())
            .collect();
        for e in &file.edges {
            if e.to >= n || e.from >= n {
                return Err(Error::InvalidGraph(format!("edge {} -> {} leaves the graph", e.from, e.to)));
            }
            let s = &mut slots[e.to];
            if s.len() <= e.slot {
                s.resize(e.slot + 1, None);
            }
            if s[e.slot].replace(e.from).is_some() {
                return Err(Error::InvalidGraph(format!("node {} slot {} assigned twice", e.to, e.slot)));
            }
        }
        let args = slots
            .into_iter()
            .enumerate()
            .map(|(to, s)| {
                s.into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidGraph(format!("node {to} has a gap in its arguments")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.nodes.into_iter().map(|n| n.kind).collect(), args, file.inputs, file.outputs)
    }
}

/// Evaluates `g` on the given inputs.
pub fn eval_graph(g: &SchemeGraph, inputs: &[f64]) -> Result<Vec<f64>> {
    g.eval(inputs)
}

/// One Burgers update of cell `j` from `(U_{j-1}, U_j, U_{j+1})` with the
/// weighted Rusanov flux. `f(a)` is an `SQ` node and the local speeds are
/// `MAX(ABS, ABS)`; the face weights enter only through the output `LIN`.
pub fn build_rusanov_graph(w_left: f64, w_right: f64, dt_over_dx: f64) -> SchemeGraph {
    let mut b = GraphBuilder::new();
    let (um, u0, up) = (b.input(), b.input(), b.input());
    let fm = b.unary(NodeKind::Sq, um);
    let fp = b.unary(NodeKind::Sq, up);
    let (am, a0, ap) = (b.unary(NodeKind::Abs, um), b.unary(NodeKind::Abs, u0), b.unary(NodeKind::Abs, up));
    let s_left = b.binary(NodeKind::Max, am, a0);
    let s_right = b.binary(NodeKind::Max, a0, ap);
    let d_left = b.lin(&[u0, um], &[1.0, -1.0], 0.0);
    let d_right = b.lin(&[up, u0], &[1.0, -1.0], 0.0);
    let p_left = b.binary(NodeKind::Prod, s_left, d_left);
    let p_right = b.binary(NodeKind::Prod, s_right, d_right);
    let l = dt_over_dx;
    let out = b.lin(&[u0, fm, fp, p_left, p_right], &[1.0, 0.5 * l, -0.5 * l, -l * w_left, l * w_right], 0.0);
    b.finish(&[out]).expect("the Rusanov graph is well formed")
}

/// Replaces `ABS` and `MAX` nodes by `LIN`/`RELU` subgraphs:
/// `|a| = σ(a) + σ(-a)` and `max(a, b) = a + σ(b - a)`.
pub fn relu_expand(g: &SchemeGraph) -> SchemeGraph {
    let mut b = GraphBuilder::new();
    let mut map = vec![usize::MAX; g.n_nodes()];
    for &id in &g.inputs {
        map[id] = b.input();
    }
    for &id in &g.order {
        if g.kinds[id] == NodeKind::Input {
            continue;
        }
        let a: Vec<usize> = g.args[id].iter().map(|&k| map[k]).collect();
        map[id] = match &g.kinds[id] {
            NodeKind::Abs => {
                let pos = b.unary(NodeKind::Relu, a[0]);
                let neg_in = b.lin(&[a[0]], &[-1.0], 0.0);
                let neg = b.unary(NodeKind::Relu, neg_in);
                b.lin(&[pos, neg], &[1.0, 1.0], 0.0)
            }
            NodeKind::Max => {
                let diff = b.lin(&[a[0], a[1]], &[-1.0, 1.0], 0.0);
                let r = b.unary(NodeKind::Relu, diff);
                b.lin(&[a[0], r], &[1.0, 1.0], 0.0)
            }
            other => b.node(other.clone(), &a),
        };
    }
    let outputs: Vec<usize> = g.outputs.iter().map(|&o| map[o]).collect();
    b.finish(&outputs).expect("expansion preserves well-formedness")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

pub fn export_graph(g: &SchemeGraph, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Dot => Ok(g.to_dot()),
        ExportFormat::Json => g.to_json(),
    }
}
