//! Process-time graphs and causal views.
//!
//! `PT^t` has a node `(p, s)` for every process and every `0 <= s <= t`;
//! layer-0 nodes carry the inputs, and `(p, s-1) -> (q, s)` is an edge iff
//! `(p, q)` is in the round-`s` graph. The causal view of a process set `P`
//! at time `s` is the predecessor-closed hull of `{(p, s) : p in P}`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{full_mask, mask_processes, CommGraph, PrefixPoint, ProcessId, ValidatedAdversary, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PtNode {
    pub process: ProcessId,
    pub time: usize,
}

impl fmt::Display for PtNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.process, self.time)
    }
}

/// Edge from layer `layer - 1` to layer `layer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PtEdge {
    pub from_layer: usize,
    pub from: ProcessId,
    pub to: ProcessId,
}

impl PtEdge {
    pub fn source(&self) -> PtNode {
        PtNode {
            process: self.from,
            time: self.from_layer,
        }
    }

    pub fn target(&self) -> PtNode {
        PtNode {
            process: self.to,
            time: self.from_layer + 1,
        }
    }
}

/// A process-time graph of some depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PTGraph {
    inputs: Vec<Value>,
    rounds: Vec<CommGraph>,
}

/// Builds `PT^t` for an admissible prefix point.
pub fn build_pt(adv: &ValidatedAdversary, point: &PrefixPoint) -> Result<PTGraph> {
    adv.check_point(point)?;
    Ok(PTGraph {
        inputs: point.inputs.clone(),
        rounds: point.word.0.iter().map(|&l| adv.graph(l).clone()).collect(),
    })
}

impl PTGraph {
    /// Builds a process-time graph from explicit round graphs.
    pub fn from_rounds(inputs: Vec<Value>, rounds: Vec<CommGraph>) -> Result<Self> {
        if let Some(g) = rounds.iter().find(|g| g.n() != inputs.len()) {
            return Err(Error::BadInputs(format!(
                "{} inputs for a graph on {} processes",
                inputs.len(),
                g.n()
            )));
        }
        Ok(PTGraph { inputs, rounds })
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn depth(&self) -> usize {
        self.rounds.len()
    }

    pub fn inputs(&self) -> &[Value] {
        &self.inputs
    }

    /// The graph of round `s` (1-based).
    pub fn round(&self, s: usize) -> &CommGraph {
        &self.rounds[s - 1]
    }

    pub fn nodes(&self) -> Vec<PtNode> {
        (0..=self.depth())
            .flat_map(|time| {
                (0..self.n()).map(move |i| PtNode {
                    process: ProcessId::from_index(i),
                    time,
                })
            })
            .collect()
    }

    pub fn edges(&self) -> Vec<PtEdge> {
        let mut out = Vec::new();
        for (i, g) in self.rounds.iter().enumerate() {
            for (from, to) in g.edges() {
                out.push(PtEdge {
                    from_layer: i,
                    from,
                    to,
                });
            }
        }
        out
    }

    pub fn to_dot(&self, highlight: Option<&CausalView>) -> String {
        ptgraph_dot(self, highlight)
    }
}

/// The causal past of a process set at some time, as a labeled sub-graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CausalView {
    time: usize,
    /// Node mask per layer `0..=time`.
    layers: Vec<u64>,
    /// Inputs of the layer-0 nodes, by process id.
    inputs: Vec<(ProcessId, Value)>,
    /// Every edge between view nodes, sorted.
    edges: Vec<PtEdge>,
}

/// Extracts `V_P(PT^s)`.
pub fn causal_view(pt: &PTGraph, processes: &[ProcessId], s: usize) -> Result<CausalView> {
    let mask = process_mask(pt.n(), processes)?;
    if s > pt.depth() {
        return Err(Error::DepthMismatch {
            left_n: pt.n(),
            right_n: pt.n(),
            left_depth: pt.depth(),
            right_depth: s,
        });
    }
    let rounds: Vec<&CommGraph> = pt.rounds[..s].iter().collect();
    let shape = ViewShape::compute(&rounds, mask);
    Ok(shape.with_inputs(&pt.inputs))
}

/// Validates a process set and turns it into a mask.
pub fn process_mask(n: usize, processes: &[ProcessId]) -> Result<u64> {
    if processes.is_empty() {
        return Err(Error::BadProcessSet("process set is empty".into()));
    }
    let mut mask = 0;
    for p in processes {
        if p.0 == 0 || p.0 as usize > n {
            return Err(Error::BadProcessSet(format!("process {p} outside 1..={n}")));
        }
        mask |= p.bit();
    }
    Ok(mask)
}

/// The layer-0 nodes of a view: which inputs it knows.
pub fn heard_set(view: &CausalView) -> Vec<(ProcessId, Value)> {
    view.inputs.clone()
}

impl CausalView {
    pub fn time(&self) -> usize {
        self.time
    }

    /// The processes whose view this is (the top-layer nodes).
    pub fn processes(&self) -> Vec<ProcessId> {
        mask_processes(self.layers[self.time]).collect()
    }

    pub fn layer_mask(&self, s: usize) -> u64 {
        self.layers[s]
    }

    pub fn nodes(&self) -> Vec<PtNode> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(time, &m)| mask_processes(m).map(move |process| PtNode { process, time }))
            .collect()
    }

    pub fn edges(&self) -> &[PtEdge] {
        &self.edges
    }

    pub fn contains(&self, node: PtNode) -> bool {
        self.layers.get(node.time).is_some_and(|m| m & node.process.bit() != 0)
    }

    /// Mask of the processes whose inputs are known.
    pub fn heard_mask(&self) -> u64 {
        self.layers[0]
    }

    /// The part of this view at or below layer `s`, as a sub-graph.
    pub fn restrict(&self, s: usize) -> CausalView {
        CausalView {
            time: s,
            layers: self.layers[..=s].to_vec(),
            inputs: self.inputs.clone(),
            edges: self.edges.iter().copied().filter(|e| e.from_layer < s).collect(),
        }
    }

    /// True when every node and edge of `self` is in `other`.
    pub fn is_subgraph_of(&self, other: &CausalView) -> bool {
        let nodes = self.layers.iter().enumerate().all(|(s, m)| {
            other.layers.get(s).is_some_and(|om| m & !om == 0)
        });
        nodes
            && self.inputs.iter().all(|i| other.inputs.contains(i))
            && self.edges.iter().all(|e| other.edges.binary_search(e).is_ok())
    }

    pub fn key(&self) -> ViewKey {
        view_key(self)
    }
}

/// Canonical byte encoding of a causal view.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewKey(pub Vec<u8>);

impl ViewKey {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(text: &str) -> Option<ViewKey> {
        hex::decode(text).ok().map(ViewKey)
    }
}

impl fmt::Display for ViewKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ViewKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ViewKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ViewKey::from_hex(&text).ok_or_else(|| serde::de::Error::custom("view key is not hex"))
    }
}

/// Encoding: LEB128 varints. `time`, node count, nodes sorted by
/// `(layer, id)` with the (zigzag) input appended to layer-0 nodes, edge
/// count, edges sorted by `(source layer, source id, target id)`.
pub fn view_key(view: &CausalView) -> ViewKey {
    let mut buf = Vec::with_capacity(16 + 4 * view.edges.len());
    let nodes: u32 = view.layers.iter().map(|m| m.count_ones()).sum();
    put_varint(&mut buf, view.time as u64);
    put_varint(&mut buf, nodes as u64);
    for (p, x) in &view.inputs {
        put_node(&mut buf, 0, *p);
        put_varint(&mut buf, zigzag(x.0));
    }
    for (s, &m) in view.layers.iter().enumerate().skip(1) {
        for p in mask_processes(m) {
            put_node(&mut buf, s, p);
        }
    }
    put_varint(&mut buf, view.edges.len() as u64);
    for e in &view.edges {
        put_varint(&mut buf, e.from_layer as u64);
        put_varint(&mut buf, e.from.0 as u64);
        put_varint(&mut buf, e.to.0 as u64);
    }
    ViewKey(buf)
}

fn put_node(buf: &mut Vec<u8>, layer: usize, p: ProcessId) {
    put_varint(buf, layer as u64);
    put_varint(buf, p.0 as u64);
}

fn put_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// The input-independent part of a causal view: which nodes and edges it
/// contains. Combined with an input vector it yields the full view.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ViewShape {
    time: usize,
    layers: Vec<u64>,
    edges: Vec<PtEdge>,
}

impl ViewShape {
    /// Shape of the view of `mask` after the given rounds.
    pub fn compute(rounds: &[&CommGraph], mask: u64) -> ViewShape {
        let time = rounds.len();
        let mut layers = vec![0u64; time + 1];
        layers[time] = mask;
        for s in (1..=time).rev() {
            layers[s - 1] = rounds[s - 1].predecessors(layers[s]);
        }
        let mut edges = Vec::new();
        for s in 1..=time {
            for q in mask_processes(layers[s]) {
                for p in mask_processes(rounds[s - 1].in_mask(q)) {
                    edges.push(PtEdge {
                        from_layer: s - 1,
                        from: p,
                        to: q,
                    });
                }
            }
        }
        edges.sort_unstable();
        ViewShape { time, layers, edges }
    }

    pub fn heard_mask(&self) -> u64 {
        self.layers[0]
    }

    /// The processes whose view this is.
    pub fn owners(&self) -> u64 {
        self.layers[self.time]
    }

    pub fn with_inputs(&self, inputs: &[Value]) -> CausalView {
        CausalView {
            time: self.time,
            layers: self.layers.clone(),
            inputs: mask_processes(self.layers[0]).map(|p| (p, inputs[p.index()])).collect(),
            edges: self.edges.clone(),
        }
    }

    /// Same bytes as `view_key(&self.with_inputs(inputs))`.
    pub fn key_with_inputs(&self, inputs: &[Value]) -> ViewKey {
        view_key(&self.with_inputs(inputs))
    }
}

/// Views of every single process at the end of a prefix, as shapes.
pub fn singleton_shapes(rounds: &[&CommGraph], n: usize) -> Vec<ViewShape> {
    (0..n).map(|i| ViewShape::compute(rounds, 1u64 << i)).collect()
}

/// Per-round heard masks for broadcaster `p`: `out[s]` is the set of
/// processes whose view at time `s` contains `(p, 0)`.
pub fn broadcast_masks(rounds: &[&CommGraph], p: ProcessId) -> Vec<u64> {
    let mut out = Vec::with_capacity(rounds.len() + 1);
    let mut mask = p.bit();
    out.push(mask);
    for g in rounds {
        mask = g.spread(mask);
        out.push(mask);
    }
    out
}

/// Whole-graph heard check: does everyone know `p`'s input after `rounds`?
pub fn everyone_heard(rounds: &[&CommGraph], n: usize, p: ProcessId) -> bool {
    broadcast_masks(rounds, p).last().copied() == Some(full_mask(n))
}

fn node_id(node: PtNode) -> String {
    format!("p{}_{}", node.process, node.time)
}

fn ptgraph_dot(pt: &PTGraph, highlight: Option<&CausalView>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph pt {{");
    let _ = writeln!(out, "  rankdir=BT;");
    let _ = writeln!(out, "  node [shape=circle];");
    for time in 0..=pt.depth() {
        let _ = writeln!(out, "  {{ rank=same;");
        for i in 0..pt.n() {
            let node = PtNode {
                process: ProcessId::from_index(i),
                time,
            };
            let label = if time == 0 {
                format!("({},0,{})", node.process, pt.inputs[i])
            } else {
                node.to_string()
            };
            let style = if highlight.is_some_and(|v| v.contains(node)) {
                ", color=\"#008000\", penwidth=3"
            } else {
                ""
            };
            let _ = writeln!(out, "    {} [label=\"{}\"{}];", node_id(node), label, style);
        }
        let _ = writeln!(out, "  }}");
    }
    for e in pt.edges() {
        let style = if highlight.is_some_and(|v| v.edges.binary_search(&e).is_ok()) {
            " [color=\"#008000\", penwidth=3]"
        } else {
            ""
        };
        let _ = writeln!(out, "  {} -> {}{};", node_id(e.source()), node_id(e.target()), style);
    }
    let _ = writeln!(out, "}}");
    out
}
