use std::fmt::Write;

use crate::model::{Valence, ValidatedAdversary};
use crate::topology::partition::ComponentPartition;

const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd",
    "#ccebc5", "#ffed6f",
];

/// Component graph as undirected DOT: one node per prefix, an edge for each
/// pair sharing some process's view (labeled by those processes), nodes
/// filled by component and valent prefixes drawn as double circles.
pub fn components_dot(adv: &ValidatedAdversary, partition: &ComponentPartition) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph components {{");
    let _ = writeln!(out, "  label=\"depth {}\";", partition.depth());
    let _ = writeln!(out, "  node [style=filled, shape=ellipse];");
    for c in partition.components() {
        let _ = writeln!(out, "  subgraph cluster_{} {{", c.id);
        let _ = writeln!(out, "    label=\"component {}\";", c.id);
        for &i in &c.members {
            let point = partition.point(i);
            let shape = match point.valence() {
                Valence::Valent(_) => ", shape=doublecircle",
                Valence::Mixed => "",
            };
            let _ = writeln!(
                out,
                "    n{i} [label=\"{}\", fillcolor=\"{}\"{shape}];",
                adv.format_point(&point),
                PALETTE[c.id % PALETTE.len()]
            );
        }
        let _ = writeln!(out, "  }}");
    }
    for (a, b, ps) in partition.share_edges() {
        let label: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "  n{a} -- n{b} [label=\"{}\"];", label.join(","));
    }
    let _ = writeln!(out, "}}");
    out
}
