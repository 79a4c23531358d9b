//! Independent reference computations used by the integration tests. They
//! work on explicit node and edge sets instead of the bit-mask shapes of the
//! library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use advtop_core::model::{GraphWord, PrefixPoint, ValidatedAdversary, Value};
use rand::Rng;

/// A view as plain sets: nodes `(process, time)`, edges
/// `(source process, source time, target process)`, and known inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainView {
    pub nodes: BTreeSet<(u32, usize)>,
    pub edges: BTreeSet<(u32, usize, u32)>,
    pub inputs: BTreeMap<u32, i64>,
}

/// Round `s` (1-based) edges of a prefix, self-loops included.
fn round_edges(adv: &ValidatedAdversary, point: &PrefixPoint, s: usize) -> Vec<(u32, u32)> {
    let g = adv.graph(point.word.0[s - 1]);
    let n = adv.n() as u32;
    let mut out = Vec::new();
    for p in 1..=n {
        for q in 1..=n {
            if p == q || g.has_edge(advtop_core::ProcessId(p), advtop_core::ProcessId(q)) {
                out.push((p, q));
            }
        }
    }
    out
}

/// Backward closure from `{(p, s) : p in procs}` in the process-time graph.
pub fn plain_view(adv: &ValidatedAdversary, point: &PrefixPoint, procs: &[u32], s: usize) -> PlainView {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut queue: VecDeque<(u32, usize)> = procs.iter().map(|&p| (p, s)).collect();
    while let Some((q, t)) = queue.pop_front() {
        if !nodes.insert((q, t)) || t == 0 {
            continue;
        }
        for (from, to) in round_edges(adv, point, t) {
            if to == q {
                edges.insert((from, t - 1, q));
                queue.push_back((from, t - 1));
            }
        }
    }
    let inputs = nodes
        .iter()
        .filter(|(_, t)| *t == 0)
        .map(|&(p, _)| (p, point.inputs[p as usize - 1].0))
        .collect();
    PlainView { nodes, edges, inputs }
}

/// First time at which the views of `procs` differ, if any.
pub fn plain_distance(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint, procs: &[u32]) -> Option<usize> {
    (0..=a.depth()).find(|&s| plain_view(adv, a, procs, s) != plain_view(adv, b, procs, s))
}

/// Every admissible prefix of depth `t`, found by walking the automaton.
pub fn all_points(adv: &ValidatedAdversary, t: usize) -> Vec<PrefixPoint> {
    adv.enumerate_prefixes(t)
}

/// Components of the share-a-view relation by pairwise comparison and BFS.
pub fn plain_components(adv: &ValidatedAdversary, t: usize) -> Vec<BTreeSet<PrefixPoint>> {
    let points = all_points(adv, t);
    let n = adv.n() as u32;
    let views: Vec<Vec<PlainView>> = points
        .iter()
        .map(|pt| (1..=n).map(|p| plain_view(adv, pt, &[p], t)).collect())
        .collect();
    let mut seen = vec![false; points.len()];
    let mut out = Vec::new();
    for start in 0..points.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            comp.insert(points[i].clone());
            for j in 0..points.len() {
                if !seen[j] && (0..n as usize).any(|p| views[i][p] == views[j][p]) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// A uniformly random input vector with a random admissible word of length `t`.
pub fn random_point(adv: &ValidatedAdversary, rng: &mut impl Rng, t: usize) -> PrefixPoint {
    let inputs: Vec<Value> = (0..adv.n()).map(|_| adv.values()[rng.gen_range(0..adv.values().len())]).collect();
    let mut s = adv.initial_state();
    let mut word = GraphWord::default();
    for _ in 0..t {
        let options: Vec<_> = adv.enabled(s).collect();
        let (l, next) = options[rng.gen_range(0..options.len())];
        word.push(l);
        s = next;
    }
    PrefixPoint::new(inputs, word)
}

pub fn point(adv: &ValidatedAdversary, inputs: &[i64], word: &str) -> PrefixPoint {
    PrefixPoint::new(inputs.iter().copied().map(Value).collect(), adv.parse_word(word).unwrap())
}

/// Exact value `2^-k` as a float (fine for the small exponents used here).
pub fn dyadic(k: usize) -> f64 {
    0.5f64.powi(k as i32)
}
