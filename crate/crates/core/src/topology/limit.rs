//! Search for limit witnesses of impossibility.
//!
//! A witness is a chain of input vectors from a v-valent one to a w-valent
//! one. Adjacent vectors are joined by a [`ForeverLink`]: one infinite word
//! (a lasso) along which some process never hears from any process whose
//! input changed, so that process cannot tell the two executions apart at
//! any time and must decide the same in both.
//!
//! Links may use different lassos only when the adversary carries a
//! [`SiblingCertificate`], which shows that any two admissible words with the
//! same inputs are joined by such indistinguishability steps.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{
    mask_processes, valence_of, GraphWord, LabelId, ProcessId, StateId, ValidatedAdversary, Valence, Value,
};
use crate::topology::broadcast::LassoWitness;
use crate::topology::unionfind::UnionFind;

/// Two input vectors differing exactly on `changed`, run on the same infinite
/// word `lasso`; `process` never hears anyone in `changed`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeverLink {
    pub process: ProcessId,
    pub changed: Vec<ProcessId>,
    pub lasso: LassoWitness,
}

/// One edge of a spanning tree of a state's sibling graph: labels `g` and
/// `h` are enabled in `state` and `process` has the same in-neighbours in
/// both, with a silent continuation available afterwards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiblingEdge {
    pub state: StateId,
    pub g: LabelId,
    pub h: LabelId,
    pub process: ProcessId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiblingCertificate {
    pub edges: Vec<SiblingEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitWitness {
    pub tracks: Vec<Vec<Value>>,
    pub links: Vec<ForeverLink>,
    pub certificate: Option<SiblingCertificate>,
}

impl LimitWitness {
    /// Independent re-check of every claim in the witness.
    pub fn verify(&self, adv: &ValidatedAdversary) -> bool {
        if self.tracks.len() < 2 || self.links.len() + 1 != self.tracks.len() {
            return false;
        }
        if self.tracks.iter().any(|x| adv.check_inputs(x).is_err()) {
            return false;
        }
        let (first, last) = (valence_of(&self.tracks[0]), valence_of(&self.tracks[self.tracks.len() - 1]));
        match (first, last) {
            (Valence::Valent(v), Valence::Valent(w)) if v != w => {}
            _ => return false,
        }
        for (pair, link) in self.tracks.windows(2).zip(&self.links) {
            let diff: Vec<ProcessId> = adv.processes().filter(|p| pair[0][p.index()] != pair[1][p.index()]).collect();
            if diff != link.changed || !link.lasso.verify_from(adv, adv.initial_state()) {
                return false;
            }
            if !avoids(adv, &link.lasso, mask_of(&link.changed), link.process) {
                return false;
            }
        }
        let shared = self.links.windows(2).all(|w| w[0].lasso == w[1].lasso);
        shared || self.certificate.as_ref().is_some_and(|c| sibling_certificate(adv).as_ref() == Some(c))
    }
}

fn mask_of(ps: &[ProcessId]) -> u64 {
    ps.iter().fold(0, |m, p| m | p.bit())
}

/// Does `process` stay outside the spread of `changed` along the lasso, read
/// from the initial state?
pub fn avoids(adv: &ValidatedAdversary, lasso: &LassoWitness, changed: u64, process: ProcessId) -> bool {
    let mut s = adv.initial_state();
    let mut c = changed;
    if c & process.bit() != 0 {
        return false;
    }
    let step = |s: &mut StateId, c: &mut u64, l: LabelId| -> bool {
        match adv.step(*s, l) {
            Some(next) => {
                *s = next;
                *c = adv.graph(l).spread(*c);
                *c & process.bit() == 0
            }
            None => false,
        }
    };
    for &l in &lasso.stem.0 {
        if !step(&mut s, &mut c, l) {
            return false;
        }
    }
    if lasso.cycle.is_empty() {
        return false;
    }
    let mut seen = HashSet::new();
    while seen.insert((s, c)) {
        for &l in &lasso.cycle.0 {
            if !step(&mut s, &mut c, l) {
                return false;
            }
        }
    }
    true
}

/// First lasso (depth-first, alphabet order) from the initial state along
/// which `process` never hears from `changed`. Adds explored product nodes to
/// `work`.
pub fn forever_lasso(adv: &ValidatedAdversary, changed: u64, process: ProcessId, work: &mut usize) -> Option<LassoWitness> {
    if changed & process.bit() != 0 {
        return None;
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        Open,
        Closed,
    }
    let mut color: HashMap<(StateId, u64), Color> = HashMap::new();
    // (node, enabled edges, next edge, label used to get here)
    let root = (adv.initial_state(), changed);
    let mut stack: Vec<((StateId, u64), Vec<(LabelId, StateId)>, usize, Option<LabelId>)> =
        vec![(root, adv.enabled(root.0).collect(), 0, None)];
    color.insert(root, Color::Open);
    *work += 1;
    while let Some(top) = stack.last_mut() {
        if top.2 == top.1.len() {
            let (node, ..) = stack.pop().expect("non-empty");
            color.insert(node, Color::Closed);
            continue;
        }
        let (label, next) = top.1[top.2];
        top.2 += 1;
        let c = adv.graph(label).spread(top.0 .1);
        if c & process.bit() != 0 {
            continue;
        }
        let child = (next, c);
        match color.get(&child) {
            Some(Color::Closed) => {}
            Some(Color::Open) => {
                let pos = stack.iter().position(|f| f.0 == child).expect("open node on stack");
                let stem = stack[1..=pos].iter().filter_map(|f| f.3).collect();
                let mut cycle: Vec<LabelId> = stack[pos + 1..].iter().filter_map(|f| f.3).collect();
                cycle.push(label);
                return Some(
                    LassoWitness {
                        stem: GraphWord(stem),
                        cycle: GraphWord(cycle),
                    }
                    .normalized(),
                );
            }
            None => {
                color.insert(child, Color::Open);
                *work += 1;
                stack.push((child, adv.enabled(next).collect(), 0, Some(label)));
            }
        }
    }
    None
}

/// Checks that every reachable state's sibling graph is connected, where a
/// sibling edge needs a process with equal in-neighbours in both graphs that
/// can afterwards stay silent forever along both branches.
pub fn sibling_certificate(adv: &ValidatedAdversary) -> Option<SiblingCertificate> {
    let n = adv.n();
    let states = adv.state_count();
    // live[(q, s, s')]: from states s and s', both branches can keep q silent forever.
    let idx = |q: usize, s: usize, t: usize| (q * states + s) * states + t;
    let silent: Vec<Vec<Vec<StateId>>> = (0..states as StateId)
        .map(|s| {
            (0..n)
                .map(|q| {
                    adv.enabled(s)
                        .filter(|(l, _)| adv.graph(*l).silent_for(ProcessId::from_index(q)))
                        .map(|(_, t)| t)
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut live = vec![true; n * states * states];
    loop {
        let mut changed = false;
        for q in 0..n {
            for s in 0..states {
                for t in 0..states {
                    if !live[idx(q, s, t)] {
                        continue;
                    }
                    let ok = silent[s][q]
                        .iter()
                        .any(|&a| silent[t][q].iter().any(|&b| live[idx(q, a as usize, b as usize)]));
                    if !ok {
                        live[idx(q, s, t)] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut edges = Vec::new();
    for s in 0..states as StateId {
        let enabled: Vec<(LabelId, StateId)> = adv.enabled(s).collect();
        let mut uf = UnionFind::new(enabled.len());
        for (i, &(g, sg)) in enabled.iter().enumerate() {
            for (j, &(h, sh)) in enabled.iter().enumerate().skip(i + 1) {
                if uf.same(i, j) {
                    continue;
                }
                let witness = adv.processes().find(|&q| {
                    adv.graph(g).in_mask(q) == adv.graph(h).in_mask(q) && live[idx(q.index(), sg as usize, sh as usize)]
                });
                if let Some(q) = witness {
                    uf.union(i, j);
                    edges.push(SiblingEdge {
                        state: s,
                        g,
                        h,
                        process: q,
                    });
                }
            }
        }
        if enabled.len() > 1 && uf.labels().1 != 1 {
            return None;
        }
    }
    Some(SiblingCertificate { edges })
}

/// Searches for a chain of at most `k` input vectors from a v-valent to a
/// w-valent vector joined by forever links. `bound` caps the number of
/// explored search nodes (chain nodes plus lasso product nodes).
pub fn find_fair_unfair(adv: &ValidatedAdversary, k: usize, bound: usize) -> Option<LimitWitness> {
    if k < 2 {
        return None;
    }
    let n = adv.n();
    let full = crate::model::full_mask(n);
    let subsets: Vec<u64> = if n <= 10 {
        (1..full).collect()
    } else {
        (0..n).map(|i| 1u64 << i).collect()
    };
    let certificate = sibling_certificate(adv);
    let mut work = 0usize;
    let mut lasso_cache: HashMap<(u64, ProcessId), Option<LassoWitness>> = HashMap::new();

    for &v in adv.values() {
        let start = vec![v; n];
        // Node: (inputs, lasso used by the incoming link).
        type Node = (Vec<Value>, Option<LassoWitness>);
        let mut parent: HashMap<Node, Option<(Node, ForeverLink)>> = HashMap::new();
        let root: Node = (start.clone(), None);
        parent.insert(root.clone(), None);
        let mut queue = VecDeque::from([(root, 1usize)]);
        while let Some((node, len)) = queue.pop_front() {
            if len >= k {
                continue;
            }
            for &d in &subsets {
                for x in neighbours(adv, &node.0, d) {
                    for p in adv.processes().filter(|p| d & p.bit() == 0) {
                        let lasso = match &node.1 {
                            Some(l) if avoids(adv, l, d, p) => Some(l.clone()),
                            Some(_) if certificate.is_none() => None,
                            _ => lasso_cache
                                .entry((d, p))
                                .or_insert_with(|| forever_lasso(adv, d, p, &mut work))
                                .clone(),
                        };
                        let Some(lasso) = lasso else { continue };
                        let next: Node = (x.clone(), Some(lasso.clone()));
                        if parent.contains_key(&next) {
                            continue;
                        }
                        work += 1;
                        if work > bound {
                            return None;
                        }
                        let link = ForeverLink {
                            process: p,
                            changed: mask_processes(d).collect(),
                            lasso,
                        };
                        parent.insert(next.clone(), Some((node.clone(), link)));
                        if matches!(valence_of(&x), Valence::Valent(w) if w != v) {
                            return Some(rebuild(&parent, next, &certificate));
                        }
                        queue.push_back((next, len + 1));
                    }
                }
            }
        }
    }
    None
}

type Parents = HashMap<(Vec<Value>, Option<LassoWitness>), Option<((Vec<Value>, Option<LassoWitness>), ForeverLink)>>;

fn rebuild(parent: &Parents, end: (Vec<Value>, Option<LassoWitness>), certificate: &Option<SiblingCertificate>) -> LimitWitness {
    let mut tracks = vec![end.0.clone()];
    let mut links = Vec::new();
    let mut cur = end;
    while let Some(Some((prev, link))) = parent.get(&cur) {
        tracks.push(prev.0.clone());
        links.push(link.clone());
        cur = prev.clone();
    }
    tracks.reverse();
    links.reverse();
    let shared = links.windows(2).all(|w| w[0].lasso == w[1].lasso);
    LimitWitness {
        tracks,
        links,
        certificate: if shared { None } else { certificate.clone() },
    }
}

/// Input vectors that differ from `x` in exactly the positions of `d`.
fn neighbours(adv: &ValidatedAdversary, x: &[Value], d: u64) -> Vec<Vec<Value>> {
    let mut out = vec![x.to_vec()];
    for p in mask_processes(d) {
        out = out
            .into_iter()
            .flat_map(|y| {
                adv.values()
                    .iter()
                    .filter(|&&v| v != x[p.index()])
                    .map(move |&v| {
                        let mut z = y.clone();
                        z[p.index()] = v;
                        z
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}
