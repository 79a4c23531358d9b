//! Broadcastability of a component by a candidate process.
//!
//! The search runs over the product of the adversary automaton with the set
//! of processes that already know the broadcaster's input. That set only
//! grows, so the product is finite and every infinite path ends in a cycle
//! with a constant set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{full_mask, GraphWord, LabelId, PrefixPoint, ProcessId, StateId, ValidatedAdversary};
use crate::ptgraph::broadcast_masks;
use crate::topology::partition::ComponentPartition;

/// A finite description `stem · cycle^ω` of an infinite word, read from some
/// automaton state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LassoWitness {
    pub stem: GraphWord,
    pub cycle: GraphWord,
}

impl LassoWitness {
    /// Canonical form: shortest period, stem as short as rotation allows.
    pub fn normalized(mut self) -> LassoWitness {
        let len = self.cycle.len();
        if let Some(d) = (1..=len).find(|&d| len % d == 0 && (d..len).all(|i| self.cycle.0[i] == self.cycle.0[i - d])) {
            self.cycle.0.truncate(d);
        }
        while !self.stem.is_empty() && self.stem.0.last() == self.cycle.0.last() {
            self.stem.0.pop();
            self.cycle.0.rotate_right(1);
        }
        self
    }

    /// True when `stem · cycle^ω` is admissible from `start`.
    pub fn verify_from(&self, adv: &ValidatedAdversary, start: StateId) -> bool {
        if self.cycle.is_empty() {
            return false;
        }
        let Some(mut s) = adv.run_from(start, &self.stem) else {
            return false;
        };
        let mut seen = vec![false; adv.state_count()];
        // The automaton is deterministic: once a cycle boundary state repeats,
        // the rest of the word repeats too.
        while !seen[s as usize] {
            seen[s as usize] = true;
            match adv.run_from(s, &self.cycle) {
                Some(next) => s = next,
                None => return false,
            }
        }
        true
    }

    /// The first `len` letters of `stem · cycle^ω`.
    pub fn unroll(&self, len: usize) -> GraphWord {
        let mut out: Vec<LabelId> = self.stem.0.iter().copied().take(len).collect();
        while out.len() < len && !self.cycle.is_empty() {
            let need = len - out.len();
            out.extend(self.cycle.0.iter().copied().take(need));
        }
        GraphWord(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BroadcastStatus {
    /// Every member and every admissible extension of it has all processes
    /// holding `(p, 0, x_p)` by round `by_round`.
    Broadcastable { process: ProcessId, by_round: usize },
    /// `member · lasso` is admissible and `missing` never hears `process`.
    Refuted {
        process: ProcessId,
        member: PrefixPoint,
        lasso: LassoWitness,
        missing: ProcessId,
    },
    /// Some extension needs more rounds than the horizon allows.
    Unknown { process: ProcessId, horizon: usize, needed: usize },
}

impl BroadcastStatus {
    pub fn process(&self) -> ProcessId {
        match self {
            BroadcastStatus::Broadcastable { process, .. }
            | BroadcastStatus::Refuted { process, .. }
            | BroadcastStatus::Unknown { process, .. } => *process,
        }
    }

    pub fn by_round(&self) -> Option<usize> {
        match self {
            BroadcastStatus::Broadcastable { by_round, .. } => Some(*by_round),
            _ => None,
        }
    }
}

struct Frame {
    node: u32,
    edges: Vec<(LabelId, StateId)>,
    next: usize,
    via: Option<LabelId>,
    best: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Open,
    Done(usize),
}

/// Outcome of the product search from one start node: the worst number of
/// extra rounds until everyone has heard, or a lasso avoiding that forever.
enum Reach {
    Rounds(usize),
    Lasso(LassoWitness, u64),
}

struct Search<'a> {
    adv: &'a ValidatedAdversary,
    full: u64,
    index: HashMap<(StateId, u64), u32>,
    nodes: Vec<(StateId, u64)>,
    marks: Vec<Option<Mark>>,
}

impl<'a> Search<'a> {
    fn new(adv: &'a ValidatedAdversary) -> Self {
        Search {
            adv,
            full: full_mask(adv.n()),
            index: HashMap::new(),
            nodes: Vec::new(),
            marks: Vec::new(),
        }
    }

    fn intern(&mut self, key: (StateId, u64)) -> u32 {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.index.insert(key, id);
        self.nodes.push(key);
        self.marks.push(None);
        id
    }

    fn frame(&self, node: u32, via: Option<LabelId>) -> Frame {
        Frame {
            node,
            edges: self.adv.enabled(self.nodes[node as usize].0).collect(),
            next: 0,
            via,
            best: 0,
        }
    }

    /// Longest path from `(state, mask)` to a node with a full mask. Memoized
    /// across calls.
    fn reach(&mut self, state: StateId, mask: u64) -> Reach {
        if mask == self.full {
            return Reach::Rounds(0);
        }
        let root = self.intern((state, mask));
        if let Some(Mark::Done(d)) = self.marks[root as usize] {
            return Reach::Rounds(d);
        }
        self.marks[root as usize] = Some(Mark::Open);
        let mut stack = vec![self.frame(root, None)];
        while let Some(top) = stack.last_mut() {
            if top.next == top.edges.len() {
                let done = stack.pop().expect("non-empty");
                self.marks[done.node as usize] = Some(Mark::Done(done.best));
                if let Some(parent) = stack.last_mut() {
                    parent.best = parent.best.max(done.best + 1);
                } else {
                    return Reach::Rounds(done.best);
                }
                continue;
            }
            let (label, next_state) = top.edges[top.next];
            top.next += 1;
            let mask = self.nodes[top.node as usize].1;
            let next_mask = self.adv.graph(label).spread(mask);
            if next_mask == self.full {
                top.best = top.best.max(1);
                continue;
            }
            let child = self.intern((next_state, next_mask));
            match self.marks[child as usize] {
                Some(Mark::Done(d)) => {
                    let top = stack.last_mut().expect("non-empty");
                    top.best = top.best.max(d + 1);
                }
                Some(Mark::Open) => {
                    let pos = stack.iter().position(|f| f.node == child).expect("open node on stack");
                    let stem = stack[1..=pos].iter().filter_map(|f| f.via).collect();
                    let mut cycle: Vec<LabelId> = stack[pos + 1..].iter().filter_map(|f| f.via).collect();
                    cycle.push(label);
                    let lasso = LassoWitness {
                        stem: GraphWord(stem),
                        cycle: GraphWord(cycle),
                    };
                    // Leave the memo table consistent for later calls.
                    for f in &stack {
                        self.marks[f.node as usize] = None;
                    }
                    return Reach::Lasso(lasso.normalized(), next_mask);
                }
                None => {
                    self.marks[child as usize] = Some(Mark::Open);
                    let frame = self.frame(child, Some(label));
                    stack.push(frame);
                }
            }
        }
        unreachable!("loop returns when the root frame is popped")
    }
}

/// Checks whether `process` broadcasts within component `component` by round
/// `horizon` (at least the partition depth) in every admissible extension.
pub fn broadcast_check(
    adv: &ValidatedAdversary,
    partition: &ComponentPartition,
    component: usize,
    process: ProcessId,
    horizon: usize,
) -> BroadcastStatus {
    let t = partition.depth();
    let horizon = horizon.max(t);
    let space = partition.space();
    let mut search = Search::new(adv);
    let full = full_mask(adv.n());
    let mut needed = 0;
    for &i in &partition.component(component).members {
        let rounds: Vec<_> = space.word_of(i).0.iter().map(|&l| adv.graph(l)).collect();
        let masks = broadcast_masks(&rounds, process);
        let last = masks[t];
        if last == full {
            let first = masks.iter().position(|&m| m == full).expect("full at the end");
            needed = needed.max(first);
            continue;
        }
        match search.reach(space.end_state(i), last) {
            Reach::Rounds(d) => needed = needed.max(t + d),
            Reach::Lasso(lasso, mask) => {
                let missing = ProcessId::from_index((!mask).trailing_zeros() as usize);
                return BroadcastStatus::Refuted {
                    process,
                    member: partition.point(i),
                    lasso,
                    missing,
                };
            }
        }
    }
    if needed <= horizon {
        BroadcastStatus::Broadcastable {
            process,
            by_round: needed,
        }
    } else {
        BroadcastStatus::Unknown {
            process,
            horizon,
            needed,
        }
    }
}

/// Replays `member · lasso` for `extra` rounds past the member and returns
/// the processes that have heard `process` at the end.
pub fn heard_along(
    adv: &ValidatedAdversary,
    member: &PrefixPoint,
    lasso: &LassoWitness,
    process: ProcessId,
    extra: usize,
) -> u64 {
    let word = member.word.concat(&lasso.unroll(extra));
    let rounds: Vec<_> = word.0.iter().map(|&l| adv.graph(l)).collect();
    *broadcast_masks(&rounds, process).last().expect("at least time 0")
}
