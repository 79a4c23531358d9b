//! Processes, values, communication graphs and finitely presented message
//! adversaries.
//!
//! An adversary is given as a deterministic safety automaton over a named
//! alphabet of communication graphs plus window-recurrence clauses ("some
//! graph of `S` occurs in every `W` consecutive rounds"). Validation folds
//! both into a single product automaton whose states are all reachable and
//! live, so that the admissible finite prefixes are exactly the prefixes of
//! admissible infinite sequences.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported process count; node sets are kept as `u64` masks.
pub const MAX_PROCESSES: usize = 64;

/// A process identifier in `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        ProcessId(i as u32 + 1)
    }

    pub fn bit(self) -> u64 {
        1u64 << self.index()
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An input (or output) value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub i64);

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Iterates the processes contained in a bit mask, in id order.
pub fn mask_processes(mask: u64) -> impl Iterator<Item = ProcessId> {
    (0..MAX_PROCESSES)
        .filter(move |i| mask >> i & 1 == 1)
        .map(ProcessId::from_index)
}

pub fn full_mask(n: usize) -> u64 {
    if n == MAX_PROCESSES {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A round communication graph: who hears whom. Self-loops are always present.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CommGraph {
    /// `in_masks[q]` holds every `p` with `(p, q)` an edge.
    in_masks: Vec<u64>,
}

impl CommGraph {
    /// Builds the graph from directed edges `(p, q)`, adding all self-loops.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (ProcessId, ProcessId)>) -> Result<Self> {
        if !(2..=MAX_PROCESSES).contains(&n) {
            return Err(Error::BadAlphabet(format!("process count {n} outside 2..={MAX_PROCESSES}")));
        }
        let mut in_masks: Vec<u64> = (0..n).map(|q| 1u64 << q).collect();
        for (p, q) in edges {
            for id in [p, q] {
                if id.0 == 0 || id.0 as usize > n {
                    return Err(Error::BadAlphabet(format!("process {id} outside 1..={n}")));
                }
            }
            in_masks[q.index()] |= p.bit();
        }
        Ok(CommGraph { in_masks })
    }

    pub fn n(&self) -> usize {
        self.in_masks.len()
    }

    pub fn in_mask(&self, q: ProcessId) -> u64 {
        self.in_masks[q.index()]
    }

    pub fn has_edge(&self, p: ProcessId, q: ProcessId) -> bool {
        self.in_mask(q) & p.bit() != 0
    }

    /// All edges in lexicographic order, self-loops included.
    pub fn edges(&self) -> Vec<(ProcessId, ProcessId)> {
        let n = self.n();
        let mut out = Vec::new();
        for p in (0..n).map(ProcessId::from_index) {
            for q in (0..n).map(ProcessId::from_index) {
                if self.has_edge(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// Processes that (transitively, within this one round) learn something
    /// from `mask`: every `q` with an in-neighbour in `mask`.
    pub fn spread(&self, mask: u64) -> u64 {
        self.in_masks
            .iter()
            .enumerate()
            .filter(|(_, m)| *m & mask != 0)
            .fold(0, |acc, (q, _)| acc | 1u64 << q)
    }

    /// Union of the in-neighbourhoods of every process in `mask`.
    pub fn predecessors(&self, mask: u64) -> u64 {
        mask_processes(mask).fold(0, |acc, q| acc | self.in_mask(q))
    }

    /// True when `p` hears nobody but itself.
    pub fn silent_for(&self, p: ProcessId) -> bool {
        self.in_mask(p) == p.bit()
    }
}

// ---------------------------------------------------------------------------
// Raw spec (JSON file schema)

/// A named graph as it appears in a spec file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedGraph {
    pub name: String,
    pub edges: Vec<(u32, u32)>,
}

/// The `graphs` object of a spec file. Entries keep file order and duplicate
/// keys survive parsing so they can be rejected during validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NamedGraphs(pub Vec<NamedGraph>);

impl Serialize for NamedGraphs {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for g in &self.0 {
            let edges: Vec<[u32; 2]> = g.edges.iter().map(|&(p, q)| [p, q]).collect();
            map.serialize_entry(&g.name, &edges)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for NamedGraphs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct GraphsVisitor;

        impl<'de> Visitor<'de> for GraphsVisitor {
            type Value = NamedGraphs;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping graph names to edge lists")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<NamedGraphs, A::Error> {
                let mut out = Vec::new();
                while let Some((name, edges)) = access.next_entry::<String, Vec<[u32; 2]>>()? {
                    out.push(NamedGraph {
                        name,
                        edges: edges.into_iter().map(|[p, q]| (p, q)).collect(),
                    });
                }
                Ok(NamedGraphs(out))
            }
        }

        deserializer.deserialize_map(GraphsVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetySpec {
    pub states: Vec<String>,
    pub initial: String,
    /// `(from, graph name, to)` triples.
    pub transitions: Vec<(String, String, String)>,
}

/// "Within every window of `window` consecutive rounds, at least one graph
/// from `any_of` occurs."
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LivenessClause {
    pub window: usize,
    #[serde(rename = "anyOf")]
    pub any_of: Vec<String>,
}

/// An adversary exactly as written in a spec file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub n: usize,
    pub values: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<Value>>,
    pub graphs: NamedGraphs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<SafetySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub liveness: Vec<LivenessClause>,
}

impl AdversarySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// An oblivious adversary over the given named graphs.
    pub fn oblivious(n: usize, values: &[i64], graphs: &[(&str, &[(u32, u32)])]) -> Self {
        AdversarySpec {
            n,
            values: values.iter().copied().map(Value).collect(),
            outputs: None,
            graphs: NamedGraphs(
                graphs
                    .iter()
                    .map(|(name, edges)| NamedGraph {
                        name: name.to_string(),
                        edges: edges.to_vec(),
                    })
                    .collect(),
            ),
            safety: None,
            liveness: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Words, prefixes, valence

/// Index of a graph in the (name-sorted) alphabet of a validated adversary.
pub type LabelId = u16;

/// A finite sequence of round graphs, as alphabet indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GraphWord(pub Vec<LabelId>);

impl GraphWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, t: usize) -> GraphWord {
        GraphWord(self.0[..t].to_vec())
    }

    pub fn push(&mut self, label: LabelId) {
        self.0.push(label);
    }

    pub fn concat(&self, other: &GraphWord) -> GraphWord {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        GraphWord(out)
    }
}

/// Input assignment plus a finite admissible word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrefixPoint {
    pub inputs: Vec<Value>,
    pub word: GraphWord,
}

impl PrefixPoint {
    pub fn new(inputs: Vec<Value>, word: GraphWord) -> Self {
        PrefixPoint { inputs, word }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn valence(&self) -> Valence {
        valence_of(&self.inputs)
    }

    pub fn truncate(&self, t: usize) -> PrefixPoint {
        PrefixPoint {
            inputs: self.inputs.clone(),
            word: self.word.prefix(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valence {
    Valent(Value),
    Mixed,
}

pub fn valence_of(inputs: &[Value]) -> Valence {
    match inputs.split_first() {
        Some((first, rest)) if rest.iter().all(|v| v == first) => Valence::Valent(*first),
        _ => Valence::Mixed,
    }
}

// ---------------------------------------------------------------------------
// Validated adversary

pub type StateId = u32;

/// Human-readable origin of a product state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateInfo {
    pub safety: String,
    /// Rounds since the last occurrence of each liveness clause's graphs.
    pub counters: Vec<u32>,
}

/// An adversary after normalization: self-loops added, alphabet sorted by
/// name, safety automaton and liveness windows merged into one automaton
/// whose every state is reachable and has an admissible infinite future.
#[derive(Clone, Debug)]
pub struct ValidatedAdversary {
    n: usize,
    values: Vec<Value>,
    outputs: Vec<Value>,
    labels: Vec<String>,
    graphs: Vec<CommGraph>,
    states: Vec<StateInfo>,
    initial: StateId,
    delta: Vec<Vec<Option<StateId>>>,
    oblivious: bool,
    spec: AdversarySpec,
}

/// Checks and normalizes a raw spec.
pub fn validate_spec(raw: &AdversarySpec) -> Result<ValidatedAdversary> {
    let n = raw.n;
    if !(2..=MAX_PROCESSES).contains(&n) {
        return Err(Error::BadAlphabet(format!("process count {n} outside 2..={MAX_PROCESSES}")));
    }
    check_values(&raw.values, "values")?;
    let outputs = match &raw.outputs {
        Some(out) => {
            check_values(out, "outputs")?;
            if let Some(v) = raw.values.iter().find(|v| !out.contains(v)) {
                return Err(Error::BadValues(format!("input value {v} missing from outputs")));
            }
            out.clone()
        }
        None => raw.values.clone(),
    };

    if raw.graphs.0.is_empty() {
        return Err(Error::BadAlphabet("alphabet is empty".into()));
    }
    let mut by_name: BTreeMap<&str, &NamedGraph> = BTreeMap::new();
    for g in &raw.graphs.0 {
        if by_name.insert(g.name.as_str(), g).is_some() {
            return Err(Error::BadAlphabet(format!("duplicate graph name {:?}", g.name)));
        }
    }
    let mut labels = Vec::with_capacity(by_name.len());
    let mut graphs = Vec::with_capacity(by_name.len());
    for (name, g) in &by_name {
        let edges = g.edges.iter().map(|&(p, q)| (ProcessId(p), ProcessId(q)));
        let graph = CommGraph::new(n, edges)
            .map_err(|e| Error::BadAlphabet(format!("graph {name:?}: {e}")))?;
        labels.push(name.to_string());
        graphs.push(graph);
    }
    if labels.len() > LabelId::MAX as usize {
        return Err(Error::BadAlphabet("alphabet too large".into()));
    }
    let label_of = |name: &str| -> Result<LabelId> {
        labels
            .binary_search_by(|l| l.as_str().cmp(name))
            .map(|i| i as LabelId)
            .map_err(|_| Error::BadAlphabet(format!("unknown graph name {name:?}")))
    };

    // Safety automaton over label indices.
    let (safety_names, safety_initial, safety_delta) = match &raw.safety {
        None => (vec!["s".to_string()], 0usize, vec![vec![Some(0usize); labels.len()]]),
        Some(s) => {
            let mut index: HashMap<&str, usize> = HashMap::new();
            for (i, st) in s.states.iter().enumerate() {
                if index.insert(st.as_str(), i).is_some() {
                    return Err(Error::BadAutomaton(format!("duplicate state {st:?}")));
                }
            }
            let state = |name: &str| {
                index
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::BadAutomaton(format!("unknown state {name:?}")))
            };
            let initial = state(&s.initial)?;
            let mut delta = vec![vec![None; labels.len()]; s.states.len()];
            for (from, g, to) in &s.transitions {
                let (from, to, label) = (state(from)?, state(to)?, label_of(g)? as usize);
                if delta[from][label].replace(to).is_some_and(|old| old != to) {
                    return Err(Error::BadAutomaton(format!(
                        "state {:?} has two transitions on {g:?}",
                        s.states[from]
                    )));
                }
            }
            (s.states.clone(), initial, delta)
        }
    };

    let mut clauses: Vec<(u32, Vec<bool>)> = Vec::new();
    for c in &raw.liveness {
        if c.window == 0 {
            return Err(Error::BadAlphabet("liveness window must be at least 1".into()));
        }
        if c.any_of.is_empty() {
            return Err(Error::BadAlphabet("liveness clause with empty graph set".into()));
        }
        let mut member = vec![false; labels.len()];
        for name in &c.any_of {
            member[label_of(name)? as usize] = true;
        }
        clauses.push((c.window as u32, member));
    }

    let safety_live = live_states(safety_delta.len(), |s| safety_delta[s].iter().flatten().copied().collect());
    if !safety_live[safety_initial] {
        return Err(Error::DeadEnd(format!(
            "no infinite path leaves initial state {:?}",
            safety_names[safety_initial]
        )));
    }

    // Product with window counters, explored breadth-first in label order.
    let step = |(s, counters): &(usize, Vec<u32>), label: usize| -> Option<(usize, Vec<u32>)> {
        let next = safety_delta[*s][label]?;
        let mut out = Vec::with_capacity(counters.len());
        for ((window, member), c) in clauses.iter().zip(counters) {
            if member[label] {
                out.push(0);
            } else if c + 1 < *window {
                out.push(c + 1);
            } else {
                return None;
            }
        }
        Some((next, out))
    };
    let start = (safety_initial, vec![0u32; clauses.len()]);
    let mut ids: HashMap<(usize, Vec<u32>), usize> = HashMap::from([(start.clone(), 0)]);
    let mut raw_states = vec![start];
    let mut raw_delta: Vec<Vec<Option<usize>>> = Vec::new();
    let mut i = 0;
    while i < raw_states.len() {
        let cur = raw_states[i].clone();
        let mut row = vec![None; labels.len()];
        for (label, slot) in row.iter_mut().enumerate() {
            if let Some(next) = step(&cur, label) {
                let id = *ids.entry(next.clone()).or_insert_with(|| {
                    raw_states.push(next);
                    raw_states.len() - 1
                });
                *slot = Some(id);
            }
        }
        raw_delta.push(row);
        i += 1;
    }
    let live = live_states(raw_states.len(), |s| raw_delta[s].iter().flatten().copied().collect());
    if !live[0] {
        return Err(Error::EmptyAdversary(
            "liveness clauses cannot be met by any sequence of the safety automaton".into(),
        ));
    }

    // Renumber live states by BFS over live transitions.
    let mut renum: HashMap<usize, StateId> = HashMap::from([(0, 0)]);
    let mut order = vec![0usize];
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        for t in raw_delta[s].iter().flatten().copied().filter(|&t| live[t]) {
            if let std::collections::hash_map::Entry::Vacant(e) = renum.entry(t) {
                e.insert(order.len() as StateId);
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    let states = order
        .iter()
        .map(|&s| StateInfo {
            safety: safety_names[raw_states[s].0].clone(),
            counters: raw_states[s].1.clone(),
        })
        .collect();
    let delta = order
        .iter()
        .map(|&s| {
            raw_delta[s]
                .iter()
                .map(|t| t.and_then(|t| renum.get(&t).copied()))
                .collect()
        })
        .collect::<Vec<Vec<_>>>();
    let oblivious = order.len() == 1 && delta[0].iter().all(Option::is_some);

    let spec = normalized_spec(raw, &labels, &graphs);
    Ok(ValidatedAdversary {
        n,
        values: raw.values.clone(),
        outputs,
        labels,
        graphs,
        states,
        initial: 0,
        delta,
        oblivious,
        spec,
    })
}

fn check_values(values: &[Value], what: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::BadValues(format!("{what} needs at least two values")));
    }
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(Error::BadValues(format!("duplicate value {v} in {what}")));
        }
    }
    Ok(())
}

/// Greatest set of states from which an infinite path exists.
fn live_states(count: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let succs: Vec<Vec<usize>> = (0..count).map(succ).collect();
    let mut live = vec![true; count];
    loop {
        let mut changed = false;
        for s in 0..count {
            if live[s] && !succs[s].iter().any(|&t| live[t]) {
                live[s] = false;
                changed = true;
            }
        }
        if !changed {
            return live;
        }
    }
}

fn normalized_spec(raw: &AdversarySpec, labels: &[String], graphs: &[CommGraph]) -> AdversarySpec {
    let mut spec = raw.clone();
    spec.graphs = NamedGraphs(
        labels
            .iter()
            .zip(graphs)
            .map(|(name, g)| NamedGraph {
                name: name.clone(),
                edges: g.edges().into_iter().map(|(p, q)| (p.0, q.0)).collect(),
            })
            .collect(),
    );
    spec
}

impl ValidatedAdversary {
    pub fn from_json(text: &str) -> Result<Self> {
        validate_spec(&AdversarySpec::from_json(text)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n).map(ProcessId::from_index)
    }

    /// Input domain in declared order.
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Output domain in declared order (defaults to the input domain).
    pub fn outputs(&self) -> &[Value] {
        &self.outputs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.labels[label as usize]
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels.iter().position(|l| l == name).map(|i| i as LabelId)
    }

    pub fn graph(&self, label: LabelId) -> &CommGraph {
        &self.graphs[label as usize]
    }

    pub fn graphs(&self) -> &[CommGraph] {
        &self.graphs
    }

    /// The normalized spec (self-loops explicit, graphs sorted by name).
    pub fn spec(&self) -> &AdversarySpec {
        &self.spec
    }

    /// True when every graph is admissible in every round.
    pub fn is_oblivious(&self) -> bool {
        self.oblivious
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_info(&self, s: StateId) -> &StateInfo {
        &self.states[s as usize]
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn step(&self, s: StateId, label: LabelId) -> Option<StateId> {
        self.delta[s as usize][label as usize]
    }

    /// Admissible labels from a state, in alphabet order.
    pub fn enabled(&self, s: StateId) -> impl Iterator<Item = (LabelId, StateId)> + '_ {
        self.delta[s as usize]
            .iter()
            .enumerate()
            .filter_map(|(l, t)| t.map(|t| (l as LabelId, t)))
    }

    /// State reached after `word`, or `None` if the word is inadmissible.
    pub fn run(&self, word: &GraphWord) -> Option<StateId> {
        self.run_from(self.initial, word)
    }

    pub fn run_from(&self, start: StateId, word: &GraphWord) -> Option<StateId> {
        word.0.iter().try_fold(start, |s, &l| {
            if l as usize >= self.labels.len() {
                None
            } else {
                self.step(s, l)
            }
        })
    }

    pub fn is_admissible(&self, word: &GraphWord) -> bool {
        self.run(word).is_some()
    }

    /// Labels `g` such that `word · g` is admissible.
    pub fn admissible_extensions(&self, word: &GraphWord) -> Result<Vec<LabelId>> {
        let s = self
            .run(word)
            .ok_or_else(|| Error::InadmissibleWord(self.format_word(word)))?;
        Ok(self.enabled(s).map(|(l, _)| l).collect())
    }

    /// All input vectors in lexicographic order of the declared value order.
    pub fn input_vectors(&self) -> Vec<Vec<Value>> {
        let k = self.values.len();
        let total = k.pow(self.n as u32);
        (0..total)
            .map(|mut code| {
                let mut digits = vec![0usize; self.n];
                for d in digits.iter_mut().rev() {
                    *d = code % k;
                    code /= k;
                }
                digits.into_iter().map(|d| self.values[d]).collect()
            })
            .collect()
    }

    /// Number of admissible words of length `t`.
    pub fn count_words(&self, t: usize) -> u128 {
        let mut counts = vec![0u128; self.states.len()];
        counts[self.initial as usize] = 1;
        for _ in 0..t {
            let mut next = vec![0u128; self.states.len()];
            for (s, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (_, to) in self.enabled(s as StateId) {
                    next[to as usize] = next[to as usize].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &c| a.saturating_add(c))
    }

    /// Number of admissible depth-`t` prefix points.
    pub fn count_prefixes(&self, t: usize) -> u128 {
        (self.values.len() as u128)
            .saturating_pow(self.n as u32)
            .saturating_mul(self.count_words(t))
    }

    /// Admissible words of length `t` in lexicographic label order, with
    /// their end states.
    pub fn words(&self, t: usize) -> Vec<(GraphWord, StateId)> {
        let mut layer = vec![(GraphWord::default(), self.initial)];
        for _ in 0..t {
            layer = layer
                .into_iter()
                .flat_map(|(w, s)| {
                    self.enabled(s).map(move |(l, to)| {
                        let mut w = w.clone();
                        w.push(l);
                        (w, to)
                    })
                })
                .collect();
        }
        layer
    }

    /// Every admissible depth-`t` prefix, as a compact product of input
    /// vectors and words. Fails if the count exceeds `budget`.
    pub fn prefix_space(&self, t: usize, budget: u64) -> Result<PrefixSpace> {
        let needed = self.count_prefixes(t);
        if needed > budget as u128 {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let (words, end_states) = self.words(t).into_iter().unzip();
        Ok(PrefixSpace {
            depth: t,
            inputs: self.input_vectors(),
            words,
            end_states,
        })
    }

    /// All admissible depth-`t` prefix points, ordered by inputs then labels.
    pub fn enumerate_prefixes(&self, t: usize) -> Vec<PrefixPoint> {
        let space = self
            .prefix_space(t, u64::MAX)
            .expect("unbounded budget cannot be exceeded");
        (0..space.len()).map(|i| space.point(i)).collect()
    }

    pub fn format_word(&self, word: &GraphWord) -> String {
        word.0
            .iter()
            .map(|&l| self.labels.get(l as usize).map_or("?", String::as_str))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn format_inputs(inputs: &[Value]) -> String {
        inputs.iter().map(Value::to_string).collect::<Vec<_>>().join(",")
    }

    pub fn format_point(&self, point: &PrefixPoint) -> String {
        format!("({})[{}]", Self::format_inputs(&point.inputs), self.format_word(&point.word))
    }

    /// Parses a comma-separated list of graph names. The empty string is the
    /// empty word.
    pub fn parse_word(&self, text: &str) -> Result<GraphWord> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(GraphWord::default());
        }
        text.split(',')
            .map(|name| {
                self.label_id(name.trim())
                    .ok_or_else(|| Error::InadmissibleWord(format!("unknown graph name {:?}", name.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(GraphWord)
    }

    /// Parses a comma-separated input vector over the input domain.
    pub fn parse_inputs(&self, text: &str) -> Result<Vec<Value>> {
        let inputs = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<i64>()
                    .map(Value)
                    .map_err(|_| Error::BadInputs(format!("{s:?} is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.check_inputs(&inputs)?;
        Ok(inputs)
    }

    pub fn check_inputs(&self, inputs: &[Value]) -> Result<()> {
        if inputs.len() != self.n {
            return Err(Error::BadInputs(format!("expected {} inputs, got {}", self.n, inputs.len())));
        }
        if let Some(v) = inputs.iter().find(|v| !self.values.contains(v)) {
            return Err(Error::BadInputs(format!("{v} is not in the input domain")));
        }
        Ok(())
    }

    /// Checks that `point` fits this adversary.
    pub fn check_point(&self, point: &PrefixPoint) -> Result<StateId> {
        self.check_inputs(&point.inputs)?;
        self.run(&point.word)
            .ok_or_else(|| Error::InadmissibleWord(self.format_word(&point.word)))
    }
}

/// The admissible depth-`t` prefixes as the product of all input vectors and
/// all admissible words. Point `i` pairs `inputs[i / words.len()]` with
/// `words[i % words.len()]`, which is the lexicographic order.
#[derive(Clone, Debug)]
pub struct PrefixSpace {
    pub depth: usize,
    pub inputs: Vec<Vec<Value>>,
    pub words: Vec<GraphWord>,
    pub end_states: Vec<StateId>,
}

impl PrefixSpace {
    pub fn len(&self) -> usize {
        self.inputs.len() * self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.words.len(), i % self.words.len())
    }

    pub fn index(&self, input_idx: usize, word_idx: usize) -> usize {
        input_idx * self.words.len() + word_idx
    }

    pub fn inputs_of(&self, i: usize) -> &[Value] {
        &self.inputs[i / self.words.len()]
    }

    pub fn word_of(&self, i: usize) -> &GraphWord {
        &self.words[i % self.words.len()]
    }

    pub fn end_state(&self, i: usize) -> StateId {
        self.end_states[i % self.words.len()]
    }

    pub fn point(&self, i: usize) -> PrefixPoint {
        PrefixPoint::new(self.inputs_of(i).to_vec(), self.word_of(i).clone())
    }

    pub fn valence(&self, i: usize) -> Valence {
        valence_of(self.inputs_of(i))
    }

    /// Index of `point` in this space, if present.
    pub fn find(&self, point: &PrefixPoint) -> Option<usize> {
        let a = self.inputs.binary_search(&point.inputs).ok()?;
        let b = self.words.binary_search(&point.word).ok()?;
        Some(self.index(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halflink() -> ValidatedAdversary {
        validate_spec(&AdversarySpec::oblivious(
            2,
            &[0, 1],
            &[("left", &[(2, 1)]), ("right", &[(1, 2)])],
        ))
        .unwrap()
    }

    fn window_right() -> ValidatedAdversary {
        let mut spec = AdversarySpec::oblivious(2, &[0, 1], &[("left", &[(2, 1)]), ("right", &[(1, 2)])]);
        spec.liveness.push(LivenessClause {
            window: 3,
            any_of: vec!["right".into()],
        });
        validate_spec(&spec).unwrap()
    }

    #[test]
    fn lossy_link_is_accepted_with_one_state() {
        let adv = validate_spec(&AdversarySpec::oblivious(
            2,
            &[0, 1],
            &[("left", &[(2, 1)]), ("both", &[(1, 2), (2, 1)]), ("right", &[(1, 2)])],
        ))
        .unwrap();
        assert_eq!(adv.labels(), ["both", "left", "right"]);
        assert_eq!(adv.state_count(), 1);
        assert!(adv.is_oblivious());
    }

    #[test]
    fn self_loops_are_added() {
        let adv = halflink();
        let right = adv.graph(adv.label_id("right").unwrap());
        assert_eq!(
            right.edges(),
            vec![(ProcessId(1), ProcessId(1)), (ProcessId(1), ProcessId(2)), (ProcessId(2), ProcessId(2))]
        );
        let spec_edges = &adv.spec().graphs.0[1].edges;
        assert_eq!(spec_edges, &vec![(1, 1), (1, 2), (2, 2)]);
    }

    #[test]
    fn dead_end_automaton_is_rejected() {
        let mut spec = AdversarySpec::oblivious(2, &[0, 1], &[("right", &[(1, 2)])]);
        spec.safety = Some(SafetySpec {
            states: vec!["a".into(), "b".into()],
            initial: "a".into(),
            transitions: vec![("a".into(), "right".into(), "b".into())],
        });
        assert!(matches!(validate_spec(&spec), Err(Error::DeadEnd(_))));
    }

    #[test]
    fn dead_branches_are_pruned() {
        // a --right--> a, a --left--> b (b has no way out)
        let mut spec = AdversarySpec::oblivious(2, &[0, 1], &[("left", &[(2, 1)]), ("right", &[(1, 2)])]);
        spec.safety = Some(SafetySpec {
            states: vec!["a".into(), "b".into(), "c".into()],
            initial: "a".into(),
            transitions: vec![
                ("a".into(), "right".into(), "a".into()),
                ("a".into(), "left".into(), "b".into()),
            ],
        });
        let adv = validate_spec(&spec).unwrap();
        assert_eq!(adv.state_count(), 1);
        let right = adv.label_id("right").unwrap();
        assert_eq!(adv.admissible_extensions(&GraphWord::default()).unwrap(), vec![right]);
    }

    #[test]
    fn unsatisfiable_liveness_is_empty() {
        let mut spec = AdversarySpec::oblivious(2, &[0, 1], &[("left", &[(2, 1)]), ("right", &[(1, 2)])]);
        spec.safety = Some(SafetySpec {
            states: vec!["a".into()],
            initial: "a".into(),
            transitions: vec![("a".into(), "left".into(), "a".into())],
        });
        spec.liveness.push(LivenessClause {
            window: 2,
            any_of: vec!["right".into()],
        });
        assert!(matches!(validate_spec(&spec), Err(Error::EmptyAdversary(_))));
    }

    #[test]
    fn bad_alphabets_are_rejected() {
        let mut dup = AdversarySpec::oblivious(2, &[0, 1], &[("a", &[(1, 2)]), ("a", &[(2, 1)])]);
        assert!(matches!(validate_spec(&dup), Err(Error::BadAlphabet(_))));
        dup = AdversarySpec::oblivious(2, &[0, 1], &[("a", &[(1, 3)])]);
        assert!(matches!(validate_spec(&dup), Err(Error::BadAlphabet(_))));
        dup = AdversarySpec::oblivious(2, &[0, 1], &[]);
        assert!(matches!(validate_spec(&dup), Err(Error::BadAlphabet(_))));
        dup = AdversarySpec::oblivious(2, &[0], &[("a", &[(1, 2)])]);
        assert!(matches!(validate_spec(&dup), Err(Error::BadValues(_))));
    }

    #[test]
    fn duplicate_json_keys_survive_parsing() {
        let text = r#"{"n":2,"values":[0,1],"graphs":{"a":[[1,2]],"a":[[2,1]]}}"#;
        let spec = AdversarySpec::from_json(text).unwrap();
        assert_eq!(spec.graphs.0.len(), 2);
        assert!(matches!(validate_spec(&spec), Err(Error::BadAlphabet(_))));
    }

    #[test]
    fn oblivious_extensions_are_everything() {
        let adv = halflink();
        let all: Vec<LabelId> = vec![0, 1];
        assert_eq!(adv.admissible_extensions(&GraphWord(vec![1, 0, 0])).unwrap(), all);
        assert_eq!(adv.admissible_extensions(&GraphWord::default()).unwrap(), all);
    }

    #[test]
    fn window_forces_right_after_two_lefts() {
        let adv = window_right();
        let left = adv.label_id("left").unwrap();
        let right = adv.label_id("right").unwrap();
        assert_eq!(adv.admissible_extensions(&GraphWord(vec![left, left])).unwrap(), vec![right]);
        assert_eq!(adv.admissible_extensions(&GraphWord(vec![left])).unwrap(), vec![left, right]);
        assert!(matches!(
            adv.admissible_extensions(&GraphWord(vec![left, left, left])),
            Err(Error::InadmissibleWord(_))
        ));
    }

    #[test]
    fn enumeration_counts_and_order() {
        let adv = halflink();
        let pts = adv.enumerate_prefixes(1);
        assert_eq!(pts.len(), 8);
        let mut sorted = pts.clone();
        sorted.sort();
        assert_eq!(pts, sorted);
        assert_eq!(adv.enumerate_prefixes(0).len(), 4);
        assert!(adv.enumerate_prefixes(0).iter().all(|p| p.word.is_empty()));
        assert_eq!(window_right().enumerate_prefixes(3).len(), 4 * 7);
    }

    #[test]
    fn budget_is_enforced() {
        let adv = halflink();
        assert!(matches!(adv.prefix_space(3, 31), Err(Error::BudgetExceeded { needed: 32, .. })));
        assert_eq!(adv.prefix_space(3, 32).unwrap().len(), 32);
    }

    #[test]
    fn parse_helpers() {
        let adv = halflink();
        assert_eq!(adv.parse_word("right, left").unwrap(), GraphWord(vec![1, 0]));
        assert_eq!(adv.parse_word("").unwrap(), GraphWord::default());
        assert!(adv.parse_word("up").is_err());
        assert_eq!(adv.parse_inputs("0,1").unwrap(), vec![Value(0), Value(1)]);
        assert!(adv.parse_inputs("0,2").is_err());
        assert!(adv.parse_inputs("0").is_err());
    }

    #[test]
    fn valence_tags() {
        assert_eq!(valence_of(&[Value(1), Value(1)]), Valence::Valent(Value(1)));
        assert_eq!(valence_of(&[Value(1), Value(0)]), Valence::Mixed);
    }
}
