//! The universal consensus algorithm for a solvable partition: every process
//! runs the full-information protocol and, at the decision round, looks its
//! own view up in a table.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{valence_of, GraphWord, ProcessId, ValidatedAdversary, Valence, Value};
use crate::ptgraph::{broadcast_masks, ViewKey, ViewShape};
use crate::topology::partition::ComponentPartition;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTable {
    pub decision_round: usize,
    pub n: usize,
    pub entries: BTreeMap<ViewKey, Value>,
}

impl DecisionTable {
    pub fn get(&self, key: &ViewKey) -> Option<Value> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Maps every depth-`t*` single-process view to the value assigned to the
/// components it occurs in (`assignment` is indexed by component id).
pub fn build_decision_table(partition: &ComponentPartition, assignment: &[Value]) -> Result<DecisionTable> {
    let n = partition.n();
    let space = partition.space();
    let mut entries = BTreeMap::new();
    for i in 0..partition.len() {
        let value = assignment[partition.component_of(i)];
        for p in (0..n).map(ProcessId::from_index) {
            let key = partition.shape(i, p).key_with_inputs(space.inputs_of(i));
            match entries.entry(key) {
                Entry::Vacant(e) => {
                    e.insert(value);
                }
                Entry::Occupied(e) => {
                    if *e.get() != value {
                        let mut values = vec![e.get().0, value.0];
                        values.sort_unstable();
                        return Err(Error::AmbiguousView {
                            view: e.key().to_hex(),
                            values,
                        });
                    }
                }
            }
        }
    }
    Ok(DecisionTable {
        decision_round: partition.depth(),
        n,
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessRound {
    pub process: ProcessId,
    /// Processes whose input is in the view.
    pub heard: Vec<ProcessId>,
    pub view: ViewKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub processes: Vec<ProcessRound>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessDecision {
    pub process: ProcessId,
    pub round: Option<usize>,
    pub value: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub inputs: Vec<Value>,
    pub word: Vec<String>,
    /// Times `0..=|word|`.
    pub rounds: Vec<RoundRecord>,
    pub decisions: Vec<ProcessDecision>,
}

impl ExecutionTrace {
    pub fn decided(&self) -> impl Iterator<Item = Value> + '_ {
        self.decisions.iter().filter_map(|d| d.value)
    }
}

/// Runs the table algorithm; processes whose view is missing from the table
/// stay undecided.
pub fn trace_execution(
    adv: &ValidatedAdversary,
    inputs: &[Value],
    word: &GraphWord,
    table: &DecisionTable,
) -> Result<ExecutionTrace> {
    adv.check_inputs(inputs)?;
    if !adv.is_admissible(word) {
        return Err(Error::InadmissibleWord(adv.format_word(word)));
    }
    if word.len() < table.decision_round {
        return Err(Error::WordTooShort {
            len: word.len(),
            needed: table.decision_round,
        });
    }
    let n = adv.n();
    let graphs: Vec<_> = word.0.iter().map(|&l| adv.graph(l)).collect();
    let mut rounds = Vec::with_capacity(word.len() + 1);
    let mut decisions: Vec<ProcessDecision> = adv
        .processes()
        .map(|process| ProcessDecision {
            process,
            round: None,
            value: None,
        })
        .collect();
    for s in 0..=word.len() {
        let mut processes = Vec::with_capacity(n);
        for p in adv.processes() {
            let shape = ViewShape::compute(&graphs[..s], p.bit());
            let view = shape.key_with_inputs(inputs);
            if s == table.decision_round {
                if let Some(v) = table.get(&view) {
                    decisions[p.index()].round = Some(s);
                    decisions[p.index()].value = Some(v);
                }
            }
            processes.push(ProcessRound {
                process: p,
                heard: crate::model::mask_processes(shape.heard_mask()).collect(),
                view,
            });
        }
        rounds.push(RoundRecord { round: s, processes });
    }
    Ok(ExecutionTrace {
        inputs: inputs.to_vec(),
        word: word.0.iter().map(|&l| adv.label_name(l).to_string()).collect(),
        rounds,
        decisions,
    })
}

/// Runs the table algorithm; a view without an entry is an error.
pub fn run_execution(
    adv: &ValidatedAdversary,
    inputs: &[Value],
    word: &GraphWord,
    table: &DecisionTable,
) -> Result<ExecutionTrace> {
    let trace = trace_execution(adv, inputs, word, table)?;
    if let Some(d) = trace.decisions.iter().find(|d| d.value.is_none()) {
        return Err(Error::MissingView {
            process: d.process.0,
            round: table.decision_round,
        });
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    Termination,
    Agreement,
    Validity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub property: Property,
    pub trace: ExecutionTrace,
    /// `--inputs` and `--word` arguments that replay the failure.
    pub inputs_arg: String,
    pub word_arg: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub depth: usize,
    pub executions: u64,
    pub failure: Option<Failure>,
}

fn check_decisions(decisions: &[Option<Value>], inputs: &[Value]) -> Option<Property> {
    if decisions.iter().any(Option::is_none) {
        return Some(Property::Termination);
    }
    let first = decisions[0];
    if decisions.iter().any(|d| *d != first) {
        return Some(Property::Agreement);
    }
    match valence_of(inputs) {
        Valence::Valent(v) if first != Some(v) => Some(Property::Validity),
        _ => None,
    }
}

/// Checks termination (everyone decides at the decision round), agreement
/// and validity on every admissible input vector and word of length
/// `depth` (at least the decision round).
pub fn exhaustive_verify(adv: &ValidatedAdversary, table: &DecisionTable, depth: usize, budget: u64) -> Result<Verdict> {
    let t = table.decision_round;
    let depth = depth.max(t);
    let full = adv.prefix_space(depth, budget)?;
    let short = adv.prefix_space(t, budget)?;
    let mut cache: Vec<Option<Option<Property>>> = vec![None; short.len()];
    let mut executions = 0u64;
    for x in 0..full.inputs.len() {
        let inputs = &full.inputs[x];
        for w in &full.words {
            executions += 1;
            let head = w.prefix(t);
            let wi = short.words.binary_search(&head).expect("admissible words are prefix-closed");
            let i = short.index(x, wi);
            let verdict = *cache[i].get_or_insert_with(|| {
                let graphs: Vec<_> = head.0.iter().map(|&l| adv.graph(l)).collect();
                let decisions: Vec<Option<Value>> = adv
                    .processes()
                    .map(|p| table.get(&ViewShape::compute(&graphs, p.bit()).key_with_inputs(inputs)))
                    .collect();
                check_decisions(&decisions, inputs)
            });
            if let Some(property) = verdict {
                let trace = trace_execution(adv, inputs, &head, table)?;
                return Ok(Verdict {
                    passed: false,
                    depth,
                    executions,
                    failure: Some(Failure {
                        property,
                        inputs_arg: inputs.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(","),
                        word_arg: trace.word.join(","),
                        trace,
                    }),
                });
            }
        }
    }
    Ok(Verdict {
        passed: true,
        depth,
        executions,
        failure: None,
    })
}

/// Processes that hold `p`'s input at the end of `word`.
pub fn heard_by(adv: &ValidatedAdversary, word: &GraphWord, p: ProcessId) -> Vec<ProcessId> {
    let graphs: Vec<_> = word.0.iter().map(|&l| adv.graph(l)).collect();
    crate::model::mask_processes(*broadcast_masks(&graphs, p).last().expect("time 0")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_spec, AdversarySpec};
    use crate::topology::partition::{assign_decision_sets, epsilon_components, DecisionSets};

    fn halflink() -> ValidatedAdversary {
        validate_spec(&AdversarySpec::oblivious(2, &[0, 1], &[("left", &[(2, 1)]), ("right", &[(1, 2)])])).unwrap()
    }

    fn table(adv: &ValidatedAdversary) -> DecisionTable {
        let p = epsilon_components(adv, 1, 1000).unwrap();
        let DecisionSets::Assigned(values) = assign_decision_sets(&p, adv.outputs()) else {
            panic!("conflict")
        };
        build_decision_table(&p, &values).unwrap()
    }

    #[test]
    fn halflink_table_runs() {
        let adv = halflink();
        let t = table(&adv);
        assert_eq!(t.decision_round, 1);
        let word = adv.parse_word("right").unwrap();
        let trace = run_execution(&adv, &[Value(0), Value(1)], &word, &t).unwrap();
        assert!(trace.decided().all(|v| v == Value(0)));
        assert_eq!(trace.rounds.len(), 2);
        assert_eq!(heard_by(&adv, &word, ProcessId(1)), vec![ProcessId(1), ProcessId(2)]);
        let v = exhaustive_verify(&adv, &t, 6, 1_000_000).unwrap();
        assert!(v.passed);
        assert_eq!(v.executions, 64 * 4);
    }

    #[test]
    fn errors() {
        let adv = halflink();
        let t = table(&adv);
        let bad = GraphWord(vec![7]);
        assert!(matches!(
            run_execution(&adv, &[Value(0), Value(1)], &bad, &t),
            Err(Error::InadmissibleWord(_))
        ));
        assert!(matches!(
            run_execution(&adv, &[Value(0), Value(1)], &GraphWord(vec![]), &t),
            Err(Error::WordTooShort { .. })
        ));
        let mut empty = t.clone();
        empty.entries.clear();
        assert!(matches!(
            run_execution(&adv, &[Value(0), Value(1)], &GraphWord(vec![0]), &empty),
            Err(Error::MissingView { .. })
        ));
        let v = exhaustive_verify(&adv, &empty, 2, 1000).unwrap();
        assert_eq!(v.failure.unwrap().property, Property::Termination);
    }

    #[test]
    fn json_roundtrip() {
        let adv = halflink();
        let t = table(&adv);
        assert_eq!(DecisionTable::from_json(&t.to_json()).unwrap(), t);
    }
}
