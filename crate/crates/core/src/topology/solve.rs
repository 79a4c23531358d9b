use serde::{Deserialize, Serialize};

use crate::consensus::{build_decision_table, DecisionTable};
use crate::error::{Error, Result};
use crate::model::{ProcessId, ValidatedAdversary, Valence, Value};
use crate::topology::broadcast::{broadcast_check, BroadcastStatus};
use crate::topology::limit::{find_fair_unfair, LimitWitness};
use crate::topology::partition::{assign_decision_sets, epsilon_components, ComponentPartition, DecisionSets};

pub const DEFAULT_BUDGET: u64 = 2_000_000;
pub const DEFAULT_WITNESS_BOUND: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub t_max: usize,
    /// Broadcast horizon; `None` means the depth being examined.
    pub horizon: Option<usize>,
    pub budget: u64,
    /// Chain length for the limit witness search; `None` means `n + 1`.
    pub chain_length: Option<usize>,
    pub witness_bound: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            t_max: 6,
            horizon: None,
            budget: DEFAULT_BUDGET,
            chain_length: None,
            witness_bound: DEFAULT_WITNESS_BOUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub id: usize,
    pub size: usize,
    pub valence: Option<Value>,
    pub value: Value,
    pub broadcaster: Option<ProcessId>,
    pub by_round: Option<usize>,
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictSummary {
    pub depth: usize,
    pub component: usize,
    pub size: usize,
    pub first: String,
    pub second: String,
    pub values: (Value, Value),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthDiagnostics {
    pub depth: usize,
    pub prefixes: usize,
    pub components: usize,
    pub valence_clean: bool,
    pub broadcastable: usize,
    pub refuted: usize,
    pub unknown: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SolvabilityVerdict {
    Solvable {
        depth: usize,
        epsilon: String,
        components: Vec<ComponentSummary>,
        table: DecisionTable,
    },
    ImpossibleEvidence {
        conflicts: Vec<ConflictSummary>,
        witness: Option<LimitWitness>,
    },
    Unknown {
        t_max: usize,
        horizon: Option<usize>,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub n: usize,
    pub graphs: Vec<String>,
    pub t_max: usize,
    pub verdict: SolvabilityVerdict,
    pub diagnostics: Vec<DepthDiagnostics>,
}

impl SolvabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Tries every process as broadcaster. The certified one with the earliest
/// round wins, ties broken by process id; otherwise an `Unknown` outcome is
/// preferred over a refutation.
pub fn certify_component(
    adv: &ValidatedAdversary,
    partition: &ComponentPartition,
    component: usize,
    horizon: usize,
) -> BroadcastStatus {
    let statuses: Vec<BroadcastStatus> = adv
        .processes()
        .map(|p| broadcast_check(adv, partition, component, p, horizon))
        .collect();
    if let Some(best) = statuses
        .iter()
        .filter(|s| s.by_round().is_some())
        .min_by_key(|s| (s.by_round(), s.process()))
    {
        return best.clone();
    }
    statuses
        .iter()
        .find(|s| matches!(s, BroadcastStatus::Unknown { .. }))
        .unwrap_or(&statuses[0])
        .clone()
}

fn epsilon(t: usize) -> String {
    if t < 128 {
        format!("1/{}", 1u128 << t)
    } else {
        format!("2^-{t}")
    }
}

/// Iterates depths `1..=t_max` until some depth is valence-clean with every
/// component broadcastable.
pub fn decide_solvability(adv: &ValidatedAdversary, options: &SolveOptions) -> Result<SolvabilityReport> {
    let t_max = options.t_max.max(1);
    let mut conflicts = Vec::new();
    let mut diagnostics = Vec::new();
    let mut stop_reason = None;
    let mut all_conflicted = true;
    let mut reached = 0;
    for t in 1..=t_max {
        let mut partition = match epsilon_components(adv, t, options.budget) {
            Ok(p) => p,
            Err(Error::BudgetExceeded { needed, budget }) => {
                stop_reason = Some(format!(
                    "depth {t} needs {needed} prefixes, budget is {budget}"
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        reached = t;
        let mut diag = DepthDiagnostics {
            depth: t,
            prefixes: partition.len(),
            components: partition.components().len(),
            valence_clean: true,
            broadcastable: 0,
            refuted: 0,
            unknown: 0,
        };
        let assignment = match assign_decision_sets(&partition, adv.outputs()) {
            DecisionSets::Conflict(c) => {
                diag.valence_clean = false;
                diagnostics.push(diag);
                conflicts.push(ConflictSummary {
                    depth: t,
                    component: c.component,
                    size: c.size,
                    first: adv.format_point(&c.first),
                    second: adv.format_point(&c.second),
                    values: c.values,
                });
                continue;
            }
            DecisionSets::Assigned(values) => values,
        };
        all_conflicted = false;
        let horizon = options.horizon.unwrap_or(t).max(t);
        for id in 0..partition.components().len() {
            let status = certify_component(adv, &partition, id, horizon);
            match status {
                BroadcastStatus::Broadcastable { .. } => diag.broadcastable += 1,
                BroadcastStatus::Refuted { .. } => diag.refuted += 1,
                BroadcastStatus::Unknown { .. } => diag.unknown += 1,
            }
            partition.set_broadcast(id, status);
        }
        let solved = diag.broadcastable == partition.components().len();
        diagnostics.push(diag);
        if solved {
            let table = build_decision_table(&partition, &assignment)?;
            let components = partition
                .components()
                .iter()
                .map(|c| ComponentSummary {
                    id: c.id,
                    size: c.members.len(),
                    valence: c.valences.first().copied(),
                    value: assignment[c.id],
                    broadcaster: c.broadcast.as_ref().map(BroadcastStatus::process),
                    by_round: c.broadcast.as_ref().and_then(BroadcastStatus::by_round),
                    members: c.members.iter().map(|&i| adv.format_point(&partition.point(i))).collect(),
                })
                .collect();
            return Ok(SolvabilityReport {
                n: adv.n(),
                graphs: adv.labels().to_vec(),
                t_max,
                verdict: SolvabilityVerdict::Solvable {
                    depth: t,
                    epsilon: epsilon(t),
                    components,
                    table,
                },
                diagnostics,
            });
        }
    }
    let witness = if all_conflicted && reached > 0 {
        let k = options.chain_length.unwrap_or(adv.n() + 1);
        find_fair_unfair(adv, k, options.witness_bound)
    } else {
        None
    };
    let verdict = if all_conflicted && reached > 0 && (reached == t_max || witness.is_some()) {
        SolvabilityVerdict::ImpossibleEvidence { conflicts, witness }
    } else {
        let reason = stop_reason.unwrap_or_else(|| {
            "some component is valence-clean but not certified broadcastable within the horizon".to_string()
        });
        SolvabilityVerdict::Unknown {
            t_max,
            horizon: options.horizon,
            reason,
        }
    };
    Ok(SolvabilityReport {
        n: adv.n(),
        graphs: adv.labels().to_vec(),
        t_max,
        verdict,
        diagnostics,
    })
}

/// Whether `status` certifies `process` and the members all share its input.
pub fn broadcaster_input_constant(partition: &ComponentPartition, component: usize) -> Option<bool> {
    let c = partition.component(component);
    let p = match c.broadcast.as_ref()? {
        BroadcastStatus::Broadcastable { process, .. } => *process,
        _ => return None,
    };
    let space = partition.space();
    let first = space.inputs_of(c.members[0])[p.index()];
    Some(c.members.iter().all(|&i| space.inputs_of(i)[p.index()] == first))
}

/// Valence of every member, for reporting.
pub fn member_valences(partition: &ComponentPartition, component: usize) -> Vec<Valence> {
    partition
        .component(component)
        .members
        .iter()
        .map(|&i| partition.space().valence(i))
        .collect()
}
