//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use advtop_core::consensus::{exhaustive_verify, trace_execution, Property};
use advtop_core::fixtures;
use advtop_core::metrics::{distance_max, distance_min, distance_p, DyadicDistance};
use advtop_core::model::{PrefixPoint, ProcessId, ValidatedAdversary, Value};
use advtop_core::ptgraph::{build_pt, causal_view, heard_set, PtEdge, PtNode};
use advtop_core::topology::limit::find_fair_unfair;
use advtop_core::topology::solve::{broadcaster_input_constant, certify_component};
use advtop_core::topology::{decide_solvability, epsilon_components, SolvabilityVerdict, SolveOptions};
use advtop_core::{validate_spec, AdversarySpec};
use common::{point, random_point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock limits, as stated by the criteria.
const LOSSY_LIMIT: Duration = Duration::from_secs(60);
const HALFLINK_LIMIT: Duration = Duration::from_secs(5);
/// Random triples per fixture for the metric suite.
const TRIPLES: usize = 10_000;
/// Distances are dyadic and compared exactly: the tolerance is zero.
const RNG_SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(adv: &ValidatedAdversary, t_max: usize) -> SolvabilityVerdict {
    let opts = SolveOptions {
        t_max,
        ..SolveOptions::default()
    };
    decide_solvability(adv, &opts).expect("analysis runs").verdict
}

fn criterion_1() -> Outcome {
    let adv = fixtures::load("lossy-link-2").unwrap();
    let start = Instant::now();
    let verdict = solve(&adv, 8);
    let elapsed = start.elapsed();
    let SolvabilityVerdict::ImpossibleEvidence { conflicts, witness } = verdict else {
        return Err(format!("verdict {verdict:?}"));
    };
    let depths: Vec<usize> = conflicts.iter().map(|c| c.depth).collect();
    check(depths == (1..=8).collect::<Vec<_>>(), || format!("conflict depths {depths:?}"))?;
    let witness = witness.ok_or("no limit witness")?;
    check(witness.verify(&adv), || "witness does not verify".into())?;
    let k3 = find_fair_unfair(&adv, 3, 100_000).ok_or("no witness with k = 3")?;
    check(k3.tracks.len() <= 3 && k3.verify(&adv), || "k = 3 witness invalid".into())?;
    check(elapsed < LOSSY_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "conflict at depths 1..=8, witness with {} tracks verified, {:.2}s",
        k3.tracks.len(),
        elapsed.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let adv = fixtures::load("halflink-2").unwrap();
    let start = Instant::now();
    let verdict = solve(&adv, 6);
    let SolvabilityVerdict::Solvable {
        depth, epsilon, table, ..
    } = verdict
    else {
        return Err(format!("verdict {verdict:?}"));
    };
    check(depth == 1 && epsilon == "1/2", || format!("depth {depth}, epsilon {epsilon}"))?;
    let v = exhaustive_verify(&adv, &table, 6, 1_000_000).unwrap();
    let elapsed = start.elapsed();
    check(v.passed, || format!("verification failed: {:?}", v.failure))?;
    check(v.executions == 64 * 4, || format!("{} executions", v.executions))?;
    check(elapsed < HALFLINK_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "solvable, epsilon 1/2, t* = 1; verified {} executions (64 words x 4 inputs) in {:.3}s",
        v.executions,
        elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let adv = fixtures::load("relay-3").unwrap();
    let pt = build_pt(&adv, &point(&adv, &[1, 0, 1], "g1,g2")).unwrap();
    let view = causal_view(&pt, &[ProcessId(1)], 2).unwrap();
    let node = |p: u32, time: usize| PtNode {
        process: ProcessId(p),
        time,
    };
    let edge = |from: u32, from_layer: usize, to: u32| PtEdge {
        from_layer,
        from: ProcessId(from),
        to: ProcessId(to),
    };
    let nodes: BTreeSet<PtNode> = view.nodes().into_iter().collect();
    let want_nodes: BTreeSet<PtNode> = [node(1, 0), node(2, 0), node(3, 0), node(1, 1), node(2, 1), node(1, 2)].into();
    check(nodes == want_nodes, || format!("nodes {nodes:?}"))?;
    let inputs = heard_set(&view);
    let want_inputs = vec![(ProcessId(1), Value(1)), (ProcessId(2), Value(0)), (ProcessId(3), Value(1))];
    check(inputs == want_inputs, || format!("inputs {inputs:?}"))?;
    let edges: BTreeSet<PtEdge> = view.edges().iter().copied().collect();
    let want_edges: BTreeSet<PtEdge> = [
        edge(1, 0, 1),
        edge(2, 0, 2),
        edge(2, 0, 1),
        edge(3, 0, 2),
        edge(1, 0, 2),
        edge(1, 1, 1),
        edge(2, 1, 1),
    ]
    .into();
    check(edges == want_edges, || format!("edges {edges:?}"))?;
    Ok("6 nodes with inputs (1,0,1) and 7 edges match exactly".into())
}

fn criterion_4() -> Outcome {
    let adv = validate_spec(&AdversarySpec::oblivious(3, &[0, 1], &[("g1", &[(3, 2)]), ("g2", &[(2, 1)])])).unwrap();
    let a = point(&adv, &[0, 0, 0], "g1,g2");
    let b = point(&adv, &[0, 0, 1], "g1,g2");
    let d_max = distance_max(&adv, &a, &b).unwrap();
    let d2 = distance_p(&adv, &a, &b, &[ProcessId(2)]).unwrap();
    let d1 = distance_p(&adv, &a, &b, &[ProcessId(1)]).unwrap();
    let d_min = distance_min(&adv, &a, &b).unwrap();
    let got = (d_max, d2, d1, d_min);
    let want = (
        DyadicDistance::Differ(0),
        DyadicDistance::Differ(1),
        DyadicDistance::Differ(2),
        DyadicDistance::Differ(2),
    );
    check(got == want, || format!("got {got:?}"))?;
    Ok(format!("d_max = {d_max}, d_{{2}} = {d2}, d_min = d_{{1}} = {d1}"))
}

/// The prefix-level distance: equal views through the whole prefix count as 0.
fn prefix_value(d: DyadicDistance) -> f64 {
    match d {
        DyadicDistance::Differ(k) => 0.5f64.powi(k as i32),
        DyadicDistance::Indistinct(_) => 0.0,
    }
}

/// `d_[n]` from first principles: inputs first, then the first differing round graph.
fn common_prefix_distance(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint) -> DyadicDistance {
    if a.inputs != b.inputs {
        return DyadicDistance::Differ(0);
    }
    (0..a.depth())
        .find(|&r| adv.graph(a.word.0[r]) != adv.graph(b.word.0[r]))
        .map_or(DyadicDistance::Indistinct(a.depth()), |r| DyadicDistance::Differ(r + 1))
}

fn random_subset(rng: &mut impl Rng, n: usize) -> Vec<ProcessId> {
    loop {
        let set: Vec<ProcessId> = (0..n).filter(|_| rng.gen_bool(0.5)).map(ProcessId::from_index).collect();
        if !set.is_empty() {
            return set;
        }
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(RNG_SEED);
    let mut checked = 0usize;
    for name in fixtures::names() {
        let adv = fixtures::load(name).unwrap();
        let n = adv.n();
        for _ in 0..TRIPLES {
            let t = rng.gen_range(0..=4);
            let a = random_point(&adv, &mut rng, t);
            let b = random_point(&adv, &mut rng, t);
            let c = random_point(&adv, &mut rng, t);
            let p_set = random_subset(&mut rng, n);
            let mut q_set = p_set.clone();
            q_set.extend(random_subset(&mut rng, n));
            q_set.sort();
            q_set.dedup();
            let d = |x: &PrefixPoint, y: &PrefixPoint, s: &[ProcessId]| distance_p(&adv, x, y, s).unwrap();
            let (ab, bc, ac) = (d(&a, &b, &p_set), d(&b, &c, &p_set), d(&a, &c, &p_set));
            check(ab == d(&b, &a, &p_set), || format!("{name}: d_P not symmetric"))?;
            check(ac.le_sum(ab, bc), || format!("{name}: triangle {ac:?} > {ab:?} + {bc:?}"))?;
            check(ac.cmp_value(ab.max_value(bc)).is_le(), || format!("{name}: ultrametric bound broken"))?;
            check(ab.cmp_value(d(&a, &b, &q_set)).is_le(), || format!("{name}: d_P > d_Q for P in Q"))?;
            let full: Vec<ProcessId> = adv.processes().collect();
            let dn = d(&a, &b, &full);
            check(dn == common_prefix_distance(&adv, &a, &b), || format!("{name}: d_[n] != prefix metric"))?;
            check(dn == distance_max(&adv, &a, &b).unwrap(), || format!("{name}: d_max != d_[n]"))?;
            let singles = adv
                .processes()
                .map(|p| d(&a, &b, &[p]))
                .reduce(DyadicDistance::min)
                .unwrap();
            let dmin = distance_min(&adv, &a, &b).unwrap();
            check(dmin == singles, || format!("{name}: d_min != min_p d_p"))?;
            check(dmin == distance_min(&adv, &b, &a).unwrap(), || format!("{name}: d_min not symmetric"))?;
            checked += 1;
        }
    }
    // Exhaustive search for a d_min triangle violation on lossy-link prefixes.
    let adv = fixtures::load("lossy-link-2").unwrap();
    let mut found = None;
    'depth: for t in 1..=3 {
        let points = adv.enumerate_prefixes(t);
        let m = points.len();
        let mut dm = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                dm[i * m + j] = prefix_value(distance_min(&adv, &points[i], &points[j]).unwrap());
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if dm[i * m + k] > dm[i * m + j] + dm[j * m + k] {
                        found = Some((t, points[i].clone(), points[j].clone(), points[k].clone()));
                        break 'depth;
                    }
                }
            }
        }
    }
    let (t, a, b, c) = found.ok_or("no d_min triangle violation up to depth 3")?;
    Ok(format!(
        "{checked} random triples, 0 violations; d_min violation at depth {t}: {} {} {}",
        adv.format_point(&a),
        adv.format_point(&b),
        adv.format_point(&c)
    ))
}

fn criterion_6() -> Outcome {
    let mut certified = 0usize;
    for name in fixtures::names() {
        let adv = fixtures::load(name).unwrap();
        for t in 1..=6 {
            let Ok(mut partition) = epsilon_components(&adv, t, 2_000_000) else {
                continue;
            };
            for id in 0..partition.components().len() {
                let status = certify_component(&adv, &partition, id, t);
                partition.set_broadcast(id, status);
                if let Some(constant) = broadcaster_input_constant(&partition, id) {
                    check(constant, || format!("{name} depth {t} component {id}: broadcaster input varies"))?;
                    certified += 1;
                }
            }
        }
    }
    Ok(format!("{certified} certified components, broadcaster input constant in all"))
}

fn criterion_7() -> Outcome {
    let window = fixtures::load("window-right-2").unwrap();
    let SolvabilityVerdict::Solvable { depth, table, .. } = solve(&window, 6) else {
        return Err("window-right-2 not solvable".into());
    };
    check(depth <= 3, || format!("t* = {depth}"))?;
    let v = exhaustive_verify(&window, &table, 6, 2_000_000).unwrap();
    check(v.passed, || format!("window-right-2 verification failed: {:?}", v.failure))?;
    // Removing the clause leaves the oblivious {left, right}: still solvable at depth 1.
    let plain = fixtures::load("halflink-2").unwrap();
    let plain_depth = match solve(&plain, 6) {
        SolvabilityVerdict::Solvable { depth, .. } => depth,
        other => return Err(format!("clause removed: {other:?}")),
    };
    check(plain_depth == 1, || format!("clause removed: t* = {plain_depth}"))?;
    // With a silent graph the clause is what makes consensus solvable.
    let ws = fixtures::load("window-silent-2").unwrap();
    let SolvabilityVerdict::Solvable { depth: ws_depth, table, .. } = solve(&ws, 6) else {
        return Err("window-silent-2 not solvable".into());
    };
    check(ws_depth <= 3, || format!("window-silent-2 t* = {ws_depth}"))?;
    let v2 = exhaustive_verify(&ws, &table, 6, 2_000_000).unwrap();
    check(v2.passed, || "window-silent-2 verification failed".into())?;
    let silent = fixtures::load("silent-2").unwrap();
    let SolvabilityVerdict::ImpossibleEvidence { witness, .. } = solve(&silent, 6) else {
        return Err("silent-2 should be impossible".into());
    };
    check(witness.is_some_and(|w| w.verify(&silent)), || "silent-2 witness missing".into())?;
    Ok(format!(
        "window-right-2 solvable t* = {depth}, verified {} executions; without clause t* = {plain_depth}; \
         window-silent-2 t* = {ws_depth} ({} executions) vs silent-2 impossible with witness",
        v.executions, v2.executions
    ))
}

fn criterion_8() -> Outcome {
    let adv = fixtures::load("halflink-2").unwrap();
    let SolvabilityVerdict::Solvable { table, .. } = solve(&adv, 6) else {
        return Err("halflink-2 not solvable".into());
    };
    let mut caught = 0;
    for (key, value) in &table.entries {
        let mut mutant = table.clone();
        let flipped = if *value == Value(0) { Value(1) } else { Value(0) };
        mutant.entries.insert(key.clone(), flipped);
        let v = exhaustive_verify(&adv, &mutant, 6, 1_000_000).unwrap();
        let failure = v.failure.ok_or_else(|| format!("flip of {key} not detected"))?;
        // The counterexample replays to the same violation.
        let inputs = adv.parse_inputs(&failure.inputs_arg).unwrap();
        let word = adv.parse_word(&failure.word_arg).unwrap();
        let trace = trace_execution(&adv, &inputs, &word, &mutant).unwrap();
        let decided: Vec<Value> = trace.decided().collect();
        let agree = decided.windows(2).all(|w| w[0] == w[1]);
        let ok = match failure.property {
            Property::Agreement => !agree,
            Property::Validity => agree && inputs.iter().all(|x| *x != decided[0]),
            Property::Termination => decided.len() < adv.n(),
        };
        check(ok, || format!("replay of {key} does not show {:?}", failure.property))?;
        caught += 1;
    }
    Ok(format!("{caught}/{} single-entry flips caught with replayable traces", table.len()))
}

trait MaxValue {
    fn max_value(self, other: Self) -> Self;
}

impl MaxValue for DyadicDistance {
    fn max_value(self, other: Self) -> Self {
        if self.cmp_value(other).is_ge() {
            self
        } else {
            other
        }
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("lossy-link impossibility", criterion_1),
        ("half-link solvability", criterion_2),
        ("three-process causal view", criterion_3),
        ("view-agreement distances", criterion_4),
        ("metric properties", criterion_5),
        ("broadcast diameter", criterion_6),
        ("window adversary", criterion_7),
        ("table mutation", criterion_8),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {title}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {title}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
