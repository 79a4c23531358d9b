use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use advtop_core::consensus::{exhaustive_verify, run_execution, DecisionTable, ExecutionTrace, Verdict};
use advtop_core::metrics::{distance_max, distance_min, distance_p};
use advtop_core::model::{PrefixPoint, ProcessId, ValidatedAdversary};
use advtop_core::ptgraph::{build_pt, causal_view};
use advtop_core::topology::limit::LimitWitness;
use advtop_core::topology::solve::DEFAULT_BUDGET;
use advtop_core::topology::{
    components_dot, decide_solvability, epsilon_components, SolvabilityReport, SolvabilityVerdict, SolveOptions,
};
use advtop_core::{fixtures, Error};

const EXIT_SOLVABLE: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_SPEC: u8 = 2;
const EXIT_INADMISSIBLE: u8 = 3;
const EXIT_IMPOSSIBLE: u8 = 10;
const EXIT_UNKNOWN: u8 = 11;

#[derive(Parser)]
#[command(name = "advtop", version, about = "Consensus solvability under message adversaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide consensus solvability for an adversary spec.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Write the decision table here when the adversary is solvable.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Run the synthesized algorithm on one input vector and word.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        inputs: String,
        #[arg(long)]
        word: String,
        /// Decision table to use; defaults to `<spec>.table.json` if present.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Write a process-time graph or the component graph as DOT.
    Export {
        #[command(flatten)]
        common: Common,
        what: ExportKind,
        target: PathBuf,
        #[arg(long)]
        inputs: Option<String>,
        #[arg(long)]
        word: Option<String>,
        /// Process whose causal view is highlighted.
        #[arg(long)]
        highlight: Option<u32>,
        /// Prefix depth of the component graph.
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Print view distances between two prefixes of equal depth.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Given twice: inputs of the first and second prefix.
        #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
        inputs: Vec<String>,
        /// Given twice: word of the first and second prefix.
        #[arg(long, num_args = 1, action = clap::ArgAction::Append, allow_hyphen_values = true)]
        word: Vec<String>,
    },
    /// Exhaustively check the decision table on all executions up to a depth.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Spec file, or the name of a bundled fixture.
    spec: String,
    #[arg(long, default_value_t = 6)]
    t_max: usize,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, env = "ADVTOP_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Ptgraph,
    Components,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InadmissibleWord(_) => EXIT_INADMISSIBLE,
            Error::EmptyAdversary(_)
            | Error::BadAlphabet(_)
            | Error::DeadEnd(_)
            | Error::BadAutomaton(_)
            | Error::BadValues(_)
            | Error::BadInputs(_)
            | Error::BadProcessSet(_)
            | Error::DepthMismatch { .. }
            | Error::Parse(_)
            | Error::Io(_) => EXIT_SPEC,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e)
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { common, table } => analyze(&common, table.as_deref()),
        Command::Simulate {
            common,
            inputs,
            word,
            table,
        } => simulate(&common, &inputs, &word, table.as_deref()),
        Command::Export {
            common,
            what,
            target,
            inputs,
            word,
            highlight,
            depth,
        } => export(&common, what, &target, inputs.as_deref(), word.as_deref(), highlight, depth),
        Command::Distance { common, inputs, word } => distance(&common, &inputs, &word),
        Command::Verify { common, depth, table } => verify(&common, depth, table.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_spec(spec: &str) -> Result<ValidatedAdversary, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {spec}"))
            .map_err(|e| Failure::new(EXIT_SPEC, e))?;
        return ValidatedAdversary::from_json(&text)
            .map_err(|e| Failure::new(EXIT_SPEC, anyhow!(e).context(format!("loading {spec}"))));
    }
    match fixtures::source(spec) {
        Some(text) => ValidatedAdversary::from_json(text).map_err(|e| Failure::new(EXIT_SPEC, e)),
        None => Err(Failure::new(
            EXIT_SPEC,
            anyhow!(
                "{spec}: no such file and no bundled fixture of that name (bundled: {})",
                fixtures::names().collect::<Vec<_>>().join(", ")
            ),
        )),
    }
}

fn options(common: &Common) -> SolveOptions {
    SolveOptions {
        t_max: common.t_max.max(1),
        horizon: common.horizon,
        budget: common.budget.max(1),
        ..SolveOptions::default()
    }
}

fn cached_table_path(spec: &str) -> PathBuf {
    PathBuf::from(format!("{spec}.table.json"))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|e| Failure::new(EXIT_SPEC, e))
}

fn analyze(common: &Common, table_out: Option<&Path>) -> CmdResult {
    let adv = load_spec(&common.spec)?;
    let report = decide_solvability(&adv, &options(common))?;
    match common.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", render_report(&adv, &report)),
    }
    if let (Some(path), SolvabilityVerdict::Solvable { table, .. }) = (table_out, &report.verdict) {
        write_file(path, &table.to_json())?;
    }
    Ok(match report.verdict {
        SolvabilityVerdict::Solvable { .. } => EXIT_SOLVABLE,
        SolvabilityVerdict::ImpossibleEvidence { .. } => EXIT_IMPOSSIBLE,
        SolvabilityVerdict::Unknown { .. } => EXIT_UNKNOWN,
    })
}

fn render_report(adv: &ValidatedAdversary, report: &SolvabilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "adversary: n = {}, graphs: {}", report.n, report.graphs.join(", "));
    match &report.verdict {
        SolvabilityVerdict::Solvable {
            depth,
            epsilon,
            components,
            table,
        } => {
            let _ = writeln!(out, "verdict: solvable");
            let _ = writeln!(out, "  epsilon = {epsilon}, decision round {depth}");
            let _ = writeln!(out, "  {}:", plural(components.len(), "component"));
            for c in components {
                let broadcast = match (c.broadcaster, c.by_round) {
                    (Some(p), Some(r)) => format!("broadcaster {p} by round {r}"),
                    _ => "no broadcaster".to_string(),
                };
                let shown: Vec<&str> = c.members.iter().take(6).map(String::as_str).collect();
                let more = if c.size > shown.len() {
                    format!(" ... ({} more)", c.size - shown.len())
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "    #{} size {} decides {}, {broadcast}: {}{more}",
                    c.id,
                    c.size,
                    c.value,
                    shown.join(" ")
                );
            }
            let _ = writeln!(out, "  decision table: {} views", table.len());
        }
        SolvabilityVerdict::ImpossibleEvidence { conflicts, witness } => {
            let _ = writeln!(out, "verdict: impossible (valence conflict at every depth)");
            for c in conflicts {
                let _ = writeln!(
                    out,
                    "  depth {}: component {} ({} prefixes) holds {} ({}-valent) and {} ({}-valent)",
                    c.depth, c.component, c.size, c.first, c.values.0, c.second, c.values.1
                );
            }
            match witness {
                Some(w) => out.push_str(&render_witness(adv, w)),
                None => {
                    let _ = writeln!(out, "  no limit witness found within the search bound");
                }
            }
        }
        SolvabilityVerdict::Unknown { t_max, horizon, reason } => {
            let horizon = horizon.map_or("depth".to_string(), |h| h.to_string());
            let _ = writeln!(out, "verdict: unknown (t_max {t_max}, horizon {horizon})");
            let _ = writeln!(out, "  {reason}");
        }
    }
    for d in &report.diagnostics {
        let _ = writeln!(
            out,
            "depth {}: {} prefixes, {}, {}, broadcastable {} / refuted {} / unknown {}",
            d.depth,
            d.prefixes,
            plural(d.components, "component"),
            if d.valence_clean { "valence-clean" } else { "valence conflict" },
            d.broadcastable,
            d.refuted,
            d.unknown
        );
    }
    out
}

fn plural(count: usize, noun: &str) -> String {
    if count == 1 {
        format!("1 {noun}")
    } else {
        format!("{count} {noun}s")
    }
}

fn render_witness(adv: &ValidatedAdversary, w: &LimitWitness) -> String {
    let mut out = String::new();
    let tracks: Vec<String> = w
        .tracks
        .iter()
        .map(|x| format!("({})", ValidatedAdversary::format_inputs(x)))
        .collect();
    let _ = writeln!(out, "  limit witness: {}", tracks.join(" ~ "));
    for (i, link) in w.links.iter().enumerate() {
        let changed: Vec<String> = link.changed.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            out,
            "    link {}: process {} never hears {{{}}} along [{}]({})^w",
            i + 1,
            link.process,
            changed.join(","),
            adv.format_word(&link.lasso.stem),
            adv.format_word(&link.lasso.cycle)
        );
    }
    if let Some(c) = &w.certificate {
        let _ = writeln!(out, "    sibling certificate with {} edges joins the differing words", c.edges.len());
    }
    out
}

fn load_table(adv: &ValidatedAdversary, common: &Common, explicit: Option<&Path>) -> Result<DecisionTable, Failure> {
    let cached = cached_table_path(&common.spec);
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None if cached.is_file() => Some(cached),
        None => None,
    };
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(|e| Failure::new(EXIT_SPEC, e))?;
        let table = DecisionTable::from_json(&text).map_err(|e| Failure::new(EXIT_SPEC, e))?;
        if table.n != adv.n() {
            return Err(Failure::new(
                EXIT_SPEC,
                anyhow!("table is for n = {}, spec has n = {}", table.n, adv.n()),
            ));
        }
        return Ok(table);
    }
    let report = decide_solvability(adv, &options(common))?;
    match report.verdict {
        SolvabilityVerdict::Solvable { table, .. } => Ok(table),
        _ => Err(Failure::new(
            EXIT_FAILURE,
            anyhow!("{} is not certified solvable, so there is no decision table", common.spec),
        )),
    }
}

fn simulate(common: &Common, inputs: &str, word: &str, table: Option<&Path>) -> CmdResult {
    let adv = load_spec(&common.spec)?;
    let inputs = adv.parse_inputs(inputs)?;
    let word = adv.parse_word(word)?;
    if !adv.is_admissible(&word) {
        return Err(Error::InadmissibleWord(adv.format_word(&word)).into());
    }
    let table = load_table(&adv, common, table)?;
    let trace = run_execution(&adv, &inputs, &word, &table)?;
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&trace).expect("trace serializes")),
        Format::Text => print!("{}", render_trace(&trace)),
    }
    Ok(EXIT_SOLVABLE)
}

fn render_trace(trace: &ExecutionTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "inputs: {}", ValidatedAdversary::format_inputs(&trace.inputs));
    let _ = writeln!(out, "word: {}", trace.word.join(","));
    for r in &trace.rounds {
        let heard: Vec<String> = r
            .processes
            .iter()
            .map(|p| {
                let h: Vec<String> = p.heard.iter().map(|q| q.to_string()).collect();
                format!("{} heard {{{}}}", p.process, h.join(","))
            })
            .collect();
        let _ = writeln!(out, "time {}: {}", r.round, heard.join("; "));
    }
    for d in &trace.decisions {
        match (d.round, d.value) {
            (Some(r), Some(v)) => {
                let _ = writeln!(out, "process {} decides {v} in round {r}", d.process);
            }
            _ => {
                let _ = writeln!(out, "process {} is undecided", d.process);
            }
        }
    }
    out
}

fn parse_point(adv: &ValidatedAdversary, inputs: Option<&str>, word: Option<&str>) -> Result<PrefixPoint, Failure> {
    let (Some(inputs), Some(word)) = (inputs, word) else {
        return Err(Failure::new(EXIT_SPEC, anyhow!("--inputs and --word are required")));
    };
    let point = PrefixPoint::new(adv.parse_inputs(inputs)?, adv.parse_word(word)?);
    adv.check_point(&point)?;
    Ok(point)
}

fn export(
    common: &Common,
    what: ExportKind,
    target: &Path,
    inputs: Option<&str>,
    word: Option<&str>,
    highlight: Option<u32>,
    depth: usize,
) -> CmdResult {
    let adv = load_spec(&common.spec)?;
    let dot = match what {
        ExportKind::Ptgraph => {
            let point = parse_point(&adv, inputs, word)?;
            let pt = build_pt(&adv, &point)?;
            let view = match highlight {
                Some(p) => Some(causal_view(&pt, &[ProcessId(p)], pt.depth())?),
                None => None,
            };
            pt.to_dot(view.as_ref())
        }
        ExportKind::Components => {
            let partition = epsilon_components(&adv, depth, common.budget)?;
            components_dot(&adv, &partition)
        }
    };
    write_file(target, &dot)?;
    Ok(EXIT_SOLVABLE)
}

fn distance(common: &Common, inputs: &[String], words: &[String]) -> CmdResult {
    let adv = load_spec(&common.spec)?;
    if inputs.len() != 2 || words.len() != 2 {
        return Err(Failure::new(
            EXIT_SPEC,
            anyhow!("give --inputs and --word exactly twice, once per prefix"),
        ));
    }
    let a = parse_point(&adv, Some(&inputs[0]), Some(&words[0]))?;
    let b = parse_point(&adv, Some(&inputs[1]), Some(&words[1]))?;
    let mut per_process = Vec::new();
    for p in adv.processes() {
        per_process.push((p, distance_p(&adv, &a, &b, &[p])?));
    }
    let d_min = distance_min(&adv, &a, &b)?;
    let d_max = distance_max(&adv, &a, &b)?;
    match common.format {
        Format::Json => {
            let value = serde_json::json!({
                "per_process": per_process
                    .iter()
                    .map(|(p, d)| serde_json::json!({ "process": p, "distance": d, "value": d.to_string() }))
                    .collect::<Vec<_>>(),
                "d_min": { "distance": d_min, "value": d_min.to_string() },
                "d_max": { "distance": d_max, "value": d_max.to_string() },
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        }
        Format::Text => {
            for (p, d) in &per_process {
                println!("d_{{{p}}} = {d}");
            }
            println!("d_min = {d_min}");
            println!("d_max = {d_max}");
        }
    }
    Ok(EXIT_SOLVABLE)
}

fn verify(common: &Common, depth: usize, table: Option<&Path>) -> CmdResult {
    let adv = load_spec(&common.spec)?;
    let table = load_table(&adv, common, table)?;
    let verdict = exhaustive_verify(&adv, &table, depth, common.budget)?;
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes")),
        Format::Text => print!("{}", render_verdict(&common.spec, &verdict)),
    }
    Ok(if verdict.passed { EXIT_SOLVABLE } else { EXIT_FAILURE })
}

fn render_verdict(spec: &str, v: &Verdict) -> String {
    let mut out = String::new();
    match &v.failure {
        None => {
            let _ = writeln!(out, "pass: {} executions of depth {} checked", v.executions, v.depth);
        }
        Some(f) => {
            let _ = writeln!(out, "fail: {:?} violated after {} executions", f.property, v.executions);
            out.push_str(&render_trace(&f.trace));
            let _ = writeln!(
                out,
                "replay: advtop simulate {spec} --inputs {} --word {}",
                f.inputs_arg, f.word_arg
            );
        }
    }
    out
}
