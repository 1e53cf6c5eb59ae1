//! The `diagnoscope` command line.
//!
//! [`run_cli`] does all the work and returns the rendered streams, so the
//! binary is a thin wrapper and tests can drive the CLI in process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::decision::{optimal_treatment_on, TreatmentDecision};
use crate::dsl::{parse_document, parse_utility_document, Bundle, Document, Statement};
use crate::error::Error;
use crate::logic::clark_completion;
use crate::model::{validate_observations, Finding, Literal, ObservationSet};
use crate::probability::{covering_mass_set, PosteriorTable, TableEntry};
use crate::strategy::{
    compare_strategies, Candidate, RankedDiagnoses, Strategy, StrategyReport, Subject,
};

/// What one invocation printed and how it exited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(stdout: String) -> Self {
        CliOutput {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diagnoscope",
    version,
    about = "Compare diagnosis strategies on propositional fault models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Check(Common),
    /// Print the posterior of every interpretation.
    Interpretations(Common),
    /// Rank diagnoses under one or all strategies.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = StrategyArg::All)]
        strategy: StrategyArg,
        /// Treatment and utility statements replacing those in the model file.
        #[arg(long)]
        utility: Option<PathBuf>,
    },
    /// Choose the treatment set of highest expected utility.
    Treat {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        utility: Option<PathBuf>,
    },
    /// The most probable interpretations that together reach a probability mass.
    Cover {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mass: f64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Model file (.fdl).
    file: PathBuf,
    /// Observed literal such as `E`, `!E` or `~E`; replaces the file's observations.
    #[arg(long, value_name = "LITERAL")]
    observe: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    SingleFault,
    Posterior,
    Mpe,
    Consistency,
    Abductive,
    All,
}

impl StrategyArg {
    fn strategy(self) -> Option<Strategy> {
        match self {
            StrategyArg::SingleFault => Some(Strategy::SingleFault),
            StrategyArg::Posterior => Some(Strategy::Posterior),
            StrategyArg::Mpe => Some(Strategy::Mpe),
            StrategyArg::Consistency => Some(Strategy::Consistency),
            StrategyArg::Abductive => Some(Strategy::Abductive),
            StrategyArg::All => None,
        }
    }
}

/// A failed invocation: exit code and the message for the error stream.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn findings(findings: &[Finding]) -> Self {
        let mut message = String::new();
        for f in findings {
            let _ = writeln!(message, "{f}");
        }
        Failure { code: 1, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(findings) => Failure::findings(&findings),
            other => Failure::domain(format!("error: {other}")),
        }
    }
}

/// Runs one command line; the first argument is the program name.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CliOutput::ok(text)
            };
        }
    };
    match dispatch(cli.command) {
        Ok(stdout) => CliOutput::ok(stdout),
        Err(f) => {
            let mut stderr = f.message;
            if !stderr.ends_with('\n') {
                stderr.push('\n');
            }
            CliOutput {
                code: f.code,
                stdout: String::new(),
                stderr,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Check(common) => {
            let bundle = load(&common, None)?;
            Ok(render_check(&bundle, common.format))
        }
        Command::Interpretations(common) => {
            let (obs, table) = tabulate(&common)?;
            Ok(render_interpretations(&table, &obs, common.format))
        }
        Command::Diagnose {
            common,
            strategy,
            utility,
        } => {
            let bundle = load(&common, utility.as_deref())?;
            let obs = bundle.observations.clone().unwrap_or_default();
            match strategy.strategy() {
                Some(s) => {
                    let ranked = match s {
                        Strategy::SingleFault => crate::diagnose_single_fault(&bundle.model, &obs),
                        Strategy::Posterior => crate::diagnose_posterior(&bundle.model, &obs),
                        Strategy::Mpe => crate::diagnose_mpe(&bundle.model, &obs),
                        Strategy::Consistency => crate::diagnose_consistency(&bundle.model, &obs),
                        Strategy::Abductive => crate::diagnose_abductive(&bundle.model, &obs),
                        Strategy::Utility => unreachable!(),
                    }?;
                    let (_, table) = tabulate_bundle(&bundle)?;
                    Ok(render_ranked(
                        &ranked,
                        table.evidence_probability(),
                        common.format,
                    ))
                }
                None => {
                    let report = compare_strategies(&bundle.model, &obs, bundle.utility.as_ref())?;
                    Ok(render_report(
                        &report,
                        bundle.utility.is_some(),
                        common.format,
                    ))
                }
            }
        }
        Command::Treat { common, utility } => {
            let bundle = load(&common, utility.as_deref())?;
            let Some(u) = bundle.utility.clone() else {
                return Err(Failure::usage(
                    "error: no treatments declared; add them to the model or pass --utility",
                ));
            };
            let (_, table) = tabulate_bundle(&bundle)?;
            let decision = optimal_treatment_on(&table, &u)?;
            Ok(render_treatment(
                &decision,
                table.evidence_probability(),
                common.format,
            ))
        }
        Command::Cover { common, mass } => {
            let (_, table) = tabulate(&common)?;
            let rows = covering_mass_set(&table, mass)?;
            Ok(render_cover(&table, &rows, common.format))
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("error: cannot read {}: {e}", path.display())))
}

fn parse_observation(text: &str) -> Result<Literal, Failure> {
    let (positive, id) = match text.strip_prefix(['!', '~']) {
        Some(rest) => (false, rest),
        None => (true, text),
    };
    let valid = id
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if !valid {
        return Err(Failure::usage(format!(
            "error: malformed observation `{text}`"
        )));
    }
    Ok(Literal {
        id: id.to_string(),
        positive,
    })
}

/// Reads, merges, parses and validates everything one command needs.
fn load(common: &Common, utility: Option<&Path>) -> Result<Bundle, Failure> {
    let text = read(&common.file)?;
    let parse_failure =
        |path: &Path, e: crate::dsl::ParseError| Failure::usage(format!("{}:{e}", path.display()));
    let mut doc = parse_document(&text).map_err(|e| parse_failure(&common.file, e))?;
    if let Some(path) = utility {
        let decisions = parse_utility_document(&read(path)?).map_err(|e| parse_failure(path, e))?;
        doc = doc.with_decisions_from(&decisions);
    }

    let flagged = common
        .observe
        .iter()
        .map(|o| parse_observation(o))
        .collect::<Result<Vec<_>, _>>()?;
    if !flagged.is_empty() {
        doc = Document {
            statements: doc
                .statements
                .into_iter()
                .filter(|s| !matches!(s.statement, Statement::Observe(_)))
                .collect(),
        };
    }

    let (mut bundle, findings) = doc.assemble();
    if !findings.is_empty() {
        return Err(Failure::findings(&findings));
    }
    if !flagged.is_empty() {
        let obs = ObservationSet::from_literals(flagged)?;
        let findings = validate_observations(&bundle.model, &obs);
        if !findings.is_empty() {
            return Err(Failure::findings(&findings));
        }
        bundle.observations = Some(obs);
    }
    Ok(bundle)
}

fn tabulate_bundle(bundle: &Bundle) -> Result<(ObservationSet, PosteriorTable), Failure> {
    let obs = bundle.observations.clone().unwrap_or_default();
    let theory = clark_completion(&bundle.model)?;
    let table = PosteriorTable::compute(&bundle.model, &theory, &obs)?;
    Ok((obs, table))
}

fn tabulate(common: &Common) -> Result<(ObservationSet, PosteriorTable), Failure> {
    tabulate_bundle(&load(common, None)?)
}

fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn number(x: f64) -> Value {
    json!({ "value": x, "rounded": round4(x) })
}

fn fixed(x: f64) -> String {
    format!("{:.4}", round4(x))
}

fn dollars(x: f64) -> String {
    let r = round4(x);
    if r < 0.0 {
        format!("-${:.4}", -r)
    } else {
        format!("${r:.4}")
    }
}

fn fault_set(faulty: &[String]) -> String {
    if faulty.is_empty() {
        "{}".into()
    } else {
        faulty.join(",")
    }
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values always serialize");
    s.push('\n');
    s
}

fn render_check(bundle: &Bundle, format: Format) -> String {
    let m = &bundle.model;
    let obs = bundle
        .observations
        .as_ref()
        .map(|o| o.literals().len())
        .unwrap_or(0);
    let treatments = bundle
        .utility
        .as_ref()
        .map(|u| u.treatments.len())
        .unwrap_or(0);
    match format {
        Format::Table => format!(
            "ok: {} hypotheses, {} observables, {} rules, {} facts, {} observations, {} treatments\n",
            m.hypotheses().len(),
            m.observables().len(),
            m.rules().len(),
            m.facts().len(),
            obs,
            treatments
        ),
        Format::Json => to_json(&json!({
            "strategy": "check",
            "candidates": [],
            "scores": [],
            "evidence_probability": Value::Null,
            "hypotheses": m.hypotheses().len(),
            "observables": m.observables().len(),
            "rules": m.rules().len(),
            "facts": m.facts().len(),
            "observations": obs,
            "treatments": treatments,
        })),
    }
}

fn observed(obs: &ObservationSet) -> String {
    if obs.is_empty() {
        "(nothing)".into()
    } else {
        obs.literals()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn entry_rows(table: &PosteriorTable, rows: &[TableEntry], cumulative: bool) -> String {
    let hyps = table.hypotheses();
    let mut out = String::from("index");
    for h in hyps {
        let _ = write!(out, "  {h}");
    }
    out.push_str("  posterior");
    if cumulative {
        out.push_str("  cumulative");
    }
    out.push('\n');
    let mut total = 0.0;
    for e in rows {
        total += e.posterior;
        let _ = write!(out, "{:>5}", e.index);
        for (k, h) in hyps.iter().enumerate() {
            let value = if e.interpretation.is_faulty(k) {
                "T"
            } else {
                "F"
            };
            let _ = write!(out, "  {value:>w$}", w = h.chars().count());
        }
        let _ = write!(out, "  {:>9}", fixed(e.posterior));
        if cumulative {
            let _ = write!(out, "  {:>10}", fixed(total));
        }
        out.push('\n');
    }
    out
}

fn entry_json(table: &PosteriorTable, rows: &[TableEntry]) -> (Vec<Value>, Vec<Value>) {
    let candidates = rows
        .iter()
        .map(|e| json!({ "index": e.index, "faulty": e.interpretation.faulty_ids(table.hypotheses()) }))
        .collect();
    let scores = rows.iter().map(|e| number(e.posterior)).collect();
    (candidates, scores)
}

fn render_interpretations(table: &PosteriorTable, obs: &ObservationSet, format: Format) -> String {
    let rows: Vec<TableEntry> = table.entries().collect();
    match format {
        Format::Table => format!(
            "observed: {}\nevidence probability: {}\n\n{}",
            observed(obs),
            fixed(table.evidence_probability()),
            entry_rows(table, &rows, false)
        ),
        Format::Json => {
            let (candidates, scores) = entry_json(table, &rows);
            to_json(&json!({
                "strategy": "interpretations",
                "candidates": candidates,
                "scores": scores,
                "evidence_probability": number(table.evidence_probability()),
            }))
        }
    }
}

fn render_cover(table: &PosteriorTable, rows: &[TableEntry], format: Format) -> String {
    let covered: f64 = rows.iter().map(|e| e.posterior).sum();
    match format {
        Format::Table => format!(
            "evidence probability: {}\ncovered mass: {}\n\n{}",
            fixed(table.evidence_probability()),
            fixed(covered),
            entry_rows(table, rows, true)
        ),
        Format::Json => {
            let (candidates, scores) = entry_json(table, rows);
            to_json(&json!({
                "strategy": "cover",
                "candidates": candidates,
                "scores": scores,
                "evidence_probability": number(table.evidence_probability()),
                "covered": number(covered),
            }))
        }
    }
}

fn candidate_json(c: &Candidate) -> Value {
    match &c.subject {
        Subject::Diagnosis(d) => json!({ "faulty": d.faulty }),
        Subject::Interpretation { index, faulty, .. } => {
            json!({ "index": index, "faulty": faulty })
        }
    }
}

fn ranked_lines(out: &mut String, ranked: &RankedDiagnoses, indent: &str) {
    if ranked.candidates.is_empty() {
        let _ = writeln!(out, "{indent}(no candidates)");
        return;
    }
    let labels: Vec<String> = ranked
        .candidates
        .iter()
        .map(|c| fault_set(c.subject.faulty()))
        .collect();
    let width = labels
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max("candidate".len());
    let _ = writeln!(out, "{indent}rank  {:<width$}  score", "candidate");
    for (i, (c, label)) in ranked.candidates.iter().zip(&labels).enumerate() {
        let _ = writeln!(
            out,
            "{indent}{:>4}  {label:<width$}  {}",
            i + 1,
            fixed(c.score)
        );
    }
}

fn render_ranked(ranked: &RankedDiagnoses, evidence: f64, format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = format!(
                "strategy: {}\nevidence probability: {}\n\n",
                ranked.strategy,
                fixed(evidence)
            );
            ranked_lines(&mut out, ranked, "");
            out
        }
        Format::Json => to_json(&json!({
            "strategy": ranked.strategy,
            "candidates": ranked.candidates.iter().map(candidate_json).collect::<Vec<_>>(),
            "scores": ranked.candidates.iter().map(|c| number(c.score)).collect::<Vec<_>>(),
            "evidence_probability": number(evidence),
        })),
    }
}

fn chosen_label(decision: &TreatmentDecision) -> String {
    if decision.chosen.is_empty() {
        "{}".into()
    } else {
        decision
            .chosen
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn treatment_lines(out: &mut String, decision: &TreatmentDecision, indent: &str) {
    let _ = writeln!(out, "{indent}chosen: {}", chosen_label(decision));
    let _ = writeln!(
        out,
        "{indent}expected utility: {}",
        dollars(decision.expected_utility)
    );
    if let Some(breakdown) = &decision.per_treatment_breakdown {
        let width = breakdown
            .keys()
            .map(|k| k.chars().count())
            .max()
            .unwrap_or(0);
        let _ = writeln!(out, "{indent}contributions:");
        for (id, value) in breakdown {
            let _ = writeln!(out, "{indent}  {id:<width$}  {}", dollars(*value));
        }
    }
}

fn treatment_json(decision: &TreatmentDecision) -> (Value, Value) {
    let breakdown = decision.per_treatment_breakdown.as_ref().map(|b| {
        b.iter()
            .map(|(k, v)| (k.clone(), number(*v)))
            .collect::<serde_json::Map<_, _>>()
    });
    (
        json!({ "chosen": decision.chosen, "contributions": breakdown }),
        number(decision.expected_utility),
    )
}

fn render_treatment(decision: &TreatmentDecision, evidence: f64, format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = format!("evidence probability: {}\n", fixed(evidence));
            treatment_lines(&mut out, decision, "");
            out
        }
        Format::Json => {
            let (candidate, score) = treatment_json(decision);
            to_json(&json!({
                "strategy": Strategy::Utility,
                "candidates": [candidate],
                "scores": [score],
                "evidence_probability": number(evidence),
            }))
        }
    }
}

fn leader_label(sets: &[Vec<String>]) -> String {
    sets.iter()
        .map(|s| fault_set(s))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn render_report(report: &StrategyReport, with_utility: bool, format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = String::new();
            if let Some(z) = report.evidence_probability {
                let _ = writeln!(out, "evidence probability: {}", fixed(z));
            }
            for o in &report.outcomes {
                let _ = writeln!(out, "\n[{}]", o.strategy);
                match &o.result {
                    Ok(ranked) => ranked_lines(&mut out, ranked, "  "),
                    Err(e) => {
                        let _ = writeln!(out, "  not applicable: {e}");
                    }
                }
            }
            if with_utility {
                let _ = writeln!(out, "\n[{}]", Strategy::Utility);
                match &report.treatment {
                    Some(Ok(decision)) => treatment_lines(&mut out, decision, "  "),
                    Some(Err(e)) => {
                        let _ = writeln!(out, "  not applicable: {e}");
                    }
                    None => {}
                }
            }
            let _ = writeln!(out, "\nleaders:");
            let width = report
                .leaders
                .iter()
                .map(|(s, _)| s.name().len())
                .max()
                .unwrap_or(0);
            for (s, sets) in &report.leaders {
                let _ = writeln!(out, "  {:<width$}  {}", s.name(), leader_label(sets));
            }
            if report.agreed() {
                let _ = writeln!(out, "all strategies agree");
            } else {
                let _ = writeln!(out, "disagreements:");
                for (a, b) in &report.disagreements {
                    let _ = writeln!(out, "  {a} vs {b}");
                }
            }
            out
        }
        Format::Json => {
            let mut candidates = serde_json::Map::new();
            let mut scores = serde_json::Map::new();
            let mut findings = serde_json::Map::new();
            for o in &report.outcomes {
                let key = o.strategy.name().to_string();
                match &o.result {
                    Ok(r) => {
                        candidates.insert(
                            key.clone(),
                            r.candidates.iter().map(candidate_json).collect(),
                        );
                        scores.insert(key, r.candidates.iter().map(|c| number(c.score)).collect());
                    }
                    Err(e) => {
                        findings.insert(key, Value::String(e.to_string()));
                    }
                }
            }
            match &report.treatment {
                Some(Ok(decision)) => {
                    let (candidate, score) = treatment_json(decision);
                    candidates.insert("utility".into(), json!([candidate]));
                    scores.insert("utility".into(), json!([score]));
                }
                Some(Err(e)) => {
                    findings.insert("utility".into(), Value::String(e.to_string()));
                }
                None => {}
            }
            let leaders: serde_json::Map<_, _> = report
                .leaders
                .iter()
                .map(|(s, sets)| (s.name().to_string(), json!(sets)))
                .collect();
            to_json(&json!({
                "strategy": "all",
                "candidates": candidates,
                "scores": scores,
                "evidence_probability": report.evidence_probability.map(number),
                "leaders": leaders,
                "disagreements": report.disagreements.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
                "findings": findings,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_flags() {
        assert_eq!(parse_observation("E").ok().unwrap(), Literal::positive("E"));
        assert_eq!(
            parse_observation("!E").ok().unwrap(),
            Literal::negative("E")
        );
        assert_eq!(
            parse_observation("~E").ok().unwrap(),
            Literal::negative("E")
        );
        assert!(parse_observation("!").is_err());
        assert!(parse_observation("E F").is_err());
    }

    #[test]
    fn rendering_rounds_to_four_places() {
        assert_eq!(fixed(0.26388), "0.2639");
        assert_eq!(dollars(0.26388), "$0.2639");
        assert_eq!(dollars(-0.151314), "-$0.1513");
        assert_eq!(dollars(-0.00001), "$0.0000");
        assert_eq!(number(0.40895)["rounded"], json!(0.409));
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let out = run_cli(["diagnoscope", "check", "x.fdl", "--bogus"]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("Usage"));
        assert!(out.stdout.is_empty());
    }

    #[test]
    fn missing_files_are_usage_errors() {
        let out = run_cli(["diagnoscope", "check", "/nonexistent/model.fdl"]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.starts_with("error: cannot read"));
    }

    #[test]
    fn help_goes_to_stdout() {
        let out = run_cli(["diagnoscope", "--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("interpretations"));
    }
}
