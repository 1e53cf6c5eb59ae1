//! The line-oriented fault description language (`.fdl`).
//!
//! ```text
//! # gates a..d of a small circuit
//! hypothesis A prior 0.016
//! hypothesis B prior 0.1
//! observable E
//! rule A => E
//! rule B & C => E
//! fact !(A & B)
//! observe E
//! treatment FixB targets B
//! utility FixB treat-faulty 1 treat-ok -1 skip-faulty 0 skip-ok 0
//! utility joint when A, !D given FixA value 3
//! ```
//!
//! Parsing is two-phase: syntax errors stop at the first [`ParseError`];
//! a syntactically clean document is then assembled into a [`Bundle`] and
//! validated, with every problem reported as a [`Finding`].

mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::formula::Formula;
use crate::model::{
    validate_model, validate_observations, validate_utility, AdditiveUtility, FaultModel, Finding,
    FindingKind, JointUtility, Literal, ObservationSet, UtilityModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}:{}: {message}", span.line, span.column)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Hypothesis { id: String, prior: f64 },
    Observable { id: String, free: bool },
    Rule { body: Vec<String>, head: String },
    Fact(Formula),
    Observe(Literal),
    Treatment { id: String, target: String },
    Utility(AdditiveUtility),
    JointUtility(JointUtility),
}

impl Statement {
    fn is_decision(&self) -> bool {
        matches!(
            self,
            Statement::Treatment { .. } | Statement::Utility(_) | Statement::JointUtility(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub statement: T,
    /// Span of the statement's first token.
    pub span: SourceSpan,
}

/// A parsed but not yet validated file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub statements: Vec<Located<Statement>>,
}

pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    Ok(Document {
        statements: parser::parse_lines(text)?,
    })
}

/// Parses a file that may hold only treatment and utility statements.
pub fn parse_utility_document(text: &str) -> Result<Document, ParseError> {
    let doc = parse_document(text)?;
    if let Some(bad) = doc.statements.iter().find(|s| !s.statement.is_decision()) {
        return Err(ParseError {
            span: bad.span,
            message: "utility files may only contain treatment and utility statements".into(),
            expected: vec!["`treatment`".into(), "`utility`".into()],
        });
    }
    Ok(doc)
}

/// Everything a fault description file can declare.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    pub model: FaultModel,
    /// `None` when the file has no `observe` statements.
    pub observations: Option<ObservationSet>,
    /// `None` when the file has no treatment or utility statements.
    pub utility: Option<UtilityModel>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid model: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Finding>),
}

/// Parses and validates a fault description.
pub fn parse_model_file(text: &str) -> Result<Bundle, DslError> {
    let (bundle, findings) = parse_document(text)?.assemble();
    if findings.is_empty() {
        Ok(bundle)
    } else {
        Err(DslError::Invalid(findings))
    }
}

impl Document {
    /// This document with its treatment and utility statements replaced by
    /// those of `decisions`.
    pub fn with_decisions_from(&self, decisions: &Document) -> Document {
        let statements = self
            .statements
            .iter()
            .filter(|s| !s.statement.is_decision())
            .chain(
                decisions
                    .statements
                    .iter()
                    .filter(|s| s.statement.is_decision()),
            )
            .cloned()
            .collect();
        Document { statements }
    }

    /// Builds the bundle and collects every validation finding.
    pub fn assemble(&self) -> (Bundle, Vec<Finding>) {
        let mut model = FaultModel::new();
        let mut observations: Option<ObservationSet> = None;
        let mut utility: Option<UtilityModel> = None;
        let mut findings = Vec::new();

        for located in &self.statements {
            match located.statement.clone() {
                Statement::Hypothesis { id, prior } => model = model.with_hypothesis(id, prior),
                Statement::Observable { id, free: false } => model = model.with_observable(id),
                Statement::Observable { id, free: true } => model = model.with_free_observable(id),
                Statement::Rule { body, head } => model = model.with_rule(body, head),
                Statement::Fact(f) => model = model.with_fact(f),
                Statement::Observe(lit) => {
                    let line = located.span.line;
                    if let Err(e) = observations
                        .get_or_insert_with(ObservationSet::new)
                        .insert(lit)
                    {
                        findings.push(Finding::new(
                            FindingKind::ContradictoryObservation,
                            format!("line {line}: {e}"),
                        ));
                    }
                }
                Statement::Treatment { id, target } => {
                    let u = utility.take().unwrap_or_default();
                    utility = Some(u.with_treatment(id, target));
                }
                Statement::Utility(a) => utility
                    .get_or_insert_with(UtilityModel::new)
                    .additive
                    .push(a),
                Statement::JointUtility(j) => {
                    utility.get_or_insert_with(UtilityModel::new).joint.push(j)
                }
            }
        }

        findings.extend(validate_model(&model));
        if let Some(obs) = &observations {
            findings.extend(validate_observations(&model, obs));
        }
        if let Some(u) = &utility {
            findings.extend(validate_utility(&model, u));
        }
        (
            Bundle {
                model,
                observations,
                utility,
            },
            findings,
        )
    }
}

fn list(lits: &[Literal]) -> String {
    if lits.is_empty() {
        "true".into()
    } else {
        lits.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Canonical `.fdl` text; parsing it yields an identical bundle.
impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.model;
        for h in m.hypotheses() {
            writeln!(f, "hypothesis {} prior {}", h.id, h.prior)?;
        }
        for o in m.observables() {
            writeln!(
                f,
                "observable {}{}",
                o.id,
                if o.free { " free" } else { "" }
            )?;
        }
        for r in m.rules() {
            let body = if r.body.is_empty() {
                "true".to_string()
            } else {
                r.body.join(" & ")
            };
            writeln!(f, "rule {body} => {}", r.head)?;
        }
        for fact in m.facts() {
            writeln!(f, "fact {fact}")?;
        }
        for lit in self.observations.iter().flat_map(|o| o.literals()) {
            writeln!(f, "observe {lit}")?;
        }
        if let Some(u) = &self.utility {
            for t in &u.treatments {
                writeln!(f, "treatment {} targets {}", t.id, t.target)?;
            }
            for a in &u.additive {
                writeln!(
                    f,
                    "utility {} treat-faulty {} treat-ok {} skip-faulty {} skip-ok {}",
                    a.treatment, a.treat_faulty, a.treat_ok, a.skip_faulty, a.skip_ok
                )?;
            }
            for j in &u.joint {
                writeln!(
                    f,
                    "utility joint when {} given {} value {}",
                    list(&j.when),
                    list(&j.given),
                    j.value
                )?;
            }
        }
        Ok(())
    }
}
