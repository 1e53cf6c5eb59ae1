use thiserror::Error;

use crate::decision::Dominance;
use crate::model::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),
    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),
    /// A free observable has no defining rules, so it has no truth value in
    /// any interpretation.
    #[error("observable `{0}` is free and has no definition")]
    UnconstrainedObservable(String),
    #[error("observable `{0}` observed with both polarities")]
    ContradictoryObservation(String),
    #[error("inconsistent scenario")]
    InconsistentScenario,
    #[error("observation unexplainable")]
    Unexplainable,
    #[error("abduction requires positive observations (`{0}` is negated)")]
    NegativeObservation(String),
    #[error("observation has zero probability")]
    ZeroProbability,
    #[error("too many hypotheses to enumerate: {count} exceeds the cap of {cap}")]
    TooManyHypotheses { count: usize, cap: usize },
    #[error("treatment space too large: {count} treatments exceeds the cap of {cap}")]
    TreatmentSpaceTooLarge { count: usize, cap: usize },
    #[error("no finite threshold: {0}")]
    NoFiniteThreshold(Dominance),
    #[error("covering mass must lie in (0, 1], got {0}")]
    InvalidMass(f64),
    #[error("invalid model: {}", render_findings(.0))]
    InvalidModel(Vec<Finding>),
}

fn render_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
