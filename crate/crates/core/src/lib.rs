//! Diagnosis over propositional fault models.
//!
//! A [`FaultModel`] declares independent fault hypotheses with priors, the
//! observables they cause, and optional hard constraints. Given observations,
//! the crate computes the exact posterior over every interpretation of the
//! hypotheses and ranks diagnoses under several competing notions of
//! "best": single fault, most likely posterior hypothesis, most likely
//! interpretation, consistency-based, abductive, and expected-utility
//! treatment selection.
//!
//! Everything is decided by exhaustive enumeration, which keeps the results
//! exact and easy to audit for models of a few dozen hypotheses at most.

pub mod cli;
pub mod decision;
pub mod dsl;
pub mod error;
pub mod formula;
pub mod logic;
pub mod model;
pub mod probability;
pub mod strategy;

pub use decision::{
    additive_fix_threshold, expected_utility, optimal_treatment, Dominance, TreatmentDecision,
    TreatmentSet,
};
pub use dsl::{parse_model_file, Bundle, DslError, ParseError, SourceSpan};
pub use error::{Error, Result};
pub use formula::Formula;
pub use logic::{
    abductive_explanations, clark_completion, consistency_diagnoses, evaluate_formula,
    maximal_scenarios, scenario_consistent, scenario_explains, CompletedTheory, Limits, Scenario,
};
pub use model::{
    validate_model, validate_observations, validate_utility, AdditiveUtility, CausalRule,
    Diagnosis, FaultModel, Finding, FindingKind, Hypothesis, Interpretation, JointUtility, Literal,
    ObservableVar, ObservationSet, TreatmentAction, UtilityModel,
};
pub use probability::{
    covering_mass_set, joint_prior, marginal, most_likely_interpretations, posterior_table,
    PosteriorTable, TableEntry, DEFAULT_TIE_EPSILON,
};
pub use strategy::{
    compare_strategies, diagnose_abductive, diagnose_consistency, diagnose_mpe, diagnose_posterior,
    diagnose_single_fault, Candidate, RankedDiagnoses, Strategy, StrategyOutcome, StrategyReport,
    Subject,
};
