//! The competing definitions of a "best" diagnosis, each producing a ranked
//! candidate list from the same posterior table, plus a side-by-side report.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::decision::{optimal_treatment_on, TreatmentDecision};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::logic::{abductive_explanations, clark_completion, consistency_diagnoses};
use crate::model::{Diagnosis, FaultModel, Interpretation, ObservationSet, UtilityModel};
use crate::probability::{marginal, rank_key, PosteriorTable, DEFAULT_TIE_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Exactly one hypothesis faulty, ranked by the posterior of that
    /// full interpretation.
    SingleFault,
    /// Individual hypotheses ranked by marginal posterior.
    Posterior,
    /// Whole interpretations ranked by posterior.
    Mpe,
    /// Minimal fault sets consistent with the observations.
    Consistency,
    /// Minimal fault sets entailing the observations.
    Abductive,
    /// Expected-utility treatment choice.
    Utility,
}

impl Strategy {
    /// The strategies that rank diagnoses, in report order.
    pub const RANKING: [Strategy; 5] = [
        Strategy::SingleFault,
        Strategy::Posterior,
        Strategy::Mpe,
        Strategy::Consistency,
        Strategy::Abductive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SingleFault => "single-fault",
            Strategy::Posterior => "posterior",
            Strategy::Mpe => "mpe",
            Strategy::Consistency => "consistency",
            Strategy::Abductive => "abductive",
            Strategy::Utility => "utility",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Strategy::Utility]
            .into_iter()
            .chain(Strategy::RANKING)
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// What a candidate asserts: a (partial) fault set, or a full interpretation.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Diagnosis(Diagnosis),
    Interpretation {
        index: usize,
        interpretation: Interpretation,
        faulty: Vec<String>,
    },
}

impl Subject {
    fn interpretation(
        entry_index: usize,
        interpretation: Interpretation,
        hypotheses: &[String],
    ) -> Self {
        Subject::Interpretation {
            index: entry_index,
            interpretation,
            faulty: interpretation.faulty_ids(hypotheses),
        }
    }

    /// The hypotheses asserted faulty.
    pub fn faulty(&self) -> &[String] {
        match self {
            Subject::Diagnosis(d) => &d.faulty,
            Subject::Interpretation { faulty, .. } => faulty,
        }
    }

    /// The formula whose posterior is this candidate's score.
    pub fn formula(&self, hypotheses: &[String]) -> Formula {
        match self {
            Subject::Diagnosis(d) => d.to_formula(),
            Subject::Interpretation { interpretation, .. } => interpretation.to_formula(hypotheses),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub subject: Subject,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDiagnoses {
    pub strategy: Strategy,
    /// Non-increasing in score, up to 1e-12 of rounding noise between
    /// candidates that are ordered by position instead.
    pub candidates: Vec<Candidate>,
    /// Every candidate within the tie tolerance of the best score.
    pub ties: Vec<Candidate>,
}

impl RankedDiagnoses {
    fn new(strategy: Strategy, mut candidates: Vec<Candidate>) -> Self {
        candidates.sort_by_key(|c| std::cmp::Reverse(rank_key(c.score)));
        let ties = match candidates.first() {
            Some(top) => {
                let best = top.score;
                candidates
                    .iter()
                    .take_while(|c| best - c.score <= DEFAULT_TIE_EPSILON)
                    .cloned()
                    .collect()
            }
            None => Vec::new(),
        };
        RankedDiagnoses {
            strategy,
            candidates,
            ties,
        }
    }

    pub fn leader(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    /// Fault sets of the tied leaders, deduplicated, in diagnosis order.
    pub fn leader_fault_sets(&self) -> Vec<Vec<String>> {
        let mut sets: Vec<Vec<String>> = Vec::new();
        for c in &self.ties {
            let set = c.subject.faulty().to_vec();
            if !sets.contains(&set) {
                sets.push(set);
            }
        }
        sets
    }
}

struct Prepared {
    table: PosteriorTable,
}

impl Prepared {
    fn new(model: &FaultModel, obs: &ObservationSet) -> Result<Self> {
        let theory = clark_completion(model)?;
        Ok(Prepared {
            table: PosteriorTable::compute(model, &theory, obs)?,
        })
    }
}

fn single_fault_on(table: &PosteriorTable) -> RankedDiagnoses {
    let width = table.hypotheses().len();
    let candidates = (0..width)
        .map(|k| Interpretation::from_fault_mask(1 << k, width))
        .map(|interp| (interp.index(), interp))
        .filter(|(index, _)| table.posterior(*index) > 0.0)
        .map(|(index, interp)| Candidate {
            subject: Subject::interpretation(index, interp, table.hypotheses()),
            score: table.posterior(index),
        })
        .collect();
    RankedDiagnoses::new(Strategy::SingleFault, candidates)
}

fn posterior_on(table: &PosteriorTable) -> Result<RankedDiagnoses> {
    let candidates = table
        .hypotheses()
        .iter()
        .map(|h| {
            let score = marginal(table, &Formula::atom(h.clone()))?;
            Ok(Candidate {
                subject: Subject::Diagnosis(Diagnosis {
                    faulty: vec![h.clone()],
                    probability: Some(score),
                }),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedDiagnoses::new(Strategy::Posterior, candidates))
}

fn mpe_on(table: &PosteriorTable) -> RankedDiagnoses {
    // ties keep index order because the sort is stable
    let candidates = table
        .support()
        .map(|e| Candidate {
            subject: Subject::interpretation(e.index, e.interpretation, table.hypotheses()),
            score: e.posterior,
        })
        .collect();
    RankedDiagnoses::new(Strategy::Mpe, candidates)
}

fn scored(
    strategy: Strategy,
    table: &PosteriorTable,
    diagnoses: Vec<Diagnosis>,
) -> Result<RankedDiagnoses> {
    let candidates = diagnoses
        .into_iter()
        .map(|mut d| {
            let score = marginal(table, &d.to_formula())?;
            d.probability = Some(score);
            Ok(Candidate {
                subject: Subject::Diagnosis(d),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedDiagnoses::new(strategy, candidates))
}

fn consistency_on(table: &PosteriorTable, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    let diagnoses = consistency_diagnoses(table.theory(), obs)?;
    scored(Strategy::Consistency, table, diagnoses)
}

fn abductive_on(table: &PosteriorTable, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    let diagnoses = abductive_explanations(table.theory(), obs)?;
    scored(Strategy::Abductive, table, diagnoses)
}

fn run_on(
    strategy: Strategy,
    table: &PosteriorTable,
    obs: &ObservationSet,
) -> Result<RankedDiagnoses> {
    match strategy {
        Strategy::SingleFault => Ok(single_fault_on(table)),
        Strategy::Posterior => posterior_on(table),
        Strategy::Mpe => Ok(mpe_on(table)),
        Strategy::Consistency => consistency_on(table, obs),
        Strategy::Abductive => abductive_on(table, obs),
        Strategy::Utility => unreachable!("utility is not a ranking strategy"),
    }
}

/// Interpretations with exactly one fault, scored by their posterior.
/// An empty list means no single fault is possible.
pub fn diagnose_single_fault(model: &FaultModel, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    Ok(single_fault_on(&Prepared::new(model, obs)?.table))
}

/// Every hypothesis, scored by its marginal posterior.
pub fn diagnose_posterior(model: &FaultModel, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    posterior_on(&Prepared::new(model, obs)?.table)
}

/// Every possible interpretation, scored by its posterior.
pub fn diagnose_mpe(model: &FaultModel, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    Ok(mpe_on(&Prepared::new(model, obs)?.table))
}

/// Minimal consistency-based diagnoses, each scored by the posterior of
/// the conjunction of its faults (normal hypotheses left free).
pub fn diagnose_consistency(model: &FaultModel, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    consistency_on(&Prepared::new(model, obs)?.table, obs)
}

/// Minimal abductive explanations, scored like [`diagnose_consistency`].
pub fn diagnose_abductive(model: &FaultModel, obs: &ObservationSet) -> Result<RankedDiagnoses> {
    if let Some(neg) = obs.literals().iter().find(|l| !l.positive) {
        return Err(Error::NegativeObservation(neg.id.clone()));
    }
    abductive_on(&Prepared::new(model, obs)?.table, obs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub result: Result<RankedDiagnoses, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub outcomes: Vec<StrategyOutcome>,
    pub treatment: Option<Result<TreatmentDecision, Error>>,
    /// Leader fault sets per strategy that produced a leader. A utility
    /// decision projects to the targets of the chosen treatments.
    pub leaders: Vec<(Strategy, Vec<Vec<String>>)>,
    /// Pairs of strategies whose projected leaders differ.
    pub disagreements: Vec<(Strategy, Strategy)>,
    pub evidence_probability: Option<f64>,
}

impl StrategyReport {
    pub fn agreed(&self) -> bool {
        self.disagreements.is_empty()
    }

    pub fn outcome(&self, strategy: Strategy) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == strategy)
    }

    pub fn leader(&self, strategy: Strategy) -> Option<&[Vec<String>]> {
        self.leaders
            .iter()
            .find(|(s, _)| *s == strategy)
            .map(|(_, sets)| sets.as_slice())
    }

    /// Strategies that could not run, with the reason.
    pub fn findings(&self) -> Vec<(Strategy, &Error)> {
        let mut out: Vec<(Strategy, &Error)> = self
            .outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (o.strategy, e)))
            .collect();
        if let Some(Err(e)) = &self.treatment {
            out.push((Strategy::Utility, e));
        }
        out
    }
}

/// Runs every ranking strategy (and the utility strategy when a utility is
/// given) on one posterior table and reports where their leaders differ.
///
/// Only an invalid model is an error; anything a single strategy cannot
/// handle is recorded in its outcome.
pub fn compare_strategies(
    model: &FaultModel,
    obs: &ObservationSet,
    utility: Option<&UtilityModel>,
) -> Result<StrategyReport> {
    let theory = clark_completion(model)?;
    let table = PosteriorTable::compute(model, &theory, obs);

    let outcomes: Vec<StrategyOutcome> = Strategy::RANKING
        .into_iter()
        .map(|strategy| {
            let result = match (&table, strategy) {
                // report the precondition before any table problem
                (_, Strategy::Abductive) if obs.literals().iter().any(|l| !l.positive) => {
                    let neg = obs.literals().iter().find(|l| !l.positive).unwrap();
                    Err(Error::NegativeObservation(neg.id.clone()))
                }
                (Ok(table), _) => run_on(strategy, table, obs),
                (Err(e), _) => Err(e.clone()),
            };
            StrategyOutcome { strategy, result }
        })
        .collect();

    let treatment = utility.map(|u| {
        let findings = crate::model::validate_utility(model, u);
        if !findings.is_empty() {
            return Err(Error::InvalidModel(findings));
        }
        table
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|t| optimal_treatment_on(t, u))
    });

    let mut leaders: Vec<(Strategy, Vec<Vec<String>>)> = outcomes
        .iter()
        .filter_map(|o| match &o.result {
            Ok(ranked) if !ranked.ties.is_empty() => Some((o.strategy, ranked.leader_fault_sets())),
            _ => None,
        })
        .collect();
    if let (Some(Ok(decision)), Some(u)) = (&treatment, utility) {
        let mut targets: Vec<usize> = decision
            .chosen
            .iter()
            .filter_map(|id| u.treatment(id))
            .filter_map(|t| model.hypothesis_index(&t.target))
            .collect();
        targets.sort_unstable();
        targets.dedup();
        let ids = model.hypothesis_ids();
        leaders.push((
            Strategy::Utility,
            vec![targets.into_iter().map(|k| ids[k].clone()).collect()],
        ));
    }

    let mut disagreements = Vec::new();
    for (i, (a, la)) in leaders.iter().enumerate() {
        for (b, lb) in &leaders[i + 1..] {
            if la != lb {
                disagreements.push((*a, *b));
            }
        }
    }

    Ok(StrategyReport {
        outcomes,
        treatment,
        leaders,
        disagreements,
        evidence_probability: table
            .as_ref()
            .ok()
            .map(PosteriorTable::evidence_probability),
    })
}
