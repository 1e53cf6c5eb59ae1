//! Treatment selection by expected utility over the posterior table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{validate_utility, AdditiveUtility, FaultModel, ObservationSet, UtilityModel};
use crate::probability::{posterior_table, PosteriorTable, DEFAULT_TIE_EPSILON};

pub type TreatmentSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentDecision {
    pub chosen: TreatmentSet,
    pub expected_utility: f64,
    /// Each declared treatment's expected contribution under the chosen set.
    /// Only present when the utility has no joint entries.
    pub per_treatment_breakdown: Option<BTreeMap<String, f64>>,
}

/// Why an additive entry has no "treat above probability t" rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// Not treating is at least as good for every probability of fault.
    NeverTreat,
    /// Treating is strictly better for every probability of fault.
    AlwaysTreat,
    /// Treating and not treating always have equal expected utility.
    Indifferent,
    /// Treating pays only when the fault is *unlikely*.
    Inverted,
}

impl fmt::Display for Dominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dominance::NeverTreat => "dominated, treating never pays",
            Dominance::AlwaysTreat => "dominated, treating always pays",
            Dominance::Indifferent => "degenerate, treating never changes the outcome",
            Dominance::Inverted => "inverted, treating pays only below a threshold",
        })
    }
}

/// The probability `t` such that applying the treatment beats skipping it
/// exactly when the target's posterior exceeds `t`.
pub fn additive_fix_threshold(entry: &AdditiveUtility) -> Result<f64> {
    // treat iff p * gain > (1 - p) * loss
    let gain = entry.treat_faulty - entry.skip_faulty;
    let loss = entry.skip_ok - entry.treat_ok;
    let slope = gain + loss;
    let dominance = if slope > 0.0 {
        let t = loss / slope;
        if t >= 1.0 {
            Dominance::NeverTreat
        } else if t < 0.0 {
            Dominance::AlwaysTreat
        } else {
            return Ok(t);
        }
    } else if slope == 0.0 {
        match loss.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => Dominance::AlwaysTreat,
            Some(std::cmp::Ordering::Equal) => Dominance::Indifferent,
            _ => Dominance::NeverTreat,
        }
    } else {
        // treat iff p < loss / slope
        let s = loss / slope;
        if s <= 0.0 {
            Dominance::NeverTreat
        } else if s > 1.0 {
            Dominance::AlwaysTreat
        } else {
            Dominance::Inverted
        }
    };
    Err(Error::NoFiniteThreshold(dominance))
}

struct CompiledTreatment {
    id: String,
    target: usize,
    entry: [f64; 4],
}

struct CompiledJoint {
    faulty: u64,
    normal: u64,
    applied: u64,
    skipped: u64,
    value: f64,
}

/// Utility with ids resolved to bit positions: hypotheses by declaration
/// order, treatments by declaration order in the utility model.
struct CompiledUtility {
    treatments: Vec<CompiledTreatment>,
    joint: Vec<CompiledJoint>,
}

impl CompiledUtility {
    fn new(hypotheses: &[String], utility: &UtilityModel) -> Result<Self> {
        let hyp = |id: &str| {
            hypotheses
                .iter()
                .position(|h| h == id)
                .ok_or_else(|| Error::UnknownHypothesis(id.to_string()))
        };
        let treatments = utility
            .treatments
            .iter()
            .map(|t| {
                let entry = utility
                    .additive_for(&t.id)
                    .map(|a| [a.treat_faulty, a.treat_ok, a.skip_faulty, a.skip_ok])
                    .unwrap_or([0.0; 4]);
                Ok(CompiledTreatment {
                    id: t.id.clone(),
                    target: hyp(&t.target)?,
                    entry,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for a in &utility.additive {
            if utility.treatment(&a.treatment).is_none() {
                return Err(Error::UnknownTreatment(a.treatment.clone()));
            }
        }

        let mut compiled = CompiledUtility {
            treatments,
            joint: Vec::new(),
        };
        for j in &utility.joint {
            let mut cj = CompiledJoint {
                faulty: 0,
                normal: 0,
                applied: 0,
                skipped: 0,
                value: j.value,
            };
            for lit in &j.when {
                let bit = 1u64 << hyp(&lit.id)?;
                if lit.positive {
                    cj.faulty |= bit;
                } else {
                    cj.normal |= bit;
                }
            }
            for lit in &j.given {
                let bit = 1u64 << compiled.treatment_position(&lit.id)?;
                if lit.positive {
                    cj.applied |= bit;
                } else {
                    cj.skipped |= bit;
                }
            }
            compiled.joint.push(cj);
        }
        Ok(compiled)
    }

    fn treatment_position(&self, id: &str) -> Result<usize> {
        self.treatments
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTreatment(id.to_string()))
    }

    fn tau_mask(&self, tau: &TreatmentSet) -> Result<u64> {
        tau.iter()
            .map(|id| self.treatment_position(id).map(|k| 1u64 << k))
            .sum()
    }

    fn set_of(&self, tau: u64) -> TreatmentSet {
        self.treatments
            .iter()
            .enumerate()
            .filter(|(k, _)| (tau >> k) & 1 == 1)
            .map(|(_, t)| t.id.clone())
            .collect()
    }

    /// Utility of applying `tau` when exactly the hypotheses in `faults` hold.
    fn utility(&self, faults: u64, tau: u64) -> f64 {
        let additive: f64 = self
            .treatments
            .iter()
            .enumerate()
            .map(|(k, t)| pick(t.entry, (tau >> k) & 1 == 1, (faults >> t.target) & 1 == 1))
            .sum();
        let joint: f64 = self
            .joint
            .iter()
            .filter(|j| j.matches_state(faults) && j.matches_tau(tau))
            .map(|j| j.value)
            .sum();
        additive + joint
    }
}

impl CompiledJoint {
    fn matches_state(&self, faults: u64) -> bool {
        faults & self.faulty == self.faulty && faults & self.normal == 0
    }

    fn matches_tau(&self, tau: u64) -> bool {
        tau & self.applied == self.applied && tau & self.skipped == 0
    }
}

fn pick(entry: [f64; 4], treated: bool, faulty: bool) -> f64 {
    let [tt, tf, ft, ff] = entry;
    match (treated, faulty) {
        (true, true) => tt,
        (true, false) => tf,
        (false, true) => ft,
        (false, false) => ff,
    }
}

fn expected_pick(entry: [f64; 4], treated: bool, p: f64) -> f64 {
    p * pick(entry, treated, true) + (1.0 - p) * pick(entry, treated, false)
}

fn checked(model: &FaultModel, utility: &UtilityModel) -> Result<()> {
    let findings = validate_utility(model, utility);
    if findings.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidModel(findings))
    }
}

/// `E[u(I, tau)]` over the posterior of `model` given `obs`.
pub fn expected_utility(
    model: &FaultModel,
    obs: &ObservationSet,
    utility: &UtilityModel,
    tau: &TreatmentSet,
) -> Result<f64> {
    checked(model, utility)?;
    expected_utility_on(&posterior_table(model, obs)?, utility, tau)
}

/// Row-by-row expected utility over an existing table.
pub fn expected_utility_on(
    table: &PosteriorTable,
    utility: &UtilityModel,
    tau: &TreatmentSet,
) -> Result<f64> {
    let compiled = CompiledUtility::new(table.hypotheses(), utility)?;
    let tau = compiled.tau_mask(tau)?;
    Ok(table
        .support()
        .map(|e| e.posterior * compiled.utility(e.interpretation.fault_mask(), tau))
        .sum())
}

/// Best treatment set for `model` given `obs`, searching all `2^l` sets.
pub fn optimal_treatment(
    model: &FaultModel,
    obs: &ObservationSet,
    utility: &UtilityModel,
) -> Result<TreatmentDecision> {
    checked(model, utility)?;
    optimal_treatment_on(&posterior_table(model, obs)?, utility)
}

/// Exhaustive search over treatment sets against an existing table.
///
/// Utility is linear in the state, so each set's expected utility is
/// assembled from target marginals and joint-condition probabilities
/// instead of revisiting every row. Ties within 1e-9 go to the smaller set,
/// then to the lexicographically smaller list of ids.
pub fn optimal_treatment_on(
    table: &PosteriorTable,
    utility: &UtilityModel,
) -> Result<TreatmentDecision> {
    let compiled = CompiledUtility::new(table.hypotheses(), utility)?;
    let count = compiled.treatments.len();
    let cap = table.theory().limits().max_treatments;
    if count > cap {
        return Err(Error::TreatmentSpaceTooLarge { count, cap });
    }

    let prob = |pred: &dyn Fn(u64) -> bool| -> f64 {
        table
            .support()
            .filter(|e| pred(e.interpretation.fault_mask()))
            .map(|e| e.posterior)
            .sum()
    };
    let target_marginals: Vec<f64> = compiled
        .treatments
        .iter()
        .map(|t| prob(&|m| (m >> t.target) & 1 == 1))
        .collect();
    let joint_probabilities: Vec<f64> = compiled
        .joint
        .iter()
        .map(|j| prob(&|m| j.matches_state(m)))
        .collect();

    let eu = |tau: u64| -> f64 {
        let additive: f64 = compiled
            .treatments
            .iter()
            .zip(&target_marginals)
            .enumerate()
            .map(|(k, (t, &p))| expected_pick(t.entry, (tau >> k) & 1 == 1, p))
            .sum();
        let joint: f64 = compiled
            .joint
            .iter()
            .zip(&joint_probabilities)
            .filter(|(j, _)| j.matches_tau(tau))
            .map(|(j, &p)| j.value * p)
            .sum();
        additive + joint
    };

    let mut best = (0u64, eu(0), compiled.set_of(0));
    for tau in 1..(1u64 << count) {
        let value = eu(tau);
        let better = if value > best.1 + DEFAULT_TIE_EPSILON {
            true
        } else if (value - best.1).abs() <= DEFAULT_TIE_EPSILON {
            let set = compiled.set_of(tau);
            (set.len(), set.iter().collect::<Vec<_>>()) < (best.2.len(), best.2.iter().collect())
        } else {
            false
        };
        if better {
            best = (tau, value, compiled.set_of(tau));
        }
    }
    let (tau, expected_utility, chosen) = best;

    let per_treatment_breakdown = utility.joint.is_empty().then(|| {
        compiled
            .treatments
            .iter()
            .zip(&target_marginals)
            .enumerate()
            .map(|(k, (t, &p))| (t.id.clone(), expected_pick(t.entry, (tau >> k) & 1 == 1, p)))
            .collect()
    });
    Ok(TreatmentDecision {
        chosen,
        expected_utility,
        per_treatment_breakdown,
    })
}
