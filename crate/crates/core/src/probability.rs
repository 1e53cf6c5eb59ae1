//! Exact posteriors by enumerating every interpretation of the hypotheses.

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::logic::{clark_completion, CompletedTheory};
use crate::model::{FaultModel, Interpretation, ObservationSet};

pub const DEFAULT_TIE_EPSILON: f64 = 1e-9;

/// Sort key for descending rankings. Scores that differ only by rounding
/// noise compare equal, so a stable sort leaves them in their original order.
pub(crate) fn rank_key(score: f64) -> i64 {
    (score * 1e12).round() as i64
}

/// Prior probability of `interp` under independent hypothesis priors.
pub fn joint_prior(model: &FaultModel, interp: &Interpretation) -> f64 {
    model
        .hypotheses()
        .iter()
        .enumerate()
        .map(|(k, h)| {
            if interp.is_faulty(k) {
                h.prior
            } else {
                1.0 - h.prior
            }
        })
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub index: usize,
    pub interpretation: Interpretation,
    pub posterior: f64,
}

/// Normalised distribution over all `2^m` interpretations given the
/// observations. Rows are kept in index order, impossible rows included
/// with posterior exactly zero.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    theory: CompletedTheory,
    posteriors: Vec<f64>,
    evidence_probability: f64,
}

/// Posterior table of `model` given `obs`, using default enumeration limits.
pub fn posterior_table(model: &FaultModel, obs: &ObservationSet) -> Result<PosteriorTable> {
    PosteriorTable::compute(model, &clark_completion(model)?, obs)
}

impl PosteriorTable {
    pub fn compute(
        model: &FaultModel,
        theory: &CompletedTheory,
        obs: &ObservationSet,
    ) -> Result<Self> {
        theory.ensure_enumerable()?;
        let obs = theory.compile_observations(obs)?;
        let facts = theory.compiled_facts();
        let width = theory.width();
        let weights: Vec<f64> = (0..1usize << width)
            .map(|index| {
                let interp = Interpretation::from_index(index, width);
                let m = interp.fault_mask();
                if facts.eval(m) && obs.eval(m) {
                    joint_prior(model, &interp)
                } else {
                    0.0
                }
            })
            .collect();
        Self::normalise(theory.clone(), weights)
    }

    /// A table over the same theory with arbitrary non-negative row weights
    /// (in index order), normalised. Useful for asking which quantities a
    /// computation actually depends on.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        assert_eq!(
            weights.len(),
            self.posteriors.len(),
            "one weight per interpretation"
        );
        Self::normalise(self.theory.clone(), weights)
    }

    fn normalise(theory: CompletedTheory, mut weights: Vec<f64>) -> Result<Self> {
        let evidence_probability: f64 = weights.iter().sum();
        if evidence_probability <= 0.0 || !evidence_probability.is_finite() {
            return Err(Error::ZeroProbability);
        }
        for w in &mut weights {
            *w /= evidence_probability;
        }
        Ok(PosteriorTable {
            theory,
            posteriors: weights,
            evidence_probability,
        })
    }

    /// Probability of the observations (and facts) under the prior.
    pub fn evidence_probability(&self) -> f64 {
        self.evidence_probability
    }

    pub fn theory(&self) -> &CompletedTheory {
        &self.theory
    }

    pub fn hypotheses(&self) -> &[String] {
        self.theory.hypotheses()
    }

    pub fn len(&self) -> usize {
        self.posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posteriors.is_empty()
    }

    pub fn posterior(&self, index: usize) -> f64 {
        self.posteriors[index]
    }

    pub fn entry(&self, index: usize) -> TableEntry {
        TableEntry {
            index,
            interpretation: Interpretation::from_index(index, self.theory.width()),
            posterior: self.posteriors[index],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = TableEntry> + '_ {
        (0..self.posteriors.len()).map(|i| self.entry(i))
    }

    /// Rows with nonzero posterior.
    pub fn support(&self) -> impl Iterator<Item = TableEntry> + '_ {
        self.entries().filter(|e| e.posterior > 0.0)
    }

    /// Entries sorted by descending posterior, ties by index.
    pub fn ranked(&self) -> Vec<TableEntry> {
        let mut rows: Vec<TableEntry> = self.entries().collect();
        rows.sort_by_key(|e| std::cmp::Reverse(rank_key(e.posterior)));
        rows
    }
}

/// `p(w | observations)`: sum of posteriors over rows where `w` holds.
pub fn marginal(table: &PosteriorTable, w: &Formula) -> Result<f64> {
    let w = table.theory.compile(w)?;
    Ok(table
        .support()
        .filter(|e| w.eval(e.interpretation.fault_mask()))
        .map(|e| e.posterior)
        .sum())
}

/// Every interpretation within `tie_epsilon` of the best, in index order.
pub fn most_likely_interpretations(table: &PosteriorTable, tie_epsilon: f64) -> Vec<TableEntry> {
    let best = table
        .posteriors
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    table
        .entries()
        .filter(|e| best - e.posterior <= tie_epsilon)
        .collect()
}

/// Shortest prefix of the ranked interpretations whose cumulative posterior
/// reaches `mass`. Zero-posterior rows are never included, so `mass = 1`
/// yields exactly the support.
pub fn covering_mass_set(table: &PosteriorTable, mass: f64) -> Result<Vec<TableEntry>> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::InvalidMass(mass));
    }
    let mut out = Vec::new();
    let mut cumulative = 0.0;
    for entry in table.ranked() {
        if entry.posterior <= 0.0 {
            break;
        }
        cumulative += entry.posterior;
        out.push(entry);
        if cumulative >= mass - DEFAULT_TIE_EPSILON {
            break;
        }
    }
    Ok(out)
}
