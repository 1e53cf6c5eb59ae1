//! Propositional reasoning over the completed theory of a fault model:
//! formula evaluation, scenario consistency and explanation, and minimal
//! diagnosis search in both the consistency-based and abductive senses.
//!
//! Every question is decided by enumerating assignments to the hypotheses.
//! Observables never get their own truth values; they are replaced by their
//! completion definitions before evaluation.

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::model::{
    validate_model, Diagnosis, FaultModel, Interpretation, Literal, ObservationSet,
};

/// Enumeration caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_hypotheses: usize,
    pub max_treatments: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_hypotheses: 20,
            max_treatments: 20,
        }
    }
}

/// Formula with atoms resolved to hypothesis positions and observables
/// inlined by their definitions.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Compiled {
    Const(bool),
    Hyp(usize),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
    Iff(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    pub(crate) fn eval(&self, faults: u64) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Hyp(k) => (faults >> k) & 1 == 1,
            Compiled::Not(inner) => !inner.eval(faults),
            Compiled::And(items) => items.iter().all(|c| c.eval(faults)),
            Compiled::Or(items) => items.iter().any(|c| c.eval(faults)),
            Compiled::Implies(l, r) => !l.eval(faults) || r.eval(faults),
            Compiled::Iff(l, r) => l.eval(faults) == r.eval(faults),
        }
    }
}

/// A fault model with each observable replaced by the disjunction of its
/// rule bodies (the only-if half of the completion), plus the hard facts.
#[derive(Debug, Clone)]
pub struct CompletedTheory {
    hypotheses: Vec<String>,
    definitions: Vec<(String, Option<Formula>)>,
    facts: Vec<Formula>,
    compiled_facts: Compiled,
    limits: Limits,
}

/// Completes `model`. Fails with [`Error::InvalidModel`] if validation
/// reports anything.
pub fn clark_completion(model: &FaultModel) -> Result<CompletedTheory> {
    let findings = validate_model(model);
    if !findings.is_empty() {
        return Err(Error::InvalidModel(findings));
    }
    let definitions = model
        .observables()
        .iter()
        .map(|o| {
            let bodies: Vec<Formula> = model
                .rules()
                .iter()
                .filter(|r| r.head == o.id)
                .map(|r| r.body_formula())
                .collect();
            let def = if o.free {
                None
            } else {
                Some(Formula::disjunction(bodies))
            };
            (o.id.clone(), def)
        })
        .collect();

    let mut theory = CompletedTheory {
        hypotheses: model.hypothesis_ids(),
        definitions,
        facts: model.facts().to_vec(),
        compiled_facts: Compiled::Const(true),
        limits: Limits::default(),
    };
    let facts = theory
        .facts
        .iter()
        .map(|f| theory.compile(f))
        .collect::<Result<Vec<_>>>()?;
    theory.compiled_facts = Compiled::And(facts);
    Ok(theory)
}

impl CompletedTheory {
    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn hypotheses(&self) -> &[String] {
        &self.hypotheses
    }

    pub fn width(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn facts(&self) -> &[Formula] {
        &self.facts
    }

    /// Definition of an observable; `None` for free or unknown observables.
    pub fn definition(&self, observable: &str) -> Option<&Formula> {
        self.definitions
            .iter()
            .find(|(id, _)| id == observable)
            .and_then(|(_, def)| def.as_ref())
    }

    /// `(observable, definition)` pairs in declaration order, skipping free ones.
    pub fn definitions(&self) -> impl Iterator<Item = (&str, &Formula)> {
        self.definitions
            .iter()
            .filter_map(|(id, def)| def.as_ref().map(|d| (id.as_str(), d)))
    }

    pub(crate) fn compile(&self, formula: &Formula) -> Result<Compiled> {
        Ok(match formula {
            Formula::True => Compiled::Const(true),
            Formula::False => Compiled::Const(false),
            Formula::Atom(id) => {
                if let Some(k) = self.hypotheses.iter().position(|h| h == id) {
                    Compiled::Hyp(k)
                } else {
                    match self.definitions.iter().find(|(o, _)| o == id) {
                        Some((_, Some(def))) => self.compile(def)?,
                        Some((_, None)) => return Err(Error::UnconstrainedObservable(id.clone())),
                        None => return Err(Error::UnknownAtom(id.clone())),
                    }
                }
            }
            Formula::Not(inner) => Compiled::Not(Box::new(self.compile(inner)?)),
            Formula::And(l, r) => Compiled::And(vec![self.compile(l)?, self.compile(r)?]),
            Formula::Or(l, r) => Compiled::Or(vec![self.compile(l)?, self.compile(r)?]),
            Formula::Implies(l, r) => {
                Compiled::Implies(Box::new(self.compile(l)?), Box::new(self.compile(r)?))
            }
            Formula::Iff(l, r) => {
                Compiled::Iff(Box::new(self.compile(l)?), Box::new(self.compile(r)?))
            }
        })
    }

    pub(crate) fn compiled_facts(&self) -> &Compiled {
        &self.compiled_facts
    }

    pub(crate) fn compile_observations(&self, obs: &ObservationSet) -> Result<Compiled> {
        let mut parts = Vec::with_capacity(obs.literals().len());
        for lit in obs.literals() {
            if !self.definitions.iter().any(|(o, _)| *o == lit.id) {
                return Err(Error::UnknownObservable(lit.id.clone()));
            }
            let atom = self.compile(&Formula::atom(lit.id.clone()))?;
            parts.push(if lit.positive {
                atom
            } else {
                Compiled::Not(Box::new(atom))
            });
        }
        Ok(Compiled::And(parts))
    }

    pub(crate) fn ensure_enumerable(&self) -> Result<()> {
        let count = self.width();
        if count > self.limits.max_hypotheses {
            return Err(Error::TooManyHypotheses {
                count,
                cap: self.limits.max_hypotheses,
            });
        }
        Ok(())
    }

    /// All fault masks, `0..2^m`.
    pub(crate) fn masks(&self) -> std::ops::Range<u64> {
        0..(1u64 << self.width())
    }

    fn resolve_scenario(&self, scenario: &Scenario) -> Result<(u64, u64)> {
        let mut must_true = 0u64;
        let mut must_false = 0u64;
        for lit in scenario.literals() {
            let k = self
                .hypotheses
                .iter()
                .position(|h| *h == lit.id)
                .ok_or_else(|| Error::UnknownHypothesis(lit.id.clone()))?;
            if lit.positive {
                must_true |= 1 << k;
            } else {
                must_false |= 1 << k;
            }
        }
        Ok((must_true, must_false))
    }

    /// Fault masks that extend `scenario` and satisfy the facts.
    fn extensions(&self, scenario: &Scenario) -> Result<impl Iterator<Item = u64> + '_> {
        self.ensure_enumerable()?;
        let (must_true, must_false) = self.resolve_scenario(scenario)?;
        Ok(self.masks().filter(move |&m| {
            m & must_true == must_true && m & must_false == 0 && self.compiled_facts.eval(m)
        }))
    }
}

/// Truth value of `formula` in `interp`, with observables read through
/// their completion definitions.
pub fn evaluate_formula(
    theory: &CompletedTheory,
    formula: &Formula,
    interp: &Interpretation,
) -> Result<bool> {
    debug_assert_eq!(interp.width(), theory.width());
    Ok(theory.compile(formula)?.eval(interp.fault_mask()))
}

/// A set of hypothesis literals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    literals: Vec<Literal>,
}

impl Scenario {
    pub fn new<I: IntoIterator<Item = Literal>>(literals: I) -> Self {
        Scenario {
            literals: literals.into_iter().collect(),
        }
    }

    /// Positive literals for exactly the given hypotheses.
    pub fn faults<S: Into<String>, I: IntoIterator<Item = S>>(ids: I) -> Self {
        Self::new(ids.into_iter().map(Literal::positive))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_total(&self, width: usize) -> bool {
        self.literals.len() == width
    }
}

/// Whether some interpretation extends `scenario`, satisfies the facts, and
/// satisfies every observation literal.
pub fn scenario_consistent(
    theory: &CompletedTheory,
    scenario: &Scenario,
    obs: &ObservationSet,
) -> Result<bool> {
    let obs = theory.compile_observations(obs)?;
    Ok(theory.extensions(scenario)?.any(|m| obs.eval(m)))
}

/// Whether every fact-satisfying extension of `scenario` satisfies `goal`.
pub fn scenario_explains(
    theory: &CompletedTheory,
    scenario: &Scenario,
    goal: &Formula,
) -> Result<bool> {
    let goal = theory.compile(goal)?;
    let mut any = false;
    for m in theory.extensions(scenario)? {
        any = true;
        if !goal.eval(m) {
            return Ok(false);
        }
    }
    if any {
        Ok(true)
    } else {
        Err(Error::InconsistentScenario)
    }
}

/// All set-inclusion-maximal scenarios consistent with the facts.
///
/// Any consistent scenario extends to a total assignment satisfying the
/// facts, so the maximal ones are exactly those total assignments. They are
/// returned in interpretation-index order.
pub fn maximal_scenarios(theory: &CompletedTheory) -> Result<Vec<Scenario>> {
    theory.ensure_enumerable()?;
    let width = theory.width();
    Ok((0..1usize << width)
        .map(|index| Interpretation::from_index(index, width))
        .filter(|i| theory.compiled_facts().eval(i.fault_mask()))
        .map(|i| {
            Scenario::new(
                theory
                    .hypotheses()
                    .iter()
                    .enumerate()
                    .map(|(k, id)| Literal {
                        id: id.clone(),
                        positive: i.is_faulty(k),
                    }),
            )
        })
        .collect())
}

/// Subset-minimal fault sets whose "exactly these faulty" interpretation
/// satisfies the facts and the observations.
pub fn consistency_diagnoses(
    theory: &CompletedTheory,
    obs: &ObservationSet,
) -> Result<Vec<Diagnosis>> {
    theory.ensure_enumerable()?;
    let obs = theory.compile_observations(obs)?;
    let width = theory.width();
    let facts = theory.compiled_facts();
    let sat: Vec<bool> = theory
        .masks()
        .map(|m| facts.eval(m) && obs.eval(m))
        .collect();

    // below[m]: some subset of m (m included) is satisfying
    let mut below = sat.clone();
    for bit in 0..width {
        for m in 0..below.len() {
            if m & (1 << bit) != 0 && below[m ^ (1 << bit)] {
                below[m] = true;
            }
        }
    }
    let minimal = (0..sat.len() as u64)
        .filter(|&m| sat[m as usize] && bits(m).all(|k| !below[(m ^ (1 << k)) as usize]));
    finish(theory, minimal.collect())
}

/// Subset-minimal sets of hypotheses that, assumed true, are consistent with
/// the facts and entail every observation.
///
/// Only positive observations are accepted.
pub fn abductive_explanations(
    theory: &CompletedTheory,
    obs: &ObservationSet,
) -> Result<Vec<Diagnosis>> {
    if let Some(neg) = obs.literals().iter().find(|l| !l.positive) {
        return Err(Error::NegativeObservation(neg.id.clone()));
    }
    theory.ensure_enumerable()?;
    let goal = theory.compile_observations(obs)?;
    let width = theory.width();
    let facts = theory.compiled_facts();

    // Both flags are closed downward over supersets: consistent[m] holds when
    // some fact-satisfying interpretation has every fault in m, refuted[m]
    // when some such interpretation also falsifies the goal.
    let mut consistent: Vec<bool> = theory.masks().map(|m| facts.eval(m)).collect();
    let mut refuted: Vec<bool> = theory
        .masks()
        .map(|m| consistent[m as usize] && !goal.eval(m))
        .collect();
    for bit in 0..width {
        for m in 0..consistent.len() {
            if m & (1 << bit) == 0 {
                let up = m | (1 << bit);
                consistent[m] |= consistent[up];
                refuted[m] |= refuted[up];
            }
        }
    }
    // Non-refutation is upward closed, so checking one-smaller subsets
    // suffices for minimality.
    let minimal = (0..consistent.len() as u64).filter(|&m| {
        consistent[m as usize]
            && !refuted[m as usize]
            && bits(m).all(|k| refuted[(m ^ (1 << k)) as usize])
    });
    finish(theory, minimal.collect())
}

fn bits(mask: u64) -> impl Iterator<Item = u32> {
    (0..64u32).filter(move |k| (mask >> k) & 1 == 1)
}

/// Orders fault masks by cardinality, then lexicographically on declaration
/// positions.
pub(crate) fn diagnosis_order(a: u64, b: u64) -> std::cmp::Ordering {
    a.count_ones()
        .cmp(&b.count_ones())
        .then_with(|| bits(a).cmp(bits(b)))
}

fn finish(theory: &CompletedTheory, mut masks: Vec<u64>) -> Result<Vec<Diagnosis>> {
    if masks.is_empty() {
        return Err(Error::Unexplainable);
    }
    masks.sort_by(|a, b| diagnosis_order(*a, *b));
    let width = theory.width();
    Ok(masks
        .into_iter()
        .map(|m| {
            Diagnosis::new(
                Interpretation::from_fault_mask(m, width).faulty_ids(theory.hypotheses()),
            )
        })
        .collect())
}
