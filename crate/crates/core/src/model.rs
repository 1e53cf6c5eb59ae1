//! Shared data model: fault models, observations, interpretations,
//! diagnoses, treatments and utilities, plus structural validation.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::Formula;

/// Interpretations are stored as a bitmask, so the hypothesis count is
/// bounded by the mask width regardless of the enumeration cap.
pub const MAX_MODEL_HYPOTHESES: usize = 63;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub id: String,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservableVar {
    pub id: String,
    /// Declared without defining rules.
    pub free: bool,
}

/// `body => head`, where the body is a conjunction of positive hypothesis
/// atoms (empty means `true`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalRule {
    pub body: Vec<String>,
    pub head: String,
}

impl CausalRule {
    pub fn body_formula(&self) -> Formula {
        Formula::conjunction(self.body.iter().map(Formula::atom))
    }
}

/// Hypotheses with independent priors, observables, causal rules and hard
/// constraints among hypotheses.
///
/// Built with the `with_*` methods and never mutated afterwards. Building
/// never fails; [`validate_model`] reports what is wrong.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaultModel {
    hypotheses: Vec<Hypothesis>,
    observables: Vec<ObservableVar>,
    rules: Vec<CausalRule>,
    facts: Vec<Formula>,
}

impl FaultModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hypothesis(mut self, id: impl Into<String>, prior: f64) -> Self {
        self.hypotheses.push(Hypothesis {
            id: id.into(),
            prior,
        });
        self
    }

    pub fn with_observable(mut self, id: impl Into<String>) -> Self {
        self.observables.push(ObservableVar {
            id: id.into(),
            free: false,
        });
        self
    }

    pub fn with_free_observable(mut self, id: impl Into<String>) -> Self {
        self.observables.push(ObservableVar {
            id: id.into(),
            free: true,
        });
        self
    }

    pub fn with_rule<I, S>(mut self, body: I, head: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rules.push(CausalRule {
            body: body.into_iter().map(Into::into).collect(),
            head: head.into(),
        });
        self
    }

    pub fn with_fact(mut self, fact: Formula) -> Self {
        self.facts.push(fact);
        self
    }

    /// Copy of this model with one prior replaced. Unknown ids are ignored.
    pub fn with_prior(mut self, id: &str, prior: f64) -> Self {
        if let Some(h) = self.hypotheses.iter_mut().find(|h| h.id == id) {
            h.prior = prior;
        }
        self
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn observables(&self) -> &[ObservableVar] {
        &self.observables
    }

    pub fn rules(&self) -> &[CausalRule] {
        &self.rules
    }

    pub fn facts(&self) -> &[Formula] {
        &self.facts
    }

    pub fn hypothesis_ids(&self) -> Vec<String> {
        self.hypotheses.iter().map(|h| h.id.clone()).collect()
    }

    pub fn hypothesis_index(&self, id: &str) -> Option<usize> {
        self.hypotheses.iter().position(|h| h.id == id)
    }

    pub fn observable(&self, id: &str) -> Option<&ObservableVar> {
        self.observables.iter().find(|o| o.id == id)
    }
}

/// A signed literal over a hypothesis, observable or treatment id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub id: String,
    pub positive: bool,
}

impl Literal {
    pub fn positive(id: impl Into<String>) -> Self {
        Literal {
            id: id.into(),
            positive: true,
        }
    }

    pub fn negative(id: impl Into<String>) -> Self {
        Literal {
            id: id.into(),
            positive: false,
        }
    }

    pub fn to_formula(&self) -> Formula {
        Formula::literal(self.id.clone(), self.positive)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        f.write_str(&self.id)
    }
}

/// Conjunction of observable literals; no observable appears twice.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationSet {
    literals: Vec<Literal>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_literals<I: IntoIterator<Item = Literal>>(literals: I) -> Result<Self> {
        let mut set = Self::new();
        for lit in literals {
            set.insert(lit)?;
        }
        Ok(set)
    }

    /// Observe `E`.
    pub fn positive(id: impl Into<String>) -> Self {
        Self {
            literals: vec![Literal::positive(id)],
        }
    }

    /// Observe `!E`.
    pub fn negative(id: impl Into<String>) -> Self {
        Self {
            literals: vec![Literal::negative(id)],
        }
    }

    /// Adds a literal. Repeats are absorbed; the opposite polarity is an error.
    pub fn insert(&mut self, lit: Literal) -> Result<()> {
        match self.literals.iter().find(|l| l.id == lit.id) {
            Some(existing) if existing.positive == lit.positive => Ok(()),
            Some(_) => Err(Error::ContradictoryObservation(lit.id)),
            None => {
                self.literals.push(lit);
                Ok(())
            }
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn to_formula(&self) -> Formula {
        Formula::conjunction(self.literals.iter().map(Literal::to_formula))
    }
}

/// Total truth assignment over a model's hypotheses.
///
/// Bit `k` of the fault mask is set iff the `k`-th declared hypothesis is
/// true (faulty). The table index follows the opposite convention: the first
/// hypothesis is the most significant bit and a set bit means *false*, so
/// index 0 is all-faulty and index `2^m - 1` is all-normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interpretation {
    faults: u64,
    width: usize,
}

impl Interpretation {
    pub fn from_fault_mask(faults: u64, width: usize) -> Self {
        debug_assert!(width <= MAX_MODEL_HYPOTHESES);
        let mask = if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        Interpretation {
            faults: faults & mask,
            width,
        }
    }

    pub fn from_index(index: usize, width: usize) -> Self {
        let mut faults = 0u64;
        for k in 0..width {
            let normal = (index >> (width - 1 - k)) & 1 == 1;
            if !normal {
                faults |= 1 << k;
            }
        }
        Interpretation { faults, width }
    }

    /// Interpretation in which exactly the named hypotheses are faulty.
    pub fn from_faulty_ids<S: AsRef<str>>(model: &FaultModel, faulty: &[S]) -> Result<Self> {
        let mut faults = 0u64;
        for id in faulty {
            let k = model
                .hypothesis_index(id.as_ref())
                .ok_or_else(|| Error::UnknownHypothesis(id.as_ref().to_string()))?;
            faults |= 1 << k;
        }
        Ok(Interpretation {
            faults,
            width: model.hypotheses().len(),
        })
    }

    pub fn index(&self) -> usize {
        let mut index = 0usize;
        for k in 0..self.width {
            index <<= 1;
            if !self.is_faulty(k) {
                index |= 1;
            }
        }
        index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fault_mask(&self) -> u64 {
        self.faults
    }

    pub fn is_faulty(&self, k: usize) -> bool {
        (self.faults >> k) & 1 == 1
    }

    pub fn fault_count(&self) -> usize {
        self.faults.count_ones() as usize
    }

    /// Ids of the faulty hypotheses, in declaration order.
    pub fn faulty_ids(&self, hypotheses: &[String]) -> Vec<String> {
        (0..self.width)
            .filter(|&k| self.is_faulty(k))
            .map(|k| hypotheses[k].clone())
            .collect()
    }

    /// The full conjunction of literals this interpretation asserts.
    pub fn to_formula(&self, hypotheses: &[String]) -> Formula {
        Formula::conjunction(
            (0..self.width).map(|k| Formula::literal(hypotheses[k].clone(), self.is_faulty(k))),
        )
    }
}

/// A set of hypotheses asserted faulty, optionally scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub faulty: Vec<String>,
    pub probability: Option<f64>,
}

impl Diagnosis {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(faulty: I) -> Self {
        Diagnosis {
            faulty: faulty.into_iter().map(Into::into).collect(),
            probability: None,
        }
    }

    /// Conjunction of the faulty hypotheses; normal ones are left unconstrained.
    pub fn to_formula(&self) -> Formula {
        Formula::conjunction(self.faulty.iter().map(Formula::atom))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentAction {
    pub id: String,
    pub target: String,
}

/// Per-treatment utility, chosen by whether the treatment is applied and
/// whether its target is actually faulty.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveUtility {
    pub treatment: String,
    pub treat_faulty: f64,
    pub treat_ok: f64,
    pub skip_faulty: f64,
    pub skip_ok: f64,
}

impl AdditiveUtility {
    pub fn new(treatment: impl Into<String>, values: [f64; 4]) -> Self {
        let [treat_faulty, treat_ok, skip_faulty, skip_ok] = values;
        AdditiveUtility {
            treatment: treatment.into(),
            treat_faulty,
            treat_ok,
            skip_faulty,
            skip_ok,
        }
    }

    pub fn value(&self, treated: bool, faulty: bool) -> f64 {
        match (treated, faulty) {
            (true, true) => self.treat_faulty,
            (true, false) => self.treat_ok,
            (false, true) => self.skip_faulty,
            (false, false) => self.skip_ok,
        }
    }

    fn values(&self) -> [f64; 4] {
        [
            self.treat_faulty,
            self.treat_ok,
            self.skip_faulty,
            self.skip_ok,
        ]
    }
}

/// Adds `value` whenever every hypothesis literal in `when` holds in the true
/// state and every treatment literal in `given` holds for the chosen set
/// (positive: applied, negative: not applied).
#[derive(Debug, Clone, PartialEq)]
pub struct JointUtility {
    pub when: Vec<Literal>,
    pub given: Vec<Literal>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UtilityModel {
    pub treatments: Vec<TreatmentAction>,
    pub additive: Vec<AdditiveUtility>,
    pub joint: Vec<JointUtility>,
}

impl UtilityModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_treatment(mut self, id: impl Into<String>, target: impl Into<String>) -> Self {
        self.treatments.push(TreatmentAction {
            id: id.into(),
            target: target.into(),
        });
        self
    }

    /// `values` is `[treat-faulty, treat-ok, skip-faulty, skip-ok]`.
    pub fn with_additive(mut self, treatment: impl Into<String>, values: [f64; 4]) -> Self {
        self.additive.push(AdditiveUtility::new(treatment, values));
        self
    }

    pub fn with_joint(mut self, when: Vec<Literal>, given: Vec<Literal>, value: f64) -> Self {
        self.joint.push(JointUtility { when, given, value });
        self
    }

    pub fn treatment(&self, id: &str) -> Option<&TreatmentAction> {
        self.treatments.iter().find(|t| t.id == id)
    }

    pub fn additive_for(&self, treatment: &str) -> Option<&AdditiveUtility> {
        self.additive.iter().find(|a| a.treatment == treatment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    PriorOutOfRange,
    DuplicateId,
    UnknownObservable,
    UnknownHypothesis,
    UnknownAtom,
    UnknownTreatment,
    UndefinedObservable,
    FreeObservableHasRules,
    FactNotOverHypotheses,
    ModelTooLarge,
    UnconstrainedObservation,
    ContradictoryObservation,
    DuplicateUtility,
    NonFiniteUtility,
}

impl FindingKind {
    pub fn label(self) -> &'static str {
        match self {
            FindingKind::PriorOutOfRange => "prior out of range",
            FindingKind::DuplicateId => "duplicate id",
            FindingKind::UnknownObservable => "unknown observable",
            FindingKind::UnknownHypothesis => "unknown hypothesis",
            FindingKind::UnknownAtom => "unknown atom",
            FindingKind::UnknownTreatment => "unknown treatment",
            FindingKind::UndefinedObservable => "observable has no rule",
            FindingKind::FreeObservableHasRules => "free observable has rules",
            FindingKind::FactNotOverHypotheses => "fact mentions an observable",
            FindingKind::ModelTooLarge => "too many hypotheses",
            FindingKind::UnconstrainedObservation => "free observable observed",
            FindingKind::ContradictoryObservation => "contradictory observation",
            FindingKind::DuplicateUtility => "duplicate utility",
            FindingKind::NonFiniteUtility => "utility not finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
}

impl Finding {
    pub fn new(kind: FindingKind, message: impl Into<String>) -> Self {
        Finding {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)
    }
}

/// Every structural problem with `model`. Empty means valid.
pub fn validate_model(model: &FaultModel) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();

    for h in model.hypotheses() {
        if !(0.0..=1.0).contains(&h.prior) {
            out.push(Finding::new(
                FindingKind::PriorOutOfRange,
                format!("hypothesis `{}` has prior {}", h.id, h.prior),
            ));
        }
        if !seen.insert(h.id.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateId,
                format!("`{}` declared more than once", h.id),
            ));
        }
    }
    if model.hypotheses().len() > MAX_MODEL_HYPOTHESES {
        out.push(Finding::new(
            FindingKind::ModelTooLarge,
            format!(
                "{} hypotheses declared, at most {MAX_MODEL_HYPOTHESES} are supported",
                model.hypotheses().len()
            ),
        ));
    }
    for o in model.observables() {
        if !seen.insert(o.id.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateId,
                format!("`{}` declared more than once", o.id),
            ));
        }
    }

    for rule in model.rules() {
        for atom in &rule.body {
            if model.hypothesis_index(atom).is_none() {
                out.push(Finding::new(
                    FindingKind::UnknownHypothesis,
                    format!("rule body mentions `{atom}`, which is not a hypothesis"),
                ));
            }
        }
        if model.observable(&rule.head).is_none() {
            out.push(Finding::new(
                FindingKind::UnknownObservable,
                format!("rule head `{}` is not a declared observable", rule.head),
            ));
        }
    }

    for o in model.observables() {
        let has_rules = model.rules().iter().any(|r| r.head == o.id);
        if o.free && has_rules {
            out.push(Finding::new(
                FindingKind::FreeObservableHasRules,
                format!("`{}` is declared free but is the head of a rule", o.id),
            ));
        } else if !o.free && !has_rules {
            out.push(Finding::new(
                FindingKind::UndefinedObservable,
                format!("`{}` is the head of no rule; declare it free", o.id),
            ));
        }
    }

    for fact in model.facts() {
        for atom in fact.atoms() {
            if model.hypothesis_index(atom).is_some() {
                continue;
            }
            if model.observable(atom).is_some() {
                out.push(Finding::new(
                    FindingKind::FactNotOverHypotheses,
                    format!("fact `{fact}` mentions observable `{atom}`"),
                ));
            } else {
                out.push(Finding::new(
                    FindingKind::UnknownAtom,
                    format!("fact `{fact}` mentions undeclared `{atom}`"),
                ));
            }
        }
    }
    out
}

/// Problems with observing `obs` against `model`.
///
/// Facts range over hypotheses only, so a free observable is never
/// constrained and observing it is always flagged.
pub fn validate_observations(model: &FaultModel, obs: &ObservationSet) -> Vec<Finding> {
    let mut out = Vec::new();
    for lit in obs.literals() {
        match model.observable(&lit.id) {
            None => out.push(Finding::new(
                FindingKind::UnknownObservable,
                format!("observation of undeclared observable `{}`", lit.id),
            )),
            Some(o) if o.free => out.push(Finding::new(
                FindingKind::UnconstrainedObservation,
                format!("`{}` is free and no fact constrains it", lit.id),
            )),
            Some(_) => {}
        }
    }
    out
}

pub fn validate_utility(model: &FaultModel, utility: &UtilityModel) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for t in &utility.treatments {
        if !seen.insert(t.id.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateId,
                format!("treatment `{}` declared more than once", t.id),
            ));
        }
        if model.hypothesis_index(&t.target).is_none() {
            out.push(Finding::new(
                FindingKind::UnknownHypothesis,
                format!("treatment `{}` targets undeclared `{}`", t.id, t.target),
            ));
        }
    }

    let mut with_entry = HashSet::new();
    for a in &utility.additive {
        if utility.treatment(&a.treatment).is_none() {
            out.push(Finding::new(
                FindingKind::UnknownTreatment,
                format!("utility for undeclared treatment `{}`", a.treatment),
            ));
        }
        if !with_entry.insert(a.treatment.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateUtility,
                format!(
                    "treatment `{}` has more than one utility entry",
                    a.treatment
                ),
            ));
        }
        if a.values().iter().any(|v| !v.is_finite()) {
            out.push(Finding::new(
                FindingKind::NonFiniteUtility,
                format!("utility for `{}` has a non-finite value", a.treatment),
            ));
        }
    }

    for j in &utility.joint {
        for lit in &j.when {
            if model.hypothesis_index(&lit.id).is_none() {
                out.push(Finding::new(
                    FindingKind::UnknownHypothesis,
                    format!("joint utility condition mentions undeclared `{}`", lit.id),
                ));
            }
        }
        for lit in &j.given {
            if utility.treatment(&lit.id).is_none() {
                out.push(Finding::new(
                    FindingKind::UnknownTreatment,
                    format!("joint utility mentions undeclared treatment `{}`", lit.id),
                ));
            }
        }
        if !j.value.is_finite() {
            out.push(Finding::new(
                FindingKind::NonFiniteUtility,
                "joint utility value is not finite",
            ));
        }
    }
    out
}
