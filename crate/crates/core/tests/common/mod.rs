//! Random small models and brute-force oracles shared by the integration
//! tests. The oracles evaluate formulas with their own evaluator so they do
//! not lean on the code under test.

#![allow(dead_code)]

use std::collections::BTreeSet;

use diagnoscope::{FaultModel, Formula, Literal, ObservationSet};
use proptest::prelude::*;

pub mod checks;

pub const OBSERVABLES: [&str; 2] = ["O0", "O1"];

pub fn hyp(k: usize) -> String {
    format!("H{k}")
}

/// A formula shape over abstract leaves, resolved against a model width.
#[derive(Debug, Clone)]
pub enum Shape {
    Leaf(usize),
    Const(bool),
    Not(Box<Shape>),
    Bin(u8, Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn resolve(&self, width: usize) -> Formula {
        match self {
            Shape::Leaf(k) => Formula::atom(hyp(k % width)),
            Shape::Const(true) => Formula::True,
            Shape::Const(false) => Formula::False,
            Shape::Not(a) => a.resolve(width).not(),
            Shape::Bin(op, a, b) => {
                let (a, b) = (a.resolve(width), b.resolve(width));
                match op % 4 {
                    0 => a.and(b),
                    1 => a.or(b),
                    2 => a.implies(b),
                    _ => a.iff(b),
                }
            }
        }
    }
}

pub fn shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![
        6 => (0usize..8).prop_map(Shape::Leaf),
        1 => any::<bool>().prop_map(Shape::Const),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Shape::Not(Box::new(a))),
            (any::<u8>(), inner.clone(), inner).prop_map(|(op, a, b)| Shape::Bin(
                op,
                Box::new(a),
                Box::new(b)
            )),
        ]
    })
}

/// Evaluates `f` with hypothesis `Hk` true exactly when bit k of `faults` is set.
pub fn eval(f: &Formula, faults: u64) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(id) => {
            let k: u32 = id[1..].parse().expect("oracle atoms are hypotheses");
            faults >> k & 1 == 1
        }
        Formula::Not(a) => !eval(a, faults),
        Formula::And(a, b) => eval(a, faults) && eval(b, faults),
        Formula::Or(a, b) => eval(a, faults) || eval(b, faults),
        Formula::Implies(a, b) => !eval(a, faults) || eval(b, faults),
        Formula::Iff(a, b) => eval(a, faults) == eval(b, faults),
    }
}

/// A random model with hypotheses `H0..`, observables drawn from
/// [`OBSERVABLES`], and positive-conjunction rules.
#[derive(Debug, Clone)]
pub struct Spec {
    pub priors: Vec<f64>,
    /// (body mask, head index into OBSERVABLES)
    pub rules: Vec<(u64, usize)>,
    pub facts: Vec<Shape>,
    /// (observable index, positive)
    pub observed: Vec<(usize, bool)>,
}

impl Spec {
    pub fn width(&self) -> usize {
        self.priors.len()
    }

    pub fn heads(&self) -> BTreeSet<usize> {
        self.rules.iter().map(|r| r.1).collect()
    }

    pub fn model(&self) -> FaultModel {
        let mut m = FaultModel::new();
        for (k, p) in self.priors.iter().enumerate() {
            m = m.with_hypothesis(hyp(k), *p);
        }
        for o in self.heads() {
            m = m.with_observable(OBSERVABLES[o]);
        }
        for (body, head) in &self.rules {
            let body: Vec<String> = (0..self.width())
                .filter(|k| body >> k & 1 == 1)
                .map(hyp)
                .collect();
            m = m.with_rule(body, OBSERVABLES[*head]);
        }
        for f in &self.facts {
            m = m.with_fact(f.resolve(self.width()));
        }
        m
    }

    pub fn observations(&self) -> ObservationSet {
        let mut seen = BTreeSet::new();
        let lits = self
            .observed
            .iter()
            .filter(|(o, _)| self.heads().contains(o) && seen.insert(*o))
            .map(|&(o, positive)| Literal {
                id: OBSERVABLES[o].to_string(),
                positive,
            });
        ObservationSet::from_literals(lits).expect("one literal per observable")
    }

    /// Completion of observable `o` under `faults`.
    pub fn fires(&self, o: usize, faults: u64) -> bool {
        self.rules
            .iter()
            .any(|&(body, head)| head == o && faults & body == body)
    }

    pub fn facts_hold(&self, faults: u64) -> bool {
        self.facts
            .iter()
            .all(|f| eval(&f.resolve(self.width()), faults))
    }

    pub fn observations_hold(&self, obs: &ObservationSet, faults: u64) -> bool {
        obs.literals().iter().all(|l| {
            let o = OBSERVABLES.iter().position(|id| *id == l.id).unwrap();
            self.fires(o, faults) == l.positive
        })
    }

    pub fn prior(&self, faults: u64) -> f64 {
        self.priors
            .iter()
            .enumerate()
            .map(|(k, p)| if faults >> k & 1 == 1 { *p } else { 1.0 - p })
            .product()
    }
}

/// Models of 1..=`max_hyps` hypotheses with up to `max_rules` rules and up to
/// `max_facts` facts; observations may be negative when `negative` is set.
pub fn spec(
    max_hyps: usize,
    max_rules: usize,
    max_facts: usize,
    negative: bool,
) -> impl Strategy<Value = Spec> {
    (1..=max_hyps).prop_flat_map(move |m| {
        let priors = proptest::collection::vec(0.01f64..0.99, m);
        let rules = proptest::collection::vec((1u64..1 << m, 0usize..2), 1..=max_rules);
        let facts = proptest::collection::vec(shape(), 0..=max_facts);
        let observed = proptest::collection::vec(
            (0usize..2, any::<bool>().prop_map(move |b| b || !negative)),
            0..=2,
        );
        (priors, rules, facts, observed).prop_map(|(priors, rules, facts, observed)| Spec {
            priors,
            rules,
            facts,
            observed,
        })
    })
}

pub fn fault_sets(diagnoses: &[diagnoscope::Diagnosis]) -> Vec<BTreeSet<usize>> {
    diagnoses
        .iter()
        .map(|d| d.faulty.iter().map(|h| h[1..].parse().unwrap()).collect())
        .collect()
}

pub fn mask_to_set(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|k| mask >> k & 1 == 1).collect()
}

/// Keeps the masks no other mask in the list is a proper subset of.
pub fn minimal(masks: &[u64]) -> Vec<u64> {
    masks
        .iter()
        .copied()
        .filter(|&m| !masks.iter().any(|&s| s != m && s & m == s))
        .collect()
}
