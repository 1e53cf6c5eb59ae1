//! Property bodies shared by the property suite and the acceptance run.

use std::collections::BTreeSet;

use diagnoscope::{
    abductive_explanations, clark_completion, consistency_diagnoses, diagnose_abductive,
    diagnose_consistency, diagnose_mpe, marginal, posterior_table, Diagnosis, Error,
    ObservationSet,
};
use proptest::prelude::*;

use super::{fault_sets, mask_to_set, minimal, Shape, Spec};

pub type Check = Result<(), TestCaseError>;

pub fn consistent_masks(s: &Spec, obs: &ObservationSet) -> Vec<u64> {
    (0..1u64 << s.width())
        .filter(|&m| s.facts_hold(m) && s.observations_hold(obs, m))
        .collect()
}

pub fn explains(s: &Spec, obs: &ObservationSet, d: u64) -> bool {
    let supersets: Vec<u64> = (0..1u64 << s.width())
        .filter(|&m| m & d == d && s.facts_hold(m))
        .collect();
    !supersets.is_empty() && supersets.iter().all(|&m| s.observations_hold(obs, m))
}

fn in_diagnosis_order(masks: Vec<u64>) -> Vec<BTreeSet<usize>> {
    let mut sets: Vec<BTreeSet<usize>> = minimal(&masks).into_iter().map(mask_to_set).collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets
}

/// Fault sets of a diagnosis list; "unexplainable" reads as no sets.
pub fn fault_sets_or_empty(
    found: diagnoscope::Result<Vec<Diagnosis>>,
) -> Result<Vec<BTreeSet<usize>>, TestCaseError> {
    match found {
        Ok(d) => {
            prop_assert!(
                !d.is_empty(),
                "an empty result must be reported as unexplainable"
            );
            Ok(fault_sets(&d))
        }
        Err(Error::Unexplainable) => Ok(Vec::new()),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

fn positive_only(s: &Spec) -> Spec {
    Spec {
        observed: s.observed.iter().map(|&(o, _)| (o, true)).collect(),
        ..s.clone()
    }
}

fn mask(set: &BTreeSet<usize>) -> u64 {
    set.iter().map(|k| 1u64 << k).sum()
}

pub fn normalised(s: &Spec) -> Check {
    let (model, obs) = (s.model(), s.observations());
    match posterior_table(&model, &obs) {
        Ok(t) => {
            let total: f64 = t.entries().map(|e| e.posterior).sum();
            prop_assert!((total - 1.0).abs() <= 1e-9, "sum {}", total);
        }
        Err(Error::ZeroProbability) => prop_assert!(consistent_masks(s, &obs).is_empty()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    }
    Ok(())
}

pub fn consistency_oracle(s: &Spec) -> Check {
    let (model, obs) = (s.model(), s.observations());
    let theory = clark_completion(&model).unwrap();
    let got = fault_sets_or_empty(consistency_diagnoses(&theory, &obs))?;
    prop_assert_eq!(got, in_diagnosis_order(consistent_masks(s, &obs)));
    Ok(())
}

pub fn abduction_oracle(s: &Spec) -> Check {
    let (model, obs) = (s.model(), s.observations());
    let theory = clark_completion(&model).unwrap();
    let candidates: Vec<u64> = (0..1u64 << s.width())
        .filter(|&d| explains(s, &obs, d))
        .collect();
    let got = fault_sets_or_empty(abductive_explanations(&theory, &obs))?;
    prop_assert_eq!(got, in_diagnosis_order(candidates));
    Ok(())
}

/// Each emitted diagnosis passes its test and no proper subset does.
pub fn subset_minimal(s: &Spec) -> Check {
    let (model, obs) = (s.model(), s.observations());
    let theory = clark_completion(&model).unwrap();
    let proper_subsets = |d: u64| (0..d).filter(move |&sub| sub & d == sub);
    for d in fault_sets_or_empty(consistency_diagnoses(&theory, &obs))? {
        let d = mask(&d);
        prop_assert!(s.facts_hold(d) && s.observations_hold(&obs, d));
        for sub in proper_subsets(d) {
            prop_assert!(!(s.facts_hold(sub) && s.observations_hold(&obs, sub)));
        }
    }
    let pos = positive_only(s);
    let pos_obs = pos.observations();
    for d in fault_sets_or_empty(abductive_explanations(&theory, &pos_obs))? {
        let d = mask(&d);
        prop_assert!(explains(&pos, &pos_obs, d));
        for sub in proper_subsets(d) {
            prop_assert!(!explains(&pos, &pos_obs, sub));
        }
    }
    Ok(())
}

/// Definite rules, no facts, positive observations: the two semantics coincide,
/// down to the scored rankings.
pub fn monotone_equivalence(s: &Spec) -> Check {
    let (model, obs) = (s.model(), s.observations());
    let theory = clark_completion(&model).unwrap();
    prop_assert_eq!(
        consistency_diagnoses(&theory, &obs),
        abductive_explanations(&theory, &obs)
    );
    if let (Ok(c), Ok(a)) = (
        diagnose_consistency(&model, &obs),
        diagnose_abductive(&model, &obs),
    ) {
        prop_assert_eq!(c.candidates, a.candidates);
    }
    Ok(())
}

pub fn conjunction_dominance(s: &Spec, g: &Shape, h: &Shape) -> Check {
    let (model, obs) = (s.model(), s.observations());
    if let Ok(t) = posterior_table(&model, &obs) {
        let (g, h) = (g.resolve(s.width()), h.resolve(s.width()));
        let both = marginal(&t, &g.clone().and(h.clone())).unwrap();
        let bound = marginal(&t, &g).unwrap().min(marginal(&t, &h).unwrap());
        prop_assert!(both <= bound + 1e-12, "{} > {}", both, bound);
    }
    Ok(())
}

/// An unconnected hypothesis with prior `q` takes its likelier value in the
/// most probable interpretation and leaves the rest of it unchanged.
pub fn mpe_projection_invariance(s: &Spec, q: f64) -> Check {
    prop_assume!((q - 0.5).abs() > 1e-6);
    let (model, obs) = (s.model(), s.observations());
    let Ok(before) = diagnose_mpe(&model, &obs) else {
        return Ok(());
    };
    let after = diagnose_mpe(&model.clone().with_hypothesis("Z", q), &obs).unwrap();
    let project = |sets: Vec<Vec<String>>| -> Vec<Vec<String>> {
        sets.into_iter()
            .map(|s| s.into_iter().filter(|h| h != "Z").collect())
            .collect()
    };
    let z_faulty = after
        .leader_fault_sets()
        .iter()
        .all(|set| set.iter().any(|h| h == "Z"));
    prop_assert_eq!(z_faulty, q > 0.5);
    prop_assert_eq!(
        project(after.leader_fault_sets()),
        before.leader_fault_sets()
    );
    Ok(())
}
