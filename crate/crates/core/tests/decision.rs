use diagnoscope::decision::{expected_utility_on, optimal_treatment_on};
use diagnoscope::dsl::parse_model_file;
use diagnoscope::{
    marginal, posterior_table, Formula, Literal, PosteriorTable, TreatmentSet, UtilityModel,
};
use proptest::prelude::*;

fn circuit_table() -> PosteriorTable {
    let b = parse_model_file(include_str!("../fixtures/circuit4.fdl")).unwrap();
    posterior_table(&b.model, &b.observations.unwrap()).unwrap()
}

/// B and C are fixed independently; fixes for A and D interact, so their
/// payoff depends jointly on the A/D state and on which of the two fixes ran.
fn interacting_utility(values: &[f64; 16]) -> UtilityModel {
    let mut u = UtilityModel::new()
        .with_treatment("FixA", "A")
        .with_treatment("FixB", "B")
        .with_treatment("FixC", "C")
        .with_treatment("FixD", "D")
        .with_additive("FixB", [1.0, -1.0, 0.0, 0.0])
        .with_additive("FixC", [2.0, -1.0, -1.0, 0.0]);
    let lit = |id: &str, positive: bool| Literal {
        id: id.into(),
        positive,
    };
    for (i, v) in values.iter().enumerate() {
        let (a, d, fa, fd) = (i & 8 != 0, i & 4 != 0, i & 2 != 0, i & 1 != 0);
        u = u.with_joint(
            vec![lit("A", a), lit("D", d)],
            vec![lit("FixA", fa), lit("FixD", fd)],
            *v,
        );
    }
    u
}

/// Weights that keep p(B), p(C) and the four A/D cells of `table` but change
/// everything else: a mix of the table with a version where B and C are
/// independent of A, D with correlation `delta` between them.
fn reweighted(table: &PosteriorTable, lambda: f64, delta: f64) -> Vec<f64> {
    let pb = marginal(table, &Formula::atom("B")).unwrap();
    let pc = marginal(table, &Formula::atom("C")).unwrap();
    let lo = (-(pb * pc)).max(-((1.0 - pb) * (1.0 - pc)));
    let hi = (pb * (1.0 - pc)).min((1.0 - pb) * pc);
    let delta = lo + (hi - lo) * delta;
    let r = |fb: bool, fc: bool| match (fb, fc) {
        (true, true) => pb * pc + delta,
        (true, false) => pb * (1.0 - pc) - delta,
        (false, true) => (1.0 - pb) * pc - delta,
        (false, false) => (1.0 - pb) * (1.0 - pc) + delta,
    };
    table
        .entries()
        .map(|e| {
            let i = &e.interpretation;
            let (fa, fd) = (i.is_faulty(0), i.is_faulty(3));
            let ad: f64 = table
                .entries()
                .filter(|o| {
                    o.interpretation.is_faulty(0) == fa && o.interpretation.is_faulty(3) == fd
                })
                .map(|o| o.posterior)
                .sum();
            lambda * e.posterior + (1.0 - lambda) * ad * r(i.is_faulty(1), i.is_faulty(2))
        })
        .collect()
}

fn all_taus() -> Vec<TreatmentSet> {
    (0..16)
        .map(|m: u32| {
            ["FixA", "FixB", "FixC", "FixD"]
                .iter()
                .enumerate()
                .filter(|(k, _)| m >> k & 1 == 1)
                .map(|(_, id)| id.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn the_decision_inputs_are_the_listed_probabilities() {
    let t = circuit_table();
    let cell = |a: bool, d: bool| {
        marginal(&t, &Formula::literal("A", a).and(Formula::literal("D", d))).unwrap()
    };
    for (got, want) in [
        (cell(true, true), 0.041),
        (cell(true, false), 0.368),
        (cell(false, true), 0.251),
        (cell(false, false), 0.340),
    ] {
        assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
    }
}

proptest! {
    #[test]
    fn expected_utility_depends_only_on_the_listed_probabilities(
        values in proptest::array::uniform16(-10.0f64..10.0),
        lambda in 0.0f64..1.0,
        delta in 0.0f64..=1.0,
    ) {
        let t = circuit_table();
        let u = interacting_utility(&values);
        let other = t.with_weights(reweighted(&t, lambda, delta)).unwrap();
        let moved = t.entries().map(|e| (e.posterior - other.posterior(e.index)).abs()).fold(0.0, f64::max);
        prop_assert!(lambda > 0.99 || moved > 1e-4, "the perturbation should change the table");
        for name in ["B", "C"] {
            let f = Formula::atom(name);
            prop_assert!((marginal(&t, &f).unwrap() - marginal(&other, &f).unwrap()).abs() <= 1e-12);
        }
        for tau in all_taus() {
            let here = expected_utility_on(&t, &u, &tau).unwrap();
            let there = expected_utility_on(&other, &u, &tau).unwrap();
            prop_assert!((here - there).abs() <= 1e-9, "{tau:?}: {here} vs {there}");
        }
        let (a, b) = (optimal_treatment_on(&t, &u).unwrap(), optimal_treatment_on(&other, &u).unwrap());
        prop_assert!((a.expected_utility - b.expected_utility).abs() <= 1e-9);
    }

    #[test]
    fn the_optimiser_agrees_with_exhaustive_row_sums(values in proptest::array::uniform16(-10.0f64..10.0)) {
        let t = circuit_table();
        let u = interacting_utility(&values);
        let best = all_taus()
            .into_iter()
            .map(|tau| expected_utility_on(&t, &u, &tau).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let decision = optimal_treatment_on(&t, &u).unwrap();
        prop_assert!((decision.expected_utility - best).abs() <= 1e-9);
        let direct = expected_utility_on(&t, &u, &decision.chosen).unwrap();
        prop_assert!((decision.expected_utility - direct).abs() <= 1e-9);
        prop_assert!(decision.per_treatment_breakdown.is_none());
    }
}
