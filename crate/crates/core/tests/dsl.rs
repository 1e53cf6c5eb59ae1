mod common;

use common::{hyp, shape, OBSERVABLES};
use diagnoscope::dsl::{parse_document, parse_model_file, Bundle, DslError};
use diagnoscope::{FaultModel, FindingKind, Literal, ObservationSet, UtilityModel};
use proptest::prelude::*;

const CIRCUIT: &str = include_str!("../fixtures/circuit4.fdl");

#[test]
fn circuit_fixture_declares_the_four_gate_model() {
    let b = parse_model_file(CIRCUIT).unwrap();
    assert_eq!(b.model.hypotheses().len(), 4);
    assert_eq!(b.model.rules().len(), 3);
    let priors: Vec<f64> = b.model.hypotheses().iter().map(|h| h.prior).collect();
    assert_eq!(priors, [0.016, 0.1, 0.15, 0.1]);
    assert_eq!(b.observations, Some(ObservationSet::positive("E")));
}

#[test]
fn utility_fixtures_parse_as_decision_documents() {
    for text in [
        include_str!("../fixtures/ex42.fdl"),
        include_str!("../fixtures/ex43.fdl"),
    ] {
        let decisions = diagnoscope::dsl::parse_utility_document(text).unwrap();
        let (b, findings) = parse_document(CIRCUIT)
            .unwrap()
            .with_decisions_from(&decisions)
            .assemble();
        assert!(findings.is_empty(), "{findings:?}");
        let u = b.utility.unwrap();
        assert_eq!(u.treatments.len(), 4);
        assert_eq!(u.additive.len(), 4);
    }
}

#[test]
fn prior_out_of_range_is_a_finding_not_a_syntax_error() {
    let text = CIRCUIT.replace("prior 0.15", "prior 1.3");
    assert!(parse_document(&text).is_ok());
    match parse_model_file(&text) {
        Err(DslError::Invalid(findings)) => {
            assert_eq!(findings.len(), 1);
            assert_eq!(findings[0].kind, FindingKind::PriorOutOfRange);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn dangling_conjunction_points_at_the_ampersand() {
    let text = CIRCUIT.replace("rule B & C => E", "rule B & => E");
    let Err(DslError::Parse(err)) = parse_model_file(&text) else {
        panic!("expected a parse error")
    };
    let line = text.lines().nth(err.span.line - 1).unwrap();
    let at: String = line
        .chars()
        .skip(err.span.column - 1)
        .take(err.span.length)
        .collect();
    assert_eq!(at, "&");
    assert!(!err.message.is_empty());
}

#[test]
fn unknown_keywords_are_rejected() {
    let err = parse_document("hypothesis A prior 0.1\nassume A\n").unwrap_err();
    assert_eq!(err.span.line, 2);
    assert_eq!(err.span.column, 1);
}

fn bundle() -> impl Strategy<Value = Bundle> {
    let hyps = (1usize..=5).prop_flat_map(|m| proptest::collection::vec(0.0f64..=1.0, m));
    (
        hyps,
        proptest::collection::vec((0u64..32, 0usize..2), 0..4),
        any::<bool>(),
        proptest::collection::vec(shape(), 0..3),
        proptest::collection::vec((0usize..2, any::<bool>()), 0..3),
        proptest::collection::vec(
            [-20.0f64..20.0, -20.0..20.0, -20.0..20.0, -20.0..20.0],
            0..3,
        ),
        proptest::collection::vec((any::<bool>(), any::<bool>(), -5.0f64..5.0), 0..3),
    )
        .prop_map(|(priors, rules, free, facts, observed, additive, joint)| {
            let m = priors.len();
            let mut model = FaultModel::new();
            for (k, p) in priors.iter().enumerate() {
                model = model.with_hypothesis(hyp(k), *p);
            }
            model = model
                .with_observable(OBSERVABLES[0])
                .with_observable(OBSERVABLES[1]);
            if free {
                model = model.with_free_observable("Aux");
            }
            for (body, head) in rules {
                let body: Vec<String> = (0..m).filter(|k| body >> k & 1 == 1).map(hyp).collect();
                model = model.with_rule(body, OBSERVABLES[head]);
            }
            for f in facts {
                model = model.with_fact(f.resolve(m));
            }
            let observations = (!observed.is_empty()).then(|| {
                let mut set = ObservationSet::new();
                for (o, positive) in observed {
                    let _ = set.insert(Literal {
                        id: OBSERVABLES[o].into(),
                        positive,
                    });
                }
                set
            });
            let utility = (!additive.is_empty()).then(|| {
                let mut u = UtilityModel::new();
                for (k, v) in additive.iter().enumerate() {
                    u = u
                        .with_treatment(format!("Fix{k}"), hyp(k % m))
                        .with_additive(format!("Fix{k}"), *v);
                }
                for (when_faulty, given_treated, value) in joint {
                    u = u.with_joint(
                        vec![
                            Literal {
                                id: hyp(0),
                                positive: when_faulty,
                            },
                            Literal::negative(hyp(m - 1)),
                        ],
                        if given_treated {
                            vec![Literal::positive("Fix0")]
                        } else {
                            vec![]
                        },
                        value,
                    );
                }
                u
            });
            Bundle {
                model,
                observations,
                utility,
            }
        })
}

const VOCABULARY: &[&str] = &[
    "hypothesis",
    "prior",
    "observable",
    "free",
    "rule",
    "fact",
    "observe",
    "treatment",
    "targets",
    "utility",
    "joint",
    "when",
    "given",
    "value",
    "treat-faulty",
    "skip-ok",
    "true",
    "false",
    "A",
    "B",
    "E",
    "0.5",
    "-3",
    "1e400",
    "1.2.3",
    "&",
    "|",
    "!",
    "->",
    "<->",
    "=>",
    "(",
    ")",
    ",",
    "$",
    "#",
    "~",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_text_round_trips(b in bundle()) {
        let text = b.to_string();
        let doc = parse_document(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let (again, _) = doc.assemble();
        prop_assert_eq!(&again, &b);
        prop_assert_eq!(again.to_string(), text);
    }

    #[test]
    fn parse_errors_point_inside_the_text(
        lines in proptest::collection::vec(proptest::collection::vec(proptest::sample::select(VOCABULARY), 0..8), 1..5),
        spaces in proptest::collection::vec(0usize..3, 40),
    ) {
        let mut text = String::new();
        for (i, line) in lines.iter().enumerate() {
            for (j, word) in line.iter().enumerate() {
                text.push_str(&" ".repeat(spaces[(i * 8 + j) % spaces.len()]));
                text.push_str(word);
                text.push(' ');
            }
            text.push('\n');
        }
        if let Err(e) = parse_document(&text) {
            prop_assert!(!e.message.is_empty());
            prop_assert!(e.span.line >= 1 && e.span.column >= 1 && e.span.length >= 1);
            let line = text.lines().nth(e.span.line - 1);
            prop_assert!(line.is_some(), "line {} outside the text", e.span.line);
            let width = line.unwrap().chars().count();
            prop_assert!(e.span.column + e.span.length - 1 <= width, "{:?} outside {:?}", e.span, line);
        }
    }
}
