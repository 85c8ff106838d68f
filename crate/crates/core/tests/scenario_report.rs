use riemext::checks::REGISTERED;
use riemext::fixtures::{fixture, fixture_text, IDS};
use riemext::report::{curvature_dump, run_scenario, to_json};
use riemext::scenario::{Overrides, PhiSpec, Scenario, ScenarioError};
use riemext::selftest::run_fixture;

fn with_checks(checks: &str) -> String {
    format!(r#"{{ "T": [["0", "1"], ["0", "0"]], "checks": {checks} }}"#)
}

fn input_error(text: &str) -> String {
    match Scenario::from_json(text) {
        Ok(_) => panic!("accepted: {text}"),
        Err(e) => e.to_string(),
    }
}

#[test]
fn every_fixture_meets_its_expectations() {
    for id in IDS {
        let f = run_fixture(id).unwrap();
        for e in &f.expectations {
            assert!(
                e.matches,
                "{id} {}: expected {:?}, got {:?}",
                e.check, e.expected, e.actual
            );
        }
        assert!(f.passed, "{id} has checks without expectations");
    }
}

#[test]
fn fixtures_round_trip_through_json() {
    for id in IDS {
        let s = fixture(id).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s, "{id}");
        let raw: serde_json::Value = serde_json::from_str(fixture_text(id).unwrap()).unwrap();
        for e in raw["expected"].as_array().unwrap() {
            assert!(["PAPER", "TRIVIAL", "DERIVED"].contains(&e["provenance"].as_str().unwrap()));
        }
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let msg = input_error(r#"{ "T": [["0", "1"], ["0", "0"]], "colour": "red" }"#);
    assert!(msg.contains("colour"), "{msg}");
    let msg = input_error(&with_checks(r#"[{ "name": "soliton", "stedy": true }]"#));
    assert!(msg.contains("stedy"), "{msg}");
    let msg = input_error(r#"{ "surface": { "gamma": { "113": "x1" } } }"#);
    assert!(msg.contains("113"), "{msg}");
}

#[test]
fn unknown_check_lists_suggestions_and_the_registry() {
    let msg = input_error(&with_checks(r#"["bachh-zero"]"#));
    assert!(msg.contains("did you mean bach-zero"), "{msg}");
    for name in REGISTERED {
        assert!(msg.contains(name), "{name} missing from {msg}");
    }
}

#[test]
fn syntax_errors_carry_a_location() {
    let text = fixture_text("F1").unwrap();
    let cut = &text[..text.len() / 2];
    match Scenario::from_json(cut) {
        Err(ScenarioError::Syntax { line, column, .. }) => {
            assert!(line > 1);
            assert!(column > 0);
        }
        other => panic!("expected a syntax error, got {other:?}"),
    }
}

#[test]
fn structural_mistakes_are_reported() {
    assert!(input_error(&with_checks(r#"["bach-zero", "bach-zero"]"#)).contains("twice"));
    let bad_expectation = r#"{ "checks": ["bach-zero"],
        "expected": [{ "check": "ricci-flat", "verdict": "pass", "provenance": "PAPER" }] }"#;
    assert!(input_error(bad_expectation).contains("ricci-flat"));
    let bad_tag = r#"{ "checks": ["bach-zero"],
        "expected": [{ "check": "bach-zero", "verdict": "pass", "provenance": "GUESS" }] }"#;
    assert!(input_error(bad_tag).contains("GUESS"));
    assert!(input_error(r#"{ "sampling": { "count": 0 } }"#).contains("count"));
    assert!(
        input_error(r#"{ "phi": { "mode": "ricci", "free": { "11": "0", "12": "0" } } }"#)
            .contains("ricci")
    );
}

#[test]
fn bad_expressions_are_input_errors() {
    let s = Scenario::from_json(&with_checks(r#"["bach-zero"]"#).replace(r#""1""#, r#""x1 +""#))
        .unwrap();
    assert!(run_scenario(&s, &Overrides::default(), false).is_err());
    let s = Scenario::from_json(r#"{ "T": [["xp1", "1"], ["0", "0"]], "checks": ["bach-zero"] }"#)
        .unwrap();
    let e = run_scenario(&s, &Overrides::default(), false).unwrap_err();
    assert!(e.to_string().contains("fiber"), "{e}");
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    assert_eq!(to_json(&1.0f64), "1.0000000000000000e0\n");
    assert_eq!(to_json(&0.1f64), "1.0000000000000001e-1\n");
    assert_eq!(to_json(&f64::NAN), "null\n");
    for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -6.02e23] {
        let back: f64 = to_json(&x).trim().parse().unwrap();
        assert_eq!(back, x);
    }
}

#[test]
fn reports_are_reproducible_and_follow_the_seed() {
    let s = fixture("F4").unwrap();
    let ov = Overrides::default();
    let a = run_scenario(&s, &ov, false).unwrap().to_json();
    assert_eq!(a, run_scenario(&s, &ov, false).unwrap().to_json());
    let other = Overrides {
        seed: Some(7),
        ..ov
    };
    let b = run_scenario(&s, &other, false).unwrap();
    assert_eq!(b.seed, 7);
    assert_ne!(a, b.to_json());
    assert!(!a.contains("wall_time_s"));
    let timed = run_scenario(&s, &ov, true).unwrap();
    assert!(timed.checks.iter().all(|c| c.wall_time_s.is_some()));
}

#[test]
fn overrides_reach_the_report() {
    let s = fixture("F0").unwrap();
    let r = run_scenario(
        &s,
        &Overrides {
            samples: Some(5),
            atol: Some(1e-6),
            ..Overrides::default()
        },
        false,
    )
    .unwrap();
    assert_eq!(r.samples, 5);
    assert_eq!(r.atol, 1e-6);
    assert!(r.checks.iter().all(|c| c.samples <= 5));
}

#[test]
fn csv_has_one_row_per_check() {
    let r = run_scenario(&fixture("F4").unwrap(), &Overrides::default(), false).unwrap();
    let csv = r.to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "check,verdict,residual,tolerance,scale,w1,w2,w3,w4"
    );
    assert_eq!(rows.len(), r.checks.len() + 1);
    let bach = rows.iter().find(|l| l.starts_with("bach-zero,")).unwrap();
    assert!(bach.starts_with("bach-zero,fail,"));
    assert_eq!(bach.split(',').count(), 9);
    assert!(bach.split(',').skip(5).all(|w| !w.is_empty()));
}

#[test]
fn curvature_dump_uses_listed_points() {
    let mut s = fixture("F0").unwrap();
    s.points = Some(vec![[0.0, 0.0, 1.0, 0.0], [0.5, -0.5, 0.25, 2.0]]);
    let d = curvature_dump(&s, &Overrides::default()).unwrap();
    assert_eq!(d.points.len(), 2);
    assert_eq!(d.points[1].point, [0.5, -0.5, 0.25, 2.0]);
    let p = &d.points[0];
    assert_eq!(p.riemann.data.len(), 256);
    assert_eq!(p.christoffel.variance, [1, 2]);
    assert_eq!(p.scalar_curvature, 0.0);
    assert!(p.w_plus.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn completed_builder_describes_the_same_metric() {
    let s = fixture("F3").unwrap();
    let model = s.resolve(&Overrides::default()).unwrap();
    let done = s.completed(&model);
    assert!(matches!(done.phi, PhiSpec::Matrix(_)));
    let again = Scenario::from_json(&done.to_json()).unwrap();
    let m2 = again.resolve(&Overrides::default()).unwrap();
    assert_eq!(m2.phi, model.phi);
    assert_eq!(m2.metric.a, model.metric.a);
    assert_eq!(
        run_scenario(&again, &Overrides::default(), false)
            .unwrap()
            .checks,
        run_scenario(&s, &Overrides::default(), false)
            .unwrap()
            .checks,
    );
}
