use proptest::prelude::*;
use riemext::fixtures::fixture;
use riemext::geodesics::{completeness_probe, integrate_geodesic, GeodesicState, ProbeConfig};
use riemext::scenario::Overrides;
use riemext::walker::WalkerMetric;

const TOL: f64 = 1e-9;

fn metric(id: &str) -> WalkerMetric {
    fixture(id)
        .unwrap()
        .resolve(&Overrides::default())
        .unwrap()
        .metric
}

fn state() -> impl Strategy<Value = GeodesicState> {
    (
        prop::array::uniform4(-1.0f64..1.0),
        prop::array::uniform4(-1.0f64..1.0),
    )
        .prop_map(|(x, v)| GeodesicState::new(x, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_conserved(id in prop::sample::select(vec!["F1", "F2", "F3", "F4", "F5"]), s in state()) {
        // Some fixtures have geodesics that leave every compact set in finite
        // time; the invariant concerns trajectories that were integrated.
        let run = integrate_geodesic(&metric(id), s, 1.0, TOL);
        prop_assume!(run.is_ok());
        let run = run.unwrap();
        let r = &run.report;
        prop_assert!(r.reached);
        prop_assert!(r.max_drift <= 100.0 * TOL * (1.0 + r.energy0.abs()), "{id}: drift {}", r.max_drift);
    }

    #[test]
    fn reversing_the_velocity_retraces_the_path(id in prop::sample::select(vec!["F1", "F2", "F3"]), s in state()) {
        let g = metric(id);
        let there = integrate_geodesic(&g, s, 1.0, TOL);
        prop_assume!(there.is_ok());
        let there = there.unwrap();
        let end = there.last();
        let back = GeodesicState::new(end.x, end.v.map(|v| -v));
        let home = integrate_geodesic(&g, back, 1.0, TOL).unwrap();
        let last = home.last();
        for k in 0..4 {
            prop_assert!((last.x[k] - s.x[k]).abs() <= 1e-5, "x{k}: {} vs {}", last.x[k], s.x[k]);
            prop_assert!((last.v[k] + s.v[k]).abs() <= 1e-5);
        }
    }

    #[test]
    fn x1_is_affine_on_f1(s in state()) {
        let run = integrate_geodesic(&metric("F1"), s, 3.0, TOL).unwrap();
        for p in &run.points {
            let st = &p.state;
            let want = s.x[0] + s.v[0] * st.t;
            prop_assert!((st.x[0] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            prop_assert!((st.v[0] - s.v[0]).abs() <= 1e-12);
        }
    }
}

#[test]
fn backward_integration_runs_to_negative_times() {
    let run = integrate_geodesic(
        &metric("F1"),
        GeodesicState::new([0.0; 4], [0.5, 0.0, 0.0, 1.0]),
        -2.0,
        TOL,
    )
    .unwrap();
    assert!(run.report.reached);
    assert_eq!(run.last().t, -2.0);
    assert!(run.points.windows(2).all(|w| w[1].state.t < w[0].state.t));
}

#[test]
fn csv_has_one_row_per_accepted_step() {
    let run = integrate_geodesic(
        &metric("F1"),
        GeodesicState::new([0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]),
        1.0,
        TOL,
    )
    .unwrap();
    let mut out = Vec::new();
    run.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,xp1,xp2,v1,v2,v3,v4,E"));
    assert_eq!(lines.count(), run.points.len());
    assert_eq!(run.points.len(), run.report.accepted + 1);
}

#[test]
fn flat_extension_probe_is_complete() {
    let cfg = ProbeConfig {
        seeds: 4,
        t_max: 10.0,
        ..ProbeConfig::default()
    };
    let runs = completeness_probe(&metric("F0"), &cfg);
    assert_eq!(runs.len(), 4);
    assert!(runs
        .iter()
        .all(|r| r.forward.reached() && r.backward.reached()));
}
