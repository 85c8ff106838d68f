#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riemext::acceptance::{random_base_form, random_nilpotent_scenario, random_poly};
use riemext::affine::{
    affine_curvature, base_point, parallel_nilpotent_check, AffineSurface, EndoField, Kernel,
};
use riemext::exprkit::{eval, Coord, Expr, Point4, Sampler};
use riemext::walker::{build_metric, metric_at};

const TOL: f64 = 1e-9;
const BASE: [Coord; 2] = [Coord::X1, Coord::X2];

fn point() -> impl Strategy<Value = Point4> {
    prop::array::uniform4(-1.0f64..1.0)
}

fn at(e: &Expr, p: &Point4) -> f64 {
    eval(e, p).unwrap()
}

fn random_surface(seed: u64) -> AffineSurface {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    AffineSurface::new(std::array::from_fn(|_| random_poly(&mut r, &BASE, 2))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_ricci_matches_the_closed_matrix(seed in any::<u64>(), p in point()) {
        let (s, _) = random_nilpotent_scenario(&mut ChaCha8Rng::seed_from_u64(seed));
        let q = base_point([p[0], p[1]]);
        let rho = affine_curvature(&s, [p[0], p[1]]).unwrap().rho;
        let (g111, g112) = (s.gamma(0, 0, 0), s.gamma(0, 0, 1));
        let d1 = |e: &Expr| at(&e.diff(Coord::X1), &q);
        let d2 = |e: &Expr| at(&e.diff(Coord::X2), &q);
        let want = [[d2(g112) - d1(g111), d2(g111)], [-d2(g111), 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((rho[i][j] - want[i][j]).abs() <= TOL * (1.0 + want[i][j].abs()));
            }
        }
    }

    #[test]
    fn recurrence_form_satisfies_its_equation(seed in any::<u64>(), p in point()) {
        let s = random_surface(seed);
        let c = affine_curvature(&s, [p[0], p[1]]).unwrap();
        if let Some(r) = c.recurrence_residual {
            prop_assert!(c.eta.is_some());
            prop_assert!(r <= 1e-8, "residual {r}");
        }
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(c.rho_sym[i][j], c.rho_sym[j][i]);
                prop_assert!((c.rho_sym[i][j] + c.rho_sk[i][j] - c.rho[i][j]).abs() <= 1e-12 * (1.0 + c.rho[i][j].abs()));
            }
        }
    }

    #[test]
    fn canonical_charts_carry_a_parallel_nilpotent_t(seed in any::<u64>()) {
        let (s, _) = random_nilpotent_scenario(&mut ChaCha8Rng::seed_from_u64(seed));
        let r = parallel_nilpotent_check(&s, &EndoField::nilpotent(), &Sampler::default().with_count(8)).unwrap();
        prop_assert_eq!(r.canonical, Some(0.0));
        prop_assert!(r.worst() <= TOL);
        prop_assert_eq!(r.kernel, Kernel::Direction([0.0, 1.0]));
    }

    #[test]
    fn fiber_directions_are_null(seed in any::<u64>(), p in point(), t in prop::array::uniform4(-2.0f64..2.0)) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_base_form(&mut r);
        let g = build_metric(&random_surface(seed), Some(&phi), Some(&EndoField::constant([[t[0], t[1]], [t[2], t[3]]])));
        let m = metric_at(&g, &p).unwrap().matrix;
        for i in 2..4 {
            for j in 2..4 {
                prop_assert!(m[i][j].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn block_is_quadratic_in_the_fiber(
        seed in any::<u64>(),
        p in point(),
        t in prop::array::uniform4(-2i32..=2),
    ) {
        let t = [[f64::from(t[0]), f64::from(t[1])], [f64::from(t[2]), f64::from(t[3])]];
        let s = random_surface(seed);
        let phi = random_base_form(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let g = build_metric(&s, Some(&phi), Some(&EndoField::constant(t)));
        let fiber = [Coord::Xp1, Coord::Xp2];
        let mut second = 0.0f64;
        for (e, i, j) in [(&g.a, 0, 0), (&g.c, 0, 1), (&g.b, 1, 1)] {
            for u in 0..2 {
                for v in 0..2 {
                    let d2 = e.diff(fiber[u]).diff(fiber[v]);
                    let want = t[i][u] * t[j][v] + t[j][u] * t[i][v];
                    prop_assert_eq!(at(&d2, &p), want);
                    second = second.max(want.abs());
                    for w in fiber {
                        prop_assert_eq!(at(&d2.diff(w), &p), 0.0);
                    }
                }
            }
        }
        prop_assert_eq!(second == 0.0, t.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_t_gives_the_square_of_the_tautological_form(
        seed in any::<u64>(),
        p in point(),
        c in -3.0f64..3.0,
    ) {
        let s = random_surface(seed);
        let phi = random_base_form(&mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let with_t = build_metric(&s, Some(&phi), Some(&EndoField::constant([[c, 0.0], [0.0, c]])));
        let without = build_metric(&s, Some(&phi), None);
        let x = [p[2], p[3]];
        let pairs = [(&with_t.a, &without.a, 0, 0), (&with_t.c, &without.c, 0, 1), (&with_t.b, &without.b, 1, 1)];
        for (a, b, i, j) in pairs {
            let want = c * c * x[i] * x[j];
            let got = at(a, &p) - at(b, &p);
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs() + at(b, &p).abs()));
        }
    }
}
