#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riemext::acceptance::{random_base_form, random_walker};
use riemext::affine::{AffineSurface, EndoField};
use riemext::closed_forms::{bach_block, bach_tilde};
use riemext::curvature::{bach, cotton_jets, curvature_jets, div4_weyl_jets, MetricJets};
use riemext::exprkit::Point4;
use riemext::walker::build_metric;

const TOL: f64 = 1e-9;

fn point() -> impl Strategy<Value = Point4> {
    prop::array::uniform4(-1.0f64..1.0)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riemann_symmetries_and_bianchi(seed in any::<u64>(), p in point()) {
        let g = random_walker(&mut ChaCha8Rng::seed_from_u64(seed));
        let c = curvature_jets(&MetricJets::walker(&g, &p, 2).unwrap()).unwrap();
        let r = |i, j, k, l| c.riemann.at(&[i, j, k, l]).value();
        let scale = c.riemann.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..4 { for j in 0..4 { for k in 0..4 { for l in 0..4 {
            prop_assert!(close(r(i, j, k, l), -r(j, i, k, l), scale));
            prop_assert!(close(r(i, j, k, l), -r(i, j, l, k), scale));
            prop_assert!(close(r(i, j, k, l), r(k, l, i, j), scale));
            prop_assert!(close(r(i, j, k, l) + r(j, k, i, l) + r(k, i, j, l), 0.0, scale));
        }}}}
    }

    #[test]
    fn ricci_symmetric_and_weyl_trace_free(seed in any::<u64>(), p in point()) {
        let g = random_walker(&mut ChaCha8Rng::seed_from_u64(seed));
        let m = MetricJets::walker(&g, &p, 2).unwrap();
        let c = curvature_jets(&m).unwrap();
        let ginv = m.ginv_values();
        let scale = c.riemann.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!(close(c.ricci.at(&[i, j]).value(), c.ricci.at(&[j, i]).value(), scale));
            }
        }
        // Contract each of the six index pairs of W with g^-1.
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (a, b) in pairs {
            let free: Vec<usize> = (0..4).filter(|k| *k != a && *k != b).collect();
            for u in 0..4 {
                for v in 0..4 {
                    let mut sum = 0.0;
                    for s in 0..4 {
                        for t in 0..4 {
                            let mut ix = [0usize; 4];
                            ix[a] = s;
                            ix[b] = t;
                            ix[free[0]] = u;
                            ix[free[1]] = v;
                            sum += ginv[s][t] * c.weyl.at(&ix).value();
                        }
                    }
                    prop_assert!(close(sum, 0.0, scale), "pair {a}{b}: {sum}");
                }
            }
        }
    }

    #[test]
    fn cotton_antisymmetric_cyclic_and_weyl_divergence(seed in any::<u64>(), p in point()) {
        let g = random_walker(&mut ChaCha8Rng::seed_from_u64(seed));
        let m = MetricJets::walker(&g, &p, 3).unwrap();
        let c = curvature_jets(&m).unwrap();
        let cot = cotton_jets(&c).unwrap();
        let div = div4_weyl_jets(&m, &c).unwrap();
        let v = |i, j, k| cot.at(&[i, j, k]).value();
        let scale = cot.values().iter().chain(&div.values()).fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..4 { for j in 0..4 { for k in 0..4 {
            prop_assert!(close(v(i, j, k), -v(j, i, k), scale));
            prop_assert!(close(v(i, j, k) + v(j, k, i) + v(k, i, j), 0.0, scale));
            prop_assert!(close(div.at(&[i, j, k]).value(), 0.5 * v(i, j, k), scale));
        }}}
    }

    #[test]
    fn bach_symmetric_and_trace_free(seed in any::<u64>(), p in point()) {
        let g = random_walker(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = bach(&g, &p).unwrap();
        let ginv = MetricJets::walker(&g, &p, 0).unwrap().ginv_values();
        let scale = b.scale.max(b.max_abs());
        let mut trace = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!(close(b.bach[i][j], b.bach[j][i], scale));
                trace += ginv[i][j] * b.bach[i][j];
            }
        }
        prop_assert!(close(trace, 0.0, scale));
        prop_assert!(close(b.route_gap(), 0.0, scale));
    }

    #[test]
    fn nilpotent_extension_ricci_operator(seed in any::<u64>(), p in point()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (s, phi) = riemext::acceptance::random_nilpotent_scenario(&mut r);
        let g = build_metric(&s, Some(&phi), Some(&EndoField::nilpotent()));
        let m = MetricJets::walker(&g, &p, 2).unwrap();
        let c = curvature_jets(&m).unwrap();
        let ginv = m.ginv_values();
        let rho = |i, j| c.ricci.at(&[i, j]).value();
        let scale = c.ricci.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(close(c.tau.value(), 0.0, scale));
        for i in 0..4 {
            for j in 0..4 {
                let mut sq = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        sq += rho(i, k) * ginv[k][l] * rho(l, j);
                    }
                }
                prop_assert!(close(sq, 0.0, scale * scale));
            }
        }
    }

    #[test]
    fn constant_t_bach_matches_closed_forms(
        seed in any::<u64>(),
        p in point(),
        t in prop::array::uniform2(prop::array::uniform2(-2i32..=2)),
    ) {
        let t = t.map(|row| row.map(f64::from));
        let phi = random_base_form(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = AffineSurface::flat();
        let g = build_metric(&s, Some(&phi), Some(&EndoField::constant(t)));
        let b = bach(&g, &p).unwrap();
        let scale = 1.0 + b.scale;
        let tilde = bach_tilde(&t);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!(close(b.bach[i][j + 2], tilde[i][j], scale));
            }
        }
        let [b11, b12, b22] = bach_block(&s, &phi, &t, &p).unwrap();
        prop_assert!(close(b.bach[0][0], b11, scale));
        prop_assert!(close(b.bach[0][1], b12, scale));
        prop_assert!(close(b.bach[1][1], b22, scale));
        // The fiber-fiber block always vanishes.
        for i in 2..4 {
            for j in 2..4 {
                prop_assert!(close(b.bach[i][j], 0.0, scale));
            }
        }
    }
}
