//! Acceptance criteria 1-10 as executable measurements. Criterion 11
//! (determinism of the self-test) lives in [`crate::selftest`].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affine::{AffineSurface, EndoField, SymForm2};
use crate::closed_forms::{bach_block, bach_tilde};
use crate::curvature::{bach, riemann_ricci, weyl_schouten_cotton};
use crate::duality::{asd_obstruction, printed_wplus_crosscheck, weyl_split, Orientation};
use crate::error::Result;
use crate::exprkit::{eval, Coord, Expr, Point4, Sampler};
use crate::fixtures::fixture;
use crate::geodesics::{completeness_probe, integrate_geodesic, GeodesicState, ProbeConfig};
use crate::scenario::{Model, Overrides};
use crate::soliton::{
    build_bachflat_family, ce_residual, necessary_conditions_at, soliton_residual, BuildMode,
};
use crate::walker::{build_metric, WalkerMetric};

/// One measured clause of a criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clause {
    pub what: String,
    pub measured: f64,
    /// `<=`, `>=` or `==` (within `limit` of `target`).
    pub relation: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub limit: f64,
    pub passed: bool,
}

impl Clause {
    pub fn at_most(what: impl Into<String>, measured: f64, limit: f64) -> Self {
        Clause {
            what: what.into(),
            measured,
            relation: "<=",
            target: None,
            limit,
            passed: measured <= limit,
        }
    }

    pub fn at_least(what: impl Into<String>, measured: f64, limit: f64) -> Self {
        Clause {
            what: what.into(),
            measured,
            relation: ">=",
            target: None,
            limit,
            passed: measured >= limit,
        }
    }

    pub fn near(what: impl Into<String>, measured: f64, target: f64, limit: f64) -> Self {
        Clause {
            what: what.into(),
            measured,
            relation: "==",
            target: Some(target),
            limit,
            passed: (measured - target).abs() <= limit,
        }
    }

    pub fn holds(what: impl Into<String>, ok: bool) -> Self {
        Clause {
            what: what.into(),
            measured: if ok { 1.0 } else { 0.0 },
            relation: "==",
            target: Some(1.0),
            limit: 0.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub clauses: Vec<Clause>,
    /// Measurements reported alongside that do not gate the verdict.
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Criterion {
    fn new(
        id: u8,
        title: &str,
        body: impl FnOnce(&mut Vec<Clause>, &mut BTreeMap<String, f64>) -> Result<()>,
    ) -> Self {
        let mut clauses = Vec::new();
        let mut diagnostics = BTreeMap::new();
        let error = body(&mut clauses, &mut diagnostics)
            .err()
            .map(|e| e.to_string());
        Criterion {
            id,
            title: title.into(),
            passed: error.is_none() && !clauses.is_empty() && clauses.iter().all(|c| c.passed),
            clauses,
            diagnostics,
            error,
        }
    }

    /// `PASS|FAIL criterion N: title` followed by the failing clauses.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} criterion {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(" [error: {e}]"));
        }
        for c in self.clauses.iter().filter(|c| !c.passed) {
            match c.target {
                Some(t) => s.push_str(&format!(
                    " [{}: {:e}, want {:e} +- {:e}]",
                    c.what, c.measured, t, c.limit
                )),
                None => s.push_str(&format!(
                    " [{}: {:e}, want {} {:e}]",
                    c.what, c.measured, c.relation, c.limit
                )),
            }
        }
        s
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Quarter-integer coefficient in [-2, 2].
fn coeff(r: &mut ChaCha8Rng) -> Expr {
    Expr::rational(r.gen_range(-8..=8), 4)
}

fn monomial(vars: &[Coord], powers: &[i64]) -> Expr {
    vars.iter().zip(powers).fold(Expr::one(), |acc, (v, &n)| {
        Expr::mul(acc, Expr::pow(Expr::var(*v), n))
    })
}

/// Random polynomial of total degree at most `deg` in `vars`.
pub fn random_poly(r: &mut ChaCha8Rng, vars: &[Coord], deg: i64) -> Expr {
    let mut terms = Vec::new();
    let mut powers = vec![0i64; vars.len()];
    loop {
        if powers.iter().sum::<i64>() <= deg {
            terms.push(Expr::mul(coeff(r), monomial(vars, &powers)));
        }
        let mut k = 0;
        loop {
            if k == powers.len() {
                return Expr::sum(terms);
            }
            powers[k] += 1;
            if powers[k] <= deg {
                break;
            }
            powers[k] = 0;
            k += 1;
        }
    }
}

const BASE: [Coord; 2] = [Coord::X1, Coord::X2];
const ALL: [Coord; 4] = [Coord::X1, Coord::X2, Coord::Xp1, Coord::Xp2];

pub fn random_base_form(r: &mut ChaCha8Rng) -> SymForm2 {
    SymForm2::new(
        random_poly(r, &BASE, 2),
        random_poly(r, &BASE, 2),
        random_poly(r, &BASE, 2),
    )
    .expect("base polynomials")
}

/// Walker metric whose blocks are random polynomials of degree <= 2.
pub fn random_walker(r: &mut ChaCha8Rng) -> WalkerMetric {
    WalkerMetric::general(
        random_poly(r, &ALL, 2),
        random_poly(r, &ALL, 2),
        random_poly(r, &ALL, 2),
    )
}

/// Surface with Gamma_11^1 = Gamma_12^2 and Gamma_11^2 random, the other
/// symbols zero, so that T d1 = d2, T d2 = 0 is parallel, and a random Phi.
pub fn random_nilpotent_scenario(r: &mut ChaCha8Rng) -> (AffineSurface, SymForm2) {
    let p = random_poly(r, &BASE, 2);
    let q = random_poly(r, &BASE, 2);
    let s = AffineSurface::new([p.clone(), q, Expr::zero(), p, Expr::zero(), Expr::zero()])
        .expect("base polynomials");
    (s, random_base_form(r))
}

fn sampler(seed: u64, count: usize) -> Sampler {
    Sampler::default().with_seed(seed).with_count(count)
}

fn model(id: &str) -> Result<Model> {
    fixture(id)?.resolve(&Overrides::default())
}

fn mat_norm(m: &[[f64; 2]; 2]) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Constant T of the three kinds: nilpotent, scalar, generic.
/// Entries stay within +-3 so that the floating-point residual of an exactly
/// vanishing Bach tensor (which grows like |T|^6) sits well under 1e-8.
fn random_constant_t(r: &mut ChaCha8Rng, kind: usize) -> [[f64; 2]; 2] {
    let mut half = |max: i32| loop {
        let v = r.gen_range(-max..=max);
        if v != 0 {
            return f64::from(v) / 2.0;
        }
    };
    match kind {
        0 => {
            // v w^T with w.v = 0: T_i^j = v_i w^j.
            let (p, q, s) = (half(3), half(3), if half(1) > 0.0 { 1.0 } else { -1.0 });
            let (v, w) = ([p, q], [-q * s, p * s]);
            [[v[0] * w[0], v[0] * w[1]], [v[1] * w[0], v[1] * w[1]]]
        }
        1 => {
            let c = half(6);
            [[c, 0.0], [0.0, c]]
        }
        _ => loop {
            let t = [[half(6), half(6)], [half(6), half(6)]];
            let sq = [
                [
                    t[0][0] * t[0][0] + t[0][1] * t[1][0],
                    t[0][0] * t[0][1] + t[0][1] * t[1][1],
                ],
                [
                    t[1][0] * t[0][0] + t[1][1] * t[1][0],
                    t[1][0] * t[0][1] + t[1][1] * t[1][1],
                ],
            ];
            let scalar = t[0][1] == 0.0 && t[1][0] == 0.0 && t[0][0] == t[1][1];
            if mat_norm(&sq) > 0.0 && !scalar {
                return t;
            }
        },
    }
}

fn max_bach(g: &WalkerMetric, points: &[Point4]) -> Result<f64> {
    points
        .iter()
        .try_fold(0.0f64, |a, p| Ok(a.max(bach(g, p)?.max_abs())))
}

pub fn criterion_1() -> Criterion {
    Criterion::new(
        1,
        "Bach dichotomy for constant T on a flat base; F4 against the closed forms",
        |cl, dg| {
            let mut r = rng(101);
            let points = sampler(101, 4).points()?;
            let (mut special, mut generic) = (0.0f64, f64::INFINITY);
            let mut counts = [0usize; 3];
            for n in 0..20 {
                let kind = n % 3;
                let t = random_constant_t(&mut r, kind);
                let phi = random_base_form(&mut r);
                let g = build_metric(
                    &AffineSurface::flat(),
                    Some(&phi),
                    Some(&EndoField::constant(t)),
                );
                let b = max_bach(&g, &points)?;
                counts[kind] += 1;
                if kind < 2 {
                    special = special.max(b);
                } else {
                    generic = generic.min(b);
                }
            }
            cl.push(Clause::at_most(
                "max |B| over T^2 = 0 or T = c Id",
                special,
                1e-8,
            ));
            cl.push(Clause::at_least(
                "min over generic T of max |B|",
                generic,
                1e-3,
            ));
            dg.insert("nilpotent_cases".into(), counts[0] as f64);
            dg.insert("scalar_cases".into(), counts[1] as f64);
            dg.insert("generic_cases".into(), counts[2] as f64);

            let f4 = model("F4")?;
            let p = [0.0, 0.0, 1.0, 0.0];
            let b = bach(&f4.metric, &p)?;
            let t = f4.t.values(&p)?;
            let printed_tilde = bach_tilde(&t)[0][0];
            let printed_block = bach_block(&f4.surface, &f4.phi, &t, &p)?[0];
            cl.push(Clause::near("F4 B(d1, d1')", b.bach[0][2], 0.5, 1e-9));
            cl.push(Clause::near(
                "F4 B_11(0, 0, 1, 0)",
                b.bach[0][0],
                2.0 / 3.0,
                1e-9,
            ));
            cl.push(Clause::near(
                "F4 printed B-tilde_11",
                printed_tilde,
                0.5,
                1e-9,
            ));
            cl.push(Clause::near(
                "F4 printed B_11(0, 0, 1, 0)",
                printed_block,
                2.0 / 3.0,
                1e-9,
            ));
            Ok(())
        },
    )
}

pub fn criterion_2() -> Criterion {
    Criterion::new(
        2,
        "B agrees with 1/2 (-div_1 C + W[rho]) on random Walker metrics",
        |cl, dg| {
            let mut r = rng(202);
            let points = sampler(202, 2).points()?;
            let (mut quoted, mut route, mut size) = (0.0f64, 0.0f64, 0.0f64);
            for _ in 0..50 {
                let g = random_walker(&mut r);
                for p in &points {
                    let b = bach(&g, p)?;
                    quoted = quoted.max(b.quoted_relation_gap());
                    route = route.max(b.route_gap());
                    size = size.max(b.max_abs());
                }
            }
            cl.push(Clause::at_most(
                "max |B - 1/2 (-div_1 C + W[rho])|",
                quoted,
                1e-8,
            ));
            dg.insert("max |B - 1/2 (div_1 C + W[rho])|".into(), route);
            dg.insert("max |B|".into(), size);
            Ok(())
        },
    )
}

pub fn criterion_3() -> Criterion {
    Criterion::new(
        3,
        "Ricci tensor of F2 with Phi_22 = -2 and Phi_22 = 0",
        |cl, _| {
            let s = AffineSurface::with_symbols(&[(0, 0, 1, "x2")])?;
            let t = EndoField::nilpotent();
            let points = sampler(303, 16).points()?;
            let einstein = build_metric(&s, Some(&SymForm2::from_strs("0", "0", "-2")?), Some(&t));
            let plain = build_metric(&s, Some(&SymForm2::zero()), Some(&t));
            let (mut rho, mut tau, mut r11, mut rest) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for p in &points {
                let e = riemann_ricci(&einstein, p)?;
                rho = rho.max(e.ricci.max_abs());
                tau = tau.max(e.tau.abs());
                let q = riemann_ricci(&plain, p)?;
                r11 = r11.max((q.ricci.get(&[0, 0]) - 2.0).abs());
                for ix in q.ricci.indices() {
                    if ix != [0, 0] {
                        rest = rest.max(q.ricci.get(&ix).abs());
                    }
                }
            }
            cl.push(Clause::at_most("Phi_22 = -2: max |rho|", rho, 1e-9));
            cl.push(Clause::at_most("Phi_22 = -2: max |tau|", tau, 1e-9));
            cl.push(Clause::at_most("Phi_22 = 0: max |rho_11 - 2|", r11, 1e-9));
            cl.push(Clause::at_most("Phi_22 = 0: other components", rest, 1e-9));
            Ok(())
        },
    )
}

pub fn criterion_4() -> Criterion {
    Criterion::new(4, "Cotton tensor of nilpotent extensions", |cl, dg| {
        let mut r = rng(404);
        let points = sampler(404, 3).points()?;
        let (mut c121, mut rest, mut size) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let (s, phi) = random_nilpotent_scenario(&mut r);
            let g = build_metric(&s, Some(&phi), Some(&EndoField::nilpotent()));
            let rhs = Expr::neg(Expr::add(
                phi.get(1, 1).diff(Coord::X2),
                Expr::mul(Expr::int(2), s.ricci_sym_expr(0, 0).diff(Coord::X2)),
            ));
            for p in &points {
                let w = weyl_schouten_cotton(&g, p)?;
                let v = w.cotton.get(&[0, 1, 0]);
                c121 = c121.max((v - eval(&rhs, p)?).abs());
                size = size.max(v.abs());
                for ix in w.cotton.indices() {
                    if ix != [0, 1, 0] && ix != [1, 0, 0] {
                        rest = rest.max(w.cotton.get(&ix).abs());
                    }
                }
            }
        }
        cl.push(Clause::at_most(
            "max |C_121 + d2 Phi_22 + 2 d2 rho_sym_11|",
            c121,
            1e-9,
        ));
        cl.push(Clause::at_most("max |other components|", rest, 1e-9));
        dg.insert("max |C_121|".into(), size);
        Ok(())
    })
}

pub fn criterion_5() -> Criterion {
    Criterion::new(
        5,
        "Bach-flat steady solitons on a flat base with h = x1^2",
        |cl, _| {
            let mut r = rng(505);
            let sm = sampler(505, 16);
            let points = sm.points()?;
            let h = Expr::pow(Expr::var(Coord::X1), 2);
            let (mut res, mut lam, mut grad, mut b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for _ in 0..5 {
                let f11 = random_poly(&mut r, &BASE, 3);
                let f12 = random_poly(&mut r, &BASE, 3);
                let fam = build_bachflat_family(
                    &AffineSurface::flat(),
                    &EndoField::nilpotent(),
                    &h,
                    (&f11, &f12),
                    BuildMode::Soliton,
                    &sm,
                )?;
                let rep = soliton_residual(&fam.soliton, &sm)?;
                res = res.max(rep.residual.value).max(rep.lambda_spread);
                lam = lam.max(rep.lambda.abs());
                grad = grad.max(rep.grad_norm);
                b = b.max(max_bach(&fam.metric, &points)?);
            }
            cl.push(Clause::at_most("soliton residual", res, 1e-9));
            cl.push(Clause::near("inferred lambda", lam, 0.0, 0.0));
            cl.push(Clause::at_most("|grad f|^2", grad, 1e-12));
            cl.push(Clause::at_most("max |B|", b, 1e-8));
            Ok(())
        },
    )
}

pub fn criterion_6() -> Criterion {
    Criterion::new(
        6,
        "W- of nilpotent extensions is nonzero and nilpotent",
        |cl, _| {
            let mut r = rng(606);
            let points = sampler(606, 3).points()?;
            let (mut smallest, mut inv, mut sq) = (f64::INFINITY, 0.0f64, 0.0f64);
            for _ in 0..20 {
                let (s, phi) = random_nilpotent_scenario(&mut r);
                let g = build_metric(&s, Some(&phi), Some(&EndoField::nilpotent()));
                for p in &points {
                    let d = weyl_split(&g, p, Orientation::Auto)?;
                    smallest = smallest.min(d.minus.max_entry);
                    inv = d.minus.invariants.iter().fold(inv, |a, v| a.max(v.abs()));
                    sq = sq.max(d.minus.square_max);
                }
            }
            cl.push(Clause::at_least(
                "min over samples of max |W- entry|",
                smallest,
                1e-6,
            ));
            cl.push(Clause::at_most("max |tr W-^k|, k = 1, 2, 3", inv, 1e-9));
            cl.push(Clause::at_most("max |(W-)^2 entry|", sq, 1e-9));
            Ok(())
        },
    )
}

pub fn criterion_7() -> Criterion {
    Criterion::new(
        7,
        "F2 is anti-self-dual; Phi_22 = 1 breaks it with obstruction -1/2",
        |cl, dg| {
            let f2 = model("F2")?;
            let sm = sampler(707, 16);
            let points = sm.points()?;
            let plus_max = |g: &WalkerMetric| -> Result<f64> {
                points.iter().try_fold(0.0f64, |a, p| {
                    Ok(a.max(weyl_split(g, p, Orientation::Auto)?.plus.max_entry))
                })
            };
            cl.push(Clause::at_most(
                "F2 max |W+ entry|",
                plus_max(&f2.metric)?,
                1e-8,
            ));
            let sol = soliton_residual(&f2.soliton, &sm)?;
            cl.push(Clause::at_most(
                "F2 soliton residual",
                sol.residual.value,
                1e-9,
            ));
            let phi = f2.phi.with_22(Expr::one())?;
            let obs = asd_obstruction(&f2.surface, &f2.t, &phi, &sm, 1e-9)?;
            let perturbed = build_metric(&f2.surface, Some(&phi), Some(&f2.t));
            let w = plus_max(&perturbed)?;
            cl.push(Clause::at_least("Phi_22 = 1: max |W+ entry|", w, 1e-8));
            cl.push(Clause::holds(
                "Phi_22 = 1: system verdict is not anti-self-dual",
                !obs.system_holds(1e-9),
            ));
            cl.push(Clause::near(
                "Phi_22 = 1: scalar obstruction",
                obs.scalar,
                -0.5,
                1e-9,
            ));
            dg.insert("scalar_max".into(), obs.scalar_max);
            Ok(())
        },
    )
}

pub fn criterion_8() -> Criterion {
    Criterion::new(
        8,
        "Printed W+ matrix against the pipeline; F3 W+_12 = -2",
        |cl, dg| {
            let mut r = rng(808);
            let points = sampler(808, 3).points()?;
            let (mut dev, mut entry) = (0.0f64, 0.0f64);
            for _ in 0..20 {
                let g = random_walker(&mut r);
                for p in &points {
                    let x = printed_wplus_crosscheck(&g, p)?;
                    dev = dev
                        .max((x.printed[1].abs() - x.pipeline[1].abs()).abs())
                        .max((x.printed[2].abs() - x.pipeline[2].abs()).abs());
                    entry = entry.max(x.entrywise);
                }
            }
            cl.push(Clause::at_most(
                "max ||tr M^k| printed - |tr M^k| pipeline|, k = 2, 3",
                dev,
                1e-7,
            ));
            dg.insert("entrywise null-frame deviation".into(), entry);
            let f3 = model("F3")?;
            let mut w12 = 0.0f64;
            for p in &sampler(809, 8).points()? {
                w12 = w12.max((printed_wplus_crosscheck(&f3.metric, p)?.w12 + 2.0).abs());
            }
            cl.push(Clause::at_most("F3 max |printed W+_12 + 2|", w12, 1e-12));
            Ok(())
        },
    )
}

pub fn criterion_9() -> Criterion {
    Criterion::new(
        9,
        "F1 is conformally Einstein with cosh(x1); F3 candidates are not",
        |cl, _| {
            let f1 = model("F1")?;
            let sm = sampler(909, 16);
            let cosh = Expr::call(crate::exprkit::Func::Cosh, Expr::var(Coord::X1));
            let ce = ce_residual(&cosh, &f1.metric, &sm)?;
            cl.push(Clause::at_most("F1 max |E|", ce.residual.value, 1e-8));
            cl.push(Clause::at_most(
                "F1 max |rho_bar - lambda_bar g_bar|",
                ce.einstein_residual.value,
                1e-7,
            ));
            let (mut cot, mut b) = (0.0f64, 0.0f64);
            for p in &sm.points()? {
                let e = necessary_conditions_at(&f1.metric, &cosh, p)?;
                cot = cot.max(e.cotton);
                b = b.max(e.bach);
            }
            cl.push(Clause::at_most("F1 max |C + 2 W(grad sigma)|", cot, 1e-7));
            cl.push(Clause::at_most("F1 max |B|", b, 1e-7));
            let f3 = model("F3")?;
            for phi in ["1 + x1^2/100", "exp(x1/10)"] {
                let e = ce_residual(&crate::exprkit::parse(phi)?, &f3.metric, &sm)?;
                cl.push(Clause::at_least(
                    format!("F3 phi = {phi}: max |E|"),
                    e.residual.value,
                    1e-4,
                ));
            }
            Ok(())
        },
    )
}

pub fn criterion_10() -> Criterion {
    Criterion::new(
        10,
        "F1 geodesics: cosh solution, energy, completeness probe",
        |cl, dg| {
            let f1 = model("F1")?;
            let init = GeodesicState::new([0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]);
            let short = integrate_geodesic(&f1.metric, init, 2.0, 1e-9)?;
            let exact = (2.0f64.sqrt() * 2.0).cosh();
            cl.push(Clause::near("x2'(2)", short.last().x[3], exact, 1e-6));
            let long = integrate_geodesic(&f1.metric, init, 50.0, 1e-9)?;
            cl.push(Clause::at_most(
                "max |E(t) - E(0)| on [0, 50]",
                long.report.max_drift,
                1e-6,
            ));
            dg.insert(
                "relative energy drift on [0, 50]".into(),
                long.report.max_relative_drift,
            );
            let runs = completeness_probe(&f1.metric, &ProbeConfig::default());
            let reached = runs
                .iter()
                .filter(|r| r.forward.reached() && r.backward.reached())
                .count();
            let blowups = runs
                .iter()
                .filter(|r| r.forward.blowup() || r.backward.blowup())
                .count();
            cl.push(Clause::near(
                "seeds reaching +-50",
                reached as f64,
                runs.len() as f64,
                0.0,
            ));
            cl.push(Clause::at_most("seeds with blowup", blowups as f64, 0.0));
            dg.insert(
                "probe max relative energy drift".into(),
                runs.iter().fold(0.0f64, |a, r| a.max(r.max_relative_drift)),
            );
            Ok(())
        },
    )
}

/// Criteria 1-10 in order.
pub fn criteria() -> Vec<Criterion> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
