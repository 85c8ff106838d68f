//! Registry of named checks that a scenario can request, and their reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::affine::{agrs_residual, parallel_nilpotent_check};
use crate::curvature::{bach, riemann_ricci, weyl_schouten_cotton};
use crate::duality::{asd_obstruction, printed_wplus_crosscheck, weyl_split, Orientation};
use crate::error::{Error, Result};
use crate::exprkit::{parse, EvalError, Expr, Point4, SampleError};
use crate::geodesics::{completeness_probe, ProbeConfig};
use crate::scenario::{Model, Verdict};
use crate::soliton::{
    ce_residual, ce_structured, dtensor_harmonicweyl, soliton_residual, CeCase, Lambda, SolitonData,
};

/// Names accepted in a scenario's `checks` list.
pub const REGISTERED: [&str; 18] = [
    "ricci-flat",
    "bach-zero",
    "bach-component",
    "cotton-zero",
    "soliton",
    "affine-soliton",
    "t-parallel",
    "self-dual",
    "anti-self-dual",
    "w-minus-nilpotent",
    "asd-system",
    "printed-wplus",
    "d-tensor-zero",
    "conformally-einstein",
    "conformally-einstein-case-i",
    "conformally-einstein-case-ii",
    "geodesic-complete",
    "conformal-necessary-conditions",
];

fn default_orientation() -> String {
    "auto".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckKind {
    /// max |rho|.
    RicciFlat,
    /// max |B|.
    BachZero,
    /// |B_ij(point) - equals|, indices 0-based over (x1, x2, xp1, xp2).
    BachComponent {
        i: usize,
        j: usize,
        point: [f64; 4],
        equals: f64,
    },
    /// max |C|.
    CottonZero,
    /// max |Hes f + rho - lambda g|; f defaults to the scenario potential.
    Soliton {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        steady: bool,
    },
    /// max |Hes h + 2 rho_sym| on the base.
    AffineSoliton,
    /// max |nabla T|.
    TParallel,
    /// max |W- entry|.
    SelfDual {
        #[serde(default = "default_orientation")]
        orientation: String,
    },
    /// max |W+ entry|.
    AntiSelfDual {
        #[serde(default = "default_orientation")]
        orientation: String,
    },
    /// W- invariants and square vanish.
    WMinusNilpotent {
        #[serde(default = "default_orientation")]
        orientation: String,
    },
    /// Residual of the anti-self-duality PDE system in normal form.
    AsdSystem,
    /// Printed W+ invariants against the pipeline, optionally pinning W+_12.
    PrintedWplus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w12: Option<f64>,
    },
    /// max |D| for the soliton potential.
    DTensorZero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<String>,
    },
    /// max |E| for the conformal factor phi.
    ConformallyEinstein { phi: String },
    /// Base-factor case equations together with E.
    ConformallyEinsteinCaseI { phi: String },
    /// Factor kappa xp2 + psi: case equations together with E.
    #[serde(rename = "conformally-einstein-case-ii")]
    ConformallyEinsteinCaseIi { kappa: f64, psi: String },
    /// Random geodesics reach +-t_max without step underflow.
    GeodesicComplete {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seeds: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Necessary conditions C + 2 W(grad sigma) = 0 and B = 0 for phi.
    ConformalNecessaryConditions { phi: String },
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::RicciFlat => "ricci-flat",
            CheckKind::BachZero => "bach-zero",
            CheckKind::BachComponent { .. } => "bach-component",
            CheckKind::CottonZero => "cotton-zero",
            CheckKind::Soliton { .. } => "soliton",
            CheckKind::AffineSoliton => "affine-soliton",
            CheckKind::TParallel => "t-parallel",
            CheckKind::SelfDual { .. } => "self-dual",
            CheckKind::AntiSelfDual { .. } => "anti-self-dual",
            CheckKind::WMinusNilpotent { .. } => "w-minus-nilpotent",
            CheckKind::AsdSystem => "asd-system",
            CheckKind::PrintedWplus { .. } => "printed-wplus",
            CheckKind::DTensorZero { .. } => "d-tensor-zero",
            CheckKind::ConformallyEinstein { .. } => "conformally-einstein",
            CheckKind::ConformallyEinsteinCaseI { .. } => "conformally-einstein-case-i",
            CheckKind::ConformallyEinsteinCaseIi { .. } => "conformally-einstein-case-ii",
            CheckKind::GeodesicComplete { .. } => "geodesic-complete",
            CheckKind::ConformalNecessaryConditions { .. } => "conformal-necessary-conditions",
        }
    }

    /// Parses every expression and enum-like string the check carries.
    fn validate(&self) -> Result<()> {
        let expr = |name: &str, s: &str| {
            parse(s)
                .map(|_| ())
                .map_err(|e| Error::Input(format!("{}.{name}: {e}", self.name())))
        };
        match self {
            CheckKind::BachComponent { i, j, .. } if *i > 3 || *j > 3 => Err(Error::Input(
                "bach-component indices must be in 0..=3".into(),
            )),
            CheckKind::Soliton { f: Some(f), .. } | CheckKind::DTensorZero { f: Some(f) } => {
                expr("f", f)
            }
            CheckKind::SelfDual { orientation }
            | CheckKind::AntiSelfDual { orientation }
            | CheckKind::WMinusNilpotent { orientation } => {
                orientation.parse::<Orientation>().map(|_| ())
            }
            CheckKind::ConformallyEinstein { phi }
            | CheckKind::ConformallyEinsteinCaseI { phi }
            | CheckKind::ConformalNecessaryConditions { phi } => expr("phi", phi),
            CheckKind::ConformallyEinsteinCaseIi { psi, .. } => expr("psi", psi),
            _ => Ok(()),
        }
    }
}

/// One entry of a scenario's `checks` list: a bare name or an object with
/// `name`, an optional `label` and `tol`, and the check's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSpec {
    pub kind: CheckKind,
    pub label: Option<String>,
    /// Absolute tolerance overriding the scenario's.
    pub tol: Option<f64>,
}

impl CheckSpec {
    pub fn new(kind: CheckKind) -> Self {
        CheckSpec {
            kind,
            label: None,
            tol: None,
        }
    }

    /// Label if present, else the check name.
    pub fn key(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.name())
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let mut obj = match v {
            Value::String(name) => {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(name));
                m
            }
            Value::Object(m) => m,
            other => {
                return Err(Error::Input(format!(
                    "a check is a name or an object with a `name`, found {other}"
                )))
            }
        };
        let name = match obj.get("name") {
            Some(Value::String(n)) => n.clone(),
            _ => return Err(Error::Input("check object needs a string `name`".into())),
        };
        if !REGISTERED.contains(&name.as_str()) {
            return Err(Error::Input(unknown_check_message(&name)));
        }
        let label = match obj.remove("label") {
            None => None,
            Some(Value::String(l)) => Some(l),
            Some(_) => return Err(Error::Input(format!("{name}: `label` must be a string"))),
        };
        let tol = match obj.remove("tol") {
            None => None,
            Some(Value::Number(n)) if n.as_f64().is_some_and(|t| t >= 0.0) => n.as_f64(),
            Some(_) => {
                return Err(Error::Input(format!(
                    "{name}: `tol` must be a non-negative number"
                )))
            }
        };
        let kind: CheckKind = serde_json::from_value(Value::Object(obj))
            .map_err(|e| Error::Input(format!("{name}: {e}")))?;
        kind.validate()?;
        Ok(CheckSpec { kind, label, tol })
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.kind).expect("check serializes");
        if self.label.is_none() && self.tol.is_none() && v.as_object().is_some_and(|m| m.len() == 1)
        {
            return Value::String(self.kind.name().into());
        }
        let m = v.as_object_mut().expect("tagged enum is an object");
        if let Some(l) = &self.label {
            m.insert("label".into(), Value::String(l.clone()));
        }
        if let Some(t) = self.tol {
            m.insert("tol".into(), json!(t));
        }
        v
    }
}

impl<'de> Deserialize<'de> for CheckSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        CheckSpec::from_value(v).map_err(serde::de::Error::custom)
    }
}

impl Serialize for CheckSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

/// Registered names closest to `name`, best first.
pub fn suggestions(name: &str) -> Vec<&'static str> {
    let mut scored: Vec<(usize, &'static str)> = REGISTERED
        .iter()
        .map(|r| (strsim::levenshtein(name, r), *r))
        .filter(|(d, r)| *d <= 3 || r.starts_with(name) || name.starts_with(*r))
        .collect();
    scored.sort();
    scored.into_iter().map(|(_, r)| r).collect()
}

pub fn unknown_check_message(name: &str) -> String {
    let near = suggestions(name);
    let hint = if near.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", near.join(", "))
    };
    format!(
        "unknown check `{name}`{hint} registered checks: {}",
        REGISTERED.join(", ")
    )
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub verdict: Verdict,
    /// Worst residual over the samples.
    pub residual: f64,
    pub tolerance: f64,
    /// Size of the terms that cancel in the residual.
    pub scale: f64,
    /// Sample with the worst residual, reported for failures.
    pub witness: Option<Point4>,
    pub samples: usize,
    /// Samples outside the domain of some expression.
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub details: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl CheckReport {
    pub fn key(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Raw measurement before the tolerance is applied.
#[derive(Clone, Debug, Default)]
struct Measure {
    residual: f64,
    scale: f64,
    at: Option<Point4>,
    samples: usize,
    skipped: usize,
    /// Fixed tolerance, for counting checks.
    tolerance: Option<f64>,
    details: BTreeMap<String, Value>,
}

impl Measure {
    fn update(&mut self, r: f64, scale: f64, p: &Point4) {
        if !self.residual.is_nan() && (r.is_nan() || self.at.is_none() || r > self.residual) {
            self.residual = r;
            self.at = Some(*p);
        }
        self.scale = self.scale.max(scale);
    }

    fn detail(&mut self, k: &str, v: impl Serialize) {
        self.details.insert(
            k.into(),
            serde_json::to_value(v).expect("detail serializes"),
        );
    }
}

fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::Eval(EvalError::Domain(_)) | Error::Domain(_) | Error::Singular(_)
    )
}

/// Runs `f` at every sample, skipping points outside the expression domain.
fn sweep(model: &Model, mut f: impl FnMut(&Point4, &mut Measure) -> Result<()>) -> Result<Measure> {
    let mut m = Measure::default();
    for p in model.sampler.points()? {
        match f(&p, &mut m) {
            Ok(()) => m.samples += 1,
            Err(e) if skippable(&e) => m.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if m.samples == 0 {
        return Err(SampleError::AllSkipped { skipped: m.skipped }.into());
    }
    Ok(m)
}

fn expr_or(text: &Option<String>, default: &Expr) -> Result<Expr> {
    match text {
        Some(s) => Ok(parse(s)?),
        None => Ok(default.clone()),
    }
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(
        0.0f64,
        |a, v| if v.is_nan() { f64::NAN } else { a.max(v.abs()) },
    )
}

fn measure(kind: &CheckKind, model: &Model) -> Result<Measure> {
    let g = &model.metric;
    match kind {
        CheckKind::RicciFlat => {
            let mut tau = 0.0f64;
            let mut m = sweep(model, |p, m| {
                let r = riemann_ricci(g, p)?;
                tau = tau.max(r.tau.abs());
                m.update(r.ricci.max_abs(), r.riemann.max_abs(), p);
                Ok(())
            })?;
            m.detail("max_abs_tau", tau);
            Ok(m)
        }
        CheckKind::BachZero => {
            let (mut route, mut quoted) = (0.0f64, 0.0f64);
            let mut m = sweep(model, |p, m| {
                let b = bach(g, p)?;
                route = route.max(b.route_gap());
                quoted = quoted.max(b.quoted_relation_gap());
                m.update(b.max_abs(), b.scale, p);
                Ok(())
            })?;
            m.detail("cotton_route_gap", route);
            m.detail("quoted_relation_gap", quoted);
            Ok(m)
        }
        CheckKind::BachComponent {
            i,
            j,
            point,
            equals,
        } => {
            let b = bach(g, point)?;
            let v = b.bach[*i][*j];
            let mut m = Measure {
                samples: 1,
                ..Measure::default()
            };
            m.update((v - equals).abs(), equals.abs(), point);
            m.detail("value", v);
            m.detail("expected", equals);
            Ok(m)
        }
        CheckKind::CottonZero => sweep(model, |p, m| {
            let w = weyl_schouten_cotton(g, p)?;
            m.update(w.cotton.max_abs(), w.schouten.max_abs(), p);
            Ok(())
        }),
        CheckKind::Soliton { f, lambda, steady } => {
            let d = SolitonData {
                metric: g.clone(),
                f: expr_or(f, &model.soliton.f)?,
                lambda: lambda.map_or(Lambda::Infer, Lambda::Fixed),
            };
            let r = soliton_residual(&d, &model.sampler)?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            let mut res = r.residual.value.max(r.lambda_spread);
            if *steady {
                res = res.max(r.lambda.abs());
            }
            m.update(res, 0.0, &r.residual.at.unwrap_or_default());
            m.detail("lambda", r.lambda);
            m.detail("lambda_spread", r.lambda_spread);
            m.detail("grad_norm", r.grad_norm);
            m.detail("trace_identity", r.trace_identity);
            m.detail("potential", d.f.to_string());
            Ok(m)
        }
        CheckKind::AffineSoliton => {
            let h = model
                .h
                .as_ref()
                .ok_or_else(|| Error::Input("affine-soliton needs a potential `h`".into()))?;
            let r = agrs_residual(&model.surface, h, &model.t, &model.sampler)?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            m.update(r.residual, r.scale, &r.witness.unwrap_or_default());
            m.detail("dh_on_ker_t", r.dh_ker);
            if let Some(n) = r.note {
                m.detail("note", n);
            }
            Ok(m)
        }
        CheckKind::TParallel => {
            let r = parallel_nilpotent_check(&model.surface, &model.t, &model.sampler)?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            m.update(r.nabla_t, r.t_norm, &[0.0; 4]);
            m.at = None;
            m.detail("printed_system", r.nabla_t_printed);
            m.detail("nilpotency", r.nilpotency);
            m.detail("canonical", r.canonical);
            m.detail("kernel_geodesic", r.ker_geodesic);
            Ok(m)
        }
        CheckKind::SelfDual { orientation }
        | CheckKind::AntiSelfDual { orientation }
        | CheckKind::WMinusNilpotent { orientation } => {
            let o: Orientation = orientation.parse()?;
            let mut sign = 0.0;
            let mut other = 0.0f64;
            let mut m = sweep(model, |p, m| {
                let r = weyl_split(g, p, o)?;
                sign = r.orientation_sign;
                let (res, side) = match kind {
                    CheckKind::SelfDual { .. } => (r.minus.max_abs(), r.plus.max_abs()),
                    CheckKind::AntiSelfDual { .. } => (r.plus.max_abs(), r.minus.max_abs()),
                    _ => (
                        max_abs(r.minus.invariants).max(r.minus.square_max),
                        r.minus.max_abs(),
                    ),
                };
                other = other.max(side);
                m.update(res, r.scale, p);
                Ok(())
            })?;
            m.detail("orientation_sign", sign);
            let key = match kind {
                CheckKind::SelfDual { .. } => "max_abs_w_plus",
                CheckKind::AntiSelfDual { .. } => "max_abs_w_minus",
                _ => "max_abs_w_minus",
            };
            m.detail(key, other);
            Ok(m)
        }
        CheckKind::AsdSystem => {
            let r = asd_obstruction(
                &model.surface,
                &model.t,
                &model.phi,
                &model.sampler,
                model.atol,
            )?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            m.update(r.first.max(r.scalar_max.abs()), r.scale, &[0.0; 4]);
            m.at = None;
            m.detail("first_equation", r.first);
            m.detail("scalar", r.scalar);
            m.detail("scalar_max", r.scalar_max);
            m.detail("max_abs_w_plus", r.wplus_max);
            Ok(m)
        }
        CheckKind::PrintedWplus { w12 } => {
            let (mut entry, mut leak, mut w12_seen) = (0.0f64, 0.0f64, None);
            let mut m = sweep(model, |p, m| {
                let x = printed_wplus_crosscheck(g, p)?;
                let mut r = x.deviation;
                if let Some(target) = w12 {
                    r = r.max((x.w12 - target).abs());
                }
                entry = entry.max(x.entrywise);
                leak = leak.max(x.frame_leak);
                w12_seen.get_or_insert(x.w12);
                m.update(r, max_abs(x.pipeline).max(max_abs(x.printed)), p);
                Ok(())
            })?;
            m.detail("entrywise", entry);
            m.detail("frame_leak", leak);
            m.detail("w12_first_sample", w12_seen);
            Ok(m)
        }
        CheckKind::DTensorZero { f } => {
            let d = SolitonData {
                metric: g.clone(),
                f: expr_or(f, &model.soliton.f)?,
                lambda: Lambda::Infer,
            };
            let r = dtensor_harmonicweyl(&d, &model.sampler)?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            m.update(
                r.d_max.value,
                r.cotton_max.value,
                &r.d_max.at.unwrap_or_default(),
            );
            m.detail("max_abs_cotton", r.cotton_max.value);
            m.detail("harmonic_weyl", r.harmonic_weyl);
            Ok(m)
        }
        CheckKind::ConformallyEinstein { phi } => {
            let r = ce_residual(&parse(phi)?, g, &model.sampler)?;
            let mut m = Measure {
                samples: r.samples,
                ..Measure::default()
            };
            m.update(
                r.residual.value,
                r.scale,
                &r.residual.at.unwrap_or_default(),
            );
            m.detail("einstein_residual", r.einstein_residual.value);
            m.detail("lambda_bar", r.lambda_bar);
            Ok(m)
        }
        CheckKind::ConformallyEinsteinCaseI { phi } => {
            structured(&CeCase::BaseFactor { phi: parse(phi)? }, model)
        }
        CheckKind::ConformallyEinsteinCaseIi { kappa, psi } => structured(
            &CeCase::WithVector {
                kappa: *kappa,
                psi: parse(psi)?,
            },
            model,
        ),
        CheckKind::GeodesicComplete {
            seeds,
            t_max,
            tol,
            radius,
            seed,
        } => {
            let d = ProbeConfig::default();
            let cfg = ProbeConfig {
                seed: seed.unwrap_or(model.sampler.seed),
                seeds: seeds.unwrap_or(d.seeds),
                t_max: t_max.unwrap_or(d.t_max),
                tol: tol.unwrap_or(d.tol),
                radius: radius.unwrap_or(d.radius),
            };
            let runs = completeness_probe(g, &cfg);
            let incomplete = runs
                .iter()
                .map(|r| usize::from(!r.forward.reached()) + usize::from(!r.backward.reached()))
                .sum::<usize>();
            let blowups = runs
                .iter()
                .map(|r| usize::from(r.forward.blowup()) + usize::from(r.backward.blowup()))
                .sum::<usize>();
            let mut m = Measure {
                residual: incomplete as f64,
                samples: runs.len(),
                tolerance: Some(0.0),
                ..Measure::default()
            };
            m.detail("t_max", cfg.t_max);
            m.detail("integrator_tol", cfg.tol);
            m.detail("blowups", blowups);
            m.detail(
                "max_energy_drift",
                max_abs(runs.iter().map(|r| r.max_drift)),
            );
            m.detail(
                "max_relative_energy_drift",
                max_abs(runs.iter().map(|r| r.max_relative_drift)),
            );
            m.detail("runs", &runs);
            Ok(m)
        }
        CheckKind::ConformalNecessaryConditions { phi } => {
            let phi = parse(phi)?;
            let mut literal = 0.0f64;
            let mut m = sweep(model, |p, m| {
                let e = crate::soliton::necessary_conditions_at(g, &phi, p)?;
                literal = literal.max(e.cotton_literal);
                m.update(e.cotton.max(e.bach), 0.0, p);
                Ok(())
            })?;
            m.detail("cotton_condition_literal", literal);
            Ok(m)
        }
    }
}

fn structured(case: &CeCase, model: &Model) -> Result<Measure> {
    let r = ce_structured(case, &model.surface, &model.t, &model.phi, &model.sampler)?;
    let second = r.second_coordinate.map_or(0.0, |w| w.value);
    let mut m = Measure {
        samples: r.samples,
        ..Measure::default()
    };
    let at = r.ce.residual.at.or(r.first.at).unwrap_or_default();
    m.update(
        r.first.value.max(second).max(r.ce.residual.value),
        r.ce.scale,
        &at,
    );
    m.detail("factor", r.factor.to_string());
    m.detail("first_equation", r.first.value);
    if let Some(w) = r.second_coordinate {
        m.detail("second_equation", w.value);
    }
    if let Some(w) = r.second_display {
        m.detail("second_equation_covariant_form", w.value);
    }
    m.detail("conformally_einstein", r.ce.residual.value);
    m.detail("cotton_condition", r.cotton_condition.value);
    m.detail("cotton_condition_literal", r.cotton_condition_literal.value);
    m.detail("bach", r.bach.value);
    Ok(m)
}

/// Errors that mean the scenario itself is unusable rather than a failed check.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::Input(_)
            | Error::NotBaseField { .. }
            | Error::NotCanonical(_)
            | Error::NormalForm(_)
    )
}

/// Runs one check. Input errors are returned; any other failure becomes a
/// failed report carrying the message.
pub fn run_check(spec: &CheckSpec, model: &Model, timings: bool) -> Result<CheckReport> {
    let start = Instant::now();
    let atol = spec.tol.unwrap_or(model.atol);
    let measured = measure(&spec.kind, model);
    let wall_time_s = timings.then(|| start.elapsed().as_secs_f64());
    let mut report = CheckReport {
        name: spec.kind.name().into(),
        label: spec.label.clone(),
        verdict: Verdict::Fail,
        residual: f64::NAN,
        tolerance: atol,
        scale: 0.0,
        witness: None,
        samples: 0,
        skipped: 0,
        error: None,
        details: BTreeMap::new(),
        wall_time_s,
    };
    match measured {
        Ok(m) => {
            report.tolerance = m.tolerance.unwrap_or(atol + 1e-9 * m.scale);
            report.residual = m.residual;
            report.scale = m.scale;
            report.samples = m.samples;
            report.skipped = m.skipped;
            report.details = m.details;
            if m.residual <= report.tolerance {
                report.verdict = Verdict::Pass;
            } else {
                report.witness = m.at;
            }
        }
        Err(e) if is_input_error(&e) => return Err(e),
        Err(e) => report.error = Some(e.to_string()),
    }
    Ok(report)
}
