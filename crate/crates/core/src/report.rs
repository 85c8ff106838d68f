//! Scenario execution and deterministic JSON/CSV report output.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::checks::{run_check, CheckReport};
use crate::curvature::{bach, curvature_bundle, MetricJets, TensorValue};
use crate::duality::{weyl_split, Orientation};
use crate::error::Result;
use crate::exprkit::Point4;
use crate::scenario::{Model, Overrides, Scenario};

/// Pretty JSON whose floats are written with 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as indented JSON with a trailing newline. Floats use
/// 17 significant digits; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSummary {
    pub a: String,
    pub b: String,
    pub c: String,
    pub phi: [[String; 2]; 2],
}

impl MetricSummary {
    pub fn of(model: &Model) -> Self {
        let p = |i, j| model.phi.get(i, j).to_string();
        MetricSummary {
            a: model.metric.a.to_string(),
            b: model.metric.b.to_string(),
            c: model.metric.c.to_string(),
            phi: [[p(0, 0), p(0, 1)], [p(1, 0), p(1, 1)]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub atol: f64,
    pub metric: MetricSummary,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

/// Runs the checks in declaration order.
pub fn run_scenario(s: &Scenario, ov: &Overrides, timings: bool) -> Result<ScenarioReport> {
    let model = s.resolve(ov)?;
    let checks = s
        .checks
        .iter()
        .map(|c| run_check(c, &model, timings))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport {
        scenario: s.label(),
        seed: model.sampler.seed,
        samples: model.sampler.count,
        atol: model.atol,
        metric: MetricSummary::of(&model),
        passed: checks.iter().all(CheckReport::passed),
        checks,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// One row per check: key, verdict, residual, tolerance, witness.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,verdict,residual,tolerance,scale,w1,w2,w3,w4\n");
        for c in &self.checks {
            let verdict = if c.passed() { "pass" } else { "fail" };
            let w = c
                .witness
                .map(|p| {
                    p.iter()
                        .map(|v| format!("{v:.16e}"))
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .unwrap_or_else(|| ",,,".into());
            out.push_str(&format!(
                "{},{verdict},{:.16e},{:.16e},{:.16e},{w}\n",
                csv_field(c.key()),
                c.residual,
                c.tolerance,
                c.scale
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor {
    pub variance: [usize; 2],
    pub data: Vec<f64>,
}

impl From<TensorValue> for Tensor {
    fn from(t: TensorValue) -> Self {
        Tensor {
            variance: [t.contravariant, t.covariant],
            data: t.data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointDump {
    pub point: Point4,
    pub metric: [[f64; 4]; 4],
    pub christoffel: Tensor,
    pub riemann: Tensor,
    pub ricci: Tensor,
    pub scalar_curvature: f64,
    pub schouten: Tensor,
    pub weyl: Tensor,
    pub cotton: Tensor,
    pub bach: [[f64; 4]; 4],
    pub orientation_sign: f64,
    pub w_plus: [[f64; 3]; 3],
    pub w_minus: [[f64; 3]; 3],
    pub w_plus_invariants: [f64; 3],
    pub w_minus_invariants: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureDump {
    pub scenario: String,
    pub metric: MetricSummary,
    /// Tensor data is row-major over 0-based indices (x1, x2, xp1, xp2).
    pub points: Vec<PointDump>,
}

fn mat3(m: &nalgebra::Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Full curvature data at the scenario's `points`, or at its samples.
pub fn curvature_dump(s: &Scenario, ov: &Overrides) -> Result<CurvatureDump> {
    let model = s.resolve(ov)?;
    let points = match &s.points {
        Some(p) => p.clone(),
        None => model.sampler.points()?,
    };
    let points = points
        .iter()
        .map(|p| {
            let m = MetricJets::walker(&model.metric, p, 3)?;
            let cb = curvature_bundle(&m)?;
            let b = bach(&model.metric, p)?;
            let d = weyl_split(&model.metric, p, Orientation::Auto)?;
            Ok(PointDump {
                point: *p,
                metric: m.g_values(),
                christoffel: cb.gamma.into(),
                riemann: cb.riemann.into(),
                ricci: cb.ricci.into(),
                scalar_curvature: cb.tau,
                schouten: cb.schouten.into(),
                weyl: cb.weyl.into(),
                cotton: cb.cotton.into(),
                bach: b.bach,
                orientation_sign: d.orientation_sign,
                w_plus: mat3(&d.plus.matrix),
                w_minus: mat3(&d.minus.matrix),
                w_plus_invariants: d.plus.invariants,
                w_minus_invariants: d.minus.invariants,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureDump {
        scenario: s.label(),
        metric: MetricSummary::of(&model),
        points,
    })
}
