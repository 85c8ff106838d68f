//! Scenario files: the JSON description of an affine surface, its
//! deformation data, the checks to run and how to sample.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::affine::{AffineSurface, EndoField, SymForm2, GAMMA_KEYS};
use crate::checks::CheckSpec;
use crate::error::{Error, Result};
use crate::exprkit::{parse, Expr, Sampler, DEFAULT_ATOL, DEFAULT_COUNT, DEFAULT_SEED};
use crate::soliton::{build_bachflat_family, BuildMode, SolitonData};
use crate::walker::{build_metric, WalkerMetric};

/// Failure to read a scenario file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{message} at line {line}, column {column}")]
    Syntax {
        message: String,
        line: usize,
        column: usize,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        ScenarioError::Syntax {
            message,
            line: e.line(),
            column: e.column(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// Christoffel symbols keyed "ijk" for Gamma_ij^k; missing keys are zero.
    #[serde(default)]
    pub gamma: BTreeMap<String, String>,
}

/// Free components for the Bach-flat builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeSpec {
    #[serde(rename = "11", default = "zero_text")]
    pub phi11: String,
    #[serde(rename = "12", default = "zero_text")]
    pub phi12: String,
}

impl Default for FreeSpec {
    fn default() -> Self {
        FreeSpec {
            phi11: zero_text(),
            phi12: zero_text(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderSpec {
    pub mode: String,
    #[serde(default)]
    pub free: FreeSpec,
}

/// Either an explicit symmetric matrix or a request to complete Phi_22.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Matrix([[String; 2]; 2]),
    Builder(BuilderSpec),
}

impl Default for PhiSpec {
    fn default() -> Self {
        PhiSpec::Matrix(zero_matrix())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionSpec {
    pub expr: String,
    pub min_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(rename = "box", default = "default_box")]
    pub bounds: [[f64; 2]; 4],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<ExclusionSpec>,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            seed: default_seed(),
            count: default_count(),
            bounds: default_box(),
            exclusions: Vec::new(),
            atol: default_atol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSpec {
    pub x: [f64; 4],
    pub v: [f64; 4],
    pub t_end: f64,
    #[serde(default = "default_geo_tol")]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Report files. `path` is a stem: each format writes `<path>.json` or
/// `<path>.csv`. Relative stems are resolved against the scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Expected outcome of one check, used by the fixture suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// Check label, or its name when unlabelled.
    pub check: String,
    pub verdict: Verdict,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(rename = "T", default = "zero_matrix")]
    pub t: [[String; 2]; 2],
    #[serde(default)]
    pub phi: PhiSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    /// Points for the curvature dump; the sample points are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<Expectation>,
}

fn zero_text() -> String {
    "0".into()
}

fn zero_matrix() -> [[String; 2]; 2] {
    [[zero_text(), zero_text()], [zero_text(), zero_text()]]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

fn default_box() -> [[f64; 2]; 4] {
    [[-1.0, 1.0]; 4]
}

fn default_atol() -> f64 {
    DEFAULT_ATOL
}

fn default_geo_tol() -> f64 {
    crate::geodesics::DEFAULT_TOL
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json]
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub atol: Option<f64>,
}

/// A scenario with every expression parsed and the metric assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub surface: AffineSurface,
    pub t: EndoField,
    pub phi: SymForm2,
    pub h: Option<Expr>,
    pub metric: WalkerMetric,
    /// Soliton potential and lambda handling implied by the scenario.
    pub soliton: SolitonData,
    pub built: Option<BuildMode>,
    pub sampler: Sampler,
    pub atol: f64,
}

fn field(name: &str, text: &str) -> Result<Expr> {
    parse(text).map_err(|e| Error::Input(format!("{name}: {e}")))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scenario serializes");
        out.push('\n');
        out
    }

    /// Structural checks serde cannot express.
    pub fn validate(&self) -> Result<()> {
        for key in self.surface.gamma.keys() {
            if !GAMMA_KEYS.contains(&key.as_str()) {
                return Err(Error::Input(format!(
                    "unknown Christoffel key `{key}`; expected one of {}",
                    GAMMA_KEYS.join(", ")
                )));
            }
        }
        let mut labels = std::collections::BTreeSet::new();
        for c in &self.checks {
            if !labels.insert(c.key()) {
                return Err(Error::Input(format!(
                    "check `{}` appears twice; give one of them a distinct label",
                    c.key()
                )));
            }
        }
        for e in &self.expected {
            if !labels.contains(e.check.as_str()) {
                return Err(Error::Input(format!(
                    "expectation refers to `{}`, which is not among the checks",
                    e.check
                )));
            }
            if !["PAPER", "TRIVIAL", "DERIVED"].contains(&e.provenance.as_str()) {
                return Err(Error::Input(format!(
                    "expectation for `{}` has provenance `{}`; use PAPER, TRIVIAL or DERIVED",
                    e.check, e.provenance
                )));
            }
        }
        let s = &self.sampling;
        if s.count == 0 {
            return Err(Error::Input("sampling.count must be positive".into()));
        }
        if s.bounds
            .iter()
            .any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi))
        {
            return Err(Error::Input(
                "sampling.box needs finite [lo, hi] with lo <= hi".into(),
            ));
        }
        if !(s.atol.is_finite() && s.atol >= 0.0) {
            return Err(Error::Input(
                "sampling.atol must be a non-negative number".into(),
            ));
        }
        if let PhiSpec::Builder(b) = &self.phi {
            b.mode.parse::<BuildMode>()?;
        }
        Ok(())
    }

    pub fn sampler(&self, ov: &Overrides) -> Result<Sampler> {
        let s = &self.sampling;
        let mut sampler = Sampler {
            seed: ov.seed.unwrap_or(s.seed),
            count: ov.samples.unwrap_or(s.count),
            bounds: s.bounds,
            exclusions: Vec::new(),
        };
        if sampler.count == 0 {
            return Err(Error::Input("sample count must be positive".into()));
        }
        for (k, ex) in s.exclusions.iter().enumerate() {
            sampler = sampler.with_exclusion(
                field(&format!("sampling.exclusions[{k}]"), &ex.expr)?,
                ex.min_abs,
            );
        }
        Ok(sampler)
    }

    pub fn resolve(&self, ov: &Overrides) -> Result<Model> {
        self.validate()?;
        let sampler = self.sampler(ov)?;
        let atol = ov.atol.unwrap_or(self.sampling.atol);
        let mut gamma: [Expr; 6] = Default::default();
        for (slot, key) in gamma.iter_mut().zip(GAMMA_KEYS) {
            if let Some(text) = self.surface.gamma.get(key) {
                *slot = field(&format!("surface.gamma.{key}"), text)?;
            }
        }
        let surface = AffineSurface::new(gamma)?;
        let t = EndoField::new([
            [
                field("T[0][0]", &self.t[0][0])?,
                field("T[0][1]", &self.t[0][1])?,
            ],
            [
                field("T[1][0]", &self.t[1][0])?,
                field("T[1][1]", &self.t[1][1])?,
            ],
        ])?;
        let h = self.h.as_deref().map(|s| field("h", s)).transpose()?;
        let (phi, metric, soliton, built) = match &self.phi {
            PhiSpec::Matrix(m) => {
                let p12 = field("phi[0][1]", &m[0][1])?;
                if field("phi[1][0]", &m[1][0])? != p12 {
                    return Err(Error::Input(
                        "phi must be symmetric: phi[0][1] and phi[1][0] differ".into(),
                    ));
                }
                let phi = SymForm2::new(
                    field("phi[0][0]", &m[0][0])?,
                    p12,
                    field("phi[1][1]", &m[1][1])?,
                )?;
                let metric = build_metric(&surface, Some(&phi), Some(&t));
                let soliton = SolitonData {
                    metric: metric.clone(),
                    f: h.clone().unwrap_or_else(Expr::zero),
                    lambda: crate::soliton::Lambda::Infer,
                };
                (phi, metric, soliton, None)
            }
            PhiSpec::Builder(b) => {
                let mode: BuildMode = b.mode.parse()?;
                let h = match (mode, &h) {
                    (BuildMode::Soliton, None) => {
                        return Err(Error::Input(
                            "the soliton builder needs a potential `h`".into(),
                        ))
                    }
                    (_, h) => h.clone().unwrap_or_else(Expr::zero),
                };
                let f11 = field("phi.free.11", &b.free.phi11)?;
                let f12 = field("phi.free.12", &b.free.phi12)?;
                let fam = build_bachflat_family(&surface, &t, &h, (&f11, &f12), mode, &sampler)?;
                (fam.phi, fam.metric, fam.soliton, Some(mode))
            }
        };
        Ok(Model {
            surface,
            t,
            phi,
            h,
            metric,
            soliton,
            built,
            sampler,
            atol,
        })
    }

    /// Copy of the scenario with the builder replaced by the completed Phi.
    pub fn completed(&self, model: &Model) -> Scenario {
        let text = |i, j| model.phi.get(i, j).to_string();
        let mut out = self.clone();
        out.phi = PhiSpec::Matrix([[text(0, 0), text(0, 1)], [text(1, 0), text(1, 1)]]);
        out
    }

    pub fn label(&self) -> String {
        self.id.clone().unwrap_or_else(|| "scenario".into())
    }
}
