//! Gradient Ricci solitons, the Bach-flat soliton family, the D tensor and
//! the conformally Einstein equation on Walker metrics.

use crate::affine::{AffineSurface, EndoField, SymForm2, VANISH};
use crate::curvature::{
    bach, cotton_jets, curvature_jets, gradient_norm, hessian, trace, CurvatureJets, MetricJets,
    DIM,
};
use crate::duality::require_normal_form;
use crate::error::{Error, Result};
use crate::exprkit::{eval_jet, zero_test, Coord, Expr, Jet, Point4, Sampler, ZeroVerdict};
use crate::walker::{build_metric, WalkerMetric};

/// Largest value seen so far and where it occurred.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Worst {
    pub value: f64,
    pub at: Option<Point4>,
}

impl Worst {
    /// A NaN sticks once seen.
    pub fn update(&mut self, v: f64, p: &Point4) {
        if self.value.is_nan() {
            return;
        }
        if v.is_nan() || self.at.is_none() || v > self.value {
            self.value = v;
            self.at = Some(*p);
        }
    }
}

fn max_abs4(t: &[[f64; 4]; 4]) -> f64 {
    t.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    Infer,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonData {
    pub metric: WalkerMetric,
    pub f: Expr,
    pub lambda: Lambda,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonReport {
    /// max |Hes f + rho - lambda g|.
    pub residual: Worst,
    pub lambda: f64,
    /// Spread of the pointwise inferred lambda over samples.
    pub lambda_spread: f64,
    /// max |g(grad f, grad f)|.
    pub grad_norm: f64,
    /// max |Delta f + tau - 4 lambda|.
    pub trace_identity: f64,
    pub samples: usize,
}

impl SolitonReport {
    pub fn is_soliton(&self, tol: f64) -> bool {
        self.residual.value <= tol && self.lambda_spread <= tol
    }

    pub fn steady(&self, tol: f64) -> bool {
        self.lambda.abs() <= tol
    }

    pub fn isotropic(&self, tol: f64) -> bool {
        self.grad_norm <= tol
    }
}

struct SolitonTerms {
    hes_plus_rho: [[f64; 4]; 4],
    g: [[f64; 4]; 4],
    ginv: [[f64; 4]; 4],
    df: [f64; 4],
    hes: [[f64; 4]; 4],
    tau: f64,
}

fn soliton_terms(d: &SolitonData, p: &Point4) -> Result<SolitonTerms> {
    let m = MetricJets::walker(&d.metric, p, 2)?;
    let c = curvature_jets(&m)?;
    let fj = eval_jet(&d.f, p, 2)?;
    let hes = hessian(&fj, &c.gamma);
    let hes_plus_rho =
        std::array::from_fn(|i| std::array::from_fn(|j| hes[i][j] + c.ricci.at(&[i, j]).value()));
    Ok(SolitonTerms {
        hes_plus_rho,
        g: m.g_values(),
        ginv: m.ginv_values(),
        df: std::array::from_fn(|k| fj.d1(k)),
        hes,
        tau: c.tau.value(),
    })
}

/// Residual of Hes f + rho = lambda g. An inferred lambda is read from the
/// (d1, d1') component, where g = 1, at every sample.
pub fn soliton_residual(d: &SolitonData, sampler: &Sampler) -> Result<SolitonReport> {
    let points = sampler.points()?;
    let terms = points
        .iter()
        .map(|p| soliton_terms(d, p))
        .collect::<Result<Vec<_>>>()?;
    let local: Vec<f64> = terms.iter().map(|t| t.hes_plus_rho[0][2]).collect();
    let lambda = match d.lambda {
        Lambda::Fixed(l) => l,
        Lambda::Infer => local.first().copied().unwrap_or(0.0),
    };
    let lambda_spread = match d.lambda {
        Lambda::Fixed(_) => 0.0,
        Lambda::Infer => local.iter().fold(0.0f64, |a, l| a.max((l - lambda).abs())),
    };
    let mut residual = Worst::default();
    let (mut grad_norm, mut trace_identity) = (0.0f64, 0.0f64);
    for (t, p) in terms.iter().zip(&points) {
        let r: [[f64; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| t.hes_plus_rho[i][j] - lambda * t.g[i][j])
        });
        residual.update(max_abs4(&r), p);
        grad_norm = grad_norm.max(gradient_norm(&t.ginv, &t.df).abs());
        let lap = trace(&t.ginv, &t.hes);
        trace_identity = trace_identity.max((lap + t.tau - 4.0 * lambda).abs());
    }
    Ok(SolitonReport {
        residual,
        lambda,
        lambda_spread,
        grad_norm,
        trace_identity,
        samples: points.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    Soliton,
    Einstein,
}

impl std::str::FromStr for BuildMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soliton" => Ok(BuildMode::Soliton),
            "einstein" => Ok(BuildMode::Einstein),
            other => Err(Error::Input(format!("unknown builder mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BachFlatFamily {
    pub phi: SymForm2,
    pub metric: WalkerMetric,
    pub soliton: SolitonData,
}

fn require_canonical(s: &AffineSurface, t: &EndoField, sampler: &Sampler) -> Result<()> {
    if !t.is_structurally_nilpotent_canonical() {
        return Err(Error::NotCanonical(
            "T must be given by T d1 = d2, T d2 = 0".into(),
        ));
    }
    for p in sampler.points()? {
        if let Some(v) = s.canonical_violation(&p)? {
            return Err(Error::NotCanonical(format!("T is not parallel: {v}")));
        }
    }
    Ok(())
}

fn require_dh_ker_t(h: &Expr, sampler: &Sampler, name: &str) -> Result<()> {
    match zero_test(&h.diff(Coord::X2), sampler, VANISH)? {
        ZeroVerdict::Zero { .. } => Ok(()),
        ZeroVerdict::Nonzero { witness, value } => Err(Error::Hypothesis(format!(
            "d{name}(ker T) = {value} at {witness:?}; a Bach-flat soliton with f = {name} o pi needs d{name}(ker T) = 0"
        ))),
    }
}

/// Completes Phi_22 so that the nilpotent extension is a Bach-flat steady
/// soliton with f = h o pi, or Einstein with f = 0. Phi_11 and Phi_12 are free.
pub fn build_bachflat_family(
    s: &AffineSurface,
    t: &EndoField,
    h: &Expr,
    free: (&Expr, &Expr),
    mode: BuildMode,
    sampler: &Sampler,
) -> Result<BachFlatFamily> {
    require_canonical(s, t, sampler)?;
    let two_rho = Expr::mul(Expr::int(2), s.ricci_sym_expr(0, 0));
    let (phi22, f) = match mode {
        BuildMode::Soliton => {
            require_dh_ker_t(h, sampler, "h")?;
            (
                Expr::neg(Expr::add(s.hessian_expr(h, 0, 0), two_rho)),
                h.clone(),
            )
        }
        BuildMode::Einstein => (Expr::neg(two_rho), Expr::zero()),
    };
    let phi = SymForm2::new(free.0.clone(), free.1.clone(), phi22)?;
    let metric = build_metric(s, Some(&phi), Some(t));
    Ok(BachFlatFamily {
        soliton: SolitonData {
            metric: metric.clone(),
            f,
            lambda: Lambda::Infer,
        },
        phi,
        metric,
    })
}

/// D_{ijk} = C_{ijk} + W_{ijkl} g^{lm} d_m f at a point.
pub fn dtensor_at(d: &SolitonData, p: &Point4) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = MetricJets::walker(&d.metric, p, 3)?;
    let c = curvature_jets(&m)?;
    let cot = cotton_jets(&c)?;
    let fj = eval_jet(&d.f, p, 1)?;
    let grad = raise(&m, &fj);
    let mut dt = Vec::with_capacity(64);
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                let mut v = cot.at(&[i, j, k]).value();
                for (l, gl) in grad.iter().enumerate() {
                    v += c.weyl.at(&[i, j, k, l]).value() * gl;
                }
                dt.push(v);
            }
        }
    }
    Ok((dt, cot.values()))
}

fn raise(m: &MetricJets, f: &Jet) -> [f64; 4] {
    let ginv = m.ginv_values();
    std::array::from_fn(|l| (0..DIM).map(|k| ginv[l][k] * f.d1(k)).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DTensorReport {
    /// D at the first sample, row-major [i][j][k].
    pub components: Vec<f64>,
    pub point: Point4,
    /// max |D| over samples.
    pub d_max: Worst,
    /// max |C| over samples.
    pub cotton_max: Worst,
    /// max |d2 Phi_22 + 2 d2 rho_sym,11| over samples, when the metric is an extension.
    pub harmonic_weyl: Option<f64>,
    pub samples: usize,
}

pub fn dtensor_harmonicweyl(d: &SolitonData, sampler: &Sampler) -> Result<DTensorReport> {
    let points = sampler.points()?;
    let mut report = DTensorReport {
        components: Vec::new(),
        point: points[0],
        d_max: Worst::default(),
        cotton_max: Worst::default(),
        harmonic_weyl: None,
        samples: points.len(),
    };
    let base = d.metric.extension().map(|(s, phi, _)| {
        Expr::add(
            phi.get(1, 1).diff(Coord::X2),
            Expr::mul(Expr::int(2), s.ricci_sym_expr(0, 0).diff(Coord::X2)),
        )
    });
    for (n, p) in points.iter().enumerate() {
        let (dt, cot) = dtensor_at(d, p)?;
        let big = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        report.d_max.update(big(&dt), p);
        report.cotton_max.update(big(&cot), p);
        if let Some(e) = &base {
            let v = crate::exprkit::eval(e, p)?.abs();
            report.harmonic_weyl = Some(report.harmonic_weyl.unwrap_or(0.0).max(v));
        }
        if n == 0 {
            report.components = dt;
        }
    }
    Ok(report)
}

/// E = 2 Hes phi + phi rho - 1/4 (2 Delta phi + phi tau) g at a point, with
/// the largest term magnitude.
pub fn ce_tensor(c: &CurvatureJets, m: &MetricJets, phi: &Jet) -> ([[f64; 4]; 4], f64) {
    let hes = hessian(phi, &c.gamma);
    let g = m.g_values();
    let lap = trace(&m.ginv_values(), &hes);
    let v = phi.value();
    let tau = c.tau.value();
    let k = 0.25 * (2.0 * lap + v * tau);
    let mut scale = (0.5 * lap).abs().max((0.25 * v * tau).abs());
    let e = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let r = v * c.ricci.at(&[i, j]).value();
            scale = scale.max((2.0 * hes[i][j]).abs()).max(r.abs());
            2.0 * hes[i][j] + r - k * g[i][j]
        })
    });
    (e, scale)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CeReport {
    /// max |E| over samples.
    pub residual: Worst,
    /// Largest term entering E.
    pub scale: f64,
    /// max |rho_bar - tau_bar/4 g_bar| for g_bar = phi^-2 g.
    pub einstein_residual: Worst,
    /// tau_bar / 4 at the first sample.
    pub lambda_bar: f64,
    pub samples: usize,
}

impl CeReport {
    pub fn conformally_einstein(&self, tol: f64) -> bool {
        self.residual.value <= tol * (1.0 + self.scale)
    }
}

/// Conformally Einstein residual of a candidate factor, cross-checked on the
/// conformal metric itself.
pub fn ce_residual(phi: &Expr, g: &WalkerMetric, sampler: &Sampler) -> Result<CeReport> {
    let points = sampler.points()?;
    let mut out = CeReport {
        residual: Worst::default(),
        scale: 0.0,
        einstein_residual: Worst::default(),
        lambda_bar: 0.0,
        samples: points.len(),
    };
    for (n, p) in points.iter().enumerate() {
        let pj = eval_jet(phi, p, 2)?;
        if !(pj.value() > 0.0) {
            return Err(Error::Domain(format!(
                "conformal factor is {} at {p:?}; it must be positive",
                pj.value()
            )));
        }
        let m = MetricJets::walker(g, p, 2)?;
        let c = curvature_jets(&m)?;
        let (e, scale) = ce_tensor(&c, &m, &pj);
        out.residual.update(max_abs4(&e), p);
        out.scale = out.scale.max(scale);

        let mb = m.conformal(&pj)?;
        let cb = curvature_jets(&mb)?;
        let lb = cb.tau.value() / 4.0;
        let gb = mb.g_values();
        let r: [[f64; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| cb.ricci.at(&[i, j]).value() - lb * gb[i][j])
        });
        out.einstein_residual.update(max_abs4(&r), p);
        if n == 0 {
            out.lambda_bar = lb;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CeCase {
    /// phi a base function with d phi(ker T) = 0.
    BaseFactor { phi: Expr },
    /// phi = kappa xp2 + psi(x1, x2), in normal form.
    WithVector { kappa: f64, psi: Expr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CeStructured {
    /// Case (i): max |phi Phi_hat_11 + 2 (Hes phi + phi rho_sym)_11|.
    /// Case (ii): max |d psi(T d1) - kappa/2 Phi(T d1, T d1)|.
    pub first: Worst,
    /// Case (ii) only: the second equation written with covariant
    /// derivatives of Phi.
    pub second_display: Option<Worst>,
    /// Case (ii) only: the same equation with coordinate derivatives,
    /// (2 d1 Phi_12 - d2 Phi_11).
    pub second_coordinate: Option<Worst>,
    /// The full 4D factor.
    pub factor: Expr,
    /// Necessary condition C + 2 W(., ., ., grad sigma) = 0 with sigma = -ln phi.
    /// The factor 2 matches the Schouten tensor rho - tau/6 g used for C.
    pub cotton_condition: Worst,
    /// The same condition without the factor 2.
    pub cotton_condition_literal: Worst,
    /// Necessary condition B = 0.
    pub bach: Worst,
    /// Full E of the 4D factor.
    pub ce: CeReport,
    pub samples: usize,
}

impl CeStructured {
    /// Scalar equations of the case hold.
    pub fn case_holds(&self, tol: f64) -> bool {
        let second = self.second_coordinate.map_or(0.0, |w| w.value);
        self.first.value.max(second) <= tol
    }
}

/// Structured conformally Einstein equations for a nilpotent extension.
pub fn ce_structured(
    case: &CeCase,
    s: &AffineSurface,
    t: &EndoField,
    phi_form: &SymForm2,
    sampler: &Sampler,
) -> Result<CeStructured> {
    require_canonical(s, t, sampler)?;
    let points = sampler.points()?;
    let factor = match case {
        CeCase::BaseFactor { phi } => {
            if phi.depends_on(Coord::Xp1) || phi.depends_on(Coord::Xp2) {
                return Err(Error::NotBaseField {
                    field: "phi".into(),
                    coord: "xp1/xp2",
                });
            }
            require_dh_ker_t(phi, sampler, "phi")?;
            phi.clone()
        }
        CeCase::WithVector { kappa, psi } => {
            if kappa.abs() <= VANISH {
                return Err(Error::Degenerate(
                    "kappa = 0 reduces to the base-factor case".into(),
                ));
            }
            for p in &points {
                require_normal_form(s, t, p)?;
            }
            Expr::add(
                Expr::mul(
                    Expr::Num(crate::exprkit::Num::Decimal(*kappa)),
                    Expr::var(Coord::Xp2),
                ),
                psi.clone(),
            )
        }
    };
    let metric = build_metric(s, Some(phi_form), Some(t));
    let mut out = CeStructured {
        first: Worst::default(),
        second_display: None,
        second_coordinate: None,
        factor: factor.clone(),
        cotton_condition: Worst::default(),
        cotton_condition_literal: Worst::default(),
        bach: Worst::default(),
        ce: ce_residual(&factor, &metric, sampler)?,
        samples: points.len(),
    };
    for p in &points {
        let gam = s.jets(p, 1)?;
        let fj = phi_form.jets(p, 1)?;
        let phi22 = fj[1][1].value();
        match case {
            CeCase::BaseFactor { phi } => {
                let v = crate::exprkit::eval(phi, p)?;
                let hes = crate::exprkit::eval(&s.hessian_expr(phi, 0, 0), p)?;
                let rho = crate::exprkit::eval(&s.ricci_sym_expr(0, 0), p)?;
                out.first
                    .update((v * phi22 + 2.0 * (hes + v * rho)).abs(), p);
            }
            CeCase::WithVector { kappa, psi } => {
                let k = *kappa;
                let pj = eval_jet(psi, p, 2)?;
                let g112 = gam[0][0][1].value();
                let rho11 = gam[0][0][1].d1(1);
                out.first.update((pj.d1(1) - 0.5 * k * phi22).abs(), p);
                let hes = pj.partial(&[2, 0, 0, 0]) - g112 * pj.d1(1);
                let lhs = hes + pj.value() * rho11;
                let common = -0.5 * (pj.value() + 2.0 * k * g112) * phi22;
                // (nabla_d1 Phi)(d2, d1) = d1 Phi_12 - Gamma_11^2 Phi_22; (nabla_d2 Phi)(d1, d1) = d2 Phi_11
                let d1p12 = fj[0][1].d1(0);
                let d2p11 = fj[0][0].d1(1);
                let disp = common + 0.5 * k * (2.0 * (d1p12 - g112 * phi22) - d2p11);
                let coord = common + 0.5 * k * (2.0 * d1p12 - d2p11);
                out.second_display
                    .get_or_insert_with(Worst::default)
                    .update((lhs - disp).abs(), p);
                out.second_coordinate
                    .get_or_insert_with(Worst::default)
                    .update((lhs - coord).abs(), p);
            }
        }
        let e = necessary_conditions_at(&metric, &factor, p)?;
        out.cotton_condition.update(e.cotton, p);
        out.cotton_condition_literal.update(e.cotton_literal, p);
        out.bach.update(e.bach, p);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NecessaryConditions {
    /// max |C + 2 W(., ., ., grad sigma)|.
    pub cotton: f64,
    /// max |C + W(., ., ., grad sigma)|.
    pub cotton_literal: f64,
    /// max |B|.
    pub bach: f64,
}

/// Necessary conditions for g_bar = e^{2 sigma} g to be Einstein, with
/// sigma = -ln phi. Under that change C_bar = C + 2 W(., ., ., grad sigma).
pub fn necessary_conditions_at(
    g: &WalkerMetric,
    phi: &Expr,
    p: &Point4,
) -> Result<NecessaryConditions> {
    let m = MetricJets::walker(g, p, 3)?;
    let c = curvature_jets(&m)?;
    let cot = cotton_jets(&c)?;
    let pj = eval_jet(phi, p, 1)?;
    if !(pj.value() > 0.0) {
        return Err(Error::Domain(format!(
            "conformal factor is {} at {p:?}",
            pj.value()
        )));
    }
    let sigma = pj.ln().scale(-1.0);
    let grad = raise(&m, &sigma);
    let (mut full, mut literal) = (0.0f64, 0.0f64);
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                let v = cot.at(&[i, j, k]).value();
                let w: f64 = grad
                    .iter()
                    .enumerate()
                    .map(|(l, gl)| c.weyl.at(&[i, j, k, l]).value() * gl)
                    .sum();
                full = full.max((v + 2.0 * w).abs());
                literal = literal.max((v + w).abs());
            }
        }
    }
    Ok(NecessaryConditions {
        cotton: full,
        cotton_literal: literal,
        bach: bach(g, p)?.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse;

    #[test]
    fn worst_tracks_location() {
        let mut w = Worst::default();
        w.update(1.0, &[1.0; 4]);
        w.update(0.5, &[2.0; 4]);
        w.update(3.0, &[3.0; 4]);
        assert_eq!(w.value, 3.0);
        assert_eq!(w.at, Some([3.0; 4]));
    }

    #[test]
    fn builder_rejects_dh_on_kernel() {
        let err = build_bachflat_family(
            &AffineSurface::flat(),
            &EndoField::nilpotent(),
            &parse("x2").unwrap(),
            (&Expr::zero(), &Expr::zero()),
            BuildMode::Soliton,
            &Sampler::default().with_count(4),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }
}
