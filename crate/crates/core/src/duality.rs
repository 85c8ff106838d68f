//! Hodge star on bivectors, the W+/W- splitting of the Weyl operator and
//! the anti-self-duality system for nilpotent Riemannian extensions.
//!
//! Bivector basis order: d1^d2, d1^d1', d1^d2', d2^d1', d2^d2', d1'^d2'.

use nalgebra::{SMatrix, SVector};

use crate::affine::{form_derivatives, AffineSurface, EndoField, SymForm2};
use crate::curvature::{curvature_jets, MetricJets};
use crate::error::{Error, Result};
use crate::exprkit::{eval_jet, Jet, Point4, Sampler};
use crate::walker::{build_metric, WalkerMetric};

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat3 = SMatrix<f64, 3, 3>;

pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Makes d1' ^ d2' a +1 eigenvector of the star.
    Auto,
    Plus,
    Minus,
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Orientation::Auto),
            "+" | "plus" => Ok(Orientation::Plus),
            "-" | "minus" => Ok(Orientation::Minus),
            other => Err(Error::Input(format!("unknown orientation `{other}`"))),
        }
    }
}

fn perm_sign(ix: [usize; 4]) -> f64 {
    let mut s = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if ix[i] == ix[j] {
                return 0.0;
            }
            if ix[i] > ix[j] {
                s = -s;
            }
        }
    }
    s
}

/// Inner product induced on bivectors.
pub fn bivector_gram(g: &[[f64; 4]; 4]) -> Mat6 {
    Mat6::from_fn(|r, c| {
        let (a, b) = PAIRS[r];
        let (p, q) = PAIRS[c];
        g[a][p] * g[b][q] - g[a][q] * g[b][p]
    })
}

/// Star on bivectors for volume form `sign * sqrt|det g| dx1^dx2^dx1'^dx2'`.
/// Column (ab) holds the coefficients of *(d_a ^ d_b).
pub fn hodge_star(g: &[[f64; 4]; 4], ginv: &[[f64; 4]; 4], sign: f64) -> Mat6 {
    let det = nalgebra::Matrix4::from_fn(|i, j| g[i][j]).determinant();
    let vol = sign * det.abs().sqrt();
    Mat6::from_fn(|r, col| {
        let (c, d) = PAIRS[r];
        let (a, b) = PAIRS[col];
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                let e = perm_sign([p, q, a, b]);
                if e != 0.0 {
                    s += ginv[c][p] * ginv[d][q] * vol * e;
                }
            }
        }
        s
    })
}

/// Weyl operator on bivectors: <W(x^y), z^w> = W(x, y, w, z).
pub fn weyl_operator(weyl: &[f64], gram: &Mat6) -> Result<Mat6> {
    let w = |i: usize, j: usize, k: usize, l: usize| weyl[((i * 4 + j) * 4 + k) * 4 + l];
    let k = Mat6::from_fn(|r, c| {
        let (a, b) = PAIRS[r];
        let (p, q) = PAIRS[c];
        w(a, b, q, p)
    });
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("bivector inner product is singular".into()))?;
    Ok(inv * k)
}

/// Orthonormal (Euclidean) basis of the range of a rank-3 projector.
fn range_basis(p: &Mat6) -> Result<SMatrix<f64, 6, 3>> {
    // Gram-Schmidt with column pivoting and one reorthogonalization pass.
    // nalgebra's SVD loses accuracy on these rank-deficient projectors.
    let mut cols: Vec<SVector<f64, 6>> = (0..6).map(|j| p.column(j).into_owned()).collect();
    let big = cols.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    let mut basis: Vec<SVector<f64, 6>> = Vec::with_capacity(3);
    loop {
        let (j, norm) = cols
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("six columns");
        if norm <= 1e-8 * big {
            break;
        }
        if basis.len() == 3 {
            return Err(Error::Degenerate(
                "eigenspace of the star has dimension > 3".into(),
            ));
        }
        let mut q = cols[j] / norm;
        for b in &basis {
            q -= *b * b.dot(&q);
        }
        q /= q.norm();
        for c in cols.iter_mut() {
            *c -= q * q.dot(c);
        }
        basis.push(q);
    }
    if basis.len() != 3 {
        return Err(Error::Degenerate(format!(
            "eigenspace of the star has dimension {}, not 3",
            basis.len()
        )));
    }
    Ok(SMatrix::<f64, 6, 3>::from_columns(&basis))
}

fn pinv3(e: &SMatrix<f64, 6, 3>) -> SMatrix<f64, 3, 6> {
    // E has orthonormal columns
    e.transpose()
}

/// One half of the Weyl operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfWeyl {
    /// Restriction to the eigenspace in an orthonormal coefficient basis.
    pub matrix: Mat3,
    /// The 6x6 operator W composed with the projector.
    pub operator: Mat6,
    /// tr M, tr M^2, tr M^3.
    pub invariants: [f64; 3],
    pub max_entry: f64,
    pub max_entry_operator: f64,
    /// max |(M^2)_{ij}|.
    pub square_max: f64,
}

impl HalfWeyl {
    fn new(w: &Mat6, proj: &Mat6) -> Result<Self> {
        let e = range_basis(proj)?;
        let m: Mat3 = pinv3(&e) * w * e;
        let op = w * proj;
        let m2 = m * m;
        Ok(HalfWeyl {
            invariants: [m.trace(), m2.trace(), (m2 * m).trace()],
            max_entry: m.amax(),
            max_entry_operator: op.amax(),
            square_max: m2.amax(),
            matrix: m,
            operator: op,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.max_entry.max(self.max_entry_operator)
    }

    /// Invariants after changing the eigenbasis by `q`.
    pub fn invariants_in_basis(&self, q: &Mat3) -> Result<[f64; 3]> {
        let qi = q
            .try_inverse()
            .ok_or_else(|| Error::Singular("basis change".into()))?;
        let m = qi * self.matrix * q;
        let m2 = m * m;
        Ok([m.trace(), m2.trace(), (m2 * m).trace()])
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.matrix.rank(tol)
    }

    /// All invariants and the square vanish but the operator does not.
    pub fn is_nilpotent(&self, tol: f64) -> bool {
        self.invariants.iter().all(|v| v.abs() <= tol) && self.square_max <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Verdicts {
    pub self_dual: bool,
    pub anti_self_dual: bool,
    pub minus_nilpotent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityReport {
    pub point: Point4,
    pub orientation_sign: f64,
    pub plus: HalfWeyl,
    pub minus: HalfWeyl,
    /// max |** - Id|.
    pub star_square: f64,
    /// max |W* - *W|, zero for a Weyl tensor.
    pub commutator: f64,
    /// max |G W - (G W)^T|.
    pub self_adjoint: f64,
    /// max |W - W+ - W-|.
    pub reconstruction: f64,
    /// Largest Weyl operator entry, the scale for tolerances.
    pub scale: f64,
}

impl DualityReport {
    /// Verdicts with `tol` applied to entries scaled by `1 + scale`.
    pub fn verdicts(&self, tol: f64) -> Verdicts {
        let t = tol * (1.0 + self.scale);
        Verdicts {
            self_dual: self.minus.max_abs() <= t,
            anti_self_dual: self.plus.max_abs() <= t,
            minus_nilpotent: self.minus.max_abs() > t && self.minus.is_nilpotent(t),
        }
    }
}

pub fn weyl_split_jets(m: &MetricJets, orientation: Orientation) -> Result<DualityReport> {
    let c = curvature_jets(m)?;
    let g = m.g_values();
    let ginv = m.ginv_values();
    let gram = bivector_gram(&g);
    let mut star = hodge_star(&g, &ginv, 1.0);
    let mut sign = 1.0;
    match orientation {
        Orientation::Plus => {}
        Orientation::Minus => sign = -1.0,
        Orientation::Auto => {
            let e = star.column(5).into_owned();
            let off = (0..5).fold(0.0f64, |a, i| a.max(e[i].abs()));
            if (e[5].abs() - 1.0).abs() > 1e-9 || off > 1e-9 {
                return Err(Error::Degenerate(
                    "d1' ^ d2' is not an eigenvector of the star".into(),
                ));
            }
            sign = e[5].signum();
        }
    }
    if sign < 0.0 {
        star = -star;
    }
    let w = weyl_operator(&c.weyl.values(), &gram)?;
    let id = Mat6::identity();
    let pp = (id + star) * 0.5;
    let pm = (id - star) * 0.5;
    let plus = HalfWeyl::new(&w, &pp)?;
    let minus = HalfWeyl::new(&w, &pm)?;
    let gw = gram * w;
    Ok(DualityReport {
        point: m.point,
        orientation_sign: sign,
        star_square: (star * star - id).amax(),
        commutator: (w * star - star * w).amax(),
        self_adjoint: (gw - gw.transpose()).amax(),
        reconstruction: (w - plus.operator - minus.operator).amax(),
        scale: w.amax(),
        plus,
        minus,
    })
}

pub fn weyl_split(g: &WalkerMetric, p: &Point4, orientation: Orientation) -> Result<DualityReport> {
    weyl_split_jets(&MetricJets::walker(g, p, 2)?, orientation)
}

/// Printed scalars W+_11 and W+_12 for a Walker metric with block (a, b, c).
///
/// The formulas use Walker coordinates with the null directions first: an
/// unprimed subscript k differentiates along the fiber coordinate xp_k and a
/// primed subscript k' along the base coordinate x_k.
pub fn printed_wplus_scalars(g: &WalkerMetric, p: &Point4) -> Result<(f64, f64)> {
    printed_wplus_scalars_perm(g, p, [2, 3, 0, 1])
}

/// Same formulas with derivative name k (1..=4, where 3 and 4 stand for 1'
/// and 2') mapped to coordinate `perm[k - 1]`.
pub fn printed_wplus_scalars_perm(
    g: &WalkerMetric,
    p: &Point4,
    perm: [usize; 4],
) -> Result<(f64, f64)> {
    let ja = eval_jet(&g.a, p, 2)?;
    let jb = eval_jet(&g.b, p, 2)?;
    let jc = eval_jet(&g.c, p, 2)?;
    let d = |j: &Jet, ix: &[usize]| {
        let mut a = [0u8; 4];
        for &i in ix {
            a[perm[i - 1]] += 1;
        }
        j.partial(&a)
    };
    let (a, b, c) = (ja.value(), jb.value(), jc.value());
    let a_ = |ix: &[usize]| d(&ja, ix);
    let b_ = |ix: &[usize]| d(&jb, ix);
    let c_ = |ix: &[usize]| d(&jc, ix);

    let w11 =
        (6.0 * c * a_(&[1]) * b_(&[2]) - 6.0 * a_(&[1]) * b_(&[3]) - 6.0 * b * a_(&[1]) * c_(&[2])
            + 12.0 * a_(&[1]) * c_(&[4])
            - 6.0 * c * a_(&[2]) * b_(&[1])
            + 6.0 * a_(&[2]) * b_(&[4])
            + 6.0 * b * a_(&[2]) * c_(&[1])
            + 6.0 * a_(&[3]) * b_(&[1])
            - 6.0 * a_(&[4]) * b_(&[2])
            - 12.0 * a_(&[4]) * c_(&[1])
            + 6.0 * a * b_(&[1]) * c_(&[2])
            - 6.0 * a * b_(&[2]) * c_(&[1])
            + 12.0 * b_(&[2]) * c_(&[3])
            - 12.0 * b_(&[3]) * c_(&[2])
            - a_(&[1, 1])
            - 12.0 * c * c * a_(&[1, 1])
            - 12.0 * b * c * a_(&[1, 2])
            + 24.0 * c * a_(&[1, 4])
            - 3.0 * b * b * a_(&[2, 2])
            + 12.0 * b * a_(&[2, 4])
            - 12.0 * a_(&[4, 4])
            - 3.0 * a * a * b_(&[1, 1])
            + 12.0 * a * b_(&[1, 3])
            - b_(&[2, 2])
            - 12.0 * b_(&[3, 3])
            + 12.0 * a * c * c_(&[1, 1])
            - 2.0 * c_(&[1, 2])
            + 6.0 * a * b * c_(&[1, 2])
            - 24.0 * c * c_(&[1, 3])
            - 12.0 * a * c_(&[1, 4])
            - 12.0 * b * c_(&[2, 3])
            + 24.0 * c_(&[3, 4]))
            / 12.0;

    let w12 = (-2.0 * c * a_(&[1, 1]) - b * a_(&[1, 2]) + 2.0 * a_(&[1, 4]) + a * b_(&[1, 2])
        - 2.0 * b_(&[2, 3])
        + a * c_(&[1, 1])
        - 2.0 * c * c_(&[1, 2])
        - 2.0 * c_(&[1, 3])
        - b * c_(&[2, 2])
        + 2.0 * c_(&[2, 4]))
        / 4.0;
    Ok((w11, w12))
}

/// The printed 3x3 W+ matrix built from W+_11, W+_12 and tau.
pub fn printed_wplus_matrix(w11: f64, w12: f64, tau: f64) -> Mat3 {
    Mat3::new(
        w11,
        w12,
        w11 + tau / 12.0,
        -w12,
        tau / 6.0,
        -w12,
        -w11 - tau / 12.0,
        -w12,
        -w11 - tau / 6.0,
    )
}

/// Pipeline W+ written in the null-frame basis in which the printed matrix
/// form holds. With d1', d2' null, the frame is
/// e1 = d1 + (1-a)/2 d1', e2 = d2 - c d1' + (1-b)/2 d2',
/// e3 = d1 - (1+a)/2 d1', e4 = d2 - c d1' - (1+b)/2 d2'
/// and the basis is (e1^e2 + e3^e4, e1^e3 + e2^e4, e1^e4 - e2^e3) / sqrt 2.
pub fn wplus_frame_matrix(g: &WalkerMetric, p: &Point4) -> Result<(Mat3, f64)> {
    let m = MetricJets::walker(g, p, 2)?;
    let c = curvature_jets(&m)?;
    let gv = m.g_values();
    let w = weyl_operator(&c.weyl.values(), &bivector_gram(&gv))?;
    let (a, b, cc) = (gv[0][0], gv[1][1], gv[0][1]);
    let e = [
        [1.0, 0.0, (1.0 - a) / 2.0, 0.0],
        [0.0, 1.0, -cc, (1.0 - b) / 2.0],
        [1.0, 0.0, -(1.0 + a) / 2.0, 0.0],
        [0.0, 1.0, -cc, -(1.0 + b) / 2.0],
    ];
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let bv = |i: usize, j: usize, k: usize, l: usize, s: f64| {
        (wedge(&e[i], &e[j]) + wedge(&e[k], &e[l]) * s) * r2
    };
    let basis = SMatrix::<f64, 6, 3>::from_columns(&[
        bv(0, 1, 2, 3, 1.0),
        bv(0, 2, 1, 3, 1.0),
        bv(0, 3, 1, 2, -1.0),
    ]);
    let normal = (basis.transpose() * basis)
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("null frame is degenerate".into()))?;
    let mm = normal * basis.transpose() * w * basis;
    // how far the span is from being invariant under W
    let leak = (w * basis - basis * mm).amax();
    Ok((mm, leak))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WplusCrosscheck {
    pub w11: f64,
    pub w12: f64,
    pub tau: f64,
    /// tr M, tr M^2, tr M^3 of the printed matrix.
    pub printed: [f64; 3],
    /// The same invariants of the pipeline W+.
    pub pipeline: [f64; 3],
    /// max over k of |printed_k - pipeline_k|.
    pub deviation: f64,
    /// max entry of printed matrix minus pipeline W+ in the null frame.
    pub entrywise: f64,
    /// max |W E - E M| for the null-frame basis E.
    pub frame_leak: f64,
}

pub fn printed_wplus_crosscheck(g: &WalkerMetric, p: &Point4) -> Result<WplusCrosscheck> {
    let (w11, w12) = printed_wplus_scalars(g, p)?;
    let m = MetricJets::walker(g, p, 2)?;
    let tau = curvature_jets(&m)?.tau.value();
    let split = weyl_split_jets(&m, Orientation::Auto)?;
    let pm = printed_wplus_matrix(w11, w12, tau);
    let pm2 = pm * pm;
    let printed = [pm.trace(), pm2.trace(), (pm2 * pm).trace()];
    let pipeline = split.plus.invariants;
    let deviation = (0..3).fold(0.0f64, |a, k| a.max((printed[k] - pipeline[k]).abs()));
    let (frame, frame_leak) = wplus_frame_matrix(g, p)?;
    Ok(WplusCrosscheck {
        entrywise: (pm - frame).amax(),
        frame_leak,
        w11,
        w12,
        tau,
        printed,
        pipeline,
        deviation,
    })
}

/// Residuals of the anti-self-duality system at the sampled points.
#[derive(Clone, Debug, PartialEq)]
pub struct AsdObstruction {
    /// max |nabla-hat Phi + 2 omega-hat (x) rho|.
    pub first: f64,
    /// The scalar equation, signed as the constant part of W+_11.
    pub scalar: f64,
    /// Scalar value with the largest magnitude over samples.
    pub scalar_max: f64,
    /// Largest term magnitude entering the residuals.
    pub scale: f64,
    /// max |W+ entry| of the built metric over samples.
    pub wplus_max: f64,
    pub wplus_scale: f64,
    pub samples: usize,
}

impl AsdObstruction {
    /// Both equations hold at every sample.
    pub fn system_holds(&self, tol: f64) -> bool {
        self.first.max(self.scalar_max.abs()) <= tol * (1.0 + self.scale)
    }

    pub fn anti_self_dual(&self, tol: f64) -> bool {
        self.wplus_max <= tol * (1.0 + self.wplus_scale)
    }
}

/// Checks the normal form: T d1 = d2, T d2 = 0 and only Gamma_11^2 nonzero.
pub fn require_normal_form(s: &AffineSurface, t: &EndoField, p: &Point4) -> Result<()> {
    if !t.is_structurally_nilpotent_canonical() {
        return Err(Error::NormalForm(
            "T must be given by T d1 = d2, T d2 = 0".into(),
        ));
    }
    if let Some(v) = s.normal_form_violation(p)? {
        return Err(Error::NormalForm(format!("{v} must vanish")));
    }
    Ok(())
}

/// Values of the two sides at one point in the normal-form chart.
pub fn asd_terms(s: &AffineSurface, phi: &SymForm2, p: &Point4) -> Result<(f64, f64, f64)> {
    let g = s.jets(p, 2)?;
    let gam = &g[0][0][1];
    let rho11 = gam.diff(1).value();
    let drho11 = gam.diff(1).diff(1).value();
    let fd = form_derivatives(s, phi, p)?;
    // nabla-hat Phi only has the (1,1,1) component (nabla_{d2} Phi)(d2, d2)
    let first = fd.d1[1][1][1] + 2.0 * drho11;
    let phi_hat = fd.phi[1][1];
    // nabla^2 Phi(X, Y; Z, W) = d2[W][Z][X][Y], with T d1 = d2
    let a_ = fd.d2[1][1][0][0];
    let b_ = fd.d2[0][0][1][1];
    let c_ = fd.d2[0][1][0][1];
    let display = 0.5 * phi_hat * phi_hat + 2.0 * phi_hat * rho11 + a_ + b_ - 2.0 * c_;
    let scale = [
        0.5 * phi_hat * phi_hat,
        2.0 * phi_hat * rho11,
        a_,
        b_,
        2.0 * c_,
        fd.d1[1][1][1],
        2.0 * drho11,
    ]
    .into_iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((first, -display, scale))
}

/// Evaluates the system at the samples and requires its verdict to agree
/// with the W+ computed on the built metric.
pub fn asd_obstruction(
    s: &AffineSurface,
    t: &EndoField,
    phi: &SymForm2,
    sampler: &Sampler,
    tol: f64,
) -> Result<AsdObstruction> {
    let points = sampler.points()?;
    let metric = build_metric(s, Some(phi), Some(t));
    let mut out = AsdObstruction {
        first: 0.0,
        scalar: 0.0,
        scalar_max: 0.0,
        scale: 0.0,
        wplus_max: 0.0,
        wplus_scale: 0.0,
        samples: points.len(),
    };
    for (n, p) in points.iter().enumerate() {
        require_normal_form(s, t, p)?;
        let (first, scalar, scale) = asd_terms(s, phi, p)?;
        out.first = out.first.max(first.abs());
        if n == 0 {
            out.scalar = scalar;
        }
        if scalar.abs() > out.scalar_max.abs() {
            out.scalar_max = scalar;
        }
        out.scale = out.scale.max(scale);
        let split = weyl_split(&metric, p, Orientation::Auto)?;
        out.wplus_max = out.wplus_max.max(split.plus.max_abs());
        out.wplus_scale = out.wplus_scale.max(split.scale);
    }
    if out.system_holds(tol) != out.anti_self_dual(tol) {
        return Err(Error::Consistency(format!(
            "asd system residuals ({:.3e}, {:.3e}) disagree with max |W+| = {:.3e}",
            out.first, out.scalar_max, out.wplus_max
        )));
    }
    Ok(out)
}

/// Coefficient vector of a bivector u ^ v.
pub fn wedge(u: &[f64; 4], v: &[f64; 4]) -> SVector<f64, 6> {
    SVector::<f64, 6>::from_fn(|r, _| {
        let (a, b) = PAIRS[r];
        u[a] * v[b] - u[b] * v[a]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_squares_to_identity() {
        let g = WalkerMetric::general(
            crate::exprkit::parse("x1*xp2 + 2").unwrap(),
            crate::exprkit::parse("sin(x2)").unwrap(),
            crate::exprkit::parse("xp1").unwrap(),
        );
        let r = weyl_split(&g, &[0.2, 0.4, -0.3, 0.8], Orientation::Auto).unwrap();
        assert!(r.star_square < 1e-12);
        assert!(r.commutator < 1e-10 * (1.0 + r.scale));
        assert!(r.reconstruction < 1e-12 * (1.0 + r.scale));
        assert_eq!(r.orientation_sign.abs(), 1.0);
    }

    #[test]
    fn wedge_coefficients() {
        let w = wedge(&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(w[5], 1.0);
        assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 1);
    }
}
