//! Levi-Civita curvature of a 4D metric given by jets at a point, from the
//! Christoffel symbols up to the Bach tensor.
//!
//! Conventions, all indices 0-based over (x1, x2, xp1, xp2):
//! - `gamma[k][i][j]` is Gamma^k_{ij};
//! - R(d_i, d_j) d_k = R_{ijk}^m d_m and R_{ijkl} = g(R(d_i, d_j) d_k, d_l),
//!   so R_{ijji} > 0 on round spheres;
//! - rho_{jk} = R_{ijk}^i, tau = g^{jk} rho_{jk};
//! - Schouten S = rho - tau/6 g, W = R + 1/2 (S owedge g) with the
//!   Kulkarni-Nomizu product below, so W is trace-free;
//! - Cotton C_{ijk} = (nabla_i S)_{jk} - (nabla_j S)_{ik};
//! - with these choices div_4 W = +1/2 C.
//! - covariant derivatives put the derivative index first.

use crate::error::{Error, Result};
use crate::exprkit::{eval_jet, Expr, Jet, Point4};
use crate::walker::WalkerMetric;

pub const DIM: usize = 4;

/// Dense rank-r array of jets over {0..4}^r, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTensor {
    rank: usize,
    data: Vec<Jet>,
}

fn flat(ix: &[usize]) -> usize {
    ix.iter().fold(0, |acc, &i| acc * DIM + i)
}

fn unflat(mut n: usize, rank: usize) -> Vec<usize> {
    let mut ix = vec![0; rank];
    for slot in ix.iter_mut().rev() {
        *slot = n % DIM;
        n /= DIM;
    }
    ix
}

impl JetTensor {
    pub fn zeros(rank: usize, order: usize) -> Self {
        JetTensor {
            rank,
            data: vec![Jet::constant(0.0, order); DIM.pow(rank as u32)],
        }
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let data = (0..DIM.pow(rank as u32))
            .map(|n| f(&unflat(n, rank)))
            .collect();
        JetTensor { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn at(&self, ix: &[usize]) -> &Jet {
        debug_assert_eq!(ix.len(), self.rank);
        &self.data[flat(ix)]
    }

    pub fn at_mut(&mut self, ix: &[usize]) -> &mut Jet {
        &mut self.data[flat(ix)]
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(Jet::value).collect()
    }
}

/// Components of a tensor at a point with its variance (contravariant, covariant).
#[derive(Clone, Debug, PartialEq)]
pub struct TensorValue {
    pub contravariant: usize,
    pub covariant: usize,
    pub point: Point4,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn new(contravariant: usize, covariant: usize, point: Point4, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), DIM.pow((contravariant + covariant) as u32));
        TensorValue {
            contravariant,
            covariant,
            point,
            data,
        }
    }

    pub fn from_jets(contravariant: usize, t: &JetTensor, point: Point4) -> Self {
        TensorValue::new(contravariant, t.rank - contravariant, point, t.values())
    }

    pub fn rank(&self) -> usize {
        self.contravariant + self.covariant
    }

    pub fn get(&self, ix: &[usize]) -> f64 {
        self.data[flat(ix)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Indices in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> {
        let r = self.rank();
        (0..self.data.len()).map(move |n| unflat(n, r))
    }
}

/// Metric and inverse metric jets at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJets {
    pub point: Point4,
    pub g: [[Jet; 4]; 4],
    pub ginv: [[Jet; 4]; 4],
}

impl MetricJets {
    /// Walker metric jets; the inverse [[0, I], [I, -A]] is exact.
    pub fn walker(m: &WalkerMetric, p: &Point4, order: usize) -> Result<Self> {
        let blk = m.block_jets(p, order)?;
        let k = |v: f64| Jet::constant(v, order);
        let mut g: [[Jet; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| k(0.0)));
        let mut ginv = g.clone();
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] = blk[i][j].clone();
                ginv[2 + i][2 + j] = -&blk[i][j];
            }
            g[i][2 + i] = k(1.0);
            g[2 + i][i] = k(1.0);
            ginv[i][2 + i] = k(1.0);
            ginv[2 + i][i] = k(1.0);
        }
        Ok(MetricJets { point: *p, g, ginv })
    }

    /// The metric phi^{-2} g for a positive factor phi given as a jet.
    pub fn conformal(&self, phi: &Jet) -> Result<Self> {
        if !(phi.value() > 0.0) {
            return Err(Error::Domain(format!(
                "conformal factor {} is not positive",
                phi.value()
            )));
        }
        let f2 = phi * phi;
        let inv = f2.recip();
        Ok(MetricJets {
            point: self.point,
            g: std::array::from_fn(|i| std::array::from_fn(|j| &self.g[i][j] * &inv)),
            ginv: std::array::from_fn(|i| std::array::from_fn(|j| &self.ginv[i][j] * &f2)),
        })
    }

    /// The metric phi^{-2} g with phi an expression.
    pub fn conformal_expr(&self, phi: &Expr) -> Result<Self> {
        let order = self.order();
        self.conformal(&eval_jet(phi, &self.point, order)?)
    }

    pub fn order(&self) -> usize {
        self.g
            .iter()
            .chain(&self.ginv)
            .flatten()
            .map(Jet::order)
            .min()
            .unwrap_or(0)
    }

    pub fn g_values(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value()))
    }

    pub fn ginv_values(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.ginv[i][j].value()))
    }

    pub fn g_tensor(&self) -> JetTensor {
        JetTensor::from_fn(2, |ix| self.g[ix[0]][ix[1]].clone())
    }
}

fn need(m: &MetricJets, order: usize, what: &str) -> Result<()> {
    if m.order() < order {
        return Err(Error::OrderBudget(format!(
            "{what} needs metric jets of order {order}, got {}",
            m.order()
        )));
    }
    Ok(())
}

/// Gamma^k_{ij} = 1/2 g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}), as `[k][i][j]`.
pub fn christoffel_jets(m: &MetricJets) -> Result<JetTensor> {
    need(m, 1, "Christoffel symbols")?;
    let o = m.order() - 1;
    let dg: Vec<[[Jet; 4]; 4]> = (0..DIM)
        .map(|l| std::array::from_fn(|i| std::array::from_fn(|j| m.g[i][j].diff(l))))
        .collect();
    // first kind: [l][i][j]
    let first: Vec<[[Jet; 4]; 4]> = (0..DIM)
        .map(|l| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| (&(&dg[i][j][l] + &dg[j][i][l]) - &dg[l][i][j]).scale(0.5))
            })
        })
        .collect();
    let mut out = JetTensor::zeros(3, o);
    for k in 0..DIM {
        for i in 0..DIM {
            for j in i..DIM {
                let mut acc = Jet::constant(0.0, o);
                for (l, fl) in first.iter().enumerate() {
                    acc.fma_assign(&m.ginv[k][l], &fl[i][j]);
                }
                *out.at_mut(&[k, j, i]) = acc.clone();
                *out.at_mut(&[k, i, j]) = acc;
            }
        }
    }
    Ok(out)
}

/// (nabla T)_{n i1 .. is} for a covariant tensor T.
pub fn covariant_derivative(t: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    if t.order() == 0 {
        return Err(Error::OrderBudget(
            "covariant derivative of an order-0 jet".into(),
        ));
    }
    let s = t.rank;
    let o = (t.order() - 1).min(gamma.order());
    let mut out = JetTensor::zeros(s + 1, o);
    let mut src = vec![0usize; s];
    for n in 0..DIM.pow(s as u32 + 1) {
        let ix = unflat(n, s + 1);
        let d = ix[0];
        let mut acc = t.at(&ix[1..]).diff(d);
        for slot in 0..s {
            src.copy_from_slice(&ix[1..]);
            for m in 0..DIM {
                src[slot] = m;
                acc.fnma_assign(gamma.at(&[m, d, ix[1 + slot]]), t.at(&src));
            }
        }
        out.data[n] = acc;
    }
    Ok(out)
}

/// Jets of the curvature quantities derived without further differentiation.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureJets {
    pub point: Point4,
    pub gamma: JetTensor,
    pub riemann: JetTensor,
    pub ricci: JetTensor,
    pub tau: Jet,
    pub schouten: JetTensor,
    pub weyl: JetTensor,
}

/// Kulkarni-Nomizu product (h owedge k)_{ijkl}
/// = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il.
pub fn kulkarni_nomizu(h: &JetTensor, k: &JetTensor) -> JetTensor {
    JetTensor::from_fn(4, |ix| {
        let (i, j, a, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = h.at(&[i, a]) * k.at(&[j, l]);
        acc.fma_assign(h.at(&[j, l]), k.at(&[i, a]));
        acc.fnma_assign(h.at(&[i, l]), k.at(&[j, a]));
        acc.fnma_assign(h.at(&[j, a]), k.at(&[i, l]));
        acc
    })
}

pub fn curvature_jets(m: &MetricJets) -> Result<CurvatureJets> {
    need(m, 2, "curvature")?;
    let gamma = christoffel_jets(m)?;
    let o = m.order() - 2;
    // R_{ijk}^m as [i][j][k][m]
    let mut r_up = JetTensor::zeros(4, o);
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            for k in 0..DIM {
                for mm in 0..DIM {
                    let mut acc = &gamma.at(&[mm, j, k]).diff(i) - &gamma.at(&[mm, i, k]).diff(j);
                    for p in 0..DIM {
                        acc.fma_assign(gamma.at(&[p, j, k]), gamma.at(&[mm, i, p]));
                        acc.fnma_assign(gamma.at(&[p, i, k]), gamma.at(&[mm, j, p]));
                    }
                    *r_up.at_mut(&[j, i, k, mm]) = -&acc;
                    *r_up.at_mut(&[i, j, k, mm]) = acc;
                }
            }
        }
    }
    let riemann = JetTensor::from_fn(4, |ix| {
        let mut acc = Jet::constant(0.0, o);
        for mm in 0..DIM {
            acc.fma_assign(r_up.at(&[ix[0], ix[1], ix[2], mm]), &m.g[mm][ix[3]]);
        }
        acc
    });
    let ricci = JetTensor::from_fn(2, |ix| {
        let mut acc = Jet::constant(0.0, o);
        for i in 0..DIM {
            acc = &acc + r_up.at(&[i, ix[0], ix[1], i]);
        }
        acc
    });
    let mut tau = Jet::constant(0.0, o);
    for j in 0..DIM {
        for k in 0..DIM {
            tau.fma_assign(&m.ginv[j][k], ricci.at(&[j, k]));
        }
    }
    let tau6 = tau.scale(1.0 / 6.0);
    let schouten = JetTensor::from_fn(2, |ix| {
        let mut acc = ricci.at(ix).clone();
        acc.fnma_assign(&tau6, &m.g[ix[0]][ix[1]]);
        acc
    });
    let kn = kulkarni_nomizu(&schouten, &m.g_tensor());
    let weyl = JetTensor::from_fn(4, |ix| {
        let mut acc = riemann.at(ix).clone();
        acc.axpy(0.5, kn.at(ix));
        acc
    });
    Ok(CurvatureJets {
        point: m.point,
        gamma,
        riemann,
        ricci,
        tau,
        schouten,
        weyl,
    })
}

/// C_{ijk} = (nabla_i S)_{jk} - (nabla_j S)_{ik}.
pub fn cotton_jets(c: &CurvatureJets) -> Result<JetTensor> {
    let ns = covariant_derivative(&c.schouten, &c.gamma)?;
    Ok(JetTensor::from_fn(3, |ix| {
        ns.at(&[ix[0], ix[1], ix[2]]) - ns.at(&[ix[1], ix[0], ix[2]])
    }))
}

/// (div_4 W)_{kij} = g^{ln} (nabla_n W)_{kijl}.
pub fn div4_weyl_jets(m: &MetricJets, c: &CurvatureJets) -> Result<JetTensor> {
    let nw = covariant_derivative(&c.weyl, &c.gamma)?;
    let o = nw.order();
    Ok(JetTensor::from_fn(3, |ix| {
        let mut acc = Jet::constant(0.0, o);
        for l in 0..DIM {
            for n in 0..DIM {
                acc.fma_assign(&m.ginv[l][n], nw.at(&[n, ix[0], ix[1], ix[2], l]));
            }
        }
        acc
    }))
}

/// Curvature at a point, as plain values.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBundle {
    pub gamma: TensorValue,
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub tau: f64,
    pub schouten: TensorValue,
    pub cotton: TensorValue,
    pub weyl: TensorValue,
}

pub fn curvature_bundle(m: &MetricJets) -> Result<CurvatureBundle> {
    need(m, 3, "the curvature bundle")?;
    let c = curvature_jets(m)?;
    let cotton = cotton_jets(&c)?;
    let p = m.point;
    Ok(CurvatureBundle {
        gamma: TensorValue::from_jets(1, &c.gamma, p),
        riemann: TensorValue::from_jets(0, &c.riemann, p),
        ricci: TensorValue::from_jets(0, &c.ricci, p),
        tau: c.tau.value(),
        schouten: TensorValue::from_jets(0, &c.schouten, p),
        cotton: TensorValue::from_jets(0, &cotton, p),
        weyl: TensorValue::from_jets(0, &c.weyl, p),
    })
}

pub fn christoffel(g: &WalkerMetric, p: &Point4) -> Result<TensorValue> {
    let m = MetricJets::walker(g, p, 1)?;
    Ok(TensorValue::from_jets(1, &christoffel_jets(&m)?, *p))
}

pub struct RiemannRicci {
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub tau: f64,
}

pub fn riemann_ricci(g: &WalkerMetric, p: &Point4) -> Result<RiemannRicci> {
    let c = curvature_jets(&MetricJets::walker(g, p, 2)?)?;
    Ok(RiemannRicci {
        riemann: TensorValue::from_jets(0, &c.riemann, *p),
        ricci: TensorValue::from_jets(0, &c.ricci, *p),
        tau: c.tau.value(),
    })
}

pub struct WeylSchoutenCotton {
    pub schouten: TensorValue,
    pub cotton: TensorValue,
    pub weyl: TensorValue,
}

pub fn weyl_schouten_cotton(g: &WalkerMetric, p: &Point4) -> Result<WeylSchoutenCotton> {
    let b = curvature_bundle(&MetricJets::walker(g, p, 3)?)?;
    Ok(WeylSchoutenCotton {
        schouten: b.schouten,
        cotton: b.cotton,
        weyl: b.weyl,
    })
}

/// Evaluations of the Bach tensor at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct BachValue {
    /// div_1 div_4 W + 1/2 W[rho].
    pub bach: [[f64; 4]; 4],
    /// 1/2 (div_1 C + W[rho]), equal to `bach` since div_4 W = C/2.
    pub via_cotton: [[f64; 4]; 4],
    /// 1/2 (-div_1 C + W[rho]), the same relation under the opposite sign
    /// convention for W.
    pub quoted_relation: [[f64; 4]; 4],
    /// Largest magnitude among the terms being combined.
    pub scale: f64,
}

fn max_gap(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

impl BachValue {
    pub fn max_abs(&self) -> f64 {
        self.bach.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn route_gap(&self) -> f64 {
        max_gap(&self.bach, &self.via_cotton)
    }

    pub fn quoted_relation_gap(&self) -> f64 {
        max_gap(&self.bach, &self.quoted_relation)
    }
}

/// Relative gap between the two Bach evaluations that signals a convention bug.
pub const BACH_ROUTE_TOL: f64 = 1e-6;

/// All Bach evaluations with no agreement check.
pub fn bach_routes(m: &MetricJets) -> Result<BachValue> {
    need(m, 4, "the Bach tensor")?;
    let c = curvature_jets(m)?;
    let ginv = m.ginv_values();
    let d4 = div4_weyl_jets(m, &c)?;
    let nd4 = covariant_derivative(&d4, &c.gamma)?;
    let cotton = cotton_jets(&c)?;
    let nc = covariant_derivative(&cotton, &c.gamma)?;

    let rho = c.ricci.values();
    let w = c.weyl.values();
    let raise = |a: usize, b: usize| {
        let mut s = 0.0;
        for p in 0..DIM {
            for q in 0..DIM {
                s += ginv[a][p] * ginv[b][q] * rho[p * DIM + q];
            }
        }
        s
    };
    let rho_up: Vec<f64> = (0..DIM * DIM).map(|n| raise(n / DIM, n % DIM)).collect();

    let mut bach = [[0.0; 4]; 4];
    let mut via_cotton = [[0.0; 4]; 4];
    let mut quoted_relation = [[0.0; 4]; 4];
    let mut scale: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let mut wr = 0.0;
            let mut div1 = 0.0;
            let mut divc = 0.0;
            for k in 0..DIM {
                for l in 0..DIM {
                    wr += rho_up[k * DIM + l] * w[flat(&[k, i, j, l])];
                    div1 += ginv[k][l] * nd4.at(&[l, k, i, j]).value();
                    divc += ginv[k][l] * nc.at(&[l, k, i, j]).value();
                }
            }
            bach[i][j] = div1 + 0.5 * wr;
            via_cotton[i][j] = 0.5 * (divc + wr);
            quoted_relation[i][j] = 0.5 * (-divc + wr);
            scale = scale
                .max(div1.abs())
                .max(0.5 * wr.abs())
                .max(0.5 * divc.abs());
        }
    }
    Ok(BachValue {
        bach,
        via_cotton,
        quoted_relation,
        scale,
    })
}

/// Bach tensor; fails hard when the two evaluations disagree.
pub fn bach_jets(m: &MetricJets) -> Result<BachValue> {
    let b = bach_routes(m)?;
    let gap = b.route_gap();
    if gap > BACH_ROUTE_TOL * (1.0 + b.scale) {
        return Err(Error::Consistency(format!(
            "Bach evaluations disagree by {gap:e} (scale {:e})",
            b.scale
        )));
    }
    Ok(b)
}

pub fn bach(g: &WalkerMetric, p: &Point4) -> Result<BachValue> {
    bach_jets(&MetricJets::walker(g, p, 4)?)
}

/// (Hes f)_{ij} = d_i d_j f - Gamma^k_{ij} d_k f, from an order-2 jet of f.
pub fn hessian(f: &Jet, gamma: &JetTensor) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut a = [0u8; 4];
            a[i] += 1;
            a[j] += 1;
            let mut h = f.partial(&a);
            for k in 0..DIM {
                h -= gamma.at(&[k, i, j]).value() * f.d1(k);
            }
            h
        })
    })
}

pub fn trace(ginv: &[[f64; 4]; 4], t: &[[f64; 4]; 4]) -> f64 {
    (0..DIM)
        .flat_map(|i| (0..DIM).map(move |j| (i, j)))
        .map(|(i, j)| ginv[i][j] * t[i][j])
        .sum()
}

/// g(grad f, grad f) = g^{ij} d_i f d_j f.
pub fn gradient_norm(ginv: &[[f64; 4]; 4], df: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            s += ginv[i][j] * df[i] * df[j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{AffineSurface, EndoField, SymForm2};
    use crate::exprkit::parse;
    use crate::walker::build_metric;

    fn f1() -> WalkerMetric {
        let phi = SymForm2::from_strs("0", "0", "-2").unwrap();
        build_metric(
            &AffineSurface::flat(),
            Some(&phi),
            Some(&EndoField::nilpotent()),
        )
    }

    #[test]
    fn f1_christoffel_symbols() {
        let g = christoffel(&f1(), &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.get(&[1, 0, 0]), -1.0);
        assert_eq!(g.get(&[2, 0, 3]), 1.0);
        assert_eq!(g.get(&[3, 0, 0]), -2.0);
        assert_eq!(g.get(&[3, 0, 1]), 0.0);
    }

    #[test]
    fn flat_extension_is_flat() {
        let g = build_metric(&AffineSurface::flat(), None, None);
        let p = [0.3, 0.1, -0.4, 0.9];
        assert_eq!(christoffel(&g, &p).unwrap().max_abs(), 0.0);
        assert_eq!(riemann_ricci(&g, &p).unwrap().riemann.max_abs(), 0.0);
    }

    #[test]
    fn order_budget_enforced() {
        let m = MetricJets::walker(&f1(), &[0.0; 4], 3).unwrap();
        assert!(matches!(bach_routes(&m), Err(Error::OrderBudget(_))));
    }

    #[test]
    fn conformal_matches_direct_block() {
        let g = WalkerMetric::general(
            parse("x1*xp2").unwrap(),
            parse("1").unwrap(),
            parse("x2").unwrap(),
        );
        let p = [0.2, 0.5, -0.1, 0.7];
        let m = MetricJets::walker(&g, &p, 2).unwrap();
        let c = m.conformal(&Jet::constant(2.0, 2)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.g[i][j].value(), m.g[i][j].value() / 4.0);
                assert_eq!(c.ginv[i][j].value(), m.ginv[i][j].value() * 4.0);
            }
        }
    }
}
