//! Walker metrics on the chart (x1, x2, xp1, xp2) and the modified
//! Riemannian extensions built from affine data.

use crate::affine::{form_derivatives, AffineSurface, EndoField, SymForm2};
use crate::error::{Error, Result};
use crate::exprkit::{eval, eval_jet, Coord, Expr, Jet, Point4};

/// Where a metric came from.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    General,
    Extension {
        surface: AffineSurface,
        phi: SymForm2,
        t: EndoField,
    },
}

/// g = [[a, c, 1, 0], [c, b, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]].
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerMetric {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub provenance: Provenance,
}

impl WalkerMetric {
    pub fn general(a: Expr, b: Expr, c: Expr) -> Self {
        WalkerMetric {
            a,
            b,
            c,
            provenance: Provenance::General,
        }
    }

    /// Walker block entry g_{ij} for i, j in {0, 1}.
    pub fn block(&self, i: usize, j: usize) -> &Expr {
        match (i, j) {
            (0, 0) => &self.a,
            (1, 1) => &self.b,
            _ => &self.c,
        }
    }

    /// Jets of the Walker block, `[[a, c], [c, b]]`.
    pub fn block_jets(&self, p: &Point4, order: usize) -> Result<[[Jet; 2]; 2]> {
        let a = eval_jet(&self.a, p, order)?;
        let b = eval_jet(&self.b, p, order)?;
        let c = eval_jet(&self.c, p, order)?;
        Ok([[a, c.clone()], [c, b]])
    }

    pub fn extension(&self) -> Option<(&AffineSurface, &SymForm2, &EndoField)> {
        match &self.provenance {
            Provenance::Extension { surface, phi, t } => Some((surface, phi, t)),
            Provenance::General => None,
        }
    }
}

fn xp(k: usize) -> Expr {
    Expr::var(Coord::from_index(2 + k))
}

/// g_ij = 1/2 x'_r x'_s (T_i^r T_j^s + T_j^r T_i^s) - 2 x'_k Gamma_ij^k + Phi_ij.
pub fn build_metric(
    s: &AffineSurface,
    phi: Option<&SymForm2>,
    t: Option<&EndoField>,
) -> WalkerMetric {
    let zero_t = EndoField::zero();
    let zero_phi = SymForm2::zero();
    let t = t.unwrap_or(&zero_t);
    let phi = phi.unwrap_or(&zero_phi);
    let entry = |i: usize, j: usize| {
        let mut terms = Vec::new();
        for r in 0..2 {
            for q in 0..2 {
                let sym = Expr::add(
                    Expr::mul(t.get(i, r).clone(), t.get(j, q).clone()),
                    Expr::mul(t.get(j, r).clone(), t.get(i, q).clone()),
                );
                terms.push(Expr::mul(
                    Expr::mul(Expr::rational(1, 2), sym),
                    Expr::mul(xp(r), xp(q)),
                ));
            }
        }
        for k in 0..2 {
            terms.push(Expr::mul(
                Expr::int(-2),
                Expr::mul(xp(k), s.gamma(i, j, k).clone()),
            ));
        }
        terms.push(phi.get(i, j).clone());
        Expr::sum(terms)
    };
    WalkerMetric {
        a: entry(0, 0),
        b: entry(1, 1),
        c: entry(0, 1),
        provenance: Provenance::Extension {
            surface: s.clone(),
            phi: phi.clone(),
            t: t.clone(),
        },
    }
}

pub type Mat4 = [[f64; 4]; 4];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricAt {
    pub matrix: Mat4,
    pub inverse: Mat4,
}

/// Inverse of [[A, I], [I, 0]] is [[0, I], [I, -A]].
pub fn walker_matrix(a: f64, b: f64, c: f64) -> MetricAt {
    let matrix = [
        [a, c, 1.0, 0.0],
        [c, b, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ];
    let inverse = [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, -a, -c],
        [0.0, 1.0, -c, -b],
    ];
    MetricAt { matrix, inverse }
}

pub fn det4(m: &Mat4) -> f64 {
    nalgebra::Matrix4::from_fn(|i, j| m[i][j]).determinant()
}

pub fn metric_at(g: &WalkerMetric, p: &Point4) -> Result<MetricAt> {
    let m = walker_matrix(eval(&g.a, p)?, eval(&g.b, p)?, eval(&g.c, p)?);
    let det = det4(&m.matrix);
    if (det - 1.0).abs() > 1e-12 * (1.0 + m.matrix[0][0].abs().max(m.matrix[1][1].abs())) {
        return Err(Error::Consistency(format!("Walker determinant {det} != 1")));
    }
    Ok(m)
}

/// Phi-hat(X, Y) = Phi(TX, TY) as a symmetric form.
pub fn hat_form(t: &EndoField, phi: &SymForm2) -> SymForm2 {
    let entry = |i: usize, j: usize| {
        Expr::sum((0..2).flat_map(|r| {
            (0..2).map(move |q| {
                Expr::mul(
                    Expr::mul(t.get(i, r).clone(), t.get(j, q).clone()),
                    phi.get(r, q).clone(),
                )
            })
        }))
    };
    SymForm2::new(entry(0, 0), entry(0, 1), entry(1, 1))
        .expect("products of base fields are base fields")
}

/// theta-hat(X) = theta(TX) for a one-form given by its components.
pub fn hat_one_form(t: &EndoField, theta: &[Expr; 2]) -> [Expr; 2] {
    std::array::from_fn(|i| {
        Expr::sum((0..2).map(|r| Expr::mul(t.get(i, r).clone(), theta[r].clone())))
    })
}

/// Numeric pullback of a one-form through T at a point.
pub fn hat_covector(t: &[[f64; 2]; 2], theta: [f64; 2]) -> [f64; 2] {
    std::array::from_fn(|i| t[i][0] * theta[0] + t[i][1] * theta[1])
}

/// (nabla-hat Phi)_{ijk} = (nabla Phi)(T d_i, T d_j; T d_k) at a point.
pub fn hat_nabla_phi(
    s: &AffineSurface,
    t: &EndoField,
    phi: &SymForm2,
    p: &Point4,
) -> Result<[[[f64; 2]; 2]; 2]> {
    let tv = t.values(p)?;
    let d = form_derivatives(s, phi, p)?;
    let mut out = [[[0.0; 2]; 2]; 2];
    for (i, oi) in out.iter_mut().enumerate() {
        for (j, oj) in oi.iter_mut().enumerate() {
            for (k, v) in oj.iter_mut().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            *v += tv[i][a] * tv[j][b] * tv[k][c] * d.d1[c][a][b];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All hat objects of the data at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct HatForms {
    pub phi: [[f64; 2]; 2],
    pub theta: Option<[f64; 2]>,
    pub nabla_phi: [[[f64; 2]; 2]; 2],
}

pub fn hat_forms(
    s: &AffineSurface,
    t: &EndoField,
    phi: &SymForm2,
    theta: Option<[f64; 2]>,
    p: &Point4,
) -> Result<HatForms> {
    let h = hat_form(t, phi);
    let phi_hat = [
        [eval(h.get(0, 0), p)?, eval(h.get(0, 1), p)?],
        [eval(h.get(1, 0), p)?, eval(h.get(1, 1), p)?],
    ];
    let tv = t.values(p)?;
    Ok(HatForms {
        phi: phi_hat,
        theta: theta.map(|th| hat_covector(&tv, th)),
        nabla_phi: hat_nabla_phi(s, t, phi, p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse;

    fn at(e: &Expr, p: Point4) -> f64 {
        eval(e, &p).unwrap()
    }

    #[test]
    fn nilpotent_flat_extension() {
        let g = build_metric(&AffineSurface::flat(), None, Some(&EndoField::nilpotent()));
        for p in [[0.1, 0.2, 0.3, 0.4], [1.0, -2.0, 3.0, -5.0]] {
            assert_eq!(at(&g.a, p), p[3] * p[3]);
            assert_eq!(at(&g.b, p), 0.0);
            assert_eq!(at(&g.c, p), 0.0);
        }
    }

    #[test]
    fn classical_extension() {
        let s = AffineSurface::from_strs(["x1", "x2", "sin(x1)", "1", "x1*x2", "2"]).unwrap();
        let g = build_metric(&s, None, None);
        let p = [0.3, -0.7, 1.5, 2.5];
        let expect =
            |i, j| -2.0 * (p[2] * at(s.gamma(i, j, 0), p) + p[3] * at(s.gamma(i, j, 1), p));
        assert!((at(&g.a, p) - expect(0, 0)).abs() < 1e-14);
        assert!((at(&g.c, p) - expect(0, 1)).abs() < 1e-14);
        assert!((at(&g.b, p) - expect(1, 1)).abs() < 1e-14);
    }

    #[test]
    fn soliton_deformation() {
        let phi = SymForm2::from_strs("0", "0", "-2").unwrap();
        let g = build_metric(
            &AffineSurface::flat(),
            Some(&phi),
            Some(&EndoField::nilpotent()),
        );
        let p = [0.5, 0.5, 0.5, 3.0];
        assert_eq!((at(&g.a, p), at(&g.b, p), at(&g.c, p)), (9.0, -2.0, 0.0));
    }

    #[test]
    fn matrix_and_inverse() {
        let g = build_metric(&AffineSurface::flat(), None, Some(&EndoField::nilpotent()));
        let m = metric_at(&g, &[0.0, 0.0, 0.0, 5.0]).unwrap();
        assert_eq!(m.matrix[0][0], 25.0);
        assert_eq!(m.matrix[0][2], 1.0);
        assert_eq!(m.matrix[1][3], 1.0);
        let mut id = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                id[i][j] = (0..4).map(|k| m.matrix[i][k] * m.inverse[k][j]).sum();
            }
        }
        for (i, row) in id.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(det4(&m.matrix), 1.0);
    }

    #[test]
    fn identity_t_gives_quadratic_form() {
        let g = build_metric(
            &AffineSurface::flat(),
            None,
            Some(&EndoField::constant([[1.0, 0.0], [0.0, 1.0]])),
        );
        let p = [0.1, 0.2, 0.7, -1.3];
        assert!((at(&g.a, p) - p[2] * p[2]).abs() < 1e-15);
        assert!((at(&g.c, p) - p[2] * p[3]).abs() < 1e-15);
        assert!((at(&g.b, p) - p[3] * p[3]).abs() < 1e-15);
    }

    #[test]
    fn hat_examples() {
        let t = EndoField::nilpotent();
        let phi = SymForm2::from_strs("x1", "7", "x2^2").unwrap();
        let h = hat_form(&t, &phi);
        let p = [0.4, -0.6, 0.0, 0.0];
        assert!((at(h.get(0, 0), p) - 0.36).abs() < 1e-15);
        assert_eq!(at(h.get(0, 1), p), 0.0);
        assert_eq!(at(h.get(1, 1), p), 0.0);

        let eta = [parse("x1").unwrap(), parse("x2").unwrap()];
        let eh = hat_one_form(&t, &eta);
        assert_eq!(at(&eh[0], p), -0.6);
        assert_eq!(at(&eh[1], p), 0.0);

        let z = hat_forms(
            &AffineSurface::flat(),
            &EndoField::zero(),
            &phi,
            Some([1.0, 2.0]),
            &p,
        )
        .unwrap();
        assert_eq!(z.phi, [[0.0; 2]; 2]);
        assert_eq!(z.theta, Some([0.0, 0.0]));
        assert_eq!(z.nabla_phi, [[[0.0; 2]; 2]; 2]);
    }
}
