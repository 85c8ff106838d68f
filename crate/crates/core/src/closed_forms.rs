//! Published closed-form expressions, evaluated numerically for cross-checks.

use crate::affine::{AffineSurface, SymForm2};
use crate::error::Result;
use crate::exprkit::Point4;

/// Constant (1,1)-tensor with `t[i][j] = T_i^j` and the invariants used below.
#[derive(Clone, Copy, Debug, PartialEq)]
struct TData {
    t11: f64,
    t12: f64,
    t21: f64,
    t22: f64,
    dt: f64,
    tr: f64,
}

impl TData {
    /// `tXY` is the upper-X lower-Y component, T^X_Y = t[Y-1][X-1].
    fn new(t: &[[f64; 2]; 2]) -> Self {
        let (t11, t21, t12, t22) = (t[0][0], t[0][1], t[1][0], t[1][1]);
        TData {
            t11,
            t12,
            t21,
            t22,
            dt: t11 * t22 - t12 * t21,
            tr: t11 + t22,
        }
    }
}

/// Off-diagonal block coefficient matrix, before placement.
pub fn bach_tilde(t: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = TData::new(t);
    let k = ((d.t11 - d.t22).powi(2) + 4.0 * d.t12 * d.t21) * d.tr / 6.0;
    [
        [k * (d.t11 - d.t22), k * 2.0 * d.t21],
        [k * 2.0 * d.t12, k * (d.t22 - d.t11)],
    ]
}

struct BaseData {
    g: [[[f64; 2]; 2]; 2],
    dg: [[[[f64; 2]; 2]; 2]; 2],
    phi: [[f64; 2]; 2],
}

fn base_data(s: &AffineSurface, phi: &SymForm2, p: &Point4) -> Result<BaseData> {
    let jets = s.jets(p, 1)?;
    let mut g = [[[0.0; 2]; 2]; 2];
    let mut dg = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                g[i][j][k] = jets[i][j][k].value();
                for (l, slot) in dg.iter_mut().enumerate() {
                    slot[i][j][k] = jets[i][j][k].d1(l);
                }
            }
        }
    }
    let pj = phi.jets(p, 0)?;
    Ok(BaseData {
        g,
        dg,
        phi: [
            [pj[0][0].value(), pj[0][1].value()],
            [pj[1][0].value(), pj[1][1].value()],
        ],
    })
}

/// Printed Walker-block Bach components (B11, B12, B22) for constant T.
pub fn bach_block(
    s: &AffineSurface,
    phi: &SymForm2,
    t: &[[f64; 2]; 2],
    p: &Point4,
) -> Result<[f64; 3]> {
    let d = TData::new(t);
    let b = base_data(s, phi, p)?;
    let (dt, tr, t12, t21, t22) = (d.dt, d.tr, d.t12, d.t21, d.t22);
    let (x1, x2) = (p[2], p[3]);
    // Gamma_ij^k and d_l Gamma_ij^k with 1-based names
    let g = |i: usize, j: usize, k: usize| b.g[i - 1][j - 1][k - 1];
    let dg = |l: usize, i: usize, j: usize, k: usize| b.dg[l - 1][i - 1][j - 1][k - 1];
    let (p11, p12, p22) = (b.phi[0][0], b.phi[0][1], b.phi[1][1]);
    let q = tr * tr - 4.0 * dt;

    let b11 = -(10.0 * dt.powi(3) - 2.0 * (tr * tr + 13.0 * t22 * tr - 15.0 * t22 * t22) * dt * dt
        + (5.0 * tr - t22) * (tr - t22) * tr * tr * dt
        - (tr - t22).powi(2) * tr.powi(4))
        / 6.0
        * x1
        * x1
        - (t21 * t21 * (30.0 * dt * dt + tr * tr * dt - tr.powi(4))) / 6.0 * x2 * x2
        - ((13.0 * tr - 30.0 * t22) * dt * dt + (3.0 * tr - t22) * tr * tr * dt
            - (tr - t22) * tr.powi(4))
            / 3.0
            * t21
            * x1
            * x2
        - ((g(1, 1, 1) + 2.0 * g(1, 2, 2)) * (tr - 2.0 * t22) + 2.0 * t21 * g(2, 2, 2)) / 3.0
            * q
            * tr
            * x1
        - (g(1, 1, 2) * (tr - 2.0 * t22) + 2.0 * t21 * g(1, 2, 2)) / 3.0 * q * tr * x2
        - (10.0 * dt * dt + (3.0 * tr * tr - 22.0 * t22 * tr + 14.0 * t22 * t22) * dt
            - (tr * tr - 4.0 * t22 * tr + 2.0 * t22 * t22) * tr * tr)
            / 6.0
            * p11
        - ((11.0 * tr - 14.0 * t22) * dt - 2.0 * (tr - t22) * tr * tr) / 3.0 * t21 * p12
        + (tr * tr - 7.0 * dt) / 3.0 * t21 * t21 * p22
        - 2.0 / 3.0 * (dg(2, 1, 1, 2) - dg(1, 1, 2, 2)) * (4.0 * dt - tr * tr);

    let b12 = -((13.0 * tr - 30.0 * t22) * dt * dt + (3.0 * tr - t22) * tr * tr * dt
        - (tr - t22) * tr.powi(4))
        / 6.0
        * t12
        * x1
        * x1
        + ((17.0 * tr - 30.0 * t22) * dt * dt - (2.0 * tr + t22) * tr * tr * dt + t22 * tr.powi(4))
            / 6.0
            * t21
            * x2
            * x2
        + (20.0 * dt.powi(3)
            + 4.0 * (4.0 * tr * tr - 15.0 * t22 * tr + 15.0 * t22 * t22) * dt * dt
            - (3.0 * tr * tr + 2.0 * t22 * tr - 2.0 * t22 * t22) * tr * tr * dt
            + 2.0 * (tr - t22) * t22 * tr.powi(4))
            / 6.0
            * x1
            * x2
        - (g(1, 2, 1) * (tr - 2.0 * t22) + 2.0 * t21 * g(2, 2, 1)) / 3.0 * q * tr * x1
        - (g(1, 2, 2) * (tr - 2.0 * t22) + 2.0 * t21 * g(2, 2, 2)) / 3.0 * q * tr * x2
        - ((11.0 * tr - 14.0 * t22) * dt - 2.0 * (tr - t22) * tr * tr) / 6.0 * t12 * p11
        + (4.0 * dt * dt + (6.0 * tr * tr - 28.0 * t22 * tr + 28.0 * t22 * t22) * dt
            - (tr - 2.0 * t22).powi(2) * tr * tr)
            / 6.0
            * p12
        + ((3.0 * tr - 14.0 * t22) * dt + 2.0 * t22 * tr * tr) / 6.0 * t21 * p22
        - (dg(2, 1, 1, 1) - dg(1, 1, 2, 1) - dg(2, 1, 2, 2) + dg(1, 2, 2, 2)) * q / 3.0;

    let b22 = -(30.0 * dt * dt - tr.powi(4) + tr * tr * dt) / 6.0 * t12 * t12 * x1 * x1
        - (10.0 * dt.powi(3)
            + 2.0 * (tr * tr - 17.0 * t22 * tr + 15.0 * t22 * t22) * dt * dt
            + (4.0 * tr + t22) * t22 * tr * tr * dt
            - t22 * t22 * tr.powi(4))
            / 6.0
            * x2
            * x2
        + ((17.0 * tr - 30.0 * t22) * dt * dt - (2.0 * tr + t22) * tr * tr * dt + t22 * tr.powi(4))
            / 3.0
            * t12
            * x1
            * x2
        - (g(2, 2, 1) * (tr - 2.0 * t22) + 2.0 * t12 * g(2, 2, 2)) / 3.0 * q * tr * x1
        + (g(2, 2, 2) * (tr - 2.0 * t22) - 2.0 * t21 * g(2, 2, 1)) / 3.0 * q * tr * x2
        - (7.0 * dt - tr * tr) / 3.0 * t12 * t12 * p11
        + ((3.0 * tr - 14.0 * t22) * t12 * dt + 2.0 * t12 * t22 * tr * tr) / 3.0 * p12
        - (10.0 * dt * dt - (5.0 * tr * tr + 6.0 * t22 * tr - 14.0 * t22 * t22) * dt + tr.powi(4)
            - 2.0 * t22 * t22 * tr * tr)
            / 6.0
            * p22
        - 2.0 / 3.0 * (dg(2, 1, 2, 1) - dg(1, 2, 2, 1)) * q;

    Ok([b11, b12, b22])
}
