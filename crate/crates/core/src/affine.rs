//! Torsion-free affine surfaces in a chart (x1, x2), their Ricci tensor and
//! the structures attached to a (1,1)-tensor field T.
//!
//! Indices are 0-based: `gamma(i, j, k)` is the Christoffel symbol
//! Gamma_{ij}^k, and `T[i][j]` is T_i^j with T d_i = T_i^j d_j.

use crate::error::{Error, Result};
use crate::exprkit::{eval_jet, parse, Coord, Expr, Jet, Point4, Sampler};

/// Scenario keys of the six independent Christoffel symbols, in storage order.
pub const GAMMA_KEYS: [&str; 6] = ["111", "112", "121", "122", "221", "222"];

/// Threshold below which a pointwise quantity is treated as vanishing.
pub const VANISH: f64 = 1e-12;

fn slot(i: usize, j: usize, k: usize) -> usize {
    let pair = match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (0, 1) => 1,
        _ => 2,
    };
    pair * 2 + k
}

fn check_base(name: &str, e: &Expr) -> Result<()> {
    for c in [Coord::Xp1, Coord::Xp2] {
        if e.depends_on(c) {
            return Err(Error::NotBaseField {
                field: name.to_string(),
                coord: c.name(),
            });
        }
    }
    Ok(())
}

pub fn base_point(p: [f64; 2]) -> Point4 {
    [p[0], p[1], 0.0, 0.0]
}

type Gamma<T> = [[[T; 2]; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct AffineSurface {
    gamma: [Expr; 6],
}

impl AffineSurface {
    /// Symbols in `GAMMA_KEYS` order.
    pub fn new(gamma: [Expr; 6]) -> Result<Self> {
        for (key, e) in GAMMA_KEYS.iter().zip(&gamma) {
            check_base(&format!("Gamma {key}"), e)?;
        }
        Ok(AffineSurface { gamma })
    }

    pub fn from_strs(gamma: [&str; 6]) -> Result<Self> {
        let mut out: [Expr; 6] = Default::default();
        for (slot, s) in out.iter_mut().zip(gamma) {
            *slot = parse(s)?;
        }
        AffineSurface::new(out)
    }

    pub fn flat() -> Self {
        AffineSurface {
            gamma: Default::default(),
        }
    }

    /// Surface whose only nonzero symbols are given as (i, j, k, expr).
    pub fn with_symbols(symbols: &[(usize, usize, usize, &str)]) -> Result<Self> {
        let mut gamma: [Expr; 6] = Default::default();
        for &(i, j, k, s) in symbols {
            gamma[slot(i, j, k)] = parse(s)?;
        }
        AffineSurface::new(gamma)
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.gamma[slot(i, j, k)]
    }

    pub fn symbols(&self) -> &[Expr; 6] {
        &self.gamma
    }

    pub fn jets(&self, p: &Point4, order: usize) -> Result<Gamma<Jet>> {
        let mut s: [Jet; 6] = std::array::from_fn(|_| Jet::constant(0.0, order));
        for (slot, e) in s.iter_mut().zip(&self.gamma) {
            *slot = eval_jet(e, p, order)?;
        }
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| s[slot(i, j, k)].clone()))
        }))
    }

    /// Symbolic affine Ricci component rho_{ij}, rho(X,Y) = tr(Z -> R(Z,X)Y).
    pub fn ricci_expr(&self, x: usize, y: usize) -> Expr {
        let g = |i, j, k| self.gamma(i, j, k).clone();
        let d = |e: Expr, k: usize| e.diff(Coord::from_index(k));
        let mut terms = Vec::new();
        for k in 0..2 {
            terms.push(d(g(x, y, k), k));
            terms.push(Expr::neg(d(g(k, y, k), x)));
            for m in 0..2 {
                terms.push(Expr::mul(g(x, y, m), g(k, m, k)));
                terms.push(Expr::neg(Expr::mul(g(k, y, m), g(x, m, k))));
            }
        }
        Expr::sum(terms)
    }

    pub fn ricci_sym_expr(&self, x: usize, y: usize) -> Expr {
        if x == y {
            return self.ricci_expr(x, x);
        }
        Expr::mul(
            Expr::rational(1, 2),
            Expr::add(self.ricci_expr(x, y), self.ricci_expr(y, x)),
        )
    }

    /// Symbolic (Hes h)_{ij} = d_i d_j h - Gamma_{ij}^k d_k h.
    pub fn hessian_expr(&self, h: &Expr, i: usize, j: usize) -> Expr {
        let (ci, cj) = (Coord::from_index(i), Coord::from_index(j));
        let mut out = h.diff(ci).diff(cj);
        for k in 0..2 {
            out = Expr::sub(
                out,
                Expr::mul(self.gamma(i, j, k).clone(), h.diff(Coord::from_index(k))),
            );
        }
        out
    }

    /// Names the first symbol that breaks the constraints forced by a
    /// parallel T with T d1 = d2, T d2 = 0.
    pub fn canonical_violation(&self, p: &Point4) -> Result<Option<String>> {
        let v = |i, j, k| crate::exprkit::eval(self.gamma(i, j, k), p);
        let checks = [
            ("Gamma_12^1", v(0, 1, 0)?),
            ("Gamma_12^2 - Gamma_11^1", v(0, 1, 1)? - v(0, 0, 0)?),
            ("Gamma_22^1", v(1, 1, 0)?),
            ("Gamma_22^2", v(1, 1, 1)?),
        ];
        Ok(checks
            .into_iter()
            .find(|(_, r)| r.abs() > VANISH)
            .map(|(n, r)| format!("{n} = {r}")))
    }

    /// Names the first symbol other than Gamma_11^2 that is not identically
    /// zero near `p` (checked on its order-2 jet).
    pub fn normal_form_violation(&self, p: &Point4) -> Result<Option<String>> {
        for (idx, key) in GAMMA_KEYS.iter().enumerate() {
            if idx == slot(0, 0, 1) {
                continue;
            }
            let j = eval_jet(&self.gamma[idx], p, 2)?;
            if j.max_abs() > VANISH {
                return Ok(Some(format!("Gamma {key}")));
            }
        }
        Ok(None)
    }
}

/// (1,1)-tensor field with `t[i][j] = T_i^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoField {
    t: [[Expr; 2]; 2],
}

impl EndoField {
    pub fn new(t: [[Expr; 2]; 2]) -> Result<Self> {
        for (i, row) in t.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                check_base(&format!("T {}{}", i + 1, j + 1), e)?;
            }
        }
        Ok(EndoField { t })
    }

    pub fn from_strs(t: [[&str; 2]; 2]) -> Result<Self> {
        EndoField::new([
            [parse(t[0][0])?, parse(t[0][1])?],
            [parse(t[1][0])?, parse(t[1][1])?],
        ])
    }

    pub fn zero() -> Self {
        EndoField {
            t: Default::default(),
        }
    }

    /// T d1 = d2, T d2 = 0.
    pub fn nilpotent() -> Self {
        EndoField {
            t: [[Expr::zero(), Expr::one()], [Expr::zero(), Expr::zero()]],
        }
    }

    pub fn constant(m: [[f64; 2]; 2]) -> Self {
        let lit = |v: f64| {
            if v.fract() == 0.0 && v.abs() < 1e15 {
                Expr::int(v as i64)
            } else {
                Expr::Num(crate::exprkit::Num::Decimal(v))
            }
        };
        EndoField {
            t: [[lit(m[0][0]), lit(m[0][1])], [lit(m[1][0]), lit(m[1][1])]],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.t[i][j]
    }

    pub fn is_structurally_nilpotent_canonical(&self) -> bool {
        self.t[0][0].is_zero()
            && self.t[0][1].is_one()
            && self.t[1][0].is_zero()
            && self.t[1][1].is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.t.iter().flatten().all(Expr::is_constant)
    }

    pub fn values(&self, p: &Point4) -> Result<[[f64; 2]; 2]> {
        let v = |e: &Expr| crate::exprkit::eval(e, p);
        Ok([
            [v(&self.t[0][0])?, v(&self.t[0][1])?],
            [v(&self.t[1][0])?, v(&self.t[1][1])?],
        ])
    }

    pub fn jets(&self, p: &Point4, order: usize) -> Result<[[Jet; 2]; 2]> {
        let j = |e: &Expr| eval_jet(e, p, order);
        Ok([
            [j(&self.t[0][0])?, j(&self.t[0][1])?],
            [j(&self.t[1][0])?, j(&self.t[1][1])?],
        ])
    }
}

/// Symmetric (0,2)-tensor field on the base, stored as (11, 12, 22).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SymForm2 {
    phi: [Expr; 3],
}

impl SymForm2 {
    pub fn new(phi11: Expr, phi12: Expr, phi22: Expr) -> Result<Self> {
        for (n, e) in [("Phi 11", &phi11), ("Phi 12", &phi12), ("Phi 22", &phi22)] {
            check_base(n, e)?;
        }
        Ok(SymForm2 {
            phi: [phi11, phi12, phi22],
        })
    }

    pub fn from_strs(phi11: &str, phi12: &str, phi22: &str) -> Result<Self> {
        SymForm2::new(parse(phi11)?, parse(phi12)?, parse(phi22)?)
    }

    pub fn zero() -> Self {
        SymForm2::default()
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.phi[i + j]
    }

    pub fn with_22(&self, phi22: Expr) -> Result<Self> {
        SymForm2::new(self.phi[0].clone(), self.phi[1].clone(), phi22)
    }

    pub fn jets(&self, p: &Point4, order: usize) -> Result<[[Jet; 2]; 2]> {
        let j: [Jet; 3] = [
            eval_jet(&self.phi[0], p, order)?,
            eval_jet(&self.phi[1], p, order)?,
            eval_jet(&self.phi[2], p, order)?,
        ];
        Ok([[j[0].clone(), j[1].clone()], [j[1].clone(), j[2].clone()]])
    }
}

/// Affine Ricci tensor as jets of order `order - 1`, from symbols of order `order`.
pub fn ricci_jets(g: &Gamma<Jet>) -> [[Jet; 2]; 2] {
    std::array::from_fn(|x| {
        std::array::from_fn(|y| {
            let mut acc = Jet::constant(0.0, g[0][0][0].order() - 1);
            for k in 0..2 {
                acc = &acc + &g[x][y][k].diff(k);
                acc = &acc - &g[k][y][k].diff(x);
                for m in 0..2 {
                    acc.fma_assign(&g[x][y][m], &g[k][m][k]);
                    acc.fma_assign(&(-&g[k][y][m]), &g[x][m][k]);
                }
            }
            acc
        })
    })
}

/// (nabla_k S)_{ij} for a covariant 2-tensor given as jets; result index [k][i][j].
pub fn nabla2(s: &[[Jet; 2]; 2], g: &Gamma<Jet>) -> [[[Jet; 2]; 2]; 2] {
    std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = s[i][j].diff(k);
                for m in 0..2 {
                    acc.fma_assign(&(-&g[k][i][m]), &s[m][j]);
                    acc.fma_assign(&(-&g[k][j][m]), &s[i][m]);
                }
                acc
            })
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineCurvature {
    pub rho: [[f64; 2]; 2],
    pub rho_sym: [[f64; 2]; 2],
    pub rho_sk: [[f64; 2]; 2],
    pub rank_sym: usize,
    pub eta: Option<[f64; 2]>,
    pub eta_note: Option<String>,
    /// max |nabla rho_sym - eta (x) rho_sym| at the point, when eta exists.
    pub recurrence_residual: Option<f64>,
    pub omega: Option<[f64; 2]>,
    pub omega_note: Option<String>,
}

fn rank2(m: &[[f64; 2]; 2]) -> usize {
    let big = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if big <= VANISH {
        return 0;
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() <= 1e-9 * big * big {
        1
    } else {
        2
    }
}

pub fn affine_curvature(s: &AffineSurface, p: [f64; 2]) -> Result<AffineCurvature> {
    let p4 = base_point(p);
    let g = s.jets(&p4, 2)?;
    let rj = ricci_jets(&g);
    let rho: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| rj[i][j].value()));
    let sym_j: [[Jet; 2]; 2] =
        std::array::from_fn(|i| std::array::from_fn(|j| (&rj[i][j] + &rj[j][i]).scale(0.5)));
    let rho_sym: [[f64; 2]; 2] =
        std::array::from_fn(|i| std::array::from_fn(|j| sym_j[i][j].value()));
    let rho_sk: [[f64; 2]; 2] =
        std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (rho[i][j] - rho[j][i])));
    let rank_sym = rank2(&rho_sym);

    let (mut eta, mut eta_note, mut recurrence_residual) = (None, None, None);
    match rank_sym {
        0 => eta_note = Some("rank 0".into()),
        2 => eta_note = Some("rank 2".into()),
        _ => {
            let dn = nabla2(&sym_j, &g);
            let (mut bi, mut bj) = (0, 0);
            for i in 0..2 {
                for j in 0..2 {
                    if rho_sym[i][j].abs() > rho_sym[bi][bj].abs() {
                        (bi, bj) = (i, j);
                    }
                }
            }
            let e = [
                dn[0][bi][bj].value() / rho_sym[bi][bj],
                dn[1][bi][bj].value() / rho_sym[bi][bj],
            ];
            let mut worst: f64 = 0.0;
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        worst = worst.max((dn[k][i][j].value() - e[k] * rho_sym[i][j]).abs());
                    }
                }
            }
            eta = Some(e);
            recurrence_residual = Some(worst);
        }
    }

    let (omega, omega_note) = match s.normal_form_violation(&p4)? {
        Some(v) => (None, Some(format!("not in normal form ({v} nonzero)"))),
        None => {
            let gam = &g[0][0][1];
            let d2 = gam.diff(1);
            if gam.max_abs() <= VANISH {
                (None, Some("flat connection".into()))
            } else if d2.value().abs() <= VANISH {
                return Err(Error::Singular("∂₂Γ₁₁²".into()));
            } else {
                let v = d2.value();
                (Some([d2.diff(0).value() / v, d2.diff(1).value() / v]), None)
            }
        }
    };

    Ok(AffineCurvature {
        rho,
        rho_sym,
        rho_sk,
        rank_sym,
        eta,
        eta_note,
        recurrence_residual,
        omega,
        omega_note,
    })
}

/// Kernel of T at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// T vanishes: every direction.
    Everything,
    /// T is invertible.
    Trivial,
    Direction([f64; 2]),
}

/// Kernel of the linear map v^i d_i -> v^i T_i^j d_j.
pub fn kernel(t: &[[f64; 2]; 2]) -> Kernel {
    let big = t.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if big <= VANISH {
        return Kernel::Everything;
    }
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    if det.abs() > 1e-9 * big * big {
        return Kernel::Trivial;
    }
    // v^1 T_1^j + v^2 T_2^j = 0 for both j: use the row with the larger entry.
    let j = if t[0][0].abs().max(t[1][0].abs()) >= t[0][1].abs().max(t[1][1].abs()) {
        0
    } else {
        1
    };
    let v = [-t[1][j], t[0][j]];
    let n = v[0].hypot(v[1]);
    Kernel::Direction([v[0] / n, v[1] / n])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelReport {
    /// max over samples of |(nabla T)| over all tensor components.
    pub nabla_t: f64,
    /// max over samples of the six left-hand sides of the constant-T system.
    pub nabla_t_printed: f64,
    pub nilpotency: f64,
    pub t_norm: f64,
    pub kernel: Kernel,
    pub canonical: Option<f64>,
    pub ker_geodesic: Option<f64>,
    pub samples: usize,
}

impl ParallelReport {
    pub fn worst(&self) -> f64 {
        [
            self.nabla_t,
            self.nilpotency,
            self.canonical.unwrap_or(0.0),
            self.ker_geodesic.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The six printed left-hand sides of nabla T = 0 for constant T.
pub fn nabla_t_printed(t: &[[f64; 2]; 2], g: &Gamma<f64>) -> [f64; 6] {
    // paper-style T^j_i = t[i][j]
    let (t11, t21, t12, t22) = (t[0][0], t[0][1], t[1][0], t[1][1]);
    let gm = |i: usize, j: usize, k: usize| g[i][j][k];
    let (g111, g112, g121, g122, g221, g222) = (
        gm(0, 0, 0),
        gm(0, 0, 1),
        gm(0, 1, 0),
        gm(0, 1, 1),
        gm(1, 1, 0),
        gm(1, 1, 1),
    );
    [
        t12 * g112 - t21 * g121,
        t12 * g122 - t21 * g221,
        t21 * g111 + (t22 - t11) * g112 - t21 * g122,
        t12 * g111 + (t22 - t11) * g121 - t12 * g122,
        t21 * g121 + (t22 - t11) * g122 - t21 * g222,
        t12 * g121 + (t22 - t11) * g221 - t12 * g222,
    ]
}

pub fn parallel_nilpotent_check(
    s: &AffineSurface,
    t: &EndoField,
    sampler: &Sampler,
) -> Result<ParallelReport> {
    let points = sampler.points()?;
    let mut rep = ParallelReport {
        nabla_t: 0.0,
        nabla_t_printed: 0.0,
        nilpotency: 0.0,
        t_norm: 0.0,
        kernel: Kernel::Everything,
        canonical: None,
        ker_geodesic: None,
        samples: points.len(),
    };
    let canonical_t = t.is_structurally_nilpotent_canonical();
    for (n, p) in points.iter().enumerate() {
        let g = s.jets(p, 1)?;
        let tj = t.jets(p, 1)?;
        let tv: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| tj[i][j].value()));
        let g0: Gamma<f64> = std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| g[i][j][k].value()))
        });
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = tj[i][j].d1(k);
                    for m in 0..2 {
                        v += -g0[k][i][m] * tv[m][j] + g0[k][m][j] * tv[i][m];
                    }
                    rep.nabla_t = rep.nabla_t.max(v.abs());
                }
            }
        }
        for v in nabla_t_printed(&tv, &g0) {
            rep.nabla_t_printed = rep.nabla_t_printed.max(v.abs());
        }
        for i in 0..2 {
            for j in 0..2 {
                let sq: f64 = (0..2).map(|m| tv[i][m] * tv[m][j]).sum();
                rep.nilpotency = rep.nilpotency.max(sq.abs());
                rep.t_norm = rep.t_norm.max(tv[i][j].abs());
            }
        }
        let ker = kernel(&tv);
        if canonical_t {
            let c = [
                g0[0][1][0].abs(),
                (g0[0][1][1] - g0[0][0][0]).abs(),
                g0[1][1][0].abs(),
                g0[1][1][1].abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            rep.canonical = Some(rep.canonical.unwrap_or(0.0).max(c));
        }
        if let Kernel::Direction(v) = ker {
            // nabla_v v for constant v, then its part transverse to v
            let w: [f64; 2] = std::array::from_fn(|k| {
                (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| v[i] * v[j] * g0[i][j][k])
                    .sum()
            });
            let off = (w[0] * v[1] - w[1] * v[0]).abs();
            rep.ker_geodesic = Some(rep.ker_geodesic.unwrap_or(0.0).max(off));
        }
        if n == 0 {
            rep.kernel = ker;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgrsReport {
    pub residual: f64,
    pub scale: f64,
    pub witness: Option<Point4>,
    pub dh_ker: Option<f64>,
    pub note: Option<String>,
    pub samples: usize,
}

/// Residual of Hes h + 2 rho_sym = 0 and the size of dh on ker T.
pub fn agrs_residual(
    s: &AffineSurface,
    h: &Expr,
    t: &EndoField,
    sampler: &Sampler,
) -> Result<AgrsReport> {
    check_base("h", h)?;
    let points = sampler.points()?;
    let mut rep = AgrsReport {
        residual: 0.0,
        scale: 0.0,
        witness: None,
        dh_ker: None,
        note: None,
        samples: points.len(),
    };
    for p in &points {
        let g = s.jets(p, 1)?;
        let rho = ricci_jets(&g);
        let hj = eval_jet(h, p, 2)?;
        let tv = t.values(p)?;
        for i in 0..2 {
            for j in 0..2 {
                let mut a = [0u8; 4];
                a[i] += 1;
                a[j] += 1;
                let mut hes = hj.partial(&a);
                for k in 0..2 {
                    hes -= g[i][j][k].value() * hj.d1(k);
                }
                let rs = rho[i][j].value() + rho[j][i].value();
                let r = (hes + rs).abs();
                rep.scale = rep.scale.max(hes.abs()).max(rs.abs());
                if r > rep.residual {
                    rep.residual = r;
                    rep.witness = Some(*p);
                }
            }
        }
        match kernel(&tv) {
            Kernel::Direction(v) => {
                let d = (v[0] * hj.d1(0) + v[1] * hj.d1(1)).abs();
                rep.dh_ker = Some(rep.dh_ker.unwrap_or(0.0).max(d));
            }
            Kernel::Everything => {
                let d = hj.d1(0).abs().max(hj.d1(1).abs());
                rep.dh_ker = Some(rep.dh_ker.unwrap_or(0.0).max(d));
            }
            Kernel::Trivial => rep.note = Some("T is invertible: kernel clause skipped".into()),
        }
    }
    Ok(rep)
}

/// Base covariant derivatives of a symmetric form at a point:
/// `d1[c][a][b] = (nabla_c Phi)_{ab}` and
/// `d2[d][c][a][b] = (nabla_d (nabla Phi))_{ab;c}`.
pub struct FormDerivatives {
    pub phi: [[f64; 2]; 2],
    pub d1: [[[f64; 2]; 2]; 2],
    pub d2: [[[[f64; 2]; 2]; 2]; 2],
}

pub fn form_derivatives(s: &AffineSurface, phi: &SymForm2, p: &Point4) -> Result<FormDerivatives> {
    let g = s.jets(p, 1)?;
    let f = phi.jets(p, 2)?;
    let n1 = nabla2(&f, &g);
    let mut d2 = [[[[0.0; 2]; 2]; 2]; 2];
    for (d, dd) in d2.iter_mut().enumerate() {
        for (c, dc) in dd.iter_mut().enumerate() {
            for (a, da) in dc.iter_mut().enumerate() {
                for (b, v) in da.iter_mut().enumerate() {
                    let mut acc = n1[c][a][b].diff(d).value();
                    for m in 0..2 {
                        acc -= g[d][a][m].value() * n1[c][m][b].value();
                        acc -= g[d][b][m].value() * n1[c][a][m].value();
                        acc -= g[d][c][m].value() * n1[m][a][b].value();
                    }
                    *v = acc;
                }
            }
        }
    }
    Ok(FormDerivatives {
        phi: std::array::from_fn(|i| std::array::from_fn(|j| f[i][j].value())),
        d1: std::array::from_fn(|c| {
            std::array::from_fn(|a| std::array::from_fn(|b| n1[c][a][b].value()))
        }),
        d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_symbol_surface() {
        let s = AffineSurface::with_symbols(&[(0, 0, 1, "x2")]).unwrap();
        let c = affine_curvature(&s, [0.3, 0.7]).unwrap();
        assert_eq!(c.rho, [[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(c.rho_sk, [[0.0; 2]; 2]);
        assert_eq!(c.omega, Some([0.0, 0.0]));
        assert_eq!(c.rank_sym, 1);
        assert_eq!(c.eta, Some([0.0, 0.0]));
    }

    #[test]
    fn flat_surface_has_nothing() {
        let c = affine_curvature(&AffineSurface::flat(), [0.1, -0.4]).unwrap();
        assert_eq!(c.rho, [[0.0; 2]; 2]);
        assert_eq!(c.eta, None);
        assert_eq!(c.eta_note.as_deref(), Some("rank 0"));
        assert_eq!(c.omega, None);
    }

    #[test]
    fn skew_ricci_example() {
        let s = AffineSurface::with_symbols(&[(0, 0, 0, "x2"), (0, 1, 1, "x2")]).unwrap();
        for p in [[0.0, 0.0], [0.5, -0.9], [-0.2, 0.3]] {
            let c = affine_curvature(&s, p).unwrap();
            assert_eq!(c.rho, [[0.0, 1.0], [-1.0, 0.0]]);
            assert_eq!(c.rho_sym, [[0.0; 2]; 2]);
            assert_eq!(c.rho_sk, [[0.0, 1.0], [-1.0, 0.0]]);
            assert!(c.omega.is_none());
        }
    }

    #[test]
    fn omega_singular_point_is_named() {
        let s = AffineSurface::with_symbols(&[(0, 0, 1, "1 + x2^2")]).unwrap();
        match affine_curvature(&s, [0.2, 0.0]) {
            Err(Error::Singular(name)) => assert_eq!(name, "∂₂Γ₁₁²"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ricci_expr_matches_jets() {
        let s = AffineSurface::from_strs(["x1*x2", "sin(x2)", "0", "x1*x2", "0", "0"]).unwrap();
        let p = base_point([0.4, -0.3]);
        let rj = ricci_jets(&s.jets(&p, 2).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let e = crate::exprkit::eval(&s.ricci_expr(i, j), &p).unwrap();
                assert!((e - rj[i][j].value()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parallel_examples() {
        let sampler = Sampler::default().with_count(8);
        let any = AffineSurface::from_strs(["x1", "x2^2", "0", "x1", "sin(x1)", "0"]).unwrap();
        let id = EndoField::from_strs([["1", "0"], ["0", "1"]]).unwrap();
        assert_eq!(
            parallel_nilpotent_check(&any, &id, &sampler)
                .unwrap()
                .nabla_t,
            0.0
        );

        let flat =
            parallel_nilpotent_check(&AffineSurface::flat(), &EndoField::nilpotent(), &sampler)
                .unwrap();
        assert_eq!(flat.worst(), 0.0);
        assert_eq!(flat.kernel, Kernel::Direction([0.0, 1.0]));
        assert_eq!(flat.canonical, Some(0.0));

        let bad = AffineSurface::with_symbols(&[(0, 1, 0, "1")]).unwrap();
        let r = parallel_nilpotent_check(&bad, &EndoField::nilpotent(), &sampler).unwrap();
        assert_eq!(r.nabla_t_printed, 1.0);
        assert!(r.nabla_t >= 1.0);

        let zero =
            parallel_nilpotent_check(&AffineSurface::flat(), &EndoField::zero(), &sampler).unwrap();
        assert_eq!(zero.kernel, Kernel::Everything);
        assert_eq!(zero.nilpotency, 0.0);
    }

    #[test]
    fn agrs_examples() {
        let sampler = Sampler::default().with_count(16);
        let s = AffineSurface::with_symbols(&[(0, 0, 1, "x2")]).unwrap();
        let t = EndoField::nilpotent();
        let r = agrs_residual(&s, &parse("-u1^2").unwrap(), &t, &sampler).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.dh_ker, Some(0.0));

        let flat = agrs_residual(&AffineSurface::flat(), &Expr::zero(), &t, &sampler).unwrap();
        assert_eq!(flat.residual, 0.0);

        let r = agrs_residual(&s, &parse("x2").unwrap(), &t, &sampler).unwrap();
        let w = r.witness.unwrap();
        assert!((r.residual - (2.0 - w[1])).abs() < 1e-15);
        assert_eq!(r.dh_ker, Some(1.0));
    }

    #[test]
    fn fiber_dependence_rejected() {
        assert!(matches!(
            AffineSurface::from_strs(["xp1", "0", "0", "0", "0", "0"]),
            Err(Error::NotBaseField { .. })
        ));
    }
}
