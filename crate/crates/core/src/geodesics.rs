//! Geodesic integration with an adaptive Dormand-Prince 5(4) pair.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{christoffel_jets, MetricJets, DIM};
use crate::error::{Error, Result};
use crate::exprkit::Point4;
use crate::walker::WalkerMetric;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_T_MAX: f64 = 50.0;
pub const MIN_STEP: f64 = 1e-14;
pub const BLOWUP: f64 = 1e12;
const MAX_STEPS: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Point4,
    pub v: [f64; 4],
}

impl GeodesicState {
    pub fn new(x: Point4, v: [f64; 4]) -> Self {
        GeodesicState { t: 0.0, x, v }
    }

    fn packed(&self) -> [f64; 8] {
        let mut y = [0.0; 8];
        y[..4].copy_from_slice(&self.x);
        y[4..].copy_from_slice(&self.v);
        y
    }

    fn unpack(t: f64, y: &[f64; 8]) -> Self {
        GeodesicState {
            t,
            x: [y[0], y[1], y[2], y[3]],
            v: [y[4], y[5], y[6], y[7]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub state: GeodesicState,
    /// g(v, v).
    pub energy: f64,
    /// sum |g_ij v^i v^j|, the magnitude the energy is computed from.
    pub energy_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicReport {
    pub t_final: f64,
    pub reached: bool,
    /// First time |state| exceeded the blowup threshold.
    pub blowup_at: Option<f64>,
    pub energy0: f64,
    /// max |E(t) - E(0)|.
    pub max_drift: f64,
    /// max |E(t) - E(0)| / energy_scale(t).
    pub max_relative_drift: f64,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub report: GeodesicReport,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        &self
            .points
            .last()
            .expect("trajectory has its initial point")
            .state
    }

    /// Columns t, x1, x2, xp1, xp2, v1..v4, E.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,x1,x2,xp1,xp2,v1,v2,v3,v4,E")?;
        for p in &self.points {
            let s = &p.state;
            write!(w, "{:.16e}", s.t)?;
            for v in s.x.iter().chain(&s.v) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w, ",{:.16e}", p.energy)?;
        }
        Ok(())
    }
}

/// Energy g(v, v) and the magnitude of its terms.
pub fn energy(g: &WalkerMetric, x: &Point4, v: &[f64; 4]) -> Result<(f64, f64)> {
    let m = MetricJets::walker(g, x, 0)?;
    let gv = m.g_values();
    let (mut e, mut scale) = (0.0, 0.0);
    for i in 0..DIM {
        for j in 0..DIM {
            let term = gv[i][j] * v[i] * v[j];
            e += term;
            scale += term.abs();
        }
    }
    Ok((e, scale))
}

fn rhs(g: &WalkerMetric, y: &[f64; 8]) -> Result<[f64; 8]> {
    let x = [y[0], y[1], y[2], y[3]];
    let m = MetricJets::walker(g, &x, 1)?;
    let gamma = christoffel_jets(&m)?;
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&y[4..]);
    for k in 0..DIM {
        let mut a = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                a -= gamma.at(&[k, i, j]).value() * y[4 + i] * y[4 + j];
            }
        }
        out[4 + k] = a;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite geodesic acceleration at {x:?}"
        )));
    }
    Ok(out)
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One trial step: returns the 5th-order solution, its error estimate and
/// the derivative at the new point (first-same-as-last).
fn dp_step(
    g: &WalkerMetric,
    y: &[f64; 8],
    k0: &[f64; 8],
    h: f64,
) -> Result<([f64; 8], f64, [f64; 8])> {
    let mut k = [[0.0; 8]; 7];
    k[0] = *k0;
    for s in 1..7 {
        let mut ys = *y;
        for (r, kr) in k.iter().enumerate().take(s) {
            if A[s][r] != 0.0 {
                for i in 0..8 {
                    ys[i] += h * A[s][r] * kr[i];
                }
            }
        }
        k[s] = rhs(g, &ys)?;
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for i in 0..8 {
        let (mut d5, mut d4) = (0.0, 0.0);
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let sc = 1.0 + y[i].abs().max(y5[i].abs());
        err = err.max((h * (d5 - d4)).abs() / sc);
    }
    Ok((y5, err, k[6]))
}

/// Integrates the geodesic equation from `init` until `t_end` (either
/// direction) with local error per step at most `tol` (mixed abs/rel).
pub fn integrate_geodesic(
    g: &WalkerMetric,
    init: GeodesicState,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let dir = if t_end >= init.t { 1.0 } else { -1.0 };
    let span = (t_end - init.t).abs();
    let mut y = init.packed();
    let mut t = init.t;
    let (e0, s0) = energy(g, &init.x, &init.v)?;
    let mut points = vec![TrajectoryPoint {
        state: init,
        energy: e0,
        energy_scale: s0,
    }];
    let mut report = GeodesicReport {
        t_final: t,
        reached: span == 0.0,
        blowup_at: None,
        energy0: e0,
        max_drift: 0.0,
        max_relative_drift: 0.0,
        accepted: 0,
        rejected: 0,
    };
    let mut k0 = rhs(g, &y)?;
    let mut h = (0.01 * span).clamp(MIN_STEP, 0.1).min(span.max(MIN_STEP));
    while (t_end - t) * dir > 0.0 {
        if report.accepted + report.rejected >= MAX_STEPS {
            return Err(Error::StepUnderflow { t, state: y });
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let (y5, err, k_new) = match dp_step(g, &y, &k0, dir * step) {
            Ok(r) => r,
            // stage points can leave the domain; retry smaller
            Err(Error::Domain(_)) | Err(Error::Eval(_)) => (y, f64::INFINITY, k0),
            Err(e) => return Err(e),
        };
        if err <= tol && y5.iter().all(|v| v.is_finite()) {
            t = if last { t_end } else { t + dir * step };
            y = y5;
            k0 = k_new;
            report.accepted += 1;
            let s = GeodesicState::unpack(t, &y);
            let (e, sc) = energy(g, &s.x, &s.v)?;
            let drift = (e - e0).abs();
            report.max_drift = report.max_drift.max(drift);
            report.max_relative_drift = report.max_relative_drift.max(drift / sc.max(s0).max(1.0));
            if report.blowup_at.is_none() && y.iter().any(|v| v.abs() > BLOWUP) {
                report.blowup_at = Some(t);
            }
            points.push(TrajectoryPoint {
                state: s,
                energy: e,
                energy_scale: sc,
            });
        } else {
            report.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        } else {
            0.1
        };
        if !(last && err <= tol) {
            h = step * factor;
            if h < MIN_STEP {
                return Err(Error::StepUnderflow { t, state: y });
            }
        }
    }
    report.t_final = t;
    report.reached = true;
    Ok(Trajectory { points, report })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Reached { blowup_at: Option<f64> },
    Underflow { t: f64 },
    Failed { message: String },
}

impl Outcome {
    pub fn reached(&self) -> bool {
        matches!(self, Outcome::Reached { .. })
    }

    pub fn blowup(&self) -> bool {
        matches!(self, Outcome::Reached { blowup_at: Some(_) })
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeedReport {
    pub init: [f64; 8],
    pub forward: Outcome,
    pub backward: Outcome,
    /// Largest |E(t) - E(0)| over both directions, when both were integrated.
    pub max_drift: f64,
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub seed: u64,
    pub seeds: usize,
    pub t_max: f64,
    pub tol: f64,
    /// Initial positions and velocities drawn from [-radius, radius].
    pub radius: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            seed: crate::exprkit::DEFAULT_SEED,
            seeds: 16,
            t_max: DEFAULT_T_MAX,
            tol: DEFAULT_TOL,
            radius: 1.0,
        }
    }
}

fn outcome(r: Result<Trajectory>) -> (Outcome, f64, f64) {
    match r {
        Ok(tr) => (
            Outcome::Reached {
                blowup_at: tr.report.blowup_at,
            },
            tr.report.max_drift,
            tr.report.max_relative_drift,
        ),
        Err(Error::StepUnderflow { t, .. }) => (Outcome::Underflow { t }, 0.0, 0.0),
        Err(e) => (
            Outcome::Failed {
                message: e.to_string(),
            },
            0.0,
            0.0,
        ),
    }
}

/// Integrates random seeds to +t_max and -t_max. Failures are recorded per seed.
pub fn completeness_probe(g: &WalkerMetric, cfg: &ProbeConfig) -> Vec<SeedReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inits: Vec<[f64; 8]> = (0..cfg.seeds)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-cfg.radius..=cfg.radius)))
        .collect();
    inits
        .into_iter()
        .map(|y| {
            let s = GeodesicState::unpack(0.0, &y);
            let (forward, d1, r1) = outcome(integrate_geodesic(g, s, cfg.t_max, cfg.tol));
            let (backward, d2, r2) = outcome(integrate_geodesic(g, s, -cfg.t_max, cfg.tol));
            SeedReport {
                init: y,
                forward,
                backward,
                max_drift: d1.max(d2),
                max_relative_drift: r1.max(r2),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::AffineSurface;
    use crate::walker::build_metric;

    #[test]
    fn flat_extension_gives_straight_lines() {
        let g = build_metric(&AffineSurface::flat(), None, None);
        let tr = integrate_geodesic(
            &g,
            GeodesicState::new([0.1, 0.2, 0.3, 0.4], [1.0, -0.5, 0.25, 2.0]),
            3.0,
            1e-10,
        )
        .unwrap();
        let s = tr.last();
        assert!((s.x[0] - 3.1).abs() < 1e-12);
        assert!((s.x[3] - 6.4).abs() < 1e-12);
        assert_eq!(tr.report.max_drift, 0.0);
    }

    #[test]
    fn rejects_nonpositive_tol() {
        let g = build_metric(&AffineSurface::flat(), None, None);
        let r = integrate_geodesic(&g, GeodesicState::new([0.0; 4], [0.0; 4]), 1.0, 0.0);
        assert!(matches!(r, Err(Error::Input(_))));
    }
}
