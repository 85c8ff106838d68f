use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::ast::Expr;
use super::eval::{eval, Point4};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNT: usize = 64;
pub const DEFAULT_ATOL: f64 = 1e-9;

/// Keeps a point only when `|expr| >= min_abs` there.
#[derive(Clone, Debug, PartialEq)]
pub struct Exclusion {
    pub expr: Expr,
    pub min_abs: f64,
}

impl Exclusion {
    pub fn admits(&self, p: &Point4) -> bool {
        eval(&self.expr, p).is_ok_and(|v| v.abs() >= self.min_abs)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("exclusions rejected every candidate point ({attempts} tried)")]
    Exhausted { attempts: usize },
    #[error("every sample point was outside the expression domain ({skipped} skipped)")]
    AllSkipped { skipped: usize },
}

/// Seeded uniform sampler over a box in the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub bounds: [[f64; 2]; 4],
    pub exclusions: Vec<Exclusion>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            seed: DEFAULT_SEED,
            count: DEFAULT_COUNT,
            bounds: [[-1.0, 1.0]; 4],
            exclusions: Vec::new(),
        }
    }
}

impl Sampler {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_exclusion(mut self, expr: Expr, min_abs: f64) -> Self {
        self.exclusions.push(Exclusion { expr, min_abs });
        self
    }

    /// Draws `count` admissible points; rejected candidates are replaced.
    pub fn points(&self) -> Result<Vec<Point4>, SampleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let budget = self.count.saturating_mul(1000).max(1000);
        let mut out = Vec::with_capacity(self.count);
        let mut attempts = 0;
        while out.len() < self.count {
            if attempts >= budget {
                return Err(SampleError::Exhausted { attempts });
            }
            attempts += 1;
            let mut p = [0.0; 4];
            for (x, [lo, hi]) in p.iter_mut().zip(self.bounds) {
                *x = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            }
            if self.exclusions.iter().all(|e| e.admits(&p)) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    Zero {
        checked: usize,
        skipped: usize,
        max_abs: f64,
    },
    Nonzero {
        witness: Point4,
        value: f64,
    },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero { .. })
    }
}

/// Probabilistic identity test: zero iff `|e| <= atol` at every sample.
pub fn zero_test(e: &Expr, sampler: &Sampler, atol: f64) -> Result<ZeroVerdict, SampleError> {
    let mut skipped = 0;
    let mut checked = 0;
    let mut max_abs: f64 = 0.0;
    for p in sampler.points()? {
        match eval(e, &p) {
            Ok(v) if v.abs() <= atol => {
                checked += 1;
                max_abs = max_abs.max(v.abs());
            }
            Ok(v) => {
                return Ok(ZeroVerdict::Nonzero {
                    witness: p,
                    value: v,
                })
            }
            Err(_) => skipped += 1,
        }
    }
    if checked == 0 {
        return Err(SampleError::AllSkipped { skipped });
    }
    Ok(ZeroVerdict::Zero {
        checked,
        skipped,
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse;

    fn zt(s: &str) -> ZeroVerdict {
        zero_test(&parse(s).unwrap(), &Sampler::default(), DEFAULT_ATOL).unwrap()
    }

    #[test]
    fn identities_are_zero() {
        assert!(zt("x1^2 - x1*x1").is_zero());
        assert!(zt("sin(x1)^2 + cos(x1)^2 - 1").is_zero());
    }

    #[test]
    fn non_identity_has_witness_in_box() {
        match zt("x1*x2 - 1") {
            ZeroVerdict::Nonzero { witness, value } => {
                assert!(witness.iter().all(|x| (-1.0..=1.0).contains(x)));
                assert!((value - (witness[0] * witness[1] - 1.0)).abs() < 1e-15);
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn domain_violations_are_skipped() {
        match zt("log(x1) - log(x1)") {
            ZeroVerdict::Zero {
                checked, skipped, ..
            } => {
                assert!(skipped > 0);
                assert_eq!(checked + skipped, DEFAULT_COUNT);
            }
            other => panic!("{other:?}"),
        }
        let s = Sampler::default().with_exclusion(parse("x1").unwrap(), 5.0);
        assert!(matches!(s.points(), Err(SampleError::Exhausted { .. })));
        let all_bad = Sampler {
            bounds: [[-2.0, -1.0]; 4],
            ..Sampler::default()
        };
        assert!(matches!(
            zero_test(&parse("log(x1)").unwrap(), &all_bad, 1e-9),
            Err(SampleError::AllSkipped { .. })
        ));
    }

    #[test]
    fn exclusions_and_determinism() {
        let s = Sampler::default().with_exclusion(parse("x1").unwrap(), 0.1);
        let a = s.points().unwrap();
        assert_eq!(a, s.points().unwrap());
        assert_eq!(a.len(), DEFAULT_COUNT);
        assert!(a.iter().all(|p| p[0].abs() >= 0.1));
        assert_ne!(a, s.clone().with_seed(7).points().unwrap());
    }
}
