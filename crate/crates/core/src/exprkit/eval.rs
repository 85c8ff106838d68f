use thiserror::Error;

use super::ast::{BinOp, Coord, Expr, Func};
use super::jet::{Jet, MultiIndex, MAX_ORDER};

pub type Point4 = [f64; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    Order(usize),
}

/// Evaluates `e` as a Taylor jet of the given order around `p`.
pub fn eval_jet(e: &Expr, p: &Point4, order: usize) -> Result<Jet, EvalError> {
    if order > MAX_ORDER {
        return Err(EvalError::Order(order));
    }
    let j = walk(e, p, order)?;
    if !j.is_finite() {
        return Err(EvalError::Domain(format!("non-finite value in `{e}`")));
    }
    Ok(j)
}

/// Plain value of `e` at `p`.
pub fn eval(e: &Expr, p: &Point4) -> Result<f64, EvalError> {
    eval_jet(e, p, 0).map(|j| j.value())
}

fn walk(e: &Expr, p: &Point4, order: usize) -> Result<Jet, EvalError> {
    Ok(match e {
        Expr::Num(n) => Jet::constant(n.value(), order),
        Expr::Var(c) => Jet::variable(c.index(), p[c.index()], order),
        Expr::Neg(a) => -walk(a, p, order)?,
        Expr::Bin(op, a, b) => {
            let (x, y) = (walk(a, p, order)?, walk(b, p, order)?);
            match op {
                BinOp::Add => &x + &y,
                BinOp::Sub => &x - &y,
                BinOp::Mul => &x * &y,
                BinOp::Div => {
                    if y.value() == 0.0 {
                        return Err(EvalError::Domain(format!("division by zero in `{e}`")));
                    }
                    x.div_jet(&y)
                }
            }
        }
        Expr::Pow(a, n) => {
            let x = walk(a, p, order)?;
            if *n < 0 && x.value() == 0.0 {
                return Err(EvalError::Domain(format!(
                    "negative power of zero in `{e}`"
                )));
            }
            x.powi(*n)
        }
        Expr::Call(f, a) => {
            let x = walk(a, p, order)?;
            let v = x.value();
            if !v.is_finite() {
                return Err(EvalError::Domain(format!("non-finite argument in `{e}`")));
            }
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    if v.cos() == 0.0 {
                        return Err(EvalError::Domain(format!("tan pole in `{e}`")));
                    }
                    x.tan()
                }
                Func::Exp => x.exp(),
                Func::Log => {
                    if v <= 0.0 {
                        return Err(EvalError::Domain(format!(
                            "log of non-positive value {v} in `{e}`"
                        )));
                    }
                    x.ln()
                }
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Sqrt => {
                    if v < 0.0 || (v == 0.0 && order > 0) {
                        return Err(EvalError::Domain(format!("sqrt of {v} in `{e}`")));
                    }
                    x.sqrt()
                }
            }
        }
    })
}

/// All partial derivatives up to order `k` of an expression at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Partials {
    pub point: Point4,
    pub jet: Jet,
}

impl Partials {
    pub fn order(&self) -> usize {
        self.jet.order()
    }

    pub fn value(&self) -> f64 {
        self.jet.value()
    }

    /// `d^a f(p)`; panics if `|a|` exceeds the order.
    pub fn get(&self, a: MultiIndex) -> f64 {
        self.jet.partial(&a)
    }

    /// Partial along a sequence of coordinates, e.g. `[X1, X1, X2]`.
    pub fn along(&self, coords: &[Coord]) -> f64 {
        let mut a = [0u8; 4];
        for c in coords {
            a[c.index()] += 1;
        }
        self.get(a)
    }
}

pub fn partials_up_to(e: &Expr, p: &Point4, k: usize) -> Result<Partials, EvalError> {
    Ok(Partials {
        point: *p,
        jet: eval_jet(e, p, k)?,
    })
}
