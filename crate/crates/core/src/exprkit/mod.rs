//! Coordinate-expression language: parsing, printing, exact derivatives and
//! seeded sampling.

mod ast;
mod eval;
pub mod jet;
mod parser;
mod sample;

pub use ast::{BinOp, Coord, Expr, Func, Num};
pub use eval::{eval, eval_jet, partials_up_to, EvalError, Partials, Point4};
pub use jet::{Jet, MultiIndex, MAX_ORDER};
pub use parser::{parse, ParseError};
pub use sample::{
    zero_test, Exclusion, SampleError, Sampler, ZeroVerdict, DEFAULT_ATOL, DEFAULT_COUNT,
    DEFAULT_SEED,
};
