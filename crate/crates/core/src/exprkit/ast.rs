use std::fmt;

/// One of the four Walker chart coordinates `(x1, x2, xp1, xp2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X1,
    X2,
    Xp1,
    Xp2,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::X1, Coord::X2, Coord::Xp1, Coord::Xp2];

    pub fn index(self) -> usize {
        match self {
            Coord::X1 => 0,
            Coord::X2 => 1,
            Coord::Xp1 => 2,
            Coord::Xp2 => 3,
        }
    }

    pub fn from_index(i: usize) -> Coord {
        Coord::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Coord::X1 => "x1",
            Coord::X2 => "x2",
            Coord::Xp1 => "xp1",
            Coord::Xp2 => "xp2",
        }
    }

    /// Resolves a source identifier, accepting the `u*` aliases.
    pub fn from_name(name: &str) -> Option<Coord> {
        match name {
            "x1" | "u1" => Some(Coord::X1),
            "x2" | "u2" => Some(Coord::X2),
            "xp1" | "up1" => Some(Coord::Xp1),
            "xp2" | "up2" => Some(Coord::Xp2),
            _ => None,
        }
    }

    pub fn is_fiber(self) -> bool {
        matches!(self, Coord::Xp1 | Coord::Xp2)
    }
}

/// Numeric literal. Rationals are kept reduced with a positive denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Rational { num: i64, den: i64 },
    Decimal(f64),
}

impl Num {
    pub fn int(n: i64) -> Num {
        Num::Rational { num: n, den: 1 }
    }

    pub fn rational(num: i64, den: i64) -> Option<Num> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let g = if g == 0 { 1 } else { g };
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg()?;
            d = d.checked_neg()?;
        }
        Some(Num::Rational { num: n, den: d })
    }

    pub fn value(self) -> f64 {
        match self {
            Num::Rational { num, den } => num as f64 / den as f64,
            Num::Decimal(v) => v,
        }
    }

    pub fn is_zero(self) -> bool {
        self.value() == 0.0
    }

    pub fn is_one(self) -> bool {
        self.value() == 1.0
    }

    fn checked_add(self, other: Num) -> Option<Num> {
        match (self, other) {
            (Num::Rational { num: a, den: b }, Num::Rational { num: c, den: d }) => {
                let n = a.checked_mul(d)?.checked_add(c.checked_mul(b)?)?;
                Num::rational(n, b.checked_mul(d)?)
            }
            _ => None,
        }
    }

    fn checked_mul(self, other: Num) -> Option<Num> {
        match (self, other) {
            (Num::Rational { num: a, den: b }, Num::Rational { num: c, den: d }) => {
                Num::rational(a.checked_mul(c)?, b.checked_mul(d)?)
            }
            _ => None,
        }
    }

    fn checked_neg(self) -> Option<Num> {
        match self {
            Num::Rational { num, den } => Some(Num::Rational {
                num: num.checked_neg()?,
                den,
            }),
            Num::Decimal(v) => Some(Num::Decimal(-v)),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Closed-form scalar expression over the four chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Num),
    Var(Coord),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Integer powers only.
    Pow(Box<Expr>, i64),
    Call(Func, Box<Expr>),
}

// Smart constructors fold literal zeros and ones so that derived expressions
// (symbolic derivatives, metric assembly) stay small.
impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn zero() -> Expr {
        Expr::Num(Num::int(0))
    }

    pub fn one() -> Expr {
        Expr::Num(Num::int(1))
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(Num::int(n))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Num(Num::rational(num, den).expect("nonzero denominator"))
    }

    pub fn var(c: Coord) -> Expr {
        Expr::Var(c)
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            Expr::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(Num::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(Num::is_one)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(n) => match n.checked_neg() {
                Some(m) => Expr::Num(m),
                None => Expr::Neg(Box::new(Expr::Num(n))),
            },
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Some(s) = x.checked_add(y) {
                return Expr::Num(s);
            }
        }
        if let Expr::Neg(inner) = b {
            return Expr::Bin(BinOp::Sub, Box::new(a), inner);
        }
        Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Some(s) = y.checked_neg().and_then(|ny| x.checked_add(ny)) {
                return Expr::Num(s);
            }
        }
        Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Some(p) = x.checked_mul(y) {
                return Expr::Num(p);
            }
        }
        if a.as_num().is_some_and(|n| n.value() == -1.0) {
            return Expr::neg(b);
        }
        if b.as_num().is_some_and(|n| n.value() == -1.0) {
            return Expr::neg(a);
        }
        Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() && !b.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        if let (Some(Num::Rational { num: p, den: q }), Some(Num::Rational { num: r, den: s })) =
            (a.as_num(), b.as_num())
        {
            if r != 0 {
                if let Some(n) = p
                    .checked_mul(s)
                    .zip(q.checked_mul(r))
                    .and_then(|(n, d)| Num::rational(n, d))
                {
                    return Expr::Num(n);
                }
            }
        }
        Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, n: i64) -> Expr {
        match n {
            0 => Expr::one(),
            1 => a,
            _ if a.is_one() => Expr::one(),
            _ if a.is_zero() && n > 0 => Expr::zero(),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// True when the expression mentions coordinate `c`.
    pub fn depends_on(&self, c: Coord) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == c,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(c),
            Expr::Bin(_, a, b) => a.depends_on(c) || b.depends_on(c),
        }
    }

    pub fn is_constant(&self) -> bool {
        Coord::ALL.iter().all(|&c| !self.depends_on(c))
    }

    /// Symbolic partial derivative with respect to `c`.
    pub fn diff(&self, c: Coord) -> Expr {
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Var(v) => {
                if *v == c {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.diff(c)),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.diff(c), b.diff(c));
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => {
                        Expr::add(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db))
                    }
                    BinOp::Div => {
                        if db.is_zero() {
                            Expr::div(da, (**b).clone())
                        } else {
                            Expr::div(
                                Expr::sub(
                                    Expr::mul(da, (**b).clone()),
                                    Expr::mul((**a).clone(), db),
                                ),
                                Expr::pow((**b).clone(), 2),
                            )
                        }
                    }
                }
            }
            Expr::Pow(a, n) => {
                let da = a.diff(c);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::int(*n), Expr::pow((**a).clone(), n - 1)),
                    da,
                )
            }
            Expr::Call(f, a) => {
                let da = a.diff(c);
                if da.is_zero() {
                    return Expr::zero();
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Tan => Expr::add(Expr::one(), Expr::pow(Expr::call(Func::Tan, inner), 2)),
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Log => return Expr::div(da, inner),
                    Func::Sinh => Expr::call(Func::Cosh, inner),
                    Func::Cosh => Expr::call(Func::Sinh, inner),
                    Func::Tanh => {
                        Expr::sub(Expr::one(), Expr::pow(Expr::call(Func::Tanh, inner), 2))
                    }
                    Func::Sqrt => {
                        return Expr::div(
                            da,
                            Expr::mul(Expr::int(2), Expr::call(Func::Sqrt, inner)),
                        )
                    }
                };
                Expr::mul(outer, da)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(Num::Rational { num, den }) => {
                if *den != 1 {
                    2
                } else if *num < 0 {
                    3
                } else {
                    5
                }
            }
            Expr::Num(Num::Decimal(v)) => {
                if v.is_sign_negative() {
                    3
                } else {
                    5
                }
            }
            Expr::Var(_) | Expr::Call(..) => 5,
            Expr::Pow(..) => 4,
            Expr::Neg(_) => 3,
            Expr::Bin(op, ..) => op.precedence(),
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(Num::Rational { num, den }) => {
                if *den == 1 {
                    write!(f, "{num}")
                } else {
                    write!(f, "{num}/{den}")
                }
            }
            Expr::Num(Num::Decimal(v)) => write!(f, "{v:?}"),
            Expr::Var(c) => f.write_str(c.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_child(f, 3)
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                a.fmt_child(f, p)?;
                let sep = match op {
                    BinOp::Add | BinOp::Sub => format!(" {} ", op.symbol()),
                    _ => op.symbol().to_string(),
                };
                f.write_str(&sep)?;
                // left-associative: right operand of equal precedence needs parens
                b.fmt_child(f, p + 1)
            }
            Expr::Pow(a, n) => {
                a.fmt_child(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_fold_identities() {
        let x = Expr::var(Coord::X1);
        assert_eq!(Expr::mul(Expr::one(), x.clone()), x);
        assert_eq!(Expr::add(Expr::zero(), x.clone()), x);
        assert!(Expr::mul(Expr::zero(), x.clone()).is_zero());
        assert_eq!(
            Expr::add(Expr::rational(1, 2), Expr::rational(1, 3)),
            Expr::rational(5, 6)
        );
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
    }

    #[test]
    fn symbolic_derivative_of_product() {
        let e = Expr::mul(Expr::var(Coord::X1), Expr::var(Coord::X2));
        assert_eq!(e.diff(Coord::X1), Expr::var(Coord::X2));
        assert!(e.diff(Coord::Xp1).is_zero());
    }

    #[test]
    fn printing_parenthesizes_by_precedence() {
        let x = Expr::var(Coord::X1);
        let y = Expr::var(Coord::X2);
        let e = Expr::Bin(
            BinOp::Sub,
            Box::new(x.clone()),
            Box::new(Expr::Bin(
                BinOp::Sub,
                Box::new(y.clone()),
                Box::new(x.clone()),
            )),
        );
        assert_eq!(e.to_string(), "x1 - (x2 - x1)");
        let p = Expr::Pow(Box::new(Expr::Neg(Box::new(x))), 2);
        assert_eq!(p.to_string(), "(-x1)^2");
    }
}
