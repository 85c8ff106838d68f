use proptest::prelude::*;
use riemext::exprkit::{
    eval, eval_jet, parse, partials_up_to, BinOp, Coord, Expr, Func, Num, Point4,
};

fn coord() -> impl Strategy<Value = Coord> {
    (0usize..4).prop_map(Coord::from_index)
}

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..20).prop_map(|n| Expr::Num(Num::int(n))),
        (1i64..9, 2i64..9).prop_filter_map("proper fraction", |(p, q)| {
            Num::rational(p, q)
                .filter(|r| matches!(r, Num::Rational { den, .. } if *den != 1))
                .map(Expr::Num)
        }),
        (1u32..1000).prop_map(|k| Expr::Num(Num::Decimal(k as f64 / 64.0 + 0.5))),
    ]
}

fn is_int_literal(e: &Expr) -> bool {
    matches!(e, Expr::Num(Num::Rational { den: 1, .. }))
}

/// Trees of the shape the parser produces.
fn parsed_shape() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![coord().prop_map(Expr::Var), literal()];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                // int/int would re-read as a rational literal
                let op = if op == BinOp::Div && is_int_literal(&a) && is_int_literal(&b) {
                    BinOp::Mul
                } else {
                    op
                };
                Expr::Bin(op, Box::new(a), Box::new(b))
            }),
            (inner.clone(), -3i64..5).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            (inner, 0usize..9).prop_map(|(a, k)| Expr::Call(Func::ALL[k], Box::new(a))),
        ]
    })
}

/// Smooth, well-conditioned functions on the unit box.
fn smooth() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        coord().prop_map(Expr::Var),
        (-3i64..4).prop_map(Expr::int),
        (1i64..5, 2i64..7).prop_map(|(p, q)| Expr::rational(p, q)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                Expr::div(a, Expr::add(Expr::int(2), Expr::call(Func::Sin, b)))
            }),
            (inner.clone(), 0i64..4).prop_map(|(a, n)| Expr::pow(Expr::call(Func::Tanh, a), n)),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.clone().prop_map(|a| Expr::call(
                Func::Log,
                Expr::add(Expr::int(2), Expr::call(Func::Cos, a))
            )),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Sqrt, Expr::add(Expr::one(), Expr::pow(a, 2)))),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Sinh, Expr::call(Func::Sin, a))),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Cosh, Expr::call(Func::Cos, a))),
            inner.prop_map(|a| Expr::call(
                Func::Tan,
                Expr::mul(Expr::rational(1, 2), Expr::call(Func::Sin, a))
            )),
        ]
    })
}

fn point() -> impl Strategy<Value = Point4> {
    prop::array::uniform4(-1.0f64..1.0)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(e in parsed_shape()) {
        let text = e.to_string();
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "text was {}", text);
    }

    #[test]
    fn parse_print_parse_is_stable(e in parsed_shape()) {
        let once = parse(&e.to_string()).unwrap();
        let twice = parse(&once.to_string()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn first_partials_match_central_differences(e in smooth(), p in point()) {
        let j = partials_up_to(&e, &p, 1).unwrap();
        let h = 1e-5;
        for c in Coord::ALL {
            let (mut up, mut dn) = (p, p);
            up[c.index()] += h;
            dn[c.index()] -= h;
            let fd = (eval(&e, &up).unwrap() - eval(&e, &dn).unwrap()) / (2.0 * h);
            let exact = j.along(&[c]);
            prop_assert!(
                (exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()),
                "{} at {:?} along {:?}: jet {} fd {}", e, p, c, exact, fd
            );
        }
    }

    #[test]
    fn higher_partials_match_symbolic_derivatives(
        e in smooth(),
        p in point(),
        path in prop::collection::vec(coord(), 1..=4),
    ) {
        let j = partials_up_to(&e, &p, 4).unwrap();
        let mut d = e.clone();
        for &c in &path {
            d = d.diff(c);
        }
        let symbolic = eval(&d, &p).unwrap();
        let jet = j.along(&path);
        prop_assert!(close(jet, symbolic, 1e-9), "{} along {:?}: {} vs {}", e, path, jet, symbolic);
    }

    #[test]
    fn restriction_equals_lower_order_jet(e in smooth(), p in point(), k in 1usize..=4) {
        let hi = eval_jet(&e, &p, k).unwrap().truncate(k - 1);
        let lo = eval_jet(&e, &p, k - 1).unwrap();
        prop_assert_eq!(hi.coeffs(), lo.coeffs());
    }

    #[test]
    fn order_zero_is_plain_value(e in smooth(), p in point()) {
        let j = eval_jet(&e, &p, 4).unwrap();
        prop_assert!(close(j.value(), eval(&e, &p).unwrap(), 1e-15));
    }

    #[test]
    fn mixed_partials_commute_by_construction(e in smooth(), p in point()) {
        let j = partials_up_to(&e, &p, 2).unwrap();
        for a in Coord::ALL {
            for b in Coord::ALL {
                prop_assert_eq!(j.along(&[a, b]), j.along(&[b, a]));
            }
        }
    }
}

#[test]
fn whitespace_is_insignificant() {
    assert_eq!(
        parse("x1^2+sin( x2 )").unwrap(),
        parse(" x1 ^ 2 + sin(x2)").unwrap()
    );
}
