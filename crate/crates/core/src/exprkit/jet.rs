//! Truncated Taylor polynomials in four variables up to total degree four.
//!
//! Coefficients are stored as `c_a = d^a f / a!` in graded order, so the
//! first `SIZE[k]` slots hold the order-`k` truncation.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

pub const MAX_ORDER: usize = 4;
pub const NVARS: usize = 4;
pub const NCOEF: usize = 70;
/// Number of monomials of total degree at most k.
pub const SIZE: [usize; MAX_ORDER + 1] = [1, 5, 15, 35, 70];

pub type MultiIndex = [u8; NVARS];

struct Tables {
    monos: Vec<MultiIndex>,
    lookup: [u8; 625],
    /// (out, left, right) sorted by `out`.
    triples: Vec<(u8, u8, u8)>,
    /// Number of triples whose `out` lies below `SIZE[k]`.
    triple_end: [usize; MAX_ORDER + 1],
    /// For each variable and each monomial of degree < 4: (index of a + e_i, a_i + 1).
    shift: [[(u8, u8); 35]; NVARS],
}

fn code(a: &MultiIndex) -> usize {
    ((a[0] as usize * 5 + a[1] as usize) * 5 + a[2] as usize) * 5 + a[3] as usize
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos = Vec::with_capacity(NCOEF);
        for d in 0..=MAX_ORDER as u8 {
            for a in 0..=d {
                for b in 0..=d - a {
                    for c in 0..=d - a - b {
                        monos.push([a, b, c, d - a - b - c]);
                    }
                }
            }
        }
        // reverse-lex inside each degree: x1 before x2 before xp1 ...
        let mut start = 0;
        for &n in &SIZE {
            monos[start..n].sort_by(|p, q| q.cmp(p));
            start = n;
        }
        debug_assert_eq!(monos.len(), NCOEF);
        let mut lookup = [u8::MAX; 625];
        for (i, m) in monos.iter().enumerate() {
            lookup[code(m)] = i as u8;
        }
        let mut triples = Vec::new();
        for (o, m) in monos.iter().enumerate() {
            for (l, a) in monos.iter().enumerate() {
                if (0..NVARS).all(|v| a[v] <= m[v]) {
                    let b = [m[0] - a[0], m[1] - a[1], m[2] - a[2], m[3] - a[3]];
                    triples.push((o as u8, l as u8, lookup[code(&b)]));
                }
            }
        }
        let mut triple_end = [0; MAX_ORDER + 1];
        for (k, end) in triple_end.iter_mut().enumerate() {
            *end = triples.iter().filter(|t| (t.0 as usize) < SIZE[k]).count();
        }
        let mut shift = [[(0u8, 0u8); 35]; NVARS];
        for (v, row) in shift.iter_mut().enumerate() {
            for (i, m) in monos.iter().take(35).enumerate() {
                let mut up = *m;
                up[v] += 1;
                row[i] = (lookup[code(&up)], up[v]);
            }
        }
        Tables {
            monos,
            lookup,
            triples,
            triple_end,
            shift,
        }
    })
}

/// Position of a multi-index in the coefficient array, if its degree is at most 4.
pub fn mono_index(a: &MultiIndex) -> Option<usize> {
    if a.iter().map(|&x| x as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    let i = tables().lookup[code(a)];
    (i != u8::MAX).then_some(i as usize)
}

pub fn monomial(i: usize) -> MultiIndex {
    tables().monos[i]
}

fn factorial_weight(a: &MultiIndex) -> f64 {
    const F: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
    a.iter().map(|&x| F[x as usize]).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; NCOEF],
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Jet {
        assert!(order <= MAX_ORDER);
        let mut c = [0.0; NCOEF];
        c[0] = v;
        Jet { order, c }
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(var: usize, value: f64, order: usize) -> Jet {
        let mut j = Jet::constant(value, order);
        if order > 0 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn len(&self) -> usize {
        SIZE[self.order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len()]
    }

    /// Partial derivative `d^a f` at the expansion point.
    pub fn partial(&self, a: &MultiIndex) -> f64 {
        match mono_index(a) {
            Some(i) if i < self.len() => self.c[i] * factorial_weight(a),
            _ => panic!("multi-index {a:?} exceeds jet order {}", self.order),
        }
    }

    /// First partial along one coordinate.
    pub fn d1(&self, var: usize) -> f64 {
        assert!(self.order >= 1);
        self.c[1 + var]
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let mut c = [0.0; NCOEF];
        c[..SIZE[order]].copy_from_slice(&self.c[..SIZE[order]]);
        Jet { order, c }
    }

    /// Jet of the partial derivative along `var`; its order drops by one.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let t = tables();
        let order = self.order - 1;
        let mut c = [0.0; NCOEF];
        for (i, slot) in c.iter_mut().enumerate().take(SIZE[order]) {
            let (j, m) = t.shift[var][i];
            *slot = m as f64 * self.c[j as usize];
        }
        Jet { order, c }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for v in out.c[..self.len()].iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(other.order);
        let mut c = [0.0; NCOEF];
        for (i, slot) in c.iter_mut().enumerate().take(SIZE[order]) {
            *slot = f(self.c[i], other.c[i]);
        }
        Jet { order, c }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let t = tables();
        let mut c = [0.0; NCOEF];
        for &(o, l, r) in &t.triples[..t.triple_end[order]] {
            c[o as usize] += self.c[l as usize] * other.c[r as usize];
        }
        Jet { order, c }
    }

    /// `self += a * b`, truncated to the order of `self`.
    pub fn fma_assign(&mut self, a: &Jet, b: &Jet) {
        let order = self.order.min(a.order).min(b.order);
        self.order = order;
        for v in self.c[SIZE[order]..].iter_mut() {
            *v = 0.0;
        }
        if a.is_zero() || b.is_zero() {
            return;
        }
        let t = tables();
        for &(o, l, r) in &t.triples[..t.triple_end[order]] {
            self.c[o as usize] += a.c[l as usize] * b.c[r as usize];
        }
    }

    /// `self -= a * b`, truncated to the order of `self`.
    pub fn fnma_assign(&mut self, a: &Jet, b: &Jet) {
        let order = self.order.min(a.order).min(b.order);
        self.order = order;
        for v in self.c[SIZE[order]..].iter_mut() {
            *v = 0.0;
        }
        if a.is_zero() || b.is_zero() {
            return;
        }
        let t = tables();
        for &(o, l, r) in &t.triples[..t.triple_end[order]] {
            self.c[o as usize] -= a.c[l as usize] * b.c[r as usize];
        }
    }

    /// `self += s * a`, truncated to the order of `self`.
    pub fn axpy(&mut self, s: f64, a: &Jet) {
        let order = self.order.min(a.order);
        self.order = order;
        for v in self.c[SIZE[order]..].iter_mut() {
            *v = 0.0;
        }
        if s == 0.0 {
            return;
        }
        for (v, x) in self.c[..SIZE[order]].iter_mut().zip(&a.c[..SIZE[order]]) {
            *v += s * x;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|v| *v == 0.0)
    }

    /// Evaluates `sum_n d[n] * (self - self(0))^n` by Horner's rule.
    pub fn compose(&self, d: &[f64; MAX_ORDER + 1]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut acc = Jet::constant(d[self.order], self.order);
        for n in (0..self.order).rev() {
            acc = acc.mul_jet(&h);
            acc.c[0] += d[n];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut p = 1.0 / a;
        for slot in d.iter_mut() {
            *slot = p;
            p *= -1.0 / a;
        }
        self.compose(&d)
    }

    pub fn div_jet(&self, other: &Jet) -> Jet {
        self.mul_jet(&other.recip())
    }

    pub fn powi(&self, n: i64) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Jet::constant(1.0, self.order);
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e / 2.0, e / 6.0, e / 24.0])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = [a.ln(), 0.0, 0.0, 0.0, 0.0];
        for (n, slot) in d.iter_mut().enumerate().skip(1) {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            *slot = sign / (n as f64 * a.powi(n as i32));
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s / 2.0, -c / 6.0, s / 24.0])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn sinh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&[s, c, s / 2.0, c / 6.0, s / 24.0])
    }

    pub fn cosh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&[c, s, c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn tan(&self) -> Jet {
        self.sin().div_jet(&self.cos())
    }

    pub fn tanh(&self) -> Jet {
        self.sinh().div_jet(&self.cosh())
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let r = a.sqrt();
        // binomial series of (1 + h/a)^(1/2)
        let mut d = [r, 0.0, 0.0, 0.0, 0.0];
        let mut binom = 1.0;
        for n in 1..=MAX_ORDER {
            binom *= (0.5 - (n - 1) as f64) / n as f64;
            d[n] = r * binom / a.powi(n as i32);
        }
        self.compose(&d)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_layout() {
        assert_eq!(monomial(0), [0, 0, 0, 0]);
        assert_eq!(monomial(1), [1, 0, 0, 0]);
        assert_eq!(monomial(4), [0, 0, 0, 1]);
        for i in 0..NCOEF {
            assert_eq!(mono_index(&monomial(i)), Some(i));
        }
        assert_eq!(mono_index(&[5, 0, 0, 0]), None);
        assert_eq!(mono_index(&[2, 2, 1, 0]), None);
    }

    #[test]
    fn product_of_variables() {
        let x = Jet::variable(0, 2.0, 2);
        let y = Jet::variable(1, 3.0, 2);
        let p = &x * &y;
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.partial(&[1, 0, 0, 0]), 3.0);
        assert_eq!(p.partial(&[0, 1, 0, 0]), 2.0);
        assert_eq!(p.partial(&[1, 1, 0, 0]), 1.0);
        assert_eq!(p.partial(&[2, 0, 0, 0]), 0.0);
    }

    #[test]
    fn fourth_power_derivative() {
        let x = Jet::variable(0, 1.0, 4);
        assert_eq!(x.powi(4).partial(&[4, 0, 0, 0]), 24.0);
        assert_eq!(x.powi(4).partial(&[3, 0, 0, 0]), 24.0);
    }

    #[test]
    fn diff_lowers_order() {
        let x = Jet::variable(0, 0.5, 4);
        let y = Jet::variable(1, -0.25, 4);
        let f = &x.powi(3) * &y.powi(2);
        let fx = f.diff(0);
        assert_eq!(fx.order(), 3);
        // d/dx (x^3 y^2) = 3 x^2 y^2
        assert!((fx.value() - 3.0 * 0.25 * 0.0625).abs() < 1e-15);
        assert!((fx.partial(&[0, 1, 0, 0]) - 6.0 * 0.25 * -0.25).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_and_sqrt_roundtrip() {
        let x = Jet::variable(2, 1.7, 4);
        let one = &x * &x.recip();
        assert!((one.value() - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|v| v.abs() < 1e-14));
        let s = x.sqrt();
        let back = &s * &s;
        assert!((&back - &x).max_abs() < 1e-14);
    }

    #[test]
    fn exp_log_inverse() {
        let x = &Jet::variable(0, 0.3, 4) + &Jet::variable(3, 0.2, 4);
        let r = x.exp().ln();
        assert!((&r - &x).max_abs() < 1e-14);
    }
}
