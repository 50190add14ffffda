use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub(crate) type Expr = Arc<Node>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    /// Exact integer constant (power-rule factors, integer literals).
    Int(i64),
    /// Real literal.
    Real(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

pub(crate) fn is_zero(e: &Expr) -> bool {
    matches!(**e, Node::Int(0)) || matches!(**e, Node::Real(v) if v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(**e, Node::Int(1)) || matches!(**e, Node::Real(v) if v == 1.0)
}

fn constant_value(e: &Expr) -> Option<f64> {
    match **e {
        Node::Int(k) => Some(k as f64),
        Node::Real(v) => Some(v),
        _ => None,
    }
}

pub(crate) mod build {
    use super::*;

    pub fn int(k: i64) -> Expr {
        Arc::new(Node::Int(k))
    }

    pub fn real(v: f64) -> Expr {
        Arc::new(Node::Real(v))
    }

    pub fn var(i: usize) -> Expr {
        Arc::new(Node::Var(i))
    }

    pub fn real_or_int(v: f64) -> Expr {
        if v.fract() == 0.0 && v.abs() < 9.0e15 {
            int(v as i64)
        } else {
            real(v)
        }
    }

    /// Integer terms are added exactly; real literals stay separate terms so
    /// that evaluation rounds the whole sum once.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut ints: i64 = 0;
        let mut rest: Vec<Expr> = Vec::new();
        let mut push = |t: &Expr, rest: &mut Vec<Expr>| match **t {
            Node::Int(k) => match ints.checked_add(k) {
                Some(s) => ints = s,
                None => rest.push(real(k as f64)),
            },
            Node::Real(0.0) => {}
            _ => rest.push(t.clone()),
        };
        for t in &terms {
            if let Node::Sum(inner) = &**t {
                for u in inner {
                    push(u, &mut rest);
                }
            } else {
                push(t, &mut rest);
            }
        }
        if ints != 0 {
            rest.push(int(ints));
        }
        match rest.len() {
            0 => int(0),
            1 => rest.pop().unwrap(),
            _ => Arc::new(Node::Sum(rest)),
        }
    }

    /// Integer factors are multiplied exactly; real literals stay separate
    /// factors (sorted, with the sign of a negative integer part moved onto
    /// the first) so that evaluation depends only on their multiset.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut ints: i64 = 1;
        let mut reals: Vec<f64> = Vec::new();
        let mut rest: Vec<Expr> = Vec::new();
        let mut flat: Vec<Expr> = Vec::with_capacity(factors.len());
        for f in factors {
            if let Node::Product(inner) = &*f {
                flat.extend(inner.iter().cloned());
            } else {
                flat.push(f);
            }
        }
        for f in &flat {
            match **f {
                Node::Int(0) => return int(0),
                Node::Real(0.0) => return int(0),
                Node::Real(1.0) => {}
                Node::Real(-1.0) => ints = ints.checked_neg().unwrap_or_else(|| {
                    reals.push(-1.0);
                    ints
                }),
                Node::Int(k) => match ints.checked_mul(k) {
                    Some(p) => ints = p,
                    None => reals.push(k as f64),
                },
                Node::Real(v) => reals.push(v),
                _ => rest.push(f.clone()),
            }
        }
        reals.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        if ints < 0 && ints != i64::MIN {
            if let Some(first) = reals.first_mut() {
                *first = -*first;
                ints = -ints;
            }
        }
        let mut out: Vec<Expr> = reals.into_iter().map(real).collect();
        if ints != 1 || (out.is_empty() && rest.is_empty()) {
            out.push(int(ints));
        }
        out.extend(rest);
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Arc::new(Node::Product(out))
        }
    }

    pub fn neg(a: Expr) -> Expr {
        product(vec![int(-1), a])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        sum(vec![a, neg(b)])
    }

    pub fn quotient(a: Expr, b: Expr) -> Expr {
        if is_zero(&a) {
            return int(0);
        }
        if is_one(&b) {
            return a;
        }
        if let (Some(x), Some(y)) = (constant_value(&a), constant_value(&b)) {
            if y != 0.0 {
                if let (Node::Int(p), Node::Int(q)) = (&*a, &*b) {
                    if p % q == 0 {
                        return int(p / q);
                    }
                }
                return real(x / y);
            }
        }
        Arc::new(Node::Quotient(a, b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        if k == 0 {
            return int(1);
        }
        if k == 1 {
            return a;
        }
        match *a {
            Node::Int(b) if k > 0 => {
                if let Some(p) = b.checked_pow(k as u32) {
                    return int(p);
                }
                return real((b as f64).powi(k));
            }
            Node::Int(b) if b != 0 => return real((b as f64).powi(k)),
            Node::Real(b) if b != 0.0 || k > 0 => return real(b.powi(k)),
            _ => {}
        }
        Arc::new(Node::Pow(a, k))
    }

    pub fn sin(a: Expr) -> Expr {
        match constant_value(&a) {
            Some(0.0) => int(0),
            Some(v) => real(v.sin()),
            None => Arc::new(Node::Sin(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match constant_value(&a) {
            Some(0.0) => int(1),
            Some(v) => real(v.cos()),
            None => Arc::new(Node::Cos(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match constant_value(&a) {
            Some(0.0) => int(1),
            Some(v) => real(v.exp()),
            None => Arc::new(Node::Exp(a)),
        }
    }
}

/// `factors * d`, distributed over the terms of `d` when it is a sum.
fn times(mut factors: Vec<Expr>, d: Expr, out: &mut Vec<Expr>) {
    match &*d {
        Node::Sum(ts) => {
            for t in ts {
                let mut fs = factors.clone();
                fs.push(t.clone());
                out.push(build::product(fs));
            }
        }
        _ => {
            factors.push(d);
            out.push(build::product(factors));
        }
    }
}

/// Exact partial derivative. Every derivative factor that is a sum is
/// distributed, so the result is a sum of products of undifferentiated
/// subexpressions; together with order-independent products and sums this
/// makes mixed partials agree exactly in either order.
pub(crate) fn diff(e: &Expr, i: usize) -> Expr {
    use build::*;
    let mut terms = Vec::new();
    match &**e {
        Node::Int(_) | Node::Real(_) => return int(0),
        Node::Var(j) => return int((*j == i) as i64),
        Node::Sum(ts) => return sum(ts.iter().map(|t| diff(t, i)).collect()),
        Node::Product(fs) => {
            for k in 0..fs.len() {
                let d = diff(&fs[k], i);
                if is_zero(&d) {
                    continue;
                }
                let others = fs.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, f)| f.clone()).collect();
                times(others, d, &mut terms);
            }
        }
        // a/b is differentiated as a * b^-1
        Node::Quotient(a, b) => {
            let da = diff(a, i);
            let db = diff(b, i);
            if !is_zero(&da) {
                times(vec![pow(b.clone(), -1)], da, &mut terms);
            }
            if !is_zero(&db) {
                times(vec![int(-1), a.clone(), pow(b.clone(), -2)], db, &mut terms);
            }
        }
        Node::Pow(a, k) => {
            let da = diff(a, i);
            if !is_zero(&da) {
                times(vec![int(*k as i64), pow(a.clone(), k - 1)], da, &mut terms);
            }
        }
        Node::Sin(a) => {
            let da = diff(a, i);
            if !is_zero(&da) {
                times(vec![cos(a.clone())], da, &mut terms);
            }
        }
        Node::Cos(a) => {
            let da = diff(a, i);
            if !is_zero(&da) {
                times(vec![int(-1), sin(a.clone())], da, &mut terms);
            }
        }
        Node::Exp(a) => {
            let da = diff(a, i);
            if !is_zero(&da) {
                times(vec![e.clone()], da, &mut terms);
            }
        }
    }
    sum(terms)
}

fn finite(v: f64, e: &Node) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { expression: e.to_string() })
    }
}

pub(crate) fn eval(e: &Expr, x: &[f64]) -> Result<f64> {
    let v = match &**e {
        Node::Int(k) => *k as f64,
        Node::Real(v) => *v,
        Node::Var(j) => x[*j],
        Node::Sum(ts) => {
            let mut vals = Vec::with_capacity(ts.len());
            for t in ts {
                vals.push(eval(t, x)?);
            }
            fsum(&vals)
        }
        Node::Product(fs) => {
            // magnitudes multiplied in sorted order, sign applied last, so the
            // result depends only on the multiset of factor values
            let mut mags = Vec::with_capacity(fs.len());
            let mut negative = false;
            for f in fs {
                let v = eval(f, x)?;
                negative ^= v.is_sign_negative();
                mags.push(v.abs());
            }
            mags.sort_by(f64::total_cmp);
            let p: f64 = mags.iter().product();
            if negative {
                -p
            } else {
                p
            }
        }
        Node::Quotient(a, b) => {
            let den = eval(b, x)?;
            if den == 0.0 {
                return Err(Error::DivisionByZero { expression: b.to_string() });
            }
            eval(a, x)? / den
        }
        Node::Pow(a, k) => {
            let base = eval(a, x)?;
            if base == 0.0 && *k < 0 {
                return Err(Error::DivisionByZero { expression: a.to_string() });
            }
            base.powi(*k)
        }
        Node::Sin(a) => eval(a, x)?.sin(),
        Node::Cos(a) => eval(a, x)?.cos(),
        Node::Exp(a) => eval(a, x)?.exp(),
    };
    finite(v, e)
}

pub(crate) fn mentions(e: &Expr, i: usize) -> bool {
    match &**e {
        Node::Int(_) | Node::Real(_) => false,
        Node::Var(j) => *j == i,
        Node::Sum(ts) | Node::Product(ts) => ts.iter().any(|t| mentions(t, i)),
        Node::Quotient(a, b) => mentions(a, i) || mentions(b, i),
        Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => mentions(a, i),
    }
}

/// Substitutes zero for every variable with index `>= first`.
pub(crate) fn zero_from(e: &Expr, first: usize) -> Expr {
    use build::*;
    match &**e {
        Node::Int(_) | Node::Real(_) => e.clone(),
        Node::Var(j) => {
            if *j >= first {
                int(0)
            } else {
                e.clone()
            }
        }
        Node::Sum(ts) => sum(ts.iter().map(|t| zero_from(t, first)).collect()),
        Node::Product(ts) => product(ts.iter().map(|t| zero_from(t, first)).collect()),
        Node::Quotient(a, b) => quotient(zero_from(a, first), zero_from(b, first)),
        Node::Pow(a, k) => pow(zero_from(a, first), *k),
        Node::Sin(a) => sin(zero_from(a, first)),
        Node::Cos(a) => cos(zero_from(a, first)),
        Node::Exp(a) => exp(zero_from(a, first)),
    }
}

pub(crate) fn size(e: &Expr) -> usize {
    1 + match &**e {
        Node::Int(_) | Node::Real(_) | Node::Var(_) => 0,
        Node::Sum(ts) | Node::Product(ts) => ts.iter().map(size).sum(),
        Node::Quotient(a, b) => size(a) + size(b),
        Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => size(a),
    }
}

/// Correctly rounded sum (Shewchuk's non-overlapping partials), so the
/// result does not depend on the order of the terms.
pub(crate) fn fsum(values: &[f64]) -> f64 {
    match values.len() {
        0 => return 0.0,
        1 => return values[0],
        _ => {}
    }
    let mut partials: Vec<f64> = Vec::with_capacity(4);
    for &value in values {
        let mut x = value;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    let mut n = partials.len();
    let mut hi = partials[n - 1];
    let mut lo = 0.0;
    n -= 1;
    while n > 0 {
        let x = hi;
        let y = partials[n - 1];
        n -= 1;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round-half-even correction when the remaining partials push `lo`
    // past the halfway point.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

// Printing follows the parser's grammar so that output can be read back.

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(e: &Node) -> u8 {
    match e {
        Node::Sum(_) => PREC_SUM,
        Node::Product(fs) if leading_negative(fs) => PREC_SUM,
        Node::Int(_) | Node::Real(_) if is_negative_constant(e) => PREC_SUM,
        Node::Product(_) | Node::Quotient(..) => PREC_PRODUCT,
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn leading_negative(fs: &[Expr]) -> bool {
    fs.first().is_some_and(|f| is_negative_constant(f))
}

fn is_negative_constant(e: &Node) -> bool {
    match e {
        Node::Int(k) => *k < 0,
        Node::Real(v) => v.is_sign_negative(),
        _ => false,
    }
}

fn fmt_real(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{v:?}")
}

fn fmt_wrapped(e: &Node, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "(")?;
        fmt::Display::fmt(e, f)?;
        write!(f, ")")
    } else {
        fmt::Display::fmt(e, f)
    }
}

/// Factors inside a product: sums, quotients and negative terms get
/// parentheses so the reader does not re-associate them.
fn fmt_factor(e: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    fmt_wrapped(e, PREC_POW, f)
}

/// Prints `e` with its sign removed; used for `a - b` inside sums.
fn fmt_abs(e: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Node::Int(k) => write!(f, "{}", k.unsigned_abs()),
        Node::Real(v) => fmt_real(v.abs(), f),
        Node::Product(fs) => {
            let mut rest = &fs[..];
            let mut first = true;
            if let Some(lead) = fs.first() {
                if let Node::Int(-1) = **lead {
                    rest = &fs[1..];
                } else {
                    fmt_abs(lead, f)?;
                    rest = &fs[1..];
                    first = false;
                }
            }
            for factor in rest {
                if !first {
                    write!(f, "*")?;
                }
                fmt_factor(factor, f)?;
                first = false;
            }
            Ok(())
        }
        other => fmt::Display::fmt(other, f),
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Int(k) => write!(f, "{k}"),
            Node::Real(v) => fmt_real(*v, f),
            Node::Var(j) => write!(f, "x{}", j + 1),
            Node::Sum(ts) => {
                for (idx, t) in ts.iter().enumerate() {
                    let negative = match &**t {
                        Node::Product(fs) => leading_negative(fs),
                        other => is_negative_constant(other),
                    };
                    if idx == 0 {
                        fmt::Display::fmt(&**t, f)?;
                    } else if negative {
                        write!(f, " - ")?;
                        fmt_abs(t, f)?;
                    } else {
                        write!(f, " + ")?;
                        fmt_wrapped(t, PREC_SUM + 1, f)?;
                    }
                }
                Ok(())
            }
            Node::Product(fs) => {
                let mut rest = &fs[..];
                if let Some(first) = fs.first() {
                    if let Node::Int(-1) = **first {
                        write!(f, "-")?;
                        rest = &fs[1..];
                    } else if is_negative_constant(first) {
                        fmt::Display::fmt(&**first, f)?;
                        rest = &fs[1..];
                        if !rest.is_empty() {
                            write!(f, "*")?;
                        }
                    }
                }
                for (idx, factor) in rest.iter().enumerate() {
                    if idx > 0 {
                        write!(f, "*")?;
                    }
                    fmt_factor(factor, f)?;
                }
                Ok(())
            }
            Node::Quotient(a, b) => {
                fmt_wrapped(a, PREC_PRODUCT, f)?;
                write!(f, "/")?;
                fmt_wrapped(b, PREC_POW, f)
            }
            Node::Pow(a, k) => {
                fmt_wrapped(a, PREC_ATOM, f)?;
                write!(f, "^{k}")
            }
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fsum_is_order_independent() {
        let vals = [1e16, 1.0, -1e16, 0.1, 0.2, 3.3e-17];
        let mut rev = vals;
        rev.reverse();
        assert_eq!(fsum(&vals), fsum(&rev));
        assert_eq!(fsum(&[0.1, 0.2, 0.3]), 0.6);
        assert_eq!(fsum(&[1e100, 1.0, -1e100]), 1.0);
    }

    #[test]
    fn integer_factors_multiply_exactly() {
        // 0.1*2*3 and 0.1*3*2 must fold to the same node.
        let a = build::product(vec![build::real(0.1), build::int(2), build::int(3), build::var(0)]);
        let b = build::product(vec![build::real(0.1), build::int(3), build::int(2), build::var(0)]);
        assert_eq!(a, b);
    }
}
