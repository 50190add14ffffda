//! Scalar component functions on a coordinate chart.
//!
//! A [`ScalarField`] is an immutable expression tree over the chart
//! coordinates `x1..xn`. The node set (constants, variables, sums, products,
//! quotients, integer powers, `sin`, `cos`, `exp`) is closed under
//! differentiation, so [`ScalarField::partial`] is exact and can be iterated
//! to any order.
//!
//! The only rewriting performed is constant folding and zero/one
//! elimination, and only integer constants are folded. Mixed partials are
//! bit-identical whatever order they were taken in, because:
//!
//! * real literals stay separate factors and terms, so no rounding depends
//!   on how they were grouped during differentiation,
//! * products multiply their factor magnitudes in sorted order, and
//! * sums are evaluated with correctly rounded summation.

mod node;
mod parser;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::point::Point;

pub use parser::ParseError;

pub(crate) use node::Expr;
use node::{build, Node};

/// A real-valued function of the chart coordinates `x1..xn`.
///
/// Coordinate indices in the Rust API are zero-based (`0..dim`); the text
/// grammar uses the one-based names `x1..xn`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dim: usize,
    root: Expr,
}

impl ScalarField {
    /// Parses `text` as a field on an `dim`-dimensional chart.
    ///
    /// Grammar: `expr := term (('+'|'-') term)*`, `term := factor (('*'|'/')
    /// factor)*`, `factor := '-' factor | base ('^' integer)?`, `base :=
    /// number | 'x' integer | '(' expr ')' | ('sin'|'cos'|'exp') '(' expr ')'`.
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let root = parser::parse(text, dim, None)?;
        Ok(Self { dim, root })
    }

    /// Parses a function of one parameter, written with the name `param`
    /// (for instance `t`) instead of `x1`. Both spellings are accepted.
    pub fn parse_with_parameter(text: &str, param: &str) -> Result<Self, ParseError> {
        let root = parser::parse(text, 1, Some(param))?;
        Ok(Self { dim: 1, root })
    }

    /// A constant; integral values are stored exactly as integers.
    pub fn constant(value: f64, dim: usize) -> Self {
        Self { dim, root: build::real_or_int(value) }
    }

    pub fn integer(value: i64, dim: usize) -> Self {
        Self { dim, root: build::int(value) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::integer(0, dim)
    }

    /// The coordinate function `x^index` (zero-based).
    pub fn coordinate(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        Ok(Self { dim, root: build::var(index) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact partial derivative with respect to coordinate `index` (zero-based).
    pub fn partial(&self, index: usize) -> Result<Self> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, dim: self.dim });
        }
        Ok(Self { dim: self.dim, root: node::diff(&self.root, index) })
    }

    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        self.evaluate_at(x.coords())
    }

    /// Evaluates at raw coordinates; `x.len()` must equal the dimension.
    pub fn evaluate_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        node::eval(&self.root, x)
    }

    /// True when the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        node::is_zero(&self.root)
    }

    /// The value when the expression mentions no coordinate.
    pub fn as_constant(&self) -> Option<f64> {
        match *self.root {
            Node::Int(k) => Some(k as f64),
            Node::Real(v) => Some(v),
            _ if (0..self.dim).any(|i| self.depends_on(i)) => None,
            _ => node::eval(&self.root, &vec![0.0; self.dim]).ok(),
        }
    }

    /// Whether the variable `index` occurs anywhere in the expression tree.
    pub fn depends_on(&self, index: usize) -> bool {
        node::mentions(&self.root, index)
    }

    /// Structural equality of the underlying expressions, ignoring the
    /// ambient chart dimension.
    pub fn same_expression(&self, other: &ScalarField) -> bool {
        self.root == other.root
    }

    /// The same function viewed on a chart of dimension `dim >= self.dim()`
    /// whose leading coordinates are this chart's coordinates.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dim });
        }
        Ok(Self { dim, root: self.root.clone() })
    }

    /// Restriction to the first `dim` coordinates, substituting zero for all
    /// the others.
    pub fn restrict_leading(&self, dim: usize) -> Result<Self> {
        if dim > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dim });
        }
        Ok(Self { dim, root: node::zero_from(&self.root, dim) })
    }

    pub fn powi(&self, exponent: i32) -> Self {
        Self { dim: self.dim, root: build::pow(self.root.clone(), exponent) }
    }

    pub fn sin(&self) -> Self {
        Self { dim: self.dim, root: build::sin(self.root.clone()) }
    }

    pub fn cos(&self) -> Self {
        Self { dim: self.dim, root: build::cos(self.root.clone()) }
    }

    pub fn exp(&self) -> Self {
        Self { dim: self.dim, root: build::exp(self.root.clone()) }
    }

    /// Multiplies by a real constant.
    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, root: build::product(vec![build::real(factor), self.root.clone()]) }
    }

    /// Sum of several fields of a common dimension.
    pub fn sum<I: IntoIterator<Item = ScalarField>>(dim: usize, terms: I) -> Self {
        let terms: Vec<Expr> = terms
            .into_iter()
            .map(|t| {
                assert_eq!(t.dim, dim, "dimension mismatch in sum");
                t.root
            })
            .collect();
        Self { dim, root: build::sum(terms) }
    }

    /// Product of several fields of a common dimension.
    pub fn product<I: IntoIterator<Item = ScalarField>>(dim: usize, factors: I) -> Self {
        let factors: Vec<Expr> = factors
            .into_iter()
            .map(|t| {
                assert_eq!(t.dim, dim, "dimension mismatch in product");
                t.root
            })
            .collect();
        Self { dim, root: build::product(factors) }
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        node::size(&self.root)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&*self.root, f)
    }
}

fn check_dims(a: &ScalarField, b: &ScalarField) {
    assert_eq!(a.dim, b.dim, "scalar fields on charts of different dimension");
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        check_dims(self, rhs);
        ScalarField { dim: self.dim, root: build::sum(vec![self.root.clone(), rhs.root.clone()]) }
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        check_dims(self, rhs);
        ScalarField { dim: self.dim, root: build::sub(self.root.clone(), rhs.root.clone()) }
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        check_dims(self, rhs);
        ScalarField {
            dim: self.dim,
            root: build::product(vec![self.root.clone(), rhs.root.clone()]),
        }
    }
}

impl Div for &ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: &ScalarField) -> ScalarField {
        check_dims(self, rhs);
        ScalarField { dim: self.dim, root: build::quotient(self.root.clone(), rhs.root.clone()) }
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField { dim: self.dim, root: build::neg(self.root.clone()) }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                (&self).$method(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        -&self
    }
}
