use crate::autodiff::{check_power_base, Jet2};
use crate::error::{Error, Result};

use super::ScalarFn;

/// Small expression tree for functions outside the named families.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Scale(f64, Box<Expr>),
    Pow(Box<Expr>, f64),
    Ln(Box<Expr>),
    Exp(Box<Expr>),
    Apply(ScalarFn, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        Expr::Sum(terms)
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        Expr::Product(factors)
    }

    pub fn scale(c: f64, e: Expr) -> Self {
        Expr::Scale(c, Box::new(e))
    }

    pub fn pow(e: Expr, p: f64) -> Self {
        Expr::Pow(Box::new(e), p)
    }

    pub fn ln(e: Expr) -> Self {
        Expr::Ln(Box::new(e))
    }

    pub fn exp(e: Expr) -> Self {
        Expr::Exp(Box::new(e))
    }

    pub fn apply(f: ScalarFn, e: Expr) -> Self {
        Expr::Apply(f, Box::new(e))
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            Expr::Sum(v) | Expr::Product(v) => v.iter().filter_map(Expr::max_var).max(),
            Expr::Scale(_, e) | Expr::Pow(e, _) | Expr::Ln(e) | Expr::Exp(e) | Expr::Apply(_, e) => e.max_var(),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Var(i) => *x.get(*i).ok_or(Error::IndexOutOfRange { index: *i, inputs: x.len() })?,
            Expr::Const(c) => *c,
            Expr::Sum(v) => v.iter().map(|e| e.value(x)).sum::<Result<f64>>()?,
            Expr::Product(v) => v.iter().map(|e| e.value(x)).product::<Result<f64>>()?,
            Expr::Scale(c, e) => c * e.value(x)?,
            Expr::Pow(e, p) => {
                let b = e.value(x)?;
                check_power_base(b, *p)?;
                b.powf(*p)
            }
            Expr::Ln(e) => {
                let b = e.value(x)?;
                if !(b > 0.0) {
                    return Err(Error::Domain(format!("logarithm of non-positive value {b}")));
                }
                b.ln()
            }
            Expr::Exp(e) => e.value(x)?.exp(),
            Expr::Apply(f, e) => f.value(e.value(x)?)?,
        })
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let n = x.len();
        Ok(match self {
            Expr::Var(i) => Jet2::variable(*i, *x.get(*i).ok_or(Error::IndexOutOfRange { index: *i, inputs: n })?, n)?,
            Expr::Const(c) => Jet2::constant(*c, n),
            Expr::Sum(v) => {
                let mut acc = Jet2::constant(0.0, n);
                for e in v {
                    acc = &acc + &e.jet(x)?;
                }
                acc
            }
            Expr::Product(v) => {
                let mut acc = Jet2::constant(1.0, n);
                for e in v {
                    acc = &acc * &e.jet(x)?;
                }
                acc
            }
            Expr::Scale(c, e) => e.jet(x)?.scale(*c),
            Expr::Pow(e, p) => e.jet(x)?.powf(*p)?,
            Expr::Ln(e) => e.jet(x)?.ln()?,
            Expr::Exp(e) => e.jet(x)?.exp(),
            Expr::Apply(f, e) => f.apply_jet(&e.jet(x)?)?,
        })
    }
}
