//! Forward-mode second-order jets.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a function of `n`
//! inputs. The Hessian is stored as a packed upper triangle, so `H[i][j]` and
//! `H[j][i]` are the same memory cell and symmetry holds exactly.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::domain::check_point;
use crate::error::{Error, Result};
use crate::prodfun::FunctionExpr;

/// Default central-difference step before scaling by `max(1, |x_i|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<f64>,
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * (2 * n - r + 1) / 2 + (c - r)
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, gradient: vec![0.0; n], hessian: vec![0.0; packed_len(n)] }
    }

    /// Seed jet for input `i`: unit gradient, zero Hessian.
    pub fn variable(i: usize, x: f64, n: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, inputs: n });
        }
        let mut jet = Self::constant(x, n);
        jet.gradient[i] = 1.0;
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hessian[packed_index(self.dim(), i, j)]
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.hessian(i, j))
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.hessian(i, j)).collect()).collect()
    }

    /// Chain rule for a scalar outer function with value `f0`, first
    /// derivative `f1` and second derivative `f2` at `self.value()`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let gradient = self.gradient.iter().map(|g| f1 * g).collect();
        let mut hessian = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                hessian.push(f1 * self.hessian[packed_index(n, i, j)] + f2 * self.gradient[i] * self.gradient[j]);
            }
        }
        Self { value: f0, gradient, hessian }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: c * self.value,
            gradient: self.gradient.iter().map(|g| c * g).collect(),
            hessian: self.hessian.iter().map(|h| c * h).collect(),
        }
    }

    pub fn offset(&self, c: f64) -> Self {
        Self { value: self.value + c, ..self.clone() }
    }

    /// `self^p`. Non-integer exponents require a positive base; negative
    /// integer exponents require a nonzero base.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let x = self.value;
        check_power_base(x, p)?;
        if p == 0.0 {
            return Ok(Self::constant(1.0, self.dim()));
        }
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = if p == 1.0 { 0.0 } else { p * (p - 1.0) * x.powf(p - 2.0) };
        Ok(self.compose(f0, f1, f2))
    }

    pub fn ln(&self) -> Result<Self> {
        let x = self.value;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("logarithm of non-positive value {x}")));
        }
        Ok(self.compose(x.ln(), 1.0 / x, -1.0 / (x * x)))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn recip(&self) -> Result<Self> {
        self.powf(-1.0)
    }

    fn zip_with(&self, other: &Self, value: f64, g: impl Fn(f64, f64) -> f64, h: impl Fn(usize, usize) -> f64) -> Self {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let n = self.dim();
        let gradient = self.gradient.iter().zip(&other.gradient).map(|(&a, &b)| g(a, b)).collect();
        let mut hessian = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                hessian.push(h(i, j));
            }
        }
        Self { value, gradient, hessian }
    }
}

pub(crate) fn check_power_base(x: f64, p: f64) -> Result<()> {
    let integer = p.fract() == 0.0;
    if !integer && !(x > 0.0) {
        return Err(Error::Domain(format!("non-integer power {p} of non-positive value {x}")));
    }
    if integer && p < 0.0 && x == 0.0 {
        return Err(Error::Domain(format!("negative power {p} of zero")));
    }
    Ok(())
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        self.zip_with(
            rhs,
            self.value + rhs.value,
            |a, b| a + b,
            |i, j| {
                let k = packed_index(n, i, j);
                self.hessian[k] + rhs.hessian[k]
            },
        )
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        self.zip_with(
            rhs,
            self.value - rhs.value,
            |a, b| a - b,
            |i, j| {
                let k = packed_index(n, i, j);
                self.hessian[k] - rhs.hessian[k]
            },
        )
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        self.zip_with(
            rhs,
            a * b,
            |ga, gb| a * gb + b * ga,
            |i, j| {
                let k = packed_index(n, i, j);
                a * rhs.hessian[k]
                    + b * self.hessian[k]
                    + self.gradient[i] * rhs.gradient[j]
                    + rhs.gradient[i] * self.gradient[j]
            },
        )
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

/// Seed jet for input `i` at coordinate value `x`.
pub fn lift_variable(i: usize, x: f64, n: usize) -> Result<Jet2> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, inputs: n });
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidPoint(format!("coordinate {x} is not strictly positive")));
    }
    Jet2::variable(i, x, n)
}

/// Value, gradient and Hessian of `expr` at `point`.
pub fn evaluate_jet(expr: &FunctionExpr, point: &[f64]) -> Result<Jet2> {
    check_point(point, expr.inputs())?;
    expr.jet(point)
}

/// Central-difference estimate of the gradient and Hessian, built only from
/// plain function values. Step along axis `i` is `step * max(1, |x_i|)`.
pub fn finite_difference_oracle(expr: &FunctionExpr, point: &[f64], step: f64) -> Result<Jet2> {
    let n = expr.inputs();
    check_point(point, n)?;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step {step} must be positive")));
    }
    let steps: Vec<f64> = point.iter().map(|x| step * x.abs().max(1.0)).collect();
    for (i, (&x, &h)) in point.iter().zip(&steps).enumerate() {
        if x - h <= 0.0 {
            return Err(Error::StepLeavesOrthant { step, index: i });
        }
    }

    let eval = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut p = point.to_vec();
        for &(i, s) in shifts {
            p[i] += s;
        }
        expr.value(&p)
    };

    let f0 = eval(&[])?;
    let mut jet = Jet2::constant(f0, n);
    for i in 0..n {
        let h = steps[i];
        let fp = eval(&[(i, h)])?;
        let fm = eval(&[(i, -h)])?;
        jet.gradient[i] = (fp - fm) / (2.0 * h);
        jet.hessian[packed_index(n, i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let k = steps[j];
            let fpp = eval(&[(i, h), (j, k)])?;
            let fpm = eval(&[(i, h), (j, -k)])?;
            let fmp = eval(&[(i, -h), (j, k)])?;
            let fmm = eval(&[(i, -h), (j, -k)])?;
            jet.hessian[packed_index(n, i, j)] = (fpp - fpm - fmp + fmm) / (4.0 * h * k);
        }
    }
    Ok(jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainBox;
    use crate::prodfun::{build_acms, build_cobb_douglas, Expr, FunctionExpr};
    use proptest::prelude::*;

    fn sum_expr() -> FunctionExpr {
        FunctionExpr::composite(Expr::sum(vec![Expr::var(0), Expr::var(1)]), 2).unwrap()
    }

    fn x1_sq_x2() -> FunctionExpr {
        FunctionExpr::composite(Expr::product(vec![Expr::pow(Expr::var(0), 2.0), Expr::var(1)]), 2).unwrap()
    }

    #[test]
    fn lift_variable_seeds() {
        let j = lift_variable(0, 3.0, 2).unwrap();
        assert_eq!(j.value(), 3.0);
        assert_eq!(j.gradient(), &[1.0, 0.0]);
        assert_eq!(j.hessian_rows(), vec![vec![0.0; 2]; 2]);
        let j = lift_variable(1, 1.0, 2).unwrap();
        assert_eq!(j.gradient(), &[0.0, 1.0]);
        assert_eq!(lift_variable(2, 5.0, 2), Err(Error::IndexOutOfRange { index: 2, inputs: 2 }));
    }

    #[test]
    fn packed_layout_covers_triangle() {
        let n = 5;
        let mut seen: Vec<usize> = (0..n).flat_map(|i| (i..n).map(move |j| packed_index(n, i, j))).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..packed_len(n)).collect::<Vec<_>>());
    }

    #[test]
    fn cobb_douglas_half_half_at_one() {
        let f = build_cobb_douglas(1.0, vec![0.5, 0.5]).unwrap();
        let j = evaluate_jet(&f, &[1.0, 1.0]).unwrap();
        assert!((j.value() - 1.0).abs() < 1e-15);
        assert!((j.gradient()[0] - 0.5).abs() < 1e-15);
        assert!((j.gradient()[1] - 0.5).abs() < 1e-15);
        let expected = [[-0.25, 0.25], [0.25, -0.25]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j.hessian(i, k) - expected[i][k]).abs() < 1e-15);
            }
        }
        // the frozen values above agree with the difference oracle
        let fd = finite_difference_oracle(&f, &[1.0, 1.0], DEFAULT_FD_STEP).unwrap();
        for i in 0..2 {
            assert!((fd.gradient()[i] - 0.5).abs() < 1e-6);
            for k in 0..2 {
                assert!((fd.hessian(i, k) - expected[i][k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn linear_function_jet() {
        let j = evaluate_jet(&sum_expr(), &[7.0, 11.0]).unwrap();
        assert_eq!(j.value(), 18.0);
        assert_eq!(j.gradient(), &[1.0, 1.0]);
        assert_eq!(j.hessian_rows(), vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn acms_half_at_one() {
        let f = build_acms(1.0, vec![1.0, 1.0], 0.5, 1.0).unwrap();
        let j = evaluate_jet(&f, &[1.0, 1.0]).unwrap();
        assert!((j.value() - 4.0).abs() < 1e-14);
        assert!((j.gradient()[0] - 2.0).abs() < 1e-14);
        assert!((j.gradient()[1] - 2.0).abs() < 1e-14);
        let fd = finite_difference_oracle(&f, &[1.0, 1.0], DEFAULT_FD_STEP).unwrap();
        assert!((fd.gradient()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn oracle_on_polynomial() {
        let fd = finite_difference_oracle(&x1_sq_x2(), &[1.0, 1.0], 1e-4).unwrap();
        assert!((fd.gradient()[0] - 2.0).abs() < 1e-6);
        assert!((fd.gradient()[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn oracle_matches_jet_on_cobb_douglas() {
        let f = build_cobb_douglas(1.0, vec![0.5, 0.5]).unwrap();
        let p = [2.0, 8.0];
        let fd = finite_difference_oracle(&f, &p, 1e-4).unwrap();
        let j = evaluate_jet(&f, &p).unwrap();
        for i in 0..2 {
            let rel = (fd.gradient()[i] - j.gradient()[i]).abs() / j.gradient()[i].abs();
            assert!(rel < 1e-5, "gradient {i}: {rel}");
        }
    }

    #[test]
    fn oracle_rejects_large_step() {
        assert_eq!(
            finite_difference_oracle(&sum_expr(), &[1.0, 1.0], 10.0),
            Err(Error::StepLeavesOrthant { step: 10.0, index: 0 })
        );
    }

    #[test]
    fn power_domain() {
        let neg = Jet2::constant(-2.0, 1);
        assert!(neg.powf(0.5).is_err());
        assert_eq!(neg.powf(3.0).unwrap().value(), -8.0);
        assert!(Jet2::constant(0.0, 1).powf(-1.0).is_err());
        assert!(Jet2::constant(0.0, 1).ln().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let f = build_cobb_douglas(1.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(evaluate_jet(&f, &[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { expected: 2, actual: 3 }));
        assert!(matches!(evaluate_jet(&f, &[1.0, -2.0]), Err(Error::InvalidPoint(_))));
    }

    #[test]
    fn domain_violation_inside_acms() {
        // negative weight makes the inner sum cross zero
        let f = build_acms(1.0, vec![1.0, -1.0], 1.0, 0.5).unwrap();
        assert!(matches!(evaluate_jet(&f, &[1.0, 2.0]), Err(Error::Domain(_))));
    }

    fn arb_jet(n: usize) -> impl Strategy<Value = Jet2> {
        (-3.0..3.0f64, prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, packed_len(n)))
            .prop_map(|(value, gradient, hessian)| Jet2 { value, gradient, hessian })
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn arithmetic_laws(a in arb_jet(3), b in arb_jet(3), c in arb_jet(3)) {
            prop_assert!(close((&a + &b).value(), (&b + &a).value()));
            prop_assert!(close((&a * &b).value(), (&b * &a).value()));
            prop_assert!(close((&(&a + &b) + &c).value(), (&a + &(&b + &c)).value()));
            prop_assert!(close((&(&a * &b) * &c).value(), (&a * &(&b * &c)).value()));
            let ab = &a * &b;
            let ba = &b * &a;
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!(close(ab.hessian(i, j), ba.hessian(i, j)));
                }
            }
        }

        #[test]
        fn hessian_is_exactly_symmetric(
            alpha in prop::collection::vec(0.1..1.5f64, 2..6),
            seed in 0u64..1000,
        ) {
            let n = alpha.len();
            let f = build_cobb_douglas(1.3, alpha).unwrap();
            let p = &DomainBox::cube(0.5, 2.0, n).unwrap().log_uniform_samples(1, seed)[0];
            let h = evaluate_jet(&f, p).unwrap().hessian_matrix();
            prop_assert_eq!(h.clone(), h.transpose());
        }
    }
}
