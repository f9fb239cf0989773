use serde::{Deserialize, Serialize};

use crate::autodiff::{check_power_base, Jet2};
use crate::domain::{linear_nodes, DomainBox};
use crate::error::{Error, Result};
use crate::tolerance::MONOTONICITY_SAMPLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarForm {
    /// `c * t^p + s`
    Power,
    /// `c * ln(t) + s`
    Log,
    /// `c * exp(t) + s`
    Exp,
    /// `c * t + s`
    Affine,
}

/// One-variable building block for the outer and inner functions of a
/// quasi-sum, with closed-form first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScalarFnRecord", into = "ScalarFnRecord")]
pub struct ScalarFn {
    form: ScalarForm,
    coefficient: f64,
    exponent: f64,
    shift: f64,
}

/// Wire form of [`ScalarFn`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarFnRecord {
    pub form: ScalarForm,
    pub coefficient: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub shift: f64,
}

impl TryFrom<ScalarFnRecord> for ScalarFn {
    type Error = Error;

    fn try_from(r: ScalarFnRecord) -> Result<Self> {
        match (r.form, r.exponent) {
            (ScalarForm::Power, Some(p)) => ScalarFn::power(r.coefficient, p, r.shift),
            (ScalarForm::Power, None) => Err(Error::InvalidParameter("power form requires an exponent".into())),
            (_, Some(_)) => Err(Error::InvalidParameter(format!(
                "exponent is only meaningful for the power form, not {:?}",
                r.form
            ))),
            (form, None) => ScalarFn::new(form, r.coefficient, 1.0, r.shift),
        }
    }
}

impl From<ScalarFn> for ScalarFnRecord {
    fn from(f: ScalarFn) -> Self {
        Self {
            form: f.form,
            coefficient: f.coefficient,
            exponent: (f.form == ScalarForm::Power).then_some(f.exponent),
            shift: f.shift,
        }
    }
}

impl ScalarFn {
    fn new(form: ScalarForm, coefficient: f64, exponent: f64, shift: f64) -> Result<Self> {
        if coefficient == 0.0 || !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scalar coefficient must be finite and nonzero, got {coefficient}"
            )));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite shift {shift}")));
        }
        if form == ScalarForm::Power && (exponent == 0.0 || !exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!("power exponent must be finite and nonzero, got {exponent}")));
        }
        Ok(Self { form, coefficient, exponent, shift })
    }

    pub fn power(coefficient: f64, exponent: f64, shift: f64) -> Result<Self> {
        Self::new(ScalarForm::Power, coefficient, exponent, shift)
    }

    pub fn log(coefficient: f64, shift: f64) -> Result<Self> {
        Self::new(ScalarForm::Log, coefficient, 1.0, shift)
    }

    pub fn exp(coefficient: f64, shift: f64) -> Result<Self> {
        Self::new(ScalarForm::Exp, coefficient, 1.0, shift)
    }

    pub fn affine(coefficient: f64, shift: f64) -> Result<Self> {
        Self::new(ScalarForm::Affine, coefficient, 1.0, shift)
    }

    pub fn identity() -> Self {
        Self { form: ScalarForm::Affine, coefficient: 1.0, exponent: 1.0, shift: 0.0 }
    }

    pub fn form(&self) -> ScalarForm {
        self.form
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Exponent of the power form; `None` for the others.
    pub fn exponent(&self) -> Option<f64> {
        (self.form == ScalarForm::Power).then_some(self.exponent)
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn with_shift(self, shift: f64) -> Self {
        Self { shift, ..self }
    }

    pub fn with_coefficient(self, coefficient: f64) -> Result<Self> {
        Self::new(self.form, coefficient, self.exponent, self.shift)
    }

    fn check_arg(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {t}")));
        }
        match self.form {
            ScalarForm::Power => check_power_base(t, self.exponent),
            ScalarForm::Log if !(t > 0.0) => Err(Error::Domain(format!("logarithm of non-positive value {t}"))),
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        let c = self.coefficient;
        let core = match self.form {
            ScalarForm::Power => t.powf(self.exponent),
            ScalarForm::Log => t.ln(),
            ScalarForm::Exp => t.exp(),
            ScalarForm::Affine => t,
        };
        Ok(c * core + self.shift)
    }

    /// `(value, first derivative, second derivative)` at `t`.
    pub fn derivatives(&self, t: f64) -> Result<(f64, f64, f64)> {
        let v = self.value(t)?;
        let c = self.coefficient;
        let (d1, d2) = match self.form {
            ScalarForm::Power => {
                let p = self.exponent;
                let d2 = if p == 1.0 { 0.0 } else { p * (p - 1.0) * t.powf(p - 2.0) };
                (p * t.powf(p - 1.0), d2)
            }
            ScalarForm::Log => (1.0 / t, -1.0 / (t * t)),
            ScalarForm::Exp => (t.exp(), t.exp()),
            ScalarForm::Affine => (1.0, 0.0),
        };
        Ok((v, c * d1, c * d2))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.derivatives(t).map(|d| d.1)
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.derivatives(t).map(|d| d.2)
    }

    pub fn apply_jet(&self, jet: &Jet2) -> Result<Jet2> {
        let (f0, f1, f2) = self.derivatives(jet.value())?;
        Ok(jet.compose(f0, f1, f2))
    }

    /// Domain check over the whole closed interval, not only at samples.
    fn check_interval(&self, lo: f64, hi: f64) -> Result<()> {
        let bad = match self.form {
            ScalarForm::Log => lo <= 0.0,
            ScalarForm::Power if self.exponent.fract() != 0.0 => lo <= 0.0,
            ScalarForm::Power if self.exponent < 0.0 => lo <= 0.0 && hi >= 0.0,
            _ => false,
        };
        if bad {
            return Err(Error::Monotonicity {
                reason: format!("{:?} form undefined somewhere on [{lo}, {hi}]", self.form),
                at: lo,
            });
        }
        Ok(())
    }

    /// Sign of the derivative on `[lo, hi]`, sampled at
    /// [`MONOTONICITY_SAMPLES`] evenly spaced points; fails on a zero or a
    /// sign change and reports the first violating point.
    pub fn monotone_sign_on(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_interval(lo, hi)?;
        let mut sign = 0.0;
        for t in linear_nodes(lo, hi, MONOTONICITY_SAMPLES) {
            let d = self.derivative(t).map_err(|e| Error::Monotonicity { reason: e.to_string(), at: t })?;
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Monotonicity { reason: "vanishing derivative".into(), at: t });
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                return Err(Error::Monotonicity { reason: "derivative changes sign".into(), at: t });
            }
        }
        Ok(sign)
    }

    pub fn check_increasing_on(&self, lo: f64, hi: f64) -> Result<()> {
        if self.monotone_sign_on(lo, hi)? < 0.0 {
            return Err(Error::Monotonicity { reason: "outer function is decreasing".into(), at: lo });
        }
        Ok(())
    }

    /// Range of a function known to be monotone on `[lo, hi]`.
    fn monotone_range(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let a = self.value(lo)?;
        let b = self.value(hi)?;
        Ok((a.min(b), a.max(b)))
    }
}

/// `F(h_1(x_1) + ... + h_n(x_n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiSumSpec {
    pub outer: ScalarFn,
    pub inner: Vec<ScalarFn>,
}

impl QuasiSumSpec {
    pub fn new(outer: ScalarFn, inner: Vec<ScalarFn>) -> Result<Self> {
        if inner.len() < 2 {
            return Err(Error::InvalidParameter(format!("a quasi-sum needs at least two inputs, got {}", inner.len())));
        }
        Ok(Self { outer, inner })
    }

    pub fn inputs(&self) -> usize {
        self.inner.len()
    }

    /// `u = sum h_i(x_i)`.
    pub fn inner_sum(&self, point: &[f64]) -> Result<f64> {
        self.inner.iter().zip(point).map(|(h, &x)| h.value(x)).sum()
    }

    /// Same spec with every additive shift set to zero.
    pub fn normalized(&self) -> Self {
        Self { outer: self.outer.with_shift(0.0), inner: self.inner.iter().map(|h| h.with_shift(0.0)).collect() }
    }

    /// Range of the inner sum over the box and the per-input monotonicity
    /// signs of the inner functions.
    fn inner_range(&self, domain: &DomainBox) -> Result<((f64, f64), Vec<f64>)> {
        domain.check_dim(self.inputs())?;
        let mut lo_sum = 0.0;
        let mut hi_sum = 0.0;
        let mut signs = Vec::with_capacity(self.inputs());
        for (h, &(lo, hi)) in self.inner.iter().zip(domain.bounds()) {
            signs.push(h.monotone_sign_on(lo, hi)?);
            let (a, b) = h.monotone_range(lo, hi)?;
            lo_sum += a;
            hi_sum += b;
        }
        Ok(((lo_sum, hi_sum), signs))
    }

    /// Every inner function strictly monotone on its axis and the outer
    /// function strictly increasing on the range of the inner sum.
    pub fn validate_on(&self, domain: &DomainBox) -> Result<()> {
        let ((lo, hi), _) = self.inner_range(domain)?;
        self.outer.check_increasing_on(lo, hi)
    }

    /// Like [`validate_on`](Self::validate_on) but accepts a decreasing
    /// outer function: `F(u)` with `F' < 0` is the reflection of an
    /// increasing outer function applied to `-h_i`.
    pub fn validate_monotone_on(&self, domain: &DomainBox) -> Result<f64> {
        let ((lo, hi), _) = self.inner_range(domain)?;
        self.outer.monotone_sign_on(lo, hi)
    }
}
