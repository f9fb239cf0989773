//! Production-function families and their evaluation.

mod expr;
mod scalar;
pub mod spec;

pub use expr::Expr;
pub use scalar::{QuasiSumSpec, ScalarFn, ScalarFnRecord, ScalarForm};

use serde::Serialize;

use crate::autodiff::{check_power_base, Jet2};
use crate::domain::{check_point, DomainBox};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    CobbDouglas,
    Acms,
    QuasiSum,
    Ratio,
    Composite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `gamma * prod x_i^alpha_i`
    CobbDouglas {
        gamma: f64,
        alpha: Vec<f64>,
    },
    /// `gamma * (sum a_i^rho x_i^rho)^(d / rho)`; `weights[i] = a_i^rho`.
    Acms {
        gamma: f64,
        a: Vec<f64>,
        rho: f64,
        d: f64,
        weights: Vec<f64>,
    },
    QuasiSum(QuasiSumSpec),
    /// `F(x_2 / x_1)`
    Ratio {
        outer: ScalarFn,
    },
    Composite(Expr),
}

/// An evaluable production function of a fixed number of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    family: Family,
    inputs: usize,
}

fn nonzero(name: &str, v: f64) -> Result<()> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite and nonzero, got {v}")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite and positive, got {v}")));
    }
    Ok(())
}

/// Generalized Cobb-Douglas `gamma * x_1^alpha_1 * ... * x_n^alpha_n`.
pub fn build_cobb_douglas(gamma: f64, alpha: Vec<f64>) -> Result<FunctionExpr> {
    positive("gamma", gamma)?;
    if alpha.is_empty() {
        return Err(Error::InvalidParameter("alpha must not be empty".into()));
    }
    for (i, &a) in alpha.iter().enumerate() {
        nonzero(&format!("alpha[{i}]"), a)?;
    }
    let inputs = alpha.len();
    Ok(FunctionExpr { family: Family::CobbDouglas { gamma, alpha }, inputs })
}

/// Generalized ACMS `gamma * (sum a_i^rho x_i^rho)^(d / rho)`.
pub fn build_acms(gamma: f64, a: Vec<f64>, rho: f64, d: f64) -> Result<FunctionExpr> {
    positive("gamma", gamma)?;
    nonzero("rho", rho)?;
    nonzero("d", d)?;
    if a.is_empty() {
        return Err(Error::InvalidParameter("a must not be empty".into()));
    }
    let mut weights = Vec::with_capacity(a.len());
    for (i, &ai) in a.iter().enumerate() {
        nonzero(&format!("a[{i}]"), ai)?;
        let w = ai.powf(rho);
        if !w.is_finite() || w == 0.0 {
            return Err(Error::InvalidParameter(format!("a[{i}]^rho = {ai}^{rho} is not a finite nonzero real")));
        }
        weights.push(w);
    }
    let inputs = a.len();
    Ok(FunctionExpr { family: Family::Acms { gamma, a, rho, d, weights }, inputs })
}

/// Quasi-sum `F(h_1(x_1) + ... + h_n(x_n))`, validated on `domain`.
pub fn build_quasi_sum(spec: QuasiSumSpec, domain: &DomainBox) -> Result<FunctionExpr> {
    spec.validate_on(domain)?;
    let inputs = spec.inputs();
    Ok(FunctionExpr { family: Family::QuasiSum(spec), inputs })
}

/// Two-input `F(x_2 / x_1)` with `F` strictly increasing on the ratio range of `domain`.
pub fn build_ratio(outer: ScalarFn, domain: &DomainBox) -> Result<FunctionExpr> {
    domain.check_dim(2)?;
    let [(lo1, hi1), (lo2, hi2)] = [domain.bounds()[0], domain.bounds()[1]];
    outer.check_increasing_on(lo2 / hi1, hi2 / lo1)?;
    Ok(FunctionExpr { family: Family::Ratio { outer }, inputs: 2 })
}

impl FunctionExpr {
    pub fn composite(expr: Expr, inputs: usize) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::InvalidParameter("composite needs at least one input".into()));
        }
        if let Some(i) = expr.max_var() {
            if i >= inputs {
                return Err(Error::IndexOutOfRange { index: i, inputs });
            }
        }
        Ok(Self { family: Family::Composite(expr), inputs })
    }

    /// Quasi-sum without the monotonicity check; used for derived
    /// representations whose outer function may be decreasing.
    pub(crate) fn quasi_sum_unchecked(spec: QuasiSumSpec) -> Self {
        let inputs = spec.inputs();
        Self { family: Family::QuasiSum(spec), inputs }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            Family::CobbDouglas { .. } => FamilyTag::CobbDouglas,
            Family::Acms { .. } => FamilyTag::Acms,
            Family::QuasiSum(_) => FamilyTag::QuasiSum,
            Family::Ratio { .. } => FamilyTag::Ratio,
            Family::Composite(_) => FamilyTag::Composite,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Plain floating-point value, computed without jets.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.inputs)?;
        match &self.family {
            Family::CobbDouglas { gamma, alpha } => {
                Ok(gamma * x.iter().zip(alpha).map(|(xi, a)| xi.powf(*a)).product::<f64>())
            }
            Family::Acms { gamma, rho, d, weights, .. } => {
                let u: f64 = x.iter().zip(weights).map(|(xi, w)| w * xi.powf(*rho)).sum();
                let e = d / rho;
                check_power_base(u, e)?;
                Ok(gamma * u.powf(e))
            }
            Family::QuasiSum(spec) => spec.outer.value(spec.inner_sum(x)?),
            Family::Ratio { outer } => outer.value(x[1] / x[0]),
            Family::Composite(e) => e.value(x),
        }
    }

    pub(crate) fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let n = self.inputs;
        let lift = |i: usize| Jet2::variable(i, x[i], n);
        match &self.family {
            Family::CobbDouglas { gamma, alpha } => {
                let mut acc = Jet2::constant(*gamma, n);
                for (i, a) in alpha.iter().enumerate() {
                    acc = &acc * &lift(i)?.powf(*a)?;
                }
                Ok(acc)
            }
            Family::Acms { gamma, rho, d, weights, .. } => {
                let mut u = Jet2::constant(0.0, n);
                for (i, w) in weights.iter().enumerate() {
                    u = &u + &lift(i)?.powf(*rho)?.scale(*w);
                }
                Ok(u.powf(d / rho)?.scale(*gamma))
            }
            Family::QuasiSum(spec) => {
                let mut u = Jet2::constant(0.0, n);
                for (i, h) in spec.inner.iter().enumerate() {
                    u = &u + &h.apply_jet(&lift(i)?)?;
                }
                spec.outer.apply_jet(&u)
            }
            Family::Ratio { outer } => {
                let t = &lift(1)? * &lift(0)?.recip()?;
                outer.apply_jet(&t)
            }
            Family::Composite(e) => e.jet(x),
        }
    }

    /// Quasi-sum representation over the scalar forms, when one exists.
    ///
    /// The result is not validated: ACMS with `rho < 0` yields a decreasing
    /// outer function paired with decreasing inner functions.
    pub fn to_quasi_sum(&self) -> Option<QuasiSumSpec> {
        let logs = |c: &[f64]| -> Option<Vec<ScalarFn>> { c.iter().map(|&ci| ScalarFn::log(ci, 0.0).ok()).collect() };
        match &self.family {
            Family::CobbDouglas { gamma, alpha } => {
                QuasiSumSpec::new(ScalarFn::exp(*gamma, 0.0).ok()?, logs(alpha)?).ok()
            }
            Family::Acms { gamma, rho, d, weights, .. } => {
                let inner = weights.iter().map(|&w| ScalarFn::power(w, *rho, 0.0).ok()).collect::<Option<Vec<_>>>()?;
                QuasiSumSpec::new(ScalarFn::power(*gamma, d / rho, 0.0).ok()?, inner).ok()
            }
            Family::QuasiSum(spec) => Some(spec.clone()),
            Family::Ratio { outer } => {
                let (c, s) = (outer.coefficient(), outer.shift());
                let (new_outer, rate) = match outer.form() {
                    ScalarForm::Power => (ScalarFn::exp(c, s).ok()?, outer.exponent()?),
                    ScalarForm::Affine => (ScalarFn::exp(c, s).ok()?, 1.0),
                    ScalarForm::Log => (ScalarFn::affine(c, s).ok()?, 1.0),
                    ScalarForm::Exp => return None,
                };
                QuasiSumSpec::new(new_outer, logs(&[-rate, rate])?).ok()
            }
            Family::Composite(_) => None,
        }
    }
}

/// Euler quotient `sum x_i f_i / f`; equals `d` everywhere for a
/// `d`-homogeneous function.
pub fn homogeneity_degree(expr: &FunctionExpr, point: &[f64]) -> Result<f64> {
    let jet = crate::autodiff::evaluate_jet(expr, point)?;
    if jet.value() == 0.0 {
        return Err(Error::Domain("Euler quotient undefined where f = 0".into()));
    }
    let euler: f64 = point.iter().zip(jet.gradient()).map(|(x, g)| x * g).sum();
    Ok(euler / jet.value())
}

/// Closed-form Hessian determinant of `F(h_1(x_1) + ... + h_n(x_n))`:
/// `F'^n prod h_k'' + F'^(n-1) F'' sum_j h_j'^2 prod_{k != j} h_k''`.
pub fn hessian_det_quasisum(spec: &QuasiSumSpec, point: &[f64]) -> Result<f64> {
    let n = spec.inputs();
    check_point(point, n)?;
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let mut u = 0.0;
    for (h, &x) in spec.inner.iter().zip(point) {
        let (v, a, b) = h.derivatives(x)?;
        u += v;
        d1.push(a);
        d2.push(b);
    }
    let (_, fp, fpp) = spec.outer.derivatives(u)?;

    // prefix[k] = h_0'' ... h_{k-1}'', suffix[k] = h_k'' ... h_{n-1}''
    let mut prefix = vec![1.0; n + 1];
    let mut suffix = vec![1.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] * d2[k];
        suffix[n - 1 - k] = suffix[n - k] * d2[n - 1 - k];
    }
    let mixed: f64 = (0..n).map(|j| prefix[j] * d1[j] * d1[j] * suffix[j + 1]).sum();
    Ok(fp.powi(n as i32) * prefix[n] + fp.powi(n as i32 - 1) * fpp * mixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::evaluate_jet;

    fn unit_box(n: usize) -> DomainBox {
        DomainBox::cube(0.5, 2.0, n).unwrap()
    }

    #[test]
    fn cobb_douglas_values() {
        let f = build_cobb_douglas(1.0, vec![0.5, 0.5]).unwrap();
        assert!((f.value(&[4.0, 9.0]).unwrap() - 6.0).abs() < 1e-15);
        let g = build_cobb_douglas(2.0, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.value(&[1.0, 2.0, 3.0]).unwrap(), 12.0);
        assert!(build_cobb_douglas(1.0, vec![0.5, 0.0]).is_err());
        assert!(build_cobb_douglas(0.0, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn acms_values() {
        let f = build_acms(1.0, vec![1.0, 1.0], 0.5, 1.0).unwrap();
        assert!((f.value(&[1.0, 1.0]).unwrap() - 4.0).abs() < 1e-15);
        let g = build_acms(1.0, vec![1.0, 1.0], 2.0, 2.0).unwrap();
        assert!((g.value(&[3.0, 4.0]).unwrap() - 25.0).abs() < 1e-13);
        assert!(build_acms(1.0, vec![1.0, 1.0], 0.0, 1.0).is_err());
        assert!(build_acms(1.0, vec![1.0, 0.0], 0.5, 1.0).is_err());
        assert!(build_acms(-1.0, vec![1.0, 1.0], 0.5, 1.0).is_err());
        assert!(build_acms(1.0, vec![-1.0, 1.0], 0.5, 1.0).is_err());
    }

    #[test]
    fn quasi_sum_values() {
        let sq = ScalarFn::power(1.0, 2.0, 0.0).unwrap();
        let f = build_quasi_sum(QuasiSumSpec::new(sq, vec![sq, sq]).unwrap(), &unit_box(2)).unwrap();
        assert_eq!(f.value(&[1.0, 1.0]).unwrap(), 4.0);
        let half_log = ScalarFn::log(0.5, 0.0).unwrap();
        let g = build_quasi_sum(
            QuasiSumSpec::new(ScalarFn::exp(1.0, 0.0).unwrap(), vec![half_log, half_log]).unwrap(),
            &DomainBox::cube(1.0, 10.0, 2).unwrap(),
        )
        .unwrap();
        assert!((g.value(&[4.0, 9.0]).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn quasi_sum_rejects_crossing_inner_sum() {
        let recip = ScalarFn::power(1.0, -1.0, 0.0).unwrap();
        let shifted = ScalarFn::affine(1.0, -1.5).unwrap();
        let spec = QuasiSumSpec::new(recip, vec![shifted, shifted]).unwrap();
        assert!(matches!(build_quasi_sum(spec, &unit_box(2)), Err(Error::Monotonicity { .. })));
    }

    #[test]
    fn ratio_values() {
        let id = ScalarFn::identity();
        let b = DomainBox::cube(0.5, 8.0, 2).unwrap();
        let f = build_ratio(id, &b).unwrap();
        assert_eq!(f.value(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(f.value(&[2.0, 6.0]).unwrap(), 3.0);
        let g = build_ratio(ScalarFn::power(1.0, 2.0, 0.0).unwrap(), &b).unwrap();
        assert_eq!(g.value(&[1.0, 3.0]).unwrap(), 9.0);
        let dec = ScalarFn::affine(-1.0, 0.0).unwrap();
        assert!(build_ratio(dec, &b).is_err());
        assert!(build_ratio(id, &unit_box(3)).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let mono = FunctionExpr::composite(Expr::product(vec![Expr::pow(Expr::var(0), 2.0), Expr::var(1)]), 2).unwrap();
        assert!((homogeneity_degree(&mono, &[3.0, 5.0]).unwrap() - 3.0).abs() < 1e-14);
        let acms = build_acms(1.7, vec![0.8, 1.3], -0.7, 1.0).unwrap();
        assert!((homogeneity_degree(&acms, &[0.6, 1.9]).unwrap() - 1.0).abs() < 1e-14);
        let ratio = build_ratio(ScalarFn::identity(), &DomainBox::cube(0.5, 8.0, 2).unwrap()).unwrap();
        assert!(homogeneity_degree(&ratio, &[2.0, 7.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hessian_det_hand_instance() {
        let sq = ScalarFn::power(1.0, 2.0, 0.0).unwrap();
        let spec = QuasiSumSpec::new(sq, vec![sq, sq]).unwrap();
        assert!((hessian_det_quasisum(&spec, &[1.0, 1.0]).unwrap() - 192.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_det_vanishes_for_unit_sum_logs() {
        let spec = QuasiSumSpec::new(
            ScalarFn::exp(1.0, 0.0).unwrap(),
            vec![ScalarFn::log(0.2, 0.0).unwrap(), ScalarFn::log(0.3, 0.0).unwrap(), ScalarFn::log(0.5, 0.0).unwrap()],
        )
        .unwrap();
        for p in unit_box(3).log_uniform_samples(20, 1) {
            let det = hessian_det_quasisum(&spec, &p).unwrap();
            assert!(det.abs() < 1e-14, "{det}");
        }
    }

    #[test]
    fn hessian_det_affine_outer_with_linear_inner() {
        let spec = QuasiSumSpec::new(
            ScalarFn::affine(2.0, 1.0).unwrap(),
            vec![ScalarFn::affine(1.0, 0.0).unwrap(), ScalarFn::power(1.0, 3.0, 0.0).unwrap()],
        )
        .unwrap();
        assert_eq!(hessian_det_quasisum(&spec, &[1.3, 0.7]).unwrap(), 0.0);
    }

    #[test]
    fn quasi_sum_representations_agree() {
        let b = DomainBox::cube(0.5, 2.0, 2).unwrap();
        let fams = vec![
            build_cobb_douglas(1.5, vec![0.3, 0.9]).unwrap(),
            build_acms(2.0, vec![0.7, 1.4], -1.3, 1.7).unwrap(),
            build_ratio(ScalarFn::power(2.0, 1.5, 0.3).unwrap(), &b).unwrap(),
            build_ratio(ScalarFn::log(0.5, 1.0).unwrap(), &b).unwrap(),
            build_ratio(ScalarFn::affine(3.0, -1.0).unwrap(), &b).unwrap(),
        ];
        for f in fams {
            let spec = f.to_quasi_sum().unwrap();
            let qs = FunctionExpr { family: Family::QuasiSum(spec), inputs: 2 };
            for p in b.log_uniform_samples(10, 3) {
                let a = f.value(&p).unwrap();
                let q = qs.value(&p).unwrap();
                assert!((a - q).abs() <= 1e-13 * a.abs().max(1.0), "{f:?}: {a} vs {q}");
                let ja = evaluate_jet(&f, &p).unwrap();
                let jq = evaluate_jet(&qs, &p).unwrap();
                assert!((ja.hessian(0, 1) - jq.hessian(0, 1)).abs() < 1e-11 * ja.hessian(0, 1).abs().max(1.0));
            }
        }
        let e = build_ratio(ScalarFn::exp(1.0, 0.0).unwrap(), &b).unwrap();
        assert!(e.to_quasi_sum().is_none());
    }
}
