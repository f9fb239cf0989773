//! Classification of quasi-sum production functions with constant elasticity
//! of substitution, and sampled checks of the curvature characterizations.
//!
//! A quasi-sum with constant elasticity `sigma` is one of
//!
//! * homothetic ACMS: `F(sum c_i x_i^((sigma-1)/sigma))`, `sigma != 1`;
//! * homothetic Cobb-Douglas: `F(prod x_i^alpha_i)`, i.e. log inner functions;
//! * the two-input ratio form `F(x_2 / x_1)`, whose Hicks quotient is 0/0.
//!
//! Matching works on the closed forms of the inner [`ScalarFn`]s after
//! dropping their additive shifts.

use rayon::prelude::*;
use serde::Serialize;

use crate::autodiff::evaluate_jet;
use crate::domain::{DomainBox, Sampling};
use crate::elasticity::{all_pairs, ces_residual_from_jet, detect_ces, CesVerdict, ElasticityReport};
use crate::error::{Error, Result};
use crate::geometry::GraphGeometry;
use crate::prodfun::{FunctionExpr, QuasiSumSpec, ScalarFn, ScalarForm};
use crate::tolerance::{
    Tolerances, CES_RESIDUAL, DEGREE_ONE, EXPONENT_MATCH, FLATNESS, GAUSS_KRONECKER_ZERO, OUTER_ODE, SIGMA_ONE,
    STRUCTURE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuasiSumCase {
    HomotheticACMS,
    HomotheticCobbDouglas,
    RatioTwoInput,
    NotCES,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    /// Largest `|ces_residual|` over samples and pairs.
    pub ces: f64,
    /// Largest deviation of the inner functions from the fitted normal form;
    /// absent when no normal form could be fitted.
    pub structure: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationResult {
    pub case: QuasiSumCase,
    pub ces_verdict: CesVerdict,
    pub sigma: Option<f64>,
    /// `c_i` for ACMS, `alpha_i` for Cobb-Douglas, the two log coefficients
    /// for the ratio form.
    pub fitted_inner_parameters: Vec<f64>,
    /// Separation constant `k` of the ratio form per unit of `sigma - 1`:
    /// with inner functions `-c ln x_1` and `c ln x_2`, `k = (sigma - 1) / c`,
    /// and `sigma` is not identifiable from the Hicks quotient.
    pub separation_constant_k: Option<f64>,
    pub residuals: Residuals,
}

impl ClassificationResult {
    fn not_ces(ces_verdict: CesVerdict, sigma: Option<f64>, ces: f64, structure: Option<f64>) -> Self {
        Self {
            case: QuasiSumCase::NotCES,
            ces_verdict,
            sigma,
            fitted_inner_parameters: Vec::new(),
            separation_constant_k: None,
            residuals: Residuals { ces, structure },
        }
    }
}

/// Sigma values used for the CES residual of a degenerate (0/0) family.
const DEGENERATE_PROBE_SIGMAS: [f64; 3] = [-2.0, 1.0, 3.0];

fn max_ces_residual(expr: &FunctionExpr, report: &ElasticityReport, sigmas: &[f64]) -> Result<f64> {
    let pairs = all_pairs(expr.inputs());
    let per_point: Vec<f64> = report
        .samples
        .par_iter()
        .map(|s| {
            let jet = evaluate_jet(expr, &s.point)?;
            Ok(sigmas
                .iter()
                .flat_map(|&sigma| pairs.iter().map(move |&(i, j)| (sigma, i, j)))
                .map(|(sigma, i, j)| ces_residual_from_jet(&jet, &s.point, sigma, i, j).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

/// Max over samples of `|x h'(x) / alpha - 1|`; zero exactly for `alpha ln(C x)`.
fn log_structure(h: &ScalarFn, alpha: f64, xs: impl Iterator<Item = f64>) -> Result<f64> {
    xs.map(|x| Ok((x * h.derivative(x)? / alpha - 1.0).abs())).try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))
}

/// Max over samples of `|h'(x) / (c p x^(p-1)) - 1|`.
fn power_structure(h: &ScalarFn, c: f64, p: f64, xs: impl Iterator<Item = f64>) -> Result<f64> {
    xs.map(|x| Ok((h.derivative(x)? / (c * p * x.powf(p - 1.0)) - 1.0).abs()))
        .try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))
}

/// Classifies `F(h_1(x_1) + ... + h_n(x_n))` over `domain`.
///
/// The outer function only has to be strictly monotone: a decreasing `F`
/// composed with `h_i` is the same function as an increasing one composed
/// with `-h_i`.
pub fn classify_quasi_sum(spec: &QuasiSumSpec, domain: &DomainBox, sampling: Sampling) -> Result<ClassificationResult> {
    spec.validate_monotone_on(domain)?;
    let expr = FunctionExpr::quasi_sum_unchecked(spec.clone());
    let report = detect_ces(&expr, domain, sampling)?;
    let n = spec.inputs();
    let coord = |i: usize| report.samples.iter().map(move |s| s.point[i]);

    match report.verdict {
        CesVerdict::NotCES => {
            Ok(ClassificationResult::not_ces(report.verdict, report.sigma_estimate, report.max_deviation, None))
        }
        CesVerdict::RegularCES => {
            let sigma = report.sigma_estimate.expect("regular verdict carries an estimate");
            let ces = max_ces_residual(&expr, &report, &[sigma])?;
            let mut fitted = Vec::with_capacity(n);
            let mut structure = 0.0f64;
            let case = if (sigma - 1.0).abs() <= SIGMA_ONE {
                for (i, h) in spec.inner.iter().enumerate() {
                    if h.form() != ScalarForm::Log {
                        return Ok(ClassificationResult::not_ces(report.verdict, Some(sigma), ces, None));
                    }
                    fitted.push(h.coefficient());
                    structure = structure.max(log_structure(h, h.coefficient(), coord(i))?);
                }
                QuasiSumCase::HomotheticCobbDouglas
            } else {
                let p = (sigma - 1.0) / sigma;
                for (i, h) in spec.inner.iter().enumerate() {
                    match h.exponent() {
                        Some(e) if (e - p).abs() <= EXPONENT_MATCH * p.abs().max(1.0) => {}
                        _ => return Ok(ClassificationResult::not_ces(report.verdict, Some(sigma), ces, None)),
                    }
                    fitted.push(h.coefficient());
                    structure = structure.max(power_structure(h, h.coefficient(), p, coord(i))?);
                }
                QuasiSumCase::HomotheticACMS
            };
            if structure > STRUCTURE || ces > CES_RESIDUAL {
                return Ok(ClassificationResult::not_ces(report.verdict, Some(sigma), ces, Some(structure)));
            }
            Ok(ClassificationResult {
                case,
                ces_verdict: report.verdict,
                sigma: Some(sigma),
                fitted_inner_parameters: fitted,
                separation_constant_k: None,
                residuals: Residuals { ces, structure: Some(structure) },
            })
        }
        CesVerdict::DegenerateCES => {
            let ces = max_ces_residual(&expr, &report, &DEGENERATE_PROBE_SIGMAS)?;
            let (h1, h2) = match spec.inner.as_slice() {
                [h1, h2] if h1.form() == ScalarForm::Log && h2.form() == ScalarForm::Log => (h1, h2),
                _ => return Ok(ClassificationResult::not_ces(report.verdict, None, ces, None)),
            };
            let (c1, c2) = (h1.coefficient(), h2.coefficient());
            if (c1 + c2).abs() > EXPONENT_MATCH * c2.abs() {
                return Ok(ClassificationResult::not_ces(report.verdict, None, ces, None));
            }
            let structure = report
                .samples
                .iter()
                .map(|s| {
                    let a = s.point[0] * h1.derivative(s.point[0])?;
                    let b = s.point[1] * h2.derivative(s.point[1])?;
                    Ok((a + b).abs() / (a.abs() + b.abs()))
                })
                .try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))?;
            if structure > STRUCTURE || ces > CES_RESIDUAL {
                return Ok(ClassificationResult::not_ces(report.verdict, None, ces, Some(structure)));
            }
            Ok(ClassificationResult {
                case: QuasiSumCase::RatioTwoInput,
                ces_verdict: report.verdict,
                sigma: None,
                fitted_inner_parameters: vec![c1, c2],
                separation_constant_k: Some(1.0 / c2),
                residuals: Residuals { ces, structure: Some(structure) },
            })
        }
    }
}

fn normalized_sum(terms: &[f64]) -> f64 {
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / mag
    }
}

/// Normalized residual of `F'(u) = (sigma - 1) u F''(u)`, the condition on
/// the outer function of a homothetic ACMS function for vanishing
/// Gauss-Kronecker curvature.
pub fn acms_outer_ode_residual(outer: &ScalarFn, sigma: f64, u: f64) -> Result<f64> {
    let (_, d1, d2) = outer.derivatives(u)?;
    Ok(normalized_sum(&[d1, -(sigma - 1.0) * u * d2]))
}

/// Normalized residual of `(alpha - 1) F'(u) + alpha u F''(u) = 0`, the
/// condition on the outer function of a homothetic Cobb-Douglas function
/// `F(prod x_i^alpha_i)` with `alpha = sum alpha_i`.
pub fn cobb_douglas_outer_ode_residual(outer: &ScalarFn, alpha: f64, u: f64) -> Result<f64> {
    let (_, d1, d2) = outer.derivatives(u)?;
    Ok(normalized_sum(&[(alpha - 1.0) * d1, alpha * u * d2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    /// Vanishing Gauss-Kronecker curvature.
    T41,
    /// Flat graph.
    T42,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremVerdict {
    Consistent,
    Inconsistent,
    /// The function has constant elasticity but no quasi-sum representation
    /// over the scalar forms, so the family side cannot be decided.
    DegenerateHypothesis,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRow {
    pub point: Vec<f64>,
    pub value: f64,
    pub gauss_kronecker: f64,
    pub gauss_kronecker_scaled: f64,
    pub riemann_max: f64,
    pub flatness_residual: f64,
    /// Euler quotient of `f` minus the outer shift.
    pub euler_degree: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub ces_verdict: CesVerdict,
    pub sigma_estimate: Option<f64>,
    pub max_deviation: f64,
    pub quasi_sum_expressible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometricCheck {
    /// `gauss_kronecker_scaled` for 4.1, `flatness_residual` for 4.2.
    pub quantity: &'static str,
    pub tolerance: f64,
    pub max_residual: f64,
    pub min_residual: f64,
    pub points_within_tolerance: usize,
    pub holds_everywhere: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyCheck {
    pub classification: Option<ClassificationResult>,
    pub max_degree_deviation: Option<f64>,
    pub degree_one: bool,
    /// Residual of the outer-function ODE for the fitted family.
    pub outer_ode_residual: Option<f64>,
    pub outer_ode_holds: Option<bool>,
    /// Linearly homogeneous generalized ACMS or Cobb-Douglas, up to an
    /// additive constant.
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneSidedCheck {
    pub description: &'static str,
    pub holds: bool,
    /// Sample indices violating the implication.
    pub failing_points: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub hypothesis: HypothesisCheck,
    pub geometric: GeometricCheck,
    pub family: FamilyCheck,
    pub forward: OneSidedCheck,
    pub backward: OneSidedCheck,
    pub verdict: TheoremVerdict,
    pub tolerances: Tolerances,
    pub per_point_data: Vec<PointRow>,
}

fn outer_shift(expr: &FunctionExpr) -> f64 {
    expr.to_quasi_sum().map_or(0.0, |q| q.outer.shift())
}

fn point_rows(expr: &FunctionExpr, points: &[Vec<f64>]) -> Result<Vec<PointRow>> {
    let shift = outer_shift(expr);
    points
        .par_iter()
        .map(|p| {
            let jet = evaluate_jet(expr, p)?;
            let g = GraphGeometry::from_jet(p, &jet);
            let euler: f64 = p.iter().zip(jet.gradient()).map(|(x, d)| x * d).sum();
            Ok(PointRow {
                point: p.clone(),
                value: jet.value(),
                gauss_kronecker: g.gauss_kronecker,
                gauss_kronecker_scaled: g.gauss_kronecker_scaled,
                riemann_max: g.riemann_max,
                flatness_residual: g.flatness_residual,
                euler_degree: euler / (jet.value() - shift),
            })
        })
        .collect()
}

fn family_check(
    spec: Option<&QuasiSumSpec>,
    domain: &DomainBox,
    sampling: Sampling,
    rows: &[PointRow],
) -> Result<FamilyCheck> {
    let Some(spec) = spec else {
        return Ok(FamilyCheck {
            classification: None,
            max_degree_deviation: None,
            degree_one: false,
            outer_ode_residual: None,
            outer_ode_holds: None,
            matches: false,
        });
    };
    let class = classify_quasi_sum(spec, domain, sampling)?;
    let max_dev = rows.iter().map(|r| (r.euler_degree - 1.0).abs()).fold(0.0, f64::max);
    let degree_one = max_dev <= DEGREE_ONE;

    let ode = match class.case {
        QuasiSumCase::HomotheticACMS => {
            // exact sigma from the shared inner exponent
            let p = spec.inner[0].exponent().expect("ACMS inner functions are powers");
            let sigma = 1.0 / (1.0 - p);
            let normalized = spec.normalized();
            let r = rows
                .iter()
                .map(|row| {
                    let u = normalized.inner_sum(&row.point)?;
                    let shifted = spec.inner_sum(&row.point)?;
                    let (_, d1, d2) = spec.outer.derivatives(shifted)?;
                    Ok(normalized_sum(&[d1, -(sigma - 1.0) * u * d2]))
                })
                .try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))?;
            Some(r)
        }
        QuasiSumCase::HomotheticCobbDouglas => {
            // in log variables v = ln(prod x^alpha) the ODE reads alpha F'' - F' = 0
            let alpha: f64 = class.fitted_inner_parameters.iter().sum();
            let r = rows
                .iter()
                .map(|row| {
                    let (_, d1, d2) = spec.outer.derivatives(spec.inner_sum(&row.point)?)?;
                    Ok(normalized_sum(&[alpha * d2, -d1]))
                })
                .try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))?;
            Some(r)
        }
        _ => None,
    };
    let family = matches!(class.case, QuasiSumCase::HomotheticACMS | QuasiSumCase::HomotheticCobbDouglas);
    Ok(FamilyCheck {
        matches: family && degree_one,
        classification: Some(class),
        max_degree_deviation: Some(max_dev),
        degree_one,
        outer_ode_holds: ode.map(|r| r <= OUTER_ODE),
        outer_ode_residual: ode,
    })
}

fn verify(theorem: TheoremId, expr: &FunctionExpr, domain: &DomainBox, sampling: Sampling) -> Result<TheoremReport> {
    domain.check_dim(expr.inputs())?;
    let ces = detect_ces(expr, domain, sampling)?;
    if ces.verdict == CesVerdict::NotCES {
        return Err(Error::NotCes);
    }
    let points: Vec<Vec<f64>> = ces.samples.iter().map(|s| s.point.clone()).collect();
    let rows = point_rows(expr, &points)?;
    let spec = expr.to_quasi_sum();
    let family = family_check(spec.as_ref(), domain, sampling, &rows)?;

    let (quantity, tolerance) = match theorem {
        TheoremId::T41 => ("gauss_kronecker_scaled", GAUSS_KRONECKER_ZERO),
        TheoremId::T42 => ("flatness_residual", FLATNESS),
    };
    let residual = |r: &PointRow| match theorem {
        TheoremId::T41 => r.gauss_kronecker_scaled,
        TheoremId::T42 => r.flatness_residual,
    };
    let within: Vec<bool> = rows.iter().map(|r| residual(r) <= tolerance).collect();
    let holds_everywhere = within.iter().all(|&w| w);
    let geometric = GeometricCheck {
        quantity,
        tolerance,
        max_residual: rows.iter().map(residual).fold(0.0, f64::max),
        min_residual: rows.iter().map(residual).fold(f64::INFINITY, f64::min),
        points_within_tolerance: within.iter().filter(|&&w| w).count(),
        holds_everywhere,
    };

    let forward = OneSidedCheck {
        description: "family with degree one implies the geometric property at every sample",
        holds: !family.matches || holds_everywhere,
        failing_points: if family.matches {
            within.iter().enumerate().filter(|(_, &w)| !w).map(|(i, _)| i).collect()
        } else {
            Vec::new()
        },
    };
    let backward = OneSidedCheck {
        description: "geometric property at every sample implies family with degree one",
        holds: !holds_everywhere || family.matches,
        failing_points: if holds_everywhere && !family.matches { (0..rows.len()).collect() } else { Vec::new() },
    };

    let verdict = if spec.is_none() {
        TheoremVerdict::DegenerateHypothesis
    } else if forward.holds && backward.holds {
        TheoremVerdict::Consistent
    } else {
        TheoremVerdict::Inconsistent
    };

    Ok(TheoremReport {
        theorem,
        hypothesis: HypothesisCheck {
            ces_verdict: ces.verdict,
            sigma_estimate: ces.sigma_estimate,
            max_deviation: ces.max_deviation,
            quasi_sum_expressible: spec.is_some(),
        },
        geometric,
        family,
        forward,
        backward,
        verdict,
        tolerances: Tolerances::default(),
        per_point_data: rows,
    })
}

/// Vanishing Gauss-Kronecker curvature on every sample versus membership in
/// the linearly homogeneous ACMS / Cobb-Douglas families.
pub fn verify_theorem_41(expr: &FunctionExpr, domain: &DomainBox, sampling: Sampling) -> Result<TheoremReport> {
    verify(TheoremId::T41, expr, domain, sampling)
}

/// Flat graph (all Riemann components zero) on every sample versus
/// membership in the linearly homogeneous ACMS / Cobb-Douglas families.
pub fn verify_theorem_42(expr: &FunctionExpr, domain: &DomainBox, sampling: Sampling) -> Result<TheoremReport> {
    verify(TheoremId::T42, expr, domain, sampling)
}
