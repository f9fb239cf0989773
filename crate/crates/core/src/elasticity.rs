//! Hicks elasticity of substitution and constant-elasticity detection.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::autodiff::{evaluate_jet, Jet2};
use crate::domain::{check_point, DomainBox, Sampling};
use crate::error::{Error, Result};
use crate::prodfun::{FunctionExpr, QuasiSumSpec};
use crate::tolerance::{CES_CONSTANCY, DEGENERACY};

/// Value of the Hicks quotient at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elasticity {
    Finite(f64),
    /// Denominator vanishes, numerator does not (perfect substitutes).
    Infinite,
    /// Numerator and denominator both vanish.
    Degenerate,
}

impl Elasticity {
    pub fn finite(self) -> Option<f64> {
        match self {
            Elasticity::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Elasticity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Elasticity::Finite(v) => s.serialize_f64(*v),
            Elasticity::Infinite => s.serialize_str("infinite"),
            Elasticity::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for k in [i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, inputs: n });
        }
    }
    if i == j {
        return Err(Error::InvalidParameter(format!("elasticity pair needs two distinct inputs, got ({i}, {j})")));
    }
    Ok(())
}

fn first_partials(jet: &Jet2, i: usize, j: usize) -> Result<(f64, f64)> {
    let (fi, fj) = (jet.gradient()[i], jet.gradient()[j]);
    if fi == 0.0 {
        return Err(Error::VanishingPartial { index: i });
    }
    if fj == 0.0 {
        return Err(Error::VanishingPartial { index: j });
    }
    Ok((fi, fj))
}

/// Hicks elasticity from an already evaluated jet. The pair is put in
/// ascending order first so that `H_ij` and `H_ji` are bitwise equal.
pub fn hicks_from_jet(jet: &Jet2, point: &[f64], i: usize, j: usize) -> Result<Elasticity> {
    check_pair(jet.dim(), i, j)?;
    let (i, j) = (i.min(j), i.max(j));
    let (fi, fj) = first_partials(jet, i, j)?;
    let (xi, xj) = (point[i], point[j]);
    let (fii, fij, fjj) = (jet.hessian(i, i), jet.hessian(i, j), jet.hessian(j, j));

    let num = 1.0 / (xi * fi) + 1.0 / (xj * fj);
    let num_scale = 1.0 / (xi * fi.abs()) + 1.0 / (xj * fj.abs());
    let den = -fii / (fi * fi) + 2.0 * fij / (fi * fj) - fjj / (fj * fj);
    let den_scale = fii.abs() / (fi * fi) + 2.0 * fij.abs() / (fi * fj).abs() + fjj.abs() / (fj * fj);

    let num_small = num.abs() < DEGENERACY * num_scale;
    let den_small = den.abs() <= DEGENERACY * den_scale;
    Ok(match (num_small, den_small) {
        (true, true) => Elasticity::Degenerate,
        (false, true) => Elasticity::Infinite,
        _ => Elasticity::Finite(num / den),
    })
}

/// Hicks elasticity of substitution of input `i` with respect to input `j`.
pub fn hicks_elasticity(expr: &FunctionExpr, point: &[f64], i: usize, j: usize) -> Result<Elasticity> {
    check_pair(expr.inputs(), i, j)?;
    let jet = evaluate_jet(expr, point)?;
    hicks_from_jet(&jet, point, i, j)
}

/// Signed, scale-normalized residual of the cross-multiplied CES identity
///
/// `2 f_i f_j f_ij - f_j^2 f_ii - f_i^2 f_jj = (x_i f_i + x_j f_j) f_i f_j / (sigma x_i x_j)`.
///
/// The normalizer is the largest of `|LHS|`, `|RHS|`, `f^4 / (x_i x_j)` and
/// the summed magnitudes of the individual terms, so exact cancellation on
/// both sides reports rounding-level values.
pub fn ces_residual(expr: &FunctionExpr, point: &[f64], sigma: f64, i: usize, j: usize) -> Result<f64> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be finite and nonzero, got {sigma}")));
    }
    check_pair(expr.inputs(), i, j)?;
    let jet = evaluate_jet(expr, point)?;
    Ok(ces_residual_from_jet(&jet, point, sigma, i, j))
}

pub(crate) fn ces_residual_from_jet(jet: &Jet2, point: &[f64], sigma: f64, i: usize, j: usize) -> f64 {
    let (fi, fj) = (jet.gradient()[i], jet.gradient()[j]);
    let (fii, fij, fjj) = (jet.hessian(i, i), jet.hessian(i, j), jet.hessian(j, j));
    let (xi, xj) = (point[i], point[j]);
    let f = jet.value();

    let cross = 2.0 * fi * fj * fij;
    let left = fj * fj * fii;
    let right = fi * fi * fjj;
    let lhs = cross - left - right;
    let euler = xi * fi + xj * fj;
    let rhs = euler * fi * fj / (sigma * xi * xj);

    let lhs_terms = cross.abs() + left.abs() + right.abs();
    let rhs_terms = ((xi * fi).abs() + (xj * fj).abs()) * (fi * fj).abs() / (sigma.abs() * xi * xj);
    let scale = lhs.abs().max(rhs.abs()).max(f.powi(4) / (xi * xj)).max(lhs_terms).max(rhs_terms);
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

fn separated_term(h: &crate::prodfun::ScalarFn, x: f64, sigma: f64, index: usize) -> Result<f64> {
    let (_, d1, d2) = h.derivatives(x)?;
    if d1 == 0.0 {
        return Err(Error::VanishingPartial { index });
    }
    Ok(1.0 / (x * d1) + sigma * d2 / (d1 * d1))
}

/// `s_i(x_i) + s_j(x_j)` with `s_k = 1 / (x_k h_k') + sigma h_k'' / h_k'^2`,
/// from the closed-form derivatives of the inner functions.
pub fn quasisum_separated_residual(spec: &QuasiSumSpec, point: &[f64], sigma: f64, i: usize, j: usize) -> Result<f64> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be finite and nonzero, got {sigma}")));
    }
    check_pair(spec.inputs(), i, j)?;
    check_point(point, spec.inputs())?;
    Ok(separated_term(&spec.inner[i], point[i], sigma, i)? + separated_term(&spec.inner[j], point[j], sigma, j)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CesVerdict {
    RegularCES,
    DegenerateCES,
    NotCES,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairValue {
    pub i: usize,
    pub j: usize,
    pub value: Elasticity,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleElasticities {
    pub point: Vec<f64>,
    /// In the order of [`ElasticityReport::pair_order`].
    pub values: Vec<Elasticity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElasticityReport {
    pub anchor: Vec<f64>,
    /// Every pair evaluated at the anchor point.
    pub pairs: Vec<PairValue>,
    pub sigma_estimate: Option<f64>,
    pub verdict: CesVerdict,
    /// Largest relative deviation of a finite sampled value from the estimate.
    pub max_deviation: f64,
    pub finite_count: usize,
    pub infinite_count: usize,
    pub degenerate_count: usize,
    pub pair_order: Vec<(usize, usize)>,
    pub samples: Vec<SampleElasticities>,
}

pub(crate) fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

fn pair_values(expr: &FunctionExpr, point: &[f64], pairs: &[(usize, usize)]) -> Result<Vec<Elasticity>> {
    let jet = evaluate_jet(expr, point)?;
    pairs.iter().map(|&(i, j)| hicks_from_jet(&jet, point, i, j)).collect()
}

/// Samples the Hicks elasticity of every pair over `domain` and decides
/// whether it is one nonzero constant.
pub fn detect_ces(expr: &FunctionExpr, domain: &DomainBox, sampling: Sampling) -> Result<ElasticityReport> {
    if sampling.count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {}", sampling.count)));
    }
    let n = expr.inputs();
    if n < 2 {
        return Err(Error::InvalidParameter("elasticity needs at least two inputs".into()));
    }
    domain.check_dim(n)?;
    let pair_order = all_pairs(n);

    let anchor = domain.center();
    let anchor_values = pair_values(expr, &anchor, &pair_order)?;
    let points = domain.log_uniform_samples(sampling.count, sampling.seed);
    let samples: Vec<SampleElasticities> = points
        .into_par_iter()
        .map(|point| {
            let values = pair_values(expr, &point, &pair_order)?;
            Ok(SampleElasticities { point, values })
        })
        .collect::<Result<_>>()?;

    let sigma_estimate = anchor_values[0]
        .finite()
        .or_else(|| samples.iter().find_map(|s| s.values[0].finite()))
        .or_else(|| samples.iter().flat_map(|s| s.values.iter()).find_map(|v| v.finite()))
        .filter(|s| *s != 0.0);

    let all_values = || samples.iter().flat_map(|s| s.values.iter()).chain(anchor_values.iter());
    let finite_count = all_values().filter(|v| matches!(v, Elasticity::Finite(_))).count();
    let infinite_count = all_values().filter(|v| matches!(v, Elasticity::Infinite)).count();
    let degenerate_count = all_values().filter(|v| matches!(v, Elasticity::Degenerate)).count();
    let max_deviation = match sigma_estimate {
        Some(s) => all_values().filter_map(|v| v.finite()).map(|v| (v - s).abs() / s.abs()).fold(0.0, f64::max),
        None => 0.0,
    };

    let verdict = if finite_count == 0 && infinite_count == 0 {
        CesVerdict::DegenerateCES
    } else if sigma_estimate.is_some() && infinite_count == 0 && degenerate_count == 0 && max_deviation <= CES_CONSTANCY
    {
        CesVerdict::RegularCES
    } else {
        CesVerdict::NotCES
    };

    let pairs = pair_order.iter().zip(&anchor_values).map(|(&(i, j), &value)| PairValue { i, j, value }).collect();
    Ok(ElasticityReport {
        anchor,
        pairs,
        sigma_estimate,
        verdict,
        max_deviation,
        finite_count,
        infinite_count,
        degenerate_count,
        pair_order,
        samples,
    })
}
