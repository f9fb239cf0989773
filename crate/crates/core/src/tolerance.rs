//! Thresholds used by the verdict logic. Every report echoes these values.

use serde::Serialize;

/// Numerator/denominator threshold of the Hicks quotient, after normalizing
/// each by its point-local scale.
pub const DEGENERACY: f64 = 1e-9;

/// Maximum relative deviation of sampled elasticities from the anchor value
/// for a CES verdict.
pub const CES_CONSTANCY: f64 = 1e-6;

/// Normalized CES identity residual required of a classified family.
pub const CES_RESIDUAL: f64 = 1e-8;

/// `|sigma - 1|` at or below this routes classification to the Cobb-Douglas branch.
pub const SIGMA_ONE: f64 = 1e-6;

/// Equality of power-form exponents against `(sigma - 1) / sigma`.
pub const EXPONENT_MATCH: f64 = 1e-12;

/// Structure residuals of fitted inner functions.
pub const STRUCTURE: f64 = 1e-9;

/// Hadamard-scaled Gauss-Kronecker curvature below which it counts as zero.
pub const GAUSS_KRONECKER_ZERO: f64 = 1e-10;

/// Normalized maximal Riemann component below which the graph counts as flat.
pub const FLATNESS: f64 = 1e-9;

/// Deviation of the Euler quotient from 1 for linear homogeneity.
pub const DEGREE_ONE: f64 = 1e-9;

/// Normalized residual of the outer-function ODEs.
pub const OUTER_ODE: f64 = 1e-9;

/// Monotonicity of scalar components is sampled at this many points per axis.
pub const MONOTONICITY_SAMPLES: usize = 64;

/// Default seed for every sampler.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub degeneracy: f64,
    pub ces_constancy: f64,
    pub ces_residual: f64,
    pub sigma_one: f64,
    pub exponent_match: f64,
    pub structure: f64,
    pub gauss_kronecker_zero: f64,
    pub flatness: f64,
    pub degree_one: f64,
    pub outer_ode: f64,
    pub monotonicity_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degeneracy: DEGENERACY,
            ces_constancy: CES_CONSTANCY,
            ces_residual: CES_RESIDUAL,
            sigma_one: SIGMA_ONE,
            exponent_match: EXPONENT_MATCH,
            structure: STRUCTURE,
            gauss_kronecker_zero: GAUSS_KRONECKER_ZERO,
            flatness: FLATNESS,
            degree_one: DEGREE_ONE,
            outer_ode: OUTER_ODE,
            monotonicity_samples: MONOTONICITY_SAMPLES,
        }
    }
}
