//! JSON function-spec documents consumed by the command line.
//!
//! ```json
//! {"type": "acms", "gamma": 1, "a": [1, 1], "rho": 0.5, "d": 1}
//! {"type": "quasi_sum",
//!  "outer": {"form": "power", "coefficient": 1, "exponent": 2},
//!  "inner": [{"form": "power", "coefficient": 2, "exponent": 0.5},
//!            {"form": "log", "coefficient": 1, "shift": 0.5}]}
//! ```

use serde::{Deserialize, Serialize};

use super::{build_acms, build_cobb_douglas, build_quasi_sum, build_ratio, FunctionExpr, QuasiSumSpec, ScalarFn};
use crate::domain::DomainBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    CobbDouglas { gamma: f64, alpha: Vec<f64> },
    Acms { gamma: f64, a: Vec<f64>, rho: f64, d: f64 },
    QuasiSum { outer: ScalarFn, inner: Vec<ScalarFn> },
    Ratio { outer: ScalarFn },
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("function spec: {e}")))
    }

    pub fn inputs(&self) -> usize {
        match self {
            FunctionSpec::CobbDouglas { alpha, .. } => alpha.len(),
            FunctionSpec::Acms { a, .. } => a.len(),
            FunctionSpec::QuasiSum { inner, .. } => inner.len(),
            FunctionSpec::Ratio { .. } => 2,
        }
    }

    /// Builds the expression; quasi-sum and ratio specs are validated on `domain`.
    pub fn build(&self, domain: &DomainBox) -> Result<FunctionExpr> {
        match self {
            FunctionSpec::CobbDouglas { gamma, alpha } => build_cobb_douglas(*gamma, alpha.clone()),
            FunctionSpec::Acms { gamma, a, rho, d } => build_acms(*gamma, a.clone(), *rho, *d),
            FunctionSpec::QuasiSum { outer, inner } => {
                build_quasi_sum(QuasiSumSpec::new(*outer, inner.clone())?, domain)
            }
            FunctionSpec::Ratio { outer } => build_ratio(*outer, domain),
        }
    }
}
