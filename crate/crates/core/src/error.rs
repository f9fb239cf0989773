use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input index {index} out of range for {inputs} inputs")]
    IndexOutOfRange { index: usize, inputs: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid domain box: {0}")]
    InvalidBox(String),

    #[error("monotonicity violation: {reason} at {at}")]
    Monotonicity { reason: String, at: f64 },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("finite-difference step {step} leaves the positive orthant at coordinate {index}")]
    StepLeavesOrthant { step: f64, index: usize },

    #[error("vanishing first partial derivative f_{index} at the evaluation point")]
    VanishingPartial { index: usize },

    #[error("function is not expressible as a quasi-sum with the available scalar forms")]
    NotQuasiSum,

    #[error("hypothesis not satisfiable: function does not have constant elasticity of substitution")]
    NotCes,
}

impl Error {
    /// Input-side errors (bad parameters, points, boxes, specs) as opposed to
    /// failures that only surface while evaluating.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidPoint(_)
                | Error::InvalidBox(_)
                | Error::Monotonicity { .. }
                | Error::StepLeavesOrthant { .. }
                | Error::NotQuasiSum
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidPoint(_) => "invalid_point",
            Error::InvalidBox(_) => "invalid_box",
            Error::Monotonicity { .. } => "monotonicity",
            Error::Domain(_) => "domain",
            Error::StepLeavesOrthant { .. } => "step_leaves_orthant",
            Error::VanishingPartial { .. } => "vanishing_partial",
            Error::NotQuasiSum => "not_quasi_sum",
            Error::NotCes => "not_ces",
        }
    }
}
