use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hazard rate undefined for {dist} at x = {x}")]
    UndefinedHazard { dist: String, x: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("infinite mean for {0}")]
    InfiniteMean(String),

    /// The increment does not drift to minus infinity.
    #[error("invalid drift: mean increment {mean} is not negative")]
    InvalidDrift { mean: f64 },

    #[error("no positive root of the cumulant generating function for {0}")]
    NoRoot(String),

    #[error("unsupported distribution family for {0}")]
    UnsupportedFamily(String),

    #[error("step limit of {limit} exceeded ({context})")]
    StepLimit { limit: u64, context: String },

    #[error("horizon {horizon} is below the required minimum {required}")]
    HorizonTooSmall { horizon: u64, required: u64 },

    #[error("operation requires independent perturbations")]
    UnsupportedDependence,

    #[error("truncation remainder cannot be bounded: {0}")]
    TruncationUnbounded(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("Neumann series did not converge after {terms} terms (last term norm {last_norm:e})")]
    NonConvergence { terms: usize, last_norm: f64 },

    #[error("model not applicable: {0}")]
    Inapplicable(String),

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("no plateau found: {0}")]
    NoPlateau(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{}", join_errors(.0))]
    Config(Vec<Error>),
}

fn join_errors(errors: &[Error]) -> String {
    let parts: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
    format!(
        "{} configuration errors: {}",
        errors.len(),
        parts.join("; ")
    )
}

impl Error {
    /// True for errors that mean the model falls outside the conditions an
    /// operation needs (drift, moment, hazard gates), as opposed to misuse.
    pub fn is_applicability(&self) -> bool {
        if let Error::Config(errors) = self {
            return !errors.is_empty() && errors.iter().all(Error::is_applicability);
        }
        matches!(
            self,
            Error::InvalidDrift { .. }
                | Error::NoRoot(_)
                | Error::Divergent(_)
                | Error::InfiniteMean(_)
                | Error::UnsupportedFamily(_)
                | Error::UnsupportedDependence
                | Error::TruncationUnbounded(_)
                | Error::Inapplicable(_)
                | Error::ConditionViolated(_)
                | Error::UndefinedHazard { .. }
        )
    }
}
