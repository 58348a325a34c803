use thiserror::Error;

/// One MGF argument that fell outside the finiteness domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainViolation {
    /// Which moment term the argument belongs to, e.g. `E[e^{3X1+X2}]`.
    pub label: String,
    pub argument: f64,
}

#[derive(Debug, Error)]
pub enum SpreadError {
    #[error("invalid input: {field}: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("mgf argument(s) outside domain (-inf, {bound}): {}", fmt_violations(.violations))]
    MgfDomain {
        bound: f64,
        violations: Vec<DomainViolation>,
    },

    #[error("raw moment of order {order} unavailable: {reason}")]
    MomentsUnavailable { order: usize, reason: String },

    #[error("series did not converge after {terms} terms (last term {last_term:e})")]
    SeriesDivergence { terms: usize, last_term: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error_estimate:e}")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
    },

    #[error("moment matching failed: best residual inside the mgf domain {best_residual:e} over {starts} starts ({rejected_outside_domain} root(s) rejected outside the domain)")]
    NoSolution {
        best_residual: f64,
        starts: usize,
        /// Roots that fit the moments but need mgf arguments past the domain.
        rejected_outside_domain: usize,
    },

    #[error("mgf kind mismatch: matched with {matched:?}, priced with {priced:?}")]
    MgfKindMismatch {
        matched: crate::laws::MgfKind,
        priced: crate::laws::MgfKind,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

fn fmt_violations(v: &[DomainViolation]) -> String {
    v.iter()
        .map(|d| format!("{}={}", d.label, d.argument))
        .collect::<Vec<_>>()
        .join(", ")
}

impl SpreadError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        SpreadError::InvalidInput {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(bound: f64, label: impl Into<String>, argument: f64) -> Self {
        SpreadError::MgfDomain {
            bound,
            violations: vec![DomainViolation {
                label: label.into(),
                argument,
            }],
        }
    }
}

pub type Result<T> = std::result::Result<T, SpreadError>;
