use thiserror::Error;

/// Errors raised by the model, simulator and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A parameter lies outside the domain of the operation.
    #[error("{field}: {reason} (got {value})")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// Inputs are individually valid but violate a joint contract.
    #[error("contract violated: {0}")]
    Contract(String),
    /// Not enough (or inconsistent) data for the requested statistic.
    #[error("insufficient data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn domain(field: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::Domain {
        field,
        value,
        reason,
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(domain(field, value, "must be finite and > 0"))
    }
}

pub(crate) fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain(field, value, "must be finite"))
    }
}

pub(crate) fn unit_interval(field: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(domain(field, value, "must lie in [0, 1]"))
    }
}
