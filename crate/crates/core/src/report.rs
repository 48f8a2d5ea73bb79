use serde::Serialize;

/// Outcome of checking one identity at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity_name: String,
    pub parameters: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: String,
}

impl IdentityReport {
    pub fn new(
        identity_name: impl Into<String>,
        parameters: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let abs_diff = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel_diff = if scale > 0.0 { abs_diff / scale } else { 0.0 };
        let pass = abs_diff <= tolerance || rel_diff <= tolerance;
        Self {
            identity_name: identity_name.into(),
            parameters: parameters.into(),
            lhs,
            rhs,
            abs_diff,
            rel_diff,
            tolerance,
            pass,
            diagnostics: String::new(),
        }
    }

    /// Report a comparison on absolute discrepancy only.
    pub fn absolute(
        identity_name: impl Into<String>,
        parameters: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let mut r = Self::new(identity_name, parameters, lhs, rhs, tolerance);
        r.pass = r.abs_diff <= tolerance;
        r
    }

    pub fn with_diagnostics(mut self, text: impl Into<String>) -> Self {
        let text = text.into();
        if self.diagnostics.is_empty() {
            self.diagnostics = text;
        } else {
            self.diagnostics.push_str("; ");
            self.diagnostics.push_str(&text);
        }
        self
    }

    /// Mark as failed regardless of the numbers, e.g. on a numerical error.
    pub fn failed(mut self, why: impl Into<String>) -> Self {
        self.pass = false;
        self.with_diagnostics(why)
    }

    pub fn error(
        identity_name: impl Into<String>,
        parameters: impl Into<String>,
        tolerance: f64,
        err: &crate::Error,
    ) -> Self {
        Self {
            identity_name: identity_name.into(),
            parameters: parameters.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_diff: f64::NAN,
            rel_diff: f64::NAN,
            tolerance,
            pass: false,
            diagnostics: err.to_string(),
        }
    }
}
