use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// One checked bound or identity: computed left side against the stated right side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl VerificationReport {
    /// Passes when `lhs <= rhs * (1 + 1e-9)`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ok = lhs.is_finite() && lhs <= rhs * (1.0 + 1e-9);
        Self {
            name: name.into(),
            residual: lhs,
            bound: rhs,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            note: String::new(),
        }
    }

    /// Strict version used where equality would be a failure.
    pub fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ok = lhs.is_finite() && lhs < rhs;
        Self {
            name: name.into(),
            residual: lhs,
            bound: rhs,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            note: String::new(),
        }
    }

    pub fn inapplicable(name: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            residual: f64::NAN,
            bound: f64::NAN,
            verdict: Verdict::NotApplicable,
            note: why.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// True unless the verdict is `Fail`.
    pub fn ok(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}
