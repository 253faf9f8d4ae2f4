use serde::{Deserialize, Serialize};

/// One asserted relation between computed numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    /// `"=="` or `"<="`.
    pub relation: String,
    pub rhs: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { name: name.into(), lhs, relation: "==".into(), rhs, tol, passed: (lhs - rhs).abs() <= tol }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { name: name.into(), lhs, relation: "<=".into(), rhs, tol, passed: lhs <= rhs + tol }
    }

    pub fn truth(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), lhs: v, relation: "==".into(), rhs: 1.0, tol: 0.0, passed: ok }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
