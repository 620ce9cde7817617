//! Report records for estimate checks: JSON lines and CSV summaries.

use super::sample::SampleConfig;
use serde::{Deserialize, Serialize};

/// Outcome of one empirical estimate check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub check_id: String,
    pub params: String,
    pub n_samples: usize,
    /// Largest observed LHS/RHS ratio (the empirical constant).
    pub c_emp: f64,
    /// The sample attaining it.
    pub argmax: Option<SampleConfig>,
    /// Relative change of `c_emp` under doubled quadrature order and 4x
    /// samples; `None` when the refinement pass was skipped.
    pub drift: Option<f64>,
    /// Number of violated exact inequalities (must be zero for exact
    /// checks; unused, zero, for purely empirical ones).
    pub violations: u64,
}

impl EstimateReport {
    /// Whether this report satisfies the acceptance gate: no violations,
    /// finite constant, and (when measured) drift under 10%.
    pub fn passes(&self) -> bool {
        self.violations == 0
            && self.c_emp.is_finite()
            && self.drift.map_or(true, |d| d < 0.10)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub const CSV_HEADER: &'static str =
        "check_id,params,n_samples,c_emp,drift,violations,pass";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.17e},{},{},{}",
            self.check_id,
            self.params,
            self.n_samples,
            self.c_emp,
            self.drift.map_or("".to_string(), |d| format!("{d:.17e}")),
            self.violations,
            self.passes()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_pass_logic() {
        let r = EstimateReport {
            check_id: "growth".to_string(),
            params: "kernel=heat".to_string(),
            n_samples: 100,
            c_emp: 1.5,
            argmax: None,
            drift: Some(0.02),
            violations: 0,
        };
        assert!(r.passes());
        let back: EstimateReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.check_id, "growth");
        assert_eq!(back.c_emp, 1.5);

        let bad = EstimateReport {
            drift: Some(0.5),
            ..r.clone()
        };
        assert!(!bad.passes());
        let worse = EstimateReport {
            violations: 3,
            drift: None,
            ..r
        };
        assert!(!worse.passes());
    }
}
