//! Residual reports shared by every certification routine.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detail {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Detail {
    /// A residual that passes when `residual <= tolerance`; NaN never passes.
    pub fn check(label: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Detail {
            label: label.into(),
            residual: Some(residual),
            tolerance: Some(tolerance),
            passed: Some(residual <= tolerance),
            point: None,
            note: None,
        }
    }

    pub fn flag(label: impl Into<String>, passed: bool, note: impl Into<String>) -> Self {
        Detail {
            label: label.into(),
            residual: None,
            tolerance: None,
            passed: Some(passed),
            point: None,
            note: Some(note.into()),
        }
    }

    pub fn note(label: impl Into<String>, note: impl Into<String>) -> Self {
        Detail {
            label: label.into(),
            residual: None,
            tolerance: None,
            passed: None,
            point: None,
            note: Some(note.into()),
        }
    }

    /// A measured value with no pass/fail meaning of its own.
    pub fn value(label: impl Into<String>, value: f64) -> Self {
        Detail { label: label.into(), residual: Some(value), tolerance: None, passed: None, point: None, note: None }
    }

    pub fn at(mut self, point: &[f64]) -> Self {
        self.point = Some(point.to_vec());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub max_residual: f64,
    pub points_sampled: usize,
    pub details: Vec<Detail>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, points_sampled: usize) -> Self {
        CheckReport { check: check.into(), passed: true, max_residual: 0.0, points_sampled, details: Vec::new() }
    }

    /// Adds a detail and folds it into `passed` and `max_residual`.
    pub fn push(&mut self, detail: Detail) -> &mut Self {
        if detail.passed == Some(false) {
            self.passed = false;
        }
        if let (Some(r), Some(_)) = (detail.residual, detail.tolerance) {
            if r.is_nan() {
                self.max_residual = f64::NAN;
            } else if !self.max_residual.is_nan() {
                self.max_residual = self.max_residual.max(r);
            }
        }
        self.details.push(detail);
        self
    }

    pub fn with(mut self, detail: Detail) -> Self {
        self.push(detail);
        self
    }

    pub fn detail(&self, label: &str) -> Option<&Detail> {
        self.details.iter().find(|d| d.label == label)
    }

    /// Residual recorded under `label`, panicking if absent. Meant for tests and examples.
    pub fn residual(&self, label: &str) -> f64 {
        self.detail(label)
            .and_then(|d| d.residual)
            .unwrap_or_else(|| panic!("report `{}` has no residual `{label}`", self.check))
    }
}

/// Running maximum of an absolute residual with the point where it occurred.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaxTracker {
    pub max: f64,
    pub at: Option<Vec<f64>>,
}

impl MaxTracker {
    pub fn observe(&mut self, value: f64, point: &[f64]) {
        let v = value.abs();
        if (v > self.max || v.is_nan() || self.at.is_none()) && !self.max.is_nan() {
            self.max = if v.is_nan() { f64::NAN } else { v.max(self.max) };
            self.at = Some(point.to_vec());
        }
    }

    pub fn detail(&self, label: impl Into<String>, tolerance: f64) -> Detail {
        let d = Detail::check(label, self.max, tolerance);
        match &self.at {
            Some(p) => d.at(p),
            None => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_folds_details() {
        let mut r = CheckReport::new("demo", 3);
        r.push(Detail::check("a", 1e-12, 1e-9));
        r.push(Detail::note("info", "text"));
        assert!(r.passed);
        r.push(Detail::check("b", 2e-9, 1e-9));
        assert!(!r.passed);
        assert_eq!(r.max_residual, 2e-9);
        assert_eq!(r.residual("a"), 1e-12);
    }

    #[test]
    fn boundary_tie_passes_and_nan_fails() {
        assert_eq!(Detail::check("x", 1e-9, 1e-9).passed, Some(true));
        assert_eq!(Detail::check("x", f64::NAN, 1.0).passed, Some(false));
    }

    #[test]
    fn tracker_keeps_argmax() {
        let mut t = MaxTracker::default();
        t.observe(-0.5, &[1.0]);
        t.observe(0.25, &[2.0]);
        assert_eq!(t.max, 0.5);
        assert_eq!(t.at, Some(vec![1.0]));
    }
}
