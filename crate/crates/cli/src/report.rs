//! Reports: per-check records, JSON and CSV rendering.

use serde::Serialize;

use crate::scenario::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// Passes when value ≤ tolerance.
    #[serde(rename = "<=")]
    AtMost,
    /// Passes when value > tolerance.
    #[serde(rename = ">")]
    Exceeds,
    /// Recorded against the tolerance but never asserted.
    #[serde(rename = "reported")]
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub subject: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, subject: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, subject, value, tolerance, Relation::AtMost)
    }

    pub fn exceeds(name: &str, subject: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, subject, value, threshold, Relation::Exceeds)
    }

    pub fn reported(name: &str, subject: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, subject, value, tolerance, Relation::Reported)
    }

    /// A categorical outcome; `value` is the deciding residual.
    pub fn outcome(name: &str, subject: &str, expected: &str, observed: &str, value: f64, tolerance: f64) -> Self {
        let mut c = Self::new(name, subject, value, tolerance, Relation::Reported);
        c.passed = expected == observed;
        c.expected = Some(expected.into());
        c.observed = Some(observed.into());
        c
    }

    fn new(name: &str, subject: &str, value: f64, tolerance: f64, relation: Relation) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::Exceeds => value > tolerance,
            Relation::Reported => true,
        };
        Self {
            name: name.into(),
            subject: subject.into(),
            value,
            tolerance,
            relation,
            expected: None,
            observed: None,
            detail: None,
            passed,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Distance to failure in decades: positive means passing with room,
    /// infinite for an exact zero under an upper bound.
    pub fn margin(&self) -> Option<f64> {
        let decades = |a: f64, b: f64| (a.max(1e-300)).log10() - (b.max(1e-300)).log10();
        match self.relation {
            Relation::AtMost if self.value == 0.0 => Some(f64::INFINITY),
            Relation::AtMost => Some(decades(self.tolerance, self.value)),
            Relation::Exceeds => Some(decades(self.value, self.tolerance)),
            Relation::Reported => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub task: String,
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskReport {
    pub fn new(task: String, kind: &str, checks: Vec<Check>, diagnostics: Vec<String>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            task,
            kind: kind.into(),
            passed,
            checks,
            diagnostics,
            error: None,
        }
    }

    pub fn failed(task: String, kind: &str, error: String) -> Self {
        Self {
            task,
            kind: kind.into(),
            passed: false,
            checks: vec![],
            diagnostics: vec![],
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub fd_check: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_override: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn new(
        scenario: String,
        fd_check: bool,
        tolerance_override: Option<f64>,
        diagnostics: Vec<String>,
        tasks: Vec<TaskReport>,
    ) -> Self {
        let passed = tasks.iter().all(|t| t.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            fd_check,
            tolerance_override,
            passed,
            diagnostics,
            tasks,
        }
    }

    /// Failing checks (and errored tasks) as (task, check).
    pub fn failures(&self) -> Vec<(&TaskReport, Option<&Check>)> {
        let mut out = vec![];
        for t in &self.tasks {
            if t.error.is_some() {
                out.push((t, None));
            }
            out.extend(t.checks.iter().filter(|c| !c.passed).map(|c| (t, Some(c))));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per check: task, kind, check, subject, value, tolerance,
    /// relation, passed, expected, observed, detail.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record([
            "task",
            "kind",
            "check",
            "subject",
            "value",
            "tolerance",
            "relation",
            "passed",
            "expected",
            "observed",
            "detail",
        ])
        .expect("in-memory write");
        for t in &self.tasks {
            if let Some(e) = &t.error {
                w.write_record([&t.task, &t.kind, "error", "", "", "", "", "false", "", "", e])
                    .expect("in-memory write");
            }
            for c in &t.checks {
                let rel = match c.relation {
                    Relation::AtMost => "<=",
                    Relation::Exceeds => ">",
                    Relation::Reported => "reported",
                };
                w.write_record([
                    t.task.as_str(),
                    &t.kind,
                    &c.name,
                    &c.subject,
                    &format!("{:e}", c.value),
                    &format!("{:e}", c.tolerance),
                    rel,
                    if c.passed { "true" } else { "false" },
                    c.expected.as_deref().unwrap_or(""),
                    c.observed.as_deref().unwrap_or(""),
                    c.detail.as_deref().unwrap_or(""),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::at_most("a", "x", 1e-9, 1e-8).passed);
        assert!(!Check::at_most("a", "x", 1e-7, 1e-8).passed);
        assert!(!Check::at_most("a", "x", f64::NAN, 1e-8).passed);
        assert!(Check::exceeds("a", "x", 1e-3, 1e-6).passed);
        assert!(Check::reported("a", "x", 5.0, 1e-9).passed);
        assert!(!Check::outcome("v", "x", "equivalent", "not-equivalent", 0.5, 1e-8).passed);
    }

    #[test]
    fn margins_in_decades() {
        let c = Check::at_most("a", "x", 1e-10, 1e-8);
        assert!((c.margin().unwrap() - 2.0).abs() < 1e-12);
        let c = Check::exceeds("a", "x", 1e-3, 1e-6);
        assert!((c.margin().unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(Check::reported("a", "x", 1.0, 1.0).margin(), None);
        assert_eq!(Check::at_most("a", "x", 0.0, 0.0).margin(), Some(f64::INFINITY));
    }

    #[test]
    fn csv_rows() {
        let t = TaskReport::new(
            "t".into(),
            "thm1",
            vec![Check::at_most("intertwining", "hardy", 1e-12, 1e-8)],
            vec![],
        );
        let r = Report::new("s".into(), false, None, vec![], vec![t]);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("t,thm1,intertwining,hardy,1e-12,1e-8,<=,true"));
    }
}
