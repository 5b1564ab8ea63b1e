use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ExactSection {
    pub value: f64,
    pub tolerance: f64,
    pub truncation_time: f64,
    pub tail_bound: f64,
    pub quadrature_error: f64,
}

impl ExactSection {
    /// Largest value the true ℓ1 norm can take.
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound + self.quadrature_error
    }

    /// Smallest value the true ℓ1 norm can take.
    pub fn lower(&self) -> f64 {
        self.value - self.quadrature_error
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t0: f64,
    pub degree: u32,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSettings {
    pub grid_points: usize,
    pub refine_iterations: usize,
    pub multiplier: String,
    pub sdp_tolerance: f64,
    pub exact_tolerance: f64,
    pub quad_tolerance: f64,
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub system_name: String,
    pub exact: Option<ExactSection>,
    pub star_d1: Option<f64>,
    pub star_d2: Option<f64>,
    pub lower_bound: Option<f64>,
    pub tail_split_rows: Vec<TailRow>,
    pub settings: ReportSettings,
    /// Wall-clock seconds per section.
    pub timings: BTreeMap<String, f64>,
    pub ordering_violations: Vec<String>,
    /// Sections that failed, with their error messages.
    pub errors: BTreeMap<String, String>,
}

impl BoundReport {
    /// Checks `lower ≤ exact ≤ every upper bound`, using the certified
    /// interval of the exact value so quadrature slack is not flagged.
    pub fn check_ordering(&mut self) {
        let mut v = Vec::new();
        if let Some(ex) = &self.exact {
            if let Some(lb) = self.lower_bound {
                if lb > ex.upper() {
                    v.push(format!("lower bound {lb} exceeds exact {}", ex.value));
                }
            }
            for (label, ub) in [("star d=1", self.star_d1), ("star d=2", self.star_d2)] {
                if let Some(ub) = ub {
                    if ub < ex.lower() {
                        v.push(format!("{label} {ub} is below exact {}", ex.value));
                    }
                }
            }
            for row in &self.tail_split_rows {
                if row.total < ex.lower() {
                    v.push(format!(
                        "tail split t0={} d={} total {} is below exact {}",
                        row.t0, row.degree, row.total, ex.value
                    ));
                }
            }
        } else if let Some(lb) = self.lower_bound {
            for (label, ub) in [("star d=1", self.star_d1), ("star d=2", self.star_d2)] {
                if let Some(ub) = ub {
                    if lb > ub {
                        v.push(format!("lower bound {lb} exceeds {label} {ub}"));
                    }
                }
            }
        }
        self.ordering_violations = v;
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut s = String::new();
        let _ = writeln!(s, "{:<14}{}", "system", self.system_name);
        match &self.exact {
            Some(e) => {
                let _ = writeln!(
                    s,
                    "{:<14}{:.6}  (T = {}, tail <= {:.1e}, quad err {:.1e})",
                    "exact", e.value, e.truncation_time, e.tail_bound, e.quadrature_error
                );
            }
            None => {
                let _ = writeln!(s, "{:<14}-", "exact");
            }
        }
        let _ = writeln!(s, "{:<14}{}", "star d=1", opt(self.star_d1));
        let _ = writeln!(s, "{:<14}{}", "star d=2", opt(self.star_d2));
        let _ = writeln!(s, "{:<14}{}", "lower bound", opt(self.lower_bound));
        for row in &self.tail_split_rows {
            let _ = writeln!(
                s,
                "{:<14}t0 = {:<8} d = {}  {:.6}",
                "tail split", row.t0, row.degree, row.total
            );
        }
        for (section, msg) in &self.errors {
            let _ = writeln!(s, "{:<14}{section}: {msg}", "FAILED");
        }
        if self.ordering_violations.is_empty() {
            let _ = writeln!(s, "{:<14}ok", "ordering");
        } else {
            for v in &self.ordering_violations {
                let _ = writeln!(s, "{:<14}{v}", "VIOLATION");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> BoundReport {
        BoundReport {
            system_name: "t".into(),
            exact: Some(ExactSection {
                value: 1.0,
                tolerance: 1e-6,
                truncation_time: 10.0,
                tail_bound: 1e-7,
                quadrature_error: 1e-7,
            }),
            star_d1: Some(1.2),
            star_d2: Some(1.1),
            lower_bound: Some(0.9),
            tail_split_rows: vec![TailRow {
                t0: 1.0,
                degree: 1,
                total: 1.05,
            }],
            settings: ReportSettings {
                grid_points: 64,
                refine_iterations: 40,
                multiplier: "full".into(),
                sdp_tolerance: 1e-8,
                exact_tolerance: 1e-6,
                quad_tolerance: 1e-10,
                dt: 1e-3,
                horizon: 5.0,
            },
            timings: BTreeMap::new(),
            ordering_violations: Vec::new(),
            errors: BTreeMap::new(),
        }
    }

    #[test]
    fn consistent_report_passes() {
        let mut r = report();
        r.check_ordering();
        assert!(r.ordering_violations.is_empty());
        assert!(r.to_table().contains("ordering      ok"));
    }

    #[test]
    fn each_violation_is_flagged() {
        let mut r = report();
        r.lower_bound = Some(1.5);
        r.star_d2 = Some(0.8);
        r.tail_split_rows[0].total = 0.5;
        r.check_ordering();
        assert_eq!(r.ordering_violations.len(), 3);
        assert!(r.to_table().contains("VIOLATION"));
    }

    #[test]
    fn quadrature_slack_is_not_a_violation() {
        let mut r = report();
        r.star_d2 = Some(1.0 - 5e-8);
        r.check_ordering();
        assert!(r.ordering_violations.is_empty());
    }
}
