//! Verdict reports shared by the condition checkers and probes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    StructuralPass,
    Vacuous,
}

impl Verdict {
    /// Pass in either the sampled or the structural sense.
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::StructuralPass)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::StructuralPass => "structural-pass",
            Verdict::Vacuous => "vacuous",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Concrete evidence for a failed condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Secondary data, e.g. the offending velocity or image point.
    pub data: Option<Vec<f64>>,
    pub violated: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub id: String,
    pub verdict: Verdict,
    /// Points at which the condition was evaluated.
    pub checked: usize,
    pub point: Option<Vec<f64>>,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl ConditionEntry {
    pub fn new(id: impl Into<String>, verdict: Verdict) -> ConditionEntry {
        ConditionEntry { id: id.into(), verdict, checked: 0, point: None, witness: None, notes: Vec::new() }
    }

    pub fn note(mut self, n: impl Into<String>) -> ConditionEntry {
        self.notes.push(n.into());
        self
    }
}

/// Outcome of one condition at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Pass,
    Fail(Witness),
    Inconclusive(Vec<f64>),
    Vacuous,
}

/// Folds point outcomes: any fail wins (first witness kept), then
/// inconclusive, then pass; all-vacuous or no points is vacuous.
pub fn aggregate(id: &str, outcomes: Vec<PointOutcome>) -> ConditionEntry {
    let mut e = ConditionEntry::new(id, Verdict::Vacuous);
    e.checked = outcomes.len();
    let mut inconclusive = None;
    let mut passed = 0;
    let mut vacuous = 0;
    for o in outcomes {
        match o {
            PointOutcome::Fail(w) => {
                if e.witness.is_none() {
                    e.point = Some(w.point.clone());
                    e.witness = Some(w);
                }
                e.verdict = Verdict::Fail;
            }
            PointOutcome::Inconclusive(p) => {
                inconclusive.get_or_insert(p);
            }
            PointOutcome::Pass => passed += 1,
            PointOutcome::Vacuous => vacuous += 1,
        }
    }
    if e.verdict != Verdict::Fail {
        if let Some(p) = inconclusive {
            e.verdict = Verdict::Inconclusive;
            e.point = Some(p);
        } else if passed > 0 {
            e.verdict = Verdict::Pass;
        }
    }
    if vacuous > 0 {
        e.notes.push(format!("{vacuous} of {} points vacuous", e.checked));
    }
    e
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn push(&mut self, e: ConditionEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, id: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn verdict(&self, id: &str) -> Option<Verdict> {
        self.get(id).map(|e| e.verdict)
    }

    /// True when no entry failed.
    pub fn no_failures(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.passed())
    }

    /// One line per entry: `id verdict [witness]`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!("{:<8} {:<16} checked={}", e.id, e.verdict.as_str(), e.checked));
            if let Some(w) = &e.witness {
                s.push_str(&format!(" witness={:?} violated=\"{}\" margin={:.3e}", w.point, w.violated, w.margin));
            }
            for n in &e.notes {
                s.push_str(&format!(" | {n}"));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> Witness {
        Witness { point: vec![1.0], data: None, violated: "x".into(), margin: 0.5 }
    }

    #[test]
    fn aggregation_order() {
        assert_eq!(aggregate("a", vec![]).verdict, Verdict::Vacuous);
        assert_eq!(aggregate("a", vec![PointOutcome::Vacuous, PointOutcome::Pass]).verdict, Verdict::Pass);
        let e = aggregate("a", vec![PointOutcome::Inconclusive(vec![0.0]), PointOutcome::Pass]);
        assert_eq!(e.verdict, Verdict::Inconclusive);
        let e = aggregate("a", vec![PointOutcome::Inconclusive(vec![0.0]), PointOutcome::Fail(w())]);
        assert_eq!(e.verdict, Verdict::Fail);
        assert_eq!(e.witness.unwrap().point, vec![1.0]);
    }
}
