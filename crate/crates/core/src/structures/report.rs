use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tolerance for purely algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Tolerance for identities involving one differentiation (connections).
pub const CONNECTION_TOL: f64 = 1e-6;
/// Tolerance for quantities obtained by numerical integration.
pub const INTEGRATED_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    ErratumCandidate,
}

/// What the caller expects of a check; decides whether a verdict is a hard
/// failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    /// The identity is known not to hold (negative control).
    Fail,
    /// Measurement only; exceeding the tolerance marks an erratum candidate.
    Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub conventions: BTreeMap<String, String>,
    pub samples: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub expectation: Expectation,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, residuals: &Residuals, tolerance: f64, seed: u64) -> Self {
        let max = residuals.max();
        let verdict = if max <= tolerance { Verdict::Pass } else { Verdict::Fail };
        let mut notes = Vec::new();
        if residuals.non_finite > 0 {
            notes.push(format!("{} non-finite residuals", residuals.non_finite));
        }
        CheckReport {
            name: name.into(),
            conventions: BTreeMap::new(),
            samples: residuals.count,
            seed,
            max_residual: max,
            mean_residual: residuals.mean(),
            tolerance,
            verdict,
            expectation: Expectation::Pass,
            notes,
        }
    }

    pub fn with_convention(mut self, key: &str, value: &str) -> Self {
        self.conventions.insert(key.into(), value.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn expecting(mut self, e: Expectation) -> Self {
        self.expectation = e;
        if e == Expectation::Probe && self.verdict == Verdict::Fail {
            self.verdict = Verdict::ErratumCandidate;
        }
        self
    }

    /// Re-judges the report against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = if self.max_residual <= tolerance {
            Verdict::Pass
        } else if self.expectation == Expectation::Probe {
            Verdict::ErratumCandidate
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn is_hard_failure(&self) -> bool {
        match self.expectation {
            Expectation::Pass => self.verdict != Verdict::Pass,
            Expectation::Fail => self.verdict == Verdict::Pass,
            Expectation::Probe => false,
        }
    }
}

/// Running max/mean of nonnegative residuals. Non-finite values count as
/// `f64::MAX` so that they fail every tolerance and still serialize.
#[derive(Debug, Clone, Default)]
pub struct Residuals {
    max: f64,
    sum: f64,
    count: usize,
    non_finite: usize,
}

impl Residuals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: f64) {
        let r = if r.is_finite() {
            r.abs()
        } else {
            self.non_finite += 1;
            f64::MAX
        };
        self.max = self.max.max(r);
        self.sum += r;
        self.count += 1;
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = f64>) {
        for r in rs {
            self.push(r);
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sum / self.count as f64).min(f64::MAX)
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl FromIterator<f64> for Residuals {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut r = Residuals::new();
        r.extend(iter);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_tolerance() {
        let r: Residuals = [1e-10, 2e-10].into_iter().collect();
        let rep = CheckReport::new("c", &r, 1e-9, 1);
        assert!(rep.passed());
        assert!(!rep.with_tolerance(1e-11).passed());
    }

    #[test]
    fn probe_never_hard_fails() {
        let r: Residuals = [1.0].into_iter().collect();
        let rep = CheckReport::new("c", &r, 1e-9, 1).expecting(Expectation::Probe);
        assert_eq!(rep.verdict, Verdict::ErratumCandidate);
        assert!(!rep.is_hard_failure());
        let neg = CheckReport::new("c", &r, 1e-9, 1).expecting(Expectation::Fail);
        assert!(!neg.is_hard_failure());
    }

    #[test]
    fn nan_is_a_failure() {
        let r: Residuals = [0.0, f64::NAN].into_iter().collect();
        assert_eq!(r.max(), f64::MAX);
        assert!(!CheckReport::new("c", &r, 1.0, 0).passed());
    }
}
