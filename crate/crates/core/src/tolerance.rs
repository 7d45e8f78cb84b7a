//! Mixed absolute/relative comparisons and drift statistics.

use serde::Serialize;

use crate::scalar::Real;

/// `|a - b| / (1 + max(|a|, |b|))`.
pub fn mixed_diff<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / (T::one() + a.abs().max(b.abs()))
}

/// `|a - b| <= tol · (1 + max(|a|, |b|))`.
pub fn mixed_close<T: Real>(a: T, b: T, tol: T) -> bool {
    mixed_diff(a, b) <= tol
}

/// Summary of how far a sequence of invariant values moves away from its
/// first entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftStats {
    pub max_drift: f64,
    pub rms_drift: f64,
    /// First step index whose drift exceeds the threshold.
    pub first_violation: Option<usize>,
}

/// Accumulates per-step drift of a fixed set of invariants relative to step 0.
#[derive(Clone, Debug)]
pub struct DriftTracker {
    reference: Vec<f64>,
    threshold: f64,
    max: f64,
    sum_sq: f64,
    count: usize,
    first_violation: Option<usize>,
}

impl DriftTracker {
    pub fn new(reference: Vec<f64>, threshold: f64) -> Self {
        Self { reference, threshold, max: 0.0, sum_sq: 0.0, count: 0, first_violation: None }
    }

    /// Records the invariant values at step `n` and returns that step's drift.
    pub fn record(&mut self, n: usize, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.reference.len());
        let drift = self
            .reference
            .iter()
            .zip(values)
            .map(|(&a, &b)| mixed_diff(a, b))
            .fold(0.0, f64::max);
        self.max = self.max.max(drift);
        self.sum_sq += drift * drift;
        self.count += 1;
        if drift > self.threshold && self.first_violation.is_none() {
            self.first_violation = Some(n);
        }
        drift
    }

    pub fn finish(&self) -> DriftStats {
        DriftStats {
            max_drift: self.max,
            rms_drift: if self.count == 0 { 0.0 } else { (self.sum_sq / self.count as f64).sqrt() },
            first_violation: self.first_violation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_tolerance_scales_with_magnitude() {
        assert!(mixed_close(1e6, 1e6 + 1e-5, 1e-10));
        assert!(!mixed_close(0.0, 1e-9, 1e-10));
        assert_eq!(mixed_diff(2.0f64, 2.0), 0.0);
    }

    #[test]
    fn tracker_reports_max_rms_and_first_violation() {
        let mut t = DriftTracker::new(vec![1.0, 0.0], 0.1);
        t.record(0, &[1.0, 0.0]);
        t.record(1, &[1.0, 0.05]);
        t.record(2, &[1.0, 0.5]);
        let s = t.finish();
        assert!((s.max_drift - 0.5 / 1.5).abs() < 1e-15);
        assert_eq!(s.first_violation, Some(2));
        assert!(s.rms_drift > 0.0 && s.rms_drift < s.max_drift);
    }
}
