//! Problem statement and synthesis report for simultaneous endpoint control
//! of the damped second-order flow.

use serde::{Deserialize, Serialize};

use crate::dynamics::types::PhasePoint;
use crate::error::{CoreError, Result};

/// Largest control entry any synthesis routine is allowed to emit.
pub const CONTROL_MAGNITUDE_CAP: f64 = 1e6;

/// Steer `points` (zero initial velocity) so their states reach `targets`
/// exactly at `t_final`. Targets may repeat; initial points may not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlProblem {
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub t0: f64,
    pub t_final: f64,
}

impl ControlProblem {
    pub fn new(points: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, t0: f64, t_final: f64) -> Self {
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        ControlProblem {
            d,
            points,
            targets,
            t0,
            t_final,
        }
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(CoreError::InvalidSpec(format!(
                "simultaneous momentum control builds its selection planes from \
                 the first two coordinates and needs d >= 2, got d = {}",
                self.d
            )));
        }
        if self.points.is_empty() {
            return Err(CoreError::InvalidSpec("no points to control".into()));
        }
        if self.points.len() != self.targets.len() {
            return Err(CoreError::ShapeMismatch {
                context: "ControlProblem.targets",
                expected: self.points.len(),
                got: self.targets.len(),
            });
        }
        for (i, v) in self.points.iter().chain(self.targets.iter()).enumerate() {
            if v.len() != self.d {
                return Err(CoreError::ShapeMismatch {
                    context: "ControlProblem vector length",
                    expected: self.d,
                    got: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(CoreError::InvalidSpec(format!(
                    "non-finite entry in problem vector {i}"
                )));
            }
        }
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                if self.points[i] == self.points[j] {
                    return Err(CoreError::InvalidSpec(format!(
                        "initial points {i} and {j} coincide; exact simultaneous \
                         control requires pairwise distinct starting states"
                    )));
                }
            }
        }
        if !(self.t_final > self.t0) {
            return Err(CoreError::InvalidSpec(format!(
                "horizon must satisfy t_final > t0, got [{}, {}]",
                self.t0, self.t_final
            )));
        }
        Ok(())
    }

    /// Bounding scale of the data, used to set gap thresholds.
    pub fn scale(&self) -> f64 {
        let m = self
            .points
            .iter()
            .chain(self.targets.iter())
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        1.0 + m
    }
}

/// Diagnostics emitted alongside a synthesized schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisTrace {
    /// One entry per synthesis phase with the constants it committed to.
    pub phase_log: Vec<String>,
    /// Exact endpoints the plan's closed forms predict at t_final.
    pub predicted_endpoints: Vec<PhasePoint>,
    /// Smallest gate distance observed for any point meant to be outside an
    /// active half-space (positive = safely excluded).
    pub min_exclusion_margin: f64,
    /// Largest control entry in the schedule.
    pub max_control_magnitude: f64,
    /// Smallest pairwise gap of the conserved sums x^(1) + p^(1) after the
    /// first-component phase; `None` for single-point problems.
    pub conserved_sum_gap: Option<f64>,
    pub switch_count: usize,
}
