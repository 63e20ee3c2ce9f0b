use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    PiecewiseConstant,
    Linear,
}

/// A time-indexed input series. Evaluation before the first or after the last
/// breakpoint returns the nearest endpoint value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub interpolation: Interpolation,
    pub breakpoints: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            interpolation: Interpolation::PiecewiseConstant,
            breakpoints: vec![(0.0, value)],
        }
    }

    pub fn new(interpolation: Interpolation, breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let schedule = Schedule {
            interpolation,
            breakpoints,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Checks structural invariants. Field paths in errors are relative to the schedule.
    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::config("breakpoints", "at least one breakpoint is required"));
        }
        for (i, &(t, v)) in self.breakpoints.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::config(
                    format!("breakpoints[{i}]"),
                    format!("time and value must be finite, got ({t}, {v})"),
                ));
            }
            if i > 0 && t <= self.breakpoints[i - 1].0 {
                return Err(Error::config(
                    format!("breakpoints[{i}]"),
                    format!(
                        "times must be strictly increasing ({t} follows {})",
                        self.breakpoints[i - 1].0
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Requires every breakpoint value to be strictly positive. Both interpolation
    /// modes then yield positive values everywhere.
    pub fn validate_positive(&self) -> Result<()> {
        self.validate()?;
        match self.breakpoints.iter().position(|&(_, v)| v <= 0.0) {
            Some(i) => Err(Error::config(
                format!("breakpoints[{i}]"),
                format!(
                    "value must be > 0 (got {} at t = {})",
                    self.breakpoints[i].1, self.breakpoints[i].0
                ),
            )),
            None => Ok(()),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let points = &self.breakpoints;
        let (first, last) = (points[0], points[points.len() - 1]);
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        // index of the last breakpoint with time <= t
        let k = points.partition_point(|&(bt, _)| bt <= t) - 1;
        let (t0, v0) = points[k];
        match self.interpolation {
            Interpolation::PiecewiseConstant => v0,
            Interpolation::Linear => {
                let (t1, v1) = points[k + 1];
                v0 + (t - t0) / (t1 - t0) * (v1 - v0)
            }
        }
    }

    /// Adds `delta` to every breakpoint value.
    pub fn shifted(&self, delta: f64) -> Self {
        Schedule {
            interpolation: self.interpolation,
            breakpoints: self.breakpoints.iter().map(|&(t, v)| (t, v + delta)).collect(),
        }
    }
}
