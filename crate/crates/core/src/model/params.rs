use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::error::{Error, Result};

fn default_qualifying_fraction() -> f64 {
    1.0
}

/// Every coefficient of the recycling model plus the exogenous schedules.
///
/// Token supply (the denominator of the market token price) and the social
/// reputation signal (an input to utility) are kept as separate schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Saturation participation rate.
    pub p_max: f64,
    pub adoption_rate: f64,
    /// Utility weight of the token reward.
    pub alpha_financial: f64,
    /// Utility weight of the social signal.
    pub alpha_social: f64,
    pub eta_0: f64,
    pub eta_growth: f64,
    pub w_0: f64,
    pub waste_drift: f64,
    pub waste_volatility: f64,
    /// Linear growth of waste used when waste evolves deterministically.
    pub waste_linear_growth: f64,
    pub base_cost: f64,
    pub unit_cost: f64,
    /// Environmental benefit per recycled unit.
    pub env_alpha: f64,
    pub carbon_credit_price: f64,
    /// Share of recycled volume that earns carbon credits.
    #[serde(default = "default_qualifying_fraction")]
    pub qualifying_fraction: f64,
    pub subsidy_schedule: Schedule,
    pub demand_schedule: Schedule,
    pub token_supply_schedule: Schedule,
    pub social_signal_schedule: Schedule,
    /// Fixed token value. When set it replaces the demand/supply market price.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_value: Option<f64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            p_max: 0.8,
            adoption_rate: 0.5,
            alpha_financial: 0.1,
            alpha_social: 0.1,
            eta_0: 0.5,
            eta_growth: 0.02,
            w_0: 1000.0,
            waste_drift: 0.02,
            waste_volatility: 0.0,
            waste_linear_growth: 20.0,
            base_cost: 1000.0,
            unit_cost: 2.0,
            env_alpha: 1.0,
            carbon_credit_price: 1.0,
            qualifying_fraction: 1.0,
            subsidy_schedule: Schedule::constant(0.0),
            demand_schedule: Schedule::constant(100.0),
            token_supply_schedule: Schedule::constant(50.0),
            social_signal_schedule: Schedule::constant(1.0),
            token_value: None,
        }
    }
}

fn check(ok: bool, field: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message()))
    }
}

impl ScenarioParams {
    /// Validates all invariants. Field paths are relative to the params object.
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("p_max", self.p_max),
            ("adoption_rate", self.adoption_rate),
            ("alpha_financial", self.alpha_financial),
            ("alpha_social", self.alpha_social),
            ("eta_0", self.eta_0),
            ("eta_growth", self.eta_growth),
            ("w_0", self.w_0),
            ("waste_drift", self.waste_drift),
            ("waste_volatility", self.waste_volatility),
            ("waste_linear_growth", self.waste_linear_growth),
            ("base_cost", self.base_cost),
            ("unit_cost", self.unit_cost),
            ("env_alpha", self.env_alpha),
            ("carbon_credit_price", self.carbon_credit_price),
            ("qualifying_fraction", self.qualifying_fraction),
        ];
        for (name, v) in scalars {
            check(v.is_finite(), name, || format!("must be finite, got {v}"))?;
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check(unit(self.p_max), "p_max", || {
            format!("must be in [0,1], got {}", self.p_max)
        })?;
        check(unit(self.eta_0), "eta_0", || {
            format!("must be in [0,1], got {}", self.eta_0)
        })?;
        check(unit(self.qualifying_fraction), "qualifying_fraction", || {
            format!("must be in [0,1], got {}", self.qualifying_fraction)
        })?;
        check(self.adoption_rate >= 0.0, "adoption_rate", || {
            format!("must be >= 0, got {}", self.adoption_rate)
        })?;
        check(self.waste_volatility >= 0.0, "waste_volatility", || {
            format!("must be >= 0, got {}", self.waste_volatility)
        })?;
        check(self.w_0 > 0.0, "w_0", || format!("must be > 0, got {}", self.w_0))?;
        check(self.base_cost >= 0.0, "base_cost", || {
            format!("must be >= 0, got {}", self.base_cost)
        })?;
        check(self.unit_cost >= 0.0, "unit_cost", || {
            format!("must be >= 0, got {}", self.unit_cost)
        })?;
        if let Some(tv) = self.token_value {
            check(tv.is_finite(), "token_value", || format!("must be finite, got {tv}"))?;
        }
        self.subsidy_schedule
            .validate()
            .map_err(|e| e.within("subsidy_schedule"))?;
        self.demand_schedule
            .validate()
            .map_err(|e| e.within("demand_schedule"))?;
        self.token_supply_schedule
            .validate_positive()
            .map_err(|e| e.within("token_supply_schedule"))?;
        self.social_signal_schedule
            .validate()
            .map_err(|e| e.within("social_signal_schedule"))?;
        Ok(())
    }

    /// Token value at `t`: the fixed override if present, else demand / supply.
    pub fn token_value_at(&self, t: f64) -> Result<f64> {
        match self.token_value {
            Some(v) => Ok(v),
            None => super::token_value_from_market(
                self.demand_schedule.value_at(t),
                self.token_supply_schedule.value_at(t),
            )
            .map_err(|message| Error::Domain { t, message }),
        }
    }

    pub fn subsidy_at(&self, t: f64) -> f64 {
        self.subsidy_schedule.value_at(t)
    }

    pub fn social_signal_at(&self, t: f64) -> f64 {
        self.social_signal_schedule.value_at(t)
    }

    /// Waste under deterministic linear growth.
    pub fn linear_waste_at(&self, t: f64) -> f64 {
        self.w_0 + self.waste_linear_growth * t
    }
}

/// Uniform grid `t_start + k * dt` for `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid {
            t_start,
            dt,
            n_steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.t_start.is_finite() && self.t_start >= 0.0, "t_start", || {
            format!("must be finite and >= 0, got {}", self.t_start)
        })?;
        check(self.dt.is_finite() && self.dt > 0.0, "dt", || {
            format!("must be > 0, got {}", self.dt)
        })?;
        check(self.n_steps >= 1, "n_steps", || "must be >= 1".to_string())
    }

    /// Number of grid points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WasteMode {
    #[default]
    Linear,
    Gbm,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate() {
        ScenarioParams::default().validate().unwrap();
    }

    #[test]
    fn p_max_out_of_range_is_named() {
        let params = ScenarioParams {
            p_max: 1.5,
            ..Default::default()
        };
        let err = params.validate().unwrap_err().within("params");
        let msg = err.to_string();
        assert!(msg.starts_with("params.p_max"), "{msg}");
        assert!(msg.contains("[0,1]"), "{msg}");
    }

    #[test]
    fn zero_supply_breakpoint_is_named() {
        let mut params = ScenarioParams::default();
        params.token_supply_schedule.breakpoints = vec![(0.0, 10.0), (3.0, 0.0)];
        let msg = params.validate().unwrap_err().to_string();
        assert!(msg.starts_with("token_supply_schedule.breakpoints[1]"), "{msg}");
    }

    #[test]
    fn grid_points() {
        let g = TimeGrid::new(1.0, 0.5, 4).unwrap();
        let ts: Vec<f64> = g.times().collect();
        assert_eq!(ts, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(g.t_end(), 3.0);
        assert!(TimeGrid::new(0.0, 0.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }
}
