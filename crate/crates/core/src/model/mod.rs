//! Deterministic recycling-incentive equations.
//!
//! The chain is: efficiency and utility drive participation, participation
//! times efficiency times waste gives the recycled volume, and the volume feeds
//! token revenue, environmental benefit and operational cost. Net benefit is
//! revenue plus benefit minus cost, with the subsidy entering once through the
//! cost term.

mod params;
mod schedule;
mod trajectory;

pub use params::{ScenarioParams, TimeGrid, WasteMode};
pub use schedule::{Interpolation, Schedule};
pub use trajectory::{evaluate_point, evaluate_trajectory, ClampFlags, TrajectoryPoint};

use crate::error::{Error, Result};

/// A fraction together with whether it had to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}

impl Clamped {
    fn unit(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Clamped {
            value,
            clamped: value != raw,
        }
    }
}

/// Recycling efficiency `eta_0 + eta_growth * t`, clamped to `[0, 1]`.
pub fn efficiency_at(t: f64, params: &ScenarioParams) -> Clamped {
    Clamped::unit(params.eta_0 + params.eta_growth * t)
}

pub fn utility_at(token_value: f64, social_signal: f64, params: &ScenarioParams) -> f64 {
    params.alpha_financial * token_value + params.alpha_social * social_signal
}

/// Unclamped participation `p_max * (1 - exp(-adoption_rate * t)) * utility`.
pub fn participation_raw(t: f64, utility: f64, params: &ScenarioParams) -> f64 {
    // -expm1(-x) == 1 - exp(-x), exactly 0 at t = 0
    params.p_max * -(-params.adoption_rate * t).exp_m1() * utility
}

/// Participation rate clamped to `[0, 1]`. The raw product exceeds 1 whenever
/// utility is large enough.
pub fn participation_at(t: f64, utility: f64, params: &ScenarioParams) -> Clamped {
    Clamped::unit(participation_raw(t, utility, params))
}

/// Market token price `demand / supply`.
pub fn token_value_from_market(demand: f64, supply: f64) -> std::result::Result<f64, String> {
    if supply > 0.0 {
        Ok(demand / supply)
    } else {
        Err(format!("token supply must be > 0, got {supply}"))
    }
}

pub fn recycling_volume(participation: f64, efficiency: f64, waste: f64) -> f64 {
    participation * efficiency * waste
}

/// `base_cost + unit_cost * recycled - subsidy`. Negative when the subsidy
/// exceeds the cost.
pub fn operational_cost(recycled: f64, subsidy: f64, params: &ScenarioParams) -> f64 {
    params.base_cost + params.unit_cost * recycled - subsidy
}

/// `env_alpha * R + carbon_credit_price * (q * R)`.
pub fn environmental_benefit(recycled: f64, params: &ScenarioParams) -> f64 {
    let credited = params.qualifying_fraction * recycled;
    params.env_alpha * recycled + params.carbon_credit_price * credited
}

pub fn token_revenue(recycled: f64, token_value: f64) -> f64 {
    recycled * token_value
}

/// Canonical net benefit: token revenue + environmental benefit - operational cost.
pub fn net_benefit_composed(
    recycled: f64,
    token_value: f64,
    subsidy: f64,
    params: &ScenarioParams,
) -> f64 {
    // subsidy added last so that shifting it moves the result by the shift,
    // up to the rounding of this one sum
    let unsubsidized = token_revenue(recycled, token_value) + environmental_benefit(recycled, params)
        - operational_cost(recycled, 0.0, params);
    unsubsidized + subsidy
}

/// Single-expression net benefit with linear waste, unclamped participation and
/// efficiency, and every recycled unit earning carbon credits.
///
/// Agrees with [`net_benefit_composed`] when `qualifying_fraction == 1`, no clamp
/// is active and waste grows linearly.
pub fn net_benefit_closed_form(t: f64, params: &ScenarioParams) -> Result<f64> {
    let token_value = params.token_value_at(t)?;
    let utility = utility_at(token_value, params.social_signal_at(t), params);
    let bracket = participation_raw(t, utility, params)
        * (params.eta_0 + params.eta_growth * t)
        * params.linear_waste_at(t);
    let margin = token_value + params.env_alpha + params.carbon_credit_price - params.unit_cost;
    Ok(bracket * margin - params.base_cost + params.subsidy_at(t))
}

/// Token value at which the per-unit margin `Tv + env_alpha + T_c - c_t` is zero.
/// Negative when environmental benefit and credits alone exceed the unit cost.
pub fn break_even_token_value(params: &ScenarioParams) -> f64 {
    params.unit_cost - params.env_alpha - params.carbon_credit_price
}

pub(crate) fn require_finite(t: f64, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            t,
            message: format!("{what} is not finite ({v})"),
        })
    }
}
