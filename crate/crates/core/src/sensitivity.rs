//! Sensitivity of the net benefit to token value, unit cost, carbon credit
//! price and subsidy.
//!
//! The analytic partials hold participation fixed: the token value inside the
//! utility stays at its base value while the token value paid per recycled unit
//! varies ([`SensitivityMode::Reduced`]). [`SensitivityMode::Full`] also moves the
//! utility channel and has no closed form; it is reported numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    efficiency_at, net_benefit_composed, participation_at, recycling_volume, utility_at,
    ScenarioParams, Schedule,
};
use crate::montecarlo::{run_monte_carlo, MonteCarloScenario, MonteCarloSummary, StochasticInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityParameter {
    TokenValue,
    UnitCost,
    CarbonCreditPrice,
    Subsidy,
}

impl SensitivityParameter {
    pub const ALL: [SensitivityParameter; 4] = [
        SensitivityParameter::TokenValue,
        SensitivityParameter::UnitCost,
        SensitivityParameter::CarbonCreditPrice,
        SensitivityParameter::Subsidy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensitivityParameter::TokenValue => "token_value",
            SensitivityParameter::UnitCost => "unit_cost",
            SensitivityParameter::CarbonCreditPrice => "carbon_credit_price",
            SensitivityParameter::Subsidy => "subsidy",
        }
    }

    /// Current value of the parameter at time `t`.
    pub fn base_value(self, t: f64, params: &ScenarioParams) -> Result<f64> {
        Ok(match self {
            SensitivityParameter::TokenValue => params.token_value_at(t)?,
            SensitivityParameter::UnitCost => params.unit_cost,
            SensitivityParameter::CarbonCreditPrice => params.carbon_credit_price,
            SensitivityParameter::Subsidy => params.subsidy_at(t),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityMode {
    /// Participation held fixed, every recycled unit earns carbon credits.
    Reduced,
    /// Participation held fixed, carbon credits on the qualifying fraction only.
    Composed,
    /// Token value also moves utility and therefore participation.
    Full,
}

/// Net benefit at `t` under linear waste with `parameter` set to `value`.
pub fn net_benefit_at(
    t: f64,
    params: &ScenarioParams,
    parameter: SensitivityParameter,
    value: f64,
    mode: SensitivityMode,
) -> Result<f64> {
    let base_token_value = params.token_value_at(t)?;
    let moves = |p: SensitivityParameter| parameter == p;

    let utility_token_value = if moves(SensitivityParameter::TokenValue) && mode == SensitivityMode::Full {
        value
    } else {
        base_token_value
    };
    let utility = utility_at(utility_token_value, params.social_signal_at(t), params);
    let participation = participation_at(t, utility, params).value;
    let recycled = recycling_volume(
        participation,
        efficiency_at(t, params).value,
        params.linear_waste_at(t),
    );

    let mut p = params.clone();
    if mode == SensitivityMode::Reduced {
        p.qualifying_fraction = 1.0;
    }
    let mut token_value = base_token_value;
    let mut subsidy = params.subsidy_at(t);
    match parameter {
        SensitivityParameter::TokenValue => token_value = value,
        SensitivityParameter::UnitCost => p.unit_cost = value,
        SensitivityParameter::CarbonCreditPrice => p.carbon_credit_price = value,
        SensitivityParameter::Subsidy => subsidy = value,
    }
    Ok(net_benefit_composed(recycled, token_value, subsidy, &p))
}

/// Recycled volume at `t` under linear waste.
pub fn recycled_at(t: f64, params: &ScenarioParams) -> Result<f64> {
    crate::model::evaluate_point(t, params, params.linear_waste_at(t)).map(|p| p.recycling_volume)
}

/// Partial derivative with respect to the token value: the recycled volume.
pub fn partial_wrt_token_value(t: f64, params: &ScenarioParams) -> Result<f64> {
    recycled_at(t, params)
}

/// Partial derivative with respect to the unit cost: minus the recycled volume.
pub fn partial_wrt_unit_cost(t: f64, params: &ScenarioParams) -> Result<f64> {
    recycled_at(t, params).map(|r| -r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarbonCreditPartial {
    /// Every recycled unit qualifies.
    pub reduced: f64,
    /// Only the qualifying fraction earns credits.
    pub composed: f64,
}

pub fn partial_wrt_carbon_credit(t: f64, params: &ScenarioParams) -> Result<CarbonCreditPartial> {
    let r = recycled_at(t, params)?;
    Ok(CarbonCreditPartial {
        reduced: r,
        composed: params.qualifying_fraction * r,
    })
}

pub fn partial_wrt_subsidy(_t: f64, _params: &ScenarioParams) -> f64 {
    1.0
}

/// Default central-difference step.
pub fn default_step(x: f64) -> f64 {
    1e-6f64.max(1e-6 * x.abs())
}

/// `(f(x + h) - f(x - h)) / 2h`, with `h` defaulting to [`default_step`].
pub fn central_difference<F>(f: F, x: f64, h: Option<f64>) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = h.unwrap_or_else(|| default_step(x));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Usage(format!("step must be > 0, got {h}")));
    }
    let (hi, lo) = (f(x + h)?, f(x - h)?);
    if !(hi.is_finite() && lo.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite evaluation near x = {x}: f(x+h) = {hi}, f(x-h) = {lo}"
        )));
    }
    Ok((hi - lo) / (2.0 * h))
}

/// Step for checking the analytic partials. Each checked function is affine in
/// its parameter, so truncation error vanishes for any step; a step at least as
/// large as the function value keeps the cancellation error near one ulp.
pub fn verification_step(x: f64, fx: f64) -> f64 {
    let h = 1f64.max(x.abs()).max(fx.abs());
    // power of two so that h itself carries no rounding
    2f64.powi(h.log2().ceil() as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub parameter: SensitivityParameter,
    pub mode: SensitivityMode,
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
    pub step: f64,
    pub t: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

/// Checks one analytic partial against a central difference of the
/// matching-mode net benefit.
pub fn check_partial(
    t: f64,
    params: &ScenarioParams,
    parameter: SensitivityParameter,
    mode: SensitivityMode,
) -> Result<SensitivityReport> {
    let analytic = match (parameter, mode) {
        (SensitivityParameter::TokenValue, _) => partial_wrt_token_value(t, params)?,
        (SensitivityParameter::UnitCost, _) => partial_wrt_unit_cost(t, params)?,
        (SensitivityParameter::CarbonCreditPrice, SensitivityMode::Composed) => {
            partial_wrt_carbon_credit(t, params)?.composed
        }
        (SensitivityParameter::CarbonCreditPrice, _) => partial_wrt_carbon_credit(t, params)?.reduced,
        (SensitivityParameter::Subsidy, _) => partial_wrt_subsidy(t, params),
    };
    let x = parameter.base_value(t, params)?;
    let f = |v: f64| net_benefit_at(t, params, parameter, v, mode);
    let step = verification_step(x, f(x)?);
    let finite_difference = central_difference(f, x, Some(step))?;
    Ok(SensitivityReport {
        parameter,
        mode,
        analytic,
        finite_difference,
        relative_error: relative_error(analytic, finite_difference),
        step,
        t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub t: f64,
    pub params: ScenarioParams,
    pub rows: Vec<SensitivityReport>,
    /// Numerical total derivative in the token value, including its effect on
    /// participation through utility.
    pub token_value_total_derivative: f64,
}

/// All four partials in reduced mode plus the qualifying-fraction carbon partial.
pub fn sensitivity_table(t: f64, params: &ScenarioParams) -> Result<SensitivityTable> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Usage(format!("evaluation time must be >= 0, got {t}")));
    }
    params.validate().map_err(|e| e.within("params"))?;
    let mut rows = Vec::with_capacity(5);
    for parameter in SensitivityParameter::ALL {
        rows.push(check_partial(t, params, parameter, SensitivityMode::Reduced)?);
        if parameter == SensitivityParameter::CarbonCreditPrice {
            rows.push(check_partial(t, params, parameter, SensitivityMode::Composed)?);
        }
    }
    let tv = params.token_value_at(t)?;
    let token_value_total_derivative = central_difference(
        |v| net_benefit_at(t, params, SensitivityParameter::TokenValue, v, SensitivityMode::Full),
        tv,
        None,
    )?;
    Ok(SensitivityTable {
        t,
        params: params.clone(),
        rows,
        token_value_total_derivative,
    })
}

/// Scalars a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    UnitCost,
    CarbonCreditPrice,
    /// Constant subsidy level replacing the subsidy schedule.
    Subsidy,
    /// Mean of the token-value distribution, or the fixed token value.
    TokenValueMean,
    EnvAlpha,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::UnitCost,
        SweepParameter::CarbonCreditPrice,
        SweepParameter::Subsidy,
        SweepParameter::TokenValueMean,
        SweepParameter::EnvAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::UnitCost => "unit_cost",
            SweepParameter::CarbonCreditPrice => "carbon_credit_price",
            SweepParameter::Subsidy => "subsidy",
            SweepParameter::TokenValueMean => "token_value_mean",
            SweepParameter::EnvAlpha => "env_alpha",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown sweep parameter '{name}'; valid names: {}",
                    Self::valid_names()
                ))
            })
    }

    /// Copy of `scenario` with this parameter set to `value`. A stochastic input
    /// targeting the same parameter has its distribution mean moved instead.
    pub fn apply(self, scenario: &MonteCarloScenario, value: f64) -> Result<MonteCarloScenario> {
        let mut s = scenario.clone();
        let shift_input = |input: StochasticInput, s: &mut MonteCarloScenario| -> Result<bool> {
            match s.stochastic_inputs.get(&input) {
                Some(spec) => {
                    let moved = spec.with_mean(value)?;
                    s.stochastic_inputs.insert(input, moved);
                    Ok(true)
                }
                None => Ok(false),
            }
        };
        match self {
            SweepParameter::UnitCost => s.params.unit_cost = value,
            SweepParameter::EnvAlpha => s.params.env_alpha = value,
            SweepParameter::Subsidy => s.params.subsidy_schedule = Schedule::constant(value),
            SweepParameter::CarbonCreditPrice => {
                s.params.carbon_credit_price = value;
                shift_input(StochasticInput::CarbonCreditPrice, &mut s)?;
            }
            SweepParameter::TokenValueMean => {
                if !shift_input(StochasticInput::TokenValue, &mut s)? {
                    s.params.token_value = Some(value);
                }
            }
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: MonteCarloSummary,
}

/// One Monte Carlo run per value, all with the same master seed so that the
/// runs share random numbers.
pub fn sweep(
    scenario: &MonteCarloScenario,
    parameter: SweepParameter,
    values: &[f64],
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let varied = parameter.apply(scenario, value)?;
            let run = run_monte_carlo(&varied, n_trials, master_seed, workers)?;
            Ok(SweepRow {
                value,
                summary: run.summary,
            })
        })
        .collect()
}
