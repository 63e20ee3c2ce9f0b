//! Fixtures shared by the criterion benchmarks.

use tokencycle_core::model::{ScenarioParams, TimeGrid, WasteMode};
use tokencycle_core::montecarlo::{MonteCarloScenario, StochasticInput};
use tokencycle_core::stochastic::{lognormal_from_natural_moments, DistributionSpec};

/// Monte Carlo scenario with every kind of stochastic input and a GBM waste path.
pub fn stochastic_scenario(n_steps: usize) -> MonteCarloScenario {
    let mut scenario = MonteCarloScenario::deterministic(
        ScenarioParams {
            waste_volatility: 0.15,
            ..ScenarioParams::default()
        },
        TimeGrid::new(0.0, 1.0, n_steps).expect("valid grid"),
    );
    scenario.waste_mode = WasteMode::Gbm;
    let inputs = &mut scenario.stochastic_inputs;
    inputs.insert(
        StochasticInput::TokenValue,
        lognormal_from_natural_moments(2.0, 0.8).expect("valid lognormal"),
    );
    inputs.insert(
        StochasticInput::ParticipationBase,
        DistributionSpec::scaled_beta(4.0, 4.0, 0.3, 0.9),
    );
    inputs.insert(StochasticInput::BaseCost, DistributionSpec::normal(1000.0, 50.0));
    inputs.insert(StochasticInput::CarbonCreditPrice, DistributionSpec::normal(1.0, 0.25));
    scenario
}
