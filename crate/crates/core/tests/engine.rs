use tokencycle_core::comparison::{calibrate_tokenized, CalibrationBounds, TokenizedComparativeConfig};
use tokencycle_core::montecarlo::{run_monte_carlo, StochasticInput};
use tokencycle_core::scenario::{ScenarioBody, ScenarioFile};
use tokencycle_core::stochastic::DistributionSpec;
use tokencycle_core::{MonteCarloScenario, ScenarioParams, TimeGrid, WasteMode};

fn scenario() -> MonteCarloScenario {
    let mut s = MonteCarloScenario::deterministic(ScenarioParams::default(), TimeGrid::new(0.0, 0.5, 12).unwrap());
    s.waste_mode = WasteMode::Gbm;
    s.params.waste_volatility = 0.2;
    s.stochastic_inputs
        .insert(StochasticInput::TokenValue, DistributionSpec::normal(2.0, 0.5));
    s.stochastic_inputs
        .insert(StochasticInput::BaseCost, DistributionSpec::normal(1000.0, 100.0));
    s
}

#[test]
fn worker_count_does_not_change_results() {
    let s = scenario();
    let one = run_monte_carlo(&s, 777, 3, 1).unwrap();
    for workers in [2, 3, 8] {
        let many = run_monte_carlo(&s, 777, 3, workers).unwrap();
        assert_eq!(one.outcomes, many.outcomes);
        assert_eq!(one.summary, many.summary);
    }
}

#[test]
fn prefix_of_a_longer_run_is_identical() {
    let s = scenario();
    let short = run_monte_carlo(&s, 50, 8, 2).unwrap();
    let long = run_monte_carlo(&s, 500, 8, 4).unwrap();
    assert_eq!(short.outcomes[..], long.outcomes[..50]);
}

#[test]
fn calibration_hits_boundary_target() {
    let base = TokenizedComparativeConfig {
        mean_multiplier: 1.0,
        ..Default::default()
    };
    let cal = calibrate_tokenized(&base, -40_000.0, CalibrationBounds::default(), 500, 1, 2).unwrap();
    assert!(cal.converged);
    assert_eq!((cal.token_value_sd, cal.elasticity), (0.0, 0.0));
    assert!(cal.trace.len() >= 21 * 21);
}

#[test]
fn scenario_round_trip_through_text() {
    let file = ScenarioFile::new(ScenarioBody::MonteCarlo(scenario()), Default::default());
    let text = file.to_canonical_string();
    let back = ScenarioFile::parse(&text).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.to_canonical_string(), text);
}
