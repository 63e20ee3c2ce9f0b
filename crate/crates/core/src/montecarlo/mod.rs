//! Seeded Monte Carlo over the trajectory model.
//!
//! Trial `i` always draws from `derive_stream(master_seed, i)`: channel 0 feeds
//! the stochastic inputs (in the fixed order of [`StochasticInput`]) and channel
//! 1 feeds the waste path. Outcomes are ordered by trial index before
//! aggregation, so results do not depend on the worker count.

mod summary;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use summary::{
    histogram, histogram_over, percentile_sorted, summarize_values, HistogramBin, MonteCarloSummary, DEFAULT_BINS,
};

use crate::error::{Error, Result};
use crate::model::{evaluate_trajectory, ScenarioParams, TimeGrid, TrajectoryPoint, WasteMode};
use crate::stochastic::{derive_stream, gbm_path, ClampRange, DistributionSpec, RandomStream};

const INPUT_CHANNEL: u32 = 0;
const WASTE_CHANNEL: u32 = 1;

/// Model parameters that may be replaced by a per-trial draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticInput {
    /// Fixed token value, replacing the demand/supply price.
    TokenValue,
    /// Saturation participation `p_max`.
    ParticipationBase,
    BaseCost,
    CarbonCreditPrice,
}

impl StochasticInput {
    pub const ALL: [StochasticInput; 4] = [
        StochasticInput::TokenValue,
        StochasticInput::ParticipationBase,
        StochasticInput::BaseCost,
        StochasticInput::CarbonCreditPrice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StochasticInput::TokenValue => "token_value",
            StochasticInput::ParticipationBase => "participation_base",
            StochasticInput::BaseCost => "base_cost",
            StochasticInput::CarbonCreditPrice => "carbon_credit_price",
        }
    }

    /// Clamp applied when the spec does not set one: costs and credit prices
    /// are floored at zero, participation is kept in `[0, 1]`.
    fn default_clamp(self) -> Option<ClampRange> {
        match self {
            StochasticInput::TokenValue => None,
            StochasticInput::ParticipationBase => Some(ClampRange { lo: 0.0, hi: 1.0 }),
            StochasticInput::BaseCost | StochasticInput::CarbonCreditPrice => {
                Some(ClampRange::at_least(0.0))
            }
        }
    }

    /// Writes a sampled value into the parameter it drives.
    pub fn apply(self, params: &mut ScenarioParams, value: f64) {
        match self {
            StochasticInput::TokenValue => params.token_value = Some(value),
            StochasticInput::ParticipationBase => params.p_max = value,
            StochasticInput::BaseCost => params.base_cost = value,
            StochasticInput::CarbonCreditPrice => params.carbon_credit_price = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonAggregation {
    /// Values at the last grid point.
    #[default]
    Terminal,
    /// Values summed over every grid point.
    SumOverGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloScenario {
    pub params: ScenarioParams,
    pub grid: TimeGrid,
    #[serde(default)]
    pub waste_mode: WasteMode,
    #[serde(default)]
    pub stochastic_inputs: BTreeMap<StochasticInput, DistributionSpec>,
    #[serde(default)]
    pub horizon_aggregation: HorizonAggregation,
}

impl MonteCarloScenario {
    pub fn deterministic(params: ScenarioParams, grid: TimeGrid) -> Self {
        MonteCarloScenario {
            params,
            grid,
            waste_mode: WasteMode::Linear,
            stochastic_inputs: BTreeMap::new(),
            horizon_aggregation: HorizonAggregation::Terminal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| e.within("params"))?;
        self.grid.validate().map_err(|e| e.within("grid"))?;
        for (input, spec) in &self.stochastic_inputs {
            let path = format!("stochastic_inputs.{}", input.name());
            spec.validate().map_err(|e| e.within(&path))?;
            if *input == StochasticInput::ParticipationBase {
                if let Some(ClampRange { lo, hi }) = spec.clamp {
                    if lo < 0.0 || hi > 1.0 {
                        return Err(Error::config(
                            format!("{path}.clamp"),
                            "participation clamp must lie within [0,1]",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The spec actually sampled for `input`, with the default clamp filled in.
    pub fn effective_spec(&self, input: StochasticInput) -> Option<DistributionSpec> {
        self.stochastic_inputs.get(&input).map(|spec| {
            let mut spec = spec.clone();
            if spec.clamp.is_none() {
                spec.clamp = input.default_clamp();
            }
            spec
        })
    }

    /// Trajectory of the base parameters, with no stochastic input applied.
    pub fn trajectory(&self, waste_path: Option<&[f64]>) -> Result<Vec<TrajectoryPoint>> {
        evaluate_trajectory(&self.params, &self.grid, self.waste_mode, waste_path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub net_benefit: f64,
    pub recycling_volume: f64,
    pub token_revenue: f64,
    pub op_cost: f64,
    pub env_benefit: f64,
    pub sampled_values: BTreeMap<StochasticInput, f64>,
    pub clamp_count: u64,
}

/// Aggregate of a trajectory according to `aggregation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub net_benefit: f64,
    pub recycling_volume: f64,
    pub token_revenue: f64,
    pub op_cost: f64,
    pub env_benefit: f64,
    pub clamp_count: u64,
}

pub fn aggregate(points: &[TrajectoryPoint], aggregation: HorizonAggregation) -> Aggregate {
    let clamp_count = points.iter().map(|p| p.clamp_flags.count()).sum();
    match aggregation {
        HorizonAggregation::Terminal => {
            let last = points.last().expect("grid has at least two points");
            Aggregate {
                net_benefit: last.net_benefit,
                recycling_volume: last.recycling_volume,
                token_revenue: last.token_revenue,
                op_cost: last.op_cost,
                env_benefit: last.env_benefit,
                clamp_count,
            }
        }
        HorizonAggregation::SumOverGrid => Aggregate {
            net_benefit: points.iter().map(|p| p.net_benefit).sum(),
            recycling_volume: points.iter().map(|p| p.recycling_volume).sum(),
            token_revenue: points.iter().map(|p| p.token_revenue).sum(),
            op_cost: points.iter().map(|p| p.op_cost).sum(),
            env_benefit: points.iter().map(|p| p.env_benefit).sum(),
            clamp_count,
        },
    }
}

fn run_trial_inner(scenario: &MonteCarloScenario, stream: RandomStream) -> Result<TrialOutcome> {
    let mut params = scenario.params.clone();
    let mut sampled_values = BTreeMap::new();
    let mut clamp_count = 0;
    let mut input_rng = stream.channel(INPUT_CHANNEL);
    for &input in scenario.stochastic_inputs.keys() {
        let spec = scenario.effective_spec(input).expect("key present");
        let draw = spec.sample(&mut input_rng);
        clamp_count += draw.clamped as u64;
        input.apply(&mut params, draw.value);
        sampled_values.insert(input, draw.value);
    }

    let waste_path = match scenario.waste_mode {
        WasteMode::Linear => None,
        WasteMode::Gbm => Some(gbm_path(
            params.w_0,
            params.waste_drift,
            params.waste_volatility,
            &scenario.grid,
            &mut stream.channel(WASTE_CHANNEL),
        )?),
    };
    let points = evaluate_trajectory(&params, &scenario.grid, scenario.waste_mode, waste_path.as_deref())?;
    let agg = aggregate(&points, scenario.horizon_aggregation);
    Ok(TrialOutcome {
        trial_index: stream.stream_index,
        net_benefit: agg.net_benefit,
        recycling_volume: agg.recycling_volume,
        token_revenue: agg.token_revenue,
        op_cost: agg.op_cost,
        env_benefit: agg.env_benefit,
        sampled_values,
        clamp_count: clamp_count + agg.clamp_count,
    })
}

/// One trial: sample every stochastic input once, draw the waste path if
/// needed, evaluate the trajectory and aggregate it.
pub fn run_trial(scenario: &MonteCarloScenario, stream: RandomStream) -> Result<TrialOutcome> {
    run_trial_inner(scenario, stream).map_err(|e| e.in_trial(stream.stream_index))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRun {
    pub outcomes: Vec<TrialOutcome>,
    pub summary: MonteCarloSummary,
}

/// Runs `n_trials` indexed jobs on a pool of `workers` threads and returns the
/// results in index order. The first failure by index is reported.
pub(crate) fn parallel_trials<T, F>(n_trials: u64, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if n_trials == 0 {
        return Err(Error::Usage("n_trials must be >= 1".into()));
    }
    if workers == 0 {
        return Err(Error::Usage("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..n_trials).into_par_iter().map(&job).collect());
    results.into_iter().collect()
}

pub fn summarize(outcomes: &[TrialOutcome]) -> Result<MonteCarloSummary> {
    let values: Vec<f64> = outcomes.iter().map(|o| o.net_benefit).collect();
    let clamps = outcomes.iter().map(|o| o.clamp_count).sum();
    summarize_values(&values, DEFAULT_BINS, clamps)
}

pub fn run_monte_carlo(
    scenario: &MonteCarloScenario,
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<MonteCarloRun> {
    scenario.validate()?;
    let outcomes = parallel_trials(n_trials, workers, |i| {
        run_trial(scenario, derive_stream(master_seed, i))
    })?;
    let summary = summarize(&outcomes)?;
    Ok(MonteCarloRun { outcomes, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{break_even_token_value, Schedule};
    use crate::stochastic::lognormal_from_natural_moments;

    fn base_scenario() -> MonteCarloScenario {
        MonteCarloScenario::deterministic(
            ScenarioParams::default(),
            TimeGrid::new(0.0, 1.0, 10).unwrap(),
        )
    }

    #[test]
    fn constant_inputs_reproduce_deterministic_aggregate() {
        let mut scenario = base_scenario();
        scenario
            .stochastic_inputs
            .insert(StochasticInput::TokenValue, DistributionSpec::constant(2.5));
        scenario
            .stochastic_inputs
            .insert(StochasticInput::BaseCost, DistributionSpec::constant(900.0));
        let outcome = run_trial(&scenario, derive_stream(5, 3)).unwrap();

        let mut params = scenario.params.clone();
        params.token_value = Some(2.5);
        params.base_cost = 900.0;
        let points = evaluate_trajectory(&params, &scenario.grid, WasteMode::Linear, None).unwrap();
        let expected = aggregate(&points, HorizonAggregation::Terminal);
        assert_eq!(outcome.net_benefit, expected.net_benefit);
        assert_eq!(outcome.recycling_volume, expected.recycling_volume);
        assert_eq!(outcome.trial_index, 3);
        assert_eq!(outcome.sampled_values[&StochasticInput::TokenValue], 2.5);
    }

    #[test]
    fn same_stream_same_outcome() {
        let mut scenario = base_scenario();
        scenario.waste_mode = WasteMode::Gbm;
        scenario.params.waste_volatility = 0.3;
        scenario.stochastic_inputs.insert(
            StochasticInput::TokenValue,
            lognormal_from_natural_moments(2.0, 1.0).unwrap(),
        );
        let a = run_trial(&scenario, derive_stream(11, 4)).unwrap();
        let b = run_trial(&scenario, derive_stream(11, 4)).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&scenario, derive_stream(11, 5)).unwrap();
        assert_ne!(a.net_benefit, c.net_benefit);
    }

    #[test]
    fn break_even_token_value_zeroes_net_benefit() {
        let mut scenario = base_scenario();
        let p = &mut scenario.params;
        (p.unit_cost, p.env_alpha, p.carbon_credit_price) = (9.0, 2.5, 4.0);
        p.qualifying_fraction = 1.0;
        p.base_cost = 0.0;
        p.subsidy_schedule = Schedule::constant(0.0);
        let tv = break_even_token_value(&scenario.params);
        assert_eq!(tv, 2.5);
        scenario
            .stochastic_inputs
            .insert(StochasticInput::TokenValue, DistributionSpec::constant(tv));
        let outcome = run_trial(&scenario, derive_stream(1, 0)).unwrap();
        assert!(outcome.recycling_volume > 0.0);
        assert!(outcome.net_benefit.abs() <= 1e-9 * outcome.token_revenue.abs(), "{}", outcome.net_benefit);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut scenario = base_scenario();
        scenario.waste_mode = WasteMode::Gbm;
        scenario.params.waste_volatility = 0.2;
        scenario
            .stochastic_inputs
            .insert(StochasticInput::ParticipationBase, DistributionSpec::scaled_beta(2.0, 2.0, 0.2, 0.9));
        let one = run_monte_carlo(&scenario, 300, 17, 1).unwrap();
        let eight = run_monte_carlo(&scenario, 300, 17, 8).unwrap();
        assert_eq!(one, eight);
        assert_eq!(
            serde_json::to_string(&one.summary).unwrap(),
            serde_json::to_string(&eight.summary).unwrap()
        );
    }

    #[test]
    fn single_trial_summary() {
        let run = run_monte_carlo(&base_scenario(), 1, 3, 2).unwrap();
        assert_eq!(run.summary.n, 1);
        assert_eq!(run.summary.mean, run.outcomes[0].net_benefit);
        assert!(!run.summary.std_defined);
    }

    #[test]
    fn failing_trial_is_identified() {
        let mut scenario = base_scenario();
        scenario.waste_mode = WasteMode::Gbm;
        scenario.params.waste_drift = 1e6;
        scenario.params.waste_volatility = 0.0;
        match run_monte_carlo(&scenario, 10, 3, 4) {
            Err(Error::Trial { trial_index, .. }) => assert_eq!(trial_index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn participation_draws_respect_default_clamp() {
        let mut scenario = base_scenario();
        scenario
            .stochastic_inputs
            .insert(StochasticInput::ParticipationBase, DistributionSpec::normal(0.9, 0.5));
        let run = run_monte_carlo(&scenario, 200, 9, 2).unwrap();
        assert!(run.outcomes.iter().all(|o| {
            let p = o.sampled_values[&StochasticInput::ParticipationBase];
            (0.0..=1.0).contains(&p)
        }));
        assert!(run.summary.total_clamp_events > 0);
    }

    #[test]
    fn zero_trials_or_workers_rejected() {
        assert!(run_monte_carlo(&base_scenario(), 0, 1, 1).is_err());
        assert!(run_monte_carlo(&base_scenario(), 1, 1, 0).is_err());
    }
}
