use serde::Serialize;

use super::{
    efficiency_at, environmental_benefit, net_benefit_composed, operational_cost,
    participation_at, recycling_volume, require_finite, token_revenue, utility_at,
    ScenarioParams, TimeGrid, WasteMode,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClampFlags {
    pub participation_clamped: bool,
    pub efficiency_clamped: bool,
}

impl ClampFlags {
    pub fn count(&self) -> u64 {
        self.participation_clamped as u64 + self.efficiency_clamped as u64
    }
}

/// Every model quantity at one time point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub efficiency: f64,
    pub waste: f64,
    pub utility: f64,
    pub participation: f64,
    pub token_value: f64,
    pub recycling_volume: f64,
    pub op_cost: f64,
    pub env_benefit: f64,
    pub token_revenue: f64,
    pub net_benefit: f64,
    pub clamp_flags: ClampFlags,
    /// Subsidy exceeded the operational cost at this point.
    pub negative_op_cost: bool,
}

/// Evaluates the full equation chain at `t` for a given waste level.
pub fn evaluate_point(t: f64, params: &ScenarioParams, waste: f64) -> Result<TrajectoryPoint> {
    if waste.is_nan() || waste <= 0.0 {
        return Err(Error::Domain {
            t,
            message: format!("waste must be > 0, got {waste}"),
        });
    }
    let efficiency = efficiency_at(t, params);
    let token_value = params.token_value_at(t)?;
    let utility = utility_at(token_value, params.social_signal_at(t), params);
    let participation = participation_at(t, utility, params);
    let recycled = recycling_volume(participation.value, efficiency.value, waste);
    let subsidy = params.subsidy_at(t);
    let op_cost = operational_cost(recycled, subsidy, params);
    let net_benefit = require_finite(
        t,
        "net benefit",
        net_benefit_composed(recycled, token_value, subsidy, params),
    )?;
    Ok(TrajectoryPoint {
        t,
        efficiency: efficiency.value,
        waste,
        utility,
        participation: participation.value,
        token_value,
        recycling_volume: recycled,
        op_cost,
        env_benefit: environmental_benefit(recycled, params),
        token_revenue: token_revenue(recycled, token_value),
        net_benefit,
        clamp_flags: ClampFlags {
            participation_clamped: participation.clamped,
            efficiency_clamped: efficiency.clamped,
        },
        negative_op_cost: op_cost < 0.0,
    })
}

/// Evaluates the model over `grid`. In `Gbm` mode `waste_path` supplies the
/// waste level at each grid point; in `Linear` mode waste is `w_0 + growth * t`.
pub fn evaluate_trajectory(
    params: &ScenarioParams,
    grid: &TimeGrid,
    waste_mode: WasteMode,
    waste_path: Option<&[f64]>,
) -> Result<Vec<TrajectoryPoint>> {
    match (waste_mode, waste_path) {
        (WasteMode::Linear, None) => grid
            .times()
            .map(|t| evaluate_point(t, params, params.linear_waste_at(t)))
            .collect(),
        (WasteMode::Gbm, Some(path)) => {
            if path.len() != grid.len() {
                return Err(Error::Usage(format!(
                    "waste path has {} points but the grid has {}",
                    path.len(),
                    grid.len()
                )));
            }
            grid.times()
                .zip(path)
                .map(|(t, &w)| evaluate_point(t, params, w))
                .collect()
        }
        (WasteMode::Gbm, None) => Err(Error::Usage("gbm waste mode requires a waste path".into())),
        (WasteMode::Linear, Some(_)) => Err(Error::Usage(
            "a waste path is only accepted in gbm waste mode".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{net_benefit_closed_form, participation_at, Schedule};

    #[test]
    fn zero_adoption_gives_zero_participation() {
        let params = ScenarioParams {
            adoption_rate: 0.0,
            subsidy_schedule: Schedule::new(
                crate::model::Interpolation::PiecewiseConstant,
                vec![(0.0, 10.0), (3.0, 40.0)],
            )
            .unwrap(),
            ..Default::default()
        };
        let grid = TimeGrid::new(0.0, 1.0, 6).unwrap();
        let traj = evaluate_trajectory(&params, &grid, WasteMode::Linear, None).unwrap();
        assert_eq!(traj.len(), 7);
        for p in &traj {
            assert_eq!(p.participation, 0.0);
            assert_eq!(p.net_benefit, -params.base_cost + params.subsidy_at(p.t));
        }
    }

    #[test]
    fn single_point_matches_operations() {
        let params = ScenarioParams::default();
        let grid = TimeGrid::new(3.0, 1.0, 1).unwrap();
        let traj = evaluate_trajectory(&params, &grid, WasteMode::Linear, None).unwrap();
        let p = &traj[0];
        let t = 3.0;
        let eff = efficiency_at(t, &params).value;
        let tv = params.token_value_at(t).unwrap();
        let u = utility_at(tv, params.social_signal_at(t), &params);
        let part = participation_at(t, u, &params).value;
        let w = params.linear_waste_at(t);
        let r = recycling_volume(part, eff, w);
        assert_eq!(p.efficiency, eff);
        assert_eq!(p.token_value, tv);
        assert_eq!(p.utility, u);
        assert_eq!(p.participation, part);
        assert_eq!(p.recycling_volume, r);
        assert_eq!(p.op_cost, operational_cost(r, 0.0, &params));
        assert_eq!(p.env_benefit, environmental_benefit(r, &params));
        assert_eq!(p.token_revenue, token_revenue(r, tv));
        assert_eq!(p.net_benefit, net_benefit_composed(r, tv, 0.0, &params));
        let closed = net_benefit_closed_form(t, &params).unwrap();
        assert!((closed - p.net_benefit).abs() <= 1e-9 * closed.abs().max(1.0));
    }

    #[test]
    fn linear_mode_without_growth_keeps_waste_constant() {
        let params = ScenarioParams {
            waste_linear_growth: 0.0,
            ..Default::default()
        };
        let grid = TimeGrid::new(0.0, 0.25, 40).unwrap();
        let traj = evaluate_trajectory(&params, &grid, WasteMode::Linear, None).unwrap();
        assert!(traj.iter().all(|p| p.waste == params.w_0));
    }

    #[test]
    fn gbm_mode_checks_path_length() {
        let params = ScenarioParams::default();
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!(evaluate_trajectory(&params, &grid, WasteMode::Gbm, Some(&[1.0; 3])).is_err());
        assert!(evaluate_trajectory(&params, &grid, WasteMode::Gbm, None).is_err());
        let traj =
            evaluate_trajectory(&params, &grid, WasteMode::Gbm, Some(&[5.0, 6.0, 7.0, 8.0])).unwrap();
        assert_eq!(traj[3].waste, 8.0);
    }

    #[test]
    fn clamp_flags_and_negative_cost_are_reported() {
        let params = ScenarioParams {
            p_max: 1.0,
            adoption_rate: 5.0,
            alpha_financial: 10.0,
            eta_0: 0.9,
            eta_growth: 0.5,
            subsidy_schedule: Schedule::constant(1e9),
            ..Default::default()
        };
        let p = evaluate_point(2.0, &params, 100.0).unwrap();
        assert!(p.clamp_flags.participation_clamped);
        assert!(p.clamp_flags.efficiency_clamped);
        assert_eq!(p.clamp_flags.count(), 2);
        assert!(p.negative_op_cost);
        assert!(p.participation <= 1.0 && p.efficiency <= 1.0);
    }

    #[test]
    fn non_positive_waste_is_a_domain_error() {
        let params = ScenarioParams {
            waste_linear_growth: -600.0,
            ..Default::default()
        };
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        match evaluate_trajectory(&params, &grid, WasteMode::Linear, None) {
            Err(Error::Domain { t, .. }) => assert_eq!(t, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
