//! Single-period tokenized-versus-subsidy experiment.
//!
//! Trial `i` of both models uses `derive_stream(seed, i)`. Channel 0 supplies
//! the operational-cost draw, shared by the paired tokenized and subsidy trials;
//! channel 1 supplies the tokenized model's token-value draw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{parallel_trials, summarize_values, MonteCarloSummary, DEFAULT_BINS};
use crate::stochastic::{
    derive_stream, lognormal_from_natural_moments, ClampRange, DistributionSpec, RandomStream,
};

const COST_CHANNEL: u32 = 0;
const TOKEN_CHANNEL: u32 = 1;

fn op_cost_spec(mean: f64, sd: f64) -> DistributionSpec {
    DistributionSpec::normal(mean, sd).with_clamp(ClampRange::at_least(0.0))
}

fn check_cost(op_cost_mean: f64, op_cost_sd: f64, volume: f64) -> Result<()> {
    if !(op_cost_mean.is_finite() && op_cost_mean >= 0.0) {
        return Err(Error::config("op_cost_mean", format!("must be >= 0, got {op_cost_mean}")));
    }
    if !(op_cost_sd.is_finite() && op_cost_sd >= 0.0) {
        return Err(Error::config("op_cost_sd", format!("must be >= 0, got {op_cost_sd}")));
    }
    if !(volume.is_finite() && volume >= 0.0) {
        return Err(Error::config("volume", format!("must be >= 0, got {volume}")));
    }
    Ok(())
}

fn check_fraction(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be in [0,1], got {v}")))
    }
}

/// Tokenized model: lognormal token value, participation responding linearly to
/// the token value's deviation from its base, carbon credit per recycled unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizedComparativeConfig {
    pub base_token_value: f64,
    /// Natural-space mean of the token value is `base_token_value * mean_multiplier`.
    pub mean_multiplier: f64,
    /// Natural-space standard deviation of the token value.
    pub token_value_sd: f64,
    /// Replaces the lognormal built from the three fields above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_value_dist: Option<DistributionSpec>,
    pub participation_base: f64,
    /// Response of participation to relative token-value changes.
    pub participation_elasticity: f64,
    pub carbon_credit_per_unit: f64,
    pub volume: f64,
    pub op_cost_mean: f64,
    pub op_cost_sd: f64,
}

impl Default for TokenizedComparativeConfig {
    fn default() -> Self {
        TokenizedComparativeConfig {
            base_token_value: 15.0,
            mean_multiplier: 2.0,
            token_value_sd: 0.0,
            token_value_dist: None,
            participation_base: 0.5,
            participation_elasticity: 0.0,
            carbon_credit_per_unit: 5.0,
            volume: 1000.0,
            op_cost_mean: 50_000.0,
            op_cost_sd: 1000.0,
        }
    }
}

impl TokenizedComparativeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_token_value > 0.0 && self.base_token_value.is_finite()) {
            return Err(Error::config(
                "base_token_value",
                format!("must be > 0, got {}", self.base_token_value),
            ));
        }
        if !(self.mean_multiplier > 0.0 && self.mean_multiplier.is_finite()) {
            return Err(Error::config(
                "mean_multiplier",
                format!("must be > 0, got {}", self.mean_multiplier),
            ));
        }
        if !(self.token_value_sd >= 0.0 && self.token_value_sd.is_finite()) {
            return Err(Error::config(
                "token_value_sd",
                format!("must be >= 0, got {}", self.token_value_sd),
            ));
        }
        if !self.participation_elasticity.is_finite() {
            return Err(Error::config("participation_elasticity", "must be finite"));
        }
        if !self.carbon_credit_per_unit.is_finite() {
            return Err(Error::config("carbon_credit_per_unit", "must be finite"));
        }
        check_fraction("participation_base", self.participation_base)?;
        check_cost(self.op_cost_mean, self.op_cost_sd, self.volume)?;
        if let Some(spec) = &self.token_value_dist {
            spec.validate().map_err(|e| e.within("token_value_dist"))?;
        }
        Ok(())
    }

    pub fn token_value_spec(&self) -> Result<DistributionSpec> {
        match &self.token_value_dist {
            Some(spec) => Ok(spec.clone()),
            None => lognormal_from_natural_moments(
                self.base_token_value * self.mean_multiplier,
                self.token_value_sd,
            ),
        }
    }

    /// `clamp(p0 * (1 + elasticity * (tv / tv0 - 1)), 0, 1)`.
    pub fn participation(&self, token_value: f64) -> (f64, bool) {
        let raw = self.participation_base
            * (1.0 + self.participation_elasticity * (token_value / self.base_token_value - 1.0));
        let p = raw.clamp(0.0, 1.0);
        (p, p != raw)
    }
}

/// Subsidy model: fixed reward per unit and static participation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsidyComparativeConfig {
    pub fixed_reward: f64,
    pub participation: f64,
    pub volume: f64,
    pub op_cost_mean: f64,
    pub op_cost_sd: f64,
}

impl Default for SubsidyComparativeConfig {
    fn default() -> Self {
        SubsidyComparativeConfig {
            fixed_reward: 10.0,
            participation: 0.5,
            volume: 1000.0,
            op_cost_mean: 50_000.0,
            op_cost_sd: 1000.0,
        }
    }
}

impl SubsidyComparativeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.fixed_reward.is_finite() {
            return Err(Error::config("fixed_reward", "must be finite"));
        }
        check_fraction("participation", self.participation)?;
        check_cost(self.op_cost_mean, self.op_cost_sd, self.volume)
    }
}

/// Result of one single-period comparative trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparativeOutcome {
    pub trial_index: u64,
    /// Reward per recycled unit (token value draw, or the fixed subsidy reward).
    pub reward: f64,
    pub participation: f64,
    pub recycling_volume: f64,
    pub reward_revenue: f64,
    pub carbon_revenue: f64,
    pub op_cost: f64,
    pub net_benefit: f64,
    pub clamp_count: u64,
}

pub fn subsidy_trial(cfg: &SubsidyComparativeConfig, stream: RandomStream) -> ComparativeOutcome {
    let cost = op_cost_spec(cfg.op_cost_mean, cfg.op_cost_sd).sample(&mut stream.channel(COST_CHANNEL));
    let recycled = cfg.participation * cfg.volume;
    let reward_revenue = recycled * cfg.fixed_reward;
    ComparativeOutcome {
        trial_index: stream.stream_index,
        reward: cfg.fixed_reward,
        participation: cfg.participation,
        recycling_volume: recycled,
        reward_revenue,
        carbon_revenue: 0.0,
        op_cost: cost.value,
        net_benefit: reward_revenue - cost.value,
        clamp_count: cost.clamped as u64,
    }
}

pub fn tokenized_trial(cfg: &TokenizedComparativeConfig, stream: RandomStream) -> Result<ComparativeOutcome> {
    let token_spec = cfg.token_value_spec()?;
    Ok(tokenized_trial_with(cfg, &token_spec, stream))
}

fn tokenized_trial_with(
    cfg: &TokenizedComparativeConfig,
    token_spec: &DistributionSpec,
    stream: RandomStream,
) -> ComparativeOutcome {
    let cost = op_cost_spec(cfg.op_cost_mean, cfg.op_cost_sd).sample(&mut stream.channel(COST_CHANNEL));
    let token = token_spec.sample(&mut stream.channel(TOKEN_CHANNEL));
    let (participation, participation_clamped) = cfg.participation(token.value);
    let recycled = participation * cfg.volume;
    let reward_revenue = recycled * token.value;
    let carbon_revenue = recycled * cfg.carbon_credit_per_unit;
    ComparativeOutcome {
        trial_index: stream.stream_index,
        reward: token.value,
        participation,
        recycling_volume: recycled,
        reward_revenue,
        carbon_revenue,
        op_cost: cost.value,
        net_benefit: recycled * (token.value + cfg.carbon_credit_per_unit) - cost.value,
        clamp_count: cost.clamped as u64 + token.clamped as u64 + participation_clamped as u64,
    }
}

/// Paired per-trial row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTrial {
    pub trial_index: u64,
    pub tv_draw: f64,
    pub participation_tok: f64,
    pub net_tok: f64,
    pub net_sub: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipationStats {
    pub mean: f64,
    pub sample_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tokenized: MonteCarloSummary,
    pub subsidy: MonteCarloSummary,
    /// `tokenized.mean - subsidy.mean`.
    pub mean_delta: f64,
    /// Mean of the paired per-trial differences.
    pub paired_mean_delta: f64,
    pub paired_delta_std: f64,
    /// Share of trials where the tokenized net benefit beats the subsidy one; ties count 1/2.
    pub probability_tokenized_exceeds_subsidy: f64,
    pub tokenized_participation: ParticipationStats,
    pub subsidy_participation: ParticipationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRun {
    pub report: ComparisonReport,
    pub pairs: Vec<PairedTrial>,
}

fn mean_std(values: &[f64]) -> ParticipationStats {
    let s = summarize_values(values, 1, 0).expect("non-empty finite sample");
    ParticipationStats {
        mean: s.mean,
        sample_std: s.sample_std,
    }
}

pub fn run_comparison(
    tok_cfg: &TokenizedComparativeConfig,
    sub_cfg: &SubsidyComparativeConfig,
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<ComparisonRun> {
    tok_cfg.validate().map_err(|e| e.within("tokenized"))?;
    sub_cfg.validate().map_err(|e| e.within("subsidy"))?;
    let token_spec = tok_cfg.token_value_spec()?;
    let outcomes = parallel_trials(n_trials, workers, |i| {
        let stream = derive_stream(master_seed, i);
        Ok((
            tokenized_trial_with(tok_cfg, &token_spec, stream),
            subsidy_trial(sub_cfg, stream),
        ))
    })?;

    let pairs: Vec<PairedTrial> = outcomes
        .iter()
        .map(|(tok, sub)| PairedTrial {
            trial_index: tok.trial_index,
            tv_draw: tok.reward,
            participation_tok: tok.participation,
            net_tok: tok.net_benefit,
            net_sub: sub.net_benefit,
            delta: tok.net_benefit - sub.net_benefit,
        })
        .collect();

    let column = |f: fn(&(ComparativeOutcome, ComparativeOutcome)) -> f64| -> Vec<f64> {
        outcomes.iter().map(f).collect()
    };
    let clamps = |f: fn(&(ComparativeOutcome, ComparativeOutcome)) -> u64| -> u64 {
        outcomes.iter().map(f).sum()
    };
    let tokenized = summarize_values(&column(|o| o.0.net_benefit), DEFAULT_BINS, clamps(|o| o.0.clamp_count))?;
    let subsidy = summarize_values(&column(|o| o.1.net_benefit), DEFAULT_BINS, clamps(|o| o.1.clamp_count))?;
    let deltas: Vec<f64> = pairs.iter().map(|p| p.delta).collect();
    let delta_stats = mean_std(&deltas);
    let wins: f64 = pairs
        .iter()
        .map(|p| match p.net_tok.total_cmp(&p.net_sub) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        })
        .sum();

    let report = ComparisonReport {
        mean_delta: tokenized.mean - subsidy.mean,
        paired_mean_delta: delta_stats.mean,
        paired_delta_std: delta_stats.sample_std,
        probability_tokenized_exceeds_subsidy: wins / pairs.len() as f64,
        tokenized_participation: mean_std(&column(|o| o.0.participation)),
        subsidy_participation: mean_std(&column(|o| o.1.participation)),
        tokenized,
        subsidy,
    };
    Ok(ComparisonRun { report, pairs })
}

/// Search box for [`calibrate_tokenized`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBounds {
    pub sd_min: f64,
    pub sd_max: f64,
    pub elasticity_min: f64,
    pub elasticity_max: f64,
    /// Points per axis of the coarse grid.
    pub grid_points: usize,
    /// Number of local refinement passes.
    pub refinements: usize,
    /// Accepted `|achieved - target| / max(1, |target|)`.
    pub tolerance: f64,
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        CalibrationBounds {
            sd_min: 0.0,
            sd_max: 100.0,
            elasticity_min: 0.0,
            elasticity_max: 3.0,
            grid_points: 21,
            refinements: 3,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub stage: usize,
    pub token_value_sd: f64,
    pub elasticity: f64,
    pub achieved_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target_mean: f64,
    pub n_trials: u64,
    pub master_seed: u64,
    pub bounds: CalibrationBounds,
    pub token_value_sd: f64,
    pub elasticity: f64,
    pub achieved_mean: f64,
    pub residual: f64,
    pub relative_residual: f64,
    /// Whether the relative residual is within `bounds.tolerance`.
    pub converged: bool,
    /// The configuration with the best-found parameters applied.
    pub config: TokenizedComparativeConfig,
    pub trace: Vec<CalibrationStep>,
}

impl Calibration {
    /// `Err(Error::Calibration)` when the search did not reach the tolerance.
    pub fn into_result(self) -> Result<Calibration> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Calibration {
                target: self.target_mean,
                best_residual: self.residual,
                best_sd: self.token_value_sd,
                best_elasticity: self.elasticity,
            })
        }
    }
}

/// Mean tokenized net benefit over `n_trials` paired streams.
pub fn tokenized_mean(cfg: &TokenizedComparativeConfig, n_trials: u64, master_seed: u64, workers: usize) -> Result<f64> {
    let spec = cfg.token_value_spec()?;
    let nets = parallel_trials(n_trials, workers, |i| {
        Ok(tokenized_trial_with(cfg, &spec, derive_stream(master_seed, i)).net_benefit)
    })?;
    Ok(summarize_values(&nets, 1, 0)?.mean)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Grid-then-refine search over the token-value sd and participation
/// elasticity that brings the tokenized mean closest to `target_mean`. Every
/// evaluation uses the same seed. The returned record is complete whether or
/// not the target was reached; see [`Calibration::into_result`].
pub fn calibrate_tokenized(
    base: &TokenizedComparativeConfig,
    target_mean: f64,
    bounds: CalibrationBounds,
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Calibration> {
    base.validate().map_err(|e| e.within("tokenized"))?;
    if base.token_value_dist.is_some() {
        return Err(Error::config(
            "tokenized.token_value_dist",
            "calibration varies the derived lognormal; remove the explicit distribution",
        ));
    }
    if !(bounds.sd_min >= 0.0 && bounds.sd_min <= bounds.sd_max)
        || bounds.elasticity_min > bounds.elasticity_max
        || bounds.grid_points < 2
    {
        return Err(Error::Usage(format!("invalid calibration bounds {bounds:?}")));
    }

    let mut trace = Vec::new();
    let mut evaluate = |stage: usize, sd: f64, elasticity: f64| -> Result<f64> {
        let cfg = TokenizedComparativeConfig {
            token_value_sd: sd,
            participation_elasticity: elasticity,
            ..base.clone()
        };
        let achieved_mean = tokenized_mean(&cfg, n_trials, master_seed, workers)?;
        trace.push(CalibrationStep {
            stage,
            token_value_sd: sd,
            elasticity,
            achieved_mean,
        });
        Ok(achieved_mean)
    };

    // Among points within tolerance prefer the one nearest the lower corner of
    // the box (the least dispersed, least responsive model); otherwise the
    // smallest residual. Sampling noise alone never moves the answer off a
    // point that already meets the target.
    let scale = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
    let norm = |sd: f64, el: f64| {
        scale(sd, bounds.sd_min, bounds.sd_max).powi(2)
            + scale(el, bounds.elasticity_min, bounds.elasticity_max).powi(2)
    };
    let within = |mean: f64| (mean - target_mean).abs() <= bounds.tolerance * target_mean.abs().max(1.0);
    let mut best: Option<(f64, f64, f64)> = None;
    let consider = |sd: f64, el: f64, mean: f64, best: &mut Option<(f64, f64, f64)>| {
        let better = match *best {
            None => true,
            Some((bsd, bel, bm)) => match (within(mean), within(bm)) {
                (true, true) => norm(sd, el) < norm(bsd, bel),
                (true, false) => true,
                (false, true) => false,
                (false, false) => (mean - target_mean).abs() < (bm - target_mean).abs(),
            },
        };
        if better {
            *best = Some((sd, el, mean));
        }
    };

    let mut sd_step = (bounds.sd_max - bounds.sd_min) / (bounds.grid_points - 1) as f64;
    let mut el_step = (bounds.elasticity_max - bounds.elasticity_min) / (bounds.grid_points - 1) as f64;
    for sd in linspace(bounds.sd_min, bounds.sd_max, bounds.grid_points) {
        for el in linspace(bounds.elasticity_min, bounds.elasticity_max, bounds.grid_points) {
            let mean = evaluate(0, sd, el)?;
            consider(sd, el, mean, &mut best);
        }
    }
    for stage in 1..=bounds.refinements {
        let (sd0, el0, _) = best.expect("grid evaluated");
        let sds = linspace(
            (sd0 - sd_step).max(bounds.sd_min),
            (sd0 + sd_step).min(bounds.sd_max),
            5,
        );
        let els = linspace(
            (el0 - el_step).max(bounds.elasticity_min),
            (el0 + el_step).min(bounds.elasticity_max),
            5,
        );
        for &sd in &sds {
            for &el in &els {
                let mean = evaluate(stage, sd, el)?;
                consider(sd, el, mean, &mut best);
            }
        }
        sd_step /= 2.0;
        el_step /= 2.0;
    }

    let (token_value_sd, elasticity, achieved_mean) = best.expect("grid evaluated");
    let residual = (achieved_mean - target_mean).abs();
    let relative_residual = residual / target_mean.abs().max(1.0);
    Ok(Calibration {
        target_mean,
        n_trials,
        master_seed,
        bounds,
        token_value_sd,
        elasticity,
        achieved_mean,
        residual,
        relative_residual,
        converged: relative_residual <= bounds.tolerance,
        config: TokenizedComparativeConfig {
            token_value_sd,
            participation_elasticity: elasticity,
            ..base.clone()
        },
        trace,
    })
}

/// Upper bound on the tokenized mean net benefit: participation never exceeds
/// one, so each trial earns at most `volume * (tv + credit)`.
pub fn tokenized_mean_upper_bound(cfg: &TokenizedComparativeConfig) -> Result<f64> {
    let tv_mean = cfg.token_value_spec()?.mean()?;
    Ok(cfg.volume * (tv_mean + cfg.carbon_credit_per_unit).max(0.0) - cfg.op_cost_mean)
}
