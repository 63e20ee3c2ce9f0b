use std::io::Write;
use std::path::Path;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use tokencycle_core::comparison::{
    calibrate_tokenized, run_comparison, tokenized_mean_upper_bound, CalibrationBounds,
    SubsidyComparativeConfig, TokenizedComparativeConfig,
};
use tokencycle_core::model::{evaluate_trajectory, TrajectoryPoint};
use tokencycle_core::montecarlo::{
    histogram_over, run_monte_carlo, HistogramBin, MonteCarloRun,
    MonteCarloSummary, StochasticInput, TrialOutcome, DEFAULT_BINS,
};
use tokencycle_core::scenario::{
    load_scenario, ComparativeModel, Metadata, ScenarioBody, ScenarioFile, ScenarioKind,
};
use tokencycle_core::sensitivity::{self, SweepParameter};

use crate::error::CliError;
use crate::output::{digest_file, num, Csv, OutputDir, RunManifest};
use crate::RunOptions;

fn trials_csv(outcomes: &[TrialOutcome], inputs: &[StochasticInput]) -> Vec<u8> {
    let mut header = vec!["trial_index".to_string()];
    header.extend(inputs.iter().map(|i| i.name().to_string()));
    header.extend(
        [
            "net_benefit",
            "recycling_volume",
            "token_revenue",
            "env_benefit",
            "op_cost",
            "clamp_count",
        ]
        .map(String::from),
    );
    let mut csv = Csv::new(&header);
    for o in outcomes {
        let mut row = vec![o.trial_index.to_string()];
        row.extend(inputs.iter().map(|i| num(o.sampled_values[i])));
        row.extend([
            num(o.net_benefit),
            num(o.recycling_volume),
            num(o.token_revenue),
            num(o.env_benefit),
            num(o.op_cost),
            o.clamp_count.to_string(),
        ]);
        csv.row(&row);
    }
    csv.into_bytes()
}

fn histogram_csv(bins: &[HistogramBin]) -> Vec<u8> {
    let mut csv = Csv::new(["bin_lo", "bin_hi", "count"]);
    for b in bins {
        csv.row([num(b.lo), num(b.hi), b.count.to_string()]);
    }
    csv.into_bytes()
}

fn trajectory_csv(points: &[TrajectoryPoint]) -> Vec<u8> {
    let mut csv = Csv::new([
        "t",
        "efficiency",
        "waste",
        "utility",
        "participation",
        "token_value",
        "recycling_volume",
        "op_cost",
        "env_benefit",
        "token_revenue",
        "net_benefit",
        "participation_clamped",
        "efficiency_clamped",
        "negative_op_cost",
    ]);
    for p in points {
        csv.row([
            num(p.t),
            num(p.efficiency),
            num(p.waste),
            num(p.utility),
            num(p.participation),
            num(p.token_value),
            num(p.recycling_volume),
            num(p.op_cost),
            num(p.env_benefit),
            num(p.token_revenue),
            num(p.net_benefit),
            p.clamp_flags.participation_clamped.to_string(),
            p.clamp_flags.efficiency_clamped.to_string(),
            p.negative_op_cost.to_string(),
        ]);
    }
    csv.into_bytes()
}

#[derive(serde::Serialize)]
struct RunSummaryDoc<'a> {
    scenario_kind: ScenarioKind,
    n_trials: u64,
    master_seed: u64,
    horizon_aggregation: tokencycle_core::montecarlo::HorizonAggregation,
    summary: &'a MonteCarloSummary,
}

fn print_summary(label: &str, s: &MonteCarloSummary) {
    let std = if s.std_defined {
        format!("{:.4}", s.sample_std)
    } else {
        "undefined (n = 1)".to_string()
    };
    say!("{label}");
    say!("  n         {}", s.n);
    say!("  mean      {:.4}", s.mean);
    say!("  std       {std}");
    say!("  min       {:.4}", s.min);
    say!("  p5        {:.4}", s.p5);
    say!("  p50       {:.4}", s.p50);
    say!("  p95       {:.4}", s.p95);
    say!("  max       {:.4}", s.max);
    say!("  clamps    {}", s.total_clamp_events);
}

pub fn run(path: &Path, opts: &RunOptions, bins: usize) -> Result<(), CliError> {
    let file = load_scenario(path)?;
    let scenario = match &file.body {
        ScenarioBody::Deterministic(s) | ScenarioBody::MonteCarlo(s) => s,
        _ => {
            return Err(CliError::Invalid(format!(
                "kind: `run` needs a deterministic or monte-carlo scenario, got {:?}",
                file.kind()
            )))
        }
    };
    let workers = opts.workers();
    let manifest = RunManifest::new("run", vec![digest_file(path)?], opts.seed, opts.trials, workers)
        .option("bins", bins);

    let MonteCarloRun { outcomes, summary } = run_monte_carlo(scenario, opts.trials, opts.seed, workers)?;
    let values: Vec<f64> = outcomes.iter().map(|o| o.net_benefit).collect();
    let summary = MonteCarloSummary {
        histogram: tokencycle_core::montecarlo::histogram(&values, bins)?,
        ..summary
    };

    let mut out = OutputDir::create(&opts.out)?;
    let inputs: Vec<StochasticInput> = scenario.stochastic_inputs.keys().copied().collect();
    out.write("trials.csv", &trials_csv(&outcomes, &inputs))?;
    out.write_json(
        "summary.json",
        &RunSummaryDoc {
            scenario_kind: file.kind(),
            n_trials: opts.trials,
            master_seed: opts.seed,
            horizon_aggregation: scenario.horizon_aggregation,
            summary: &summary,
        },
    )?;
    out.write("histogram.csv", &histogram_csv(&summary.histogram))?;
    if file.kind() == ScenarioKind::Deterministic {
        let points = evaluate_trajectory(&scenario.params, &scenario.grid, scenario.waste_mode, None)?;
        out.write("trajectory.csv", &trajectory_csv(&points))?;
    }
    manifest.finish(&mut out)?;

    print_summary(&format!("net benefit ({})", path.display()), &summary);
    say!("outputs in {}", opts.out.display());
    Ok(())
}

fn load_comparative(path: &Path) -> Result<ComparativeModel, CliError> {
    match load_scenario(path)?.body {
        ScenarioBody::Comparison(model) => Ok(model),
        other => Err(CliError::Invalid(format!(
            "kind: {} must be a comparison scenario, got {:?}",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_tokenized(path: &Path) -> Result<TokenizedComparativeConfig, CliError> {
    match load_comparative(path)? {
        ComparativeModel::Tokenized(cfg) => Ok(cfg),
        ComparativeModel::Subsidy(_) => Err(CliError::Invalid(format!(
            "body.model: {} must describe the tokenized model",
            path.display()
        ))),
    }
}

fn load_subsidy(path: &Path) -> Result<SubsidyComparativeConfig, CliError> {
    match load_comparative(path)? {
        ComparativeModel::Subsidy(cfg) => Ok(cfg),
        ComparativeModel::Tokenized(_) => Err(CliError::Invalid(format!(
            "body.model: {} must describe the subsidy model",
            path.display()
        ))),
    }
}

pub fn compare(tok_path: &Path, sub_path: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let tok = load_tokenized(tok_path)?;
    let sub = load_subsidy(sub_path)?;
    let workers = opts.workers();
    let manifest = RunManifest::new(
        "compare",
        vec![digest_file(tok_path)?, digest_file(sub_path)?],
        opts.seed,
        opts.trials,
        workers,
    );
    let run = run_comparison(&tok, &sub, opts.trials, opts.seed, workers)?;

    let mut out = OutputDir::create(&opts.out)?;
    let mut paired = Csv::new(["trial_index", "tv_draw", "participation_tok", "net_tok", "net_sub", "delta"]);
    for p in &run.pairs {
        paired.row([
            p.trial_index.to_string(),
            num(p.tv_draw),
            num(p.participation_tok),
            num(p.net_tok),
            num(p.net_sub),
            num(p.delta),
        ]);
    }
    out.write("paired.csv", &paired.into_bytes())?;
    out.write_json("comparison.json", &run.report)?;

    // both distributions on shared bins
    let tok_values: Vec<f64> = run.pairs.iter().map(|p| p.net_tok).collect();
    let sub_values: Vec<f64> = run.pairs.iter().map(|p| p.net_sub).collect();
    let lo = run.report.tokenized.min.min(run.report.subsidy.min);
    let hi = run.report.tokenized.max.max(run.report.subsidy.max);
    let tok_hist = histogram_over(&tok_values, lo, hi, DEFAULT_BINS * 2)?;
    let sub_hist = histogram_over(&sub_values, lo, hi, DEFAULT_BINS * 2)?;
    let mut hist = Csv::new(["bin_lo", "bin_hi", "tokenized_count", "subsidy_count"]);
    for (t, s) in tok_hist.iter().zip(&sub_hist) {
        hist.row([num(t.lo), num(t.hi), t.count.to_string(), s.count.to_string()]);
    }
    out.write("histogram.csv", &hist.into_bytes())?;
    manifest.finish(&mut out)?;

    let r = &run.report;
    print_summary("tokenized net benefit", &r.tokenized);
    print_summary("subsidy net benefit", &r.subsidy);
    say!("mean delta (tokenized - subsidy)  {:.4}", r.mean_delta);
    say!("paired delta std                  {:.4}", r.paired_delta_std);
    say!("P(tokenized > subsidy)            {:.4}", r.probability_tokenized_exceeds_subsidy);
    say!(
        "participation tokenized mean/std  {:.4} / {:.4}",
        r.tokenized_participation.mean, r.tokenized_participation.sample_std
    );
    say!(
        "participation subsidy mean/std    {:.4} / {:.4}",
        r.subsidy_participation.mean, r.subsidy_participation.sample_std
    );
    say!("outputs in {}", opts.out.display());
    Ok(())
}

fn params_of(file: &ScenarioFile) -> Result<&tokencycle_core::MonteCarloScenario, CliError> {
    file.monte_carlo().ok_or_else(|| {
        CliError::Invalid("kind: sensitivity and sweep need a deterministic, monte-carlo or sweep scenario".into())
    })
}

pub fn sensitivity(path: &Path, at_time: Option<f64>, out_dir: &Path) -> Result<(), CliError> {
    let file = load_scenario(path)?;
    let scenario = params_of(&file)?;
    let t = at_time.unwrap_or_else(|| scenario.grid.t_end());
    let manifest = RunManifest::new("sensitivity", vec![digest_file(path)?], 0, 0, 1).option("at_time", t);
    let table = sensitivity::sensitivity_table(t, &scenario.params)?;

    let mut out = OutputDir::create(out_dir)?;
    let mut csv = Csv::new([
        "parameter",
        "mode",
        "analytic",
        "finite_difference",
        "relative_error",
        "step",
    ]);
    say!("sensitivity of net benefit at t = {t}");
    say!(
        "  {:<20} {:<9} {:>16} {:>20} {:>12}",
        "parameter", "mode", "analytic", "finite difference", "rel. error"
    );
    for row in &table.rows {
        let mode = serde_json::to_value(row.mode).expect("mode serializes");
        let mode = mode.as_str().expect("mode is a string");
        csv.row([
            row.parameter.name().to_string(),
            mode.to_string(),
            num(row.analytic),
            num(row.finite_difference),
            num(row.relative_error),
            num(row.step),
        ]);
        say!(
            "  {:<20} {:<9} {:>16.6} {:>20.6} {:>12.3e}",
            row.parameter.name(),
            mode,
            row.analytic,
            row.finite_difference,
            row.relative_error
        );
    }
    say!(
        "  token value total derivative (participation responds): {:.6}",
        table.token_value_total_derivative
    );
    out.write("sensitivity.csv", &csv.into_bytes())?;
    out.write_json("sensitivity.json", &table)?;
    manifest.finish(&mut out)?;
    Ok(())
}

pub fn sweep(
    path: &Path,
    param: Option<&str>,
    values: Option<Vec<f64>>,
    opts: &RunOptions,
) -> Result<(), CliError> {
    let file = load_scenario(path)?;
    let scenario = params_of(&file)?;
    let (file_param, file_values) = match &file.body {
        ScenarioBody::Sweep(s) => (Some(s.parameter), Some(s.values.clone())),
        _ => (None, None),
    };
    let parameter = match param {
        Some(name) => SweepParameter::from_name(name)?,
        None => file_param.ok_or_else(|| {
            CliError::Invalid(format!("--param is required; valid names: {}", SweepParameter::valid_names()))
        })?,
    };
    let values = values
        .or(file_values)
        .ok_or_else(|| CliError::Invalid("--values is required".into()))?;

    let workers = opts.workers();
    let manifest = RunManifest::new("sweep", vec![digest_file(path)?], opts.seed, opts.trials, workers)
        .option("param", parameter.name())
        .option("values", &values);
    let rows = sensitivity::sweep(scenario, parameter, &values, opts.trials, opts.seed, workers)?;

    let mut out = OutputDir::create(&opts.out)?;
    let mut csv = Csv::new(["parameter_value", "mean", "std", "p5", "p95"]);
    say!("sweep over {} ({} trials per value, seed {})", parameter.name(), opts.trials, opts.seed);
    say!("  {:>16} {:>16} {:>16} {:>16} {:>16}", "value", "mean", "std", "p5", "p95");
    for row in &rows {
        let s = &row.summary;
        csv.row([num(row.value), num(s.mean), num(s.sample_std), num(s.p5), num(s.p95)]);
        say!(
            "  {:>16.4} {:>16.4} {:>16.4} {:>16.4} {:>16.4}",
            row.value, s.mean, s.sample_std, s.p5, s.p95
        );
    }
    out.write("sweep.csv", &csv.into_bytes())?;
    manifest.finish(&mut out)?;
    Ok(())
}

pub fn calibrate(target: f64, base: Option<&Path>, opts: &RunOptions) -> Result<(), CliError> {
    let (base_cfg, inputs) = match base {
        Some(path) => (load_tokenized(path)?, vec![digest_file(path)?]),
        None => (TokenizedComparativeConfig::default(), Vec::new()),
    };
    let workers = opts.workers();
    let bounds = CalibrationBounds::default();
    let manifest = RunManifest::new("calibrate", inputs, opts.seed, opts.trials, workers)
        .option("target", target)
        .option("bounds", bounds);
    let calibration = calibrate_tokenized(&base_cfg, target, bounds, opts.trials, opts.seed, workers)?;
    let upper_bound = tokenized_mean_upper_bound(&base_cfg)?;

    let mut out = OutputDir::create(&opts.out)?;
    out.write_json("comparative.calibration", &calibration)?;
    let provenance = format!(
        "Calibrated by grid-then-refine search (seed {}, {} trials per point) toward target mean {}; \
         achieved {} (relative residual {:.6}, converged: {}).",
        opts.seed, opts.trials, target, calibration.achieved_mean, calibration.relative_residual, calibration.converged
    );
    let scenario = ScenarioFile::new(
        ScenarioBody::Comparison(ComparativeModel::Tokenized(calibration.config.clone())),
        Metadata {
            description: "Tokenized comparative model with calibrated token-value sd and participation elasticity"
                .into(),
            provenance,
            ..Default::default()
        },
    );
    out.write("tokenized.scenario", scenario.to_canonical_string().as_bytes())?;
    manifest.finish(&mut out)?;

    say!("calibration target          {target}");
    say!("best token_value_sd         {}", calibration.token_value_sd);
    say!("best participation_elasticity {}", calibration.elasticity);
    say!("achieved mean               {:.4}", calibration.achieved_mean);
    say!("relative residual           {:.6}", calibration.relative_residual);
    say!("mean upper bound (participation <= 1)  {upper_bound:.4}");
    say!("outputs in {}", opts.out.display());
    calibration.into_result().map(|_| ()).map_err(CliError::from)
}

pub fn validate(path: &Path, canonical: bool) -> Result<(), CliError> {
    let file = load_scenario(path)?;
    if canonical {
        print!("{}", file.to_canonical_string());
    } else {
        say!("ok: {} ({:?})", path.display(), file.kind());
    }
    Ok(())
}
