use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of histogram bins in run summaries.
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub n: u64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when `n == 1`.
    pub sample_std: f64,
    /// False when `n == 1`, where the sample standard deviation is undefined.
    pub std_defined: bool,
    pub min: f64,
    pub max: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub histogram: Vec<HistogramBin>,
    pub total_clamp_events: u64,
}

/// Percentile of an ascending sample by linear interpolation between order
/// statistics: `h = (n - 1) p`, `x[floor h] + frac(h) (x[floor h + 1] - x[floor h])`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Equal-width bin edges over `[min, max]`; the last edge is exactly `max`.
fn bin_edges(min: f64, max: f64, n_bins: usize) -> Vec<f64> {
    let width = max - min;
    let mut edges: Vec<f64> = (0..n_bins)
        .map(|k| min + width * (k as f64 / n_bins as f64))
        .collect();
    edges.push(max);
    edges
}

/// Equal-width histogram over `[min, max]` of `values`. A value lands in bin `k`
/// when `edge[k] <= x < edge[k + 1]`; the maximum goes to the last bin. If all
/// values are equal a single bin holds every count.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Vec<HistogramBin>> {
    if values.is_empty() {
        return Err(Error::Usage("histogram of an empty sample".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    histogram_over(values, min, max, n_bins)
}

/// Histogram on fixed bounds, for plotting several samples on shared bins.
/// Every value must lie in `[min, max]`.
pub fn histogram_over(values: &[f64], min: f64, max: f64, n_bins: usize) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::Usage("histogram needs at least one bin".into()));
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        return Err(Error::Numeric(format!("invalid histogram range [{min}, {max}]")));
    }
    if let Some(x) = values.iter().find(|x| !(min..=max).contains(*x)) {
        return Err(Error::Numeric(format!("value {x} outside histogram range [{min}, {max}]")));
    }
    if min == max {
        return Ok(vec![HistogramBin {
            lo: min,
            hi: max,
            count: values.len() as u64,
        }]);
    }
    let edges = bin_edges(min, max, n_bins);
    let mut counts = vec![0u64; n_bins];
    let scale = n_bins as f64 / (max - min);
    for &x in values {
        let mut k = (((x - min) * scale) as usize).min(n_bins - 1);
        // settle rounding so the bin agrees with the published edges
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < n_bins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: edges[k],
            hi: edges[k + 1],
            count,
        })
        .collect())
}

/// Summary statistics of a sample.
pub fn summarize_values(values: &[f64], n_bins: usize, clamp_events: u64) -> Result<MonteCarloSummary> {
    if values.is_empty() {
        return Err(Error::Usage("cannot summarize an empty sample".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite sample value {bad}")));
    }
    let n = values.len();
    // shifted accumulation: a constant sample gives its value back exactly
    let origin = values[0];
    let mean = origin + values.iter().map(|x| x - origin).sum::<f64>() / n as f64;
    let sample_std = if n > 1 {
        (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(MonteCarloSummary {
        n: n as u64,
        mean,
        sample_std,
        std_defined: n > 1,
        min: sorted[0],
        max: sorted[n - 1],
        p5: percentile_sorted(&sorted, 0.05),
        p50: percentile_sorted(&sorted, 0.50),
        p95: percentile_sorted(&sorted, 0.95),
        histogram: histogram(values, n_bins)?,
        total_clamp_events: clamp_events,
    })
}
