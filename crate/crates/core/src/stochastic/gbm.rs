use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Geometric Brownian motion sampled on `grid` with the exact log-space step
/// `W[k+1] = W[k] * exp((drift - vol^2 / 2) dt + vol sqrt(dt) z)`.
///
/// The returned path has one value per grid point, starting at `w0`. One
/// standard normal is consumed per step, including when `volatility` is zero.
pub fn gbm_path<R: Rng + ?Sized>(
    w0: f64,
    drift: f64,
    volatility: f64,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::config("w_0", format!("must be > 0, got {w0}")));
    }
    if !(volatility >= 0.0 && volatility.is_finite()) {
        return Err(Error::config(
            "waste_volatility",
            format!("must be >= 0, got {volatility}"),
        ));
    }
    if !drift.is_finite() {
        return Err(Error::config("waste_drift", format!("must be finite, got {drift}")));
    }
    let log_drift = (drift - 0.5 * volatility * volatility) * grid.dt;
    let diffusion = volatility * grid.dt.sqrt();

    let mut path = Vec::with_capacity(grid.len());
    let mut w = w0;
    path.push(w);
    for k in 1..grid.len() {
        let z: f64 = rng.sample(StandardNormal);
        w *= diffusion.mul_add(z, log_drift).exp();
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain {
                t: grid.time(k),
                message: format!("waste path left the representable positive range ({w})"),
            });
        }
        path.push(w);
    }
    Ok(path)
}
