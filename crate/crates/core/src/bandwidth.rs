//! Data-driven choice of the dependence bandwidth `ell`.
//!
//! The pilot estimates use the flat-top lag window over `L` lags of the
//! full-sample influence series. `L` is twice the Politis–White "negligible
//! correlation" lag, capped at `ceil(sqrt n) + K_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::{check_bandwidth, window_influences, InfluenceScratch};
use crate::multiplier::KernelShape;
use crate::sample::{pseudo_observations, DivisorMode, MultivariateSample};
use crate::spearman::Functional;
use crate::subset::subset_count;

/// Threshold multiplier of the negligible-correlation rule.
pub const CORRELATION_BAND: f64 = 2.0;
/// Shortest series accepted by [`select_l`].
pub const MIN_SERIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEstimate {
    pub ell_hat: usize,
    /// Lag-window width used in the pilot sums.
    pub l_used: usize,
    pub gamma_hat: f64,
    pub delta_hat: f64,
    pub series_length: usize,
    /// Before rounding and clamping.
    pub ell_raw: f64,
}

/// `y_i = f(I(U_i))` over the full sample, uncentered.
pub fn influence_series(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    b_n: f64,
) -> Result<Vec<f64>> {
    f.check_dim(sample.d())?;
    check_bandwidth(b_n)?;
    let lin = f.as_linear().ok_or_else(|| {
        Error::Unsupported("the influence series needs a linear statistic".into())
    })?;
    let pobs = pseudo_observations(sample, sample.full_window(), mode)?;
    let w = subset_count(sample.d());
    let mut buf = vec![0.0; pobs.m() * w];
    window_influences(&pobs, b_n, &mut InfluenceScratch::default(), &mut buf);
    Ok(buf.chunks_exact(w).map(|row| lin.apply(row)).collect())
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

fn autocovariance_centered(z: &[f64], k: usize) -> f64 {
    z.iter().zip(&z[k..]).map(|(a, b)| a * b).sum::<f64>() / z.len() as f64
}

/// `(1/n) sum_{i <= n-k} (y_i - ybar)(y_{i+k} - ybar)`.
pub fn autocovariance(y: &[f64], k: usize) -> Result<f64> {
    if k >= y.len() {
        return Err(Error::InvalidParameter {
            name: "lag",
            reason: format!("lag {k} needs a series longer than {}", y.len()),
        });
    }
    let ybar = mean(y);
    let z: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    Ok(autocovariance_centered(&z, k))
}

pub fn autocorrelation(y: &[f64], k: usize) -> Result<f64> {
    let tau0 = autocovariance(y, 0)?;
    if tau0 <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok(autocovariance(y, k)? / tau0)
}

/// Trapezoid: 1 on `|x| <= 1/2`, linear to 0 at `|x| = 1`.
pub fn flat_top_lambda(x: f64) -> f64 {
    (2.0 * (1.0 - x.abs())).clamp(0.0, 1.0)
}

fn band_size(n: usize) -> usize {
    ((n as f64).log10().sqrt().ceil() as usize).max(5)
}

fn lag_cap(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize + band_size(n)
}

/// Smallest `k >= 0` after which `K_n` consecutive sample autocorrelations
/// stay inside `+-2 sqrt(log10(n)/n)`. Falls back to the largest significant
/// lag below the cap.
pub fn select_l(y: &[f64]) -> Result<usize> {
    let n = y.len();
    if n < MIN_SERIES {
        return Err(Error::SeriesTooShort { n, min: MIN_SERIES });
    }
    let ybar = mean(y);
    let z: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let tau0 = autocovariance_centered(&z, 0);
    if tau0 <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    let kn = band_size(n);
    let cap = lag_cap(n);
    let max_lag = (cap + kn).min(n - 1);
    let threshold = CORRELATION_BAND * ((n as f64).log10() / n as f64).sqrt();
    let significant: Vec<bool> = (0..=max_lag)
        .map(|k| k > 0 && (autocovariance_centered(&z, k) / tau0).abs() >= threshold)
        .collect();
    let is_small = |j: usize| j > max_lag || !significant[j];
    for k in 0..=cap {
        if (k + 1..=k + kn).all(is_small) {
            return Ok(k);
        }
    }
    Ok((1..=cap.min(max_lag)).rev().find(|&j| significant[j]).unwrap_or(0))
}

/// Pilot lag-window width: twice the negligible-correlation lag, capped.
pub fn pilot_width(y: &[f64]) -> Result<usize> {
    Ok((2 * select_l(y)?).min(lag_cap(y.len())))
}

/// The plug-in formula from autocovariances `tau[k]`, `k = 0..=l`.
pub fn bandwidth_from_autocovariances(
    tau: &[f64],
    l: usize,
    n: usize,
    kernel: &KernelShape,
) -> Result<BandwidthEstimate> {
    let width = l.max(1);
    if tau.len() < l + 1 {
        return Err(Error::InvalidInput(format!(
            "need autocovariances up to lag {l}, got {}",
            tau.len()
        )));
    }
    if n < 2 {
        return Err(Error::SeriesTooShort { n, min: 2 });
    }
    let mut curvature = 0.0;
    let mut long_run = tau[0];
    for k in 1..=l {
        let weight = flat_top_lambda(k as f64 / width as f64);
        curvature += weight * (k * k) as f64 * tau[k];
        long_run += 2.0 * weight * tau[k];
    }
    // Symmetric sum over -L..L folds to twice the positive lags.
    let gamma_hat = kernel.phi_second_deriv_at_0 / 2.0 * 2.0 * curvature;
    let delta_hat = 2.0 * long_run * long_run * kernel.integral_phi_squared;
    let (ell_raw, ell_hat) = if delta_hat > 0.0 {
        let raw = (4.0 * gamma_hat * gamma_hat / delta_hat).powf(0.2) * (n as f64).powf(0.2);
        let rounded = (raw + 0.5).floor();
        let clamped = if rounded.is_finite() {
            (rounded as usize).clamp(1, (n - 1).max(1))
        } else {
            n - 1
        };
        (raw, clamped)
    } else {
        (0.0, 1)
    };
    Ok(BandwidthEstimate {
        ell_hat,
        l_used: l,
        gamma_hat,
        delta_hat,
        series_length: n,
        ell_raw,
    })
}

/// Bandwidth from an influence series.
pub fn bandwidth_from_series(y: &[f64], kernel: &KernelShape) -> Result<BandwidthEstimate> {
    let l = pilot_width(y)?;
    let ybar = mean(y);
    let z: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let tau: Vec<f64> = (0..=l)
        .map(|k| autocovariance_centered(&z, k))
        .collect();
    bandwidth_from_autocovariances(&tau, l, y.len(), kernel)
}

pub fn estimate_bandwidth(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    b_n: f64,
    kernel: &KernelShape,
) -> Result<BandwidthEstimate> {
    bandwidth_from_series(&influence_series(sample, f, mode, b_n)?, kernel)
}
