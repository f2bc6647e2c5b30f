//! Multiplier sequences for the bootstrap.
//!
//! I.i.d. multipliers are standard normal. Dependent multipliers use the
//! moving-average construction: with `b = floor(ell / 2)` and Parzen weights
//! `w_j = kappa(j / (b + 0.5))`, `j = -b..=b`, normalized so that
//! `sum w_j^2 = 1`, set `xi_i = sum_j w_j Z_{i+j}` for i.i.d. standard normal
//! `Z`. The result is `2b`-dependent with unit variance, and its lag-`h`
//! covariance `sum_j w_j w_{j+h}` approximates `phi(h / ell)` where
//! `phi(x) = (kappa * kappa)(2x) / (kappa * kappa)(0)`.

use std::sync::LazyLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::StreamKey;

/// The Parzen kernel.
pub fn parzen_kernel(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        1.0 - 6.0 * a * a + 6.0 * a * a * a
    } else if a <= 1.0 {
        2.0 * (1.0 - a).powi(3)
    } else {
        0.0
    }
}

/// `(kappa * kappa)(y)`. The integrand is a piecewise polynomial of degree at
/// most six, so Gauss-Legendre between its breakpoints is exact.
fn parzen_self_convolution(y: f64) -> f64 {
    if y.abs() >= 2.0 {
        return 0.0;
    }
    let lo = (-1.0f64).max(y - 1.0);
    let hi = 1.0f64.min(y + 1.0);
    let mut breaks: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .flat_map(|&c| [c, y - c])
        .filter(|&b| b > lo && b < hi)
        .collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    quad::piecewise(|t| parzen_kernel(t) * parzen_kernel(y - t), &breaks)
}

/// The covariance function `phi` induced by the Parzen moving average, with
/// the two constants the bandwidth selector needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelShape {
    conv_at_zero: f64,
    /// `phi''(0)`.
    pub phi_second_deriv_at_0: f64,
    /// `int_{-1}^{1} phi(x)^2 dx`.
    pub integral_phi_squared: f64,
}

static PARZEN: LazyLock<KernelShape> = LazyLock::new(KernelShape::compute_parzen);

impl KernelShape {
    /// Shared Parzen instance; constants are computed on first use.
    pub fn parzen() -> &'static KernelShape {
        &PARZEN
    }

    fn compute_parzen() -> Self {
        let conv_at_zero = parzen_self_convolution(0.0);
        let mut shape = Self {
            conv_at_zero,
            phi_second_deriv_at_0: f64::NAN,
            integral_phi_squared: f64::NAN,
        };
        // Central second differences with two rounds of Richardson
        // extrapolation; phi is even, so the error expands in h^2.
        let second = |h: f64| (shape.phi(h) - 2.0 * shape.phi(0.0) + shape.phi(-h)) / (h * h);
        let h = 0.02;
        let d = [second(h), second(h / 2.0), second(h / 4.0)];
        let r1 = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
        shape.phi_second_deriv_at_0 = (16.0 * r1[1] - r1[0]) / 15.0;
        let breaks: Vec<f64> = (-4..=4).map(|i| i as f64 / 4.0).collect();
        shape.integral_phi_squared = quad::piecewise(|x| shape.phi(x).powi(2), &breaks);
        shape
    }

    /// `phi(x)`; 1 at the origin, 0 outside `[-1, 1]`.
    pub fn phi(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        if x.abs() >= 1.0 {
            return 0.0;
        }
        parzen_self_convolution(2.0 * x.abs()) / self.conv_at_zero
    }

    /// `phi(h / ell)` for `h = 0..ell`; entries past the support are zero.
    pub fn lag_weights(&self, ell: usize) -> Vec<f64> {
        (0..ell.max(1))
            .map(|h| self.phi(h as f64 / ell as f64))
            .collect()
    }
}

/// Free-function form of [`KernelShape::phi`].
pub fn phi_function(x: f64, kernel: &KernelShape) -> f64 {
    kernel.phi(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MultiplierKind {
    Iid,
    Dependent { ell: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSequence {
    pub xi: Vec<f64>,
    pub kind: MultiplierKind,
}

/// `n` i.i.d. standard normal multipliers from stream `stream` of `key`.
pub fn iid_multipliers(n: usize, key: StreamKey, stream: u64) -> MultiplierSequence {
    let mut rng = key.rng(stream);
    MultiplierSequence {
        xi: fill_normals(&mut rng, n),
        kind: MultiplierKind::Iid,
    }
}

fn fill_normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Normalized moving-average weights for a given `ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage {
    ell: usize,
    half_width: usize,
    weights: Vec<f64>,
}

impl MovingAverage {
    pub fn new(ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParameter {
                name: "ell",
                reason: "must be at least 1".into(),
            });
        }
        let b = ell / 2;
        let scale = b as f64 + 0.5;
        let raw: Vec<f64> = (-(b as isize)..=b as isize)
            .map(|j| parzen_kernel(j as f64 / scale))
            .collect();
        let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(Self {
            ell,
            half_width: b,
            weights: raw.into_iter().map(|w| w / norm).collect(),
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact covariance of the output at lag `h`.
    pub fn autocovariance(&self, h: usize) -> f64 {
        if h >= self.weights.len() {
            return 0.0;
        }
        self.weights
            .iter()
            .zip(&self.weights[h..])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Filters `n + 2b` i.i.d. normals from the given stream.
    pub fn generate(&self, n: usize, key: StreamKey, stream: u64) -> MultiplierSequence {
        let mut rng = key.rng(stream);
        let z = fill_normals(&mut rng, n + 2 * self.half_width);
        let xi = z
            .windows(self.weights.len())
            .map(|win| win.iter().zip(&self.weights).map(|(a, b)| a * b).sum())
            .collect();
        MultiplierSequence {
            xi,
            kind: MultiplierKind::Dependent { ell: self.ell },
        }
    }
}

/// Dependent multipliers with bandwidth `ell` (must be shorter than the series).
pub fn dependent_multipliers(
    n: usize,
    ell: usize,
    key: StreamKey,
    stream: u64,
) -> Result<MultiplierSequence> {
    if ell >= n {
        return Err(Error::WindowExceedsSeries { ell, n });
    }
    Ok(MovingAverage::new(ell)?.generate(n, key, stream))
}
