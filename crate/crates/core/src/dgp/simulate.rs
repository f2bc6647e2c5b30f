//! Copula-driven AR(1) and GARCH(1,1) series with an optional change in the
//! innovation copula.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::copula::{CopulaSampler, CopulaSpec};
use crate::error::{invalid_param, Error, Result};
use crate::rng::StreamKey;
use crate::sample::MultivariateSample;

pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl GarchParams {
    pub fn persistence(&self) -> f64 {
        self.beta + self.alpha
    }
}

/// Per-component parameters fitted to two daily index log-return series.
pub fn default_garch_params(d: usize) -> Result<Vec<GarchParams>> {
    if d != 2 {
        return Err(invalid_param(
            "garch",
            format!("default parameters exist only for d = 2, got d = {d}"),
        ));
    }
    Ok(vec![
        GarchParams {
            omega: 0.012,
            beta: 0.919,
            alpha: 0.072,
        },
        GarchParams {
            omega: 0.037,
            beta: 0.868,
            alpha: 0.115,
        },
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Filter {
    Ar1 { gamma: f64 },
    Garch { params: Vec<GarchParams> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n: usize,
    pub d: usize,
    pub filter: Filter,
    pub c1: CopulaSpec,
    pub c2: CopulaSpec,
    /// Change location `t`; rows `1..=floor(n t)` use `c1`.
    pub change: Option<f64>,
    pub burn_in: usize,
}

impl DgpSpec {
    /// Serially independent data from a single copula.
    pub fn iid(n: usize, copula: CopulaSpec) -> Self {
        Self {
            n,
            d: copula.d,
            filter: Filter::Ar1 { gamma: 0.0 },
            c1: copula,
            c2: copula,
            change: None,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_filter(mut self, filter: Filter) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_change(mut self, t: f64, after: CopulaSpec) -> Self {
        self.change = Some(t);
        self.c2 = after;
        self
    }

    /// Checks the spec; returns warnings for accepted but unusual settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n < 2 {
            return Err(Error::SeriesTooShort { n: self.n, min: 2 });
        }
        for c in [&self.c1, &self.c2] {
            if c.d != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    actual: c.d,
                });
            }
            c.validate()?;
        }
        if let Some(t) = self.change {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid_param("t", format!("must lie in (0, 1), got {t}")));
            }
        }
        let mut warnings = Vec::new();
        match &self.filter {
            Filter::Ar1 { gamma } => {
                if gamma.is_nan() || gamma.abs() >= 1.0 {
                    return Err(invalid_param("gamma", format!("needs |gamma| < 1, got {gamma}")));
                }
            }
            Filter::Garch { params } => {
                if params.len() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        actual: params.len(),
                    });
                }
                for (j, p) in params.iter().enumerate() {
                    if !(p.omega > 0.0 && p.beta >= 0.0 && p.alpha >= 0.0) {
                        return Err(invalid_param(
                            "garch",
                            format!("component {}: need omega > 0, alpha, beta >= 0", j + 1),
                        ));
                    }
                    if p.persistence() >= 1.0 {
                        warnings.push(format!(
                            "component {}: beta + alpha = {} >= 1 is not stationary; \
                             starting the variance at omega",
                            j + 1,
                            p.persistence()
                        ));
                    }
                }
            }
        }
        Ok(warnings)
    }

    /// Number of leading rows drawn from `c1`.
    pub fn rows_before_change(&self) -> usize {
        match self.change {
            Some(t) => (self.n as f64 * t).floor() as usize,
            None => self.n,
        }
    }
}

/// Innovations `eps_i = Phi^{-1}(U_i)` for `i = -burn_in..=n`, row-major.
fn innovations(spec: &DgpSpec, key: StreamKey, stream: u64) -> Result<Vec<f64>> {
    let d = spec.d;
    let total = spec.burn_in + 1 + spec.n;
    let before = CopulaSampler::new(spec.c1)?;
    let after = CopulaSampler::new(spec.c2)?;
    // Row index r corresponds to time r - burn_in.
    let last_c1 = spec.burn_in + spec.rows_before_change();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rng = key.rng(stream);
    let mut out = vec![0.0; total * d];
    for (r, row) in out.chunks_exact_mut(d).enumerate() {
        let sampler = if r <= last_c1 { &before } else { &after };
        sampler.fill_row(&mut rng, row);
        row.iter_mut().for_each(|u| *u = normal.inverse_cdf(*u));
    }
    Ok(out)
}

/// Draws one series; deterministic in `(spec, key, stream)`.
pub fn generate(spec: &DgpSpec, key: StreamKey, stream: u64) -> Result<MultivariateSample> {
    spec.validate()?;
    let d = spec.d;
    let eps = innovations(spec, key, stream)?;
    let total = eps.len() / d;
    let mut x = vec![0.0; total * d];
    match &spec.filter {
        Filter::Ar1 { gamma } => {
            x[..d].copy_from_slice(&eps[..d]);
            for r in 1..total {
                for j in 0..d {
                    x[r * d + j] = gamma * x[(r - 1) * d + j] + eps[r * d + j];
                }
            }
        }
        Filter::Garch { params } => {
            let mut sigma2: Vec<f64> = params
                .iter()
                .map(|p| {
                    if p.persistence() < 1.0 {
                        p.omega / (1.0 - p.persistence())
                    } else {
                        p.omega
                    }
                })
                .collect();
            for j in 0..d {
                x[j] = sigma2[j].sqrt() * eps[j];
            }
            for r in 1..total {
                for (j, p) in params.iter().enumerate() {
                    let prev = eps[(r - 1) * d + j];
                    sigma2[j] = p.omega + p.beta * sigma2[j] + p.alpha * prev * prev;
                    x[r * d + j] = sigma2[j].sqrt() * eps[r * d + j];
                }
            }
        }
    }
    let start = (spec.burn_in + 1) * d;
    MultivariateSample::from_row_major(x[start..].to_vec(), spec.n, d)
}
