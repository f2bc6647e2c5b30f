//! Multiplier replicates of the change-point statistic and bootstrap p-values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ChangePointAnalysis;
use crate::error::{invalid_param, Error, Result};
use crate::multiplier::{iid_multipliers, MovingAverage, MultiplierKind, MultiplierSequence};
use crate::report::{Method, TestReport};
use crate::rng::StreamKey;
use crate::sample::{DivisorMode, MultivariateSample};
use crate::spearman::Functional;

/// Label separating replicate multiplier streams from data streams.
const REPLICATE_LABEL: u64 = 0x6d75_6c74;

/// `b_n = n^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub exponent: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { exponent: 0.51 }
    }
}

impl SmoothingParams {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(invalid_param("bn_exponent", format!("must be positive, got {exponent}")));
        }
        Ok(Self { exponent })
    }

    pub fn b_n(&self, n: usize) -> f64 {
        (n as f64).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub statistics: Vec<f64>,
    pub kind: MultiplierKind,
    pub seed: u64,
}

impl ReplicateSet {
    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }

    /// Share of replicates at or above `statistic`.
    pub fn p_value(&self, statistic: f64) -> f64 {
        let hits = self.statistics.iter().filter(|&&s| s >= statistic).count();
        hits as f64 / self.statistics.len() as f64
    }
}

/// One replicate from an explicit multiplier sequence.
pub fn replicate_statistic(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    xi: &MultiplierSequence,
    b_n: f64,
) -> Result<f64> {
    ChangePointAnalysis::new(sample, f, mode, b_n)?.replicate(&xi.xi)
}

/// `count` replicates; replicate `m` draws its multipliers from stream `m`.
pub fn bootstrap_replicates(
    analysis: &ChangePointAnalysis,
    count: usize,
    kind: MultiplierKind,
    seed: u64,
) -> Result<ReplicateSet> {
    if count == 0 {
        return Err(invalid_param("replicates", "must be at least 1"));
    }
    let n = analysis.n();
    let key = StreamKey::new(seed).derive(REPLICATE_LABEL);
    let filter = match kind {
        MultiplierKind::Iid => None,
        MultiplierKind::Dependent { ell } => {
            if ell >= n {
                return Err(Error::WindowExceedsSeries { ell, n });
            }
            Some(MovingAverage::new(ell)?)
        }
    };
    let statistics = (0..count as u64)
        .into_par_iter()
        .map(|m| {
            let xi = match &filter {
                None => iid_multipliers(n, key, m),
                Some(ma) => ma.generate(n, key, m),
            };
            analysis.replicate(&xi.xi)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ReplicateSet {
        statistics,
        kind,
        seed,
    })
}

/// Bootstrap test on a precomputed analysis.
pub fn bootstrap_test(
    analysis: &ChangePointAnalysis,
    count: usize,
    kind: MultiplierKind,
    seed: u64,
) -> Result<(TestReport, ReplicateSet)> {
    let set = bootstrap_replicates(analysis, count, kind, seed)?;
    let trajectory = analysis.trajectory();
    let report = TestReport {
        statistic_name: analysis.functional().name().to_string(),
        statistic_value: trajectory.max_value,
        p_value: set.p_value(trajectory.max_value),
        method: match kind {
            MultiplierKind::Iid => Method::BootIid,
            MultiplierKind::Dependent { .. } => Method::BootDep,
        },
        changepoint_index: trajectory.argmax_k,
        ell_used: match kind {
            MultiplierKind::Iid => None,
            MultiplierKind::Dependent { ell } => Some(ell),
        },
        b_n: analysis.b_n(),
        replicates: Some(count),
        seed,
        n: analysis.n(),
        d: analysis.d(),
        variance: None,
        studentized: None,
    };
    Ok((report, set))
}

pub fn bootstrap_pvalue(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    count: usize,
    kind: MultiplierKind,
    b_n: f64,
    seed: u64,
) -> Result<(TestReport, ReplicateSet)> {
    let analysis = ChangePointAnalysis::new(sample, f, mode, b_n)?;
    bootstrap_test(&analysis, count, kind, seed)
}
