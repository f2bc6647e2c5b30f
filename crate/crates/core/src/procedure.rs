//! One-call test runner: picks the bandwidth when needed and dispatches to the
//! bootstrap or the asymptotic test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::ChangePointAnalysis;
use crate::asymptotic::{asymptotic_test, Serial};
use crate::bandwidth::bandwidth_from_series;
use crate::bootstrap::{bootstrap_test, SmoothingParams};
use crate::error::{invalid_param, Error, Result};
use crate::multiplier::{KernelShape, MultiplierKind};
use crate::report::{Method, TestReport};
use crate::sample::{DivisorMode, MultivariateSample};
use crate::spearman::Functional;

pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EllChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for EllChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(invalid_param("ell", format!("expected auto or a positive integer, got {s:?}"))),
            Ok(v) => Ok(Self::Fixed(v)),
        }
    }
}

impl fmt::Display for EllChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

/// Serial-dependence assumption of the asymptotic test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SerialModel {
    #[default]
    Iid,
    Dependent,
}

impl FromStr for SerialModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iid" => Ok(Self::Iid),
            "dependent" | "dep" | "hac" => Ok(Self::Dependent),
            other => Err(Error::InvalidInput(format!("unknown serial model {other:?}"))),
        }
    }
}

/// A method together with the asymptotic test's variance form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestVariant {
    pub method: Method,
    pub serial: SerialModel,
}

impl TestVariant {
    pub fn label(&self) -> &'static str {
        match (self.method, self.serial) {
            (Method::Asymptotic, SerialModel::Dependent) => "asymptotic-hac",
            (m, _) => m.as_str(),
        }
    }

    fn needs_bandwidth(&self) -> bool {
        matches!(
            (self.method, self.serial),
            (Method::BootDep, _) | (Method::Asymptotic, SerialModel::Dependent)
        )
    }
}

impl FromStr for TestVariant {
    type Err = Error;

    /// The three method names plus `asymptotic-hac`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "asymptotic-hac" {
            return Ok(Self {
                method: Method::Asymptotic,
                serial: SerialModel::Dependent,
            });
        }
        Ok(Self {
            method: s.parse()?,
            serial: SerialModel::Iid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: Method,
    pub serial: SerialModel,
    pub replicates: usize,
    pub ell: EllChoice,
    pub smoothing: SmoothingParams,
    pub divisor: DivisorMode,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            method: Method::BootIid,
            serial: SerialModel::Iid,
            replicates: DEFAULT_REPLICATES,
            ell: EllChoice::Auto,
            smoothing: SmoothingParams::default(),
            divisor: DivisorMode::Simulation,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn variant(&self) -> TestVariant {
        TestVariant {
            method: self.method,
            serial: self.serial,
        }
    }
}

/// Resolves `ell` for `analysis`, estimating it from the influence series
/// when set to auto. The estimate is reused across variants of one analysis
/// by passing it back in as `cached`.
pub fn resolve_ell(
    analysis: &ChangePointAnalysis,
    choice: EllChoice,
    cached: &mut Option<usize>,
) -> Result<usize> {
    let ell = match choice {
        EllChoice::Fixed(v) => v,
        EllChoice::Auto => match cached {
            Some(v) => *v,
            None => {
                let y = analysis.influence_series()?;
                let est = bandwidth_from_series(&y, KernelShape::parzen())?;
                *cached = Some(est.ell_hat);
                est.ell_hat
            }
        },
    };
    if ell >= analysis.n() {
        return Err(Error::WindowExceedsSeries {
            ell,
            n: analysis.n(),
        });
    }
    Ok(ell)
}

/// Runs `variant` on a prepared analysis.
pub fn run_variant(
    analysis: &ChangePointAnalysis,
    variant: TestVariant,
    config: &TestConfig,
    ell_cache: &mut Option<usize>,
) -> Result<TestReport> {
    let ell = if variant.needs_bandwidth() {
        Some(resolve_ell(analysis, config.ell, ell_cache)?)
    } else {
        None
    };
    match variant.method {
        Method::BootIid => Ok(bootstrap_test(analysis, config.replicates, MultiplierKind::Iid, config.seed)?.0),
        Method::BootDep => {
            let kind = MultiplierKind::Dependent {
                ell: ell.expect("resolved above"),
            };
            Ok(bootstrap_test(analysis, config.replicates, kind, config.seed)?.0)
        }
        Method::Asymptotic => {
            let serial = match ell {
                None => Serial::Iid,
                Some(ell) => Serial::Dependent { ell },
            };
            asymptotic_test(analysis, serial, KernelShape::parzen(), config.seed)
        }
    }
}

pub fn run_test(
    sample: &MultivariateSample,
    f: &Functional,
    config: &TestConfig,
) -> Result<TestReport> {
    if config.method == Method::Asymptotic && f.as_linear().is_none() {
        return Err(Error::Unsupported(
            "the asymptotic test needs a linear statistic".into(),
        ));
    }
    let b_n = config.smoothing.b_n(sample.n());
    let analysis = ChangePointAnalysis::new(sample, f, config.divisor, b_n)?;
    run_variant(&analysis, config.variant(), config, &mut None)
}
