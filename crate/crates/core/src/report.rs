//! The machine-readable outcome of a single test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotic::VarianceEstimate;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "boot-iid")]
    BootIid,
    #[serde(rename = "boot-dep")]
    BootDep,
    #[serde(rename = "asymptotic")]
    Asymptotic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BootIid => "boot-iid",
            Self::BootDep => "boot-dep",
            Self::Asymptotic => "asymptotic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boot-iid" => Ok(Self::BootIid),
            "boot-dep" => Ok(Self::BootDep),
            "asymptotic" => Ok(Self::Asymptotic),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic_name: String,
    pub statistic_value: f64,
    pub p_value: f64,
    pub method: Method,
    /// Smallest maximizing split `k`; rows `1..=k` precede the estimated change.
    pub changepoint_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_used: Option<usize>,
    pub b_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    /// Asymptotic test only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceEstimate>,
    /// `S / sigma`, asymptotic test only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub studentized: Option<f64>,
}
