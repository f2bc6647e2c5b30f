//! Tests for a change in the cross-sectional dependence of multivariate time
//! series, based on extensions of Spearman's rho computed on split-sample
//! empirical copulas.
//!
//! The usual entry points are [`run_test`] for one dataset and
//! [`run_experiment`] for Monte Carlo grids. [`ChangePointAnalysis`] exposes
//! the shared precomputation for callers that run several tests on one
//! sample.

pub mod analysis;
pub mod asymptotic;
pub mod bandwidth;
pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod experiment;
pub mod influence;
pub mod multiplier;
pub mod procedure;
mod quad;
pub mod report;
pub mod rng;
pub mod sample;
pub mod spearman;
pub mod subset;
mod windows;

pub use analysis::ChangePointAnalysis;
pub use asymptotic::{
    asymptotic_pvalue, asymptotic_test, kolmogorov_sf, variance_hac, variance_iid, Serial,
    VarianceEstimate, VarianceForm,
};
pub use bandwidth::{
    autocorrelation, autocovariance, bandwidth_from_autocovariances, bandwidth_from_series,
    estimate_bandwidth, flat_top_lambda, influence_series, select_l, BandwidthEstimate,
};
pub use bootstrap::{
    bootstrap_pvalue, bootstrap_replicates, bootstrap_test, replicate_statistic, ReplicateSet,
    SmoothingParams,
};
pub use error::{Error, Result};
pub use experiment::{run_cell, run_experiment, ExperimentCell, ExperimentGrid, RejectionRow};
pub use influence::{influence_vector, smoothed_influence, smoothing_l};
pub use multiplier::{
    dependent_multipliers, iid_multipliers, parzen_kernel, phi_function, KernelShape,
    MultiplierKind, MultiplierSequence,
};
pub use procedure::{run_test, EllChoice, SerialModel, TestConfig, TestVariant};
pub use report::{Method, TestReport};
pub use rng::StreamKey;
pub use sample::{
    empirical_copula_eval, maximal_ranks, negate_sample, pseudo_observations, DivisorMode,
    MultivariateSample, PseudoObservations, SubsampleWindow,
};
pub use spearman::{
    builtin_f, phi_a, phi_all, rho1, rho2, rho3, statistic, t_process, BuiltinStatistic,
    ContinuousStatistic, Functional, LinearStatistic, StatisticTrajectory,
};
pub use subset::{all_subsets, SubsetIndex, SubsetVector};
