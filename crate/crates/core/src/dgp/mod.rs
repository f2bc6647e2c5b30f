//! Synthetic data for Monte Carlo studies.

pub mod copula;
pub mod simulate;

pub use copula::{
    debye, kendall_tau, sample_copula, spearman_to_parameter, student_spearman, tau_to_parameter,
    CopulaFamily, CopulaSampler, CopulaSpec,
};
pub use simulate::{default_garch_params, generate, DgpSpec, Filter, GarchParams, DEFAULT_BURN_IN};
