//! Monte Carlo rejection-rate grids.
//!
//! Each cell fixes a data-generating process and a list of statistics and
//! test variants. Every repetition draws one series and runs all of them on
//! it, so the variants within a cell see the same data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ChangePointAnalysis;
use crate::bootstrap::SmoothingParams;
use crate::dgp::{
    generate, spearman_to_parameter, tau_to_parameter, CopulaFamily, CopulaSpec, DgpSpec, Filter,
};
use crate::error::{invalid_param, Error, Result};
use crate::procedure::{run_variant, EllChoice, TestConfig, TestVariant};
use crate::rng::StreamKey;
use crate::sample::DivisorMode;
use crate::spearman::{BuiltinStatistic, Functional};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SIMULATION_REPLICATES: usize = 250;

/// How the `before`/`after` dependence levels of a cell are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceMeasure {
    #[default]
    Kendall,
    Spearman,
}

impl DependenceMeasure {
    pub fn to_parameter(self, family: CopulaFamily, level: f64) -> Result<f64> {
        match self {
            Self::Kendall => tau_to_parameter(family, level),
            Self::Spearman => spearman_to_parameter(family, level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub family: CopulaFamily,
    pub d: usize,
    pub n: usize,
    pub measure: DependenceMeasure,
    pub before: f64,
    pub after: f64,
    /// Change location; `None` means no change.
    pub t: Option<f64>,
    pub filter: Filter,
    pub stats: Vec<BuiltinStatistic>,
    pub variants: Vec<TestVariant>,
    pub alpha: f64,
    pub reps: usize,
    pub replicates: usize,
    pub ell: EllChoice,
    pub smoothing: SmoothingParams,
    pub divisor: DivisorMode,
}

impl ExperimentCell {
    /// A null cell with the usual simulation defaults.
    pub fn new(family: CopulaFamily, d: usize, n: usize, level: f64) -> Self {
        Self {
            family,
            d,
            n,
            measure: DependenceMeasure::Kendall,
            before: level,
            after: level,
            t: None,
            filter: Filter::Ar1 { gamma: 0.0 },
            stats: vec![BuiltinStatistic::Rho1],
            variants: vec!["boot-iid".parse().expect("known variant")],
            alpha: DEFAULT_ALPHA,
            reps: 1000,
            replicates: DEFAULT_SIMULATION_REPLICATES,
            ell: EllChoice::Auto,
            smoothing: SmoothingParams::default(),
            divisor: DivisorMode::Simulation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(invalid_param("reps", "must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(invalid_param("replicates", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid_param("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.stats.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidInput("a cell needs at least one stat and one method".into()));
        }
        if self.t.is_none() && self.before != self.after {
            return Err(Error::InvalidInput(
                "before and after differ but no change location t was given".into(),
            ));
        }
        Ok(())
    }

    /// Resolves copula parameters; the Student Spearman map is costly, so this
    /// runs once per cell.
    pub fn dgp(&self) -> Result<DgpSpec> {
        let c1 = CopulaSpec::new(
            self.family,
            self.d,
            self.measure.to_parameter(self.family, self.before)?,
        )?;
        let mut spec = DgpSpec::iid(self.n, c1).with_filter(self.filter.clone());
        if let Some(t) = self.t {
            let c2 = if self.after == self.before {
                c1
            } else {
                CopulaSpec::new(
                    self.family,
                    self.d,
                    self.measure.to_parameter(self.family, self.after)?,
                )?
            };
            spec = spec.with_change(t, c2);
        }
        spec.validate()?;
        Ok(spec)
    }

    fn gamma_label(&self) -> String {
        match &self.filter {
            Filter::Ar1 { gamma } => gamma.to_string(),
            Filter::Garch { .. } => "garch".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub cells: Vec<ExperimentCell>,
}

/// One line of the rejection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub family: String,
    pub n: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub t: Option<f64>,
    pub gamma: String,
    pub stat: String,
    pub method: String,
    pub reject_pct: f64,
}

/// Rejections of one repetition, indexed by `stat * variants + variant`.
fn run_repetition(
    cell: &ExperimentCell,
    dgp: &DgpSpec,
    key: StreamKey,
    functionals: &[Functional],
) -> Result<Vec<bool>> {
    let sample = generate(dgp, key, 0)?;
    let b_n = cell.smoothing.b_n(cell.n);
    let mut out = Vec::with_capacity(functionals.len() * cell.variants.len());
    for (si, f) in functionals.iter().enumerate() {
        let analysis = ChangePointAnalysis::new(&sample, f, cell.divisor, b_n)?;
        let mut ell_cache = None;
        for (vi, variant) in cell.variants.iter().enumerate() {
            let config = TestConfig {
                method: variant.method,
                serial: variant.serial,
                replicates: cell.replicates,
                ell: cell.ell,
                smoothing: cell.smoothing,
                divisor: cell.divisor,
                seed: key.derive(1 + (si * cell.variants.len() + vi) as u64).seed(),
            };
            let report = run_variant(&analysis, *variant, &config, &mut ell_cache)?;
            out.push(report.p_value <= cell.alpha);
        }
    }
    Ok(out)
}

/// Rejection percentages of one cell; `cell_id` selects its random streams.
pub fn run_cell(cell: &ExperimentCell, cell_id: u64, seed: u64) -> Result<Vec<RejectionRow>> {
    cell.validate()?;
    let dgp = cell.dgp()?;
    let functionals: Vec<Functional> = cell
        .stats
        .iter()
        .map(|&s| Functional::builtin(s, cell.d))
        .collect::<Result<_>>()?;
    let cell_key = StreamKey::new(seed).derive(cell_id);
    let outcomes = (0..cell.reps as u64)
        .into_par_iter()
        .map(|rep| run_repetition(cell, &dgp, cell_key.derive(rep), &functionals))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (si, stat) in cell.stats.iter().enumerate() {
        for (vi, variant) in cell.variants.iter().enumerate() {
            let idx = si * cell.variants.len() + vi;
            let hits = outcomes.iter().filter(|o| o[idx]).count();
            rows.push(RejectionRow {
                family: cell.family.label(),
                n: cell.n,
                tau1: cell.before,
                tau2: cell.after,
                t: cell.t,
                gamma: cell.gamma_label(),
                stat: stat.as_str().to_string(),
                method: variant.label().to_string(),
                reject_pct: 100.0 * hits as f64 / cell.reps as f64,
            });
        }
    }
    Ok(rows)
}

/// Runs every cell; `threads = None` uses rayon's default pool. Results do not
/// depend on the thread count.
pub fn run_experiment(
    grid: &ExperimentGrid,
    threads: Option<usize>,
    seed: u64,
) -> Result<Vec<RejectionRow>> {
    let body = || -> Result<Vec<RejectionRow>> {
        let mut rows = Vec::new();
        for (i, cell) in grid.cells.iter().enumerate() {
            rows.extend(run_cell(cell, i as u64, seed)?);
        }
        Ok(rows)
    };
    match threads {
        None => body(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(body),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cell() -> ExperimentCell {
        let mut cell = ExperimentCell::new(CopulaFamily::Clayton, 2, 40, 0.3);
        cell.reps = 6;
        cell.replicates = 20;
        cell.stats = vec![BuiltinStatistic::Rho1, BuiltinStatistic::Rho3];
        cell.variants = vec![
            "boot-iid".parse().unwrap(),
            "boot-dep".parse().unwrap(),
            "asymptotic".parse().unwrap(),
            "asymptotic-hac".parse().unwrap(),
        ];
        cell
    }

    #[test]
    fn rows_cover_stats_times_variants() {
        let grid = ExperimentGrid {
            cells: vec![small_cell()],
        };
        let rows = run_experiment(&grid, Some(1), 5).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert!((0.0..=100.0).contains(&r.reject_pct));
            assert_eq!(r.gamma, "0");
        }
        assert_eq!(rows, run_experiment(&grid, Some(2), 5).unwrap());
    }

    #[test]
    fn single_rep_is_thresholded_test() {
        let mut cell = small_cell();
        cell.reps = 1;
        cell.stats = vec![BuiltinStatistic::Rho1];
        cell.variants = vec!["boot-iid".parse().unwrap()];
        let rows = run_cell(&cell, 0, 9).unwrap();
        let key = StreamKey::new(9).derive(0).derive(0);
        let sample = generate(&cell.dgp().unwrap(), key, 0).unwrap();
        let config = TestConfig {
            replicates: cell.replicates,
            seed: key.derive(1).seed(),
            ..TestConfig::default()
        };
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let report = crate::procedure::run_test(&sample, &f, &config).unwrap();
        let expected = if report.p_value <= 0.05 { 100.0 } else { 0.0 };
        assert_eq!(rows[0].reject_pct, expected);
    }

    #[test]
    fn cell_validation() {
        let mut cell = small_cell();
        cell.after = 0.6;
        assert!(cell.validate().is_err());
        cell.t = Some(0.5);
        assert!(cell.validate().is_ok());
        cell.reps = 0;
        assert!(cell.validate().is_err());
        let mut garch = small_cell();
        garch.filter = Filter::Garch {
            params: crate::dgp::default_garch_params(2).unwrap(),
        };
        assert_eq!(garch.gamma_label(), "garch");
    }
}
