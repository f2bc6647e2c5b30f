//! Multivariate Spearman's rho, the subset-indexed split process `T_n` and the
//! maximally selected statistics `S_{n,f}`.
//!
//! For a window with pseudo-observations `U_1..U_m` and a nonempty subset `A`,
//! integrating the empirical copula with the coordinates outside `A` set to 1
//! gives the closed form
//!
//! ```text
//! phi_A = (1/m) * sum_i prod_{j in A} (1 - U_ij)
//! ```
//!
//! Every statistic below is built from these averages.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{DivisorMode, MultivariateSample, PseudoObservations};
use crate::subset::{all_subsets, subset_count, SubsetIndex, SubsetVector};
use crate::windows::{for_each_prefix, for_each_suffix};

/// `phi_A` of a window.
pub fn phi_a(pobs: &PseudoObservations, a: SubsetIndex) -> Result<f64> {
    if a.is_empty() || (a.mask() >> pobs.d()) != 0 {
        return Err(Error::InvalidSubset { d: pobs.d() });
    }
    let total: f64 = pobs
        .rows()
        .map(|row| a.members().map(|j| 1.0 - row[j]).product::<f64>())
        .sum();
    Ok(total / pobs.m() as f64)
}

/// Products `prod_{j in A}(1 - u_j)` for every subset mask `0..2^d`, with the
/// empty product in slot 0.
#[inline]
pub(crate) fn subset_products(u: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] * (1.0 - u[low]);
    }
}

/// `phi_A` for every nonempty subset at once.
pub fn phi_all(pobs: &PseudoObservations) -> SubsetVector {
    let d = pobs.d();
    let mut acc = vec![0.0; 1 << d];
    let mut prod = vec![0.0; 1 << d];
    for row in pobs.rows() {
        subset_products(row, &mut prod);
        for (a, p) in acc.iter_mut().zip(&prod) {
            *a += p;
        }
    }
    let m = pobs.m() as f64;
    let values = acc[1..].iter().map(|s| s / m).collect();
    SubsetVector::from_values(d, values).expect("length is 2^d - 1")
}

fn rho_scale(d: usize) -> f64 {
    let two_d = (1u64 << d) as f64;
    (d as f64 + 1.0) / (two_d - d as f64 - 1.0)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "Spearman's rho needs d >= 2, got {d}"
        )));
    }
    Ok(())
}

/// First multivariate extension, based on the integral of the copula.
pub fn rho1(pobs: &PseudoObservations) -> Result<f64> {
    let d = pobs.d();
    check_dim(d)?;
    let phi = phi_a(pobs, SubsetIndex::full(d))?;
    Ok(rho_scale(d) * ((1u64 << d) as f64 * phi - 1.0))
}

/// Second extension: the first one applied to the survival copula.
pub fn rho2(pobs: &PseudoObservations) -> Result<f64> {
    let d = pobs.d();
    check_dim(d)?;
    let mean_prod: f64 =
        pobs.rows().map(|row| row.iter().product::<f64>()).sum::<f64>() / pobs.m() as f64;
    Ok(rho_scale(d) * ((1u64 << d) as f64 * mean_prod - 1.0))
}

/// Third extension: the average of the bivariate coefficients over all pairs.
pub fn rho3(pobs: &PseudoObservations) -> Result<f64> {
    let d = pobs.d();
    check_dim(d)?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..d {
        for j in i + 1..d {
            let a = SubsetIndex::new((1 << i) | (1 << j), d)?;
            total += 12.0 * phi_a(pobs, a)? - 3.0;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// A linear map `x -> a^T x` on subset vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStatistic {
    pub name: String,
    pub coefficients: SubsetVector,
}

impl LinearStatistic {
    pub fn new(name: impl Into<String>, coefficients: SubsetVector) -> Result<Self> {
        if coefficients.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self {
            name: name.into(),
            coefficients,
        })
    }

    pub fn d(&self) -> usize {
        self.coefficients.d()
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.coefficients
            .as_slice()
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Same statistic with every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut coefficients = self.coefficients.clone();
        coefficients.as_mut_slice().iter_mut().for_each(|a| *a *= c);
        Self {
            name: format!("{}*{c}", self.name),
            coefficients,
        }
    }
}

/// The three built-in Spearman-type statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinStatistic {
    Rho1,
    Rho2,
    Rho3,
}

impl BuiltinStatistic {
    pub const ALL: [BuiltinStatistic; 3] = [Self::Rho1, Self::Rho2, Self::Rho3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rho1 => "rho1",
            Self::Rho2 => "rho2",
            Self::Rho3 => "rho3",
        }
    }
}

impl fmt::Display for BuiltinStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuiltinStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rho1" | "f1" => Ok(Self::Rho1),
            "rho2" | "f2" => Ok(Self::Rho2),
            "rho3" | "f3" => Ok(Self::Rho3),
            other => Err(Error::InvalidInput(format!("unknown statistic `{other}`"))),
        }
    }
}

/// Coefficient vectors of the built-in statistics.
pub fn builtin_f(which: BuiltinStatistic, d: usize) -> Result<LinearStatistic> {
    check_dim(d)?;
    let lead = rho_scale(d) * (1u64 << d) as f64;
    let mut coef = SubsetVector::zeros(d);
    match which {
        BuiltinStatistic::Rho1 => coef.set(SubsetIndex::full(d), lead),
        BuiltinStatistic::Rho2 => {
            for a in all_subsets(d) {
                let sign = if a.len() % 2 == 0 { 1.0 } else { -1.0 };
                coef.set(a, sign * lead);
            }
        }
        BuiltinStatistic::Rho3 => {
            let w = 24.0 / (d * (d - 1)) as f64;
            for a in all_subsets(d).filter(|a| a.len() == 2) {
                coef.set(a, w);
            }
        }
    }
    LinearStatistic::new(which.as_str(), coef)
}

/// A continuous, not necessarily linear, map on subset vectors.
#[derive(Clone)]
pub struct ContinuousStatistic {
    pub name: String,
    pub d: usize,
    pub func: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for ContinuousStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousStatistic")
            .field("name", &self.name)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

/// The map `f` in `S_{n,f} = max_k |f(T_n(k/n))|`.
#[derive(Debug, Clone)]
pub enum Functional {
    Linear(LinearStatistic),
    Continuous(ContinuousStatistic),
}

impl Functional {
    pub fn builtin(which: BuiltinStatistic, d: usize) -> Result<Self> {
        builtin_f(which, d).map(Self::Linear)
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Linear(l) => &l.name,
            Self::Continuous(c) => &c.name,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Linear(l) => l.d(),
            Self::Continuous(c) => c.d,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Linear(l) => l.apply(x),
            Self::Continuous(c) => (c.func)(x),
        }
    }

    pub fn as_linear(&self) -> Option<&LinearStatistic> {
        match self {
            Self::Linear(l) => Some(l),
            Self::Continuous(_) => None,
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.d() != d {
            return Err(Error::DimensionMismatch {
                expected: subset_count(d),
                actual: subset_count(self.d()),
            });
        }
        Ok(())
    }
}

impl From<LinearStatistic> for Functional {
    fn from(l: LinearStatistic) -> Self {
        Self::Linear(l)
    }
}

/// `phi` vectors of all prefix windows `1..=k` and suffix windows `k+1..=n`,
/// each indexed by `k - 1`, as flat buffers of width `2^d - 1`.
pub(crate) struct SplitPhis {
    pub prefix: Vec<f64>,
    pub suffix: Vec<f64>,
}

pub(crate) fn split_phis(sample: &MultivariateSample, mode: DivisorMode) -> SplitPhis {
    let n = sample.n();
    let w = subset_count(sample.d());
    let mut prefix = vec![0.0; (n - 1) * w];
    let mut suffix = vec![0.0; (n - 1) * w];
    for_each_prefix(sample, mode, n - 1, |k, p| {
        prefix[(k - 1) * w..k * w].copy_from_slice(phi_all(p).as_slice());
    });
    for_each_suffix(sample, mode, |k, p| {
        suffix[(k - 1) * w..k * w].copy_from_slice(phi_all(p).as_slice());
    });
    SplitPhis { prefix, suffix }
}

/// Combines split `phi` vectors into `T_n(k/n)`, written into `out` (flat,
/// width `2^d - 1`, indexed by `k - 1`).
pub(crate) fn t_from_phis(n: usize, w: usize, phis: &SplitPhis) -> Vec<f64> {
    let nf = n as f64;
    let mut out = vec![0.0; (n - 1) * w];
    for k in 1..n {
        let scale = nf.sqrt() * (k as f64 / nf) * ((n - k) as f64 / nf);
        let base = (k - 1) * w;
        for s in 0..w {
            out[base + s] = scale * (phis.prefix[base + s] - phis.suffix[base + s]);
        }
    }
    out
}

/// The process `T_n(k/n)` for `k = 1..n-1` (entry `k - 1`).
pub fn t_process(sample: &MultivariateSample, mode: DivisorMode) -> Result<Vec<SubsetVector>> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::SeriesTooShort { n, min: 2 });
    }
    let d = sample.d();
    let w = subset_count(d);
    let flat = t_from_phis(n, w, &split_phis(sample, mode));
    Ok(flat
        .chunks_exact(w)
        .map(|c| SubsetVector::from_values(d, c.to_vec()).expect("width 2^d - 1"))
        .collect())
}

/// `|f(T_n(k/n))|` over all split points with its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticTrajectory {
    /// Entry `k - 1` holds the value at split `k`.
    pub values: Vec<f64>,
    /// Smallest maximizing split.
    pub argmax_k: usize,
    pub max_value: f64,
}

impl StatisticTrajectory {
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        let mut argmax_k = 1;
        let mut max_value = f64::NEG_INFINITY;
        for (i, &v) in values.iter().enumerate() {
            if v > max_value {
                max_value = v;
                argmax_k = i + 1;
            }
        }
        Self {
            values,
            argmax_k,
            max_value,
        }
    }
}

pub(crate) fn trajectory_from_t(t_flat: &[f64], w: usize, f: &Functional) -> StatisticTrajectory {
    StatisticTrajectory::from_values(t_flat.chunks_exact(w).map(|x| f.eval(x).abs()).collect())
}

/// `S_{n,f}` with its full trajectory.
pub fn statistic(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
) -> Result<StatisticTrajectory> {
    f.check_dim(sample.d())?;
    let n = sample.n();
    let w = subset_count(sample.d());
    let t = t_from_phis(n, w, &split_phis(sample, mode));
    Ok(trajectory_from_t(&t, w, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::pseudo_observations;

    fn comonotone(m: usize, d: usize) -> MultivariateSample {
        let rows: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64; d]).collect();
        MultivariateSample::from_rows(&rows).unwrap()
    }

    fn lcg_sample(n: usize, d: usize, seed: u64) -> MultivariateSample {
        let mut state = seed;
        let data = (0..n * d)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        MultivariateSample::from_row_major(data, n, d).unwrap()
    }

    #[test]
    fn phi_single_component_hand_sum() {
        // Ranks 1..4 divided by 4: 1 - (1/4) * sum(i/4) = 0.375.
        let s = lcg_sample(4, 2, 9);
        let p = pseudo_observations(&s, s.full_window(), DivisorMode::Theory).unwrap();
        let a = SubsetIndex::from_components(&[1], 2).unwrap();
        assert!((phi_a(&p, a).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn comonotone_phi_and_rhos() {
        let s = comonotone(3, 2);
        let p = pseudo_observations(&s, s.full_window(), DivisorMode::Simulation).unwrap();
        let phi = phi_a(&p, SubsetIndex::full(2)).unwrap();
        assert!((phi - 14.0 / 48.0).abs() < 1e-15);
        assert!((rho1(&p).unwrap() - 0.5).abs() < 1e-14);
        assert!((rho2(&p).unwrap() - 0.5).abs() < 1e-14);
        assert!((rho3(&p).unwrap() - rho1(&p).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rho3_equal_pairs_for_comonotone_d3() {
        let s = comonotone(7, 3);
        let p = pseudo_observations(&s, s.full_window(), DivisorMode::Simulation).unwrap();
        let pair = 12.0 * phi_a(&p, SubsetIndex::from_components(&[1, 3], 3).unwrap()).unwrap()
            - 3.0;
        assert!((rho3(&p).unwrap() - pair).abs() < 1e-14);
    }

    #[test]
    fn rho3_is_mean_of_pairwise_rho1() {
        let s = lcg_sample(8, 4, 77);
        let p = pseudo_observations(&s, s.full_window(), DivisorMode::Simulation).unwrap();
        let mut total = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let rows: Vec<[f64; 2]> = (0..8).map(|r| [s.get(r, i), s.get(r, j)]).collect();
                let pair = MultivariateSample::from_rows(&rows).unwrap();
                let pp =
                    pseudo_observations(&pair, pair.full_window(), DivisorMode::Simulation)
                        .unwrap();
                total += rho1(&pp).unwrap();
            }
        }
        assert!((rho3(&p).unwrap() - total / 6.0).abs() < 1e-13);
    }

    #[test]
    fn rho2_is_rho1_of_negated_sample() {
        for seed in 0..10 {
            let s = lcg_sample(9, 3, seed);
            let p = pseudo_observations(&s, s.full_window(), DivisorMode::Simulation).unwrap();
            let neg = s.negate();
            let pn =
                pseudo_observations(&neg, neg.full_window(), DivisorMode::Simulation).unwrap();
            assert!((rho2(&p).unwrap() - rho1(&pn).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn rho2_equals_rho1_in_two_dimensions() {
        for seed in 0..20 {
            let s = lcg_sample(6, 2, seed);
            let p = pseudo_observations(&s, s.full_window(), DivisorMode::Simulation).unwrap();
            assert!((rho2(&p).unwrap() - rho1(&p).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn builtin_coefficients() {
        let f1 = builtin_f(BuiltinStatistic::Rho1, 2).unwrap();
        assert_eq!(f1.coefficients.as_slice(), &[0.0, 0.0, 12.0]);
        let f3 = builtin_f(BuiltinStatistic::Rho3, 2).unwrap();
        assert_eq!(f3.coefficients.as_slice(), &[0.0, 0.0, 12.0]);
        let f2 = builtin_f(BuiltinStatistic::Rho2, 2).unwrap();
        assert_eq!(f2.coefficients.as_slice(), &[-12.0, -12.0, 12.0]);
        let f1d4 = builtin_f(BuiltinStatistic::Rho1, 4).unwrap();
        assert!((f1d4.coefficients.get(SubsetIndex::full(4)) - 80.0 / 11.0).abs() < 1e-14);
        assert!(builtin_f(BuiltinStatistic::Rho1, 1).is_err());
        assert!(rho1(&PseudoObservations::from_values(vec![0.5], 1, 1, DivisorMode::Simulation)
            .unwrap())
        .is_err());
    }

    #[test]
    fn empty_subset_rejected() {
        let p = PseudoObservations::from_values(vec![0.5, 0.5], 1, 2, DivisorMode::Simulation)
            .unwrap();
        assert!(SubsetIndex::new(0, 2).is_err());
        assert!(phi_a(&p, SubsetIndex::full(3)).is_err());
    }

    #[test]
    fn t_process_vanishes_for_identical_halves() {
        let half = lcg_sample(5, 2, 3);
        let mut rows: Vec<Vec<f64>> = (0..5).map(|i| half.row(i).to_vec()).collect();
        rows.extend((0..5).rev().map(|i| half.row(i).to_vec()));
        let s = MultivariateSample::from_rows(&rows).unwrap();
        let t = t_process(&s, DivisorMode::Simulation).unwrap();
        assert!(t[4].as_slice().iter().all(|v| v.abs() < 1e-15));
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let traj = statistic(&s, &f, DivisorMode::Simulation).unwrap();
        assert!(traj.values[4].abs() < 1e-14);
    }

    #[test]
    fn t_process_two_rows_is_zero() {
        let s = MultivariateSample::from_rows(&[[1.0, 3.0], [2.0, -1.0]]).unwrap();
        let t = t_process(&s, DivisorMode::Simulation).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t[0].as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn t_process_singleton_matches_brute_force() {
        let s = lcg_sample(6, 2, 11);
        let t = t_process(&s, DivisorMode::Simulation).unwrap();
        let a = SubsetIndex::from_components(&[1], 2).unwrap();
        for k in 1..6usize {
            let mean_one_minus = |rows: &[f64]| {
                // Brute-force maximal ranks within the window.
                let m = rows.len();
                rows.iter()
                    .map(|x| {
                        let r = rows.iter().filter(|y| *y <= x).count();
                        1.0 - r as f64 / (m + 1) as f64
                    })
                    .sum::<f64>()
                    / m as f64
            };
            let c0: Vec<f64> = s.column(0).collect();
            let diff = mean_one_minus(&c0[..k]) - mean_one_minus(&c0[k..]);
            let expected = 6f64.sqrt() * (k as f64 / 6.0) * ((6 - k) as f64 / 6.0) * diff;
            assert!((t[k - 1].get(a) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn argmax_prefers_smallest_split() {
        let t = StatisticTrajectory::from_values(vec![0.1, 0.5, 0.2, 0.5]);
        assert_eq!(t.argmax_k, 2);
        assert_eq!(t.max_value, 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let s = lcg_sample(6, 3, 1);
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        assert!(matches!(
            statistic(&s, &f, DivisorMode::Simulation),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn continuous_functional_hook() {
        let s = lcg_sample(12, 2, 5);
        let f = Functional::Continuous(ContinuousStatistic {
            name: "sq".into(),
            d: 2,
            func: Arc::new(|x: &[f64]| x[2] * x[2]),
        });
        let lin = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let a = statistic(&s, &f, DivisorMode::Simulation).unwrap();
        let b = statistic(&s, &lin, DivisorMode::Simulation).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - (y / 12.0).powi(2)).abs() < 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn distinct_rows(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
            // Distinct values per column via shuffled integers plus jitter.
            (Just(n), any::<u64>()).prop_map(|(n, seed)| {
                let s = lcg_sample(n, 2, seed);
                (0..n).map(|i| [s.get(i, 0), s.get(i, 1)]).collect()
            })
        }

        proptest! {
            #[test]
            fn monotone_transform_leaves_statistic_unchanged(rows in (3usize..25).prop_flat_map(distinct_rows)) {
                let s = MultivariateSample::from_rows(&rows).unwrap();
                let g: Vec<[f64; 2]> = rows.iter().map(|r| [r[0].ln(), 5.0 * r[1] + 1.0]).collect();
                let g = MultivariateSample::from_rows(&g).unwrap();
                let f = Functional::builtin(BuiltinStatistic::Rho2, 2).unwrap();
                let a = statistic(&s, &f, DivisorMode::Simulation).unwrap();
                let b = statistic(&g, &f, DivisorMode::Simulation).unwrap();
                prop_assert_eq!(a.values, b.values);
            }

            #[test]
            fn statistic_nonnegative(rows in (2usize..25).prop_flat_map(distinct_rows)) {
                let s = MultivariateSample::from_rows(&rows).unwrap();
                for which in BuiltinStatistic::ALL {
                    let f = Functional::builtin(which, 2).unwrap();
                    let t = statistic(&s, &f, DivisorMode::Simulation).unwrap();
                    prop_assert!(t.values.iter().all(|v| *v >= 0.0));
                    prop_assert!(t.max_value >= 0.0);
                }
            }
        }
    }
}
