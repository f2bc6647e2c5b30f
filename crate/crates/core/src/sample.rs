//! Observation matrices, subsample windows, maximal ranks and
//! pseudo-observations.
//!
//! Windows are 1-based and inclusive on both ends, so `SubsampleWindow::new(1, n)`
//! covers the whole sample. Ranks are *maximal* ranks: the rank of `X_ij` in a
//! window is the number of window rows `t` with `X_tj <= X_ij`, so tied values
//! share the largest applicable rank.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x d` matrix of finite observations, rows indexed by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateSample {
    data: Vec<f64>,
    n: usize,
    d: usize,
    names: Option<Vec<String>>,
}

impl MultivariateSample {
    /// Builds a sample from row-major data.
    pub fn from_row_major(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: data.len(),
            });
        }
        if n < 2 {
            return Err(Error::SeriesTooShort { n, min: 2 });
        }
        if d < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 components, got {d}"
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                pos / d + 1,
                pos % d + 1
            )));
        }
        Ok(Self {
            data,
            n,
            d,
            names: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(data, rows.len(), d)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Row `i`, 0-based.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.get(i, j))
    }

    /// Entrywise negation. Realizes the survival-copula statistic through the
    /// ordinary one on tie-free data.
    pub fn negate(&self) -> Self {
        Self {
            data: self.data.iter().map(|x| -x).collect(),
            n: self.n,
            d: self.d,
            names: self.names.clone(),
        }
    }

    pub fn full_window(&self) -> SubsampleWindow {
        SubsampleWindow {
            start: 1,
            end: self.n,
        }
    }
}

/// Free-function form of [`MultivariateSample::negate`].
pub fn negate_sample(sample: &MultivariateSample) -> MultivariateSample {
    sample.negate()
}

/// Rows `start..=end` of a sample, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampleWindow {
    pub start: usize,
    pub end: usize,
}

impl SubsampleWindow {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.start < 1 || self.start > self.end || self.end > n {
            return Err(Error::WindowOutOfBounds {
                start: self.start,
                end: self.end,
                n,
            });
        }
        Ok(())
    }
}

/// Divisor applied to maximal ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivisorMode {
    /// Divide by the window length `m`.
    Theory,
    /// Divide by `m + 1`; the default for simulations.
    #[default]
    Simulation,
}

impl DivisorMode {
    #[inline]
    pub fn divisor(self, m: usize) -> f64 {
        match self {
            DivisorMode::Theory => m as f64,
            DivisorMode::Simulation => (m + 1) as f64,
        }
    }
}

impl std::str::FromStr for DivisorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(Self::Theory),
            "simulation" => Ok(Self::Simulation),
            other => Err(Error::InvalidInput(format!("unknown divisor mode {other:?}"))),
        }
    }
}

/// Maximal ranks of a window, row-major `m x d`, values in `1..=m`.
pub fn maximal_ranks(sample: &MultivariateSample, window: SubsampleWindow) -> Result<Vec<usize>> {
    window.check(sample.n())?;
    let d = sample.d();
    let m = window.len();
    let first = window.start - 1;
    let mut ranks = vec![0usize; m * d];
    let mut order: Vec<usize> = (0..m).collect();
    for j in 0..d {
        let value = |i: usize| sample.get(first + i, j);
        order.sort_unstable_by(|&a, &b| value(a).total_cmp(&value(b)));
        // Walk groups of equal values; every member gets the index of the
        // group's last element.
        let mut lo = 0;
        while lo < m {
            let mut hi = lo + 1;
            while hi < m && value(order[hi]) == value(order[lo]) {
                hi += 1;
            }
            for &i in &order[lo..hi] {
                ranks[i * d + j] = hi;
            }
            lo = hi;
        }
    }
    Ok(ranks)
}

/// Scaled maximal ranks of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    values: Vec<f64>,
    m: usize,
    d: usize,
    mode: DivisorMode,
}

impl PseudoObservations {
    /// Wraps already-scaled values. Mostly useful in tests.
    pub fn from_values(values: Vec<f64>, m: usize, d: usize, mode: DivisorMode) -> Result<Self> {
        if values.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                actual: values.len(),
            });
        }
        if m == 0 {
            return Err(Error::InvalidInput("empty pseudo-observation set".into()));
        }
        Ok(Self { values, m, d, mode })
    }

    pub(crate) fn from_ranks(ranks: &[usize], m: usize, d: usize, mode: DivisorMode) -> Self {
        let div = mode.divisor(m);
        Self {
            values: ranks.iter().map(|&r| r as f64 / div).collect(),
            m,
            d,
            mode,
        }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> DivisorMode {
        self.mode
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.values
    }
}

pub fn pseudo_observations(
    sample: &MultivariateSample,
    window: SubsampleWindow,
    mode: DivisorMode,
) -> Result<PseudoObservations> {
    let ranks = maximal_ranks(sample, window)?;
    Ok(PseudoObservations::from_ranks(
        &ranks,
        window.len(),
        sample.d(),
        mode,
    ))
}

/// Empirical copula of the window at `u`: the fraction of rows lying
/// componentwise below `u`.
pub fn empirical_copula_eval(pobs: &PseudoObservations, u: &[f64]) -> Result<f64> {
    if u.len() != pobs.d() {
        return Err(Error::DimensionMismatch {
            expected: pobs.d(),
            actual: u.len(),
        });
    }
    if u.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Domain("copula argument must lie in [0,1]^d".into()));
    }
    let below = pobs
        .rows()
        .filter(|row| row.iter().zip(u).all(|(a, b)| a <= b))
        .count();
    Ok(below as f64 / pobs.m() as f64)
}

/// Maximal ranks maintained under row insertion, `O(m d)` per insertion.
///
/// Used to sweep growing prefix windows `1..=k` (rows pushed in time order) or
/// growing suffix windows `k..=n` (rows pushed in reverse time order) without
/// re-sorting each window.
#[derive(Debug, Clone)]
pub(crate) struct RankSweep {
    d: usize,
    /// Values of the rows inserted so far, in insertion order.
    values: Vec<f64>,
    /// Current maximal ranks, same layout as `values`.
    ranks: Vec<usize>,
}

impl RankSweep {
    pub(crate) fn new(d: usize, capacity: usize) -> Self {
        Self {
            d,
            values: Vec::with_capacity(capacity * d),
            ranks: Vec::with_capacity(capacity * d),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.values.len() / self.d
    }

    pub(crate) fn push(&mut self, row: &[f64]) {
        let d = self.d;
        let m = self.len();
        for (j, &x) in row.iter().enumerate() {
            let mut own = 1;
            for i in 0..m {
                let v = self.values[i * d + j];
                if x <= v {
                    self.ranks[i * d + j] += 1;
                }
                if v <= x {
                    own += 1;
                }
            }
            self.ranks.push(own);
        }
        // Ranks were pushed column by column for the new row; values follow.
        self.values.extend_from_slice(row);
    }

    /// Ranks in insertion order, row-major.
    pub(crate) fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}
