//! Per-dataset precomputation shared by the bootstrap, the asymptotic test and
//! the bandwidth selector.
//!
//! Building a [`ChangePointAnalysis`] sweeps every prefix window `1..=k` and
//! suffix window `k+1..=n` once, storing the statistic's trajectory and the
//! smoothed influences of each window's rows. For linear `f` the influences are
//! collapsed to `sum_A a_A I_A`, so a replicate costs one dot product per
//! split point.

use crate::error::{Error, Result};
use crate::influence::{check_bandwidth, window_influences, InfluenceScratch};
use crate::sample::{DivisorMode, MultivariateSample};
use crate::spearman::{
    phi_all, t_from_phis, trajectory_from_t, Functional, SplitPhis, StatisticTrajectory,
};
use crate::subset::subset_count;
use crate::windows::{for_each_prefix, for_each_suffix};

#[derive(Debug, Clone)]
pub struct ChangePointAnalysis {
    n: usize,
    d: usize,
    functional: Functional,
    mode: DivisorMode,
    b_n: f64,
    trajectory: StatisticTrajectory,
    /// 1 for linear `f`, otherwise `2^d - 1`.
    width: usize,
    /// Window `1..=k` at offset `width * k(k-1)/2`, rows in time order.
    prefix: Vec<f64>,
    /// Window `k+1..=n` at `suffix_offset(k)`.
    suffix: Vec<f64>,
    /// Sums of each stored row block per window (linear `f` only).
    prefix_sums: Vec<f64>,
    suffix_sums: Vec<f64>,
    /// Full-sample influences, `n x (2^d - 1)`.
    full: Vec<f64>,
}

impl ChangePointAnalysis {
    pub fn new(
        sample: &MultivariateSample,
        functional: &Functional,
        mode: DivisorMode,
        b_n: f64,
    ) -> Result<Self> {
        functional.check_dim(sample.d())?;
        check_bandwidth(b_n)?;
        let n = sample.n();
        let d = sample.d();
        let w_all = subset_count(d);
        let coefficients = functional.as_linear().map(|l| l.coefficients.as_slice().to_vec());
        let width = if coefficients.is_some() { 1 } else { w_all };

        let collapse = |buf: &[f64], out: &mut Vec<f64>| match &coefficients {
            Some(a) => out.extend(
                buf.chunks_exact(w_all)
                    .map(|row| row.iter().zip(a).map(|(x, c)| x * c).sum::<f64>()),
            ),
            None => out.extend_from_slice(buf),
        };

        let mut scratch = InfluenceScratch::default();
        let mut buf = Vec::new();
        let mut phis = SplitPhis {
            prefix: vec![0.0; (n - 1) * w_all],
            suffix: vec![0.0; (n - 1) * w_all],
        };
        let mut prefix = Vec::with_capacity(width * n * (n - 1) / 2);
        let mut full = Vec::new();
        for_each_prefix(sample, mode, n, |k, p| {
            buf.resize(k * w_all, 0.0);
            window_influences(p, b_n, &mut scratch, &mut buf);
            if k < n {
                phis.prefix[(k - 1) * w_all..k * w_all].copy_from_slice(phi_all(p).as_slice());
                collapse(&buf, &mut prefix);
            } else {
                full = buf.clone();
            }
        });
        // The suffix sweep runs k = n-1 down to 1; collect the blocks and lay
        // them out in increasing k afterwards.
        let mut blocks: Vec<Vec<f64>> = vec![Vec::new(); n];
        for_each_suffix(sample, mode, |k, p| {
            buf.resize(p.m() * w_all, 0.0);
            window_influences(p, b_n, &mut scratch, &mut buf);
            phis.suffix[(k - 1) * w_all..k * w_all].copy_from_slice(phi_all(p).as_slice());
            let mut block = Vec::with_capacity(p.m() * width);
            collapse(&buf, &mut block);
            blocks[k] = block;
        });
        let suffix: Vec<f64> = blocks.into_iter().flatten().collect();

        let t = t_from_phis(n, w_all, &phis);
        let trajectory = trajectory_from_t(&t, w_all, functional);

        let mut this = Self {
            n,
            d,
            functional: functional.clone(),
            mode,
            b_n,
            trajectory,
            width,
            prefix,
            suffix,
            prefix_sums: Vec::new(),
            suffix_sums: Vec::new(),
            full,
        };
        if width == 1 {
            this.prefix_sums = (1..n).map(|k| this.prefix_block(k).iter().sum()).collect();
            this.suffix_sums = (1..n).map(|k| this.suffix_block(k).iter().sum()).collect();
        }
        Ok(this)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn mode(&self) -> DivisorMode {
        self.mode
    }

    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    pub fn trajectory(&self) -> &StatisticTrajectory {
        &self.trajectory
    }

    /// `S_{n,f}`.
    pub fn statistic(&self) -> f64 {
        self.trajectory.max_value
    }

    fn prefix_block(&self, k: usize) -> &[f64] {
        let start = self.width * k * (k - 1) / 2;
        &self.prefix[start..start + self.width * k]
    }

    fn suffix_block(&self, k: usize) -> &[f64] {
        let n = self.n;
        let start = self.width * ((k - 1) * n - (k - 1) * k / 2);
        &self.suffix[start..start + self.width * (n - k)]
    }

    /// Smoothed influences of the full-sample pseudo-observations, row `i`
    /// holding all subsets in canonical order.
    pub fn full_influences(&self) -> &[f64] {
        &self.full
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: xi.len(),
            });
        }
        Ok(())
    }

    /// `|f(T~(k/n))|` for `k = 1..n-1` under multipliers `xi`.
    pub fn replicate_process(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_xi(xi)?;
        let mut cum = vec![0.0; self.n + 1];
        for i in 0..self.n {
            cum[i + 1] = cum[i] + xi[i];
        }
        let mut scratch = vec![0.0; 2 * self.width];
        Ok((1..self.n)
            .map(|k| self.replicate_at(xi, &cum, k, &mut scratch))
            .collect())
    }

    /// `max_k |f(T~(k/n))|` under multipliers `xi`.
    pub fn replicate(&self, xi: &[f64]) -> Result<f64> {
        Ok(self
            .replicate_process(xi)?
            .into_iter()
            .fold(0.0, f64::max))
    }

    fn replicate_at(&self, xi: &[f64], cum: &[f64], k: usize, scratch: &mut [f64]) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let mean_pre = cum[k] / k as f64;
        let mean_suf = (cum[n] - cum[k]) / (n - k) as f64;
        let w_pre = (n - k) as f64 / nf;
        let w_suf = k as f64 / nf;
        let scale = 1.0 / nf.sqrt();
        if self.width == 1 {
            let s_pre = dot(&xi[..k], self.prefix_block(k)) - mean_pre * self.prefix_sums[k - 1];
            let s_suf = dot(&xi[k..], self.suffix_block(k)) - mean_suf * self.suffix_sums[k - 1];
            return (scale * (w_pre * s_pre - w_suf * s_suf)).abs();
        }
        let w = self.width;
        let (pre, suf) = scratch.split_at_mut(w);
        pre.iter_mut().for_each(|x| *x = 0.0);
        suf.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.prefix_block(k).chunks_exact(w).enumerate() {
            let c = xi[i] - mean_pre;
            pre.iter_mut().zip(row).for_each(|(acc, v)| *acc += c * v);
        }
        for (i, row) in self.suffix_block(k).chunks_exact(w).enumerate() {
            let c = xi[k + i] - mean_suf;
            suf.iter_mut().zip(row).for_each(|(acc, v)| *acc += c * v);
        }
        for s in 0..w {
            pre[s] = scale * (w_pre * pre[s] - w_suf * suf[s]);
        }
        self.functional.eval(pre).abs()
    }

    /// Centered series `y_i = f(I(U_i) - I_bar)` for linear `f`.
    pub fn centered_influence_series(&self) -> Result<Vec<f64>> {
        let mut y = self.influence_series()?;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        y.iter_mut().for_each(|v| *v -= mean);
        Ok(y)
    }

    /// Uncentered series `y_i = f(I(U_i))` for linear `f`.
    pub fn influence_series(&self) -> Result<Vec<f64>> {
        let lin = self.functional.as_linear().ok_or_else(|| {
            Error::Unsupported("the influence series needs a linear statistic".into())
        })?;
        let w = subset_count(self.d);
        Ok(self.full.chunks_exact(w).map(|row| lin.apply(row)).collect())
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::smoothed_influence;
    use crate::sample::{pseudo_observations, SubsampleWindow};
    use crate::spearman::{statistic, BuiltinStatistic, ContinuousStatistic};
    use crate::subset::all_subsets;
    use std::sync::Arc;

    fn lcg(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed;
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    fn sample(n: usize, d: usize, seed: u64) -> MultivariateSample {
        MultivariateSample::from_row_major(lcg(n * d, seed), n, d).unwrap()
    }

    #[test]
    fn trajectory_matches_direct_statistic() {
        let s = sample(30, 3, 5);
        for which in BuiltinStatistic::ALL {
            let f = Functional::builtin(which, 3).unwrap();
            let a = ChangePointAnalysis::new(&s, &f, DivisorMode::Simulation, 0.2).unwrap();
            let direct = statistic(&s, &f, DivisorMode::Simulation).unwrap();
            assert_eq!(a.trajectory(), &direct);
        }
    }

    #[test]
    fn stored_blocks_match_window_influences() {
        let n = 9;
        let s = sample(n, 2, 7);
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let coef = f.as_linear().unwrap().coefficients.clone();
        let a = ChangePointAnalysis::new(&s, &f, DivisorMode::Theory, 0.15).unwrap();
        for k in 1..n {
            for (window, block) in [
                (SubsampleWindow::new(1, k), a.prefix_block(k)),
                (SubsampleWindow::new(k + 1, n), a.suffix_block(k)),
            ] {
                let p = pseudo_observations(&s, window, DivisorMode::Theory).unwrap();
                for i in 0..p.m() {
                    let direct: f64 = all_subsets(2)
                        .map(|sub| {
                            coef.get(sub) * smoothed_influence(&p, sub, p.row(i), 0.15).unwrap()
                        })
                        .sum();
                    assert!((direct - block[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn nonlinear_path_agrees_with_linear_path_for_linear_closure() {
        let s = sample(15, 2, 11);
        let lin = Functional::builtin(BuiltinStatistic::Rho2, 2).unwrap();
        let coef = lin.as_linear().unwrap().coefficients.as_slice().to_vec();
        let closure = Functional::Continuous(ContinuousStatistic {
            name: "copy".into(),
            d: 2,
            func: Arc::new(move |x: &[f64]| x.iter().zip(&coef).map(|(a, b)| a * b).sum()),
        });
        let a = ChangePointAnalysis::new(&s, &lin, DivisorMode::Simulation, 0.1).unwrap();
        let b = ChangePointAnalysis::new(&s, &closure, DivisorMode::Simulation, 0.1).unwrap();
        let xi = lcg(15, 99);
        let ra = a.replicate_process(&xi).unwrap();
        let rb = b.replicate_process(&xi).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_short_multipliers() {
        let s = sample(20, 2, 1);
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let a = ChangePointAnalysis::new(&s, &f, DivisorMode::Simulation, 0.1).unwrap();
        assert!(a.replicate(&[1.7; 20]).unwrap() < 1e-12);
        assert!(a.replicate(&[0.0; 19]).is_err());
        let two = sample(2, 2, 3);
        let a2 = ChangePointAnalysis::new(&two, &f, DivisorMode::Simulation, 0.5).unwrap();
        assert_eq!(a2.replicate(&[0.3, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn negated_multipliers_give_same_replicate() {
        let s = sample(25, 3, 2);
        let f = Functional::builtin(BuiltinStatistic::Rho3, 3).unwrap();
        let a = ChangePointAnalysis::new(&s, &f, DivisorMode::Simulation, 0.1).unwrap();
        let xi = lcg(25, 4);
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        let (p, q) = (a.replicate(&xi).unwrap(), a.replicate(&neg).unwrap());
        assert!((p - q).abs() <= 1e-14 * p.max(1.0));
    }

    #[test]
    fn dot_matches_naive() {
        let a = lcg(23, 1);
        let b = lcg(23, 2);
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-14);
    }
}
