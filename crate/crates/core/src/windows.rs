//! Sweeps over the prefix windows `1..=k` and suffix windows `k+1..=n` that
//! every split-point statistic needs.

use crate::sample::{DivisorMode, MultivariateSample, PseudoObservations, RankSweep};

/// Visits the prefix windows `1..=k` for `k = 1..=last`, passing `k` and the
/// window's pseudo-observations in time order.
pub(crate) fn for_each_prefix(
    sample: &MultivariateSample,
    mode: DivisorMode,
    last: usize,
    mut visit: impl FnMut(usize, &PseudoObservations),
) {
    let d = sample.d();
    let mut sweep = RankSweep::new(d, last);
    for k in 1..=last {
        sweep.push(sample.row(k - 1));
        let pobs = PseudoObservations::from_ranks(sweep.ranks(), k, d, mode);
        visit(k, &pobs);
    }
}

/// Visits the suffix windows `k+1..=n` for `k = n-1` down to `1`, passing `k`
/// and the window's pseudo-observations in time order.
pub(crate) fn for_each_suffix(
    sample: &MultivariateSample,
    mode: DivisorMode,
    mut visit: impl FnMut(usize, &PseudoObservations),
) {
    let n = sample.n();
    let d = sample.d();
    let mut sweep = RankSweep::new(d, n);
    let mut ordered = Vec::with_capacity(n * d);
    for k in (1..n).rev() {
        sweep.push(sample.row(k));
        let m = n - k;
        // The sweep holds rows newest-first; flip back to time order.
        ordered.clear();
        for chunk in sweep.ranks().chunks_exact(d).rev() {
            ordered.extend_from_slice(chunk);
        }
        let pobs = PseudoObservations::from_ranks(&ordered, m, d, mode);
        visit(k, &pobs);
    }
}
