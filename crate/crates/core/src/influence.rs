//! Smoothed influence functions of `phi_A` with respect to a window's
//! empirical copula.
//!
//! For a window with pseudo-observations `V_1..V_m`, a subset `A` and a point
//! `u`,
//!
//! ```text
//! I_A(u) = prod_{l in A}(1 - u_l)
//!          - (1/m) sum_r sum_{j in A} prod_{l in A\{j}}(1 - V_rl) L_b(u_j, V_rj)
//! ```
//!
//! where `L_b(u, .)` ramps linearly from 0 to 1 on `(u - b, u + b)` (clipped to
//! `[0, 1]`). Letting `b -> 0` recovers the indicator `1(u_j <= V_rj)`.
//!
//! Evaluating `I_A` at every row of the window directly costs `O(m^2)`. The
//! pseudo-observations of a column are ranks over a common divisor, so the
//! inner sum over `r` splits into rows above the ramp and rows inside it; with
//! weights bucketed by rank and prefix-summed, each query costs `O(1)`.

use crate::error::{Error, Result};
use crate::sample::PseudoObservations;
use crate::spearman::subset_products;
use crate::subset::{subset_count, SubsetIndex, SubsetVector};

/// The ramp `L_b(u, v)`.
#[inline]
pub fn smoothing_l(u: f64, v: f64, b: f64) -> f64 {
    let hi = (u + b).min(1.0);
    let lo = (u - b).max(0.0);
    (hi.min(v) - lo.min(v)) / (hi - lo)
}

/// Direct evaluation of the smoothed influence at an arbitrary point.
pub fn smoothed_influence(
    pobs: &PseudoObservations,
    a: SubsetIndex,
    u: &[f64],
    b_n: f64,
) -> Result<f64> {
    check_point(pobs, a, u)?;
    check_bandwidth(b_n)?;
    Ok(direct_influence(pobs, a, u, |uj, v| smoothing_l(uj, v, b_n)))
}

/// Unsmoothed influence with the indicator `1(u_j <= v_j)`.
#[cfg(test)]
pub(crate) fn indicator_influence(pobs: &PseudoObservations, a: SubsetIndex, u: &[f64]) -> f64 {
    direct_influence(pobs, a, u, |uj, v| if uj <= v { 1.0 } else { 0.0 })
}

fn direct_influence(
    pobs: &PseudoObservations,
    a: SubsetIndex,
    u: &[f64],
    ramp: impl Fn(f64, f64) -> f64,
) -> f64 {
    let lead: f64 = a.members().map(|l| 1.0 - u[l]).product();
    let mut integral = 0.0;
    for row in pobs.rows() {
        for j in a.members() {
            let others: f64 = a
                .members()
                .filter(|&l| l != j)
                .map(|l| 1.0 - row[l])
                .product();
            integral += others * ramp(u[j], row[j]);
        }
    }
    lead - integral / pobs.m() as f64
}

/// All subsets at once, canonical order.
pub fn influence_vector(pobs: &PseudoObservations, u: &[f64], b_n: f64) -> Result<SubsetVector> {
    let d = pobs.d();
    check_bandwidth(b_n)?;
    let mut out = SubsetVector::zeros(d);
    for a in crate::subset::all_subsets(d) {
        check_point(pobs, a, u)?;
        out.set(a, direct_influence(pobs, a, u, |uj, v| smoothing_l(uj, v, b_n)));
    }
    Ok(out)
}

fn check_point(pobs: &PseudoObservations, a: SubsetIndex, u: &[f64]) -> Result<()> {
    if u.len() != pobs.d() {
        return Err(Error::DimensionMismatch {
            expected: pobs.d(),
            actual: u.len(),
        });
    }
    if a.is_empty() || (a.mask() >> pobs.d()) != 0 {
        return Err(Error::InvalidSubset { d: pobs.d() });
    }
    if u.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Domain("influence point must lie in [0,1]^d".into()));
    }
    Ok(())
}

pub(crate) fn check_bandwidth(b_n: f64) -> Result<()> {
    if !(b_n > 0.0 && b_n < 1.0) {
        return Err(Error::InvalidParameter {
            name: "b_n",
            reason: format!("must lie in (0, 1), got {b_n}"),
        });
    }
    Ok(())
}

/// Reusable scratch space for [`window_influences`].
#[derive(Debug, Default)]
pub(crate) struct InfluenceScratch {
    products: Vec<f64>,
    ranks: Vec<usize>,
    bucket_w: Vec<f64>,
    bucket_wv: Vec<f64>,
}

/// Smoothed influences of every row of a window at its own pseudo-observation,
/// for every subset. Writes `m x (2^d - 1)` values (row-major) into `out`.
pub(crate) fn window_influences(
    pobs: &PseudoObservations,
    b: f64,
    scratch: &mut InfluenceScratch,
    out: &mut [f64],
) {
    let m = pobs.m();
    let d = pobs.d();
    let full = 1usize << d;
    let w = subset_count(d);
    debug_assert_eq!(out.len(), m * w);
    let div = pobs.mode().divisor(m);

    let InfluenceScratch {
        products,
        ranks,
        bucket_w,
        bucket_wv,
    } = scratch;
    products.resize(m * full, 0.0);
    for (i, row) in pobs.rows().enumerate() {
        subset_products(row, &mut products[i * full..(i + 1) * full]);
    }
    ranks.clear();
    ranks.extend(pobs.as_row_major().iter().map(|v| (v * div).round() as usize));
    bucket_w.resize(m + 1, 0.0);
    bucket_wv.resize(m + 1, 0.0);

    // Leading products first; the integral terms are subtracted below.
    for i in 0..m {
        out[i * w..(i + 1) * w].copy_from_slice(&products[i * full + 1..(i + 1) * full]);
    }
    let inv_m = 1.0 / m as f64;
    for mask in 1..full {
        for j in (0..d).filter(|j| mask & (1 << j) != 0) {
            let rest = mask ^ (1 << j);
            bucket_w.iter_mut().for_each(|x| *x = 0.0);
            bucket_wv.iter_mut().for_each(|x| *x = 0.0);
            for r in 0..m {
                let weight = products[r * full + rest];
                let rank = ranks[r * d + j];
                bucket_w[rank] += weight;
                bucket_wv[rank] += weight * rank as f64 / div;
            }
            // Prefix sums over ranks 0..=m (slot 0 is always empty).
            for r in 1..=m {
                bucket_w[r] += bucket_w[r - 1];
                bucket_wv[r] += bucket_wv[r - 1];
            }
            let total = bucket_w[m];
            for i in 0..m {
                let u = pobs.as_row_major()[i * d + j];
                let hi = (u + b).min(1.0);
                let lo = (u - b).max(0.0);
                // Ranks <= below sit left of the ramp, ranks >= above right of
                // it. Misplacing a boundary rank is harmless because the ramp is
                // continuous there.
                let below = ((lo * div).floor().max(0.0) as usize).min(m);
                let above = ((hi * div).ceil() as usize).max(below + 1);
                let last_inside = (above - 1).min(m);
                let right = if above <= m {
                    total - bucket_w[above - 1]
                } else {
                    0.0
                };
                let inside_w = bucket_w[last_inside] - bucket_w[below];
                let inside_wv = bucket_wv[last_inside] - bucket_wv[below];
                let ramp = (inside_wv - lo * inside_w) / (hi - lo);
                out[i * w + mask - 1] -= (right + ramp) * inv_m;
            }
        }
    }
}
