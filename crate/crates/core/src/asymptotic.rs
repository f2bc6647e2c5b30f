//! Long-run variance of the influence series and the Kolmogorov-limit test.

use serde::{Deserialize, Serialize};

use crate::analysis::ChangePointAnalysis;
use crate::bandwidth::influence_series;
use crate::error::{invalid_param, Error, Result};
use crate::multiplier::KernelShape;
use crate::report::{Method, TestReport};
use crate::sample::{DivisorMode, MultivariateSample};
use crate::spearman::Functional;

/// Variances at or below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum VarianceForm {
    Iid,
    Hac { ell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma2: f64,
    #[serde(flatten)]
    pub form: VarianceForm,
    pub b_n: f64,
}

/// How the asymptotic test treats serial dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Serial {
    Iid,
    Dependent { ell: usize },
}

fn centered(mut y: Vec<f64>) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter_mut().for_each(|v| *v -= mean);
    y
}

/// `(1/n) sum y_i^2` of an already centered series.
pub fn iid_variance_of(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

/// `(1/n) sum_i sum_j phi((i-j)/ell) y_i y_j` of an already centered series.
pub fn hac_variance_of(y: &[f64], ell: usize, kernel: &KernelShape) -> Result<f64> {
    if ell == 0 {
        return Err(invalid_param("ell", "must be at least 1"));
    }
    let n = y.len();
    let mut total: f64 = y.iter().map(|v| v * v).sum();
    for h in 1..ell.min(n) {
        let weight = kernel.phi(h as f64 / ell as f64);
        if weight == 0.0 {
            continue;
        }
        let cross: f64 = y.iter().zip(&y[h..]).map(|(a, b)| a * b).sum();
        total += 2.0 * weight * cross;
    }
    Ok((total / n as f64).max(0.0))
}

pub fn variance_iid(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    b_n: f64,
) -> Result<VarianceEstimate> {
    let y = centered(influence_series(sample, f, mode, b_n)?);
    Ok(VarianceEstimate {
        sigma2: iid_variance_of(&y),
        form: VarianceForm::Iid,
        b_n,
    })
}

pub fn variance_hac(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    b_n: f64,
    ell: usize,
    kernel: &KernelShape,
) -> Result<VarianceEstimate> {
    let y = centered(influence_series(sample, f, mode, b_n)?);
    Ok(VarianceEstimate {
        sigma2: hac_variance_of(&y, ell, kernel)?,
        form: VarianceForm::Hac { ell },
        b_n,
    })
}

/// `P(sup_s |B(s)| > x)` for a Brownian bridge `B`.
pub fn kolmogorov_sf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("Kolmogorov argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < 1.0 {
        // The alternating series converges slowly near 0; use the dual theta
        // series for the distribution function instead.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=64u32 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * pi2 / (8.0 * x * x)).exp();
            cdf += term;
            if term < 1e-17 * cdf.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / x;
        return Ok((1.0 - cdf).clamp(0.0, 1.0));
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 * sum.abs() || term == 0.0 {
            break;
        }
    }
    Ok((2.0 * sum).clamp(0.0, 1.0))
}

/// Asymptotic test on a precomputed analysis. Needs a linear statistic.
pub fn asymptotic_test(
    analysis: &ChangePointAnalysis,
    serial: Serial,
    kernel: &KernelShape,
    seed: u64,
) -> Result<TestReport> {
    let y = analysis.centered_influence_series()?;
    let (sigma2, form) = match serial {
        Serial::Iid => (iid_variance_of(&y), VarianceForm::Iid),
        Serial::Dependent { ell } => (hac_variance_of(&y, ell, kernel)?, VarianceForm::Hac { ell }),
    };
    if sigma2 <= VARIANCE_FLOOR {
        return Err(Error::DegenerateVariance(sigma2));
    }
    let trajectory = analysis.trajectory();
    let studentized = trajectory.max_value / sigma2.sqrt();
    Ok(TestReport {
        statistic_name: analysis.functional().name().to_string(),
        statistic_value: trajectory.max_value,
        p_value: kolmogorov_sf(studentized)?,
        method: Method::Asymptotic,
        changepoint_index: trajectory.argmax_k,
        ell_used: match serial {
            Serial::Iid => None,
            Serial::Dependent { ell } => Some(ell),
        },
        b_n: analysis.b_n(),
        replicates: None,
        seed,
        n: analysis.n(),
        d: analysis.d(),
        variance: Some(VarianceEstimate {
            sigma2,
            form,
            b_n: analysis.b_n(),
        }),
        studentized: Some(studentized),
    })
}

pub fn asymptotic_pvalue(
    sample: &MultivariateSample,
    f: &Functional,
    mode: DivisorMode,
    b_n: f64,
    serial: Serial,
) -> Result<TestReport> {
    if f.as_linear().is_none() {
        return Err(Error::Unsupported(
            "the asymptotic test needs a linear statistic".into(),
        ));
    }
    let analysis = ChangePointAnalysis::new(sample, f, mode, b_n)?;
    asymptotic_test(&analysis, serial, KernelShape::parzen(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spearman::BuiltinStatistic;

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

    #[test]
    fn kolmogorov_values() {
        assert_eq!(kolmogorov_sf(0.0).unwrap(), 1.0);
        assert!(kolmogorov_sf(10.0).unwrap() < 1e-80);
        let p = kolmogorov_sf(1.358).unwrap();
        assert!((p - 0.0502).abs() < 2e-4, "{p}");
        assert!(kolmogorov_sf(-0.1).is_err());
        // The two series agree where both converge well.
        let x: f64 = 1.0;
        let mut alt = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            alt += 2.0 * (-1f64).powi(k + 1) * (-2.0 * kf * kf * x * x).exp();
        }
        let theta = kolmogorov_sf(1.0 - 1e-12).unwrap();
        assert!((alt - theta).abs() < 1e-10);
        let mut prev = 1.0;
        for i in 0..=280 {
            let v = kolmogorov_sf(0.2 + i as f64 * 0.01).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn hac_edge_cases() {
        let k = KernelShape::parzen();
        let y = centered(lcg(50, 3));
        assert_eq!(hac_variance_of(&y, 1, k).unwrap(), iid_variance_of(&y));
        let mut spike = vec![0.0; 10];
        spike[4] = 3.0;
        assert!((hac_variance_of(&spike, 4, k).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(iid_variance_of(&[0.0; 5]), 0.0);
        assert!(hac_variance_of(&y, 0, k).is_err());
    }

    #[test]
    fn hac_matches_double_loop() {
        let k = KernelShape::parzen();
        for ell in [2, 3, 7] {
            let y = centered(lcg(40, ell as u64));
            let mut naive = 0.0;
            for i in 0..40 {
                for j in 0..40 {
                    let h = i as f64 - j as f64;
                    naive += k.phi(h / ell as f64) * y[i] * y[j];
                }
            }
            naive /= 40.0;
            assert!((hac_variance_of(&y, ell, k).unwrap() - naive).abs() < 1e-10);
        }
    }

    #[test]
    fn studentized_statistic_is_scale_free() {
        let s = MultivariateSample::from_row_major(lcg(120, 5), 60, 2).unwrap();
        let f = Functional::builtin(BuiltinStatistic::Rho1, 2).unwrap();
        let g: Functional = f.as_linear().unwrap().scaled(-3.5).into();
        let a = asymptotic_pvalue(&s, &f, DivisorMode::Simulation, 0.1, Serial::Iid).unwrap();
        let b = asymptotic_pvalue(&s, &g, DivisorMode::Simulation, 0.1, Serial::Iid).unwrap();
        let (x, y) = (a.studentized.unwrap(), b.studentized.unwrap());
        assert!((x - y).abs() <= 1e-12 * x);
    }

    #[test]
    fn nonlinear_statistic_rejected() {
        let s = MultivariateSample::from_row_major(lcg(40, 5), 20, 2).unwrap();
        let f = Functional::Continuous(crate::spearman::ContinuousStatistic {
            name: "sq".into(),
            d: 2,
            func: std::sync::Arc::new(|x: &[f64]| x[2] * x[2]),
        });
        assert!(matches!(
            asymptotic_pvalue(&s, &f, DivisorMode::Simulation, 0.1, Serial::Iid),
            Err(Error::Unsupported(_))
        ));
    }
}
