//! Exchangeable one-parameter copulas: samplers and dependence-measure maps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid_param, Error, Result};
use crate::quad::{composite, gauss_legendre};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CopulaFamily {
    Clayton,
    Gumbel,
    Frank,
    Normal,
    Student { df: f64 },
}

impl CopulaFamily {
    /// Short label: `clayton`, `gumbel`, `frank`, `normal`, `t<df>`.
    pub fn label(&self) -> String {
        match self {
            Self::Clayton => "clayton".into(),
            Self::Gumbel => "gumbel".into(),
            Self::Frank => "frank".into(),
            Self::Normal => "normal".into(),
            Self::Student { df } => format!("t{df}"),
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    /// Accepts the labels above plus `gumbel-hougaard`, `student<df>` and
    /// `t(<df>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "clayton" | "cl" => return Ok(Self::Clayton),
            "gumbel" | "gumbel-hougaard" | "gh" => return Ok(Self::Gumbel),
            "frank" | "f" => return Ok(Self::Frank),
            "normal" | "gaussian" | "n" => return Ok(Self::Normal),
            _ => {}
        }
        let digits = s
            .strip_prefix("student")
            .or_else(|| s.strip_prefix('t'))
            .map(|r| r.trim_matches(|c| c == '(' || c == ')' || c == ':' || c == ' '));
        if let Some(df) = digits.and_then(|d| d.parse::<f64>().ok()) {
            return Ok(Self::Student { df });
        }
        Err(Error::InvalidInput(format!("unknown copula family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    #[serde(flatten)]
    pub family: CopulaFamily,
    pub d: usize,
    pub parameter: f64,
}

impl CopulaSpec {
    pub fn new(family: CopulaFamily, d: usize, parameter: f64) -> Result<Self> {
        let spec = Self {
            family,
            d,
            parameter,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let theta = self.parameter;
        if self.d < 2 {
            return Err(invalid_param("d", "copulas need at least two components"));
        }
        if !theta.is_finite() {
            return Err(invalid_param("parameter", "must be finite"));
        }
        match self.family {
            CopulaFamily::Clayton if theta <= 0.0 => {
                Err(invalid_param("parameter", "Clayton needs theta > 0"))
            }
            CopulaFamily::Gumbel if theta < 1.0 => {
                Err(invalid_param("parameter", "Gumbel-Hougaard needs theta >= 1"))
            }
            CopulaFamily::Frank if theta == 0.0 => {
                Err(invalid_param("parameter", "Frank needs theta != 0"))
            }
            CopulaFamily::Frank if theta < 0.0 && self.d > 2 => Err(invalid_param(
                "parameter",
                "negative Frank parameters are only valid for d = 2",
            )),
            CopulaFamily::Normal | CopulaFamily::Student { .. } => {
                let lower = -1.0 / (self.d as f64 - 1.0);
                if !(theta > lower && theta < 1.0) {
                    return Err(invalid_param(
                        "parameter",
                        format!("equicorrelation must lie in ({lower}, 1), got {theta}"),
                    ));
                }
                if let CopulaFamily::Student { df } = self.family {
                    if !(df >= 1.0 && df.is_finite()) {
                        return Err(invalid_param("df", format!("must be >= 1, got {df}")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Kendall's tau of every bivariate margin.
    pub fn kendall_tau(&self) -> f64 {
        kendall_tau(self.family, self.parameter)
    }
}

pub fn kendall_tau(family: CopulaFamily, theta: f64) -> f64 {
    match family {
        CopulaFamily::Clayton => theta / (theta + 2.0),
        CopulaFamily::Gumbel => 1.0 - 1.0 / theta,
        CopulaFamily::Frank => 1.0 - 4.0 / theta * (1.0 - debye(1, theta)),
        CopulaFamily::Normal | CopulaFamily::Student { .. } => 2.0 / PI * theta.asin(),
    }
}

/// Debye function `D_k(x) = k / x^k * int_0^x t^k / (e^t - 1) dt`.
pub fn debye(k: i32, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let integrand = |t: f64| t.powi(k) / t.exp_m1();
    let panels = 16 + x.abs().ceil() as usize;
    k as f64 / x.powi(k) * composite(integrand, 0.0, x, panels)
}

fn frank_spearman(theta: f64) -> f64 {
    1.0 - 12.0 / theta * (debye(1, theta) - debye(2, theta))
}

/// Inverts an increasing map on `(lo, hi)` by bisection.
fn bisect(map: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    bisect_to(map, target, lo, hi, 1e-13)
}

fn bisect_to(map: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if map(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Brackets the Frank parameter with the sign of `target` by doubling.
fn invert_frank(map: impl Fn(f64) -> f64, target: f64) -> f64 {
    let sign = target.signum();
    let mut hi = 1.0;
    while sign * map(sign * hi) < sign * target {
        hi *= 2.0;
    }
    if sign > 0.0 {
        bisect(map, target, 0.0, hi)
    } else {
        bisect(map, target, -hi, 0.0)
    }
}

/// Parameter whose bivariate margins have Kendall's tau `tau`.
pub fn tau_to_parameter(family: CopulaFamily, tau: f64) -> Result<f64> {
    let open_unit = tau > -1.0 && tau < 1.0;
    match family {
        CopulaFamily::Clayton | CopulaFamily::Gumbel if !(tau > 0.0 && tau < 1.0) => Err(
            invalid_param("tau", format!("{family} needs tau in (0, 1), got {tau}")),
        ),
        CopulaFamily::Clayton => Ok(2.0 * tau / (1.0 - tau)),
        CopulaFamily::Gumbel => Ok(1.0 / (1.0 - tau)),
        _ if !open_unit => Err(invalid_param("tau", format!("needs |tau| < 1, got {tau}"))),
        CopulaFamily::Normal | CopulaFamily::Student { .. } => Ok((PI * tau / 2.0).sin()),
        CopulaFamily::Frank if tau == 0.0 => {
            Err(invalid_param("tau", "Frank has no independence parameter"))
        }
        CopulaFamily::Frank => Ok(invert_frank(|t| kendall_tau(CopulaFamily::Frank, t), tau)),
    }
}

/// Draws used by the Student Spearman map; fixed so the map is deterministic.
const STUDENT_SPEARMAN_DRAWS: usize = 1_000_000;
const STUDENT_SPEARMAN_SEED: u64 = 0x5_eed0_f5a7;

/// Spearman's rho of a bivariate Student copula with correlation `rho`,
/// estimated from `(6/pi) E[asin(rho W / sqrt((W + W')(W + W'')))]` with
/// independent `W, W', W'' ~ df / chi2(df)`.
pub fn student_spearman(df: f64, rho: f64) -> Result<f64> {
    Ok(student_spearman_ratios(df)?.map_rho(rho))
}

struct StudentRatios(Vec<f64>);

impl StudentRatios {
    fn map_rho(&self, rho: f64) -> f64 {
        let total: f64 = self.0.iter().map(|r| (rho * r).asin()).sum();
        6.0 / PI * total / self.0.len() as f64
    }
}

fn student_spearman_ratios(df: f64) -> Result<StudentRatios> {
    if !(df >= 1.0 && df.is_finite()) {
        return Err(invalid_param("df", format!("must be >= 1, got {df}")));
    }
    let chi = ChiSquared::new(df).map_err(|e| invalid_param("df", e.to_string()))?;
    let mut rng = StreamKey::new(STUDENT_SPEARMAN_SEED).rng(df.to_bits());
    let mut mix = || df / chi.sample(&mut rng);
    let ratios = (0..STUDENT_SPEARMAN_DRAWS)
        .map(|_| {
            let (w, w1, w2) = (mix(), mix(), mix());
            w / ((w + w1) * (w + w2)).sqrt()
        })
        .collect();
    Ok(StudentRatios(ratios))
}

fn archimedean_spearman(family: CopulaFamily, theta: f64) -> f64 {
    let cdf = |u: f64, v: f64| match family {
        CopulaFamily::Clayton => (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta),
        _ => (-((-u.ln()).powf(theta) + (-v.ln()).powf(theta)).powf(1.0 / theta)).exp(),
    };
    let panels = 24;
    let inner = |u: f64| composite(|v| cdf(u, v), 0.0, 1.0, panels);
    let outer = (0..panels)
        .map(|p| {
            let a = p as f64 / panels as f64;
            gauss_legendre(inner, a, a + 1.0 / panels as f64)
        })
        .sum::<f64>();
    12.0 * outer - 3.0
}

/// Parameter whose bivariate margins have Spearman's rho `rho_s`.
pub fn spearman_to_parameter(family: CopulaFamily, rho_s: f64) -> Result<f64> {
    if !(rho_s > -1.0 && rho_s < 1.0) {
        return Err(invalid_param("rho_s", format!("needs |rho_s| < 1, got {rho_s}")));
    }
    match family {
        CopulaFamily::Normal => Ok(2.0 * (PI * rho_s / 6.0).sin()),
        CopulaFamily::Student { df } => {
            let ratios = student_spearman_ratios(df)?;
            let lim = 1.0 - 1e-12;
            // The map is a Monte Carlo average; resolving rho beyond its
            // sampling error buys nothing.
            Ok(bisect_to(|r| ratios.map_rho(r), rho_s, -lim, lim, 1e-7))
        }
        CopulaFamily::Frank if rho_s == 0.0 => {
            Err(invalid_param("rho_s", "Frank has no independence parameter"))
        }
        CopulaFamily::Frank => Ok(invert_frank(frank_spearman, rho_s)),
        CopulaFamily::Clayton | CopulaFamily::Gumbel => {
            if rho_s <= 0.0 {
                return Err(invalid_param(
                    "rho_s",
                    format!("{family} needs rho_s in (0, 1), got {rho_s}"),
                ));
            }
            // Spearman's rho grows with Kendall's tau; bisect on tau.
            let tau = bisect(
                |tau| {
                    let theta = tau_to_parameter(family, tau).expect("tau in (0, 1)");
                    archimedean_spearman(family, theta)
                },
                rho_s,
                1e-9,
                0.995,
            );
            tau_to_parameter(family, tau)
        }
    }
}

/// A validated copula ready to draw rows.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    spec: CopulaSpec,
    /// Lower-triangular Cholesky factor of the equicorrelation matrix.
    chol: Vec<f64>,
    student: Option<(ChiSquared<f64>, StudentsT)>,
    gamma: Option<Gamma<f64>>,
}

impl CopulaSampler {
    pub fn new(spec: CopulaSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let mut chol = Vec::new();
        let mut student = None;
        let mut gamma = None;
        match spec.family {
            CopulaFamily::Normal | CopulaFamily::Student { .. } => {
                chol = equicorrelation_cholesky(d, spec.parameter);
                if let CopulaFamily::Student { df } = spec.family {
                    let chi = ChiSquared::new(df).map_err(|e| invalid_param("df", e.to_string()))?;
                    let t = StudentsT::new(0.0, 1.0, df)
                        .map_err(|e| invalid_param("df", e.to_string()))?;
                    student = Some((chi, t));
                }
            }
            CopulaFamily::Clayton => {
                gamma = Some(
                    Gamma::new(1.0 / spec.parameter, 1.0)
                        .map_err(|e| invalid_param("parameter", e.to_string()))?,
                );
            }
            _ => {}
        }
        Ok(Self {
            spec,
            chol,
            student,
            gamma,
        })
    }

    pub fn spec(&self) -> &CopulaSpec {
        &self.spec
    }

    /// Fills `out` (length `d`) with one draw.
    pub fn fill_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.spec.d;
        let theta = self.spec.parameter;
        match self.spec.family {
            CopulaFamily::Normal | CopulaFamily::Student { .. } => {
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum();
                }
                match &self.student {
                    None => out.iter_mut().for_each(|x| *x = normal_cdf(*x)),
                    Some((chi, t)) => {
                        let df = t.freedom();
                        let scale = (chi.sample(rng) / df).sqrt();
                        out.iter_mut().for_each(|x| *x = t.cdf(*x / scale));
                    }
                }
            }
            CopulaFamily::Clayton => {
                let v = self.gamma.as_ref().expect("built with sampler").sample(rng);
                for o in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *o = (-(e / v).ln_1p() / theta).exp();
                }
            }
            CopulaFamily::Gumbel => {
                let alpha = 1.0 / theta;
                let v = positive_stable(alpha, rng);
                for o in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *o = (-(e / v).powf(alpha)).exp();
                }
            }
            CopulaFamily::Frank if theta > 0.0 => {
                let v = log_series(-(-theta).exp_m1(), rng) as f64;
                let c = (-theta).exp_m1();
                for o in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *o = -((-e / v).exp() * c).ln_1p() / theta;
                }
            }
            CopulaFamily::Frank => {
                // Conditional inversion; validation restricts this to d = 2.
                let u: f64 = rng.random();
                let w: f64 = rng.random();
                let a = (-theta * u).exp();
                let b = w * (-theta).exp_m1() / (w + (1.0 - w) * a);
                out[0] = u;
                out[1] = -b.ln_1p() / theta;
            }
        }
        for o in out.iter_mut() {
            *o = o.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        }
    }
}

/// `count` i.i.d. rows (row-major, `count x d`) in `(0, 1)^d`.
pub fn sample_copula<R: Rng + ?Sized>(
    spec: &CopulaSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sampler = CopulaSampler::new(*spec)?;
    let mut out = vec![0.0; count * spec.d];
    for row in out.chunks_exact_mut(spec.d) {
        sampler.fill_row(rng, row);
    }
    Ok(out)
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

fn equicorrelation_cholesky(d: usize, rho: f64) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { rho };
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            l[i * d + j] = if i == j {
                (target - s).sqrt()
            } else {
                (target - s) / l[j * d + j]
            };
        }
    }
    l
}

/// Positive stable variate with Laplace transform `exp(-t^alpha)` (Kanter's
/// representation).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = PI * rng.random::<f64>();
    let e: f64 = rng.sample(Exp1);
    let a = (alpha * u).sin().powf(alpha / (1.0 - alpha)) * ((1.0 - alpha) * u).sin()
        / u.sin().powf(1.0 / (1.0 - alpha));
    (a / e).powf((1.0 - alpha) / alpha)
}

/// Logarithmic series variate, `P(V = k) = -p^k / (k ln(1 - p))` (Kemp's LK
/// algorithm).
fn log_series<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    let v: f64 = rng.random();
    if v >= p {
        return 1;
    }
    let h = (-p).ln_1p();
    let q = -(h * rng.random::<f64>()).exp_m1();
    if v <= q * q {
        let k = 1.0 + v.ln() / q.ln();
        if k.is_finite() && k < u64::MAX as f64 {
            return k.floor() as u64;
        }
        return u64::MAX;
    }
    if v <= q {
        2
    } else {
        1
    }
}
