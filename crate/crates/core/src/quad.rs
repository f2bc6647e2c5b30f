//! Fixed-order Gauss-Legendre quadrature.

const NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point rule on `[a, b]`; exact for polynomials up to degree 15.
pub(crate) fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum::<f64>()
        * half
}

/// Applies the 8-point rule between consecutive (sorted) breakpoints.
pub(crate) fn piecewise(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_legendre(&f, w[0], w[1]))
        .sum()
}

/// Composite 8-point rule over `panels` equal panels.
pub(crate) fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gauss_legendre(&f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_degree_fifteen() {
        let v = gauss_legendre(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
        let w = composite(f64::sin, 0.0, std::f64::consts::PI, 8);
        assert!((w - 2.0).abs() < 1e-13);
        assert!((piecewise(|x| x.abs(), &[-1.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
