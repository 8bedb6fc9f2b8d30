//! Truncated pairwise order probabilities and the well-ordered density test.

use std::f64::consts::SQRT_2;

use super::noise::Noise;
use crate::error::{Error, Result};
use crate::quad;

/// Pr[X_i > X_j | X_i < a, X_j < a] with X_k = x_k + ε_k / θ.
///
/// Laplace uses closed forms; Gaussian integrates
/// ∫_{-∞}^a f_i F_j / (F_i(a) F_j(a)). `a = +∞` gives the unconditional value.
pub fn conditional_order_probability(noise: &Noise, xi: f64, xj: f64, theta: f64, a: f64) -> Result<f64> {
    if !(xi > xj) {
        return Err(Error::invalid(format!("need xi > xj, got {xi} and {xj}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("theta must be positive, got {theta}")));
    }
    if a.is_nan() {
        return Err(Error::invalid("threshold is NaN"));
    }
    match noise {
        Noise::Laplacian => Ok(laplace_closed_form(xi, xj, SQRT_2 * theta, a)),
        Noise::Gaussian => Ok(gaussian_quadrature(xi, xj, theta, a)),
        other => Err(Error::unsupported(format!("truncated order probability for {other} noise"))),
    }
}

fn laplace_closed_form(xi: f64, xj: f64, lambda: f64, a: f64) -> f64 {
    if a <= xj {
        return 0.5;
    }
    if a <= xi {
        let z = lambda * (a - xj);
        return 1.0 - (0.5 + z) / (2.0 * z.exp() - 1.0);
    }
    let d = lambda * (xi - xj);
    let ei = (-lambda * (a - xi)).exp();
    let ej = (-lambda * (a - xj)).exp();
    let num = 1.0 - (0.5 + d / 4.0) * (-d).exp() - 0.5 * ei + 0.125 * ei * ej;
    let den = 1.0 - 0.5 * ei - 0.5 * ej + 0.25 * ei * ej;
    num / den
}

fn gaussian_quadrature(xi: f64, xj: f64, theta: f64, a: f64) -> f64 {
    let g = Noise::Gaussian;
    let cdf = |x: f64, mu: f64| g.cdf(theta * (x - mu)).unwrap();
    let (fi_a, fj_a) = if a.is_finite() { (cdf(a, xi), cdf(a, xj)) } else { (1.0, 1.0) };
    let scale = fi_a * fj_a;
    if scale == 0.0 {
        // both truncations deep in the lower tail: the pair is exchangeable in the limit
        return 0.5;
    }
    let f = |x: f64| theta * g.pdf(theta * (x - xi)).unwrap() * cdf(x, xj) / scale;
    let reach = g.tail_reach() / theta;
    let hi = a.min(xi.max(xj) + reach);
    let lo = hi.min(xj) - reach;
    quad::integrate(&f, lo, hi, &[xi, xj], 1e-13).min(1.0)
}

/// log f(a-c) + log f(b-d) - log f(a-d) - log f(b-c) for the unit-variance density.
pub fn well_ordered_margin(noise: &Noise, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let l = |z: f64| noise.log_pdf(z);
    Ok(l(a - c)? + l(b - d)? - l(a - d)? - l(b - c)?)
}

/// True iff f(a-c) f(b-d) > f(a-d) f(b-c), requiring a > b and c > d.
pub fn well_ordered_check(noise: &Noise, a: f64, b: f64, c: f64, d: f64) -> Result<bool> {
    if !(a > b && c > d) {
        return Err(Error::invalid("need a > b and c > d"));
    }
    Ok(well_ordered_margin(noise, a, b, c, d)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_by_quadrature(xi: f64, xj: f64, theta: f64, a: f64) -> f64 {
        let n = Noise::Laplacian;
        let cdf = |x: f64, mu: f64| n.cdf(theta * (x - mu)).unwrap();
        let f = |x: f64| theta * n.pdf(theta * (x - xi)).unwrap() * cdf(x, xj);
        let hi = a.min(xi + 60.0 / theta);
        let num = quad::integrate(&f, hi.min(xj) - 60.0 / theta, hi, &[xi, xj], 1e-14);
        let den = if a.is_finite() { cdf(a, xi) * cdf(a, xj) } else { 1.0 };
        num / den
    }

    #[test]
    fn laplace_closed_form_matches_quadrature() {
        for theta in [0.5, 1.0, 3.0] {
            for a in [-1.0, 0.0, 0.3, 0.9, 1.0, 1.7, 4.0, f64::INFINITY] {
                let c = conditional_order_probability(&Noise::Laplacian, 1.0, 0.0, theta, a).unwrap();
                let q = laplace_by_quadrature(1.0, 0.0, theta, a);
                assert!((c - q).abs() < 1e-9, "theta={theta} a={a}: {c} vs {q}");
            }
        }
    }

    #[test]
    fn case_one_is_exactly_half() {
        for a in [-5.0, -0.1, 0.0] {
            assert_eq!(conditional_order_probability(&Noise::Laplacian, 1.0, 0.0, 2.0, a).unwrap(), 0.5);
        }
    }

    #[test]
    fn unconditional_limits() {
        let theta = 1.3;
        let g = conditional_order_probability(&Noise::Gaussian, 1.0, 0.0, theta, f64::INFINITY).unwrap();
        let closed = Noise::Gaussian.cdf(theta / SQRT_2).unwrap();
        assert!((g - closed).abs() < 1e-12);
        let l = conditional_order_probability(&Noise::Laplacian, 1.0, 0.0, theta, f64::INFINITY).unwrap();
        assert!(l > 0.5 && g > 0.5);
    }

    #[test]
    fn gaussian_well_ordered_margin_is_the_cross_product() {
        let m = well_ordered_margin(&Noise::Gaussian, 2.0, 1.0, 1.0, 0.0).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
        assert!(well_ordered_check(&Noise::Gaussian, 2.0, 1.0, 1.0, 0.0).unwrap());
        assert!(well_ordered_check(&Noise::Gaussian, 1.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn laplace_margin_vanishes_on_separated_intervals() {
        // [b, a] and [d, c] disjoint: |a-c| + |b-d| = |a-d| + |b-c|
        let m = well_ordered_margin(&Noise::Laplacian, 3.0, 2.0, 1.0, 0.0).unwrap();
        assert!(m.abs() < 1e-12);
        // overlapping intervals give a strict margin
        let m = well_ordered_margin(&Noise::Laplacian, 2.0, 0.5, 1.0, 0.0).unwrap();
        assert!(m > 0.0);
    }

    #[test]
    fn unsupported_kinds() {
        assert!(conditional_order_probability(&Noise::Gumbel, 1.0, 0.0, 1.0, 0.0).is_err());
        let d = Noise::Discrete(crate::models::DiscreteNoise::three_point(0.1).unwrap());
        assert!(well_ordered_margin(&d, 2.0, 1.0, 1.0, 0.0).is_err());
    }
}
