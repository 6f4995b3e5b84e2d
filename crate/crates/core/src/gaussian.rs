//! Standard normal tail `Φ(λ) = P(Z > λ)` and its inverse.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Upper tail of the standard normal: `∫_λ^∞ e^{-u²/2} du / √(2π)`.
pub fn gaussian_tail(lambda: f64) -> f64 {
    0.5 * erfc(lambda / SQRT_2)
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`gaussian_tail`]: the `λ` with `Φ(λ) = eps`.
pub fn gaussian_quantile(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::QuantileOutOfRange(eps));
    }
    let mut q = SQRT_2 * erfc_inv(2.0 * eps);
    // erfc_inv is accurate to a few ulps in the bulk; two Newton steps keep
    // the tails honest too.
    for _ in 0..2 {
        let d = density(q);
        if d <= 0.0 {
            break;
        }
        q += (gaussian_tail(q) - eps) / d;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson on [λ, 12] of the normal density.
    fn tail_by_quadrature(lambda: f64) -> f64 {
        let (a, b) = (lambda, 12.0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut s = density(a) + density(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * density(x);
        }
        s * h / 3.0
    }

    #[test]
    fn tail_at_zero_is_half() {
        assert_eq!(gaussian_tail(0.0), 0.5);
        assert!(gaussian_quantile(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn five_percent_point() {
        let oracle = tail_by_quadrature(1.6448536);
        assert!((oracle - 0.05).abs() < 1e-7, "oracle {oracle}");
        assert!((gaussian_tail(1.6448536) - oracle).abs() < 1e-10);
    }

    #[test]
    fn tail_matches_quadrature() {
        for &l in &[-3.0, -1.5, -0.3, 0.7, 2.0, 4.5] {
            let q = tail_by_quadrature(l);
            assert!((gaussian_tail(l) - q).abs() < 1e-10, "λ = {l}");
        }
    }

    #[test]
    fn quantile_rejects_boundary() {
        assert_eq!(gaussian_quantile(0.0), Err(Error::QuantileOutOfRange(0.0)));
        assert!(gaussian_quantile(1.0).is_err());
        assert!(gaussian_quantile(f64::NAN).is_err());
    }

    #[test]
    fn round_trip_over_grid() {
        let mut eps = 1e-6;
        while eps < 1.0 - 1e-6 {
            let q = gaussian_quantile(eps).unwrap();
            assert!((gaussian_tail(q) - eps).abs() <= 1e-9 * eps.max(1e-3), "ε = {eps}");
            eps += 0.0137;
        }
        for &eps in &[1e-6, 1.0 - 1e-6, 0.25, 0.75] {
            let q = gaussian_quantile(eps).unwrap();
            assert!((gaussian_tail(q) - eps).abs() <= 1e-9);
        }
    }

    #[test]
    fn quantile_is_decreasing() {
        let qs: Vec<f64> = [0.1, 0.25, 0.5, 0.75, 0.9]
            .iter()
            .map(|&e| gaussian_quantile(e).unwrap())
            .collect();
        assert!(qs.windows(2).all(|w| w[0] > w[1]));
    }
}
