//! Stable random variates and characteristic functions.
//!
//! Parametrization: `S_alpha(sigma, beta, mu)` with characteristic function
//!
//! ```text
//! alpha != 1: exp(-sigma^a |t|^a (1 - i beta sgn(t) tan(pi a / 2)) + i mu t)
//! alpha == 1: exp(-sigma |t| (1 + i beta (2/pi) sgn(t) ln|t|) + i mu t)
//! ```
//!
//! In this convention the symmetric law has CF `exp(-sigma^a |t|^a)` and
//! `S_2(sigma, 0, 0)` is Gaussian with variance `2 sigma^2`. It is the
//! "1-parametrization" of Nolan; the continuous "0-parametrization" differs by
//! the location shift `beta sigma tan(pi a / 2)` (or `beta (2/pi) sigma ln sigma`
//! when `alpha == 1`), see [`StableParams::zero_parametrization_shift`].
//!
//! Variates are drawn with the Chambers-Mallows-Stuck transform, including
//! the logarithmic branch at `alpha == 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
    sigma: f64,
    mu: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2]")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(invalid("beta", format!("{beta} is outside [-1, 1]")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("{sigma} must be positive and finite")));
        }
        if !mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        let beta = if alpha == 2.0 { 0.0 } else { beta };
        Ok(Self {
            alpha,
            beta,
            sigma,
            mu,
        })
    }

    /// Standard symmetric law `S_alpha(1, 0, 0)`.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Shift `delta` such that `X + delta` follows the 0-parametrization law
    /// with the same `(alpha, beta, sigma, mu)`.
    pub fn zero_parametrization_shift(&self) -> f64 {
        if self.alpha == 1.0 {
            -self.beta * (2.0 / PI) * self.sigma * self.sigma.ln()
        } else {
            -self.beta * self.sigma * (PI * self.alpha / 2.0).tan()
        }
    }
}

/// Standard symmetric variate `S_alpha(1, 0, 0)`; the hot path of every
/// stable-integral simulation.
#[inline]
pub fn sample_symmetric_standard(alpha: f64, stream: &mut RandomStream) -> f64 {
    if alpha == 2.0 {
        return std::f64::consts::SQRT_2 * stream.standard_normal();
    }
    let v = PI * (stream.uniform_open() - 0.5);
    let w = stream.standard_exponential();
    if alpha == 1.0 {
        return v.tan();
    }
    let av = alpha * v;
    let cos_v = v.cos();
    // sin(a v) / cos(v)^(1/a) * (cos((1-a) v) / w)^((1-a)/a)
    let log_mag = -cos_v.ln() / alpha + ((1.0 - alpha) / alpha) * (((v - av).cos()).ln() - w.ln());
    av.sin() * log_mag.exp()
}

/// One variate from `S_alpha(sigma, beta, mu)`.
pub fn sample_stable(params: &StableParams, stream: &mut RandomStream) -> f64 {
    let StableParams {
        alpha,
        beta,
        sigma,
        mu,
    } = *params;
    if beta == 0.0 {
        return sigma * sample_symmetric_standard(alpha, stream) + mu;
    }
    let v = PI * (stream.uniform_open() - 0.5);
    let w = stream.standard_exponential();
    if alpha == 1.0 {
        let half_pi_bv = FRAC_PI_2 + beta * v;
        let x = (2.0 / PI)
            * (half_pi_bv * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / half_pi_bv).ln());
        return sigma * x + (2.0 / PI) * beta * sigma * sigma.ln() + mu;
    }
    let zeta = -beta * (PI * alpha / 2.0).tan();
    let xi = (-zeta).atan() / alpha;
    let s = (1.0 + zeta * zeta).powf(1.0 / (2.0 * alpha));
    let shifted = alpha * (v + xi);
    let x = s * shifted.sin() / v.cos().powf(1.0 / alpha)
        * ((v - shifted).cos() / w).powf((1.0 - alpha) / alpha);
    sigma * x + mu
}

/// Positive multiplier `A ~ S_{alpha/2}(cos(pi alpha / 4)^{2/alpha}, 1, 0)` of a
/// sub-Gaussian law. Its Laplace transform is `E exp(-l A) = exp(-l^{alpha/2})`.
pub fn subgaussian_multiplier_params(alpha: f64) -> Result<StableParams> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
    }
    let sigma = (PI * alpha / 4.0).cos().powf(2.0 / alpha);
    StableParams::new(alpha / 2.0, 1.0, sigma, 0.0)
}

pub fn sample_subgaussian_multiplier(alpha: f64, stream: &mut RandomStream) -> Result<f64> {
    let params = subgaussian_multiplier_params(alpha)?;
    Ok(sample_stable(&params, stream))
}

/// Characteristic function `E exp(i theta X)` for `X ~ params`.
pub fn stable_cf(params: &StableParams, theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let StableParams {
        alpha,
        beta,
        sigma,
        mu,
    } = *params;
    let t = theta.abs();
    let sign = theta.signum();
    let exponent = if alpha == 1.0 {
        let scale = sigma * t;
        Complex64::new(-scale, -scale * beta * (2.0 / PI) * sign * t.ln())
    } else {
        let scale = (sigma * t).powf(alpha);
        let skew = if beta == 0.0 {
            0.0
        } else {
            beta * sign * (PI * alpha / 2.0).tan()
        };
        Complex64::new(-scale, scale * skew)
    };
    (exponent + Complex64::new(0.0, mu * theta)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn draws(params: &StableParams, n: usize, seed: u64) -> Vec<f64> {
        let mut s = RandomStream::new(seed);
        (0..n).map(|_| sample_stable(params, &mut s)).collect()
    }

    fn ecf(xs: &[f64], theta: f64) -> Complex64 {
        let sum: Complex64 = xs
            .iter()
            .map(|&x| Complex64::new(0.0, theta * x).exp())
            .sum();
        sum / xs.len() as f64
    }

    #[test]
    fn constructor_rejects_out_of_range() {
        assert!(StableParams::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(2.5, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 1.1, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 0.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn alpha_two_normalizes_beta() {
        let p = StableParams::new(2.0, 0.7, 1.0, 0.0).unwrap();
        assert_eq!(p.beta(), 0.0);
    }

    #[test]
    fn gaussian_case_has_variance_two_sigma_squared() {
        let p = StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let xs = draws(&p, 100_000, 1);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((1.9..=2.1).contains(&var), "variance {var}");
    }

    #[test]
    fn cauchy_case_passes_ks_against_analytic_cdf() {
        let p = StableParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let mut xs = draws(&p, 100_000, 2);
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 0.5 + x.atan() / PI;
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn totally_skewed_small_alpha_has_no_left_tail() {
        let p = StableParams::new(0.8, 1.0, 1.0, 0.0).unwrap();
        let xs = draws(&p, 100_000, 3);
        let left = xs.iter().filter(|&&x| x < -10.0).count() as f64 / xs.len() as f64;
        assert!(left < 1e-3);
        assert!(xs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn multiplier_is_positive() {
        let mut s = RandomStream::new(4);
        for _ in 0..10_000 {
            assert!(sample_subgaussian_multiplier(1.5, &mut s).unwrap() > 0.0);
        }
        assert!(sample_subgaussian_multiplier(2.0, &mut s).is_err());
    }

    #[test]
    fn multiplier_at_alpha_one_is_levy_with_scale_half() {
        // Levy(c = 1/2) median = c / (2 erfc^{-1}(1/2)^2)
        let median_oracle = 1.099_054_669_158_866_2;
        let mut s = RandomStream::new(5);
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| sample_subgaussian_multiplier(1.0, &mut s).unwrap())
            .collect();
        xs.sort_by(f64::total_cmp);
        let median = xs[xs.len() / 2];
        assert!((median / median_oracle - 1.0).abs() < 0.03, "median {median}");
    }

    #[test]
    fn multiplier_laplace_transform() {
        for (k, &alpha) in [0.5, 1.0, 1.5].iter().enumerate() {
            let mut s = RandomStream::new(10 + k as u64);
            let xs: Vec<f64> = (0..100_000)
                .map(|_| sample_subgaussian_multiplier(alpha, &mut s).unwrap())
                .collect();
            for &lambda in &[0.5, 1.0, 2.0] {
                let vals: Vec<f64> = xs.iter().map(|a| (-lambda * a).exp()).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / vals.len() as f64)
                    .sqrt();
                let target = (-(lambda as f64).powf(alpha / 2.0)).exp();
                let se = sd / (vals.len() as f64).sqrt();
                assert!(
                    (mean - target).abs() < 4.0 * se + 1e-4,
                    "alpha {alpha} lambda {lambda}: {mean} vs {target}"
                );
            }
        }
    }

    #[test]
    fn symmetric_cf_formula_and_origin() {
        let p = StableParams::new(1.3, 0.0, 0.7, 0.4).unwrap();
        let v = stable_cf(&p, -1.7);
        let want = Complex64::new(-(0.7f64 * 1.7).powf(1.3), 0.4 * -1.7).exp();
        assert!((v - want).norm() < 1e-14);
        assert_eq!(stable_cf(&p, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cf_matches_density_inversion_skewed() {
        // density by inversion, then re-integrate e^{i x} f(x) dx
        let p = StableParams::new(1.5, 1.0, 1.0, 0.0).unwrap();
        let tn = 2400;
        let tmax = 12.0;
        let ht = tmax / tn as f64;
        let cfs: Vec<Complex64> = (0..=tn).map(|k| stable_cf(&p, k as f64 * ht)).collect();
        let density = |x: f64| {
            let mut acc = 0.0;
            for (k, c) in cfs.iter().enumerate() {
                let t = k as f64 * ht;
                let w = if k == 0 || k == tn {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * (Complex64::new(0.0, -t * x).exp() * c).re;
            }
            acc * ht / 3.0 / PI
        };
        let xn = 8000;
        let (xlo, xhi) = (-60.0, 140.0);
        let hx = (xhi - xlo) / xn as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=xn {
            let x = xlo + k as f64 * hx;
            let w = if k == 0 || k == xn {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * density(x) * Complex64::new(0.0, x).exp();
        }
        acc *= hx / 3.0;
        let cf = stable_cf(&p, 1.0);
        assert!((acc - cf).norm() < 5e-3, "{acc} vs {cf}");
    }

    #[test]
    fn sampler_agrees_with_cf_skewed() {
        for &(alpha, beta) in &[(1.5, 1.0), (0.7, -0.5), (1.0, 0.8), (1.2, 0.3)] {
            let p = StableParams::new(alpha, beta, 1.3, 0.2).unwrap();
            let xs = draws(&p, 100_000, 20);
            for &theta in &[-2.0, -0.5, 0.3, 1.0, 2.5] {
                let d = (ecf(&xs, theta) - stable_cf(&p, theta)).norm();
                assert!(d < 0.015, "alpha {alpha} beta {beta} theta {theta}: {d}");
            }
        }
    }

    #[test]
    fn skewed_law_is_continuous_near_alpha_one_in_zero_parametrization() {
        let at_one = StableParams::new(1.0, 0.6, 1.0, 0.0).unwrap();
        for &alpha in &[0.98, 1.02] {
            let p = StableParams::new(alpha, 0.6, 1.0, 0.0).unwrap();
            let shift = p.zero_parametrization_shift();
            let xs: Vec<f64> = draws(&p, 100_000, 30).into_iter().map(|x| x + shift).collect();
            for &theta in &[-1.5, -0.4, 0.4, 1.5] {
                let d = (ecf(&xs, theta) - stable_cf(&at_one, theta)).norm();
                assert!(d < 0.03, "alpha {alpha} theta {theta}: {d}");
            }
        }
    }

    #[test]
    fn scaling_in_distribution() {
        let base = StableParams::new(1.4, 0.5, 1.0, 0.0).unwrap();
        let scaled = StableParams::new(1.4, 0.5, 2.5, 0.0).unwrap();
        let xs: Vec<f64> = draws(&base, 100_000, 40).into_iter().map(|x| 2.5 * x).collect();
        let ys = draws(&scaled, 100_000, 41);
        let mut sup = 0.0f64;
        for k in 0..=60 {
            let theta = -3.0 + 0.1 * k as f64;
            sup = sup.max((ecf(&xs, theta) - ecf(&ys, theta)).norm());
        }
        assert!(sup < 0.02, "sup distance {sup}");
    }

    #[test]
    fn symmetric_draws_have_small_imaginary_ecf() {
        let p = StableParams::new(1.1, 0.0, 1.0, 0.0).unwrap();
        let xs = draws(&p, 40_000, 50);
        let bound = 3.0 / (xs.len() as f64).sqrt();
        for k in 1..=30 {
            let theta = 0.1 * k as f64;
            assert!(ecf(&xs, theta).im.abs() < bound);
        }
    }

    proptest! {
        #[test]
        fn cf_is_bounded_and_one_at_origin(
            alpha in 0.05f64..=2.0,
            beta in -1.0f64..=1.0,
            sigma in 0.01f64..10.0,
            mu in -5.0f64..5.0,
            theta in -50.0f64..50.0,
        ) {
            let p = StableParams::new(alpha, beta, sigma, mu).unwrap();
            prop_assert!(stable_cf(&p, theta).norm() <= 1.0 + 1e-12);
            prop_assert_eq!(stable_cf(&p, 0.0), Complex64::new(1.0, 0.0));
        }
    }
}
