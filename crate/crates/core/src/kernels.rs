//! Spectral representations `{f_s} ⊂ L^alpha(E, m)` of self-similar stable
//! fields: evaluation, the `L^alpha` functional and normalization constants.
//!
//! Each kernel is a pure value object. Points of the space `E` are passed as
//! slices laid out per [`Domain`]:
//!
//! * `RealLine`, `UnitInterval`: `[x]`
//! * `SphereRay { d }`: `[phi_1, .., phi_d, r]` with `|phi| = 1`, `r > 0`
//! * `Euclidean { d }`: `[x_1, .., x_d]`

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{
    integrate_pieces, integrate_power_tail, integrate_real_line_anchored, Tolerance,
};

/// Relative tolerance promised by [`lalpha_functional`].
pub const LALPHA_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Internal quadrature target; tighter than the promise so that error
/// estimates (which are conservative) never decide a borderline case.
fn inner_tolerance() -> Tolerance {
    Tolerance {
        rel: 1e-9,
        abs: 1e-300,
        max_intervals: 50_000,
    }
}

/// The measure space `E` and its control measure `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// `(R, Lebesgue)`.
    RealLine,
    /// `([0, 1], Lebesgue)`.
    UnitInterval,
    /// `S^{d-1} x R_+` with `C^{-1} dphi x dr`.
    SphereRay { d: usize },
    /// `(R^d, Lebesgue)`.
    Euclidean { d: usize },
}

impl Domain {
    pub fn describe(&self) -> String {
        match self {
            Domain::RealLine => "real line with Lebesgue measure".into(),
            Domain::UnitInterval => "unit interval [0, 1] with Lebesgue measure".into(),
            Domain::SphereRay { d } => {
                format!("S^{} x R_+ with measure C^-1 dphi dr", d - 1)
            }
            Domain::Euclidean { d } => format!("R^{d} with Lebesgue measure"),
        }
    }

    /// Length of a point slice of this space.
    pub fn point_len(&self) -> usize {
        match self {
            Domain::RealLine | Domain::UnitInterval => 1,
            Domain::SphereRay { d } => d + 1,
            Domain::Euclidean { d } => *d,
        }
    }
}

/// Parameters of the linear fractional stable motion kernel
/// `a((s-x)_+^p - (-x)_+^p) + b((s-x)_-^p - (-x)_-^p)` with `p = H - 1/alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFsmParams {
    a: f64,
    b: f64,
    alpha: f64,
    hurst: f64,
}

impl LinearFsmParams {
    /// `(a, b)` fixes the ratio only; [`linear_fsm_kernel`] rescales both so
    /// that `||f_1||_alpha = 1`.
    pub fn new(a: f64, b: f64, alpha: f64, hurst: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid("a, b", format!("({a}, {b}) must be finite and nonnegative")));
        }
        if a == 0.0 && b == 0.0 {
            return Err(invalid("a, b", "at least one of a, b must be positive"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(invalid(
                "hurst",
                format!("{hurst} is outside (0, 1); the kernel is not in L^alpha otherwise"),
            ));
        }
        if (hurst - 1.0 / alpha).abs() < 1e-12 && b > 0.0 {
            return Err(invalid(
                "b",
                "H = 1/alpha has exponent 0; only the causal indicator reduction b = 0 is supported",
            ));
        }
        Ok(Self { a, b, alpha, hurst })
    }

    /// Causal kernel `(a, b) = (1, 0)`.
    pub fn causal(alpha: f64, hurst: f64) -> Result<Self> {
        Self::new(1.0, 0.0, alpha, hurst)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn hurst(&self) -> f64 {
        self.hurst
    }
    pub fn exponent(&self) -> f64 {
        self.hurst - 1.0 / self.alpha
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum KernelKind {
    /// `f_s = 1_{[0, s]}` with `[0, s] := [s, 0]` for `s < 0`.
    Indicator,
    /// Linear fractional stable motion kernel; `a`, `b` are normalized.
    LinearFsm {
        a: f64,
        b: f64,
        exponent: f64,
        /// `int |f(a0, b0; 1, x)|^alpha dx` before normalization.
        raw_norm: f64,
    },
    /// Levy-Chentsov kernel `1{0 < r < phi . s}` on `S^{d-1} x R_+`.
    Chentsov { d: usize, constant: f64 },
    /// Moving-average fractional Brownian field kernel.
    MovingAverage {
        d: usize,
        /// `q = H - d/2`; `q = 0` is the logarithmic kernel.
        exponent: f64,
        /// `c_d` with `||f_{e_1}||_2 = 1`.
        scale: f64,
        /// `int (||e_1 - x||^q - ||x||^q)^2 dx` (unscaled).
        unit_norm_sq: f64,
    },
    /// `f_s(x) = s` on `[0, 1]`.
    RandomSlope,
}

/// An evaluable kernel family with its `(alpha, H)` metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelFamily {
    alpha: f64,
    hurst: f64,
    kind: KernelKind,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 2]")));
    }
    Ok(())
}

/// Example 3.1: indicator kernel over the real line, `H = 1/alpha`.
pub fn indicator_kernel(alpha: f64) -> Result<KernelFamily> {
    check_alpha(alpha)?;
    Ok(KernelFamily {
        alpha,
        hurst: 1.0 / alpha,
        kind: KernelKind::Indicator,
    })
}

/// Linear fractional stable motion kernel normalized at `s = 1`.
pub fn linear_fsm_kernel(params: LinearFsmParams) -> Result<KernelFamily> {
    let p = params.exponent();
    let alpha = params.alpha;
    let raw_norm = lfsm_combination(params.a, params.b, p, alpha, &[1.0], &[1.0], inner_tolerance())?;
    if !(raw_norm.is_finite() && raw_norm > 0.0) {
        return Err(invalid("params", format!("kernel norm {raw_norm} is not finite and positive")));
    }
    let lambda = raw_norm.powf(-1.0 / alpha);
    Ok(KernelFamily {
        alpha,
        hurst: params.hurst,
        kind: KernelKind::LinearFsm {
            a: lambda * params.a,
            b: lambda * params.b,
            exponent: p,
            raw_norm,
        },
    })
}

/// Example 3.2: Levy-Chentsov kernel in dimension `d`, `H = 1/alpha`.
pub fn chentsov_kernel(alpha: f64, d: usize) -> Result<KernelFamily> {
    check_alpha(alpha)?;
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    Ok(KernelFamily {
        alpha,
        hurst: 1.0 / alpha,
        kind: KernelKind::Chentsov {
            d,
            constant: chentsov_constant(d)?,
        },
    })
}

/// Example 3.4: moving-average kernel `c_d (||s-x||^q - ||x||^q)` of the
/// fractional Brownian field with Hurst index `hurst`, `alpha = 2`.
pub fn fbf_moving_avg_kernel(hurst: f64, d: usize) -> Result<KernelFamily> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(invalid("hurst", format!("{hurst} is outside (0, 1)")));
    }
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    let unit_norm_sq = moving_average_norm_sq(hurst, d, inner_tolerance())?;
    Ok(KernelFamily {
        alpha: 2.0,
        hurst,
        kind: KernelKind::MovingAverage {
            d,
            exponent: hurst - d as f64 / 2.0,
            scale: unit_norm_sq.powf(-0.5),
            unit_norm_sq,
        },
    })
}

/// Example 3.3: random-slope kernel `f_s(x) = s` on `[0, 1]`, `H = 1`.
pub fn random_slope_kernel(alpha: f64) -> Result<KernelFamily> {
    check_alpha(alpha)?;
    Ok(KernelFamily {
        alpha,
        hurst: 1.0,
        kind: KernelKind::RandomSlope,
    })
}

impl KernelFamily {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Indicator => "indicator",
            KernelKind::LinearFsm { .. } => "linear-fsm",
            KernelKind::Chentsov { .. } => "chentsov",
            KernelKind::MovingAverage { .. } => "moving-average",
            KernelKind::RandomSlope => "random-slope",
        }
    }

    /// Dimension of the time parameter `s`.
    pub fn time_dim(&self) -> usize {
        match self.kind {
            KernelKind::Chentsov { d, .. } | KernelKind::MovingAverage { d, .. } => d,
            _ => 1,
        }
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            KernelKind::Indicator | KernelKind::LinearFsm { .. } => Domain::RealLine,
            KernelKind::Chentsov { d, .. } => Domain::SphereRay { d },
            KernelKind::MovingAverage { d, .. } => Domain::Euclidean { d },
            KernelKind::RandomSlope => Domain::UnitInterval,
        }
    }

    /// `f_s(x)`.
    pub fn evaluate(&self, s: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.time_dim());
        debug_assert_eq!(x.len(), self.domain().point_len());
        match self.kind {
            KernelKind::Indicator => between(x[0], s[0]),
            KernelKind::LinearFsm { a, b, exponent, .. } => lfsm_value(a, b, exponent, s[0], x[0]),
            KernelKind::Chentsov { d, .. } => {
                let u = dot(&x[..d], s);
                let r = x[d];
                if r > 0.0 && r < u {
                    1.0
                } else {
                    0.0
                }
            }
            KernelKind::MovingAverage {
                exponent, scale, ..
            } => {
                let diff: Vec<f64> = s.iter().zip(x).map(|(a, b)| a - b).collect();
                scale * ma_difference(norm(&diff), norm(x), exponent)
            }
            KernelKind::RandomSlope => s[0],
        }
    }

    /// `f_s(anchor + offset)` for one-dimensional kernels on the real line,
    /// with the distances to the singular points `0` and `s` formed from the
    /// offset so that they stay exact when `anchor` is one of them.
    pub fn evaluate_local(&self, s: f64, anchor: f64, offset: f64) -> f64 {
        let sx = (s - anchor) - offset;
        let mx = -anchor - offset;
        match self.kind {
            KernelKind::LinearFsm { a, b, exponent, .. } => lfsm_parts(a, b, exponent, s, sx, mx),
            KernelKind::MovingAverage {
                d: 1,
                exponent,
                scale,
                ..
            } => scale * ma_parts(s, sx, mx, exponent),
            _ => self.evaluate(&[s], &[anchor + offset]),
        }
    }

    /// Normalization and geometry constants for provenance records.
    pub fn constants(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        out.insert("alpha".into(), self.alpha);
        out.insert("hurst".into(), self.hurst);
        match self.kind {
            KernelKind::LinearFsm {
                a,
                b,
                exponent,
                raw_norm,
            } => {
                out.insert("a".into(), a);
                out.insert("b".into(), b);
                out.insert("exponent".into(), exponent);
                out.insert("raw_norm".into(), raw_norm);
            }
            KernelKind::Chentsov { d, constant } => {
                out.insert("d".into(), d as f64);
                out.insert("chentsov_constant".into(), constant);
            }
            KernelKind::MovingAverage {
                d,
                exponent,
                scale,
                unit_norm_sq,
            } => {
                out.insert("d".into(), d as f64);
                out.insert("exponent".into(), exponent);
                out.insert("c_d".into(), scale);
                out.insert("unit_norm_sq".into(), unit_norm_sq);
            }
            KernelKind::Indicator | KernelKind::RandomSlope => {}
        }
        out
    }

    /// Decay exponent `e` with `|f_s(x)|^alpha = O(|x|^{-e})` as `|x| -> inf`
    /// for kernels of unbounded support, `None` for bounded support.
    pub fn tail_decay(&self) -> Option<f64> {
        match self.kind {
            KernelKind::LinearFsm { exponent, .. } if exponent != 0.0 => {
                Some((1.0 - exponent) * self.alpha)
            }
            KernelKind::MovingAverage { exponent, .. } => Some(2.0 * (1.0 - exponent)),
            _ => None,
        }
    }
}

/// Declarative kernel specification (config files, provenance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Indicator {
        alpha: f64,
    },
    LinearFsm {
        alpha: f64,
        hurst: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        b: f64,
    },
    Chentsov {
        alpha: f64,
        #[serde(default = "one_usize")]
        d: usize,
    },
    MovingAverage {
        hurst: f64,
        #[serde(default = "one_usize")]
        d: usize,
    },
    RandomSlope {
        alpha: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelFamily> {
        match *self {
            KernelSpec::Indicator { alpha } => indicator_kernel(alpha),
            KernelSpec::LinearFsm { alpha, hurst, a, b } => {
                linear_fsm_kernel(LinearFsmParams::new(a, b, alpha, hurst)?)
            }
            KernelSpec::Chentsov { alpha, d } => chentsov_kernel(alpha, d),
            KernelSpec::MovingAverage { hurst, d } => fbf_moving_avg_kernel(hurst, d),
            KernelSpec::RandomSlope { alpha } => random_slope_kernel(alpha),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            KernelSpec::Indicator { .. } => "indicator",
            KernelSpec::LinearFsm { .. } => "linear-fsm",
            KernelSpec::Chentsov { .. } => "chentsov",
            KernelSpec::MovingAverage { .. } => "moving-average",
            KernelSpec::RandomSlope { .. } => "random-slope",
        }
    }
}

/// `C = (1/2) int_{S^{d-1}} |phi . e_1| dphi`: closed form for `d <= 2`,
/// numerical quadrature over the polar angle otherwise.
pub fn chentsov_constant(d: usize) -> Result<f64> {
    match d {
        0 => Err(invalid("d", "must be at least 1")),
        1 => Ok(1.0),
        2 => Ok(2.0),
        _ => {
            let k = (d - 2) as f64;
            // surface area of S^{d-2}
            let area = 2.0 * PI.powf((k + 1.0) / 2.0) / gamma((k + 1.0) / 2.0);
            let f = |psi: f64| psi.cos().abs() * psi.sin().powf(k);
            let est = integrate_pieces(&f, &[(0.0, PI / 2.0), (PI / 2.0, PI)], inner_tolerance())?;
            Ok(0.5 * area * est.value)
        }
    }
}

/// `int_E |sum_j theta_j (f_{s_{j+1}} - f_{s_j})|^alpha dm` for `thetas` of
/// length `n` and `times` of length `n + 1`. With `times = [0, s]` and
/// `thetas = [1]` this is `||f_s||_alpha^alpha`.
pub fn lalpha_functional(kernel: &KernelFamily, thetas: &[f64], times: &[Vec<f64>]) -> Result<f64> {
    if times.len() != thetas.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} increments need {} times, got {}",
            thetas.len(),
            thetas.len() + 1,
            times.len()
        )));
    }
    let n = thetas.len();
    let coeffs: Vec<f64> = (0..=n)
        .map(|k| {
            let before = if k > 0 { thetas[k - 1] } else { 0.0 };
            let after = if k < n { thetas[k] } else { 0.0 };
            before - after
        })
        .collect();
    lalpha_combination(kernel, &coeffs, times)
}

/// `int_E |sum_j c_j f_{s_j}|^alpha dm`.
pub fn lalpha_combination(kernel: &KernelFamily, coeffs: &[f64], times: &[Vec<f64>]) -> Result<f64> {
    lalpha_combination_with(kernel, coeffs, times, inner_tolerance())
}

pub fn lalpha_combination_with(
    kernel: &KernelFamily,
    coeffs: &[f64],
    times: &[Vec<f64>],
    tol: Tolerance,
) -> Result<f64> {
    if coeffs.len() != times.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} times",
            coeffs.len(),
            times.len()
        )));
    }
    let dim = kernel.time_dim();
    if let Some(bad) = times.iter().find(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "kernel time dimension is {dim}, got a time of length {}",
            bad.len()
        )));
    }
    if times.iter().flatten().any(|v| !v.is_finite()) || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(invalid("times", "non-finite time or coefficient"));
    }
    let alpha = kernel.alpha;
    let scalar: Vec<f64> = times.iter().map(|t| t[0]).collect();
    match kernel.kind {
        KernelKind::Indicator => Ok(indicator_combination(coeffs, &scalar, alpha)),
        KernelKind::RandomSlope => {
            Ok(coeffs.iter().zip(&scalar).map(|(c, s)| c * s).sum::<f64>().abs().powf(alpha))
        }
        KernelKind::LinearFsm { a, b, exponent, .. } => {
            lfsm_combination(a, b, exponent, alpha, coeffs, &scalar, tol)
        }
        KernelKind::Chentsov { d, constant } => {
            let mass = match d {
                1 => chentsov_line(coeffs, &scalar, alpha),
                2 => chentsov_plane(coeffs, times, alpha, tol)?,
                3 => chentsov_space(coeffs, times, alpha, tol)?,
                _ => {
                    return Err(Error::Unsupported(format!(
                        "Chentsov L^alpha quadrature is implemented for d <= 3, got d = {d}"
                    )))
                }
            };
            Ok(mass / constant)
        }
        KernelKind::MovingAverage {
            d,
            exponent,
            scale,
            unit_norm_sq,
        } => {
            if d == 1 {
                let f = |anchor: f64, u: f64| {
                    let g: f64 = coeffs
                        .iter()
                        .zip(&scalar)
                        .map(|(c, &s)| c * ma_parts(s, (s - anchor) - u, -anchor - u, exponent))
                        .sum();
                    g * g
                };
                let mut bps = scalar.clone();
                bps.push(0.0);
                Ok(scale * scale * integrate_real_line_anchored(&f, &bps, tol)?.value)
            } else {
                // Gaussian case: the quadratic form follows from the
                // covariance of the represented field (polarization).
                let h2 = 2.0 * kernel.hurst;
                let mut total = 0.0;
                for i in 0..times.len() {
                    for j in i..times.len() {
                        let (ti, tj) = (&times[i], &times[j]);
                        let diff: Vec<f64> = ti.iter().zip(tj).map(|(a, b)| a - b).collect();
                        let cov = 0.5
                            * (norm(ti).powf(h2) + norm(tj).powf(h2) - norm(&diff).powf(h2));
                        let mult = if i == j { 1.0 } else { 2.0 };
                        total += mult * coeffs[i] * coeffs[j] * cov;
                    }
                }
                Ok((total * scale * scale * unit_norm_sq).max(0.0))
            }
        }
    }
}

/// `int (||e_1 - x||^q - ||x||^q)^2 dx` over `R^d` with `q = H - d/2`
/// (logarithmic kernel when `q = 0`).
pub fn moving_average_norm_sq(hurst: f64, d: usize, tol: Tolerance) -> Result<f64> {
    let q = hurst - d as f64 / 2.0;
    if d == 1 {
        let f = |anchor: f64, u: f64| ma_parts(1.0, (1.0 - anchor) - u, -anchor - u, q).powi(2);
        return Ok(integrate_real_line_anchored(&f, &[0.0, 1.0], tol)?.value);
    }
    // Polar coordinates around the origin with e_1 as the polar axis.
    let k = (d - 2) as f64;
    let sphere = 2.0 * PI.powf((k + 1.0) / 2.0) / gamma((k + 1.0) / 2.0);
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        ..tol
    };
    let radial = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let g = |psi: f64| {
            // |e_1 - r phi|^2 written without cancellation near (r, psi) = (1, 0)
            let half = (0.5 * psi).sin();
            let dist_sq = (1.0 - r).powi(2) + 4.0 * r * half * half;
            // difference of squared norms is exactly 1 - 2 r cos(psi)
            let diff = power_difference(dist_sq, r * r, 1.0 - 2.0 * r * psi.cos(), 0.5 * q);
            let diff = if q == 0.0 { 0.5 * diff } else { diff };
            diff.powi(2) * psi.sin().powf(k)
        };
        let est = integrate_pieces(&g, &[(0.0, PI / 2.0), (PI / 2.0, PI)], inner_tol)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        sphere * r.powi(d as i32 - 1) * est
    };
    let finite = integrate_pieces(&radial, &[(0.0, 0.5), (0.5, 1.0), (1.0, 2.0)], tol)?;
    let tail = integrate_power_tail(&radial, 2.0, 1.0, 2.0, finite.value, tol)?;
    let total = finite.value + tail.value;
    if !total.is_finite() {
        return Err(Error::Quadrature {
            estimate: total,
            error_bound: f64::INFINITY,
            evaluations: finite.evaluations + tail.evaluations,
        });
    }
    Ok(total)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1` iff `x` lies in `[0, s]` (or `[s, 0]`), boundary excluded.
fn between(x: f64, s: f64) -> f64 {
    if (s > 0.0 && x > 0.0 && x < s) || (s < 0.0 && x < 0.0 && x > s) {
        1.0
    } else {
        0.0
    }
}

fn pos_pow(y: f64, p: f64) -> f64 {
    if y > 0.0 {
        if p == 0.0 {
            1.0
        } else {
            y.powf(p)
        }
    } else {
        0.0
    }
}

/// `x^q - y^q` for `x, y > 0` given the exactly known difference `x - y`
/// (`ln x - ln y` when `q = 0`), accurate when `|x - y| << y`.
fn power_difference(x: f64, y: f64, diff: f64, q: f64) -> f64 {
    if diff.abs() < 0.5 * y {
        let l = (diff / y).ln_1p();
        if q == 0.0 {
            l
        } else {
            y.powf(q) * (q * l).exp_m1()
        }
    } else if q == 0.0 {
        x.ln() - y.ln()
    } else {
        x.powf(q) - y.powf(q)
    }
}

/// Linear FSM kernel from `sx = s - x` and `mx = -x`, which callers compute
/// exactly near the singular points `x = s` and `x = 0`.
pub(crate) fn lfsm_parts(a: f64, b: f64, p: f64, s: f64, sx: f64, mx: f64) -> f64 {
    let mut v = 0.0;
    if a != 0.0 {
        v += a * if sx > 0.0 && mx > 0.0 {
            if p == 0.0 {
                0.0
            } else {
                power_difference(sx, mx, s, p)
            }
        } else {
            pos_pow(sx, p) - pos_pow(mx, p)
        };
    }
    if b != 0.0 {
        v += b * if sx < 0.0 && mx < 0.0 {
            if p == 0.0 {
                0.0
            } else {
                power_difference(-sx, -mx, -s, p)
            }
        } else {
            pos_pow(-sx, p) - pos_pow(-mx, p)
        };
    }
    v
}

pub(crate) fn lfsm_value(a: f64, b: f64, p: f64, s: f64, x: f64) -> f64 {
    lfsm_parts(a, b, p, s, s - x, -x)
}

/// Moving-average difference `|s - x|^q - |x|^q` from `sx = s - x`, `mx = -x`.
fn ma_parts(s: f64, sx: f64, mx: f64, q: f64) -> f64 {
    if sx > 0.0 && mx > 0.0 {
        power_difference(sx, mx, s, q)
    } else if sx < 0.0 && mx < 0.0 {
        power_difference(-sx, -mx, -s, q)
    } else {
        ma_difference(sx.abs(), mx.abs(), q)
    }
}

fn lfsm_combination(
    a: f64,
    b: f64,
    p: f64,
    alpha: f64,
    coeffs: &[f64],
    times: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let f = |anchor: f64, u: f64| {
        let g: f64 = coeffs
            .iter()
            .zip(times)
            .map(|(c, &s)| c * lfsm_parts(a, b, p, s, (s - anchor) - u, -anchor - u))
            .sum();
        g.abs().powf(alpha)
    };
    if p == 0.0 {
        // bounded support: f_s = a sign(s) 1_{[0, s]} (b = 0 is enforced)
        if b != 0.0 {
            return Err(invalid("b", "exponent 0 requires b = 0"));
        }
        let signed: Vec<f64> = coeffs.iter().zip(times).map(|(c, s)| c * s.signum() * a).collect();
        return Ok(indicator_combination(&signed, times, alpha));
    }
    let mut bps: Vec<f64> = times.to_vec();
    bps.push(0.0);
    Ok(integrate_real_line_anchored(&f, &bps, tol)?.value)
}

/// Difference `||s - x||^q - ||x||^q` given both norms (log kernel at `q = 0`).
fn ma_difference(dist_to_s: f64, dist_to_origin: f64, q: f64) -> f64 {
    if q == 0.0 {
        dist_to_s.ln() - dist_to_origin.ln()
    } else {
        dist_to_s.powf(q) - dist_to_origin.powf(q)
    }
}

/// Exact piecewise integral of `|sum_j c_j 1_{[0, s_j]}|^alpha`.
fn indicator_combination(coeffs: &[f64], times: &[f64], alpha: f64) -> f64 {
    let mut pts: Vec<f64> = times.to_vec();
    pts.push(0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let g: f64 = coeffs.iter().zip(times).map(|(c, &s)| c * between(mid, s)).sum();
        total += g.abs().powf(alpha) * (w[1] - w[0]);
    }
    total
}

/// `int_0^inf |sum_j c_j 1{r < u_j}|^alpha dr` for the ray heights `u_j`.
pub(crate) fn ray_mass(heights: &[(f64, f64)], alpha: f64) -> f64 {
    let mut pos: Vec<(f64, f64)> = heights.iter().copied().filter(|&(u, _)| u > 0.0).collect();
    if pos.is_empty() {
        return 0.0;
    }
    pos.sort_by(|x, y| x.0.total_cmp(&y.0));
    // suffix sums: on (u_{k-1}, u_k) the active terms are those with u_j >= u_k
    let mut total = 0.0;
    let mut active: f64 = pos.iter().map(|&(_, c)| c).sum();
    let mut lo = 0.0;
    for &(u, c) in &pos {
        total += active.abs().powf(alpha) * (u - lo);
        active -= c;
        lo = u;
    }
    total
}

fn chentsov_line(coeffs: &[f64], times: &[f64], alpha: f64) -> f64 {
    let plus: Vec<(f64, f64)> = times.iter().zip(coeffs).map(|(&s, &c)| (s, c)).collect();
    let minus: Vec<(f64, f64)> = times.iter().zip(coeffs).map(|(&s, &c)| (-s, c)).collect();
    ray_mass(&plus, alpha) + ray_mass(&minus, alpha)
}

/// Directions `v` whose orthogonal great circles carry the kinks of the
/// angular integrand: the times themselves and all pairwise differences.
fn kink_directions(times: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = times.iter().filter(|t| norm(t) > 0.0).cloned().collect();
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            let v: Vec<f64> = times[i].iter().zip(&times[j]).map(|(a, b)| a - b).collect();
            if norm(&v) > 0.0 {
                dirs.push(v);
            }
        }
    }
    dirs
}

/// Angles in `[0, 2 pi)` where `phi(psi) . v = 0` for some kink direction.
pub(crate) fn planar_kink_angles(times: &[Vec<f64>]) -> Vec<f64> {
    let two_pi = 2.0 * PI;
    let mut angles = vec![0.0, two_pi];
    for v in kink_directions(times) {
        let base = v[1].atan2(v[0]);
        for shift in [PI / 2.0, -PI / 2.0] {
            angles.push((base + shift).rem_euclid(two_pi));
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    angles
}

fn chentsov_plane(coeffs: &[f64], times: &[Vec<f64>], alpha: f64, tol: Tolerance) -> Result<f64> {
    let angles = planar_kink_angles(times);
    let f = |psi: f64| {
        let (sn, cs) = psi.sin_cos();
        let heights: Vec<(f64, f64)> = times
            .iter()
            .zip(coeffs)
            .map(|(t, &c)| (cs * t[0] + sn * t[1], c))
            .collect();
        ray_mass(&heights, alpha)
    };
    let pieces: Vec<(f64, f64)> = angles.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(integrate_pieces(&f, &pieces, tol)?.value)
}

fn chentsov_space(coeffs: &[f64], times: &[Vec<f64>], alpha: f64, tol: Tolerance) -> Result<f64> {
    let dirs = kink_directions(times);
    // polar breakpoints where a kink circle is tangent to a latitude
    let mut polar = vec![0.0, PI];
    for v in &dirs {
        let rho = v[0].hypot(v[1]);
        let t = v[2].abs().atan2(rho);
        polar.push(t);
        polar.push(PI - t);
        polar.push(PI / 2.0);
    }
    polar.sort_by(f64::total_cmp);
    polar.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        ..tol
    };
    let failure = std::cell::Cell::new(None);
    let outer = |theta: f64| -> f64 {
        let (st, ct) = theta.sin_cos();
        if st == 0.0 {
            return 0.0;
        }
        let mut az = vec![0.0, 2.0 * PI];
        for v in &dirs {
            let rho = v[0].hypot(v[1]);
            if rho * st == 0.0 {
                continue;
            }
            let ratio = -v[2] * ct / (rho * st);
            if ratio.abs() <= 1.0 {
                let base = v[1].atan2(v[0]);
                let off = ratio.acos();
                az.push((base + off).rem_euclid(2.0 * PI));
                az.push((base - off).rem_euclid(2.0 * PI));
            }
        }
        az.sort_by(f64::total_cmp);
        az.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let g = |phi: f64| {
            let (sp, cp) = phi.sin_cos();
            let dir = [st * cp, st * sp, ct];
            let heights: Vec<(f64, f64)> =
                times.iter().zip(coeffs).map(|(t, &c)| (dot(&dir, t), c)).collect();
            ray_mass(&heights, alpha)
        };
        let pieces: Vec<(f64, f64)> = az.windows(2).map(|w| (w[0], w[1])).collect();
        match integrate_pieces(&g, &pieces, inner_tol) {
            Ok(e) => e.value * st,
            Err(e) => {
                failure.set(Some(e.to_string()));
                f64::NAN
            }
        }
    };
    let pieces: Vec<(f64, f64)> = polar.windows(2).map(|w| (w[0], w[1])).collect();
    let est = integrate_pieces(&outer, &pieces, tol);
    if let Some(msg) = failure.take() {
        log::debug!("inner azimuthal quadrature failed: {msg}");
    }
    Ok(est?.value)
}
