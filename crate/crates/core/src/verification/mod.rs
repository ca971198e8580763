//! Statistical and numerical checks of the structural properties of
//! random-time stable fields: empirical characteristic functions, Hurst
//! estimation, strong stationarity of increments, the stable limit theorem,
//! the sub-Gaussian equivalence and the ergodic diagnostics of the
//! increment process.
//!
//! Every report is `Serialize` (JSON) and implements [`CurveData`] for the
//! plot-ready CSV of its curve.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;

mod clt;
mod ecf;
mod ergodic;
mod hurst;
mod sis;
mod subgaussian;

pub use clt::{test_stable_clt, CltOptions, CltReport, SPEARMAN_THRESHOLD};
pub use ecf::{empirical_cf, empirical_cf_vectors, Ecf, MIN_ECF_SAMPLES};
pub use ergodic::{
    classify_flow, dissipative_control, gross_mixing_measure, gross_mixing_measure_for, integer_time_grid,
    rosinski_partial_sums, rosinski_partial_sums_for, rosinski_probe_points, ErgodicDiagnostics, ErgodicOptions,
    FlowVerdict, IncrementRepresentation, RandomTimeIncrements, TranslatedIncrements, CurvePoint,
    MIXING_DECAY_FACTOR, MIXING_SIGMAS, ROSINSKI_CONVERGENCE_RATIO, ROSINSKI_DIVERGENCE_RATIO,
};
pub use hurst::{estimate_hurst, fit_scaling, median_abs, ScalingFit};
pub use sis::{test_sis, SisReport};
pub use subgaussian::{test_subgaussian_equivalence, SubgaussianOptions, SubgaussianReport};

/// Width of the pass/fail bands in units of the ECF standard error when a
/// single probe is tested.
pub const BAND_SIGMAS: f64 = 3.0;

/// Curve data of a report as CSV with a fixed header.
pub trait CurveData {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;
}

/// Two-sided normal quantile for `probes` simultaneous comparisons at the
/// family-wise level of a single `BAND_SIGMAS` band (Bonferroni).
pub fn bonferroni_z(probes: usize) -> f64 {
    let normal = Normal::standard();
    if probes <= 1 {
        return BAND_SIGMAS;
    }
    let tail = 1.0 - normal.cdf(BAND_SIGMAS);
    normal.inverse_cdf(1.0 - tail / probes as f64)
}

/// Half-width of the band for the difference of two independent ECFs from
/// `r1` and `r2` samples. `E|ecf - phi|^2 = (1 - |phi|^2)/R <= 1/R`
/// bounds the standard error of each estimate.
pub fn two_sample_band(r1: usize, r2: usize, probes: usize) -> f64 {
    bonferroni_z(probes) * (1.0 / r1 as f64 + 1.0 / r2 as f64).sqrt()
}

/// Half-width of the band for one ECF from `r` samples against an exact CF.
pub fn one_sample_band(r: usize, probes: usize) -> f64 {
    bonferroni_z(probes) / (r as f64).sqrt()
}

/// Spearman rank correlation with average ranks for ties; `NaN` when either
/// input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_reduces_to_three_sigma_for_one_probe() {
        assert_eq!(bonferroni_z(1), 3.0);
        assert!((bonferroni_z(2) - 3.205).abs() < 1e-3);
        assert!(bonferroni_z(20) > bonferroni_z(10));
    }

    #[test]
    fn spearman_of_monotone_sequences() {
        let n = [4.0, 16.0, 64.0, 256.0];
        assert!((spearman(&n, &[0.4, 0.1, 0.05, 0.01]) + 1.0).abs() < 1e-15);
        assert!((spearman(&n, &[0.4, 0.05, 0.1, 0.01]) + 0.8).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 2.0], &[1.0, 2.0, 3.0]) - 0.866_025_403_784_438_6).abs() < 1e-12);
    }
}
