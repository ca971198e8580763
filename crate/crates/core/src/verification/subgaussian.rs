use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use super::{bonferroni_z, empirical_cf, CurveData};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::random_slope_kernel;
use crate::rng::RandomStream;
use crate::scheme::SchemeSpec;
use crate::subordination::{build_random_time_kernel, simulate_random_time_field, subgaussian_path};
use crate::subordinator::sample_fbf;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubgaussianOptions {
    /// Subordinator paths of the random-slope field. The simulated field is
    /// the exact random-time field for this batch, so the batch has to be
    /// large for its law to be close to the sub-Gaussian one.
    pub paths: usize,
}

impl Default for SubgaussianOptions {
    fn default() -> Self {
        Self { paths: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubgaussianReport {
    pub alpha: f64,
    pub hurst_prime: f64,
    pub times: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    /// ECF of the random-slope random-time field.
    pub field: Vec<Complex64>,
    /// ECF of `c_alpha A^{1/2} tau`.
    pub closed_form: Vec<Complex64>,
    /// `exp(-E|N|^alpha (theta' Sigma theta)^{alpha/2})`, the common CF.
    pub analytic: Vec<f64>,
    /// `exp(-theta' Sigma theta)`: the alpha = 2 limit.
    pub gaussian_limit: Vec<f64>,
    pub distances: Vec<f64>,
    pub sup_distance: f64,
    pub threshold: f64,
    pub replications: usize,
    pub paths: usize,
    pub pass: bool,
}

impl CurveData for SubgaussianReport {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "probe,field_re,field_im,closed_form_re,closed_form_im,analytic,gaussian_limit,distance")?;
        for p in 0..self.thetas.len() {
            let (a, b) = (self.field[p], self.closed_form[p]);
            writeln!(
                out,
                "{p},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                a.re, a.im, b.re, b.im, self.analytic[p], self.gaussian_limit[p], self.distances[p]
            )?;
        }
        Ok(())
    }
}

fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(2.0 * h) + t.abs().powf(2.0 * h) - (s - t).abs().powf(2.0 * h))
}

/// Compares the random-slope random-time field with the closed form
/// `c_alpha A^{1/2} tau^{H'}` on the joint ECF at `times`.
pub fn test_subgaussian_equivalence(
    alpha: f64,
    hurst_prime: f64,
    times: &[f64],
    thetas: &[Vec<f64>],
    replications: usize,
    options: SubgaussianOptions,
    stream: &RandomStream,
) -> Result<SubgaussianReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
    }
    if times.is_empty() {
        return Err(invalid("times", "at least one time point is required"));
    }
    if let Some(th) = thetas.iter().find(|th| th.len() != times.len()) {
        return Err(Error::DimensionMismatch(format!(
            "frequency vector of length {} for {} times",
            th.len(),
            times.len()
        )));
    }
    let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![t]).collect();
    let grid = TimeGrid::from_times(&[0.0])?.with_points(&pts)?;
    let idx: Vec<usize> = pts.iter().map(|p| grid.index_of(p).expect("grid point")).collect();

    let batch = sample_fbf(hurst_prime, 1, &grid, options.paths, &stream.labeled("batch", 0))?;
    let rtk = build_random_time_kernel(&random_slope_kernel(alpha)?, &batch)?;
    let field = simulate_random_time_field(&rtk, SchemeSpec::default(), replications, &stream.labeled("field", 0))?;
    let closed = subgaussian_path(alpha, hurst_prime, &grid, replications, &stream.labeled("subgaussian", 0))?;
    let ecf_field = empirical_cf(&field, &idx, thetas)?;
    let ecf_closed = empirical_cf(&closed, &idx, thetas)?;

    let abs_moment = 2f64.powf(alpha / 2.0) * gamma((alpha + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    let mut analytic = Vec::with_capacity(thetas.len());
    let mut gaussian_limit = Vec::with_capacity(thetas.len());
    for th in thetas {
        let mut q = 0.0;
        for (i, a) in th.iter().enumerate() {
            for (j, b) in th.iter().enumerate() {
                q += a * b * fbm_covariance(hurst_prime, times[i], times[j]);
            }
        }
        let q = q.max(0.0);
        analytic.push((-abs_moment * q.powf(alpha / 2.0)).exp());
        gaussian_limit.push((-q).exp());
    }
    let distances = ecf_field.distances(&ecf_closed.values);
    let probes = thetas.iter().filter(|th| th.iter().any(|&v| v != 0.0)).count();
    let threshold = bonferroni_z(probes) * (2.0 / replications as f64).sqrt();
    let sup_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(SubgaussianReport {
        alpha,
        hurst_prime,
        times: times.to_vec(),
        thetas: thetas.to_vec(),
        field: ecf_field.values,
        closed_form: ecf_closed.values,
        analytic,
        gaussian_limit,
        distances,
        sup_distance,
        threshold,
        replications,
        paths: options.paths,
        pass: sup_distance <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_set() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![0.7, 0.0], vec![0.0, 0.9], vec![0.5, 0.5], vec![1.0, -0.6]]
    }

    #[test]
    fn joint_two_time_probe_passes() {
        let rep = test_subgaussian_equivalence(
            1.5,
            0.5,
            &[0.5, 1.0],
            &probe_set(),
            10_000,
            SubgaussianOptions::default(),
            &RandomStream::new(1),
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.field[0], Complex64::new(1.0, 0.0));
        assert_eq!(rep.closed_form[0], Complex64::new(1.0, 0.0));
        // both estimates agree with the analytic CF as well
        let band = bonferroni_z(4) / 100.0;
        for p in 1..5 {
            assert!((rep.closed_form[p] - rep.analytic[p]).norm() < band);
        }
    }

    #[test]
    fn near_gaussian_marginal_passes_and_approaches_gaussian_cf() {
        let thetas = vec![vec![0.5], vec![1.0], vec![1.5]];
        let rep = test_subgaussian_equivalence(
            1.9,
            0.5,
            &[1.0],
            &thetas,
            10_000,
            SubgaussianOptions::default(),
            &RandomStream::new(2),
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
        let gap = |alpha: f64| {
            let m = 2f64.powf(alpha / 2.0) * gamma((alpha + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
            (-m * 1.0f64.powf(alpha / 2.0)).exp() - (-1.0f64).exp()
        };
        assert!(gap(1.9).abs() < gap(1.5).abs());
        for p in 0..3 {
            assert!((rep.field[p].re - rep.gaussian_limit[p]).abs() < 0.06, "{rep:?}");
        }
    }
}
