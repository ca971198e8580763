use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{empirical_cf, spearman, CurveData};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::KernelFamily;
use crate::rng::RandomStream;
use crate::scheme::SchemeSpec;
use crate::subordination::{build_random_time_kernel, simulate_iterated_sum};
use crate::subordinator::GaussianFieldSampler;

/// A convergence trend requires the rank correlation of `d(n)` with `n`
/// to be below this value.
pub const SPEARMAN_THRESHOLD: f64 = -0.8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltOptions {
    /// Subordinator paths used to evaluate the target CF
    /// `exp(-int E'|sum theta_j f_{tau_{t_j}}|^alpha)`.
    pub reference_paths: usize,
    pub scheme: SchemeSpec,
}

impl Default for CltOptions {
    fn default() -> Self {
        Self {
            reference_paths: 20_000,
            scheme: SchemeSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub n_schedule: Vec<usize>,
    /// `d(n) = max_p |ECF_n(theta_p) - target(theta_p)|` over nonzero probes.
    pub distances: Vec<f64>,
    pub target: Vec<Complex64>,
    /// Monte Carlo standard error of each target value over the reference
    /// batch.
    pub target_stderr: Vec<f64>,
    pub ecfs: Vec<Vec<Complex64>>,
    pub spearman: f64,
    pub replications: usize,
    pub reference_paths: usize,
    pub trend: bool,
}

impl CurveData for CltReport {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,distance")?;
        for (n, d) in self.n_schedule.iter().zip(&self.distances) {
            writeln!(out, "{n},{d:.16e}")?;
        }
        Ok(())
    }
}

/// Convergence of `n^{-1/alpha} sum_{l <= n} X^(l)_{tau^(l)_t}` to the
/// random-time field `X^tau_t` (stable limit theorem).
///
/// For every `n` in the schedule `R` iterated sums are simulated on the
/// points `times` (plus the origin); `d(n)` is the largest distance of their
/// joint ECF from the CF of `X^tau` over the nonzero `thetas`. The target is
/// the exact CF of the random-time field for a reference batch of
/// `options.reference_paths` fractional Brownian paths.
#[allow(clippy::too_many_arguments)]
pub fn test_stable_clt(
    base: &KernelFamily,
    hurst_prime: f64,
    n_schedule: &[usize],
    times: &[Vec<f64>],
    thetas: &[Vec<f64>],
    replications: usize,
    options: CltOptions,
    stream: &RandomStream,
) -> Result<CltReport> {
    if n_schedule.len() < 3 {
        return Err(invalid("n_schedule", "at least 3 entries are required"));
    }
    if n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_schedule", "entries must be positive and strictly increasing"));
    }
    if times.is_empty() {
        return Err(invalid("times", "at least one time point is required"));
    }
    if options.reference_paths == 0 {
        return Err(invalid("reference_paths", "must be positive"));
    }
    let dim = base.time_dim();
    if let Some(t) = times.iter().find(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "time point {t:?} for a kernel with time dimension {dim}"
        )));
    }
    let grid = TimeGrid::new(dim, vec![vec![0.0; dim]])?.with_points(times)?;
    let idx: Vec<usize> = times.iter().map(|t| grid.index_of(t).expect("grid point")).collect();

    let sampler = GaussianFieldSampler::auto(hurst_prime, dim, &grid)?;
    let reference = sampler.sample_batch(options.reference_paths, &stream.labeled("reference", 0))?;
    let rtk = build_random_time_kernel(base, &reference)?;
    let mut target = Vec::with_capacity(thetas.len());
    let mut target_stderr = Vec::with_capacity(thetas.len());
    for th in thetas {
        if th.len() != idx.len() {
            return Err(Error::DimensionMismatch(format!(
                "frequency vector of length {} for {} times",
                th.len(),
                idx.len()
            )));
        }
        if th.iter().all(|&v| v == 0.0) {
            target.push(Complex64::new(1.0, 0.0));
            target_stderr.push(0.0);
            continue;
        }
        let masses = rtk.lalpha_masses(&idx, th)?;
        let (mean, se) = super::mean_and_stderr(&masses);
        let cf = (-mean).exp();
        target.push(Complex64::new(cf, 0.0));
        target_stderr.push(cf * se);
    }

    let mut distances = Vec::with_capacity(n_schedule.len());
    let mut ecfs = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let sample = simulate_iterated_sum(
            base,
            hurst_prime,
            &grid,
            n,
            replications,
            options.scheme,
            &stream.labeled("iterated-sum", n as u64),
        )?;
        let ecf = empirical_cf(&sample, &idx, thetas)?;
        let d = ecf
            .values
            .iter()
            .zip(&target)
            .zip(thetas)
            .filter(|(_, th)| th.iter().any(|&v| v != 0.0))
            .map(|((a, b), _)| (a - b).norm())
            .fold(0.0, f64::max);
        log::info!("stable CLT: n = {n}, d(n) = {d:.5}");
        distances.push(d);
        ecfs.push(ecf.values);
    }
    let ns: Vec<f64> = n_schedule.iter().map(|&n| n as f64).collect();
    let rho = spearman(&ns, &distances);
    Ok(CltReport {
        n_schedule: n_schedule.to_vec(),
        distances,
        target,
        target_stderr,
        ecfs,
        spearman: rho,
        replications,
        reference_paths: options.reference_paths,
        trend: rho < SPEARMAN_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::indicator_kernel;
    use std::f64::consts::PI;

    #[test]
    fn distances_are_bounded_and_zero_probe_is_excluded() {
        let k = indicator_kernel(1.5).unwrap();
        let thetas = vec![vec![0.0], vec![0.8], vec![1.6]];
        let opts = CltOptions {
            reference_paths: 2000,
            ..CltOptions::default()
        };
        let rep = test_stable_clt(&k, 0.5, &[1, 2, 8], &[vec![1.0]], &thetas, 400, opts, &RandomStream::new(1)).unwrap();
        assert_eq!(rep.target[0], Complex64::new(1.0, 0.0));
        for (e, d) in rep.ecfs.iter().zip(&rep.distances) {
            assert_eq!(e[0], Complex64::new(1.0, 0.0));
            assert!(*d >= 0.0 && *d <= 2.0);
        }
        // single time, indicator base: the target is exp(-E'|tau_1| theta^alpha)
        let want = (-(2.0 / PI).sqrt() * 0.8f64.powf(1.5)).exp();
        assert!((rep.target[1].re - want).abs() < 4.0 * rep.target_stderr[1] + 1e-3);
    }

    #[test]
    fn rejects_bad_schedules() {
        let k = indicator_kernel(1.5).unwrap();
        let s = RandomStream::new(2);
        let o = CltOptions::default();
        assert!(test_stable_clt(&k, 0.5, &[4, 16], &[vec![1.0]], &[vec![1.0]], 200, o, &s).is_err());
        assert!(test_stable_clt(&k, 0.5, &[4, 4, 16], &[vec![1.0]], &[vec![1.0]], 200, o, &s).is_err());
    }
}
