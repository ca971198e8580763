//! alpha-stabilized subordination: random-time kernels `f_{tau_t(w')}(x)`
//! over the product space `E x Omega'`, their simulation as discretized
//! stable integrals, the iterated-sum construction of the stable limit
//! theorem, and the closed-form sub-Gaussian generator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::field::{FieldMeta, FieldSample};
use crate::grid::TimeGrid;
use crate::kernels::{lalpha_combination, KernelFamily};
use crate::rng::RandomStream;
use crate::scheme::{build_scheme, compile, CompiledIntegral, IntegralScheme, SchemeSpec};
use crate::stable::{sample_subgaussian_multiplier, sample_symmetric_standard};
use crate::subordinator::{GaussianFieldSampler, SubordinatorBatch};

/// Relative change of `E'|tau_t|^{H alpha}` between the half and the full
/// batch above which the well-posedness estimate is flagged as unstable.
pub const WELL_POSEDNESS_STABILITY: f64 = 0.05;

/// Monte Carlo evidence for `E'||tau_t||^{H alpha} < inf`, the condition
/// under which the random-time kernel is a representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WellPosedness {
    pub exponent: f64,
    /// Batch average of `||tau_t||^{H alpha}` per grid point.
    pub moments: Vec<f64>,
    /// The same average over the first half of the batch.
    pub half_batch_moments: Vec<f64>,
    pub max_relative_change: f64,
    pub stable: bool,
}

#[derive(Clone, Debug)]
pub struct RandomTimeKernel {
    base: KernelFamily,
    batch: SubordinatorBatch,
    effective_hurst: f64,
    well_posedness: WellPosedness,
}

/// The alpha-stabilized subordination of `base` with respect to the sampled
/// subordinator paths in `batch`.
pub fn build_random_time_kernel(base: &KernelFamily, batch: &SubordinatorBatch) -> Result<RandomTimeKernel> {
    if base.time_dim() != batch.d() {
        return Err(Error::DimensionMismatch(format!(
            "kernel time dimension {} differs from subordinator range dimension d = {}",
            base.time_dim(),
            batch.d()
        )));
    }
    let exponent = base.hurst() * base.alpha();
    let m = batch.grid().len();
    let k = batch.paths();
    let moments: Vec<f64> = (0..m).map(|t| batch.mean_norm_power(t, exponent)).collect();
    if let Some(t) = moments.iter().position(|v| !v.is_finite()) {
        return Err(Error::WellPosedness(format!(
            "E'|tau_t|^{exponent} is not finite at grid index {t}"
        )));
    }
    let half = (k / 2).max(1);
    let half_batch_moments: Vec<f64> = (0..m)
        .map(|t| {
            (0..half)
                .map(|i| batch.point(i, t).iter().map(|v| v * v).sum::<f64>().sqrt().powf(exponent))
                .sum::<f64>()
                / half as f64
        })
        .collect();
    let max_relative_change = moments
        .iter()
        .zip(&half_batch_moments)
        .filter(|(full, _)| **full > 0.0)
        .map(|(full, half)| (full - half).abs() / full)
        .fold(0.0, f64::max);
    let stable = max_relative_change < WELL_POSEDNESS_STABILITY;
    if !stable {
        log::warn!(
            "well-posedness moment changes by {:.1}% between K/2 and K = {k}; \
             the Omega' discretization is coarse",
            100.0 * max_relative_change
        );
    }
    Ok(RandomTimeKernel {
        base: base.clone(),
        batch: batch.clone(),
        effective_hurst: batch.hurst_prime() * base.hurst(),
        well_posedness: WellPosedness {
            exponent,
            moments,
            half_batch_moments,
            max_relative_change,
            stable,
        },
    })
}

impl RandomTimeKernel {
    pub fn base(&self) -> &KernelFamily {
        &self.base
    }
    pub fn batch(&self) -> &SubordinatorBatch {
        &self.batch
    }
    /// `H~ = H' H` (Theorem 2.3).
    pub fn effective_hurst(&self) -> f64 {
        self.effective_hurst
    }
    pub fn well_posedness(&self) -> &WellPosedness {
        &self.well_posedness
    }

    /// `int_E E'|sum_j theta_j f_{tau_{t_j}}|^alpha dm` with `E'` the batch
    /// average; `times` are grid indices.
    pub fn lalpha_mass(&self, times: &[usize], thetas: &[f64]) -> Result<f64> {
        let per_path = self.lalpha_masses(times, thetas)?;
        Ok(per_path.iter().sum::<f64>() / per_path.len() as f64)
    }

    /// `int_E |sum_j theta_j f_{tau_{t_j}(w'_i)}|^alpha dm` for every batch
    /// path `i`.
    pub fn lalpha_masses(&self, times: &[usize], thetas: &[f64]) -> Result<Vec<f64>> {
        if times.len() != thetas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times for {} frequencies",
                times.len(),
                thetas.len()
            )));
        }
        if let Some(&t) = times.iter().find(|&&t| t >= self.batch.grid().len()) {
            return Err(invalid("times", format!("grid index {t} is out of range")));
        }
        (0..self.batch.paths())
            .into_par_iter()
            .map(|i| {
                let pts: Vec<Vec<f64>> = times.iter().map(|&t| self.batch.point(i, t).to_vec()).collect();
                lalpha_combination(&self.base, thetas, &pts)
            })
            .collect()
    }
}

/// `E exp(i sum_j theta_j X_{t_j}) = exp(-int E'|sum_j theta_j f_{tau_{t_j}}|^alpha)`,
/// exact for the batch discretization of `Omega'`.
pub fn analytic_cf(rtk: &RandomTimeKernel, times: &[usize], thetas: &[f64]) -> Result<Complex64> {
    if thetas.iter().all(|&t| t == 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(Complex64::new((-rtk.lalpha_mass(times, thetas)?).exp(), 0.0))
}

/// Draws `replications` realizations of a compiled integral. Replication
/// `r` uses `stream.substream(r)` and consumes its noises in row order, so
/// the output does not depend on the number of worker threads.
pub fn simulate_compiled(
    compiled: &CompiledIntegral,
    alpha: f64,
    replications: usize,
    stream: &RandomStream,
) -> Vec<f64> {
    let m = compiled.grid_len();
    let rows = compiled.rows();
    let data = compiled.data();
    let out: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rs = stream.substream(r as u64);
            let mut x = vec![0.0; m];
            for c in 0..rows {
                let s = sample_symmetric_standard(alpha, &mut rs);
                let row = &data[c * m..(c + 1) * m];
                for (xt, w) in x.iter_mut().zip(row) {
                    *xt += w * s;
                }
            }
            x
        })
        .collect();
    out.into_iter().flatten().collect()
}

/// `R` independent replications of `X_t = int f_{tau_t(w')}(x) M(dx x dw')`
/// on the batch grid, discretized by `scheme`.
pub fn simulate_field(
    rtk: &RandomTimeKernel,
    grid: &TimeGrid,
    scheme: &IntegralScheme,
    replications: usize,
    stream: &RandomStream,
) -> Result<FieldSample> {
    if grid != rtk.batch.grid() {
        return Err(Error::Grid("the field grid must be the subordinator batch grid".into()));
    }
    if replications == 0 {
        return Err(invalid("R", "at least one replication is required"));
    }
    let compiled = compile(&rtk.base, &rtk.batch, scheme)?;
    let values = simulate_compiled(&compiled, rtk.base.alpha(), replications, stream);
    let meta = FieldMeta {
        generator: "simulate_field".into(),
        kernel: rtk.base.name().into(),
        alpha: rtk.base.alpha(),
        effective_hurst: rtk.effective_hurst,
        seed: None,
        stream: stream.fingerprint(),
        scheme_hash: Some(scheme.hash()),
        paths: Some(rtk.batch.paths()),
        cells: Some(compiled.rows()),
        constants: rtk.base.constants(),
    };
    FieldSample::new(grid.clone(), replications, values, meta)
}

/// Convenience: build the scheme from `spec` and simulate.
pub fn simulate_random_time_field(
    rtk: &RandomTimeKernel,
    spec: SchemeSpec,
    replications: usize,
    stream: &RandomStream,
) -> Result<FieldSample> {
    let scheme = build_scheme(&rtk.base, &rtk.batch, spec)?;
    simulate_field(rtk, rtk.batch.grid(), &scheme, replications, stream)
}

/// The base field itself, as subordination by the identity `tau_t = t`.
pub fn simulate_base_field(
    base: &KernelFamily,
    grid: &TimeGrid,
    spec: SchemeSpec,
    replications: usize,
    stream: &RandomStream,
) -> Result<FieldSample> {
    if grid.dim() != base.time_dim() {
        return Err(Error::DimensionMismatch(format!(
            "grid dimension {} differs from kernel time dimension {}",
            grid.dim(),
            base.time_dim()
        )));
    }
    let batch = SubordinatorBatch::identity(grid)?;
    let rtk = build_random_time_kernel(base, &batch)?;
    let mut sample = simulate_random_time_field(&rtk, spec, replications, stream)?;
    sample.meta_mut().generator = "simulate_base_field".into();
    Ok(sample)
}

/// `n^{-1/alpha} sum_{l <= n} X^(l)_{tau^(l)_t}` with independent copies of
/// the base field and of an `H'`-fractional Brownian subordinator.
///
/// The base field is simulated exactly at the points `tau^(l)_t` (its finite
/// dimensional law at those points, given the path), so no spatial grid or
/// interpolation is involved.
pub fn simulate_iterated_sum(
    base: &KernelFamily,
    hurst_prime: f64,
    grid: &TimeGrid,
    n: usize,
    replications: usize,
    spec: SchemeSpec,
    stream: &RandomStream,
) -> Result<FieldSample> {
    if n == 0 {
        return Err(invalid("n", "at least one summand is required"));
    }
    if replications == 0 {
        return Err(invalid("R", "at least one replication is required"));
    }
    let sampler = GaussianFieldSampler::auto(hurst_prime, base.time_dim(), grid)?;
    let alpha = base.alpha();
    let m = grid.len();
    let norm = (n as f64).powf(-1.0 / alpha);
    let d = base.time_dim();
    let rows: Vec<Result<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rs = stream.substream(r as u64);
            let mut acc = vec![0.0; m];
            for l in 0..n as u64 {
                let path = sampler.sample_path(&mut rs.labeled("tau", l));
                let batch = SubordinatorBatch::from_values(hurst_prime, d, grid.clone(), 1, path)?;
                let scheme = build_scheme(base, &batch, spec)?;
                let compiled = compile(base, &batch, &scheme)?;
                let mut noise = rs.labeled("noise", l);
                for c in 0..compiled.rows() {
                    let s = sample_symmetric_standard(alpha, &mut noise);
                    for (a, w) in acc.iter_mut().zip(compiled.row(c)) {
                        *a += w * s;
                    }
                }
            }
            for a in &mut acc {
                *a *= norm;
            }
            Ok(acc)
        })
        .collect();
    let mut values = Vec::with_capacity(replications * m);
    for row in rows {
        values.extend(row?);
    }
    let meta = FieldMeta {
        generator: format!("simulate_iterated_sum(n = {n})"),
        kernel: base.name().into(),
        alpha,
        effective_hurst: hurst_prime * base.hurst(),
        seed: None,
        stream: stream.fingerprint(),
        scheme_hash: None,
        paths: Some(n),
        cells: None,
        constants: base.constants(),
    };
    FieldSample::new(grid.clone(), replications, values, meta)
}

/// `c_alpha = 2 (Gamma((alpha + 1)/2) / sqrt(pi))^{1/alpha}`: the factor for
/// which `c_alpha A^{1/2} tau` has exactly the law of the random-slope field
/// `int_{[0,1] x Omega'} tau_t M(dx x dw')`, whose characteristic function is
/// `exp(-E'|sum_j theta_j tau_{t_j}|^alpha)`.
pub fn subgaussian_constant(alpha: f64) -> f64 {
    2.0 * (gamma((alpha + 1.0) / 2.0) / PI.sqrt()).powf(1.0 / alpha)
}

/// `c_alpha A^{1/2} tau_t` with `A` the positive `alpha/2`-stable multiplier
/// and `tau` an independent fractional Brownian field on `grid`.
pub fn subgaussian_path(
    alpha: f64,
    hurst_prime: f64,
    grid: &TimeGrid,
    replications: usize,
    stream: &RandomStream,
) -> Result<FieldSample> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
    }
    if replications == 0 {
        return Err(invalid("R", "at least one replication is required"));
    }
    let sampler = GaussianFieldSampler::auto(hurst_prime, 1, grid)?;
    let c = subgaussian_constant(alpha);
    let rows: Vec<Result<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rs = stream.substream(r as u64);
            let a = sample_subgaussian_multiplier(alpha, &mut rs.labeled("multiplier", 0))?;
            let scale = c * a.sqrt();
            let mut path = sampler.sample_path(&mut rs.labeled("tau", 0));
            for v in &mut path {
                *v *= scale;
            }
            Ok(path)
        })
        .collect();
    let mut values = Vec::with_capacity(replications * grid.len());
    for row in rows {
        values.extend(row?);
    }
    let mut constants = std::collections::BTreeMap::new();
    constants.insert("c_alpha".into(), c);
    let meta = FieldMeta {
        generator: "subgaussian_path".into(),
        kernel: "sub-gaussian".into(),
        alpha,
        effective_hurst: hurst_prime,
        seed: None,
        stream: stream.fingerprint(),
        scheme_hash: None,
        paths: None,
        cells: None,
        constants,
    };
    FieldSample::new(grid.clone(), replications, values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::*;
    use crate::subordinator::sample_fbm;

    fn ecf(xs: &[f64], theta: f64) -> Complex64 {
        xs.iter().map(|&x| Complex64::new(0.0, theta * x).exp()).sum::<Complex64>() / xs.len() as f64
    }

    #[test]
    fn effective_hurst_examples() {
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let batch = sample_fbm(0.5, &grid, 8, &RandomStream::new(1)).unwrap();
        let ind = build_random_time_kernel(&indicator_kernel(1.6).unwrap(), &batch).unwrap();
        assert!((ind.effective_hurst() - 0.5 / 1.6).abs() < 1e-15);
        let slope = build_random_time_kernel(&random_slope_kernel(1.5).unwrap(), &batch).unwrap();
        assert_eq!(slope.effective_hurst(), 0.5);
        let lfsm = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let l = build_random_time_kernel(&lfsm, &batch).unwrap();
        assert!((l.effective_hurst() - 0.35).abs() < 1e-15);
        let plane = build_random_time_kernel(&chentsov_kernel(1.5, 2).unwrap(), &batch);
        assert!(matches!(plane, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn origin_only_grid_gives_zeros() {
        let grid = TimeGrid::from_times(&[0.0]).unwrap();
        let batch = SubordinatorBatch::identity(&grid).unwrap();
        let rtk = build_random_time_kernel(&indicator_kernel(1.5).unwrap(), &batch).unwrap();
        let f = simulate_random_time_field(&rtk, SchemeSpec::default(), 10, &RandomStream::new(2)).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let g = subgaussian_path(1.5, 0.5, &grid, 10, &RandomStream::new(3)).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indicator_marginal_scale_is_mean_abs_tau() {
        // scale^alpha of X_1 is E'|tau_1| = sqrt(2/pi) for standard fBm
        let alpha = 1.5;
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let batch = sample_fbm(0.5, &grid, 20_000, &RandomStream::new(4)).unwrap();
        let rtk = build_random_time_kernel(&indicator_kernel(alpha).unwrap(), &batch).unwrap();
        let f = simulate_random_time_field(&rtk, SchemeSpec::default(), 10_000, &RandomStream::new(5)).unwrap();
        let x = f.column(1);
        let scale = (2.0 / PI).sqrt();
        for &th in &[0.5, 1.0, 2.0] {
            let want = (-scale * f64::powf(th, alpha)).exp();
            let got = ecf(&x, th);
            assert!((got - want).norm() < 3.0 * 2.0 / 100.0, "theta {th}: {got} vs {want}");
        }
        // the analytic CF of the discretized object reduces to the batch mean
        let wp = rtk.well_posedness();
        let cf = analytic_cf(&rtk, &[1], &[1.0]).unwrap();
        assert!((cf.re - (-wp.moments[1]).exp()).abs() < 1e-12);
    }

    #[test]
    fn analytic_cf_properties() {
        let grid = TimeGrid::uniform(0.0, 2.0, 5).unwrap();
        let batch = sample_fbm(0.6, &grid, 16, &RandomStream::new(6)).unwrap();
        let lfsm = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let rtk = build_random_time_kernel(&lfsm, &batch).unwrap();
        assert_eq!(analytic_cf(&rtk, &[1, 3], &[0.0, 0.0]).unwrap(), Complex64::new(1.0, 0.0));
        let a = analytic_cf(&rtk, &[1, 3], &[0.4, -1.1]).unwrap();
        let b = analytic_cf(&rtk, &[1, 3], &[-0.4, 1.1]).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!(a.norm() <= 1.0 && a.im == 0.0);
    }

    #[test]
    fn well_posedness_identity_for_indicator_and_lfsm() {
        let grid = TimeGrid::uniform(0.0, 2.0, 5).unwrap();
        let batch = sample_fbm(0.5, &grid, 64, &RandomStream::new(7)).unwrap();
        let ind = build_random_time_kernel(&indicator_kernel(1.5).unwrap(), &batch).unwrap();
        let lfsm = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let l = build_random_time_kernel(&lfsm, &batch).unwrap();
        for t in 1..5 {
            for rtk in [&ind, &l] {
                let q = rtk.lalpha_mass(&[t], &[1.0]).unwrap();
                let want = rtk.well_posedness().moments[t];
                assert!((q - want).abs() <= 1e-6 * want, "t {t}: {q} vs {want}");
            }
        }
    }

    #[test]
    fn replications_do_not_depend_on_thread_count() {
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let batch = sample_fbm(0.5, &grid, 8, &RandomStream::new(8)).unwrap();
        let rtk = build_random_time_kernel(&indicator_kernel(1.5).unwrap(), &batch).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    simulate_random_time_field(&rtk, SchemeSpec::default(), 200, &RandomStream::new(9))
                        .unwrap()
                })
        };
        assert_eq!(run(1).values(), run(3).values());
    }

    #[test]
    fn brownian_moving_average_has_unit_half_variance() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let k = fbf_moving_avg_kernel(0.5, 1).unwrap();
        let f = simulate_base_field(&k, &grid, SchemeSpec::default(), 10_000, &RandomStream::new(10)).unwrap();
        let x = f.column(1);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        // Gaussian random measure with Lebesgue control: Var X_1 = 2 ||f_1||^2
        assert!((var / 2.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn iterated_sum_is_one_at_zero_frequency_and_reduces_for_unit_lines() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let k = indicator_kernel(1.5).unwrap();
        let f = simulate_iterated_sum(&k, 1.0, &grid, 1, 2000, SchemeSpec::default(), &RandomStream::new(11)).unwrap();
        let x = f.column(1);
        assert_eq!(ecf(&x, 0.0), Complex64::new(1.0, 0.0));
        assert!(f.column(0).iter().all(|&v| v == 0.0));
        // n = 1, H' = 1: X_{t xi}; scale^alpha = E|xi| = sqrt(2/pi)
        let want = (-(2.0 / PI).sqrt()).exp();
        assert!((ecf(&x, 1.0) - want).norm() < 3.0 * 2.0 / 2000f64.sqrt());
    }

    #[test]
    fn subgaussian_constant_matches_gaussian_moment() {
        // c^alpha (sigma^2/2)^{alpha/2} = sigma^alpha E|N|^alpha
        let alpha = 1.5;
        let c = subgaussian_constant(alpha);
        let abs_moment = 0.860_039_987_324_519_494; // E|N|^1.5
        assert!((c.powf(alpha) * 0.5f64.powf(alpha / 2.0) - abs_moment).abs() < 1e-12);
    }

    #[test]
    fn subgaussian_kurtosis_decreases_toward_gaussian() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let mut kurt = Vec::new();
        for &alpha in &[1.2, 1.6, 1.9] {
            let f = subgaussian_path(alpha, 0.5, &grid, 40_000, &RandomStream::new(12)).unwrap();
            let raw = f.column(1);
            let mut abs: Vec<f64> = raw.iter().map(|v| v.abs()).collect();
            abs.sort_by(f64::total_cmp);
            // clip at the 99% quantile of |X| so the fourth moment exists
            let clip = abs[(abs.len() * 99) / 100];
            let x: Vec<f64> = raw.into_iter().map(|v| v.clamp(-clip, clip)).collect();
            let n = x.len() as f64;
            let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
            let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / n;
            kurt.push(m4 / (m2 * m2) - 3.0);
        }
        assert!(kurt[0] > kurt[1] && kurt[1] > kurt[2], "{kurt:?}");
    }

    #[test]
    fn subgaussian_paths_have_holder_increments() {
        let h = 0.6;
        let mut maxima = Vec::new();
        for &n in &[65usize, 257, 1025] {
            let grid = TimeGrid::uniform(0.0, 1.0, n).unwrap();
            let f = subgaussian_path(1.5, h, &grid, 200, &RandomStream::new(13)).unwrap();
            let dt = 1.0 / (n - 1) as f64;
            let mut med = Vec::new();
            for r in 0..200 {
                let row = f.replication(r);
                let max = row.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
                // normalize by the path's own overall amplitude (A^{1/2} factor)
                let amp = row.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
                med.push(max / amp / dt.powf(h));
            }
            med.sort_by(f64::total_cmp);
            maxima.push(med[100]);
        }
        // the normalized maxima stay bounded (log corrections only)
        assert!(maxima[2] / maxima[0] < 2.0, "{maxima:?}");
    }
}
