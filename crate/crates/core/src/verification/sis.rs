use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{bonferroni_z, empirical_cf_vectors, CurveData};
use crate::error::{invalid, Error, Result};
use crate::field::FieldSample;
use crate::grid::{RigidMotion, TimeGrid};

/// Comparison of the increment laws `(X_{g(t_j)} - X_{g(0)})_j` and
/// `(X_{t_j} - X_0)_j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SisReport {
    pub motion: RigidMotion,
    pub times: Vec<Vec<f64>>,
    pub thetas: Vec<Vec<f64>>,
    pub original: Vec<Complex64>,
    pub moved: Vec<Complex64>,
    pub distances: Vec<f64>,
    pub sup_distance: f64,
    /// Bonferroni 3-sigma band for the difference of the two ECFs.
    pub threshold: f64,
    pub z: f64,
    pub replications: (usize, usize),
    pub pass: bool,
}

impl CurveData for SisReport {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "probe,original_re,original_im,moved_re,moved_im,distance")?;
        for (p, ((a, b), d)) in self.original.iter().zip(&self.moved).zip(&self.distances).enumerate() {
            writeln!(out, "{p},{:.16e},{:.16e},{:.16e},{:.16e},{d:.16e}", a.re, a.im, b.re, b.im)?;
        }
        Ok(())
    }
}

fn grid_with_origin(dim: usize, points: &[Vec<f64>]) -> Result<TimeGrid> {
    TimeGrid::new(dim, vec![vec![0.0; dim]])?.with_points(points)
}

fn increments(sample: &FieldSample, base: usize, points: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sample.replications() * points.len());
    for r in 0..sample.replications() {
        let row = sample.replication(r);
        out.extend(points.iter().map(|&t| row[t] - row[base]));
    }
    out
}

/// Tests strong stationarity of increments under `motion`.
///
/// `sampler(grid, R)` must return `R` replications of the field on `grid`
/// (which always contains the origin). The increment ECFs on the original
/// and the moved points are compared on every nonzero `theta`; the test
/// passes iff the largest distance is inside the Bonferroni 3-sigma band.
/// A sampler with a fixed seed gives distance exactly 0 for the identity.
pub fn test_sis<F>(
    mut sampler: F,
    motion: &RigidMotion,
    times: &[Vec<f64>],
    thetas: &[Vec<f64>],
    replications: usize,
) -> Result<SisReport>
where
    F: FnMut(&TimeGrid, usize) -> Result<FieldSample>,
{
    let dim = motion.dim();
    if times.is_empty() {
        return Err(invalid("times", "at least one time point is required"));
    }
    if let Some(t) = times.iter().find(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "time point {t:?} for a motion of R^{dim}"
        )));
    }
    if !motion.is_isometry(1e-9) {
        return Err(invalid("motion", "the linear part is not orthogonal"));
    }
    let origin = vec![0.0; dim];
    let moved_origin = motion.apply(&origin);
    let moved: Vec<Vec<f64>> = times.iter().map(|t| motion.apply(t)).collect();

    let grid_a = grid_with_origin(dim, times)?;
    let mut b_points = vec![moved_origin.clone()];
    b_points.extend(moved.iter().cloned());
    let grid_b = grid_with_origin(dim, &b_points)?;

    let lookup = |g: &TimeGrid, p: &[f64]| g.index_of(p).expect("point inserted into the grid");
    let idx_a: Vec<usize> = times.iter().map(|t| lookup(&grid_a, t)).collect();
    let idx_b: Vec<usize> = moved.iter().map(|t| lookup(&grid_b, t)).collect();

    let sample_a = sampler(&grid_a, replications)?;
    let sample_b = sampler(&grid_b, replications)?;
    for (s, g) in [(&sample_a, &grid_a), (&sample_b, &grid_b)] {
        if s.grid() != g {
            return Err(Error::Grid("the sampler returned a field on a different grid".into()));
        }
    }
    let inc_a = increments(&sample_a, lookup(&grid_a, &origin), &idx_a);
    let inc_b = increments(&sample_b, lookup(&grid_b, &moved_origin), &idx_b);
    let k = times.len();
    let ecf_a = empirical_cf_vectors(&inc_a, k, thetas)?;
    let ecf_b = empirical_cf_vectors(&inc_b, k, thetas)?;
    let distances = ecf_a.distances(&ecf_b.values);
    let probes = thetas.iter().filter(|th| th.iter().any(|&v| v != 0.0)).count();
    let z = bonferroni_z(probes);
    let threshold = z * (1.0 / ecf_a.n_samples as f64 + 1.0 / ecf_b.n_samples as f64).sqrt();
    let sup_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(SisReport {
        motion: motion.clone(),
        times: times.to_vec(),
        thetas: thetas.to_vec(),
        original: ecf_a.values,
        moved: ecf_b.values,
        distances,
        sup_distance,
        threshold,
        z,
        replications: (ecf_a.n_samples, ecf_b.n_samples),
        pass: sup_distance <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldMeta;
    use crate::kernels::{chentsov_kernel, indicator_kernel};
    use crate::rng::RandomStream;
    use crate::scheme::SchemeSpec;
    use crate::subordination::{build_random_time_kernel, simulate_random_time_field};
    use crate::subordinator::sample_fbf;

    fn indicator_sampler(seed: u64) -> impl FnMut(&TimeGrid, usize) -> Result<FieldSample> {
        move |grid, r| {
            let stream = RandomStream::new(seed);
            let batch = sample_fbf(0.5, 1, grid, 512, &stream.labeled("batch", 0))?;
            let rtk = build_random_time_kernel(&indicator_kernel(1.5)?, &batch)?;
            simulate_random_time_field(&rtk, SchemeSpec::default(), r, &stream.labeled("field", 0))
        }
    }

    fn thetas_2() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.7], vec![0.6, -0.4], vec![1.0, 0.5]]
    }

    #[test]
    fn identity_motion_gives_zero_distance() {
        let times = vec![vec![0.5], vec![1.0]];
        let rep = test_sis(indicator_sampler(1), &RigidMotion::identity(1), &times, &thetas_2(), 500).unwrap();
        assert_eq!(rep.sup_distance, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn translation_of_indicator_field_passes() {
        let times = vec![vec![0.5], vec![1.0]];
        let rep = test_sis(
            indicator_sampler(2),
            &RigidMotion::translation(&[5.0]),
            &times,
            &thetas_2(),
            10_000,
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn rotation_of_chentsov_plane_field_passes() {
        let sampler = |grid: &TimeGrid, r: usize| {
            let stream = RandomStream::new(3);
            let batch = sample_fbf(0.5, 2, grid, 512, &stream.labeled("batch", 0))?;
            let rtk = build_random_time_kernel(&chentsov_kernel(1.5, 2)?, &batch)?;
            simulate_random_time_field(&rtk, SchemeSpec::default(), r, &stream.labeled("field", 0))
        };
        let times = vec![vec![1.0, 0.0], vec![0.5, 0.8]];
        let rep = test_sis(
            sampler,
            &RigidMotion::rotation_2d(std::f64::consts::PI / 3.0),
            &times,
            &thetas_2(),
            10_000,
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn detects_a_non_stationary_field() {
        // X_t = t^2 Z has increments whose law changes under translation
        let sampler = |grid: &TimeGrid, r: usize| {
            let mut s = RandomStream::new(4);
            let mut values = Vec::new();
            for _ in 0..r {
                let z = s.standard_normal();
                values.extend(grid.points().map(|p| p[0] * p[0] * z));
            }
            FieldSample::new(grid.clone(), r, values, FieldMeta::default())
        };
        let rep = test_sis(sampler, &RigidMotion::translation(&[1.0]), &[vec![1.0]], &[vec![0.5]], 2000).unwrap();
        assert!(!rep.pass);
    }
}
