use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::FieldSample;

/// Smallest sample size accepted for an ECF.
pub const MIN_ECF_SAMPLES: usize = 100;

/// Empirical characteristic function `(1/R) sum_r exp(i <theta, X_r>)` on a
/// list of frequency vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ecf {
    pub thetas: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    pub n_samples: usize,
}

impl Ecf {
    /// `2/sqrt(R)`: approximate 95% half-width, since `1/sqrt(R)` bounds the
    /// standard error of every value.
    pub fn band_half_width(&self) -> f64 {
        2.0 / (self.n_samples as f64).sqrt()
    }

    /// `|ecf(theta_p) - other_p|` per probe.
    pub fn distances(&self, other: &[Complex64]) -> Vec<f64> {
        self.values.iter().zip(other).map(|(a, b)| (a - b).norm()).collect()
    }
}

/// ECF of the joint law of `(X_{t_1}, ..., X_{t_k})` in `sample`; `times` are
/// grid indices and every theta has length `k`.
pub fn empirical_cf(sample: &FieldSample, times: &[usize], thetas: &[Vec<f64>]) -> Result<Ecf> {
    if let Some(&t) = times.iter().find(|&&t| t >= sample.grid().len()) {
        return Err(invalid("times", format!("grid index {t} is out of range")));
    }
    let k = times.len();
    let mut data = Vec::with_capacity(sample.replications() * k);
    for r in 0..sample.replications() {
        let row = sample.replication(r);
        data.extend(times.iter().map(|&t| row[t]));
    }
    empirical_cf_vectors(&data, k, thetas)
}

/// ECF of the rows of a row-major `R x k` matrix.
///
/// The phase `<theta, x>` of `-theta` is the exact negation of that of
/// `theta`, and the terms are summed in a fixed order, so
/// `ECF(-theta) = conj(ECF(theta))` holds exactly.
pub fn empirical_cf_vectors(data: &[f64], k: usize, thetas: &[Vec<f64>]) -> Result<Ecf> {
    if k == 0 || data.len() % k != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not form rows of length {k}",
            data.len()
        )));
    }
    let n = data.len() / k;
    if n < MIN_ECF_SAMPLES {
        return Err(invalid(
            "R",
            format!("{n} samples; the ECF needs at least {MIN_ECF_SAMPLES}"),
        ));
    }
    if let Some(th) = thetas.iter().find(|th| th.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "frequency vector of length {} for {k} coordinates",
            th.len()
        )));
    }
    let values = thetas
        .par_iter()
        .map(|th| {
            if th.iter().all(|&v| v == 0.0) {
                return Complex64::new(1.0, 0.0);
            }
            let mut re = 0.0;
            let mut im = 0.0;
            for row in data.chunks(k) {
                let phase: f64 = row.iter().zip(th).map(|(x, t)| t * x).sum();
                let a = phase.abs();
                re += a.cos();
                im += a.sin().copysign(phase);
            }
            Complex64::new(re / n as f64, im / n as f64)
        })
        .collect();
    Ok(Ecf {
        thetas: thetas.to_vec(),
        values,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::stable::{sample_stable, stable_cf, StableParams};

    #[test]
    fn zero_frequency_and_conjugate_symmetry_are_exact() {
        let mut s = RandomStream::new(1);
        let data: Vec<f64> = (0..2000).map(|_| s.standard_normal() * 3.0 + 0.7).collect();
        let thetas: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.3, -1.2], vec![-0.3, 1.2]];
        let e = empirical_cf_vectors(&data, 2, &thetas).unwrap();
        assert_eq!(e.values[0], Complex64::new(1.0, 0.0));
        assert_eq!(e.values[2], e.values[1].conj());
        assert!(e.values.iter().all(|v| v.norm() <= 1.0));
    }

    #[test]
    fn matches_stable_cf_within_bands() {
        let p = StableParams::new(1.3, 0.0, 0.8, 0.0).unwrap();
        let mut s = RandomStream::new(2);
        let data: Vec<f64> = (0..100_000).map(|_| sample_stable(&p, &mut s)).collect();
        let thetas: Vec<Vec<f64>> = [0.25, 0.5, 1.0, 2.0, -1.5].iter().map(|&t| vec![t]).collect();
        let e = empirical_cf_vectors(&data, 1, &thetas).unwrap();
        for (th, v) in thetas.iter().zip(&e.values) {
            let want = stable_cf(&p, th[0]);
            assert!((v - want).norm() < e.band_half_width(), "{th:?}: {v} vs {want}");
        }
    }

    #[test]
    fn rejects_small_samples_and_bad_shapes() {
        assert!(empirical_cf_vectors(&[0.0; 50], 1, &[vec![1.0]]).is_err());
        assert!(empirical_cf_vectors(&[0.0; 300], 2, &[vec![1.0]]).is_err());
        assert!(empirical_cf_vectors(&[0.0; 301], 2, &[vec![1.0, 1.0]]).is_err());
    }
}
