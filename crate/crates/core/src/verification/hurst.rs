use std::io::Write;

use serde::Serialize;

use super::CurveData;
use crate::error::{invalid, Error, Result};

/// Least-squares fit of `log median|X_{c t}|` against `log c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub estimated_hurst: f64,
    pub stderr: f64,
    pub scales_used: Vec<f64>,
    pub medians: Vec<f64>,
    pub r_squared: f64,
}

impl CurveData for ScalingFit {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scale,median_abs")?;
        for (c, m) in self.scales_used.iter().zip(&self.medians) {
            writeln!(out, "{c:.16e},{m:.16e}")?;
        }
        Ok(())
    }
}

/// Sample median of `|x|`, a scale estimator that exists for every `alpha`.
pub fn median_abs(xs: &[f64]) -> f64 {
    let mut a: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        a[n / 2]
    } else {
        0.5 * (a[n / 2 - 1] + a[n / 2])
    }
}

/// Estimates the self-similarity exponent: `sampler(c, R)` returns `R`
/// draws of `X_{c t_0}` for a fixed reference point `t_0`, and the slope of
/// `log median|X_{c t_0}|` in `log c` estimates `H`
/// (`scale(X_{ct}) = c^H scale(X_t)` for SaS marginals).
pub fn estimate_hurst<F>(mut sampler: F, scales: &[f64], replications: usize) -> Result<ScalingFit>
where
    F: FnMut(f64, usize) -> Result<Vec<f64>>,
{
    let mut medians = Vec::with_capacity(scales.len());
    for &c in scales {
        let xs = sampler(c, replications)?;
        if xs.len() != replications {
            return Err(Error::DimensionMismatch(format!(
                "sampler returned {} draws, expected {replications}",
                xs.len()
            )));
        }
        medians.push(median_abs(&xs));
    }
    fit_scaling(scales, &medians)
}

/// The regression behind [`estimate_hurst`], from precomputed medians.
pub fn fit_scaling(scales: &[f64], medians: &[f64]) -> Result<ScalingFit> {
    if scales.len() < 3 {
        return Err(invalid("scales", format!("{} scales; at least 3 are required", scales.len())));
    }
    if scales.len() != medians.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scales for {} medians",
            scales.len(),
            medians.len()
        )));
    }
    if let Some(c) = scales.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(invalid("scales", format!("scale {c} is not positive")));
    }
    if let Some((c, _)) = scales.iter().zip(medians).find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::Degenerate(format!(
            "median |X| at scale {c} is zero or not finite"
        )));
    }
    let x: Vec<f64> = scales.iter().map(|c| c.ln()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("scales", "all scales coincide"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ScalingFit {
        estimated_hurst: slope,
        stderr,
        scales_used: scales.to_vec(),
        medians: medians.to_vec(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::rng::RandomStream;
    use crate::subordinator::GaussianFieldSampler;

    #[test]
    fn exact_power_law_is_recovered() {
        let scales = [0.5, 1.0, 2.0, 4.0];
        let medians: Vec<f64> = scales.iter().map(|c: &f64| 1.7 * c.powf(0.35)).collect();
        let fit = fit_scaling(&scales, &medians).unwrap();
        assert!((fit.estimated_hurst - 0.35).abs() < 1e-12);
        assert!(fit.stderr < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_samples_are_degenerate() {
        let err = estimate_hurst(|_, r| Ok(vec![0.0; r]), &[1.0, 2.0, 3.0], 10).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(fit_scaling(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0, -4.0]), 2.5);
    }

    #[test]
    fn fbm_paths_recover_their_hurst_index() {
        // alpha = 2 sanity check at R = 5000
        let h = 0.3;
        let scales = [0.25, 0.5, 1.0, 2.0, 4.0];
        let grid = TimeGrid::from_times(&[0.0, 0.25, 0.5, 1.0, 2.0, 4.0]).unwrap();
        let sampler = GaussianFieldSampler::fbf(h, 1, &grid).unwrap();
        let stream = RandomStream::new(3);
        let paths: Vec<Vec<f64>> = (0..5000).map(|r| sampler.sample_path(&mut stream.substream(r))).collect();
        let fit = estimate_hurst(
            |c, r| {
                let t = grid.index_of(&[c]).unwrap();
                Ok(paths[..r].iter().map(|p| p[t]).collect())
            },
            &scales,
            5000,
        )
        .unwrap();
        assert!((fit.estimated_hurst - h).abs() < 0.05, "{fit:?}");
    }
}
