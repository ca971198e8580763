//! Gaussian subordinators: fractional Brownian motions and isotropic
//! fractional Brownian vector fields sampled on a fixed time grid.
//!
//! Uniform one-dimensional grids use circulant embedding of fractional
//! Gaussian noise (Davies-Harte), which is exact in distribution. Other grids
//! factor the dense covariance `(|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2` with a
//! Cholesky decomposition and a bounded jitter fallback.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::rng::RandomStream;

/// Largest number of non-origin grid points accepted by the dense method.
pub const MAX_DENSE_POINTS: usize = 4096;
/// Number of jitter doublings tried before giving up on a factorization.
pub const MAX_JITTER_DOUBLINGS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SamplingMethod {
    /// `H' = 1`: straight lines `t -> <t, xi>`.
    Line,
    /// Davies-Harte circulant embedding on a uniform line grid.
    Circulant,
    /// Dense covariance with Cholesky factorization.
    Dense,
}

enum Plan {
    Line,
    Circulant {
        sqrt_eigs: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        step_scale: f64,
    },
    Dense {
        factor: DMatrix<f64>,
        active: Vec<usize>,
    },
}

/// Precomputed sampler for one Gaussian field on one grid. The factorization
/// is shared read-only; each call draws one independent path.
pub struct GaussianFieldSampler {
    hurst: f64,
    d: usize,
    grid: TimeGrid,
    origin: usize,
    plan: Plan,
    jitter: f64,
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst <= 1.0) {
        return Err(invalid("hurst_prime", format!("{hurst} is outside (0, 1]")));
    }
    Ok(())
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fbf_covariance(t: &[f64], s: &[f64], hurst: f64) -> f64 {
    let diff: f64 = t.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    0.5 * (norm(t).powf(2.0 * hurst) + norm(s).powf(2.0 * hurst) - diff.powf(2.0 * hurst))
}

impl GaussianFieldSampler {
    /// Fast path for fractional Brownian motion on a uniform grid.
    pub fn fbm(hurst: f64, grid: &TimeGrid) -> Result<Self> {
        check_hurst(hurst)?;
        if grid.dim() != 1 {
            return Err(Error::DimensionMismatch("fBm needs a one-dimensional grid".into()));
        }
        let origin = grid.require_origin()?;
        if hurst == 1.0 {
            return Ok(Self::line(hurst, 1, grid, origin));
        }
        let (_, step) = grid.uniform_spacing().ok_or_else(|| {
            Error::Grid(
                "circulant embedding needs an increasing, equally spaced grid; \
                 use the dense covariance method (sample_fbf) for other grids"
                    .into(),
            )
        })?;
        let n = grid.len() - 1;
        let size = 2 * n;
        let gamma = |k: f64| {
            0.5 * ((k + 1.0).abs().powf(2.0 * hurst) - 2.0 * k.abs().powf(2.0 * hurst)
                + (k - 1.0).abs().powf(2.0 * hurst))
        };
        let mut row: Vec<Complex64> = (0..size)
            .map(|j| {
                let k = if j <= n { j } else { size - j };
                Complex64::new(gamma(k as f64), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let mut sqrt_eigs = Vec::with_capacity(size);
        for c in &row {
            if c.re < -1e-10 * max {
                return Err(Error::NotPositiveDefinite { max_jitter: 0.0 });
            }
            sqrt_eigs.push((c.re.max(0.0) / size as f64).sqrt());
        }
        Ok(Self {
            hurst,
            d: 1,
            grid: grid.clone(),
            origin,
            plan: Plan::Circulant {
                sqrt_eigs,
                fft,
                step_scale: step.powf(hurst),
            },
            jitter: 0.0,
        })
    }

    /// Isotropic fractional Brownian field with `d` independent coordinates,
    /// by dense covariance factorization.
    pub fn fbf(hurst: f64, d: usize, grid: &TimeGrid) -> Result<Self> {
        check_hurst(hurst)?;
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        let origin = grid.require_origin()?;
        if hurst == 1.0 {
            return Ok(Self::line(hurst, d, grid, origin));
        }
        let active: Vec<usize> = (0..grid.len()).filter(|&i| i != origin).collect();
        if active.len() > MAX_DENSE_POINTS {
            return Err(invalid(
                "grid",
                format!(
                    "{} points exceed the dense factorization bound {MAX_DENSE_POINTS}",
                    active.len()
                ),
            ));
        }
        let m = active.len();
        let cov = DMatrix::from_fn(m, m, |i, j| {
            fbf_covariance(grid.point(active[i]), grid.point(active[j]), hurst)
        });
        let trace: f64 = (0..m).map(|i| cov[(i, i)]).sum();
        let base = 1e-12 * trace / m.max(1) as f64;
        let mut jitter = 0.0;
        let mut factor = None;
        for attempt in 0..=(MAX_JITTER_DOUBLINGS + 1) {
            let mut c = cov.clone();
            if attempt > 0 {
                jitter = base * 2f64.powi(attempt as i32 - 1);
                for i in 0..m {
                    c[(i, i)] += jitter;
                }
            }
            if let Some(ch) = c.cholesky() {
                factor = Some(ch.unpack());
                break;
            }
        }
        let factor = factor.ok_or(Error::NotPositiveDefinite {
            max_jitter: base * 2f64.powi(MAX_JITTER_DOUBLINGS as i32),
        })?;
        if jitter > 0.0 {
            log::warn!("fBf covariance regularized with diagonal jitter {jitter:e}");
        }
        Ok(Self {
            hurst,
            d,
            grid: grid.clone(),
            origin,
            plan: Plan::Dense { factor, active },
            jitter,
        })
    }

    /// Circulant path when the grid allows it, dense otherwise.
    pub fn auto(hurst: f64, d: usize, grid: &TimeGrid) -> Result<Self> {
        if grid.dim() == 1 && d == 1 && grid.uniform_spacing().is_some() && grid.len() > 64 {
            Self::fbm(hurst, grid)
        } else {
            Self::fbf(hurst, d, grid)
        }
    }

    fn line(hurst: f64, d: usize, grid: &TimeGrid, origin: usize) -> Self {
        Self {
            hurst,
            d,
            grid: grid.clone(),
            origin,
            plan: Plan::Line,
            jitter: 0.0,
        }
    }

    pub fn method(&self) -> SamplingMethod {
        match self.plan {
            Plan::Line => SamplingMethod::Line,
            Plan::Circulant { .. } => SamplingMethod::Circulant,
            Plan::Dense { .. } => SamplingMethod::Dense,
        }
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Draw one path into `out`, laid out as `[grid point][coordinate]`.
    pub fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let m = self.grid.len();
        let d = self.d;
        debug_assert_eq!(out.len(), m * d);
        match &self.plan {
            Plan::Line => {
                let n = self.grid.dim();
                for c in 0..d {
                    let xi: Vec<f64> = (0..n).map(|_| stream.standard_normal()).collect();
                    for (i, p) in self.grid.points().enumerate() {
                        out[i * d + c] = p.iter().zip(&xi).map(|(a, b)| a * b).sum();
                    }
                }
            }
            Plan::Circulant {
                sqrt_eigs,
                fft,
                step_scale,
            } => {
                let size = sqrt_eigs.len();
                let mut buf: Vec<Complex64> = sqrt_eigs
                    .iter()
                    .map(|&s| Complex64::new(s * stream.standard_normal(), s * stream.standard_normal()))
                    .collect();
                fft.process(&mut buf);
                let mut acc = 0.0;
                out[0] = 0.0;
                for j in 1..m {
                    acc += buf[j - 1].re;
                    out[j] = acc * step_scale;
                }
                debug_assert!(m - 1 <= size);
                let anchor = out[self.origin];
                for v in out.iter_mut() {
                    *v -= anchor;
                }
                out[self.origin] = 0.0;
            }
            Plan::Dense { factor, active } => {
                let k = active.len();
                let mut z = vec![0.0; k];
                for c in 0..d {
                    for zi in z.iter_mut() {
                        *zi = stream.standard_normal();
                    }
                    out[self.origin * d + c] = 0.0;
                    for (row, &gi) in active.iter().enumerate() {
                        let mut s = 0.0;
                        for col in 0..=row {
                            s += factor[(row, col)] * z[col];
                        }
                        out[gi * d + c] = s;
                    }
                }
            }
        }
    }

    pub fn sample_path(&self, stream: &mut RandomStream) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len() * self.d];
        self.sample_into(stream, &mut out);
        out
    }

    /// `count` independent paths; path `i` uses `stream.substream(i)`.
    pub fn sample_batch(&self, count: usize, stream: &RandomStream) -> Result<SubordinatorBatch> {
        if count == 0 {
            return Err(invalid("K", "at least one path is required"));
        }
        let per = self.grid.len() * self.d;
        let chunks: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|i| self.sample_path(&mut stream.substream(i as u64)))
            .collect();
        let mut values = Vec::with_capacity(count * per);
        for c in chunks {
            values.extend(c);
        }
        SubordinatorBatch::from_values(self.hurst, self.d, self.grid.clone(), count, values)
    }
}

/// `K` equally weighted sampled paths of an `(N, d, H')`-field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SubordinatorBatch {
    hurst_prime: f64,
    d: usize,
    grid: TimeGrid,
    paths: usize,
    values: Vec<f64>,
}

impl SubordinatorBatch {
    pub fn from_values(
        hurst_prime: f64,
        d: usize,
        grid: TimeGrid,
        paths: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if paths == 0 {
            return Err(invalid("K", "at least one path is required"));
        }
        if values.len() != paths * grid.len() * d {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {paths} paths x {} points x {d} coordinates",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("paths", "non-finite path value"));
        }
        let origin = grid.require_origin()?;
        let batch = Self {
            hurst_prime,
            d,
            grid,
            paths,
            values,
        };
        for i in 0..paths {
            if batch.point(i, origin).iter().any(|&v| v != 0.0) {
                return Err(invalid("paths", format!("path {i} is not anchored at the origin")));
            }
        }
        Ok(batch)
    }

    /// Degenerate batch `tau_t = t` (one path, `d = N`): turns any ordinary
    /// field simulation into a special case of the random-time machinery.
    pub fn identity(grid: &TimeGrid) -> Result<Self> {
        let values = grid.points().flat_map(|p| p.iter().copied()).collect();
        Self::from_values(1.0, grid.dim(), grid.clone(), 1, values)
    }

    pub fn hurst_prime(&self) -> f64 {
        self.hurst_prime
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n_dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn paths(&self) -> usize {
        self.paths
    }
    pub fn weight(&self) -> f64 {
        1.0 / self.paths as f64
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of path `path` at grid point `t` (a `d`-vector).
    pub fn point(&self, path: usize, t: usize) -> &[f64] {
        let m = self.grid.len();
        let off = (path * m + t) * self.d;
        &self.values[off..off + self.d]
    }

    /// Batch average of `|tau_t|^p`.
    pub fn mean_norm_power(&self, t: usize, p: f64) -> f64 {
        (0..self.paths)
            .map(|i| norm(self.point(i, t)).powf(p))
            .sum::<f64>()
            / self.paths as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "path_id,grid_index,coord,value")?;
        for i in 0..self.paths {
            for t in 0..self.grid.len() {
                for (c, v) in self.point(i, t).iter().enumerate() {
                    writeln!(out, "{i},{t},{c},{v:.16e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CACHE_MAGIC)?;
        for v in [self.grid.dim(), self.d, self.paths, self.grid.len()] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        out.write_all(&self.hurst_prime.to_le_bytes())?;
        for p in self.grid.points() {
            for x in p {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(invalid("cache", "bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |input: &mut R| -> Result<u64> {
            input.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n = next_u64(&mut input)? as usize;
        let d = next_u64(&mut input)? as usize;
        let paths = next_u64(&mut input)? as usize;
        let m = next_u64(&mut input)? as usize;
        let hurst = f64::from_bits(next_u64(&mut input)?);
        let mut points = Vec::with_capacity(m);
        for _ in 0..m {
            let mut p = Vec::with_capacity(n);
            for _ in 0..n {
                p.push(f64::from_bits(next_u64(&mut input)?));
            }
            points.push(p);
        }
        let mut values = Vec::with_capacity(paths * m * d);
        for _ in 0..paths * m * d {
            values.push(f64::from_bits(next_u64(&mut input)?));
        }
        Self::from_values(hurst, d, TimeGrid::new(n, points)?, paths, values)
    }
}

const CACHE_MAGIC: &[u8; 8] = b"SFBATCH1";

/// Key of a cached batch: hash over everything that determines its content.
pub fn batch_cache_key(seed: u64, hurst: f64, d: usize, paths: usize, grid: &TimeGrid) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(hurst.to_le_bytes());
    h.update((d as u64).to_le_bytes());
    h.update((paths as u64).to_le_bytes());
    h.update((grid.dim() as u64).to_le_bytes());
    for p in grid.points() {
        for x in p {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..16])
}

/// Load the batch from `dir` if cached, otherwise sample and store it.
pub fn cached_batch(
    dir: &Path,
    seed: u64,
    hurst: f64,
    d: usize,
    paths: usize,
    grid: &TimeGrid,
) -> Result<SubordinatorBatch> {
    let key = batch_cache_key(seed, hurst, d, paths, grid);
    let file = dir.join(format!("{key}.bin"));
    if file.exists() {
        return SubordinatorBatch::read_binary(std::io::BufReader::new(std::fs::File::open(file)?));
    }
    let sampler = GaussianFieldSampler::auto(hurst, d, grid)?;
    let batch = sampler.sample_batch(paths, &RandomStream::new(seed))?;
    std::fs::create_dir_all(dir)?;
    batch.write_binary(std::io::BufWriter::new(std::fs::File::create(file)?))?;
    Ok(batch)
}

pub fn sample_fbm(
    hurst_prime: f64,
    grid: &TimeGrid,
    paths: usize,
    stream: &RandomStream,
) -> Result<SubordinatorBatch> {
    GaussianFieldSampler::fbm(hurst_prime, grid)?.sample_batch(paths, stream)
}

pub fn sample_fbf(
    hurst_prime: f64,
    d: usize,
    grid: &TimeGrid,
    paths: usize,
    stream: &RandomStream,
) -> Result<SubordinatorBatch> {
    GaussianFieldSampler::fbf(hurst_prime, d, grid)?.sample_batch(paths, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn brownian_increments_uncorrelated() {
        let grid = TimeGrid::uniform(0.0, 4.0, 129).unwrap();
        let b = sample_fbm(0.5, &grid, 2000, &RandomStream::new(1)).unwrap();
        let i1: Vec<f64> = (0..2000).map(|i| b.point(i, 32)[0] - b.point(i, 0)[0]).collect();
        let i2: Vec<f64> = (0..2000).map(|i| b.point(i, 96)[0] - b.point(i, 64)[0]).collect();
        assert!(corr(&i1, &i2).abs() < 0.05);
    }

    #[test]
    fn hurst_one_is_a_line() {
        let grid = TimeGrid::uniform(0.0, 2.0, 9).unwrap();
        let b = sample_fbm(1.0, &grid, 10, &RandomStream::new(2)).unwrap();
        for i in 0..10 {
            let slope = b.point(i, 4)[0];
            for t in 0..9 {
                let want = grid.point(t)[0] * slope;
                assert!((b.point(i, t)[0] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_matches_formula() {
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let k = 5000;
        let b = sample_fbm(0.7, &grid, k, &RandomStream::new(3)).unwrap();
        let ts = [0.5f64, 1.0];
        for (a, &ta) in ts.iter().enumerate() {
            for (c, &tc) in ts.iter().enumerate() {
                let s: f64 = (0..k)
                    .map(|i| b.point(i, a + 1)[0] * b.point(i, c + 1)[0])
                    .sum::<f64>()
                    / k as f64;
                let want = 0.5 * (ta.powf(1.4) + tc.powf(1.4) - (ta - tc).abs().powf(1.4));
                assert!((s - want).abs() < 0.05, "({ta},{tc}) {s} vs {want}");
            }
        }
    }

    #[test]
    fn circulant_and_dense_agree_in_covariance() {
        let grid = TimeGrid::uniform(-2.0, 2.0, 81).unwrap();
        let fast = sample_fbm(0.3, &grid, 4000, &RandomStream::new(4)).unwrap();
        let dense = sample_fbf(0.3, 1, &grid, 4000, &RandomStream::new(5)).unwrap();
        for &(a, c) in &[(0usize, 80usize), (10, 30), (60, 61)] {
            let cov = |b: &SubordinatorBatch| {
                (0..4000).map(|i| b.point(i, a)[0] * b.point(i, c)[0]).sum::<f64>() / 4000.0
            };
            let want = fbf_covariance(grid.point(a), grid.point(c), 0.3);
            assert!((cov(&fast) - want).abs() < 0.08, "fast {a},{c}");
            assert!((cov(&dense) - want).abs() < 0.08, "dense {a},{c}");
        }
    }

    #[test]
    fn non_uniform_grid_directs_to_dense_method() {
        let grid = TimeGrid::from_times(&[0.0, 0.1, 0.5, 2.0]).unwrap();
        let err = sample_fbm(0.5, &grid, 4, &RandomStream::new(1)).unwrap_err();
        assert!(err.to_string().contains("sample_fbf"));
        assert!(sample_fbf(0.5, 1, &grid, 4, &RandomStream::new(1)).is_ok());
    }

    #[test]
    fn origin_anchoring() {
        let grid = TimeGrid::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.3, -0.7], vec![2.0, 2.0]],
        )
        .unwrap();
        let b = sample_fbf(0.4, 3, &grid, 50, &RandomStream::new(6)).unwrap();
        for i in 0..50 {
            assert!(b.point(i, 1).iter().all(|&v| v == 0.0));
        }
        let uniform = TimeGrid::uniform(-1.0, 3.0, 101).unwrap();
        let f = sample_fbm(0.8, &uniform, 20, &RandomStream::new(7)).unwrap();
        for i in 0..20 {
            assert_eq!(f.point(i, 25)[0], 0.0);
        }
    }

    #[test]
    fn planar_brownian_field_variance_is_linear_in_norm() {
        let radii = [0.25, 0.5, 1.0, 2.0, 4.0];
        let mut pts = vec![vec![0.0, 0.0]];
        for &r in &radii {
            pts.push(vec![r * 0.6, r * 0.8]);
        }
        let grid = TimeGrid::new(2, pts).unwrap();
        let k = 5000;
        let b = sample_fbf(0.5, 1, &grid, k, &RandomStream::new(8)).unwrap();
        let xs: Vec<f64> = radii.iter().map(|r: &f64| r.ln()).collect();
        let ys: Vec<f64> = (1..=radii.len())
            .map(|t| ((0..k).map(|i| b.point(i, t)[0].powi(2)).sum::<f64>() / k as f64).ln())
            .collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn coordinates_are_independent() {
        let grid = TimeGrid::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.5]]).unwrap();
        let b = sample_fbf(0.6, 2, &grid, 5000, &RandomStream::new(9)).unwrap();
        let x: Vec<f64> = (0..5000).map(|i| b.point(i, 1)[0]).collect();
        let y: Vec<f64> = (0..5000).map(|i| b.point(i, 1)[1]).collect();
        assert!(corr(&x, &y).abs() < 0.05);
    }

    #[test]
    fn self_similar_variance() {
        let grid = TimeGrid::from_times(&[0.0, 0.5, 1.0, 2.0]).unwrap();
        let k = 5000;
        let b = sample_fbf(0.35, 1, &grid, k, &RandomStream::new(10)).unwrap();
        let var = |t: usize| (0..k).map(|i| b.point(i, t)[0].powi(2)).sum::<f64>() / k as f64;
        for &(t, c) in &[(1usize, 0.5f64), (3, 2.0)] {
            let ratio = var(t) / var(2);
            let want = c.powf(0.7);
            assert!((ratio / want - 1.0).abs() < 0.1, "c {c}: {ratio} vs {want}");
        }
    }

    #[test]
    fn isotropy_of_increments_under_rotation() {
        use crate::grid::RigidMotion;
        let base = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let rot = RigidMotion::rotation_2d(0.9);
        let rotated: Vec<Vec<f64>> = base.iter().map(|p| rot.apply(p)).collect();
        let k = 5000;
        let a = sample_fbf(0.6, 1, &TimeGrid::new(2, base).unwrap(), k, &RandomStream::new(11)).unwrap();
        let b = sample_fbf(0.6, 1, &TimeGrid::new(2, rotated).unwrap(), k, &RandomStream::new(12)).unwrap();
        let ecf = |batch: &SubordinatorBatch, th: [f64; 2]| {
            (0..k)
                .map(|i| {
                    let x = th[0] * batch.point(i, 1)[0] + th[1] * batch.point(i, 2)[0];
                    Complex64::new(0.0, x).exp()
                })
                .sum::<Complex64>()
                / k as f64
        };
        let mut sup = 0.0f64;
        for i in 0..=8 {
            for j in 0..=8 {
                let th = [-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64];
                sup = sup.max((ecf(&a, th) - ecf(&b, th)).norm());
            }
        }
        assert!(sup < 0.05, "sup {sup}");
    }

    #[test]
    fn binary_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let a = cached_batch(dir.path(), 3, 0.6, 1, 7, &grid).unwrap();
        let b = cached_batch(dir.path(), 3, 0.6, 1, 7, &grid).unwrap();
        assert_eq!(a, b);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn batch_csv_has_fixed_header() {
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let b = sample_fbm(0.5, &grid, 2, &RandomStream::new(1)).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path_id,grid_index,coord,value\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }
}
