//! Discretization of the stable integral `int f_{tau_t(w')}(x) M(dx x dw')`
//! into independent cells.
//!
//! Every sampled subordinator path owns its own partition of the truncated
//! space `E`; each (path, cell) pair carries an independent stable noise, so
//! the field value is `sum_{i, j} f_{tau_t^(i)}(x_ij) (m_ij / K)^{1/alpha} S_ij`.
//!
//! * Piecewise-constant kernels (indicator, Chentsov in `d <= 2`, linear FSM
//!   with exponent 0) get partitions at the exact breakpoints of the sampled
//!   path, so the discretization is exact in distribution for the batch.
//! * The random-slope kernel is constant on `E`; one cell per path is exact.
//! * Continuous kernels (linear FSM, moving average) get graded cells that
//!   refine geometrically toward every singular point and extend into the
//!   tails until the discarded `L^alpha` mass is below [`TAIL_MASS_TOLERANCE`].
//!
//! Cells whose coefficient vectors over the grid coincide are merged (stable
//! additivity: `a^{1/alpha} S + b^{1/alpha} S' = (a + b)^{1/alpha} S''`), and
//! all-zero cells are dropped, when the integral is compiled.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::kernels::{planar_kink_angles, KernelFamily, KernelKind};
use crate::subordinator::SubordinatorBatch;

/// Bound on the `L^alpha` mass discarded beyond the truncation, relative to
/// `||f_{tau_t}||_alpha^alpha`.
pub const TAIL_MASS_TOLERANCE: f64 = 1e-8;
/// Relative size of the innermost graded cell next to a singular point.
pub const GRADING_DEPTH: f64 = 1e-9;
/// Default per-path cell budget for continuous kernels.
pub const DEFAULT_CELLS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    /// Cell budget per sampled path (continuous kernels and `d >= 3`
    /// Chentsov); piecewise-constant kernels use exactly as many cells as
    /// their breakpoints require.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_tail")]
    pub tail_mass_tolerance: f64,
}

fn default_cells() -> usize {
    DEFAULT_CELLS
}
fn default_tail() -> f64 {
    TAIL_MASS_TOLERANCE
}

impl Default for SchemeSpec {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            tail_mass_tolerance: TAIL_MASS_TOLERANCE,
        }
    }
}

/// One cell of `E`: a representative point and its `m`-measure. For kernels
/// on the real line, `local = (anchor, offset)` is the representative point
/// written relative to its nearest singular point, which keeps kernel values
/// accurate where the cell is much smaller than the spacing of floats near
/// the anchor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeCell {
    pub point: Vec<f64>,
    pub local: Option<(f64, f64)>,
    pub measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPartition {
    pub cells: Vec<SchemeCell>,
    /// `m` of the truncated region covered by this partition.
    pub covered_measure: f64,
    /// One-dimensional coverage interval, or `[0, radius]` on sphere x ray.
    pub support: (f64, f64),
    /// Sorted singular points the partition is aligned with (1-D kernels).
    pub breakpoints: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralScheme {
    partitions: Vec<PathPartition>,
    truncation_radius: f64,
    exact: bool,
    spec: SchemeSpec,
}

impl IntegralScheme {
    pub fn partitions(&self) -> &[PathPartition] {
        &self.partitions
    }
    pub fn paths(&self) -> usize {
        self.partitions.len()
    }
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }
    /// Whether the discretization is exact in distribution for the batch.
    pub fn is_exact(&self) -> bool {
        self.exact
    }
    pub fn spec(&self) -> SchemeSpec {
        self.spec
    }
    pub fn total_cells(&self) -> usize {
        self.partitions.iter().map(|p| p.cells.len()).sum()
    }

    /// Content hash for provenance.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.partitions {
            for c in &p.cells {
                for x in &c.point {
                    h.update(x.to_le_bytes());
                }
                h.update(c.measure.to_le_bytes());
            }
            h.update([0xff]);
        }
        hex::encode(&h.finalize()[..16])
    }
}

fn batch_values_1d(batch: &SubordinatorBatch, path: usize) -> Vec<f64> {
    (0..batch.grid().len()).map(|t| batch.point(path, t)[0]).collect()
}

fn sorted_breakpoints(values: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = values.to_vec();
    b.push(0.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Partition of each path for `kernel` driven by `batch`.
pub fn build_scheme(
    kernel: &KernelFamily,
    batch: &SubordinatorBatch,
    spec: SchemeSpec,
) -> Result<IntegralScheme> {
    if kernel.time_dim() != batch.d() {
        return Err(Error::DimensionMismatch(format!(
            "kernel time dimension {} differs from subordinator range dimension {}",
            kernel.time_dim(),
            batch.d()
        )));
    }
    if !(spec.tail_mass_tolerance > 0.0 && spec.tail_mass_tolerance < 1.0) {
        return Err(invalid("tail_mass_tolerance", "must lie in (0, 1)"));
    }
    let mut partitions = Vec::with_capacity(batch.paths());
    let mut exact = true;
    for i in 0..batch.paths() {
        let part = match *kernel.kind() {
            KernelKind::Indicator => line_gaps(&batch_values_1d(batch, i)),
            KernelKind::LinearFsm { exponent, .. } if exponent == 0.0 => {
                line_gaps(&batch_values_1d(batch, i))
            }
            KernelKind::RandomSlope => PathPartition {
                cells: vec![SchemeCell {
                    point: vec![0.5],
                    local: None,
                    measure: 1.0,
                }],
                covered_measure: 1.0,
                support: (0.0, 1.0),
                breakpoints: vec![],
            },
            KernelKind::Chentsov { d: 1, constant } => chentsov_line_cells(&batch_values_1d(batch, i), constant),
            KernelKind::Chentsov { d: 2, constant } => chentsov_plane_cells(batch, i, constant),
            KernelKind::Chentsov { d, constant } => {
                exact = false;
                chentsov_sphere_cells(batch, i, d, constant, spec.cells)?
            }
            KernelKind::LinearFsm { .. } | KernelKind::MovingAverage { d: 1, .. } => {
                exact = false;
                graded_line_cells(kernel, &batch_values_1d(batch, i), spec)?
            }
            KernelKind::MovingAverage { d, .. } => {
                return Err(Error::Unsupported(format!(
                    "cell discretization of the moving-average kernel is implemented for d = 1, got d = {d}"
                )))
            }
        };
        partitions.push(part);
    }
    let truncation_radius = partitions
        .iter()
        .map(|p| p.support.0.abs().max(p.support.1.abs()))
        .fold(0.0, f64::max);
    Ok(IntegralScheme {
        partitions,
        truncation_radius,
        exact,
        spec,
    })
}

/// Cells between consecutive breakpoints `{0} ∪ {tau_t}` of a 1-D path.
fn line_gaps(values: &[f64]) -> PathPartition {
    let bps = sorted_breakpoints(values);
    let cells: Vec<SchemeCell> = bps
        .windows(2)
        .map(|w| SchemeCell {
            point: vec![0.5 * (w[0] + w[1])],
            local: None,
            measure: w[1] - w[0],
        })
        .collect();
    let lo = bps[0];
    let hi = *bps.last().unwrap();
    PathPartition {
        cells,
        covered_measure: hi - lo,
        support: (lo, hi),
        breakpoints: bps,
    }
}

fn ray_cells(heights: &[f64], direction: &[f64], measure_scale: f64, out: &mut Vec<SchemeCell>) -> f64 {
    let mut pos: Vec<f64> = heights.iter().copied().filter(|&u| u > 0.0).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut lo = 0.0;
    for &u in &pos {
        let mut point = direction.to_vec();
        point.push(0.5 * (lo + u));
        out.push(SchemeCell {
            point,
            local: None,
            measure: measure_scale * (u - lo),
        });
        lo = u;
    }
    measure_scale * lo
}

fn chentsov_line_cells(values: &[f64], constant: f64) -> PathPartition {
    let mut cells = Vec::new();
    let plus = ray_cells(values, &[1.0], 1.0 / constant, &mut cells);
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    let minus = ray_cells(&neg, &[-1.0], 1.0 / constant, &mut cells);
    let radius = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    PathPartition {
        cells,
        covered_measure: plus + minus,
        support: (0.0, radius),
        breakpoints: sorted_breakpoints(values),
    }
}

/// Exact sector decomposition of the region under `max_t phi . tau_t` on
/// `S^1 x R_+`: inside each sector between kink angles the ordering of the
/// heights `u_t(psi) = phi(psi) . tau_t` is fixed, so the region between two
/// consecutive heights has a constant coefficient vector and a closed-form
/// measure.
fn chentsov_plane_cells(batch: &SubordinatorBatch, path: usize, constant: f64) -> PathPartition {
    let times: Vec<Vec<f64>> = (0..batch.grid().len()).map(|t| batch.point(path, t).to_vec()).collect();
    let angles = planar_kink_angles(&times);
    let mut cells = Vec::new();
    let mut covered = 0.0;
    for w in angles.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let mid = 0.5 * (a + b);
        let (sm, cm) = mid.sin_cos();
        let integral = |t: &[f64]| t[0] * (b.sin() - a.sin()) + t[1] * (a.cos() - b.cos());
        let mut order: Vec<(f64, usize)> = times
            .iter()
            .enumerate()
            .map(|(k, t)| (cm * t[0] + sm * t[1], k))
            .filter(|&(u, _)| u > 0.0)
            .collect();
        order.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut lo_height = 0.0;
        let mut lo_integral = 0.0;
        for (u, k) in order {
            if u <= lo_height {
                continue;
            }
            let hi_integral = integral(&times[k]);
            let measure = (hi_integral - lo_integral) / constant;
            if measure > 0.0 {
                cells.push(SchemeCell {
                    point: vec![cm, sm, 0.5 * (lo_height + u)],
                    local: None,
                    measure,
                });
            }
            lo_height = u;
            lo_integral = hi_integral;
        }
        covered += lo_integral / constant;
    }
    let radius = times.iter().map(|t| t[0].hypot(t[1])).fold(0.0, f64::max);
    PathPartition {
        cells,
        covered_measure: covered,
        support: (0.0, radius),
        breakpoints: vec![],
    }
}

/// Equal-area angular cells on `S^{d-1}` (`d = 3`), exact breakpoints in `r`
/// at the cell's central direction.
fn chentsov_sphere_cells(
    batch: &SubordinatorBatch,
    path: usize,
    d: usize,
    constant: f64,
    budget: usize,
) -> Result<PathPartition> {
    if d != 3 {
        return Err(Error::Unsupported(format!(
            "Chentsov cell discretization is implemented for d <= 3, got d = {d}"
        )));
    }
    let m = batch.grid().len().max(1);
    let angular = (budget / m).max(32);
    let nz = ((angular as f64 / 2.0).sqrt().ceil() as usize).max(4);
    let nphi = 2 * nz;
    let area = 4.0 * PI / (nz * nphi) as f64;
    let times: Vec<&[f64]> = (0..batch.grid().len()).map(|t| batch.point(path, t)).collect();
    let mut cells = Vec::new();
    let mut covered = 0.0;
    for iz in 0..nz {
        let z = -1.0 + 2.0 * (iz as f64 + 0.5) / nz as f64;
        let rho = (1.0 - z * z).sqrt();
        for ip in 0..nphi {
            let phi = 2.0 * PI * (ip as f64 + 0.5) / nphi as f64;
            let dir = [rho * phi.cos(), rho * phi.sin(), z];
            let heights: Vec<f64> = times
                .iter()
                .map(|t| dir.iter().zip(t.iter()).map(|(a, b)| a * b).sum())
                .collect();
            covered += ray_cells(&heights, &dir, area / constant, &mut cells);
        }
    }
    let radius = times
        .iter()
        .map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(PathPartition {
        cells,
        covered_measure: covered,
        support: (0.0, radius),
        breakpoints: vec![],
    })
}

/// Coefficient and exponent of the envelope `|f_s(x)| <= k |s| u^{-g}` at
/// distance `u` beyond all singular points.
fn tail_envelope(kernel: &KernelFamily) -> (f64, f64) {
    match *kernel.kind() {
        KernelKind::LinearFsm { a, b, exponent, .. } => (a.max(b) * exponent.abs(), 1.0 - exponent),
        KernelKind::MovingAverage { exponent, scale, .. } => {
            let k = if exponent == 0.0 { 1.0 } else { exponent.abs() };
            (scale * k, 1.0 - exponent)
        }
        _ => (0.0, 1.0),
    }
}

/// Truncation distance `D` beyond the extreme breakpoints such that the
/// discarded mass of every `f_{tau_t}` is below `tol ||f_{tau_t}||^alpha`.
pub fn tail_truncation_distance(kernel: &KernelFamily, values: &[f64], tol: f64) -> f64 {
    let (k, g) = tail_envelope(kernel);
    let alpha = kernel.alpha();
    let decay = g * alpha - 1.0;
    let ha = kernel.hurst() * alpha;
    let mut dist: f64 = 0.0;
    for &s in values {
        if s == 0.0 {
            continue;
        }
        // int_D^inf (k |s|)^alpha u^{-g alpha} du = (k|s|)^alpha D^{-decay} / decay
        let need = (k * s.abs()).powf(alpha) / (decay * tol * s.abs().powf(ha));
        dist = dist.max(need.powf(1.0 / decay));
    }
    dist
}

/// Geometric cell boundaries on `[0, length]` refining toward 0 with `n`
/// cells, the first of size `length * depth` (or refined to `first`).
fn graded_offsets(length: f64, first: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    if n == 1 {
        out.push(length);
        return out;
    }
    let ratio = (length / first).powf(1.0 / (n - 1) as f64);
    let mut edge = first;
    for _ in 0..(n - 1) {
        out.push(edge);
        edge *= ratio;
    }
    out.push(length);
    out
}

fn graded_line_cells(kernel: &KernelFamily, values: &[f64], spec: SchemeSpec) -> Result<PathPartition> {
    let bps = sorted_breakpoints(values);
    let lo = bps[0];
    let hi = *bps.last().unwrap();
    let scale = (hi - lo).max(lo.abs()).max(hi.abs());
    if scale == 0.0 {
        // every tau_t = 0: the field vanishes on this path
        return Ok(PathPartition {
            cells: vec![],
            covered_measure: 0.0,
            support: (0.0, 0.0),
            breakpoints: bps,
        });
    }
    let tail = tail_truncation_distance(kernel, values, spec.tail_mass_tolerance).max(scale);
    let segments = 2 * (bps.len() - 1) + 2;
    let per = spec.cells / segments;
    if per < 4 {
        return Err(invalid(
            "cells",
            format!(
                "{} cells cannot cover {segments} graded segments (need at least {})",
                spec.cells,
                4 * segments
            ),
        ));
    }
    let mut cells = Vec::with_capacity(per * segments);
    let push_side = |cells: &mut Vec<SchemeCell>, anchor: f64, length: f64, sign: f64, first: f64| {
        let edges = graded_offsets(length, first, per);
        for w in edges.windows(2) {
            let offset = sign * 0.5 * (w[0] + w[1]);
            cells.push(SchemeCell {
                point: vec![anchor + offset],
                local: Some((anchor, offset)),
                measure: w[1] - w[0],
            });
        }
    };
    for w in bps.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let first = (half * GRADING_DEPTH).max(f64::MIN_POSITIVE);
        push_side(&mut cells, w[0], half, 1.0, first);
        push_side(&mut cells, w[1], half, -1.0, first);
    }
    let first_tail = scale * GRADING_DEPTH;
    push_side(&mut cells, lo, tail, -1.0, first_tail);
    push_side(&mut cells, hi, tail, 1.0, first_tail);
    let covered = (hi - lo) + 2.0 * tail;
    Ok(PathPartition {
        cells,
        covered_measure: covered,
        support: (lo - tail, hi + tail),
        breakpoints: bps,
    })
}

/// Verifies that `partition` (built for some path) covers the support needed
/// by the values `tau` of path `path`; refuses silent truncation.
pub fn check_coverage(
    kernel: &KernelFamily,
    partition: &PathPartition,
    path: usize,
    tau: &[&[f64]],
    spec: SchemeSpec,
) -> Result<()> {
    let fail = |t: usize, reason: String| Error::Coverage {
        path,
        grid_index: t,
        value: tau[t].to_vec(),
        reason,
    };
    match *kernel.kind() {
        KernelKind::RandomSlope => Ok(()),
        KernelKind::Indicator | KernelKind::LinearFsm { .. } | KernelKind::Chentsov { d: 1, .. } => {
            let exponent = match *kernel.kind() {
                KernelKind::LinearFsm { exponent, .. } => exponent,
                _ => 0.0,
            };
            for (t, v) in tau.iter().enumerate() {
                let s = v[0];
                if s == 0.0 {
                    continue;
                }
                if partition.breakpoints.binary_search_by(|b| b.total_cmp(&s)).is_err() {
                    return Err(fail(t, "value is not a breakpoint of the partition".into()));
                }
                if exponent != 0.0 {
                    let need = tail_truncation_distance(kernel, &[s], spec.tail_mass_tolerance);
                    let (lo, hi) = partition.support;
                    if s.min(0.0) - need < lo || s.max(0.0) + need > hi {
                        return Err(fail(t, format!("tail truncation needs distance {need:e}")));
                    }
                } else {
                    let (lo, hi) = partition.support;
                    let inside = |x: f64| match *kernel.kind() {
                        KernelKind::Chentsov { .. } => x.abs() <= hi,
                        _ => x >= lo && x <= hi,
                    };
                    if !inside(s) {
                        return Err(fail(t, format!("support [{lo}, {hi}] does not contain it")));
                    }
                }
            }
            Ok(())
        }
        KernelKind::Chentsov { .. } => {
            for (t, v) in tau.iter().enumerate() {
                let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r > partition.support.1 * (1.0 + 1e-12) {
                    return Err(fail(t, format!("radius exceeds the truncation {}", partition.support.1)));
                }
            }
            Ok(())
        }
        KernelKind::MovingAverage { .. } => {
            for (t, v) in tau.iter().enumerate() {
                let s = v[0];
                let need = tail_truncation_distance(kernel, &[s], spec.tail_mass_tolerance);
                let (lo, hi) = partition.support;
                if s.min(0.0) - need < lo || s.max(0.0) + need > hi {
                    return Err(fail(t, format!("tail truncation needs distance {need:e}")));
                }
            }
            Ok(())
        }
    }
}

/// Cells flattened into rows `coefficient[t] * (m / K)^{1/alpha}`, one stable
/// noise per row.
#[derive(Clone, Debug)]
pub struct CompiledIntegral {
    grid_len: usize,
    rows: Vec<f64>,
}

impl CompiledIntegral {
    pub fn rows(&self) -> usize {
        self.rows.len() / self.grid_len.max(1)
    }
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }
    pub fn row(&self, c: usize) -> &[f64] {
        &self.rows[c * self.grid_len..(c + 1) * self.grid_len]
    }
    pub fn data(&self) -> &[f64] {
        &self.rows
    }

    /// Exact `L^alpha` mass `sum_rows |sum_t c_t row[t]|^alpha` of the
    /// discretized field at coefficients `coeffs` over grid indices.
    pub fn discrete_mass(&self, alpha: f64, coeffs: &[(usize, f64)]) -> f64 {
        (0..self.rows())
            .map(|c| {
                let r = self.row(c);
                coeffs.iter().map(|&(t, th)| th * r[t]).sum::<f64>().abs().powf(alpha)
            })
            .sum()
    }
}

fn kernel_value(kernel: &KernelFamily, s: &[f64], cell: &SchemeCell) -> f64 {
    match (cell.local, kernel.kind()) {
        (Some((anchor, offset)), KernelKind::LinearFsm { .. } | KernelKind::MovingAverage { d: 1, .. }) => {
            kernel.evaluate_local(s[0], anchor, offset)
        }
        _ => kernel.evaluate(s, &cell.point),
    }
}

/// Evaluates every cell against every grid point and merges duplicates.
pub fn compile(
    kernel: &KernelFamily,
    batch: &SubordinatorBatch,
    scheme: &IntegralScheme,
) -> Result<CompiledIntegral> {
    if scheme.paths() != batch.paths() {
        return Err(Error::DimensionMismatch(format!(
            "scheme has {} path partitions, batch has {} paths",
            scheme.paths(),
            batch.paths()
        )));
    }
    let m = batch.grid().len();
    let alpha = kernel.alpha();
    let k = batch.paths() as f64;
    let mergeable = matches!(
        kernel.kind(),
        KernelKind::Indicator | KernelKind::Chentsov { .. } | KernelKind::RandomSlope
    ) || matches!(kernel.kind(), KernelKind::LinearFsm { exponent, .. } if *exponent == 0.0);

    let mut coefs: Vec<f64> = Vec::new();
    let mut measures: Vec<f64> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut v = vec![0.0; m];
    for (i, part) in scheme.partitions().iter().enumerate() {
        let tau: Vec<&[f64]> = (0..m).map(|t| batch.point(i, t)).collect();
        check_coverage(kernel, part, i, &tau, scheme.spec())?;
        for cell in &part.cells {
            for (t, slot) in v.iter_mut().enumerate() {
                *slot = kernel_value(kernel, tau[t], cell);
            }
            if v.iter().all(|&x| x == 0.0) {
                continue;
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Coverage {
                    path: i,
                    grid_index: v.iter().position(|x| !x.is_finite()).unwrap(),
                    value: cell.point.clone(),
                    reason: "kernel value is not finite at a cell point".into(),
                });
            }
            if mergeable {
                let key: Vec<u64> = v.iter().map(|x| (x + 0.0).to_bits()).collect();
                if let Some(&slot) = index.get(&key) {
                    measures[slot] += cell.measure;
                    continue;
                }
                index.insert(key, measures.len());
            }
            measures.push(cell.measure);
            coefs.extend_from_slice(&v);
        }
    }
    let mut rows = coefs;
    for (c, &mu) in measures.iter().enumerate() {
        let w = (mu / k).powf(1.0 / alpha);
        for x in &mut rows[c * m..(c + 1) * m] {
            *x *= w;
        }
    }
    Ok(CompiledIntegral { grid_len: m, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::kernels::*;
    use crate::rng::RandomStream;
    use crate::subordinator::{sample_fbf, sample_fbm};

    #[test]
    fn indicator_partition_measures_sum_to_covered_range() {
        let grid = TimeGrid::uniform(0.0, 2.0, 9).unwrap();
        let batch = sample_fbm(0.5, &grid, 16, &RandomStream::new(1)).unwrap();
        let k = indicator_kernel(1.5).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        assert!(s.is_exact());
        for p in s.partitions() {
            let sum: f64 = p.cells.iter().map(|c| c.measure).sum();
            assert!((sum - p.covered_measure).abs() <= 1e-10 * p.covered_measure.max(1.0));
            assert!(((p.support.1 - p.support.0) - p.covered_measure).abs() < 1e-12);
        }
    }

    #[test]
    fn compiled_indicator_mass_is_exact() {
        let grid = TimeGrid::uniform(0.0, 2.0, 5).unwrap();
        let batch = sample_fbm(0.7, &grid, 8, &RandomStream::new(2)).unwrap();
        let k = indicator_kernel(1.3).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        let c = compile(&k, &batch, &s).unwrap();
        let probe = [(1usize, 0.7), (3, -1.2), (4, 0.4)];
        let discrete = c.discrete_mass(1.3, &probe);
        let mut exact = 0.0;
        for i in 0..batch.paths() {
            let times: Vec<Vec<f64>> = probe.iter().map(|&(t, _)| batch.point(i, t).to_vec()).collect();
            let coeffs: Vec<f64> = probe.iter().map(|&(_, th)| th).collect();
            exact += lalpha_combination(&k, &coeffs, &times).unwrap() / batch.paths() as f64;
        }
        assert!((discrete - exact).abs() < 1e-12 * exact.max(1.0), "{discrete} vs {exact}");
    }

    #[test]
    fn chentsov_plane_cells_are_exact() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7, 0.7]];
        let grid = TimeGrid::new(2, pts).unwrap();
        let batch = sample_fbf(0.6, 2, &grid, 4, &RandomStream::new(3)).unwrap();
        let k = chentsov_kernel(1.2, 2).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        let c = compile(&k, &batch, &s).unwrap();
        let probe = [(1usize, 1.0), (2, -0.6), (3, 0.9)];
        let discrete = c.discrete_mass(1.2, &probe);
        let mut exact = 0.0;
        for i in 0..batch.paths() {
            let times: Vec<Vec<f64>> = probe.iter().map(|&(t, _)| batch.point(i, t).to_vec()).collect();
            let coeffs: Vec<f64> = probe.iter().map(|&(_, th)| th).collect();
            exact += lalpha_combination(&k, &coeffs, &times).unwrap() / 4.0;
        }
        assert!((discrete - exact).abs() < 1e-8 * exact, "{discrete} vs {exact}");
        // covered measure equals the area under max_t (phi . tau_t)_+ / C
        for (i, p) in s.partitions().iter().enumerate() {
            let sum: f64 = p.cells.iter().map(|c| c.measure).sum();
            assert!((sum - p.covered_measure).abs() < 1e-10);
            let area = crate::quadrature::integrate(
                &|psi: f64| {
                    (0..4)
                        .map(|t| {
                            let v = batch.point(i, t);
                            psi.cos() * v[0] + psi.sin() * v[1]
                        })
                        .fold(0.0, f64::max)
                },
                0.0,
                2.0 * PI,
                crate::quadrature::Tolerance::relative(1e-12),
            )
            .unwrap()
            .value
                / 2.0;
            assert!((area - p.covered_measure).abs() < 1e-8 * area, "{area} vs {}", p.covered_measure);
        }
    }

    #[test]
    fn graded_cells_approximate_lfsm_mass() {
        let grid = TimeGrid::from_times(&[0.0, 0.5, 1.0, 2.0]).unwrap();
        let batch = SubordinatorBatch::identity(&grid).unwrap();
        let k = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        assert!(!s.is_exact());
        for p in s.partitions() {
            let sum: f64 = p.cells.iter().map(|c| c.measure).sum();
            assert!((sum - p.covered_measure).abs() <= 1e-10 * p.covered_measure);
        }
        let c = compile(&k, &batch, &s).unwrap();
        for &(t, want) in &[(1usize, 0.5f64.powf(1.05)), (2, 1.0), (3, 2f64.powf(1.05))] {
            let got = c.discrete_mass(1.5, &[(t, 1.0)]);
            assert!((got / want - 1.0).abs() < 2e-3, "t {t}: {got} vs {want}");
        }
        let inc = c.discrete_mass(1.5, &[(3, 1.0), (2, -1.0)]);
        assert!((inc - 1.0).abs() < 2e-3, "{inc}");
    }

    #[test]
    fn graded_cells_for_brownian_moving_average() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let batch = SubordinatorBatch::identity(&grid).unwrap();
        let k = fbf_moving_avg_kernel(0.5, 1).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        let c = compile(&k, &batch, &s).unwrap();
        let got = c.discrete_mass(2.0, &[(1, 1.0)]);
        assert!((got - 1.0).abs() < 2e-3, "{got}");
    }

    #[test]
    fn coverage_violation_is_reported() {
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let a = sample_fbm(0.5, &grid, 2, &RandomStream::new(4)).unwrap();
        let b = sample_fbm(0.5, &grid, 2, &RandomStream::new(5)).unwrap();
        let k = indicator_kernel(1.5).unwrap();
        let s = build_scheme(&k, &a, SchemeSpec::default()).unwrap();
        let err = compile(&k, &b, &s).unwrap_err();
        assert!(matches!(err, Error::Coverage { .. }), "{err}");
    }

    #[test]
    fn merged_cells_are_fewer_than_raw_cells() {
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let batch = sample_fbm(1.0, &grid, 50, &RandomStream::new(6)).unwrap();
        let k = indicator_kernel(1.5).unwrap();
        let s = build_scheme(&k, &batch, SchemeSpec::default()).unwrap();
        let c = compile(&k, &batch, &s).unwrap();
        // lines through the origin: only two distinct sign patterns per gap
        assert!(c.rows() < s.total_cells());
        assert!(c.rows() <= 8, "{}", c.rows());
    }

    #[test]
    fn too_small_budget_is_rejected() {
        let grid = TimeGrid::from_times(&[0.0, 1.0, 2.0]).unwrap();
        let batch = SubordinatorBatch::identity(&grid).unwrap();
        let k = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let spec = SchemeSpec {
            cells: 8,
            ..SchemeSpec::default()
        };
        assert!(build_scheme(&k, &batch, spec).is_err());
    }
}
