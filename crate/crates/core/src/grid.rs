use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of time points in `R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dim: usize,
    coords: Vec<f64>,
}

impl TimeGrid {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Grid("time dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Grid(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Grid(format!("point {i} is not finite")));
            }
            coords.extend_from_slice(p);
        }
        let grid = Self { dim, coords };
        for i in 0..grid.len() {
            for j in 0..i {
                if grid.point(i) == grid.point(j) {
                    return Err(Error::Grid(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(grid)
    }

    pub fn from_times(times: &[f64]) -> Result<Self> {
        Self::new(1, times.iter().map(|&t| vec![t]).collect())
    }

    /// `n` equally spaced points `start, start + h, ..., stop` on the line.
    pub fn uniform(start: f64, stop: f64, n: usize) -> Result<Self> {
        if n < 2 || !(stop > start) {
            return Err(Error::Grid("uniform grid needs n >= 2 and stop > start".into()));
        }
        let h = (stop - start) / (n - 1) as f64;
        Self::from_times(&(0..n).map(|k| start + k as f64 * h).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    pub fn origin_index(&self) -> Option<usize> {
        self.points().position(|p| p.iter().all(|&x| x == 0.0))
    }

    pub fn require_origin(&self) -> Result<usize> {
        self.origin_index()
            .ok_or_else(|| Error::Grid("grid must contain the origin".into()))
    }

    pub fn index_of(&self, p: &[f64]) -> Option<usize> {
        self.points().position(|q| q == p)
    }

    /// `(start, step)` when the grid is one-dimensional, increasing and equally
    /// spaced (relative tolerance 1e-9 on the step).
    pub fn uniform_spacing(&self) -> Option<(f64, f64)> {
        if self.dim != 1 || self.len() < 2 {
            return None;
        }
        let h = self.coords[1] - self.coords[0];
        if h <= 0.0 {
            return None;
        }
        let ok = self
            .coords
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(w[1].abs()));
        ok.then_some((self.coords[0], h))
    }

    /// Union of this grid with extra points, keeping the original order and
    /// appending points not already present.
    pub fn with_points(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut pts = self.to_vecs();
        for p in extra {
            if !pts.iter().any(|q| q == p) {
                pts.push(p.clone());
            }
        }
        Self::new(self.dim, pts)
    }
}

/// Euclidean rigid motion `t -> R t + b` of `R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    dim: usize,
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

impl RigidMotion {
    pub fn identity(dim: usize) -> Self {
        let mut rotation = vec![0.0; dim * dim];
        for i in 0..dim {
            rotation[i * dim + i] = 1.0;
        }
        Self {
            dim,
            rotation,
            translation: vec![0.0; dim],
        }
    }

    pub fn translation(shift: &[f64]) -> Self {
        let mut m = Self::identity(shift.len());
        m.translation = shift.to_vec();
        m
    }

    /// Rotation of the plane by `angle` radians.
    pub fn rotation_2d(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            dim: 2,
            rotation: vec![c, -s, s, c],
            translation: vec![0.0, 0.0],
        }
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane of `R^dim`.
    pub fn plane_rotation(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut m = Self::identity(dim);
        let (s, c) = angle.sin_cos();
        m.rotation[i * dim + i] = c;
        m.rotation[i * dim + j] = -s;
        m.rotation[j * dim + i] = s;
        m.rotation[j * dim + j] = c;
        m
    }

    /// `t -> -t` on the line.
    pub fn reflection_1d() -> Self {
        Self {
            dim: 1,
            rotation: vec![-1.0],
            translation: vec![0.0],
        }
    }

    pub fn from_parts(rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let dim = translation.len();
        if rotation.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "rotation has {} entries for dimension {dim}",
                rotation.len()
            )));
        }
        let m = Self {
            dim,
            rotation,
            translation,
        };
        if !m.is_isometry(1e-9) {
            return Err(Error::InvalidParameter {
                name: "motion",
                reason: "linear part is not orthogonal".into(),
            });
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &RigidMotion) -> RigidMotion {
        let n = self.dim;
        let mut rotation = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rotation[i * n + j] = (0..n)
                    .map(|k| self.rotation[i * n + k] * inner.rotation[k * n + j])
                    .sum();
            }
        }
        let translation = self.apply(&inner.translation);
        RigidMotion {
            dim: n,
            rotation,
            translation,
        }
    }

    pub fn apply(&self, t: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n).map(|k| self.rotation[i * n + k] * t[k]).sum::<f64>() + self.translation[i]
            })
            .collect()
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n)
                    .map(|k| self.rotation[k * n + i] * self.rotation[k * n + j])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}
