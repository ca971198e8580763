//! Realized field values on a time grid with provenance.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;

/// Everything needed to reproduce a [`FieldSample`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub generator: String,
    pub kernel: String,
    pub alpha: f64,
    pub effective_hurst: f64,
    /// Master seed, when the sample was produced from a seeded run.
    pub seed: Option<u64>,
    /// Fingerprint of the random stream the replications were derived from.
    pub stream: String,
    pub scheme_hash: Option<String>,
    pub paths: Option<usize>,
    pub cells: Option<usize>,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    grid: TimeGrid,
    replications: usize,
    values: Vec<f64>,
    meta: FieldMeta,
}

impl FieldSample {
    pub fn new(grid: TimeGrid, replications: usize, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        if values.len() != replications * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {replications} replications x {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(
                "values",
                format!(
                    "non-finite value in replication {} at grid index {}",
                    pos / grid.len(),
                    pos % grid.len()
                ),
            ));
        }
        Ok(Self {
            grid,
            replications,
            values,
            meta,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn replications(&self) -> usize {
        self.replications
    }
    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }
    pub fn meta_mut(&mut self) -> &mut FieldMeta {
        &mut self.meta
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All grid values of replication `r`.
    pub fn replication(&self, r: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[r * m..(r + 1) * m]
    }

    pub fn value(&self, r: usize, t: usize) -> f64 {
        self.values[r * self.grid.len() + t]
    }

    /// Replications of a single grid point.
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.replications).map(|r| self.value(r, t)).collect()
    }

    /// `replication,grid_index,value` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replication,grid_index,value")?;
        for r in 0..self.replications {
            for (t, v) in self.replication(r).iter().enumerate() {
                writeln!(out, "{r},{t},{v:.16e}")?;
            }
        }
        Ok(())
    }

    /// JSON block with the metadata and the grid.
    pub fn meta_json(&self) -> serde_json::Value {
        serde_json::json!({
            "meta": self.meta,
            "grid": {
                "dim": self.grid.dim(),
                "points": self.grid.to_vecs(),
            },
            "replications": self.replications,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_values() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        let vals = vec![0.0, 1.0 / 3.0, 0.0, -2.5e-300];
        let f = FieldSample::new(grid, 2, vals.clone(), FieldMeta::default()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(parsed, vals);
        assert!(text.starts_with("replication,grid_index,value\n"));
    }

    #[test]
    fn rejects_non_finite() {
        let grid = TimeGrid::from_times(&[0.0, 1.0]).unwrap();
        assert!(FieldSample::new(grid, 1, vec![0.0, f64::NAN], FieldMeta::default()).is_err());
    }
}
