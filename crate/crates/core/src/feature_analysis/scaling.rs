use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column min/max recorded by [`minmax_scale`], reused to scale new
/// samples at prediction time. A column with `max == min` is constant and
/// maps to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaling {
    /// Scaling that leaves features unchanged ([0,1] range per column).
    pub fn identity(n_features: usize) -> Self {
        FeatureScaling {
            mins: vec![0.0; n_features],
            maxs: vec![1.0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    /// Columns where max == min.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.mins.len())
            .filter(|&j| self.maxs[j] == self.mins[j])
            .collect()
    }

    pub fn apply_value(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        if hi > lo {
            (x - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mins.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} features, scaling has {}",
                row.len(),
                self.mins.len()
            )));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &x)| self.apply_value(j, x))
            .collect())
    }

    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mins.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, scaling has {}",
                x.ncols(),
                self.mins.len()
            )));
        }
        let mut out = x.clone();
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                out[(i, j)] = self.apply_value(j, x[(i, j)]);
            }
        }
        Ok(out)
    }

    pub fn invert_value(&self, j: usize, s: f64) -> f64 {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        if hi > lo {
            lo + s * (hi - lo)
        } else {
            lo
        }
    }
}

/// Scale each column to [0,1] by its own min and max.
///
/// Constant columns map to all zeros; they are detectable afterwards via
/// [`FeatureScaling::constant_columns`].
pub fn minmax_scale(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, FeatureScaling)> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidInput("empty feature matrix".into()));
    }
    let mut mins = vec![f64::INFINITY; x.ncols()];
    let mut maxs = vec![f64::NEG_INFINITY; x.ncols()];
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let v = x[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in feature column {j}"
                )));
            }
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let scaling = FeatureScaling { mins, maxs };
    let scaled = scaling.apply_matrix(x)?;
    Ok((scaled, scaling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scales_forcing_wavenumber_grid() {
        let x = DMatrix::from_column_slice(4, 1, &[2.0, 3.0, 4.0, 5.0]);
        let (s, meta) = minmax_scale(&x).unwrap();
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for i in 0..4 {
            assert_relative_eq!(s[(i, 0)], expected[i], epsilon = 1e-15);
        }
        assert!(meta.constant_columns().is_empty());
    }

    #[test]
    fn constant_column_maps_to_zero_and_is_flagged() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 7.0, 2.0, 7.0, 3.0, 7.0]);
        let (s, meta) = minmax_scale(&x).unwrap();
        assert_eq!(meta.constant_columns(), vec![1]);
        for i in 0..3 {
            assert_eq!(s[(i, 1)], 0.0);
        }
    }

    #[test]
    fn round_trip_inverse() {
        let x = DMatrix::from_row_slice(3, 2, &[0.5, -3.0, 1.5, 9.0, 4.5, 2.0]);
        let (s, meta) = minmax_scale(&x).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_relative_eq!(meta.invert_value(j, s[(i, j)]), x[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scaled_entries_in_unit_interval() {
        let x = DMatrix::from_fn(20, 3, |i, j| (i as f64 * 1.7 - 3.0) * (j as f64 + 1.0));
        let (s, _) = minmax_scale(&x).unwrap();
        assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
