//! Per-column standardization of embedding matrices.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STD_FLOOR: f64 = 1e-8;

/// Column means and (population) standard deviations of a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZNorm {
    pub mean: Array1<f64>,
    /// Already floored.
    pub std: Array1<f64>,
    pub floor: f64,
}

impl ZNorm {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        Self::fit_with_floor(x, DEFAULT_STD_FLOOR)
    }

    pub fn fit_with_floor(x: ArrayView2<'_, f64>, floor: f64) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "z-norm needs at least one row".into(),
            ));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "z-norm floor must be positive, got {floor}"
            )));
        }
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut var = Array1::<f64>::zeros(x.ncols());
        for row in x.rows() {
            for ((v, &value), &m) in var.iter_mut().zip(row).zip(&mean) {
                let d = value - m;
                *v += d * d;
            }
        }
        let std = var.mapv(|v| (v / n).sqrt().max(floor));
        Ok(Self { mean, std, floor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            self.standardize(row.view_mut());
        }
        Ok(out)
    }

    pub fn apply_row(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check(x.len())?;
        let mut out = x.to_owned();
        self.standardize(out.view_mut());
        Ok(out)
    }

    fn standardize(&self, mut row: ndarray::ArrayViewMut1<'_, f64>) {
        for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    fn check(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::dimension("z-norm input columns", self.dim(), found))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn constant_column_is_floored() {
        let z = ZNorm::fit(array![[1.0, 2.0], [3.0, 2.0]].view()).unwrap();
        assert_eq!(z.mean, array![2.0, 2.0]);
        assert_eq!(z.std, array![1.0, DEFAULT_STD_FLOOR]);
        let out = z.apply(array![[1.0, 2.0], [3.0, 2.0]].view()).unwrap();
        assert_eq!(out, array![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn single_row() {
        let z = ZNorm::fit(array![[4.0, -1.0, 0.5]].view()).unwrap();
        assert_eq!(z.mean, array![4.0, -1.0, 0.5]);
        assert!(z.std.iter().all(|&s| s == DEFAULT_STD_FLOOR));
    }

    #[test]
    fn standardized_input_is_a_fixed_point() {
        let x = array![[-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [1.0, 1.0]];
        let z = ZNorm::fit(x.view()).unwrap();
        for (&m, &s) in z.mean.iter().zip(&z.std) {
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-8);
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn mean_maps_to_zero() {
        let z = ZNorm::fit(array![[1.0, 5.0], [2.0, 9.0], [6.0, 1.0]].view()).unwrap();
        let out = z.apply_row(z.mean.view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let z = ZNorm::fit(array![[1.0, 2.0]].view()).unwrap();
        assert!(matches!(
            z.apply(array![[1.0, 2.0, 3.0]].view()),
            Err(Error::Dimension {
                expected: 2,
                found: 3,
                ..
            })
        ));
        assert!(z.apply_row(array![1.0].view()).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(ZNorm::fit(Array2::<f64>::zeros((0, 3)).view()).is_err());
    }
}
