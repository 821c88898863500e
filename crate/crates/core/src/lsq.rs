//! Small dense complex least squares.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Solution of `min ||A X - B||` with its column-scaled condition number.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DMatrix<Complex64>,
    pub cond: f64,
}

/// Least squares with column equilibration, solved through the SVD.
pub fn lstsq(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, max_cond: f64) -> Result<LstsqSolution> {
    let n = a.ncols();
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let s = a.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if s > 0.0 { 1.0 / s } else { 1.0 }
        })
        .collect();
    let mut a_s = a.clone();
    for (j, &s) in scale.iter().enumerate() {
        a_s.column_mut(j).scale_mut(s);
    }
    let svd = a_s.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond.is_nan() || cond > max_cond {
        return Err(Error::IllConditioned(cond));
    }
    let mut x = svd.solve(b, 0.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for (j, &s) in scale.iter().enumerate() {
        x.row_mut(j).scale_mut(s);
    }
    Ok(LstsqSolution { x, cond })
}
