use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Square blending window over an HR patch.
pub type WeightMask = DMatrix<f64>;

/// `ρ_{k,l} = exp(-γ/2 ((k - c)² + (l - c)²))` with 1-based `k, l` and
/// `c = (qτ + 1) / 2`.
pub fn aggregation_weights(q: usize, tau: usize, gamma: f64) -> Result<WeightMask> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let side = q * tau;
    let c = (side as f64 + 1.0) / 2.0;
    Ok(DMatrix::from_fn(side, side, |i, j| {
        let (k, l) = (i as f64 + 1.0, j as f64 + 1.0);
        (-0.5 * gamma * ((k - c).powi(2) + (l - c).powi(2))).exp()
    }))
}

/// Weighted average of overlapping square patches (`(values, row, col)` with
/// row-major values). Every output pixel must be covered.
pub fn aggregate(
    patches: &[(Vec<f64>, usize, usize)],
    mask: &WeightMask,
    height: usize,
    width: usize,
) -> Result<GrayImage> {
    let side = mask.nrows();
    let mut num = vec![0.0; width * height];
    let mut den = vec![0.0; width * height];
    for (values, row, col) in patches {
        if values.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                got: values.len(),
            });
        }
        if row + side > height || col + side > width {
            return Err(Error::Domain(format!(
                "patch at ({row}, {col}) exceeds {width}x{height} output"
            )));
        }
        for i in 0..side {
            let base = (row + i) * width + col;
            for j in 0..side {
                let w = mask[(i, j)];
                num[base + j] += w * values[i * side + j];
                den[base + j] += w;
            }
        }
    }
    if let Some(idx) = den.iter().position(|&d| d <= 0.0) {
        return Err(Error::Uncovered {
            row: idx / width,
            col: idx % width,
        });
    }
    GrayImage::new(width, height, num.iter().zip(&den).map(|(n, d)| n / d).collect())
}
