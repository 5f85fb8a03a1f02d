use nalgebra::{DMatrix, DVector};

use super::geometry::PatchGeometry;
use super::model::Normalization;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// A vectorized (row-major) square patch and its top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub values: DVector<f64>,
    pub row: usize,
    pub col: usize,
}

/// Window offsets along one axis: multiples of `stride`, plus the last window
/// flush with the edge.
pub fn grid_positions(len: usize, side: usize, stride: usize) -> Vec<usize> {
    if side > len || stride == 0 {
        return Vec::new();
    }
    let last = len - side;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

fn window(img: &GrayImage, row: usize, col: usize, side: usize) -> DVector<f64> {
    DVector::from_fn(side * side, |i, _| img.get(row + i / side, col + i % side))
}

/// All `side x side` windows on the edge-clamped grid, in row-major grid order.
pub fn extract_patches(img: &GrayImage, side: usize, stride: usize) -> Result<Vec<Patch>> {
    if side == 0 || stride == 0 {
        return Err(Error::Domain("patch side and stride must be >= 1".into()));
    }
    if img.width() < side || img.height() < side {
        return Err(Error::Image(format!(
            "{}x{} image is smaller than a {side}x{side} patch",
            img.width(),
            img.height()
        )));
    }
    let rows = grid_positions(img.height(), side, stride);
    let cols = grid_positions(img.width(), side, stride);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            out.push(Patch {
                values: window(img, r, c, side),
                row: r,
                col: c,
            });
        }
    }
    Ok(out)
}

pub(crate) fn check_pair(hr: &GrayImage, lr: &GrayImage, q: usize) -> Result<()> {
    if hr.width() != q * lr.width() || hr.height() != q * lr.height() {
        return Err(Error::Image(format!(
            "HR image {}x{} is not {q}x the LR image {}x{}",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height()
        )));
    }
    Ok(())
}

/// Normalized joint vectors (HR block first, then LR), one per column, for
/// every LR patch on the training grid.
pub fn build_joint_samples(
    hr: &GrayImage,
    lr: &GrayImage,
    geom: &PatchGeometry,
    norm: &Normalization,
) -> Result<DMatrix<f64>> {
    geom.validate()?;
    check_pair(hr, lr, geom.q)?;
    let lr_patches = extract_patches(lr, geom.tau, geom.stride_train)?;
    let (dh, dl) = (geom.hr_dim(), geom.lr_dim());
    let mut data = DMatrix::zeros(dh + dl, lr_patches.len());
    for (j, p) in lr_patches.iter().enumerate() {
        let hr_vals = window(hr, geom.q * p.row, geom.q * p.col, geom.hr_side());
        let mut col = data.column_mut(j);
        for i in 0..dh {
            col[i] = norm.apply(hr_vals[i]);
        }
        for i in 0..dl {
            col[dh + i] = norm.apply(p.values[i]);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        assert_eq!(grid_positions(4, 4, 1), vec![0]);
        assert_eq!(grid_positions(5, 4, 1), vec![0, 1]);
        assert_eq!(grid_positions(8, 4, 3), vec![0, 3, 4]);
        assert_eq!(grid_positions(8, 4, 4), vec![0, 4]);
        assert!(grid_positions(3, 4, 1).is_empty());
    }

    #[test]
    fn extraction_counts() {
        let img = |n: usize| GrayImage::from_fn(n, n, |r, c| (r * n + c) as f64).unwrap();
        assert_eq!(extract_patches(&img(4), 4, 1).unwrap().len(), 1);
        assert_eq!(extract_patches(&img(5), 4, 1).unwrap().len(), 4);
        let p = extract_patches(&img(8), 4, 3).unwrap();
        assert_eq!(p.len(), 9);
        let pos: Vec<_> = p.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(pos[2], (0, 4));
        assert_eq!(pos[8], (4, 4));
        // row-major vectorization
        assert_eq!(p[4].values[0], (3 * 8 + 3) as f64);
        assert_eq!(p[4].values[5], (4 * 8 + 4) as f64);
        assert!(extract_patches(&img(3), 4, 1).is_err());
    }

    #[test]
    fn stride_must_cover_every_pixel() {
        for len in 4..20 {
            for stride in 1..=4 {
                let pos = grid_positions(len, 4, stride);
                let mut covered = vec![false; len];
                for p in pos {
                    covered[p..p + 4].iter_mut().for_each(|c| *c = true);
                }
                assert!(covered.iter().all(|&c| c), "len {len} stride {stride}");
            }
        }
    }

    #[test]
    fn joint_samples_layout() {
        let geom = PatchGeometry { tau: 2, q: 2, stride_train: 1, ..Default::default() };
        let hr = GrayImage::from_fn(6, 6, |r, c| (r * 6 + c) as f64 / 36.0).unwrap();
        let lr = crate::imaging::box_downsample(&hr, 2).unwrap();
        let norm = Normalization::identity();
        let data = build_joint_samples(&hr, &lr, &geom, &norm).unwrap();
        assert_eq!(data.nrows(), 20);
        assert_eq!(data.ncols(), extract_patches(&lr, 2, 1).unwrap().len());
        // sample 1 is LR patch (0,1) -> HR window at (0,2)
        assert_eq!(data[(0, 1)], hr.get(0, 2));
        assert_eq!(data[(5, 1)], hr.get(1, 3));
        assert_eq!(data[(16, 1)], lr.get(0, 1));
        assert_eq!(data[(19, 1)], lr.get(1, 2));

        let bad = GrayImage::filled(5, 6, 0.0).unwrap();
        assert!(build_joint_samples(&bad, &lr, &geom, &norm).is_err());
    }

    #[test]
    fn constant_images_give_constant_vectors() {
        let geom = PatchGeometry::default();
        let hr = GrayImage::filled(16, 16, 0.4).unwrap();
        let lr = GrayImage::filled(8, 8, 0.4).unwrap();
        let norm = Normalization { offset: 0.25, scale: 0.5 };
        let data = build_joint_samples(&hr, &lr, &geom, &norm).unwrap();
        assert!(data.iter().all(|&v| (norm.invert(v) - 0.4).abs() < 1e-12));
    }
}
