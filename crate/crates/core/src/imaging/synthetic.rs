//! Procedural grayscale test scenes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GrayImage;
use crate::error::Result;

const SUPERSAMPLE: usize = 4;

enum Shape {
    Disk { cy: f64, cx: f64, r: f64, v: f64 },
    Rect { y0: f64, x0: f64, y1: f64, x1: f64, v: f64 },
    Stripes { cy: f64, cx: f64, r: f64, freq: f64, angle: f64, v: f64 },
}

/// A `size x size` scene of a shaded background, overlapping disks and
/// rectangles, and striped discs spread evenly over the four quadrants, anti-aliased by supersampling. Values lie in
/// `[0, 1]`; the layout is a deterministic function of `seed`.
pub fn synthetic_scene(size: usize, seed: u64) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let mut shapes = Vec::new();
    // Every quadrant gets the same mix of shapes so that any quarter of the
    // image is a fair sample of the whole.
    let quadrants = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)];
    let centre = |rng: &mut ChaCha8Rng, (qy, qx): (f64, f64)| {
        (
            (qy + rng.random_range(0.05..0.45)) * s,
            (qx + rng.random_range(0.05..0.45)) * s,
        )
    };
    for _ in 0..2 {
        for &q in &quadrants {
            let (cy, cx) = centre(&mut rng, q);
            shapes.push(Shape::Disk {
                cy,
                cx,
                r: rng.random_range(0.04..0.14) * s,
                v: rng.random_range(0.05..0.95),
            });
        }
    }
    for &q in &quadrants {
        let (y0, x0) = centre(&mut rng, q);
        shapes.push(Shape::Rect {
            y0,
            x0,
            y1: y0 + rng.random_range(0.08..0.25) * s,
            x1: x0 + rng.random_range(0.08..0.25) * s,
            v: rng.random_range(0.05..0.95),
        });
    }
    for &q in &quadrants {
        let (cy, cx) = centre(&mut rng, q);
        shapes.push(Shape::Stripes {
            cy,
            cx,
            r: rng.random_range(0.06..0.12) * s,
            freq: rng.random_range(0.25..0.6),
            angle: rng.random_range(0.0..std::f64::consts::PI),
            v: rng.random_range(0.3..0.7),
        });
    }
    let (gy, gx) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));

    let value = |y: f64, x: f64| {
        let mut v = 0.5 + gy * (y / s - 0.5) + gx * (x / s - 0.5);
        for shape in &shapes {
            match *shape {
                Shape::Disk { cy, cx, r, v: val } => {
                    if (y - cy).powi(2) + (x - cx).powi(2) <= r * r {
                        v = val;
                    }
                }
                Shape::Rect { y0, x0, y1, x1, v: val } => {
                    if y >= y0 && y <= y1 && x >= x0 && x <= x1 {
                        v = val;
                    }
                }
                Shape::Stripes { cy, cx, r, freq, angle, v: val } => {
                    if (y - cy).powi(2) + (x - cx).powi(2) <= r * r {
                        let t = (x - cx) * angle.cos() + (y - cy) * angle.sin();
                        v = val + 0.25 * (freq * t).sin();
                    }
                }
            }
        }
        v
    };

    let n = SUPERSAMPLE as f64;
    GrayImage::from_fn(size, size, |r, c| {
        let mut acc = 0.0;
        for i in 0..SUPERSAMPLE {
            for j in 0..SUPERSAMPLE {
                let y = r as f64 + (i as f64 + 0.5) / n;
                let x = c as f64 + (j as f64 + 0.5) / n;
                acc += value(y, x);
            }
        }
        (acc / (n * n)).clamp(0.0, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = synthetic_scene(64, 1).unwrap();
        assert_eq!(a, synthetic_scene(64, 1).unwrap());
        assert_ne!(a, synthetic_scene(64, 2).unwrap());
        assert!(a.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
        let mean = a.pixels().iter().sum::<f64>() / a.pixels().len() as f64;
        let var = a.pixels().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / a.pixels().len() as f64;
        assert!(var > 1e-3);
    }
}
