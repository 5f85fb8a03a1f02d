//! Initial mixtures for the EM loop. Every initial shape parameter is 1.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EmConfig, InitMethod};
use super::{check_data, weighted_mean, weighted_scatter, Ggmm};
use crate::error::{Error, Result};
use crate::ggd::{symmetrize, GgdParams};

const LLOYD_ITERS: usize = 10;

/// Builds the starting mixture described by `config.init`. Deterministic given
/// `config.seed`.
pub fn init_model(data: &DMatrix<f64>, config: &EmConfig, cov_reg: f64) -> Result<Ggmm> {
    check_data(data, data.nrows())?;
    let k = config.components;
    let distinct: HashSet<Vec<u64>> = data
        .column_iter()
        .map(|c| c.iter().map(|v| v.to_bits()).collect())
        .collect();
    if distinct.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} distinct points for {k} components",
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let beta = config.fix_beta.unwrap_or(1.0);
    match config.init {
        InitMethod::RandomResponsibility => random_responsibility(data, k, cov_reg, beta, &mut rng),
        InitMethod::KmeansAssign => kmeans_assign(data, k, cov_reg, beta, &mut rng),
    }
}

fn random_responsibility(
    data: &DMatrix<f64>,
    k: usize,
    cov_reg: f64,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Ggmm> {
    let n = data.ncols();
    let mut resp = DMatrix::<f64>::zeros(n, k);
    for mut row in resp.row_iter_mut() {
        for v in row.iter_mut() {
            *v = rng.random::<f64>() + 1e-3;
        }
        let s = row.sum();
        row /= s;
    }
    let weights: Vec<f64> = resp.column_iter().map(|c| c.sum() / n as f64).collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let components = resp
        .column_iter()
        .map(|c| {
            let a: Vec<f64> = c.iter().copied().collect();
            let mu = weighted_mean(data, &a)?;
            let mut sigma = weighted_scatter(data, &mu, &a) / a.iter().sum::<f64>();
            add_ridge(&mut sigma, cov_reg);
            GgdParams::new(mu, sigma, beta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ggmm::new(weights, components)
}

fn sq_dist(a: &DVector<f64>, b: nalgebra::DVectorView<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centers: &[DVector<f64>], x: nalgebra::DVectorView<f64>) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(j, c)| (j, sq_dist(c, x)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// k-means++ seeding followed by a few Lloyd passes. Cluster covariances are
/// shrunk toward the global covariance with weight `p / (n_k + p)` so small
/// clusters still start from a well-conditioned matrix.
fn kmeans_assign(
    data: &DMatrix<f64>,
    k: usize,
    cov_reg: f64,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Ggmm> {
    let n = data.ncols();
    let p = data.nrows();
    let first = rng.random_range(0..n);
    let mut centers = vec![data.column(first).clone_owned()];
    let mut d2: Vec<f64> = data.column_iter().map(|x| sq_dist(&centers[0], x)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // guards against rounding landing on an existing center
            if d2[chosen] == 0.0 {
                d2.iter()
                    .enumerate()
                    .fold((0, -1.0), |b, (i, &d)| if d > b.1 { (i, d) } else { b })
                    .0
            } else {
                chosen
            }
        } else {
            return Err(Error::InsufficientData("all points coincide".into()));
        };
        let c = data.column(idx).clone_owned();
        for (dv, x) in d2.iter_mut().zip(data.column_iter()) {
            *dv = dv.min(sq_dist(&c, x));
        }
        centers.push(c);
    }

    let mut labels = vec![0usize; n];
    for _ in 0..LLOYD_ITERS {
        let mut changed = false;
        for (i, x) in data.column_iter().enumerate() {
            let (j, _) = nearest(&centers, x);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }
        let mut sums = vec![DVector::<f64>::zeros(p); k];
        let mut counts = vec![0usize; k];
        for (x, &l) in data.column_iter().zip(&labels) {
            sums[l] += x;
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = &sums[j] / counts[j] as f64;
            } else {
                // re-seat an empty cluster on the point farthest from its center
                let far = data
                    .column_iter()
                    .enumerate()
                    .map(|(i, x)| (i, sq_dist(&centers[labels[i]], x)))
                    .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b })
                    .0;
                centers[j] = data.column(far).clone_owned();
                labels[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (i, x) in data.column_iter().enumerate() {
        labels[i] = nearest(&centers, x).0;
    }

    let ones = vec![1.0; n];
    let global_mu = weighted_mean(data, &ones)?;
    let global = weighted_scatter(data, &global_mu, &ones) / n as f64;
    let mut weights = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let member: Vec<f64> = labels.iter().map(|&l| if l == j { 1.0 } else { 0.0 }).collect();
        let nk: f64 = member.iter().sum();
        let (mu, scatter) = if nk > 0.0 {
            let mu = weighted_mean(data, &member)?;
            let s = weighted_scatter(data, &mu, &member);
            (mu, s)
        } else {
            (centers[j].clone(), DMatrix::zeros(p, p))
        };
        let pf = p as f64;
        let mut sigma = (scatter + &global * pf) / (nk + pf);
        add_ridge(&mut sigma, cov_reg);
        components.push(GgdParams::new(mu, sigma, beta)?);
        weights.push(nk.max(1.0));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ggmm::new(weights, components)
}

fn add_ridge(sigma: &mut DMatrix<f64>, cov_reg: f64) {
    symmetrize(sigma);
    for i in 0..sigma.nrows() {
        sigma[(i, i)] += cov_reg;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        DMatrix::from_fn(2, 90, |i, j| {
            let c = [(-5.0, 0.0), (5.0, 0.0), (0.0, 8.0)][j % 3];
            (if i == 0 { c.0 } else { c.1 }) + rng.random_range(-1.0..1.0)
        })
    }

    #[test]
    fn deterministic_given_seed() {
        let data = blobs();
        for init in [InitMethod::KmeansAssign, InitMethod::RandomResponsibility] {
            let cfg = EmConfig { components: 3, init, seed: 7, ..Default::default() };
            let a = init_model(&data, &cfg, 1e-6).unwrap();
            let b = init_model(&data, &cfg, 1e-6).unwrap();
            assert_eq!(a, b);
            assert!(a.components().iter().all(|c| c.beta() == 1.0));
            assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kmeans_finds_blob_centres() {
        let cfg = EmConfig { components: 3, seed: 3, ..Default::default() };
        let m = init_model(&blobs(), &cfg, 1e-6).unwrap();
        let mut xs: Vec<f64> = m.components().iter().map(|c| c.mu()[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 5.0).abs() < 0.5 && xs[1].abs() < 0.5 && (xs[2] - 5.0).abs() < 0.5);
    }

    #[test]
    fn too_few_distinct_points() {
        let data = DMatrix::from_row_slice(1, 4, &[1.0, 1.0, 2.0, 2.0]);
        let cfg = EmConfig { components: 3, ..Default::default() };
        assert!(matches!(init_model(&data, &cfg, 1e-6), Err(Error::InsufficientData(_))));
    }
}
