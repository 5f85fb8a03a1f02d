//! Multivariate generalized Gaussian distribution.
//!
//! Density of a component with mean `mu`, scatter matrix `sigma` and shape `beta`:
//!
//! ```text
//! f(x) = C_p(beta) |sigma|^{-1/2} exp(-1/2 * delta^beta),   delta = (x-mu)^T sigma^{-1} (x-mu)
//! C_p(beta) = Gamma(p/2) beta / (pi^{p/2} Gamma(p/(2 beta)) 2^{p/(2 beta)})
//! ```
//!
//! `beta = 1` is the Gaussian.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Smallest admissible shape parameter.
pub const BETA_MIN: f64 = 0.1;
/// Largest admissible shape parameter.
pub const BETA_MAX: f64 = 5.0;

const SYMMETRY_TOL: f64 = 1e-12;

/// Log of the normalizing constant `C_p(beta)`, evaluated in log-space.
pub fn log_norm_const(p: usize, beta: f64) -> Result<f64> {
    if p < 1 {
        return Err(Error::Domain(format!("dimension must be >= 1, got {p}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("shape must be positive, got {beta}")));
    }
    let half_p = p as f64 / 2.0;
    let a = half_p / beta;
    Ok(ln_gamma(half_p) + beta.ln()
        - half_p * std::f64::consts::PI.ln()
        - ln_gamma(a)
        - a * std::f64::consts::LN_2)
}

/// Parameters of one generalized Gaussian component.
///
/// The Cholesky factor and log-determinant of `sigma` are computed once at
/// construction; non-SPD input is rejected.
#[derive(Debug, Clone)]
pub struct GgdParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    beta: f64,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

impl PartialEq for GgdParams {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu && self.sigma == other.sigma && self.beta == other.beta
    }
}

impl GgdParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, beta: f64) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::Domain("empty mean vector".into()));
        }
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.nrows().max(sigma.ncols()),
            });
        }
        if !(BETA_MIN..=BETA_MAX).contains(&beta) {
            return Err(Error::Domain(format!(
                "shape {beta} outside [{BETA_MIN}, {BETA_MAX}]"
            )));
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite parameter".into()));
        }
        check_symmetric(&sigma)?;
        let (chol_l, log_det) = cholesky(&sigma)?;
        Ok(Self {
            mu,
            sigma,
            beta,
            chol_l,
            log_det,
        })
    }

    /// Standard Gaussian in `p` dimensions.
    pub fn standard(p: usize) -> Self {
        Self::new(DVector::zeros(p), DMatrix::identity(p, p), 1.0).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Lower-triangular `L` with `L L^T = sigma`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Same location and scatter, different shape.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(BETA_MIN..=BETA_MAX).contains(&beta) {
            return Err(Error::Domain(format!(
                "shape {beta} outside [{BETA_MIN}, {BETA_MAX}]"
            )));
        }
        let mut out = self.clone();
        out.beta = beta;
        Ok(out)
    }

    /// `(x-mu)^T sigma^{-1} (x-mu)` via a triangular solve.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let diff = x - &self.mu;
        let z = self
            .chol_l
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Numerical("singular factor".into()))?;
        Ok(z.norm_squared())
    }

    /// Mahalanobis forms for every column of `data` (one sample per column).
    pub fn mahalanobis_sq_batch(&self, data: &DMatrix<f64>) -> Result<Vec<f64>> {
        if data.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.nrows(),
            });
        }
        let mut diff = data.clone();
        for mut col in diff.column_iter_mut() {
            col -= &self.mu;
        }
        if !self.chol_l.solve_lower_triangular_mut(&mut diff) {
            return Err(Error::Numerical("singular factor".into()));
        }
        Ok(diff.column_iter().map(|c| c.norm_squared()).collect())
    }

    /// Log-density given a precomputed Mahalanobis form.
    pub fn log_pdf_from_delta(&self, delta: f64) -> f64 {
        let lc = log_norm_const(self.dim(), self.beta).expect("validated at construction");
        lc - 0.5 * self.log_det - 0.5 * delta.powf(self.beta)
    }

    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let delta = self.mahalanobis_sq(x)?;
        Ok(self.log_pdf_from_delta(delta))
    }

    pub fn log_pdf_batch(&self, data: &DMatrix<f64>) -> Result<Vec<f64>> {
        let lc = log_norm_const(self.dim(), self.beta)?;
        let base = lc - 0.5 * self.log_det;
        Ok(self
            .mahalanobis_sq_batch(data)?
            .into_iter()
            .map(|d| base - 0.5 * d.powf(self.beta))
            .collect())
    }

    /// Draws `n` samples (one per column) through the stochastic representation
    /// `mu + sqrt(delta) L u`, with `delta^beta ~ Gamma(p/(2 beta), scale 2)` and
    /// `u` uniform on the unit sphere.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::Domain("sample count must be >= 1".into()));
        }
        let p = self.dim();
        let radial = Gamma::new(p as f64 / (2.0 * self.beta), 2.0)
            .map_err(|e| Error::Domain(e.to_string()))?;
        let mut out = DMatrix::zeros(p, n);
        let mut u = DVector::zeros(p);
        for mut col in out.column_iter_mut() {
            loop {
                for v in u.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = u.norm();
                if norm > 0.0 {
                    u /= norm;
                    break;
                }
            }
            let s: f64 = radial.sample(rng);
            let r = s.powf(1.0 / self.beta).sqrt();
            col.copy_from(&(&self.mu + (&self.chol_l * &u) * r));
        }
        Ok(out)
    }
}

/// Covariance multiplier `E[x x^T] = m(beta, p) sigma` for a centred GGD.
pub fn covariance_scale(p: usize, beta: f64) -> f64 {
    let pf = p as f64;
    (std::f64::consts::LN_2 / beta + ln_gamma((pf + 2.0) / (2.0 * beta))
        - ln_gamma(pf / (2.0 * beta)))
    .exp()
        / pf
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSpd(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Cholesky factor and log-determinant; `NotSpd` if any pivot is non-positive.
pub(crate) fn cholesky(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotSpd("Cholesky factorization failed".into()))?;
    let l = chol.unpack();
    let mut log_det = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd(format!("pivot {i} is {d}")));
        }
        log_det += 2.0 * d.ln();
    }
    Ok((l, log_det))
}

/// Symmetrizes in place: `(m + m^T) / 2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Serialized form of one component.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GgdRecord {
    pub mu: Vec<f64>,
    /// Row-major, full `p x p`.
    pub sigma: Vec<f64>,
    pub beta: f64,
}

impl From<&GgdParams> for GgdRecord {
    fn from(g: &GgdParams) -> Self {
        let p = g.dim();
        let mut sigma = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                sigma.push(g.sigma[(i, j)]);
            }
        }
        Self {
            mu: g.mu.iter().copied().collect(),
            sigma,
            beta: g.beta,
        }
    }
}

impl TryFrom<&GgdRecord> for GgdParams {
    type Error = Error;

    fn try_from(r: &GgdRecord) -> Result<Self> {
        let p = r.mu.len();
        if r.sigma.len() != p * p {
            return Err(Error::Model(format!(
                "sigma has {} entries, expected {}",
                r.sigma.len(),
                p * p
            )));
        }
        let sigma = DMatrix::from_row_slice(p, p, &r.sigma);
        GgdParams::new(DVector::from_column_slice(&r.mu), sigma, r.beta)
            .map_err(|e| Error::Model(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ggd1(mu: f64, var: f64, beta: f64) -> GgdParams {
        GgdParams::new(DVector::from_element(1, mu), DMatrix::from_element(1, 1, var), beta)
            .unwrap()
    }

    #[test]
    fn norm_const_values() {
        assert_abs_diff_eq!(log_norm_const(1, 1.0).unwrap(), -0.918_938_533_204_672_7, epsilon = 1e-12);
        assert_abs_diff_eq!(log_norm_const(2, 1.0).unwrap(), -1.837_877_066_409_345_5, epsilon = 1e-12);
        assert_abs_diff_eq!(log_norm_const(1, 0.5).unwrap(), 0.25f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn norm_const_errors_and_large_p() {
        assert!(log_norm_const(0, 1.0).is_err());
        assert!(log_norm_const(3, 0.0).is_err());
        assert!(log_norm_const(3, -1.0).is_err());
        // p = 80 at the smallest shape is finite
        assert!(log_norm_const(80, BETA_MIN).unwrap().is_finite());
        assert!(log_norm_const(2000, BETA_MIN).unwrap().is_finite());
    }

    #[test]
    fn mahalanobis_examples() {
        let g = GgdParams::new(DVector::from_vec(vec![1.0, -1.0]), DMatrix::identity(2, 2), 1.0)
            .unwrap();
        assert_eq!(g.mahalanobis_sq(&DVector::from_vec(vec![1.0, -1.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            g.mahalanobis_sq(&DVector::from_vec(vec![2.0, -1.0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let g = GgdParams::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(
            g.mahalanobis_sq(&DVector::from_vec(vec![2.0, 0.0])).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert!(matches!(
            g.mahalanobis_sq(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn log_pdf_examples() {
        assert_abs_diff_eq!(
            ggd1(0.0, 1.0, 1.0).log_pdf(&DVector::from_element(1, 0.0)).unwrap(),
            -0.918_938_533_204_672_7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ggd1(0.0, 1.0, 0.5).log_pdf(&DVector::from_element(1, 2.0)).unwrap(),
            -2.386_294_361_119_890_6,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            GgdParams::new(DVector::zeros(2), asym, 1.0),
            Err(Error::NotSpd(_))
        ));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GgdParams::new(DVector::zeros(2), indef, 1.0),
            Err(Error::NotSpd(_))
        ));
        assert!(GgdParams::new(DVector::zeros(2), DMatrix::identity(2, 2), 0.05).is_err());
        assert!(GgdParams::new(DVector::zeros(2), DMatrix::identity(2, 2), 6.0).is_err());
        assert!(GgdParams::new(DVector::zeros(3), DMatrix::identity(2, 2), 1.0).is_err());
    }

    #[test]
    fn sample_is_deterministic() {
        let g = ggd1(0.0, 1.0, 0.7);
        assert_eq!(g.sample(50, 9).unwrap(), g.sample(50, 9).unwrap());
        assert_ne!(g.sample(50, 9).unwrap(), g.sample(50, 10).unwrap());
        assert!(g.sample(0, 1).is_err());
    }

    #[test]
    fn sample_mean_within_three_standard_errors() {
        let g = GgdParams::new(
            DVector::from_vec(vec![1.5, -2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]),
            0.5,
        )
        .unwrap();
        let n = 100_000;
        let x = g.sample(n, 3).unwrap();
        let m = covariance_scale(2, 0.5);
        for i in 0..2 {
            let mean = x.row(i).mean();
            let se = (m * g.sigma()[(i, i)] / n as f64).sqrt();
            assert!((mean - g.mu()[i]).abs() < 3.0 * se, "coord {i}: {mean}");
        }
    }

    #[test]
    fn quadrature_normalizes() {
        for &beta in &[0.5, 1.0, 2.0] {
            let g = ggd1(0.3, 1.7, beta);
            let n = 400_000;
            let (a, b) = (-40.0, 40.0);
            let h = (b - a) / n as f64;
            // composite Simpson
            let f = |t: f64| g.log_pdf(&DVector::from_element(1, t)).unwrap().exp();
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + i as f64 * h);
            }
            let integral = s * h / 3.0;
            assert!((integral - 1.0).abs() < 1e-6, "beta {beta}: {integral}");
        }
    }

    #[test]
    fn record_round_trip() {
        let g = GgdParams::new(
            DVector::from_vec(vec![0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            0.8,
        )
        .unwrap();
        let r = GgdRecord::from(&g);
        let back = GgdParams::try_from(&r).unwrap();
        assert_eq!(back, g);
        let bad = GgdRecord { sigma: vec![1.0], ..r };
        assert!(GgdParams::try_from(&bad).is_err());
    }

    fn gaussian_log_pdf(x: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> f64 {
        let p = x.len() as f64;
        let inv = sigma.clone().try_inverse().unwrap();
        let d = x - mu;
        let q = (d.transpose() * inv * &d)[(0, 0)];
        -0.5 * p * (2.0 * std::f64::consts::PI).ln() - 0.5 * sigma.determinant().ln() - 0.5 * q
    }

    fn spd_strategy(p: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, p * p).prop_map(move |v| {
            let a = DMatrix::from_vec(p, p, v);
            &a * a.transpose() + DMatrix::identity(p, p) * 0.5
        })
    }

    proptest! {
        #[test]
        fn gaussian_equivalence(
            (x, mu, sigma) in (1usize..=5).prop_flat_map(|p| (
                prop::collection::vec(-3.0f64..3.0, p),
                prop::collection::vec(-3.0f64..3.0, p),
                spd_strategy(p),
            ))
        ) {
            let x = DVector::from_vec(x);
            let mu = DVector::from_vec(mu);
            let g = GgdParams::new(mu.clone(), sigma.clone(), 1.0).unwrap();
            let ours = g.log_pdf(&x).unwrap();
            let reference = gaussian_log_pdf(&x, &mu, &sigma);
            prop_assert!((ours - reference).abs() < 1e-10, "{} vs {}", ours, reference);
        }

        #[test]
        fn translation_invariance(
            shift in prop::collection::vec(-100.0f64..100.0, 3),
            x in prop::collection::vec(-3.0f64..3.0, 3),
            beta in 0.3f64..3.0,
        ) {
            let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
            let x = DVector::from_vec(x);
            let shift = DVector::from_vec(shift);
            let g0 = GgdParams::new(DVector::zeros(3), sigma.clone(), beta).unwrap();
            let g1 = GgdParams::new(shift.clone(), sigma, beta).unwrap();
            let a = g0.log_pdf(&x).unwrap();
            let b = g1.log_pdf(&(&x + &shift)).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }
}
