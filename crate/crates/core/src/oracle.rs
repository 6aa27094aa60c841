//! Exact moments of the linear SDE `du = -L u dt + Σ dW`.
//!
//! With `L = V diag(λ) Vᵀ` the process is a multivariate Ornstein-Uhlenbeck
//! process whose mean and covariance have closed forms in the eigenbasis:
//!
//! ```text
//! E[u(t)]  = V e^{-λt} Vᵀ u0
//! Cov(t)   = V C̃ Vᵀ,   C̃_jk = (Vᵀ Σ² V)_jk · g(λ_j + λ_k, t)
//! g(μ, t)  = (1 - e^{-μt}) / μ,   g(0, t) = t
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_len, Result, SmcfError};
use crate::graph::Network;

/// Below this, `λ_j + λ_k` is treated as an exact null-space sum.
pub const NULL_EIGEN_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

/// Row-major copy of a matrix, for serialization.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone)]
pub struct SpectralOracle {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    sigma: Vec<f64>,
    /// `Vᵀ Σ² V`, cached.
    noise_in_eigenbasis: DMatrix<f64>,
}

impl SpectralOracle {
    /// Eigendecomposes a symmetric matrix; eigenvalues come out ascending.
    pub fn decompose(l: &DMatrix<f64>, sigma: &[f64]) -> Result<Self> {
        let n = l.nrows();
        if l.ncols() != n {
            return Err(SmcfError::InvalidArgument(format!(
                "matrix is {}x{}, not square",
                n,
                l.ncols()
            )));
        }
        check_len(n, sigma.len())?;
        let scale = l.amax().max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (l[(i, j)] - l[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(SmcfError::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }

        let eig = SymmetricEigen::new(l.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            // Fix the sign so the largest-magnitude entry is positive.
            let lead = col.iamax();
            if col[lead] < 0.0 {
                col.neg_mut();
            }
            eigenvectors.set_column(dst, &col);
        }

        let sigma2 = DMatrix::from_diagonal(&DVector::from_iterator(n, sigma.iter().map(|s| s * s)));
        let noise_in_eigenbasis = eigenvectors.transpose() * sigma2 * &eigenvectors;
        Ok(Self {
            eigenvalues,
            eigenvectors,
            sigma: sigma.to_vec(),
            noise_in_eigenbasis,
        })
    }

    pub fn for_network(net: &Network, sigma: &[f64]) -> Result<Self> {
        Self::decompose(&net.laplacian_matrix(), sigma)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are orthonormal eigenvectors in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Smallest eigenvalue above the null-space tolerance, if any.
    pub fn smallest_positive(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&l| l >= NULL_EIGEN_TOL)
    }

    pub fn null_dimension(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < NULL_EIGEN_TOL).count()
    }

    fn check_time(t: f64) -> Result<()> {
        if t.is_finite() && t >= 0.0 {
            Ok(())
        } else {
            Err(SmcfError::InvalidArgument(format!("time must be >= 0, got {t}")))
        }
    }

    /// `e^{-L t} u0`.
    pub fn exact_mean(&self, u0: &[f64], t: f64) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        check_len(self.dim(), u0.len())?;
        let u0 = DVector::from_column_slice(u0);
        let mut coeffs = self.eigenvectors.tr_mul(&u0);
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= (-l * t).exp();
        }
        Ok((&self.eigenvectors * coeffs).as_slice().to_vec())
    }

    /// `∫_0^t e^{-Ls} Σ² e^{-Ls} ds`.
    pub fn exact_covariance(&self, t: f64) -> Result<DMatrix<f64>> {
        Self::check_time(t)?;
        let n = self.dim();
        let mut c = self.noise_in_eigenbasis.clone();
        for j in 0..n {
            for k in 0..n {
                c[(j, k)] *= growth(self.eigenvalues[j] + self.eigenvalues[k], t);
            }
        }
        Ok(self.to_site_basis(&c))
    }

    /// Long-time covariance of the deviation from the null-space component.
    /// Rows and columns of null modes are zero in the eigenbasis.
    pub fn stationary_deviation_covariance(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut c = self.noise_in_eigenbasis.clone();
        for j in 0..n {
            for k in 0..n {
                let (lj, lk) = (self.eigenvalues[j], self.eigenvalues[k]);
                c[(j, k)] = if lj < NULL_EIGEN_TOL || lk < NULL_EIGEN_TOL {
                    0.0
                } else {
                    c[(j, k)] / (lj + lk)
                };
            }
        }
        self.to_site_basis(&c)
    }

    /// Variance of the component along the unit vector `direction`.
    pub fn variance_along(&self, cov: &DMatrix<f64>, direction: &[f64]) -> f64 {
        let d = DVector::from_column_slice(direction);
        (d.transpose() * cov * &d)[(0, 0)]
    }

    fn to_site_basis(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let out = &self.eigenvectors * c * self.eigenvectors.transpose();
        // Symmetrize away round-off.
        (&out + out.transpose()) * 0.5
    }
}

/// `g(μ, t) = (1 - e^{-μt}) / μ`, continuous at `μ = 0`.
fn growth(mu: f64, t: f64) -> f64 {
    if mu < NULL_EIGEN_TOL {
        t
    } else {
        -(-mu * t).exp_m1() / mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn path_oracle(n: usize, sigma: f64) -> SpectralOracle {
        SpectralOracle::for_network(&Network::path(n).unwrap(), &vec![sigma; n]).unwrap()
    }

    #[test]
    fn two_site_decomposition() {
        let o = path_oracle(2, 1.0);
        assert!(o.eigenvalues()[0].abs() < 1e-14);
        assert!((o.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        let v = o.eigenvectors();
        assert!((v[(0, 0)] - h).abs() < 1e-14 && (v[(1, 0)] - h).abs() < 1e-14);
        assert!((v[(0, 1)].abs() - h).abs() < 1e-14);
        assert!((v[(0, 1)] + v[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn path_eigenvalues_match_closed_form() {
        for n in [3, 10] {
            let o = path_oracle(n, 0.1);
            for (k, l) in o.eigenvalues().iter().enumerate() {
                let closed = 2.0 * (1.0 - (k as f64 * PI / n as f64).cos());
                assert!((l - closed).abs() < 1e-12, "n={n} k={k}");
            }
        }
        let o = path_oracle(10, 0.1);
        assert!((o.lambda_max() - 3.902113032590307).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SpectralOracle::decompose(&a, &[0.1, 0.1]).is_err());
        let o = path_oracle(3, 0.1);
        assert!(o.exact_mean(&[0.0; 3], -1.0).is_err());
        assert!(o.exact_covariance(-0.5).is_err());
        assert!(o.exact_mean(&[0.0; 2], 1.0).is_err());
    }

    #[test]
    fn mean_examples() {
        let o = path_oracle(3, 0.1);
        let u0 = [0.3, -1.0, 2.0];
        assert_eq!(o.exact_mean(&u0, 0.0).unwrap().len(), 3);
        for (a, b) in o.exact_mean(&u0, 0.0).unwrap().iter().zip(&u0) {
            assert!((a - b).abs() < 1e-14);
        }
        for x in o.exact_mean(&[1.5; 3], 7.0).unwrap() {
            assert!((x - 1.5).abs() < 1e-13);
        }
    }

    #[test]
    fn covariance_examples() {
        let o = path_oracle(5, 0.1);
        assert!(o.exact_covariance(0.0).unwrap().amax() < 1e-18);

        let single = SpectralOracle::for_network(&Network::from_pairs(1, []).unwrap(), &[0.1]).unwrap();
        assert!((single.exact_covariance(1.0).unwrap()[(0, 0)] - 0.01).abs() < 1e-15);

        let o = path_oracle(10, 0.1);
        let mean_dir = vec![0.1; 10];
        let var = o.variance_along(&o.exact_covariance(1.0).unwrap(), &mean_dir);
        assert!((var - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn stationary_examples() {
        let s = 0.3;
        let two = path_oracle(2, s).stationary_deviation_covariance();
        // Deviation mode (1,-1)/√2 carries variance s²/4; in site basis that is
        // s²/8 on the diagonal and -s²/8 off it.
        assert!((two[(0, 0)] - s * s / 8.0).abs() < 1e-15);
        assert!((two[(0, 1)] + s * s / 8.0).abs() < 1e-15);

        assert!(path_oracle(4, 0.0).stationary_deviation_covariance().amax() == 0.0);

        let three = path_oracle(3, s).stationary_deviation_covariance();
        assert!((three.trace() - s * s * (0.5 + 1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn disconnected_graph_has_repeated_zero() {
        let net = Network::from_pairs(5, [(0, 1), (2, 3), (3, 4)]).unwrap();
        let o = SpectralOracle::for_network(&net, &[0.2; 5]).unwrap();
        assert_eq!(o.null_dimension(), 2);
        assert_eq!(o.smallest_positive().map(|l| (l - 1.0).abs() < 1e-12), Some(true));
    }
}
