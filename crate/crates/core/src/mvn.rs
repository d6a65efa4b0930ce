//! Multivariate Gaussians in moment and natural (information) form.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Cholesky, Matrix};
use crate::{Error, Gaussian1D, Result};

/// Relative symmetry tolerance accepted on covariance and precision inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultivariateGaussian {
    mean: Vec<f64>,
    covariance: Matrix,
}

/// Information form: `precision = Sigma^{-1}`, `precision_mean = Sigma^{-1} mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalGaussian {
    pub precision: Matrix,
    pub precision_mean: Vec<f64>,
}

fn check_square(mean_len: usize, m: &Matrix, what: &str) -> Result<()> {
    if mean_len == 0 {
        return Err(Error::domain("gaussian dimension must be at least 1"));
    }
    if m.dim() != mean_len {
        return Err(Error::domain(alloc::format!("{what} dimension does not match mean")));
    }
    if !m.is_finite() {
        return Err(Error::domain(alloc::format!("{what} has non-finite entries")));
    }
    if m.asymmetry() > SYMMETRY_TOL {
        return Err(Error::domain(alloc::format!("{what} is not symmetric")));
    }
    Ok(())
}

impl MultivariateGaussian {
    /// Validates symmetry and positive definiteness.
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        check_square(mean.len(), &covariance, "covariance")?;
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("mean has non-finite entries"));
        }
        covariance.cholesky()?;
        Ok(Self { mean, covariance })
    }

    pub(crate) fn new_unchecked(mean: Vec<f64>, covariance: Matrix) -> Self {
        Self { mean, covariance }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<f64>, &mut Matrix) {
        (&mut self.mean, &mut self.covariance)
    }

    pub fn variances(&self) -> Vec<f64> {
        self.covariance.diag()
    }

    /// The univariate marginal of coordinate `i`.
    pub fn marginal_1d(&self, i: usize) -> Result<Gaussian1D> {
        if i >= self.dim() {
            return Err(Error::domain("marginal index out of range"));
        }
        Gaussian1D::new(self.mean[i], self.covariance[(i, i)])
    }

    pub fn to_natural(&self) -> Result<NaturalGaussian> {
        let chol = self.covariance.cholesky()?;
        let precision = chol.inverse();
        let precision_mean = chol.solve(&self.mean);
        Ok(NaturalGaussian { precision, precision_mean })
    }

    /// A sampler with the covariance factor cached.
    pub fn sampler(&self) -> Result<MvnSampler> {
        Ok(MvnSampler { mean: self.mean.clone(), chol: self.covariance.cholesky()? })
    }
}

impl NaturalGaussian {
    pub fn new(precision: Matrix, precision_mean: Vec<f64>) -> Result<Self> {
        check_square(precision_mean.len(), &precision, "precision")?;
        precision.cholesky()?;
        Ok(Self { precision, precision_mean })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { precision: Matrix::zeros(dim), precision_mean: alloc::vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.precision_mean.len()
    }

    /// Adds another set of natural parameters (conjugate combination).
    pub fn add_assign(&mut self, other: &NaturalGaussian) {
        self.precision.add_assign(&other.precision);
        for (a, b) in self.precision_mean.iter_mut().zip(&other.precision_mean) {
            *a += b;
        }
    }

    pub fn to_moment(&self) -> Result<MultivariateGaussian> {
        let chol = self.precision.cholesky()?;
        let covariance = chol.inverse();
        let mean = chol.solve(&self.precision_mean);
        Ok(MultivariateGaussian::new_unchecked(mean, covariance))
    }
}

pub fn to_natural(mvn: &MultivariateGaussian) -> Result<NaturalGaussian> {
    mvn.to_natural()
}

pub fn from_natural(nat: &NaturalGaussian) -> Result<MultivariateGaussian> {
    nat.to_moment()
}

/// Marginal over `indices`, in the given order.
pub fn mvn_marginal(mvn: &MultivariateGaussian, indices: &[usize]) -> Result<MultivariateGaussian> {
    if indices.is_empty() {
        return Err(Error::domain("marginal needs at least one index"));
    }
    for (n, &i) in indices.iter().enumerate() {
        if i >= mvn.dim() {
            return Err(Error::domain(alloc::format!("marginal index {i} out of range")));
        }
        if indices[..n].contains(&i) {
            return Err(Error::domain(alloc::format!("duplicate marginal index {i}")));
        }
    }
    let mean = indices.iter().map(|&i| mvn.mean[i]).collect();
    Ok(MultivariateGaussian::new_unchecked(mean, mvn.covariance.select(indices)))
}

pub fn mvn_sample<R: Rng + ?Sized>(mvn: &MultivariateGaussian, rng: &mut R) -> Result<Vec<f64>> {
    Ok(mvn.sampler()?.sample(rng))
}

#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: Vec<f64>,
    chol: Cholesky,
}

impl MvnSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.mean.len()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.mean.len();
        let l = self.chol.factor();
        // Fixed-size scratch covers every dimension used in practice.
        let mut z = [0.0f64; 16];
        let mut heap;
        let z: &mut [f64] = if n <= 16 {
            &mut z[..n]
        } else {
            heap = alloc::vec![0.0; n];
            &mut heap
        };
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let mut acc = self.mean[i];
            for k in 0..=i {
                acc += l[(i, k)] * z[k];
            }
            out[i] = acc;
        }
    }
}
