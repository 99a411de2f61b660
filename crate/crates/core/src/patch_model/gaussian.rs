use super::{InnerOffset, PatchCorpus, PatchGeometry};
use crate::error::{validation, Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::rng::Stream;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::sync::Arc;

/// Diagonal regularization added before factorizing covariance blocks.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Patches per partial sum when accumulating the covariance. Fixed so the
/// floating-point summation order does not depend on the thread count.
const FIT_CHUNK: usize = 256;

/// Joint Gaussian over flattened outer patches.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPatchModel<T = f64> {
    geometry: PatchGeometry,
    mean: Vec<T>,
    covariance: Matrix<T>,
    epsilon: T,
    fit_count: u64,
}

impl<T: Scalar> GaussianPatchModel<T> {
    /// Builds a model from explicit parameters, checking symmetry and that
    /// `covariance + εI` is positive definite.
    pub fn from_parts(
        geometry: PatchGeometry,
        mean: Vec<T>,
        covariance: Matrix<T>,
        epsilon: T,
        fit_count: u64,
    ) -> Result<Self> {
        let n = geometry.outer_len();
        if mean.len() != n || covariance.rows() != n || covariance.cols() != n {
            return Err(validation(format!(
                "model parameters do not match geometry: mean {}, covariance {}x{}, expected {n}",
                mean.len(),
                covariance.rows(),
                covariance.cols()
            )));
        }
        if epsilon.is_nan() || epsilon < T::zero() {
            return Err(validation("regularization epsilon must be non-negative"));
        }
        let scale = covariance.as_slice().iter().fold(T::one(), |m, v| m.max(v.abs()));
        if covariance.max_asymmetry() > T::of(1e-12) * scale {
            return Err(validation("covariance matrix is not symmetric"));
        }
        let model = Self { geometry, mean, covariance, epsilon, fit_count };
        let mut reg = model.covariance.clone();
        reg.add_diagonal(epsilon);
        Cholesky::new(&reg).map_err(|e| {
            Error::Numerical(format!("covariance + eps*I is not positive definite ({e}); use a larger epsilon"))
        })?;
        Ok(model)
    }

    /// Sample mean and unbiased sample covariance of the corpus.
    pub fn fit(corpus: &PatchCorpus<T>, epsilon: T) -> Result<Self> {
        let count = corpus.len();
        if count < 2 {
            return Err(validation("fitting a Gaussian needs at least two patches"));
        }
        let n = corpus.geometry().outer_len();
        let mut mean = vec![T::zero(); n];
        for p in corpus.patches() {
            for (m, &v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let inv = T::one() / T::of(count as f64);
        mean.iter_mut().for_each(|m| *m *= inv);

        let chunks: Vec<usize> = (0..count).step_by(FIT_CHUNK).collect();
        let partials: Vec<Vec<T>> = chunks
            .par_iter()
            .map(|&start| {
                let mut acc = vec![T::zero(); n * (n + 1) / 2];
                let mut centered = vec![T::zero(); n];
                for i in start..(start + FIT_CHUNK).min(count) {
                    for ((c, &v), &m) in centered.iter_mut().zip(corpus.patch(i)).zip(&mean) {
                        *c = v - m;
                    }
                    // Packed lower triangle, row by row.
                    let mut k = 0;
                    for r in 0..n {
                        let cr = centered[r];
                        for (a, &cc) in acc[k..k + r + 1].iter_mut().zip(&centered[..=r]) {
                            *a += cr * cc;
                        }
                        k += r + 1;
                    }
                }
                acc
            })
            .collect();
        let mut packed = vec![T::zero(); n * (n + 1) / 2];
        for part in &partials {
            for (a, &b) in packed.iter_mut().zip(part) {
                *a += b;
            }
        }
        let denom = T::one() / T::of((count - 1) as f64);
        let mut covariance = Matrix::zeros(n, n);
        let mut k = 0;
        for r in 0..n {
            for c in 0..=r {
                let v = packed[k] * denom;
                covariance[(r, c)] = v;
                covariance[(c, r)] = v;
                k += 1;
            }
        }
        Self::from_parts(corpus.geometry(), mean, covariance, epsilon, count as u64)
    }

    pub fn geometry(&self) -> PatchGeometry {
        self.geometry
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn fit_count(&self) -> u64 {
        self.fit_count
    }

    /// Precomputes everything about conditioning that depends only on where
    /// the inner block sits in the outer patch.
    pub fn conditioner(&self, offset: InnerOffset) -> Result<Conditioner<T>> {
        self.geometry.check_offset(offset)?;
        let inner = self.geometry.inner_indices(offset);
        let outer = self.geometry.outer_only_indices(offset);

        let mut sigma_oo = self.covariance.select(&outer, &outer);
        sigma_oo.add_diagonal(self.epsilon);
        let chol_oo = Cholesky::new(&sigma_oo).map_err(|e| {
            Error::Numerical(format!("conditioning block not positive definite ({e}); use a larger epsilon"))
        })?;

        // gain = Σ_io Σ_oo⁻¹, one row per inner index (Σ_oo symmetric).
        let sigma_io = self.covariance.select(&inner, &outer);
        let n_in = inner.len();
        let n_out = outer.len();
        let mut gain = Vec::with_capacity(n_in * n_out);
        for i in 0..n_in {
            gain.extend(chol_oo.solve(sigma_io.row(i)));
        }
        let gain = Matrix::from_vec(n_in, n_out, gain)?;

        let sigma_ii = self.covariance.select(&inner, &inner);
        let mut cond_cov = Matrix::zeros(n_in, n_in);
        for a in 0..n_in {
            for b in 0..=a {
                let ab = sigma_ii[(a, b)] - dot(gain.row(a), sigma_io.row(b));
                let ba = sigma_ii[(b, a)] - dot(gain.row(b), sigma_io.row(a));
                let v = (ab + ba) * T::of(0.5);
                cond_cov[(a, b)] = v;
                cond_cov[(b, a)] = v;
            }
        }
        let factor = regularized_factor(&cond_cov, self.epsilon)?;
        let inner_mean = inner.iter().map(|&i| self.mean[i]).collect();
        let outer_mean = outer.iter().map(|&i| self.mean[i]).collect();
        Ok(Conditioner {
            offset,
            inner,
            outer,
            inner_mean,
            outer_mean,
            gain,
            covariance: Arc::new(cond_cov),
            factor: Arc::new(factor),
        })
    }

    /// Distribution of the inner block given the rest of the outer patch.
    /// `outer_values` is a full outer-patch vector; its inner entries are ignored.
    pub fn condition(&self, outer_values: &[T], offset: InnerOffset) -> Result<ConditionalGaussian<T>> {
        self.conditioner(offset)?.condition(outer_values)
    }
}

fn regularized_factor<T: Scalar>(cov: &Matrix<T>, epsilon: T) -> Result<Cholesky<T>> {
    let mut reg = cov.clone();
    reg.add_diagonal(epsilon);
    let scale = (0..cov.rows()).fold(T::zero(), |m, i| m.max(cov[(i, i)].abs()));
    // Round-off in Σ_ii − Σ_io Σ_oo⁻¹ Σ_oi can leave tiny negative pivots.
    Cholesky::new_semidefinite(&reg, T::of(1e-12) * (scale + T::one()))
        .map_err(|e| Error::Numerical(format!("conditional covariance factorization failed ({e}); use a larger epsilon")))
}

/// Offset-specific conditioning data, reusable across windows.
#[derive(Debug, Clone)]
pub struct Conditioner<T = f64> {
    offset: InnerOffset,
    inner: Vec<usize>,
    outer: Vec<usize>,
    inner_mean: Vec<T>,
    outer_mean: Vec<T>,
    /// `Σ_io Σ_oo⁻¹`
    gain: Matrix<T>,
    covariance: Arc<Matrix<T>>,
    factor: Arc<Cholesky<T>>,
}

impl<T: Scalar> Conditioner<T> {
    pub fn offset(&self) -> InnerOffset {
        self.offset
    }

    pub fn inner_indices(&self) -> &[usize] {
        &self.inner
    }

    pub fn condition(&self, outer_values: &[T]) -> Result<ConditionalGaussian<T>> {
        let n = self.inner.len() + self.outer.len();
        if outer_values.len() != n {
            return Err(validation(format!("outer patch has {} values, expected {n}", outer_values.len())));
        }
        let residual: Vec<T> =
            self.outer.iter().zip(&self.outer_mean).map(|(&i, &m)| outer_values[i] - m).collect();
        let shift = self.gain.mul_vec(&residual);
        let mean = self.inner_mean.iter().zip(shift).map(|(&m, s)| m + s).collect();
        Ok(ConditionalGaussian { mean, covariance: Arc::clone(&self.covariance), factor: Arc::clone(&self.factor) })
    }
}

/// Gaussian over the inner block, with a factor of its regularized covariance.
#[derive(Debug, Clone)]
pub struct ConditionalGaussian<T = f64> {
    mean: Vec<T>,
    covariance: Arc<Matrix<T>>,
    factor: Arc<Cholesky<T>>,
}

impl<T: Scalar> ConditionalGaussian<T> {
    /// Direct construction; `covariance + εI` must be positive semi-definite.
    pub fn new(mean: Vec<T>, covariance: Matrix<T>, epsilon: T) -> Result<Self> {
        if covariance.rows() != mean.len() || covariance.cols() != mean.len() {
            return Err(validation("conditional covariance does not match mean length"));
        }
        let factor = regularized_factor(&covariance, epsilon)?;
        Ok(Self { mean, covariance: Arc::new(covariance), factor: Arc::new(factor) })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    pub fn factor(&self) -> &Cholesky<T> {
        &self.factor
    }

    /// One unclamped draw `μ + L z`.
    pub fn sample_raw(&self, stream: &mut Stream) -> Vec<T> {
        let z: Vec<T> = (0..self.mean.len()).map(|_| T::of(stream.standard_normal())).collect();
        self.factor.mul_lower(&z).into_iter().zip(&self.mean).map(|(d, &m)| m + d).collect()
    }

    /// `count` draws, each component clamped to `[0, 1]`.
    pub fn sample(&self, count: usize, stream: &mut Stream) -> Vec<Vec<T>> {
        (0..count)
            .map(|_| {
                let mut s = self.sample_raw(stream);
                s.iter_mut().for_each(|v| *v = v.max(T::zero()).min(T::one()));
                s
            })
            .collect()
    }
}
