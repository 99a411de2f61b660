//! Model files: `"PDGM"`, u32 k, u32 l, u32 channels, f64 epsilon,
//! u64 fit count, f64 mean[n], f64 covariance[n*n] (row-major), with
//! `n = l*l*channels`. All little-endian.

use super::{GaussianPatchModel, PatchGeometry};
use crate::binio::{Reader, Writer};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use std::path::Path;

pub const MODEL_MAGIC: &[u8; 4] = b"PDGM";

pub fn save_model<T: Scalar>(model: &GaussianPatchModel<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<GaussianPatchModel<T>> {
    parse_model(&std::fs::read(path)?)
}

pub fn parse_model<T: Scalar>(bytes: &[u8]) -> Result<GaussianPatchModel<T>> {
    let mut r = Reader::new(bytes, "model file");
    r.expect_magic(MODEL_MAGIC)?;
    let k = r.usize32()?;
    let l = r.usize32()?;
    let c = r.usize32()?;
    let geometry = PatchGeometry::new(k, l, c)?;
    let epsilon = T::of(r.f64()?);
    let fit_count = r.u64()?;
    let n = geometry.outer_len();
    let mean = r.f64s(n)?.into_iter().map(T::of).collect();
    let cov = r.f64s(n * n)?.into_iter().map(T::of).collect();
    r.finish()?;
    GaussianPatchModel::from_parts(geometry, mean, Matrix::from_vec(n, n, cov)?, epsilon, fit_count)
}

/// Binary model file contents.
pub fn encode_model<T: Scalar>(m: &GaussianPatchModel<T>) -> Vec<u8> {
    let mut w = Writer::default();
    let g = m.geometry();
    w.bytes(MODEL_MAGIC);
    w.usize32(g.inner());
    w.usize32(g.outer());
    w.usize32(g.channels());
    w.f64(m.epsilon().to_f64_lossy());
    w.u64(m.fit_count());
    w.f64s(m.mean().iter().map(|v| v.to_f64_lossy()));
    w.f64s(m.covariance().as_slice().iter().map(|v| v.to_f64_lossy()));
    w.buf
}
