//! PCA eigenspace over vectorized feature images.
//!
//! The covariance is normalized by `n`. When there are no more samples than
//! pixels the decomposition runs on the `n`x`n` Gram matrix of centered
//! samples (the snapshot method) and eigenvectors are mapped back through the
//! data; otherwise the `d`x`d` covariance is decomposed directly.

mod symmetric;

pub use symmetric::{symmetric_eigen, SymmetricEigen};

use crate::error::{Error, Result};
use crate::image::Image;

pub const DEFAULT_K_MAX: usize = 40;
/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// Mean face, orthonormal eigenface basis and eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenModel {
    height: usize,
    width: usize,
    mean: Vec<f64>,
    /// Column-major `d x k`: component `i` occupies `basis[i*d..(i+1)*d]`.
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaMethod {
    /// Snapshot when `n <= d`, direct otherwise.
    Auto,
    Snapshot,
    Direct,
}

#[derive(Debug, Clone, Copy)]
pub struct PcaOptions {
    pub k_max: usize,
    pub method: PcaMethod,
    pub rank_tolerance: f64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            k_max: DEFAULT_K_MAX,
            method: PcaMethod::Auto,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }
}

/// A fitted model plus the full, unclamped eigenvalue spectrum it was cut from.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub model: EigenModel,
    pub spectrum: Vec<f64>,
    pub method: PcaMethod,
}

/// Fits with default options apart from `k_max`.
pub fn fit_pca(training: &[Image], k_max: usize) -> Result<EigenModel> {
    Ok(fit(
        training,
        &PcaOptions {
            k_max,
            ..PcaOptions::default()
        },
    )?
    .model)
}

pub fn fit(training: &[Image], opts: &PcaOptions) -> Result<PcaFit> {
    if training.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "PCA needs at least 2 training images, got {}",
            training.len()
        )));
    }
    if opts.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let (height, width) = training[0].dims();
    if let Some(bad) = training.iter().find(|img| img.dims() != (height, width)) {
        return Err(Error::DimensionMismatch(format!(
            "training images must share dimensions: {height}x{width} vs {}x{}",
            bad.height(),
            bad.width()
        )));
    }
    let n = training.len();
    let d = height * width;

    let mut mean = vec![0.0; d];
    for img in training {
        for (m, p) in mean.iter_mut().zip(img.pixels()) {
            *m += p;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = training
        .iter()
        .map(|img| img.pixels().iter().zip(&mean).map(|(p, m)| p - m).collect())
        .collect();

    let method = match opts.method {
        PcaMethod::Auto if n <= d => PcaMethod::Snapshot,
        PcaMethod::Auto => PcaMethod::Direct,
        m => m,
    };
    let (spectrum, vectors) = match method {
        PcaMethod::Snapshot => snapshot_eigen(&centered, d),
        _ => direct_eigen(&centered, d),
    };

    let lambda_max = spectrum.first().copied().unwrap_or(0.0);
    let data_scale = training.iter().map(Image::max_abs).fold(0.0, f64::max);
    let noise_floor = (f64::EPSILON * data_scale).powi(2) * d as f64;
    if !(lambda_max > noise_floor) {
        return Err(Error::DegenerateTraining(
            "training images have zero variance".into(),
        ));
    }
    let rank = spectrum
        .iter()
        .take_while(|&&l| l > opts.rank_tolerance * lambda_max)
        .count();
    let k = opts.k_max.min(rank).min(n - 1);
    if k < opts.k_max {
        log::warn!(
            "PCA keeps {k} of the requested {} components (rank {rank}, {n} samples)",
            opts.k_max
        );
    }

    let mut basis = Vec::with_capacity(k * d);
    for v in vectors.iter().take(k) {
        basis.extend(fix_sign(v.clone()));
    }
    let eigenvalues = spectrum.iter().take(k).map(|&l| l.max(0.0)).collect();

    Ok(PcaFit {
        model: EigenModel {
            height,
            width,
            mean,
            basis,
            eigenvalues,
        },
        spectrum,
        method,
    })
}

/// Eigenpairs of the `n`x`n` Gram matrix, lifted to pixel space.
fn snapshot_eigen(centered: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = centered.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let g = dot(&centered[i], &centered[j]) / n as f64;
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let eig = symmetric_eigen(&gram, n);
    let vectors = eig
        .vectors
        .iter()
        .map(|u| {
            let mut v = vec![0.0; d];
            for (coef, x) in u.iter().zip(centered) {
                for (vi, xi) in v.iter_mut().zip(x) {
                    *vi += coef * xi;
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v
        })
        .collect();
    (eig.values, vectors)
}

fn direct_eigen(centered: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = centered.len() as f64;
    let mut cov = vec![0.0; d * d];
    for x in centered {
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &mut cov[i * d..i * d + i + 1];
            for (c, xj) in row.iter_mut().zip(x) {
                *c += xi * xj;
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let c = cov[i * d + j] / n;
            cov[i * d + j] = c;
            cov[j * d + i] = c;
        }
    }
    let eig = symmetric_eigen(&cov, d);
    (eig.values, eig.vectors)
}

/// Makes the largest-magnitude entry positive (first one on ties).
fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl EigenModel {
    /// Assembles a model from raw parts, checking shapes and finiteness.
    pub fn from_parts(
        height: usize,
        width: usize,
        mean: Vec<f64>,
        basis: Vec<f64>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        let d = height * width;
        let k = eigenvalues.len();
        if d == 0 || mean.len() != d || basis.len() != d * k {
            return Err(Error::DimensionMismatch(format!(
                "eigen model {height}x{width} with k={k}: mean {}, basis {}",
                mean.len(),
                basis.len()
            )));
        }
        if mean.iter().chain(&basis).chain(&eigenvalues).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigen model parameter".into()));
        }
        Ok(EigenModel {
            height,
            width,
            mean,
            basis,
            eigenvalues,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Pixel count `d`.
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Retained component count `k`.
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn mean_image(&self) -> Image {
        Image::new(self.height, self.width, self.mean.clone()).expect("mean has model dimensions")
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column-major basis, component after component.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let d = self.dimension();
        &self.basis[i * d..(i + 1) * d]
    }

    /// Eigenface `i` viewed as an image.
    pub fn eigenface(&self, i: usize) -> Image {
        Image::new(self.height, self.width, self.component(i).to_vec())
            .expect("component has model dimensions")
    }

    /// Coordinates of `image - mean` in the eigenbasis.
    pub fn project(&self, image: &Image) -> Result<Vec<f64>> {
        if image.dims() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {}x{} images, got {}x{}",
                self.height,
                self.width,
                image.height(),
                image.width()
            )));
        }
        let centered: Vec<f64> = image
            .pixels()
            .iter()
            .zip(&self.mean)
            .map(|(p, m)| p - m)
            .collect();
        Ok((0..self.k()).map(|i| dot(self.component(i), &centered)).collect())
    }

    /// `mean + basis * features` as an image.
    pub fn reconstruct_from_features(&self, features: &[f64]) -> Result<Image> {
        if features.len() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} features, got {}",
                self.k(),
                features.len()
            )));
        }
        let mut px = self.mean.clone();
        for (i, f) in features.iter().enumerate() {
            for (p, b) in px.iter_mut().zip(self.component(i)) {
                *p += f * b;
            }
        }
        Image::new(self.height, self.width, px)
    }
}

pub fn project(model: &EigenModel, image: &Image) -> Result<Vec<f64>> {
    model.project(image)
}

pub fn reconstruct_from_features(model: &EigenModel, features: &[f64]) -> Result<Image> {
    model.reconstruct_from_features(features)
}
