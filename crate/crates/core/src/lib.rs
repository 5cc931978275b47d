//! Quotient-based multiresolution fusion of paired visual/thermal face
//! images, with PCA feature reduction and MLP classification.

pub mod classifier;
pub mod eigenspace;
pub mod error;
pub mod image;
pub mod pgm;
pub mod pipeline;
pub mod quotient;
pub mod wavelet;

pub use error::{Error, Result};
pub use image::Image;
