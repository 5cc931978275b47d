//! Grayscale image grid plus the geometric preprocessing used before
//! decomposition: crop, bilinear resize and min-max normalization.

use crate::error::{Error, Result};

/// A row-major grid of finite real intensities.
///
/// The same type doubles as a plain real matrix for wavelet coefficients and
/// quotient subbands, so values are not restricted to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite pixel at index {bad}"
            )));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    /// Builds an image from nested rows. Mostly a convenience for tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let pixels = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Image::new(height, width, pixels)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        assert!(value.is_finite());
        Image {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Image::filled(height, width, 0.0)
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite value at ({r}, {c})");
                pixels.push(v);
            }
        }
        Image {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.pixels.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    /// Sum of squared entries.
    pub fn energy(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::from_fn(self.height, self.width, |r, c| f(self.get(r, c)))
    }

    pub fn scaled(&self, factor: f64) -> Image {
        self.map(|p| p * factor)
    }

    /// Elementwise combination of two same-sized images.
    pub fn zip_with(&self, other: &Image, mut f: impl FnMut(f64, f64) -> f64) -> Result<Image> {
        self.ensure_same_dims(other)?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::new(self.height, self.width, pixels)
    }

    pub fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        self.ensure_same_dims(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Returns the `h`x`w` sub-image whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Image> {
        let fits = h > 0
            && w > 0
            && top.checked_add(h).is_some_and(|b| b <= self.height)
            && left.checked_add(w).is_some_and(|r| r <= self.width);
        if !fits {
            return Err(Error::OutOfBounds {
                top,
                left,
                height: h,
                width: w,
                image_height: self.height,
                image_width: self.width,
            });
        }
        Ok(Image::from_fn(h, w, |r, c| self.get(top + r, left + c)))
    }

    /// Bilinear resampling with corner alignment: the centers of the corner
    /// pixels of the output land on the centers of the input corner pixels.
    /// Output values never leave the input's `[min, max]` range.
    pub fn resize_bilinear(&self, new_h: usize, new_w: usize) -> Result<Image> {
        if new_h == 0 || new_w == 0 {
            return Err(Error::InvalidArgument(format!(
                "resize target must be positive, got {new_h}x{new_w}"
            )));
        }
        if (new_h, new_w) == self.dims() {
            return Ok(self.clone());
        }
        let rows = sample_positions(self.height, new_h);
        let cols = sample_positions(self.width, new_w);
        let (lo, hi) = (self.min(), self.max());
        Ok(Image::from_fn(new_h, new_w, |r, c| {
            let (r0, r1, fr) = rows[r];
            let (c0, c1, fc) = cols[c];
            let top = self.get(r0, c0) * (1.0 - fc) + self.get(r0, c1) * fc;
            let bottom = self.get(r1, c0) * (1.0 - fc) + self.get(r1, c1) * fc;
            // rounding can push a convex combination one ulp past the range
            (top * (1.0 - fr) + bottom * fr).clamp(lo, hi)
        }))
    }

    /// Affine map onto `[0, 1]`. Constant images map to all zeros.
    pub fn normalize_minmax(&self) -> Image {
        let (lo, hi) = (self.min(), self.max());
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            return Image::zeros(self.height, self.width);
        }
        self.map(|p| ((p - lo) / span).clamp(0.0, 1.0))
    }

    /// Tiles four equally sized blocks as `[[top_left, top_right], [bottom_left, bottom_right]]`.
    pub fn tile2x2(
        top_left: &Image,
        top_right: &Image,
        bottom_left: &Image,
        bottom_right: &Image,
    ) -> Result<Image> {
        for other in [top_right, bottom_left, bottom_right] {
            top_left.ensure_same_dims(other)?;
        }
        let (h, w) = top_left.dims();
        Ok(Image::from_fn(2 * h, 2 * w, |r, c| {
            let block = match (r < h, c < w) {
                (true, true) => top_left,
                (true, false) => top_right,
                (false, true) => bottom_left,
                (false, false) => bottom_right,
            };
            block.get(r % h, c % w)
        }))
    }
}

/// For each output index: (lower source index, upper source index, weight of upper).
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            let x = if dst == 1 {
                (src - 1) as f64 / 2.0
            } else {
                i as f64 * (src - 1) as f64 / (dst - 1) as f64
            };
            let i0 = (x.floor() as usize).min(src - 1);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}
