//! Single and multilevel 2D Haar (db1) wavelet transform.
//!
//! Rows are filtered first and columns second, keeping even-indexed samples
//! after each filter. For a non-overlapping 2x2 block `[[a, b], [c, d]]` this
//! yields
//!
//! ```text
//! cA = (a + b + c + d) / 2     cH = ((a + b) - (c + d)) / 2
//! cV = ((a + c) - (b + d)) / 2 cD = ((a - b) - (c - d)) / 2
//! ```
//!
//! so `cH` holds differences along the vertical direction, i.e. horizontal
//! edges.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::image::Image;

/// Two-tap analysis and synthesis filters of the orthonormal Haar wavelet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarFilters {
    pub lo_d: [f64; 2],
    pub hi_d: [f64; 2],
    pub lo_r: [f64; 2],
    pub hi_r: [f64; 2],
}

impl HaarFilters {
    pub const fn db1() -> Self {
        HaarFilters {
            lo_d: [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            hi_d: [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
            lo_r: [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            hi_r: [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        }
    }

    #[inline]
    fn analyze(&self, x0: f64, x1: f64) -> (f64, f64) {
        (
            self.lo_d[0] * x0 + self.lo_d[1] * x1,
            self.hi_d[0] * x0 + self.hi_d[1] * x1,
        )
    }

    #[inline]
    fn synthesize(&self, low: f64, high: f64) -> (f64, f64) {
        (
            self.lo_r[0] * low + self.hi_r[0] * high,
            self.lo_r[1] * low + self.hi_r[1] * high,
        )
    }
}

const HAAR: HaarFilters = HaarFilters::db1();

/// One decomposition level: approximation plus three detail subbands, each
/// half the source size in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub approx: Image,
    pub horizontal: Image,
    pub vertical: Image,
    pub diagonal: Image,
}

impl SubbandSet {
    pub fn new(approx: Image, horizontal: Image, vertical: Image, diagonal: Image) -> Result<Self> {
        for other in [&horizontal, &vertical, &diagonal] {
            approx.ensure_same_dims(other).map_err(|_| {
                Error::DimensionMismatch(format!(
                    "subbands must share dimensions: approx {}x{}, detail {}x{}",
                    approx.height(),
                    approx.width(),
                    other.height(),
                    other.width()
                ))
            })?;
        }
        Ok(SubbandSet {
            approx,
            horizontal,
            vertical,
            diagonal,
        })
    }

    /// Dimensions of the image this level reconstructs to.
    pub fn source_dims(&self) -> (usize, usize) {
        (2 * self.approx.height(), 2 * self.approx.width())
    }

    pub fn bands(&self) -> [&Image; 4] {
        [&self.approx, &self.horizontal, &self.vertical, &self.diagonal]
    }

    pub fn energy(&self) -> f64 {
        self.bands().iter().map(|b| b.energy()).sum()
    }

    /// Applies `f` to each band, keeping the band order.
    pub fn try_map(&self, mut f: impl FnMut(&Image) -> Result<Image>) -> Result<SubbandSet> {
        SubbandSet::new(
            f(&self.approx)?,
            f(&self.horizontal)?,
            f(&self.vertical)?,
            f(&self.diagonal)?,
        )
    }

    /// Pairs up bands of two sets of equal shape.
    pub fn try_zip(
        &self,
        other: &SubbandSet,
        mut f: impl FnMut(&Image, &Image) -> Result<Image>,
    ) -> Result<SubbandSet> {
        SubbandSet::new(
            f(&self.approx, &other.approx)?,
            f(&self.horizontal, &other.horizontal)?,
            f(&self.vertical, &other.vertical)?,
            f(&self.diagonal, &other.diagonal)?,
        )
    }

    /// `[[cA, cH], [cV, cD]]` at source resolution.
    pub fn tiled(&self) -> Image {
        Image::tile2x2(&self.approx, &self.horizontal, &self.vertical, &self.diagonal)
            .expect("bands share dimensions")
    }

    /// Tiled layout with every band stretched to `[0, 1]` on its own, for viewing.
    pub fn tiled_for_display(&self) -> Image {
        Image::tile2x2(
            &self.approx.normalize_minmax(),
            &self.horizontal.normalize_minmax(),
            &self.vertical.normalize_minmax(),
            &self.diagonal.normalize_minmax(),
        )
        .expect("bands share dimensions")
    }
}

/// Single-level forward transform. Height and width must both be even.
pub fn dwt2(image: &Image) -> Result<SubbandSet> {
    let (h, w) = image.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimension {
            height: h,
            width: w,
        });
    }
    let (hh, hw) = (h / 2, w / 2);

    // row pass: low and high halves, each h x w/2
    let mut row_lo = vec![0.0; h * hw];
    let mut row_hi = vec![0.0; h * hw];
    for r in 0..h {
        for k in 0..hw {
            let (lo, hi) = HAAR.analyze(image.get(r, 2 * k), image.get(r, 2 * k + 1));
            row_lo[r * hw + k] = lo;
            row_hi[r * hw + k] = hi;
        }
    }

    let mut bands = [
        vec![0.0; hh * hw],
        vec![0.0; hh * hw],
        vec![0.0; hh * hw],
        vec![0.0; hh * hw],
    ];
    for k in 0..hh {
        for c in 0..hw {
            let (a, hz) = HAAR.analyze(row_lo[2 * k * hw + c], row_lo[(2 * k + 1) * hw + c]);
            let (v, d) = HAAR.analyze(row_hi[2 * k * hw + c], row_hi[(2 * k + 1) * hw + c]);
            let i = k * hw + c;
            bands[0][i] = a;
            bands[1][i] = hz;
            bands[2][i] = v;
            bands[3][i] = d;
        }
    }
    let [a, hz, v, d] = bands;
    SubbandSet::new(
        Image::new(hh, hw, a)?,
        Image::new(hh, hw, hz)?,
        Image::new(hh, hw, v)?,
        Image::new(hh, hw, d)?,
    )
}

/// Single-level inverse transform; exact inverse of [`dwt2`].
pub fn idwt2(subbands: &SubbandSet) -> Result<Image> {
    let SubbandSet {
        approx,
        horizontal,
        vertical,
        diagonal,
    } = subbands;
    for other in [horizontal, vertical, diagonal] {
        approx.ensure_same_dims(other)?;
    }
    let (hh, hw) = approx.dims();
    let (h, w) = (2 * hh, 2 * hw);

    // undo the column pass into row-filtered low/high halves
    let mut row_lo = vec![0.0; h * hw];
    let mut row_hi = vec![0.0; h * hw];
    for k in 0..hh {
        for c in 0..hw {
            let (l0, l1) = HAAR.synthesize(approx.get(k, c), horizontal.get(k, c));
            let (h0, h1) = HAAR.synthesize(vertical.get(k, c), diagonal.get(k, c));
            row_lo[2 * k * hw + c] = l0;
            row_lo[(2 * k + 1) * hw + c] = l1;
            row_hi[2 * k * hw + c] = h0;
            row_hi[(2 * k + 1) * hw + c] = h1;
        }
    }

    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for k in 0..hw {
            let (x0, x1) = HAAR.synthesize(row_lo[r * hw + k], row_hi[r * hw + k]);
            out[r * w + 2 * k] = x0;
            out[r * w + 2 * k + 1] = x1;
        }
    }
    Image::new(h, w, out)
}

/// Repeatedly decomposes the approximation band. Element `k` of the result
/// is level `k + 1`.
pub fn decompose_multilevel(image: &Image, levels: usize) -> Result<Vec<SubbandSet>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let divisor = 1usize
        .checked_shl(levels as u32)
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("too many levels: {levels}")))?;
    let (h, w) = image.dims();
    if h % divisor != 0 || w % divisor != 0 {
        return Err(Error::InsufficientDivisibility {
            height: h,
            width: w,
            divisor,
        });
    }
    let mut out: Vec<SubbandSet> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let next = match out.last() {
            Some(prev) => dwt2(&prev.approx)?,
            None => dwt2(image)?,
        };
        out.push(next);
    }
    Ok(out)
}

/// Inverts `levels` levels starting from an approximation band, with every
/// detail band set to zero. The result is `2^levels` times larger per axis.
pub fn reconstruct_from_approx(approx: &Image, levels: usize) -> Result<Image> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let mut current = approx.clone();
    for _ in 0..levels {
        let (h, w) = current.dims();
        let zeros = Image::zeros(h, w);
        current = idwt2(&SubbandSet {
            approx: current,
            horizontal: zeros.clone(),
            vertical: zeros.clone(),
            diagonal: zeros,
        })?;
    }
    Ok(current)
}
