//! Visual/thermal quotient images and the coefficient fusion rules.
//!
//! Two constructions are supported. [`QuotientMethod::Method1`] divides each
//! level-1 subband of the visual image by the matching thermal subband and
//! tiles the four quotients. [`QuotientMethod::Method2`] decomposes both
//! images to level 2, rebuilds one level from the level-2 approximation alone
//! and divides the two smoothed images.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::wavelet::{decompose_multilevel, dwt2, reconstruct_from_approx, SubbandSet};

pub const DEFAULT_EPSILON_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuotientMethod {
    /// Decompose to level 1, then divide all four subbands.
    Method1,
    /// Decompose to level 2, reconstruct from the approximation, then divide.
    Method2,
}

impl QuotientMethod {
    pub fn levels(self) -> usize {
        match self {
            QuotientMethod::Method1 => 1,
            QuotientMethod::Method2 => 2,
        }
    }

    /// Output dimensions for `h`x`w` inputs.
    pub fn output_dims(self, h: usize, w: usize) -> (usize, usize) {
        match self {
            QuotientMethod::Method1 => (h, w),
            QuotientMethod::Method2 => (h / 2, w / 2),
        }
    }

    /// Both input dimensions must be multiples of this.
    pub fn required_divisor(self) -> usize {
        1 << self.levels()
    }
}

impl fmt::Display for QuotientMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuotientMethod::Method1 => "1",
            QuotientMethod::Method2 => "2",
        })
    }
}

impl FromStr for QuotientMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "method1" => Ok(QuotientMethod::Method1),
            "2" | "method2" => Ok(QuotientMethod::Method2),
            other => Err(Error::InvalidArgument(format!("unknown quotient method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientConfig {
    pub epsilon_rel: f64,
    pub method: QuotientMethod,
}

impl QuotientConfig {
    pub fn new(method: QuotientMethod, epsilon_rel: f64) -> Result<Self> {
        if !(epsilon_rel > 0.0 && epsilon_rel.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_rel must be positive, got {epsilon_rel}"
            )));
        }
        Ok(QuotientConfig {
            epsilon_rel,
            method,
        })
    }

    pub fn levels(&self) -> usize {
        self.method.levels()
    }
}

impl Default for QuotientConfig {
    fn default() -> Self {
        QuotientConfig {
            epsilon_rel: DEFAULT_EPSILON_REL,
            method: QuotientMethod::Method2,
        }
    }
}

/// How visual and thermal coefficients are merged before quotienting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionVariant {
    /// Plain visual over thermal quotient.
    #[default]
    None,
    /// Keep whichever of thermal/visual has the larger magnitude.
    Select,
    /// Add thermal and visual coefficients.
    Sum,
}

impl fmt::Display for FusionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionVariant::None => "none",
            FusionVariant::Select => "select",
            FusionVariant::Sum => "sum",
        })
    }
}

impl FromStr for FusionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(FusionVariant::None),
            "select" => Ok(FusionVariant::Select),
            "sum" => Ok(FusionVariant::Sum),
            other => Err(Error::InvalidArgument(format!("unknown fusion variant {other:?}"))),
        }
    }
}

/// Elementwise `num / den` with a sign-preserving floor on the denominator.
///
/// The floor is `epsilon_rel * max(1, max|den|)`; a denominator whose
/// magnitude is below it is replaced by the floor carrying the denominator's
/// sign (zero counts as positive). Every output is finite and bounded by
/// `max|num| / floor`.
pub fn regularized_divide(num: &Image, den: &Image, epsilon_rel: f64) -> Result<Image> {
    if !(epsilon_rel > 0.0 && epsilon_rel.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon_rel must be positive, got {epsilon_rel}"
        )));
    }
    let floor = denominator_floor(den, epsilon_rel);
    num.zip_with(den, |n, d| {
        let sign = if d < 0.0 { -1.0 } else { 1.0 };
        n / (sign * d.abs().max(floor))
    })
}

/// The absolute floor [`regularized_divide`] applies to `den`.
pub fn denominator_floor(den: &Image, epsilon_rel: f64) -> f64 {
    epsilon_rel * den.max_abs().max(1.0)
}

/// Level-1 subband quotients tiled as `[[Qa, Qh], [Qv, Qd]]`.
pub fn quotient_method1(visual: &Image, thermal: &Image, cfg: &QuotientConfig) -> Result<Image> {
    quotient_method1_fused(visual, thermal, cfg, FusionVariant::None)
}

/// Visual/thermal quotient of the level-2 approximations, each rebuilt one
/// level. Output is half the input size per axis.
pub fn quotient_method2(visual: &Image, thermal: &Image, cfg: &QuotientConfig) -> Result<Image> {
    quotient_method2_fused(visual, thermal, cfg, FusionVariant::None)
}

/// Runs the configured method, optionally fusing coefficients first.
pub fn quotient(
    visual: &Image,
    thermal: &Image,
    cfg: &QuotientConfig,
    fusion: FusionVariant,
) -> Result<Image> {
    match cfg.method {
        QuotientMethod::Method1 => quotient_method1_fused(visual, thermal, cfg, fusion),
        QuotientMethod::Method2 => quotient_method2_fused(visual, thermal, cfg, fusion),
    }
}

fn check_pair(visual: &Image, thermal: &Image, method: QuotientMethod) -> Result<()> {
    visual.ensure_same_dims(thermal)?;
    let (h, w) = visual.dims();
    let divisor = method.required_divisor();
    if h % divisor != 0 || w % divisor != 0 {
        return Err(match method {
            QuotientMethod::Method1 => Error::OddDimension {
                height: h,
                width: w,
            },
            QuotientMethod::Method2 => Error::InsufficientDivisibility {
                height: h,
                width: w,
                divisor,
            },
        });
    }
    Ok(())
}

/// Numerator for a fused quotient: visual for `None`, else the fusion of
/// thermal and visual. The thermal band is always the denominator.
fn numerator(thermal: &Image, visual: &Image, fusion: FusionVariant) -> Result<Image> {
    match fusion {
        FusionVariant::None => Ok(visual.clone()),
        FusionVariant::Select => fuse_maxabs(thermal, visual),
        FusionVariant::Sum => fuse_sum(thermal, visual),
    }
}

fn quotient_method1_fused(
    visual: &Image,
    thermal: &Image,
    cfg: &QuotientConfig,
    fusion: FusionVariant,
) -> Result<Image> {
    check_pair(visual, thermal, QuotientMethod::Method1)?;
    let vs = dwt2(visual)?;
    let ts = dwt2(thermal)?;
    let q: SubbandSet = vs.try_zip(&ts, |v, t| {
        regularized_divide(&numerator(t, v, fusion)?, t, cfg.epsilon_rel)
    })?;
    Ok(q.tiled())
}

fn quotient_method2_fused(
    visual: &Image,
    thermal: &Image,
    cfg: &QuotientConfig,
    fusion: FusionVariant,
) -> Result<Image> {
    check_pair(visual, thermal, QuotientMethod::Method2)?;
    let v = smoothed_approximation(visual)?;
    let t = smoothed_approximation(thermal)?;
    regularized_divide(&numerator(&t, &v, fusion)?, &t, cfg.epsilon_rel)
}

/// Level-2 approximation rebuilt one level with zeroed details:
/// the `f(.)` of the Method-2 quotient.
pub fn smoothed_approximation(image: &Image) -> Result<Image> {
    let levels = decompose_multilevel(image, 2)?;
    reconstruct_from_approx(&levels[1].approx, 1)
}

/// Absolute-maximum selection: `t` where `|t| >= |v|`, otherwise `v`.
pub fn fuse_maxabs(t: &Image, v: &Image) -> Result<Image> {
    t.zip_with(v, |a, b| if a.abs() >= b.abs() { a } else { b })
}

/// Additive fusion, `t + v`.
pub fn fuse_sum(t: &Image, v: &Image) -> Result<Image> {
    t.zip_with(v, |a, b| a + b)
}

/// Normalized 2D Gaussian kernel of side `2 * radius + 1`, row-major.
pub fn gaussian_kernel(radius: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(radius, sigma);
    let mut k = Vec::with_capacity(taps.len() * taps.len());
    for a in &taps {
        for b in &taps {
            k.push(a * b);
        }
    }
    k
}

fn gaussian_taps(radius: usize, sigma: f64) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Gaussian smoothing with edge replication. The kernel is separable so the
/// pass runs along rows then columns.
pub fn gaussian_blur(image: &Image, radius: usize, sigma: f64) -> Result<Image> {
    if radius == 0 || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need radius >= 1 and sigma > 0, got radius {radius}, sigma {sigma}"
        )));
    }
    let taps = gaussian_taps(radius, sigma);
    let (h, w) = image.dims();
    let r = radius as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let rows = Image::from_fn(h, w, |y, x| {
        (-r..=r)
            .zip(&taps)
            .map(|(d, k)| k * image.get(y, clamp(x as isize + d, w)))
            .sum()
    });
    Ok(Image::from_fn(h, w, |y, x| {
        (-r..=r)
            .zip(&taps)
            .map(|(d, k)| k * rows.get(clamp(y as isize + d, h), x))
            .sum()
    }))
}

/// Self-quotient image `I / (F * I)` with a Gaussian `F`.
pub fn self_quotient(image: &Image, kernel_radius: usize, sigma: f64, epsilon_rel: f64) -> Result<Image> {
    let smooth = gaussian_blur(image, kernel_radius, sigma)?;
    regularized_divide(image, &smooth, epsilon_rel)
}
