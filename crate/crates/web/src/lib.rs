//! Browser demo: Haar subbands, quotient images under changing illumination,
//! and max-abs coefficient fusion, all on synthetic visual/thermal pairs.
//!
//! Every view is returned as an RGBA buffer of `height() x width()` pixels
//! (the pair view is twice as wide) ready for `ImageData`.

use qfusion::pipeline::synthetic::seeded_face_pair;
use qfusion::quotient::{fuse_maxabs, quotient, FusionVariant, QuotientConfig, QuotientMethod, DEFAULT_EPSILON_REL};
use qfusion::wavelet::{dwt2, idwt2, SubbandSet};
use qfusion::Image;
use wasm_bindgen::prelude::*;

const HEIGHT: usize = 80;
const WIDTH: usize = 100;
const NOISE: f64 = 0.01;

#[wasm_bindgen]
pub struct Scene {
    visual: Image,
    thermal: Image,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(constructor)]
    pub fn new(class: u32, seed: u32) -> Scene {
        let (visual, thermal) = seeded_face_pair(class as usize, HEIGHT, WIDTH, 0, u64::from(seed), NOISE);
        Scene { visual, thermal }
    }

    pub fn height(&self) -> usize {
        HEIGHT
    }

    pub fn width(&self) -> usize {
        WIDTH
    }

    /// Visual (scaled by `illumination`) and thermal side by side, unnormalized.
    pub fn pair_rgba(&self, illumination: f64) -> Vec<u8> {
        let lit = self.visual.scaled(illumination);
        let side = Image::from_fn(HEIGHT, 2 * WIDTH, |r, c| {
            if c < WIDTH {
                lit.get(r, c)
            } else {
                self.thermal.get(r, c - WIDTH)
            }
        });
        rgba(&side)
    }

    /// Multilevel subband layout of the visual (`thermal == false`) or thermal image.
    pub fn decomposition_rgba(&self, thermal: bool, levels: u32) -> Result<Vec<u8>, JsError> {
        let src = if thermal { &self.thermal } else { &self.visual };
        Ok(rgba(&mallat_layout(src, levels as usize).map_err(js)?))
    }

    /// Min-max normalized quotient image, stretched to the scene size.
    /// `method` is 1 or 2, `fusion` one of none, select, sum.
    pub fn quotient_rgba(&self, method: u32, fusion: &str, illumination: f64) -> Result<Vec<u8>, JsError> {
        let q = self.quotient_image(method, fusion, illumination).map_err(js)?;
        let q = q.normalize_minmax().resize_bilinear(HEIGHT, WIDTH).map_err(js)?;
        Ok(rgba(&q))
    }

    /// Largest relative change of the raw quotient between unit illumination
    /// and `illumination`.
    pub fn illumination_change(&self, method: u32, illumination: f64) -> Result<f64, JsError> {
        self.relative_change(method, illumination).map_err(js)
    }

    /// Inverse transform of the subband-wise max-abs fusion of thermal and
    /// (scaled) visual, normalized for display.
    pub fn fused_rgba(&self, illumination: f64) -> Result<Vec<u8>, JsError> {
        Ok(rgba(&self.fused(illumination).map_err(js)?.normalize_minmax()))
    }
}

impl Scene {
    fn quotient_image(&self, method: u32, fusion: &str, illumination: f64) -> qfusion::Result<Image> {
        let method: QuotientMethod = method.to_string().parse()?;
        let fusion: FusionVariant = fusion.parse()?;
        let cfg = QuotientConfig::new(method, DEFAULT_EPSILON_REL)?;
        quotient(&self.visual.scaled(illumination), &self.thermal, &cfg, fusion)
    }

    fn relative_change(&self, method: u32, illumination: f64) -> qfusion::Result<f64> {
        let base = self.quotient_image(method, "none", 1.0)?;
        let lit = self.quotient_image(method, "none", illumination)?.scaled(1.0 / illumination);
        Ok(base.max_abs_diff(&lit)? / base.max_abs().max(f64::MIN_POSITIVE))
    }

    fn fused(&self, illumination: f64) -> qfusion::Result<Image> {
        let v = dwt2(&self.visual.scaled(illumination))?;
        let t = dwt2(&self.thermal)?;
        idwt2(&t.try_zip(&v, fuse_maxabs)?)
    }
}

/// Nested subband tiling: the approximation quadrant holds the next level.
fn mallat_layout(image: &Image, levels: usize) -> qfusion::Result<Image> {
    if levels == 0 {
        return Ok(image.normalize_minmax());
    }
    let s: SubbandSet = dwt2(image)?;
    Image::tile2x2(
        &mallat_layout(&s.approx, levels - 1)?,
        &s.horizontal.normalize_minmax(),
        &s.vertical.normalize_minmax(),
        &s.diagonal.normalize_minmax(),
    )
}

fn rgba(image: &Image) -> Vec<u8> {
    image
        .pixels()
        .iter()
        .flat_map(|&p| {
            let g = (p.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

fn js(e: qfusion::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffers_have_scene_size() {
        let s = Scene::new(1, 3);
        assert_eq!(s.pair_rgba(1.5).len(), HEIGHT * 2 * WIDTH * 4);
        let layout = mallat_layout(&s.visual, 2).unwrap();
        assert_eq!(layout.dims(), (HEIGHT, WIDTH));
        let q = s.quotient_image(2, "none", 1.0).unwrap();
        assert_eq!(q.dims(), (HEIGHT / 2, WIDTH / 2));
        assert_eq!(s.fused(1.0).unwrap().dims(), (HEIGHT, WIDTH));
    }

    #[test]
    fn quotient_tracks_illumination_linearly() {
        let s = Scene::new(0, 0);
        for method in [1, 2] {
            assert!(s.relative_change(method, 3.0).unwrap() < 1e-6);
        }
    }

    #[test]
    fn bad_choices_are_errors() {
        let s = Scene::new(0, 0);
        assert!(s.quotient_image(3, "none", 1.0).is_err());
        assert!(s.quotient_image(1, "blend", 1.0).is_err());
        assert!(mallat_layout(&s.visual, 3).is_err());
    }

    #[test]
    fn rgba_clamps_and_is_opaque() {
        let img = Image::from_rows(&[vec![-1.0, 0.5, 2.0]]).unwrap();
        assert_eq!(rgba(&img), [0, 0, 0, 255, 128, 128, 128, 255, 255, 255, 255, 255]);
    }
}
