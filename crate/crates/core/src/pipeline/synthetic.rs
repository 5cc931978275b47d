//! Synthetic visual/thermal face pairs for desk-scale runs and demos.
//!
//! Each class gets its own smooth visual texture (two interfering sinusoids)
//! and its own thermal heat blob. Individual pairs jitter the texture phase
//! and add small uniform noise. Test visuals are additionally multiplied by
//! a global illumination factor.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::manifest::{Manifest, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::pgm::save_pgm;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub classes: usize,
    pub pairs_per_class: usize,
    pub train_per_class: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Range of the global factor applied to test visual images.
    pub illumination: (f64, f64),
    pub noise: f64,
}

impl Default for SyntheticDataset {
    fn default() -> Self {
        SyntheticDataset {
            classes: 2,
            pairs_per_class: 20,
            train_per_class: 10,
            height: 80,
            width: 100,
            seed: 0,
            illumination: (0.5, 2.0),
            noise: 0.01,
        }
    }
}

/// Per-class generating parameters.
#[derive(Debug, Clone, Copy)]
struct ClassPattern {
    fx: f64,
    fy: f64,
    phase: f64,
    tilt: f64,
    blob_row: f64,
    blob_col: f64,
    blob_sigma: f64,
}

impl ClassPattern {
    fn new(class: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(class as u64));
        ClassPattern {
            fx: 1.0 + 0.8 * class as f64 + rng.gen_range(0.0..0.3),
            fy: 1.5 + 0.5 * ((class * 7) % 5) as f64 + rng.gen_range(0.0..0.3),
            phase: rng.gen_range(0.0..TAU),
            tilt: rng.gen_range(-1.0..1.0),
            blob_row: rng.gen_range(0.3..0.7),
            blob_col: rng.gen_range(0.3..0.7),
            blob_sigma: rng.gen_range(0.15..0.3),
        }
    }
}

/// One visual/thermal pair of `class` at unit illumination. Visual values
/// stay within about `[0.1, 0.45]`, thermal within `[0.5, 0.8]`.
pub fn face_pair(
    class: usize,
    height: usize,
    width: usize,
    dataset_seed: u64,
    rng: &mut impl Rng,
    noise: f64,
) -> (Image, Image) {
    let p = ClassPattern::new(class, dataset_seed);
    let jitter = rng.gen_range(-0.15..0.15);
    let mut noise_at = |_: usize, _: usize| if noise > 0.0 { rng.gen_range(-noise..noise) } else { 0.0 };
    let visual = Image::from_fn(height, width, |r, c| {
        let y = r as f64 / height as f64;
        let x = c as f64 / width as f64;
        0.275
            + 0.09 * (TAU * (p.fx * x + p.tilt * y) + p.phase + jitter).sin()
            + 0.05 * (TAU * p.fy * y + 0.5 * p.phase).cos()
            + noise_at(r, c)
    });
    let thermal = Image::from_fn(height, width, |r, c| {
        let dy = r as f64 / height as f64 - p.blob_row;
        let dx = c as f64 / width as f64 - p.blob_col;
        0.55 + 0.2 * (-(dx * dx + dy * dy) / (2.0 * p.blob_sigma * p.blob_sigma)).exp() + noise_at(r, c)
    });
    (visual, thermal)
}

/// [`face_pair`] with its own generator seeded from `sample_seed`.
pub fn seeded_face_pair(
    class: usize,
    height: usize,
    width: usize,
    dataset_seed: u64,
    sample_seed: u64,
    noise: f64,
) -> (Image, Image) {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    face_pair(class, height, width, dataset_seed, &mut rng, noise)
}

impl SyntheticDataset {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.pairs_per_class == 0 || self.train_per_class > self.pairs_per_class {
            return Err(Error::InvalidArgument(format!(
                "need classes > 0 and 0 <= train_per_class <= pairs_per_class, got {self:?}"
            )));
        }
        let (lo, hi) = self.illumination;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad illumination range {lo}..{hi}")));
        }
        Ok(())
    }

    /// All pairs in memory as `(class, split, visual, thermal)`.
    pub fn generate(&self) -> Result<Vec<(u32, Split, Image, Image)>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.classes * self.pairs_per_class);
        for class in 0..self.classes {
            for i in 0..self.pairs_per_class {
                let (mut visual, thermal) =
                    face_pair(class, self.height, self.width, self.seed, &mut rng, self.noise);
                let split = if i < self.train_per_class { Split::Train } else { Split::Test };
                if split == Split::Test {
                    let (lo, hi) = self.illumination;
                    let factor = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                    visual = visual.scaled(factor);
                }
                out.push((class as u32, split, visual, thermal));
            }
        }
        Ok(out)
    }

    /// Writes 16-bit PGMs under `dir` plus `dir/manifest.csv`; returns the
    /// manifest path.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let mut manifest = Manifest::default();
        for (n, (class, split, visual, thermal)) in self.generate()?.into_iter().enumerate() {
            let class_dir = dir.join(format!("class{class}"));
            for kind in ["visual", "thermal"] {
                let sub = class_dir.join(kind);
                fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            }
            let file = format!("{n:04}.pgm");
            let rel_v = Path::new(&format!("class{class}")).join("visual").join(&file);
            let rel_t = Path::new(&format!("class{class}")).join("thermal").join(&file);
            save_pgm(&visual, dir.join(&rel_v), 65535)?;
            save_pgm(&thermal, dir.join(&rel_t), 65535)?;
            manifest.class_names.insert(class, format!("class{class}"));
            manifest.entries.push(ManifestEntry {
                class_id: class,
                visual_path: rel_v,
                thermal_path: rel_t,
                split,
            });
        }
        let path = dir.join("manifest.csv");
        fs::write(&path, manifest.to_csv()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_ranges_leave_headroom_for_scaling() {
        let data = SyntheticDataset::default().generate().unwrap();
        assert_eq!(data.len(), 40);
        for (_, split, v, t) in &data {
            assert!(t.min() > 0.45 && t.max() < 0.85);
            if *split == Split::Train {
                assert!(v.min() > 0.05 && v.max() < 0.5);
            }
            assert!(v.max() < 1.0);
        }
    }

    #[test]
    fn deterministic() {
        let d = SyntheticDataset {
            height: 8,
            width: 8,
            ..SyntheticDataset::default()
        };
        assert_eq!(d.generate().unwrap(), d.generate().unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        let d = SyntheticDataset {
            train_per_class: 30,
            ..SyntheticDataset::default()
        };
        assert!(d.generate().is_err());
        let d = SyntheticDataset {
            illumination: (0.0, 1.0),
            ..SyntheticDataset::default()
        };
        assert!(d.validate().is_err());
    }
}
