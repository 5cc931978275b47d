//! End-to-end orchestration: per-pair preprocessing and quotient generation,
//! PCA over the training quotients, MLP training, and per-class evaluation.

pub mod config;
pub mod manifest;
pub mod model_file;
pub mod report;
pub mod synthetic;

use std::collections::BTreeMap;

pub use config::{CropRect, PipelineConfig};
pub use manifest::{generate_manifest, load_manifest, Manifest, ManifestEntry, Split};
pub use model_file::{decode_model, encode_model, load_model, save_model};
pub use report::{emit_report, recognition_rate, RecognitionReport, ReportFormat};

use crate::classifier::{init_mlp, MlpModel, Sample};
use crate::eigenspace::{fit_pca, EigenModel};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::pgm::load_pgm;
use crate::quotient::quotient;

/// Processing stages, reported to a [`StageObserver`] as they start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Decomposition and quotient generation for a batch of pairs.
    Quotient,
    Pca,
    Projection,
    Mlp,
    Classify,
}

pub trait StageObserver {
    fn stage(&mut self, stage: Stage);
}

impl StageObserver for () {
    fn stage(&mut self, _: Stage) {}
}

impl StageObserver for Vec<Stage> {
    fn stage(&mut self, stage: Stage) {
        self.push(stage);
    }
}

/// Everything needed to classify new pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub config: PipelineConfig,
    pub eigen: EigenModel,
    pub mlp: MlpModel,
    /// Class id of each MLP output unit.
    pub class_ids: Vec<u32>,
}

impl TrainedModels {
    pub fn new(config: PipelineConfig, eigen: EigenModel, mlp: MlpModel, class_ids: Vec<u32>) -> Result<Self> {
        if eigen.dims() != config.feature_dims() {
            return Err(Error::DimensionMismatch(format!(
                "eigen model is {:?} but config produces {:?} feature images",
                eigen.dims(),
                config.feature_dims()
            )));
        }
        if mlp.input_size() != eigen.k() {
            return Err(Error::DimensionMismatch(format!(
                "MLP takes {} inputs but PCA keeps {} components",
                mlp.input_size(),
                eigen.k()
            )));
        }
        if mlp.output_size() != class_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "MLP has {} outputs for {} classes",
                mlp.output_size(),
                class_ids.len()
            )));
        }
        Ok(TrainedModels {
            config,
            eigen,
            mlp,
            class_ids,
        })
    }

    /// Predicted class id for one pair.
    pub fn classify(&self, visual: &Image, thermal: &Image) -> Result<u32> {
        let feature = feature_image(visual, thermal, &self.config)?;
        let projected = self.eigen.project(&feature)?;
        Ok(self.class_ids[self.mlp.predict(&projected)?])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub pairs: usize,
    pub classes: usize,
    pub components: usize,
    pub epochs: usize,
    pub final_mse: f64,
}

/// Crop, resize, quotient and min-max normalize one visual/thermal pair.
pub fn feature_image(visual: &Image, thermal: &Image, cfg: &PipelineConfig) -> Result<Image> {
    let prepare = |img: &Image| -> Result<Image> {
        let img = match cfg.crop {
            Some(c) => img.crop(c.top, c.left, c.height, c.width)?,
            None => img.clone(),
        };
        img.resize_bilinear(cfg.height, cfg.width)
    };
    let q = quotient(&prepare(visual)?, &prepare(thermal)?, &cfg.quotient, cfg.fusion)?;
    Ok(q.normalize_minmax())
}

pub fn load_feature_image(entry: &ManifestEntry, cfg: &PipelineConfig) -> Result<Image> {
    let visual = load_pgm(&entry.visual_path)?;
    let thermal = load_pgm(&entry.thermal_path)?;
    feature_image(&visual, &thermal, cfg)
}

fn feature_images(entries: &[&ManifestEntry], cfg: &PipelineConfig) -> Result<Vec<Image>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        entries.par_iter().map(|e| load_feature_image(e, cfg)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        entries.iter().map(|e| load_feature_image(e, cfg)).collect()
    }
}

pub fn run_train(manifest: &Manifest, cfg: &PipelineConfig) -> Result<(TrainedModels, TrainingSummary)> {
    run_train_observed(manifest, cfg, &mut ())
}

pub fn run_train_observed(
    manifest: &Manifest,
    cfg: &PipelineConfig,
    observer: &mut dyn StageObserver,
) -> Result<(TrainedModels, TrainingSummary)> {
    cfg.validate()?;
    let entries: Vec<&ManifestEntry> = manifest.entries_in(Split::Train).collect();
    let class_ids: Vec<u32> = manifest.classes_in(Split::Train).into_iter().collect();
    if entries.len() < 2 || class_ids.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "training needs at least 2 pairs over 2 classes, got {} pairs over {} classes",
            entries.len(),
            class_ids.len()
        )));
    }
    let output_of: BTreeMap<u32, usize> = class_ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    observer.stage(Stage::Quotient);
    let features = feature_images(&entries, cfg)?;

    observer.stage(Stage::Pca);
    let eigen = fit_pca(&features, cfg.k_max)?;

    observer.stage(Stage::Projection);
    let samples = features
        .iter()
        .zip(&entries)
        .map(|(f, e)| Ok(Sample::one_hot(eigen.project(f)?, output_of[&e.class_id], class_ids.len())))
        .collect::<Result<Vec<_>>>()?;

    observer.stage(Stage::Mlp);
    let mut sizes = vec![eigen.k()];
    sizes.extend(&cfg.hidden);
    sizes.push(class_ids.len());
    let mut mlp = init_mlp(&sizes, cfg.train.seed)?;
    let run = mlp.train(&samples, &cfg.train)?;
    // momentum is training state only; persisted models carry none
    mlp.reset_velocity();
    log::info!(
        "trained on {} pairs, {} components, {} epochs, final MSE {:.3e}",
        entries.len(),
        eigen.k(),
        run.epochs,
        run.final_mse
    );

    let summary = TrainingSummary {
        pairs: entries.len(),
        classes: class_ids.len(),
        components: eigen.k(),
        epochs: run.epochs,
        final_mse: run.final_mse,
    };
    Ok((TrainedModels::new(cfg.clone(), eigen, mlp, class_ids)?, summary))
}

pub fn run_evaluate(manifest: &Manifest, models: &TrainedModels) -> Result<RecognitionReport> {
    run_evaluate_observed(manifest, models, &mut ())
}

pub fn run_evaluate_observed(
    manifest: &Manifest,
    models: &TrainedModels,
    observer: &mut dyn StageObserver,
) -> Result<RecognitionReport> {
    let cfg = &models.config;
    cfg.validate()?;
    if models.eigen.dims() != cfg.feature_dims() {
        return Err(Error::DimensionMismatch(format!(
            "models expect {:?} feature images, pipeline produces {:?}",
            models.eigen.dims(),
            cfg.feature_dims()
        )));
    }
    let entries: Vec<&ManifestEntry> = manifest.entries_in(Split::Test).collect();
    if entries.is_empty() {
        return Err(Error::ManifestValidation("manifest has no test pairs".into()));
    }

    observer.stage(Stage::Quotient);
    let features = feature_images(&entries, cfg)?;

    observer.stage(Stage::Projection);
    let projected = features
        .iter()
        .map(|f| models.eigen.project(f))
        .collect::<Result<Vec<_>>>()?;

    observer.stage(Stage::Classify);
    let mut tally: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (x, e) in projected.iter().zip(&entries) {
        let predicted = models.class_ids[models.mlp.predict(x)?];
        let slot = tally.entry(e.class_id).or_default();
        slot.0 += 1;
        if predicted == e.class_id {
            slot.1 += 1;
        }
    }
    RecognitionReport::from_counts(
        tally
            .into_iter()
            .map(|(c, (t, r))| (c, manifest.class_names.get(&c).cloned(), t, r))
            .collect(),
    )
}
