//! Command-line front end for the quotient fusion pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use qfusion::pgm::{load_pgm, save_pgm};
use qfusion::pipeline::synthetic::SyntheticDataset;
use qfusion::pipeline::{
    emit_report, generate_manifest, load_manifest, load_model, run_evaluate, run_train, save_model,
    PipelineConfig, RecognitionReport, ReportFormat,
};
use qfusion::quotient::{quotient, FusionVariant, QuotientConfig, QuotientMethod, DEFAULT_EPSILON_REL};
use qfusion::wavelet::decompose_multilevel;

#[derive(Parser)]
#[command(name = "qfusion", version, about = "Visual/thermal quotient fusion, PCA and MLP face recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump Haar subbands of an image as PGM files.
    Decompose {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
    /// Build one quotient image from a visual/thermal pair.
    Quotient {
        #[arg(long, default_value = "2")]
        method: QuotientMethod,
        visual: PathBuf,
        thermal: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON_REL)]
        epsilon_rel: f64,
        #[arg(long, default_value = "none")]
        fusion: FusionVariant,
    },
    /// Write a seeded train/test manifest for a `<class>/{visual,thermal}/` tree.
    GenManifest {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        train_frac: f64,
        /// Defaults to `<dir>/manifest.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic visual/thermal dataset with its manifest.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 10)]
        train: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit PCA and the MLP on the training split.
    Train {
        #[command(flatten)]
        input: TrainInput,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify the test split with a saved model.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        report: ReportOutput,
    },
    /// Train and evaluate in one go.
    Pipeline {
        #[command(flatten)]
        input: TrainInput,
        /// Also save the trained model here.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        report: ReportOutput,
    },
}

#[derive(Args)]
struct TrainInput {
    #[arg(long)]
    manifest: PathBuf,
    /// key = value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportOutput {
    #[arg(long, default_value = "text")]
    report: ReportFormat,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainInput {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply_env_overrides()?;
        Ok(cfg)
    }
}

impl ReportOutput {
    fn emit(&self, report: &RecognitionReport) -> Result<()> {
        match &self.out {
            Some(path) => emit_report(report, self.report, path)?,
            None => print!("{}", report.render(self.report)),
        }
        Ok(())
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Decompose { image, out, levels } => decompose(&image, &out, levels),
        Command::Quotient {
            method,
            visual,
            thermal,
            out,
            epsilon_rel,
            fusion,
        } => {
            let cfg = QuotientConfig::new(method, epsilon_rel)?;
            let q = quotient(&load_pgm(&visual)?, &load_pgm(&thermal)?, &cfg, fusion)?;
            save_pgm(&q.normalize_minmax(), &out, 65535)?;
            info!("wrote {}x{} quotient to {}", q.height(), q.width(), out.display());
            Ok(())
        }
        Command::GenManifest {
            dir,
            seed,
            train_frac,
            out,
        } => {
            let manifest = generate_manifest(&dir, seed, train_frac)?;
            let out = out.unwrap_or_else(|| dir.join("manifest.csv"));
            // entries are relative to `dir`; rebase them if the manifest lives elsewhere
            let manifest = if out.parent().map(Path::new) == Some(dir.as_path()) {
                manifest
            } else {
                rebase(manifest, &dir)?
            };
            fs::write(&out, manifest.to_csv()?).with_context(|| format!("writing {}", out.display()))?;
            info!("wrote {} pairs to {}", manifest.entries.len(), out.display());
            Ok(())
        }
        Command::Synth {
            dir,
            classes,
            pairs,
            train,
            seed,
        } => {
            let data = SyntheticDataset {
                classes,
                pairs_per_class: pairs,
                train_per_class: train,
                seed,
                ..SyntheticDataset::default()
            };
            let path = data.write(&dir)?;
            info!("wrote {} pairs, manifest {}", classes * pairs, path.display());
            Ok(())
        }
        Command::Train { input, out } => {
            let manifest = load_manifest(&input.manifest)?;
            let (models, summary) = run_train(&manifest, &input.config()?)?;
            save_model(&models, &out)?;
            info!(
                "{} pairs, {} classes, {} components, {} epochs, final MSE {:.3e}; saved {}",
                summary.pairs,
                summary.classes,
                summary.components,
                summary.epochs,
                summary.final_mse,
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            manifest,
            model,
            report,
        } => {
            let manifest = load_manifest(&manifest)?;
            let models = load_model(&model)?;
            report.emit(&run_evaluate(&manifest, &models)?)
        }
        Command::Pipeline {
            input,
            model_out,
            report,
        } => {
            let manifest = load_manifest(&input.manifest)?;
            let (models, _) = run_train(&manifest, &input.config()?)?;
            if let Some(path) = &model_out {
                save_model(&models, path)?;
            }
            report.emit(&run_evaluate(&manifest, &models)?)
        }
    }
}

fn decompose(image: &Path, out: &Path, levels: usize) -> Result<()> {
    let img = load_pgm(image)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (i, set) in decompose_multilevel(&img, levels)?.iter().enumerate() {
        let level = i + 1;
        let [a, h, v, d] = set.bands();
        for (name, band) in [("cA", a), ("cH", h), ("cV", v), ("cD", d)] {
            save_pgm(&band.normalize_minmax(), out.join(format!("level{level}_{name}.pgm")), 255)?;
        }
        save_pgm(&set.tiled_for_display(), out.join(format!("level{level}_tiled.pgm")), 255)?;
    }
    info!("wrote {levels} level(s) of subbands to {}", out.display());
    Ok(())
}

/// Makes manifest paths absolute so the file can be written anywhere.
fn rebase(mut manifest: qfusion::pipeline::Manifest, root: &Path) -> Result<qfusion::pipeline::Manifest> {
    let root = fs::canonicalize(root).with_context(|| format!("resolving {}", root.display()))?;
    for e in &mut manifest.entries {
        e.visual_path = root.join(&e.visual_path);
        e.thermal_path = root.join(&e.thermal_path);
    }
    Ok(manifest)
}
