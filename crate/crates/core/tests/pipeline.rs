use std::path::Path;

use qfusion::pipeline::model_file::{FORMAT_VERSION, MAGIC};
use qfusion::pipeline::synthetic::SyntheticDataset;
use qfusion::pipeline::{
    decode_model, encode_model, feature_image, load_manifest, run_evaluate, run_evaluate_observed, run_train,
    run_train_observed, save_model, Manifest, PipelineConfig, Split, Stage,
};
use qfusion::quotient::{FusionVariant, QuotientMethod};
use qfusion::{Error, Image};

fn small_config(method: QuotientMethod) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        height: 40,
        width: 48,
        k_max: 10,
        hidden: vec![12],
        ..PipelineConfig::default()
    };
    cfg.quotient.method = method;
    cfg.train.max_epochs = 300;
    cfg
}

fn dataset(dir: &Path, classes: usize) -> Manifest {
    let data = SyntheticDataset {
        classes,
        pairs_per_class: 6,
        train_per_class: 3,
        height: 40,
        width: 48,
        ..SyntheticDataset::default()
    };
    load_manifest(data.write(dir).unwrap()).unwrap()
}

#[test]
fn stages_run_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 3);
    let cfg = small_config(QuotientMethod::Method2);
    let mut seen = Vec::new();
    let (models, _) = run_train_observed(&manifest, &cfg, &mut seen).unwrap();
    assert_eq!(seen, [Stage::Quotient, Stage::Pca, Stage::Projection, Stage::Mlp]);
    let mut seen = Vec::new();
    run_evaluate_observed(&manifest, &models, &mut seen).unwrap();
    assert_eq!(seen, [Stage::Quotient, Stage::Projection, Stage::Classify]);
}

#[test]
fn method2_feature_is_quarter_size() {
    let (h, w) = (80, 100);
    let visual = Image::from_fn(h, w, |r, c| 0.2 + 0.001 * (r * c) as f64);
    let thermal = Image::from_fn(h, w, |r, c| 0.6 + 0.001 * (r + c) as f64);
    let cfg = PipelineConfig::default();
    assert_eq!(cfg.quotient.method, QuotientMethod::Method2);
    let f = feature_image(&visual, &thermal, &cfg).unwrap();
    assert_eq!(f.dims(), (40, 50));
    assert_eq!(f.len(), 2000);
    assert!(f.min() >= 0.0 && f.max() <= 1.0);

    let mut m1 = cfg.clone();
    m1.quotient.method = QuotientMethod::Method1;
    let f1 = feature_image(&visual, &thermal, &m1).unwrap();
    assert_eq!(f1.dims(), (80, 100));
}

#[test]
fn single_class_training_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 1);
    let err = run_train(&manifest, &small_config(QuotientMethod::Method1)).unwrap_err();
    assert!(matches!(err, Error::DegenerateTraining(_)), "{err}");
}

#[test]
fn missing_image_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 2);
    let victim = &manifest.entries_in(Split::Train).next().unwrap().visual_path;
    std::fs::remove_file(victim).unwrap();
    let err = run_train(&manifest, &small_config(QuotientMethod::Method2)).unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)), "{err}");
}

#[test]
fn indivisible_size_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 2);
    let mut cfg = small_config(QuotientMethod::Method2);
    cfg.width = 50;
    let err = run_train(&manifest, &cfg).unwrap_err();
    assert!(matches!(err, Error::InsufficientDivisibility { .. }), "{err}");
}

#[test]
fn runs_are_reproducible_and_fusion_variants_work() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 2);
    for method in [QuotientMethod::Method1, QuotientMethod::Method2] {
        for fusion in [FusionVariant::None, FusionVariant::Select, FusionVariant::Sum] {
            let mut cfg = small_config(method);
            cfg.fusion = fusion;
            if (method, fusion) == (QuotientMethod::Method2, FusionVariant::Select) {
                // the smoothed thermal band outweighs the visual one everywhere,
                // so selection returns the denominator and every quotient is 1
                let err = run_train(&manifest, &cfg).unwrap_err();
                assert!(matches!(err, Error::DegenerateTraining(_)), "{err}");
                continue;
            }
            let (a, _) = run_train(&manifest, &cfg).unwrap_or_else(|e| panic!("{method:?}/{fusion}: {e}"));
            let (b, _) = run_train(&manifest, &cfg).unwrap();
            assert_eq!(a, b, "{method:?}/{fusion}");
            let report = run_evaluate(&manifest, &a).unwrap();
            assert_eq!(report.total_tested(), 6);
        }
    }
}

#[test]
fn seed_env_overrides_config() {
    let mut cfg = PipelineConfig::default();
    std::env::set_var("QF_SEED", "42");
    cfg.apply_env_overrides().unwrap();
    assert_eq!(cfg.train.seed, 42);
    std::env::set_var("QF_SEED", "not-a-number");
    assert!(cfg.apply_env_overrides().is_err());
    std::env::remove_var("QF_SEED");
    cfg.train.seed = 3;
    cfg.apply_env_overrides().unwrap();
    assert_eq!(cfg.train.seed, 3);
}

#[test]
fn config_text_round_trips() {
    let text = "# demo\nmethod = 1\nheight = 40\nwidth = 50\nhidden = 20, 10\nfusion = sum\ncrop = 2,3,60,70\nshuffle = true\n";
    let cfg = PipelineConfig::parse(text).unwrap();
    assert_eq!(cfg.hidden, vec![20, 10]);
    assert_eq!(cfg.fusion, FusionVariant::Sum);
    assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    let err = PipelineConfig::parse("height = 40\nbogus = 1\n").unwrap_err();
    assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
}

#[test]
fn model_file_rejects_damage() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 2);
    let (models, _) = run_train(&manifest, &small_config(QuotientMethod::Method2)).unwrap();
    let bytes = encode_model(&models);
    assert_eq!(&bytes[..8], MAGIC);
    assert_eq!(decode_model(&bytes).unwrap(), models);

    let mut wrong_magic = bytes.clone();
    wrong_magic[0] = b'X';
    assert!(matches!(decode_model(&wrong_magic), Err(Error::ModelFormat(_))));

    let mut wrong_version = bytes.clone();
    wrong_version[8] = FORMAT_VERSION + 1;
    assert!(matches!(
        decode_model(&wrong_version),
        Err(Error::ModelVersion { found, .. }) if found == FORMAT_VERSION + 1
    ));

    for cut in [9, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode_model(&bytes[..cut]), Err(Error::ModelCorrupt(_))), "cut at {cut}");
    }

    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(decode_model(&flipped), Err(Error::ModelCorrupt(_))));

    let path = dir.path().join("m.qf");
    save_model(&models, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}
