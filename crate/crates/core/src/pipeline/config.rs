//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::Path;

use crate::classifier::TrainConfig;
use crate::eigenspace::DEFAULT_K_MAX;
use crate::error::{Error, Result};
use crate::quotient::{FusionVariant, QuotientConfig, QuotientMethod};

/// Environment variable that overrides the configured training seed.
pub const SEED_ENV: &str = "QF_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Applied to both images of a pair before resizing.
    pub crop: Option<CropRect>,
    pub height: usize,
    pub width: usize,
    pub quotient: QuotientConfig,
    pub fusion: FusionVariant,
    pub k_max: usize,
    /// Hidden layer widths; input is the PCA size and output the class count.
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            crop: None,
            height: 80,
            width: 100,
            quotient: QuotientConfig::default(),
            fusion: FusionVariant::None,
            k_max: DEFAULT_K_MAX,
            hidden: vec![100],
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let divisor = self.quotient.method.required_divisor();
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("target size must be positive".into()));
        }
        if self.height % divisor != 0 || self.width % divisor != 0 {
            return Err(Error::InsufficientDivisibility {
                height: self.height,
                width: self.width,
                divisor,
            });
        }
        if let Some(c) = self.crop {
            if c.height == 0 || c.width == 0 {
                return Err(Error::InvalidArgument("crop rectangle must be non-empty".into()));
            }
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("hidden layer widths must be positive".into()));
        }
        QuotientConfig::new(self.quotient.method, self.quotient.epsilon_rel)?;
        self.train.validate()
    }

    /// Size of the quotient feature image the pipeline produces.
    pub fn feature_dims(&self) -> (usize, usize) {
        self.quotient.method.output_dims(self.height, self.width)
    }

    /// Replaces the seed with `QF_SEED` when that variable is set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.train.seed = raw.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("{SEED_ENV} is not an unsigned integer: {raw:?}"))
            })?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| err(format!("invalid {what} value {value:?}"));
            match key {
                "crop" => cfg.crop = parse_crop(value).ok_or_else(|| bad("crop"))?,
                "height" => cfg.height = value.parse().map_err(|_| bad(key))?,
                "width" => cfg.width = value.parse().map_err(|_| bad(key))?,
                "method" => cfg.quotient.method = value.parse().map_err(|_| bad(key))?,
                "epsilon_rel" => cfg.quotient.epsilon_rel = value.parse().map_err(|_| bad(key))?,
                "fusion" => cfg.fusion = value.parse().map_err(|_| bad(key))?,
                "k_max" => cfg.k_max = value.parse().map_err(|_| bad(key))?,
                "hidden" => {
                    cfg.hidden = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|v| v.trim().parse())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| bad(key))?
                    }
                }
                "learning_rate" => cfg.train.learning_rate = value.parse().map_err(|_| bad(key))?,
                "momentum" => cfg.train.momentum = value.parse().map_err(|_| bad(key))?,
                "max_epochs" => cfg.train.max_epochs = value.parse().map_err(|_| bad(key))?,
                "target_mse" => cfg.train.target_mse = value.parse().map_err(|_| bad(key))?,
                "seed" => cfg.train.seed = value.parse().map_err(|_| bad(key))?,
                "shuffle" => cfg.train.shuffle = value.parse().map_err(|_| bad(key))?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes every field; [`PipelineConfig::parse`] reads it back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let crop = match self.crop {
            Some(c) => format!("{},{},{},{}", c.top, c.left, c.height, c.width),
            None => "none".into(),
        };
        let hidden: Vec<String> = self.hidden.iter().map(ToString::to_string).collect();
        let t = &self.train;
        let _ = writeln!(s, "crop = {crop}");
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "method = {}", self.quotient.method);
        let _ = writeln!(s, "epsilon_rel = {}", self.quotient.epsilon_rel);
        let _ = writeln!(s, "fusion = {}", self.fusion);
        let _ = writeln!(s, "k_max = {}", self.k_max);
        let _ = writeln!(s, "hidden = {}", hidden.join(","));
        let _ = writeln!(s, "learning_rate = {}", t.learning_rate);
        let _ = writeln!(s, "momentum = {}", t.momentum);
        let _ = writeln!(s, "max_epochs = {}", t.max_epochs);
        let _ = writeln!(s, "target_mse = {}", t.target_mse);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "shuffle = {}", t.shuffle);
        s
    }
}

fn parse_crop(value: &str) -> Option<Option<CropRect>> {
    if value == "none" {
        return Some(None);
    }
    let parts: Vec<usize> = value
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    match parts[..] {
        [top, left, height, width] => Some(Some(CropRect {
            top,
            left,
            height,
            width,
        })),
        _ => None,
    }
}

impl From<QuotientMethod> for PipelineConfig {
    fn from(method: QuotientMethod) -> Self {
        let mut cfg = PipelineConfig::default();
        cfg.quotient.method = method;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = PipelineConfig::default();
        assert_eq!((cfg.height, cfg.width), (80, 100));
        assert_eq!(cfg.k_max, 40);
        assert_eq!(cfg.hidden, vec![100]);
        assert_eq!(cfg.feature_dims(), (40, 50));
        assert_eq!(PipelineConfig::from(QuotientMethod::Method1).feature_dims(), (80, 100));
        cfg.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.crop = Some(CropRect {
            top: 3,
            left: 4,
            height: 200,
            width: 150,
        });
        cfg.quotient.epsilon_rel = 0.1 + 0.2;
        cfg.train.learning_rate = 1.0 / 3.0;
        cfg.hidden = vec![64, 32];
        cfg.fusion = FusionVariant::Sum;
        cfg.train.shuffle = true;
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = PipelineConfig::parse("# c\nheight = 80\nwidht = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = PipelineConfig::parse("method = 7").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        assert!(PipelineConfig::parse("height").is_err());
        assert!(PipelineConfig::parse("crop = 1,2,3").is_err());
    }

    #[test]
    fn validation() {
        assert!(PipelineConfig::parse("height = 82\n").is_err());
        assert!(PipelineConfig::parse("method = 1\nheight = 82\n").is_ok());
        assert!(PipelineConfig::parse("method = 1\nheight = 81\n").is_err());
        assert!(PipelineConfig::parse("momentum = 1.0").is_err());
        assert!(PipelineConfig::parse("k_max = 0").is_err());
        assert!(PipelineConfig::parse("hidden = 10,0").is_err());
        assert_eq!(PipelineConfig::parse("hidden =").unwrap().hidden, Vec::<usize>::new());
    }
}
