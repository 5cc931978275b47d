//! Dataset manifest: one CSV row per visual/thermal pair.
//!
//! ```text
//! class_id,visual_path,thermal_path,split
//! # class 0 alice
//! 0,alice/visual/01.pgm,alice/thermal/01.pgm,train
//! ```
//!
//! Lines starting with `#` are comments; a comment of the form
//! `# class <id> <name>` additionally names a class. Relative paths resolve
//! against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 4] = ["class_id", "visual_path", "thermal_path", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("split must be train or test, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub class_id: u32,
    pub visual_path: PathBuf,
    pub thermal_path: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: BTreeMap<u32, String>,
}

impl Manifest {
    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn classes_in(&self, split: Split) -> BTreeSet<u32> {
        self.entries_in(split).map(|e| e.class_id).collect()
    }

    /// Checks that every test class also appears in training.
    pub fn validate(&self) -> Result<()> {
        let train = self.classes_in(Split::Train);
        let missing: Vec<u32> = self
            .classes_in(Split::Test)
            .into_iter()
            .filter(|c| !train.contains(c))
            .collect();
        if !missing.is_empty() {
            return Err(Error::ManifestValidation(format!(
                "test classes {missing:?} have no training pairs"
            )));
        }
        Ok(())
    }

    /// Checks that every referenced image exists.
    pub fn check_files(&self) -> Result<()> {
        for e in &self.entries {
            for p in [&e.visual_path, &e.thermal_path] {
                if !p.is_file() {
                    return Err(Error::MissingFile(p.clone()));
                }
            }
        }
        Ok(())
    }

    /// Parses manifest text. Relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut class_names = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                let mut words = rest.split_whitespace();
                if words.next() == Some("class") {
                    let id = words.next().and_then(|w| w.parse::<u32>().ok()).ok_or_else(|| {
                        Error::ManifestParse {
                            line: i as u64 + 1,
                            message: "class directive needs a numeric id".into(),
                        }
                    })?;
                    let name = words.collect::<Vec<_>>().join(" ");
                    if !name.is_empty() {
                        class_names.insert(id, name);
                    }
                }
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        let mut saw_header = false;
        for record in reader.records() {
            let record = record.map_err(|e| Error::ManifestParse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let fail = |message: String| Error::ManifestParse { line, message };
            if !saw_header {
                if record.iter().ne(MANIFEST_HEADER) {
                    return Err(fail(format!(
                        "expected header {:?}",
                        MANIFEST_HEADER.join(",")
                    )));
                }
                saw_header = true;
                continue;
            }
            if record.len() != 4 {
                return Err(fail(format!("expected 4 fields, found {}", record.len())));
            }
            let class_id = record[0]
                .parse()
                .map_err(|_| fail(format!("class_id {:?} is not a non-negative integer", &record[0])))?;
            let split = record[3].parse().map_err(fail)?;
            let resolve = |p: &str| {
                if p.is_empty() {
                    return Err(fail("empty path".into()));
                }
                let p = Path::new(p);
                Ok(if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) })
            };
            entries.push(ManifestEntry {
                class_id,
                visual_path: resolve(&record[1])?,
                thermal_path: resolve(&record[2])?,
                split,
            });
        }
        if !saw_header {
            return Err(Error::ManifestParse {
                line: 1,
                message: "missing header".into(),
            });
        }
        let manifest = Manifest {
            entries,
            class_names,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Writes the manifest, class names first, with paths as stored.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (id, name) in &self.class_names {
            out.push_str(&format!("# class {id} {name}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        let write_err = |e: csv::Error| Error::InvalidArgument(format!("manifest encoding: {e}"));
        writer.write_record(MANIFEST_HEADER).map_err(write_err)?;
        for e in &self.entries {
            writer
                .write_record([
                    e.class_id.to_string(),
                    e.visual_path.to_string_lossy().into_owned(),
                    e.thermal_path.to_string_lossy().into_owned(),
                    e.split.to_string(),
                ])
                .map_err(write_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("manifest encoding: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }
}

/// Reads, validates and checks file existence for a manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = Manifest::parse(&text, base)?;
    manifest.check_files()?;
    Ok(manifest)
}

/// Builds a manifest from a directory laid out as
/// `<root>/<class>/visual/<name>` and `<root>/<class>/thermal/<name>`.
///
/// Class directories are numbered in sorted order. Pairs are matched by file
/// name, shuffled per class with `seed`, and the first
/// `round(train_frac * n)` (at least one) go to training. Paths are written
/// relative to `root`.
pub fn generate_manifest(root: impl AsRef<Path>, seed: u64, train_frac: f64) -> Result<Manifest> {
    let root = root.as_ref();
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in [0, 1], got {train_frac}"
        )));
    }
    let mut class_dirs: Vec<(String, PathBuf)> = read_dir_sorted(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter_map(|p| Some((p.file_name()?.to_string_lossy().into_owned(), p)))
        .collect();
    class_dirs.sort();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = Manifest::default();
    for (class_id, (name, dir)) in class_dirs.iter().enumerate() {
        let class_id = class_id as u32;
        let visual_dir = dir.join("visual");
        let thermal_dir = dir.join("thermal");
        if !visual_dir.is_dir() || !thermal_dir.is_dir() {
            log::warn!("skipping {}: needs visual/ and thermal/", dir.display());
            continue;
        }
        let mut names: Vec<String> = read_dir_sorted(&visual_dir)?
            .into_iter()
            .filter(|p| p.is_file())
            .filter_map(|p| Some(p.file_name()?.to_string_lossy().into_owned()))
            .filter(|n| thermal_dir.join(n).is_file())
            .collect();
        if names.is_empty() {
            log::warn!("skipping {}: no paired images", dir.display());
            continue;
        }
        names.shuffle(&mut rng);
        let n_train = ((train_frac * names.len() as f64).round() as usize).clamp(1, names.len());
        manifest.class_names.insert(class_id, name.clone());
        for (i, file) in names.iter().enumerate() {
            manifest.entries.push(ManifestEntry {
                class_id,
                visual_path: Path::new(name).join("visual").join(file),
                thermal_path: Path::new(name).join("thermal").join(file),
                split: if i < n_train { Split::Train } else { Split::Test },
            });
        }
    }
    if manifest.entries.is_empty() {
        return Err(Error::ManifestValidation(format!(
            "no class directories with paired images under {}",
            root.display()
        )));
    }
    Ok(manifest)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    paths.sort();
    Ok(paths)
}
