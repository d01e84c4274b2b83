//! Run configuration: a TOML file whose keys mirror the global flags.
//! Command-line flags always win over file values.
//!
//! ```toml
//! lexicon_dir = "lexicon"
//! vectors = "vectors.txt"
//! model = "out/model.json"
//! seed = 7
//! c_grid = [0.01, 0.05, 0.1]
//! folds = 10
//! train_fraction = 0.7
//! feature_set = "full"
//! workers = 4
//!
//! [dsm]
//! dim = 600
//! min_count = 10
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use devsent_core::dsm::{Architecture, TrainParams};
use devsent_core::features::FeatureSet;
use devsent_core::learner::DEFAULT_C_GRID;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lexicon_dir: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub c_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub train_fraction: Option<f64>,
    pub feature_set: Option<FeatureSet>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub dsm: DsmConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsmConfig {
    pub architecture: Option<Architecture>,
    pub dim: Option<usize>,
    pub min_count: Option<u64>,
    pub window: Option<usize>,
    pub negative: Option<usize>,
    pub sample: Option<f64>,
    pub epochs: Option<usize>,
    pub alpha: Option<f32>,
}

impl DsmConfig {
    /// Fills unset fields of `self` from `other`.
    pub fn or(self, other: DsmConfig) -> DsmConfig {
        DsmConfig {
            architecture: self.architecture.or(other.architecture),
            dim: self.dim.or(other.dim),
            min_count: self.min_count.or(other.min_count),
            window: self.window.or(other.window),
            negative: self.negative.or(other.negative),
            sample: self.sample.or(other.sample),
            epochs: self.epochs.or(other.epochs),
            alpha: self.alpha.or(other.alpha),
        }
    }

    pub fn params(&self, seed: u64) -> TrainParams {
        let d = TrainParams::default();
        TrainParams {
            architecture: self.architecture.unwrap_or(d.architecture),
            dim: self.dim.unwrap_or(d.dim),
            min_count: self.min_count.unwrap_or(d.min_count),
            window: self.window.unwrap_or(d.window),
            negative: self.negative.unwrap_or(d.negative),
            sample: self.sample.unwrap_or(d.sample),
            epochs: self.epochs.unwrap_or(d.epochs),
            alpha: self.alpha.unwrap_or(d.alpha),
            seed,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_owned(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.lexicon_dir, &mut cfg.vectors, &mut cfg.model, &mut cfg.output_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fills unset fields of `self` (typically from flags) from `file`.
    pub fn or(self, file: RunConfig) -> RunConfig {
        RunConfig {
            lexicon_dir: self.lexicon_dir.or(file.lexicon_dir),
            vectors: self.vectors.or(file.vectors),
            model: self.model.or(file.model),
            output_dir: self.output_dir.or(file.output_dir),
            seed: self.seed.or(file.seed),
            c_grid: self.c_grid.or(file.c_grid),
            folds: self.folds.or(file.folds),
            train_fraction: self.train_fraction.or(file.train_fraction),
            feature_set: self.feature_set.or(file.feature_set),
            workers: self.workers.or(file.workers),
            dsm: self.dsm.or(file.dsm),
        }
    }

    pub fn resolve(self) -> Result<Settings> {
        let s = Settings {
            lexicon_dir: self.lexicon_dir,
            vectors: self.vectors,
            model: self.model,
            output_dir: self.output_dir,
            seed: self.seed.unwrap_or(1),
            c_grid: self.c_grid.unwrap_or_else(|| DEFAULT_C_GRID.to_vec()),
            folds: self.folds.unwrap_or(10),
            train_fraction: self.train_fraction.unwrap_or(0.7),
            feature_set: self.feature_set.unwrap_or(FeatureSet::Full),
            workers: self.workers.unwrap_or(1),
            dsm: self.dsm,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Fully resolved settings with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub lexicon_dir: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub train_fraction: f64,
    pub feature_set: FeatureSet,
    pub workers: usize,
    pub dsm: DsmConfig,
}

impl Settings {
    fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return usage(format!("C grid must be non-empty and positive: {:?}", self.c_grid));
        }
        if self.folds < 2 {
            return usage(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return usage(format!("train fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.workers == 0 {
            return usage("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn lexicon_dir(&self) -> Result<&Path> {
        let dir = self
            .lexicon_dir
            .as_deref()
            .ok_or_else(|| Error::Usage("--lexicon-dir is required".into()))?;
        if !dir.is_dir() {
            return Err(Error::Usage(format!("lexicon directory {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    pub fn model(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::Usage("--model is required".into()))
    }

    /// The vectors file if one was given; it must exist.
    pub fn vectors(&self) -> Result<Option<&Path>> {
        match self.vectors.as_deref() {
            Some(p) if !p.is_file() => Err(Error::Usage(format!("vectors file {} does not exist", p.display()))),
            other => Ok(other),
        }
    }

    /// Places a bare output file name under `output_dir` when one is set.
    pub fn output(&self, path: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_owned(),
        }
    }
}

/// Fails unless `path` is an existing file.
pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Usage(format!("input file {} does not exist", path.display())))
    }
}
