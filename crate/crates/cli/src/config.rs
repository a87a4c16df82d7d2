//! Run configuration: defaults, an optional TOML file, then command-line
//! flags, merged in that order. The merged result is written next to the
//! outputs so a run can be reproduced from its directory alone.

use std::path::{Path, PathBuf};

use asciiclash::reporting::{Format, GroupBy};
use asciiclash::{LevelTag, PromptStrategy};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SNAPSHOT_FILE: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Word list for the core corpus; the bundled 100 words when unset.
    pub words: Option<PathBuf>,
    /// Word list for the sweep; the bundled 20-word subset when unset.
    pub sweep_words: Option<PathBuf>,
    /// Level list such as `L1..L7` or `L2,L4`; each command has its own default.
    pub levels: Option<String>,
    pub font_size_pt: u32,
    pub spacing_x: u32,
    pub spacing_y: u32,
    pub width: u32,
    pub height: u32,
    pub fit_margin: f32,
    pub model: String,
    pub strategies: Vec<String>,
    pub concurrency: usize,
    pub repeats: u32,
    pub temperature: f64,
    pub shuffle_seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub formats: Vec<String>,
    pub group_by: String,
    pub exclude_failures: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            words: None,
            sweep_words: None,
            levels: None,
            font_size_pt: 12,
            spacing_x: 0,
            spacing_y: 0,
            width: 1200,
            height: 600,
            fit_margin: asciiclash::wordart::DEFAULT_FIT_MARGIN,
            model: "oracle:text-biased".into(),
            strategies: vec!["normal".into()],
            concurrency: 4,
            repeats: 1,
            temperature: asciiclash::evalharness::DEFAULT_TEMPERATURE,
            shuffle_seed: None,
            cache_dir: None,
            formats: vec!["csv".into(), "json".into(), "svg".into()],
            group_by: "model-strategy".into(),
            exclude_failures: false,
        }
    }
}

/// Flag values; `None` leaves the file or default value in place.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Master seed for generation and job shuffling
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Word list file, one uppercase word per line
    #[arg(long, global = true)]
    pub words: Option<PathBuf>,
    /// Word list file for the parameter sweep
    #[arg(long, global = true)]
    pub sweep_words: Option<PathBuf>,
    /// Levels, e.g. `L1..L7` or `L2,L3,L4,L7`
    #[arg(long, global = true)]
    pub levels: Option<String>,
    /// Cell font size in points
    #[arg(long, global = true)]
    pub font_size: Option<u32>,
    /// Extra pixels between cells on both axes
    #[arg(long, global = true)]
    pub spacing: Option<u32>,
    /// Extra pixels between cells horizontally
    #[arg(long, global = true)]
    pub spacing_x: Option<u32>,
    /// Extra pixels between cells vertically
    #[arg(long, global = true)]
    pub spacing_y: Option<u32>,
    /// Output image width in pixels
    #[arg(long, global = true)]
    pub width: Option<u32>,
    /// Output image height in pixels
    #[arg(long, global = true)]
    pub height: Option<u32>,
    /// Fraction of the word-art canvas kept clear on every side
    #[arg(long, global = true)]
    pub fit_margin: Option<f32>,
    /// oracle:visual, oracle:text-biased, oracle:constant:<label>,
    /// oracle:scripted:<file>, live or live:<model>
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Comma-separated prompt strategies: normal, no-ocr, cot0, cot3
    #[arg(long, global = true, value_delimiter = ',')]
    pub strategy: Option<Vec<String>>,
    /// Concurrent model calls
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    /// Samples per (image, strategy)
    #[arg(long, global = true)]
    pub repeats: Option<u32>,
    /// Sampling temperature sent to live models
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Seed for the job presentation order (defaults to --seed)
    #[arg(long, global = true)]
    pub shuffle_seed: Option<u64>,
    /// Response cache directory
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Comma-separated report formats: csv, json, svg
    #[arg(long, global = true, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    /// Report grouping: model, strategy, model-strategy
    #[arg(long, global = true)]
    pub group_by: Option<String>,
    /// Report accuracy over parsed responses only
    #[arg(long, global = true)]
    pub exclude_failures: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Invalid(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.seed, &o.seed);
        set(&mut self.out, &o.out);
        if o.words.is_some() {
            self.words = o.words.clone();
        }
        if o.sweep_words.is_some() {
            self.sweep_words = o.sweep_words.clone();
        }
        if o.levels.is_some() {
            self.levels = o.levels.clone();
        }
        set(&mut self.font_size_pt, &o.font_size);
        set(&mut self.spacing_x, &o.spacing);
        set(&mut self.spacing_y, &o.spacing);
        set(&mut self.spacing_x, &o.spacing_x);
        set(&mut self.spacing_y, &o.spacing_y);
        set(&mut self.width, &o.width);
        set(&mut self.height, &o.height);
        set(&mut self.fit_margin, &o.fit_margin);
        set(&mut self.model, &o.model);
        set(&mut self.strategies, &o.strategy);
        set(&mut self.concurrency, &o.concurrency);
        set(&mut self.repeats, &o.repeats);
        set(&mut self.temperature, &o.temperature);
        if o.shuffle_seed.is_some() {
            self.shuffle_seed = o.shuffle_seed;
        }
        if o.cache_dir.is_some() {
            self.cache_dir = o.cache_dir.clone();
        }
        set(&mut self.formats, &o.formats);
        set(&mut self.group_by, &o.group_by);
        self.exclude_failures |= o.exclude_failures;
    }

    pub fn levels_or(&self, default: &[LevelTag]) -> Result<Vec<LevelTag>, Failure> {
        match &self.levels {
            Some(s) => LevelTag::parse_list(s).map_err(Failure::from),
            None => Ok(default.to_vec()),
        }
    }

    pub fn strategies(&self) -> Result<Vec<PromptStrategy>, Failure> {
        let out = self
            .strategies
            .iter()
            .map(|s| s.parse::<PromptStrategy>().map_err(Failure::Invalid))
            .collect::<Result<Vec<_>, _>>()?;
        if out.is_empty() {
            return Err(Failure::Invalid("no strategies given".into()));
        }
        Ok(out)
    }

    pub fn formats(&self) -> Result<Vec<Format>, Failure> {
        self.formats.iter().map(|f| f.parse().map_err(Failure::Invalid)).collect()
    }

    pub fn group_by(&self) -> Result<GroupBy, Failure> {
        self.group_by.parse().map_err(Failure::Invalid)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed.unwrap_or(self.seed)
    }

    /// Checks every field that can be checked without touching the disk.
    pub fn validate(&self) -> Result<(), Failure> {
        self.levels_or(&LevelTag::ALL)?;
        self.strategies()?;
        self.formats()?;
        self.group_by()?;
        if self.concurrency == 0 {
            return Err(Failure::Invalid("concurrency must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Failure::Invalid("repeats must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.fit_margin) {
            return Err(Failure::Invalid(format!("fit margin {} outside [0, 0.5)", self.fit_margin)));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Failure::Invalid(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<(), Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Campaign(format!("{}: {e}", dir.display())))?;
        let text = toml::to_string(self).map_err(|e| Failure::Campaign(format!("config snapshot: {e}")))?;
        let path = dir.join(SNAPSHOT_FILE);
        std::fs::write(&path, text).map_err(|e| Failure::Campaign(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let mut cfg: RunConfig = toml::from_str("seed = 3\nconcurrency = 2\nmodel = \"oracle:visual\"\n").unwrap();
        assert_eq!(cfg.width, 1200);
        let o = Overrides {
            seed: Some(9),
            spacing: Some(8),
            spacing_y: Some(4),
            ..Default::default()
        };
        cfg.apply(&o);
        assert_eq!((cfg.seed, cfg.concurrency, cfg.model.as_str()), (9, 2, "oracle:visual"));
        assert_eq!((cfg.spacing_x, cfg.spacing_y), (8, 4));
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.levels = Some("L2..L4".into());
        cfg.cache_dir = Some("c".into());
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(toml::from_str::<RunConfig>("sed = 1\n").is_err());
        let mut cfg = RunConfig::default();
        cfg.strategies = vec!["cot9".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.formats = vec!["png".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.concurrency = 0;
        assert!(cfg.validate().is_err());
    }
}
