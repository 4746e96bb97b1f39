use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, DEFAULT_TOTAL_NEW};
use crate::classifier::ClassifierConfig;
use crate::embeddings::OovPolicy;
use crate::eval::ScoreOptions;
use crate::features::FeatureSet;
use crate::tagger::TaggerConfig;
use crate::{Error, Result};

/// Lexicon and tag resources.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resources {
    /// JSONL POS/NER sidecar; replaces the rule taggers.
    pub sidecar: Option<PathBuf>,
    /// Directory of `<CATEGORY>.txt` name lists.
    pub names_dir: Option<PathBuf>,
    /// `word<TAB>alt1,alt2` synonym file.
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSettings {
    pub total_new: i64,
    #[serde(flatten)]
    pub generation: AugmentConfig,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            total_new: DEFAULT_TOTAL_NEW as i64,
            generation: AugmentConfig::default(),
        }
    }
}

/// Everything a run depends on besides its input files. Loaded from TOML;
/// command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub features: FeatureSet,
    pub oov: OovPolicy,
    pub tagger: TaggerConfig,
    pub classifier: ClassifierConfig,
    pub augment: AugmentSettings,
    pub score: ScoreOptions,
    pub resources: Resources,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            features: FeatureSet::ALL,
            oov: OovPolicy::Zero,
            tagger: TaggerConfig::default(),
            classifier: ClassifierConfig::default(),
            augment: AugmentSettings::default(),
            score: ScoreOptions::default(),
            resources: Resources::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Propagate the top-level seed into every component.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.tagger.seed = seed;
        self.classifier.seed = seed;
        self.augment.generation.seed = seed;
    }
}
