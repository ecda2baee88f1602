use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::grading::{Strategy, SummationParams, TreeParams};
use crate::weak::{AggregationMethod, HmmConfig, LabelingConfig};
use crate::{Error, Result};

pub const WORKDIR_ENV: &str = "CUEGRADE_WORKDIR";
pub const DEFAULT_WORKDIR: &str = "cuegrade-work";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub rubrics: Option<PathBuf>,
    /// Static `word v1 … vd` table; without one, a one-hot table over the
    /// corpus vocabulary is used.
    pub embeddings: Option<PathBuf>,
    pub contextual_embeddings: Option<PathBuf>,
    /// CoNLL-style lemma/POS/dependency layer keyed by answer id.
    pub pre_annotations: Option<PathBuf>,
    /// Tagger interchange file; replaces the silver labels in `spans`.
    pub external_tagger: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Hmm,
    AverageAll,
    AverageSoftOnly,
    Max,
    AverageNonZero,
    SumCapped,
}

impl Aggregator {
    pub fn simple(self) -> Option<AggregationMethod> {
        Some(match self {
            Aggregator::Hmm => return None,
            Aggregator::AverageAll => AggregationMethod::AverageAll,
            Aggregator::AverageSoftOnly => AggregationMethod::AverageSoftOnly,
            Aggregator::Max => AggregationMethod::Max,
            Aggregator::AverageNonZero => AggregationMethod::AverageNonZero,
            Aggregator::SumCapped => AggregationMethod::SumCapped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadChoice {
    #[default]
    Summation,
    DecisionTree,
}

impl std::str::FromStr for HeadChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summation" => Ok(HeadChoice::Summation),
            "tree" | "decision_tree" | "decision-tree" => Ok(HeadChoice::DecisionTree),
            other => Err(Error::Validation(format!("unknown head {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SilverConfig {
    pub aggregator: Aggregator,
    pub hmm: HmmConfig,
}

impl Default for SilverConfig {
    fn default() -> Self {
        SilverConfig {
            aggregator: Aggregator::Hmm,
            hmm: HmmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanConfig {
    pub threshold: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig { threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub kind: HeadChoice,
    pub summation: SummationParams,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    /// Keep only answers in this language.
    pub language: Option<Language>,
    pub labeling: LabelingConfig,
    pub silver: SilverConfig,
    pub spans: SpanConfig,
    pub strategy: Strategy,
    pub head: HeadConfig,
}

fn unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {x} is outside [0,1]")))
    }
}

impl PipelineConfig {
    /// Parses a TOML config; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.paths.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.labeling.validate()?;
        unit("spans.threshold", self.spans.threshold)?;
        unit("silver.hmm.init_threshold", self.silver.hmm.init_threshold)?;
        if !(self.silver.hmm.floor > 0.0 && self.silver.hmm.floor < 0.5) {
            return Err(Error::Validation(format!(
                "silver.hmm.floor = {} must lie in (0, 0.5)",
                self.silver.hmm.floor
            )));
        }
        self.head.summation.validate()?;
        self.head.tree.validate()?;
        Ok(())
    }

    /// Flag, then config, then the environment variable, then the default.
    pub fn workdir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.paths.workdir.clone())
            .or_else(|| std::env::var_os(WORKDIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_WORKDIR))
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.rubrics,
            &mut self.embeddings,
            &mut self.contextual_embeddings,
            &mut self.pre_annotations,
            &mut self.external_tagger,
            &mut self.workdir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::from_toml("", Path::new("/x")).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        let cfg = PipelineConfig::from_toml(
            r#"
language = "de"
strategy = "hard"
[paths]
corpus = "data/corpus.jsonl"
workdir = "/abs/work"
[labeling.thresholds]
bleu = 0.3
[silver]
aggregator = "max"
[head]
kind = "decision_tree"
tree = { max_depth = 5 }
"#,
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(cfg.paths.corpus.as_deref(), Some(Path::new("/cfg/data/corpus.jsonl")));
        assert_eq!(cfg.paths.workdir.as_deref(), Some(Path::new("/abs/work")));
        assert_eq!(cfg.language, Some(Language::De));
        assert_eq!(cfg.strategy, Strategy::Hard);
        assert_eq!(cfg.labeling.threshold("bleu"), 0.3);
        assert_eq!(cfg.silver.aggregator, Aggregator::Max);
        assert_eq!(cfg.head.kind, HeadChoice::DecisionTree);
        assert_eq!(cfg.head.tree.max_depth, Some(5));
        assert_eq!(cfg.head.tree.min_samples_leaf, 1);
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            "[spans]\nthreshold = 1.5",
            "[labeling]\ndefault_threshold = -0.1",
            "[labeling.thresholds]\nno_such_function = 0.2",
            "[head.summation]\nthreshold = 2.0",
            "[paths]\nunknown = \"x\"",
        ] {
            let err = PipelineConfig::from_toml(bad, Path::new(".")).unwrap_err();
            assert!(err.is_validation(), "{bad}: {err}");
        }
    }

    #[test]
    fn unbounded_depth_is_spelled_out() {
        let cfg = PipelineConfig::from_toml("[head.tree]\nmax_depth = \"unbounded\"", Path::new(".")).unwrap();
        assert_eq!(cfg.head.tree.max_depth, None);
        assert!(PipelineConfig::from_toml("[head.tree]\nmax_depth = \"deep\"", Path::new(".")).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = PipelineConfig::default();
        cfg.head.tree.max_depth = None;
        cfg.language = Some(Language::En);
        let back = PipelineConfig::from_toml(&cfg.to_toml().unwrap(), Path::new(".")).unwrap();
        assert_eq!(back, cfg);
    }
}
