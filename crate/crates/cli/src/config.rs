use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use courtbias_core::backend::BackendSpec;
use courtbias_core::embed::EmbeddingConfig;
use courtbias_core::entail::FlipLexicon;
use courtbias_core::ingest::DivorceFilter;
use courtbias_core::lexicon::{load_verb_list, unpleasant_verbs, GenderLexicons, FLIP_FILE};
use courtbias_core::roletag::Sentinels;
use courtbias_core::sampling::{IterationPolicy, DEFAULT_BATCH};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Jsonl,
    Directory,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub corpus_format: Option<CorpusKind>,
    pub lexicons: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub verbs: Option<PathBuf>,
    pub weat_spec: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub anchor: String,
    pub support_terms: Vec<String>,
    pub threshold: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        let f = DivorceFilter::default();
        IngestConfig {
            anchor: f.anchor,
            support_terms: f.support_terms,
            threshold: f.threshold,
        }
    }
}

impl IngestConfig {
    pub fn filter(&self) -> DivorceFilter {
        DivorceFilter {
            anchor: self.anchor.clone(),
            support_terms: self.support_terms.clone(),
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    /// Keyword sets; each set is one row group in `stats.csv`.
    pub keywords: Vec<Vec<String>>,
    pub group_by_court: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            keywords: vec![vec!["dowry".into()], vec!["498-A".into()]],
            group_by_court: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoletagConfig {
    pub sentinels: Sentinels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    pub runs: usize,
    pub training: EmbeddingConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            runs: 10,
            training: EmbeddingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub batch_size: usize,
    pub max_attempts: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            batch_size: courtbias_core::backend::DEFAULT_BATCH_SIZE,
            max_attempts: courtbias_core::backend::DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub batch_size: usize,
    pub annotators: [String; 2],
    pub contradiction_mismatch: bool,
    pub max_iterations: u32,
    pub min_improvement: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let policy = IterationPolicy::default();
        SamplingConfig {
            batch_size: DEFAULT_BATCH,
            annotators: ["annotator1".into(), "annotator2".into()],
            contradiction_mismatch: false,
            max_iterations: policy.max_iterations,
            min_improvement: policy.min_improvement,
        }
    }
}

impl SamplingConfig {
    pub fn policy(&self) -> IterationPolicy {
        IterationPolicy {
            max_iterations: self.max_iterations,
            min_improvement: self.min_improvement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotationConfig {
    pub bind: String,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            bind: "127.0.0.1:8080".into(),
        }
    }
}

/// Everything a run depends on. Loaded from TOML; command-line flags
/// override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub strict: bool,
    pub backend: Option<String>,
    pub verb_set_name: String,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub stats: StatsConfig,
    pub roletag: RoletagConfig,
    pub embed: EmbedConfig,
    pub backend_client: BackendConfig,
    pub sampling: SamplingConfig,
    pub annotation: AnnotationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            strict: false,
            backend: None,
            verb_set_name: "unpleasant".into(),
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            stats: StatsConfig::default(),
            roletag: RoletagConfig::default(),
            embed: EmbedConfig::default(),
            backend_client: BackendConfig::default(),
            sampling: SamplingConfig::default(),
            annotation: AnnotationConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parses a TOML config, or a JSON snapshot as stored in a run manifest.
    /// Relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.corpus,
            &mut cfg.paths.lexicons,
            &mut cfg.paths.parses,
            &mut cfg.paths.vectors,
            &mut cfg.paths.verbs,
            &mut cfg.paths.weat_spec,
        ] {
            rebase(base, p);
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.paths;
        for (key, path) in [
            ("paths.corpus", &p.corpus),
            ("paths.lexicons", &p.lexicons),
            ("paths.parses", &p.parses),
            ("paths.vectors", &p.vectors),
            ("paths.verbs", &p.verbs),
            ("paths.weat_spec", &p.weat_spec),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "`{key}` points to missing {}",
                        path.display()
                    )));
                }
            }
        }
        if let Some(b) = &self.backend {
            b.parse::<BackendSpec>()
                .map_err(|e| CliError::Config(format!("`backend`: {e}")))?;
        }
        self.embed
            .training
            .validate()
            .map_err(|e| CliError::Config(format!("`embed.training`: {e}")))?;
        if self.embed.runs == 0 {
            return Err(CliError::Config("`embed.runs` must be at least 1".into()));
        }
        if self.sampling.batch_size == 0 {
            return Err(CliError::Config(
                "`sampling.batch_size` must be at least 1".into(),
            ));
        }
        if self.sampling.annotators[0] == self.sampling.annotators[1] {
            return Err(CliError::Config(
                "`sampling.annotators` must name two different ids".into(),
            ));
        }
        if self.backend_client.batch_size == 0 || self.backend_client.max_attempts == 0 {
            return Err(CliError::Config(
                "`backend_client` sizes must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn require<'a>(
        &self,
        key: &str,
        value: &'a Option<PathBuf>,
    ) -> Result<&'a PathBuf, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing config key `{key}`")))
    }

    pub fn backend_spec(&self) -> Result<BackendSpec, CliError> {
        let raw = self.backend.as_ref().ok_or_else(|| {
            CliError::Config("missing config key `backend` (or pass --backend)".into())
        })?;
        raw.parse()
            .map_err(|e| CliError::Config(format!("`backend`: {e}")))
    }

    /// A per-stage seed derived from the root seed and the stage name.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(stage.as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    pub fn verbs(&self) -> Result<Vec<String>, CliError> {
        match &self.paths.verbs {
            Some(p) => Ok(load_verb_list(p)?),
            None => Ok(unpleasant_verbs()),
        }
    }

    pub fn verb_set(&self) -> Result<BTreeSet<String>, CliError> {
        Ok(self.verbs()?.into_iter().collect())
    }

    pub fn lexicons(&self) -> Result<GenderLexicons, CliError> {
        match &self.paths.lexicons {
            Some(dir) => Ok(GenderLexicons::load_dir(dir)?),
            None => Ok(GenderLexicons::bundled()),
        }
    }

    pub fn flip_lexicon(&self) -> Result<FlipLexicon, CliError> {
        if let Some(dir) = &self.paths.lexicons {
            let path = dir.join(FLIP_FILE);
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                return Ok(FlipLexicon::from_json(&text)?);
            }
        }
        Ok(FlipLexicon::bundled())
    }
}
