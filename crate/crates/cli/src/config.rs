//! Run configuration: a TOML file, `--set key=value` overrides, and the
//! hash that identifies a configuration in every output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use topiceval::llm::LlmConfig;
use topiceval::scores::Metric;

/// Input locations. Relative paths are resolved against the directory of
/// the configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Model artifact directory (`vocab.txt`, `phi.csv`, `theta.csv`, `doc_ids.txt`).
    pub model: Option<PathBuf>,
    /// Documents JSONL, needed when keywords come from the LLM.
    pub documents: Option<PathBuf>,
    /// Keyword JSONL. When set, the LLM is not queried.
    pub keywords: Option<PathBuf>,
    /// Human keyword JSONL; when set, a second report and the gap are written.
    pub human_keywords: Option<PathBuf>,
    /// Collection topics for topic-aware suggestion; generated when absent.
    pub topics: Option<PathBuf>,
    /// Word embeddings in GloVe text format, optionally gzipped.
    pub embeddings: Option<PathBuf>,
    /// WordNet `dict` directory.
    pub wordnet: Option<PathBuf>,
    /// Documents JSONL used for NPMI.
    pub reference_corpus: Option<PathBuf>,
    /// Recorded LLM responses to replay instead of calling the endpoint.
    pub transcript: Option<PathBuf>,
    /// Append every live LLM exchange to this transcript.
    pub record_transcript: Option<PathBuf>,
}

fn default_n_topical() -> usize {
    10
}
fn default_num_keywords() -> usize {
    5
}
fn default_metrics() -> Vec<String> {
    Metric::ALL.iter().map(|m| m.name().to_string()).collect()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_npmi_top_words() -> usize {
    10
}
fn default_npmi_window() -> usize {
    topiceval::baseline::DEFAULT_WINDOW
}
fn default_td_top_words() -> usize {
    topiceval::baseline::TD_TOP_WORDS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: Paths,
    /// Topical words per document.
    #[serde(default = "default_n_topical")]
    pub n_topical: usize,
    /// Keywords requested per document; overrides `llm.num_keywords`.
    #[serde(default = "default_num_keywords")]
    pub num_keywords: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    /// Use two-stage topic-aware keyword suggestion.
    #[serde(default)]
    pub topic_aware: bool,
    /// Seed for fixture generation. The evaluation itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for scoring; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_npmi_top_words")]
    pub npmi_top_words: usize,
    #[serde(default = "default_npmi_window")]
    pub npmi_window: usize,
    #[serde(default = "default_td_top_words")]
    pub td_top_words: usize,
    #[serde(default)]
    pub llm: LlmConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty configuration uses defaults")
    }
}

impl RunConfig {
    /// Read a configuration file and apply `KEY=VALUE` overrides. Keys are
    /// dotted (`llm.retries=5`); values are TOML literals, or bare strings.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (text, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (text, dir)
            }
            None => (String::new(), PathBuf::new()),
        };
        let mut table: toml::Table = toml::from_str(&text).with_context(|| match path {
            Some(p) => format!("parsing {}", p.display()),
            None => "parsing configuration".into(),
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.base_dir = base_dir;
        Ok(cfg)
    }

    /// Apply a single `KEY=VALUE` override to an already loaded configuration.
    pub fn with_override(&self, kv: &str) -> Result<Self> {
        let mut table = toml::Table::try_from(self).context("serializing configuration")?;
        apply_override(&mut table, kv)?;
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.base_dir = self.base_dir.clone();
        Ok(cfg)
    }

    /// Resolve a configured path against [`RunConfig::base_dir`].
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn metrics(&self) -> Result<Vec<Metric>> {
        let mut out = Vec::new();
        for m in &self.metrics {
            let metric: Metric = m.parse().map_err(anyhow::Error::msg)?;
            if !out.contains(&metric) {
                out.push(metric);
            }
        }
        out.sort();
        Ok(out)
    }

    /// The LLM settings with the top-level keyword count applied.
    pub fn llm_config(&self) -> LlmConfig {
        LlmConfig { num_keywords: self.num_keywords, ..self.llm.clone() }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_topical == 0 {
            bail!("n_topical must be at least 1");
        }
        if self.num_keywords == 0 {
            bail!("num_keywords must be at least 1");
        }
        if self.llm.num_keywords != LlmConfig::default().num_keywords && self.llm.num_keywords != self.num_keywords {
            bail!("llm.num_keywords conflicts with num_keywords; set the top-level value only");
        }
        if self.metrics.is_empty() {
            bail!("no metric selected");
        }
        if self.npmi_window == 0 || self.npmi_top_words < 2 || self.td_top_words == 0 {
            bail!("npmi_window and td_top_words must be positive and npmi_top_words at least 2");
        }
        self.metrics()?;
        self.llm_config().validate()?;
        Ok(())
    }

    /// Hex SHA-256 of the configuration, ignoring settings that cannot
    /// change any output: thread counts and the output directory.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("configuration serializes");
        let obj = v.as_object_mut().expect("configuration is a table");
        obj.remove("parallelism");
        obj.remove("output_dir");
        if let Some(llm) = obj.get_mut("llm").and_then(|l| l.as_object_mut()) {
            llm.remove("parallelism");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

fn apply_override(table: &mut toml::Table, kv: &str) -> Result<()> {
    let (key, raw) = kv.split_once('=').with_context(|| format!("override {kv:?} is not KEY=VALUE"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key {key:?} is malformed");
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override key {key:?}: {p} is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
