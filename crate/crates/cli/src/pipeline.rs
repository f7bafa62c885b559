//! Pipeline stages and the end-to-end `run`.
//!
//! Every failure is tagged with the [`Stage`] it happened in, which also
//! determines the process exit code.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use sha2::{Digest, Sha256};
use topiceval::baseline::{
    build_cooccurrence_for, eval_gap, gap_table, npmi_aggregate, npmi_topic, topic_diversity_n, topic_top_words,
    GapRow, DEFAULT_EPSILON,
};
use topiceval::corpus::{load_documents, load_keywords, load_model_artifact, write_keywords, Document};
use topiceval::lexres::{load_embedding_table, load_synset_index, EmbeddingSource, EmbeddingTable, SynsetIndex};
use topiceval::llm::{
    generate_collection_topics, query_keywords_batch, query_topic_aware_batch, ChatTransport, HttpTransport,
    RecordingTransport, RunLog, TopicList, TranscriptTransport, PROMPT_VERSION,
};
use topiceval::scores::{score_all, Metric, Resources};
use topiceval::topical::{extract_topical_words_with, write_topical_words};
use topiceval::{KeywordSet, ModelArtifact, Parallelism, ScoreReport, WeightedWordSet};

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = concat!("topiceval ", env!("CARGO_PKG_VERSION"));

/// Pipeline stage, for error messages and exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Input,
    Extract,
    Topics,
    Keywords,
    Score,
    Baseline,
    Report,
    Output,
}

impl Stage {
    /// Process exit code for a failure in this stage.
    ///
    /// | code | stage |
    /// |------|-------|
    /// | 2 | configuration or command line |
    /// | 3 | reading inputs, or `validate` found errors |
    /// | 4 | topical word extraction |
    /// | 5 | collection topic generation |
    /// | 6 | keyword suggestion |
    /// | 7 | scoring |
    /// | 8 | baseline metrics |
    /// | 9 | correlation or gap |
    /// | 10 | writing outputs |
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Input => 3,
            Stage::Extract => 4,
            Stage::Topics => 5,
            Stage::Keywords => 6,
            Stage::Score => 7,
            Stage::Baseline => 8,
            Stage::Report => 9,
            Stage::Output => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Extract => "extract",
            Stage::Topics => "topics",
            Stage::Keywords => "keywords",
            Stage::Score => "score",
            Stage::Baseline => "baseline",
            Stage::Report => "report",
            Stage::Output => "output",
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:#}", self.stage.name(), self.error)
    }
}

impl std::error::Error for StageError {}

pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError { stage, error: e.into() })
    }
}

fn required(cfg: &RunConfig, p: &Option<PathBuf>, key: &str) -> Result<PathBuf, StageError> {
    p.as_deref().map(|p| cfg.resolve(p)).ok_or_else(|| anyhow!("paths.{key} is not set")).stage(Stage::Config)
}

fn par(cfg: &RunConfig) -> Parallelism {
    Parallelism::from_threads(cfg.parallelism)
}

pub(crate) fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output").stage(Stage::Output)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).stage(Stage::Output)
}

/// Provenance written into every JSON output.
pub fn provenance(cfg: &RunConfig) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("config_hash".to_string(), cfg.hash()),
        ("prompt_version".to_string(), PROMPT_VERSION.to_string()),
        ("tool_version".to_string(), TOOL_VERSION.to_string()),
    ])
}

pub fn load_artifact(cfg: &RunConfig) -> Result<ModelArtifact, StageError> {
    let dir = required(cfg, &cfg.paths.model, "model")?;
    load_model_artifact(&dir).with_context(|| format!("loading model artifact {}", dir.display())).stage(Stage::Input)
}

pub fn extract(cfg: &RunConfig, artifact: &ModelArtifact) -> Result<BTreeMap<String, WeightedWordSet>, StageError> {
    extract_topical_words_with(artifact, cfg.n_topical, par(cfg)).stage(Stage::Extract)
}

/// Embeddings and WordNet, each loaded only when a selected metric needs it.
#[derive(Default)]
pub struct Lexicon {
    pub synsets: Option<SynsetIndex>,
    pub embeddings: Option<EmbeddingTable>,
}

impl Lexicon {
    pub fn load(cfg: &RunConfig, metrics: &[Metric]) -> Result<Self, StageError> {
        let mut lex = Lexicon::default();
        if metrics.contains(&Metric::Synset) {
            let dir = required(cfg, &cfg.paths.wordnet, "wordnet")?;
            lex.synsets = Some(
                load_synset_index(&dir)
                    .with_context(|| format!("loading WordNet from {}", dir.display()))
                    .stage(Stage::Input)?,
            );
        }
        if metrics.iter().any(|m| m.needs_embeddings()) {
            let path = required(cfg, &cfg.paths.embeddings, "embeddings")?;
            lex.embeddings = Some(
                load_embedding_table(&path)
                    .with_context(|| format!("loading embeddings from {}", path.display()))
                    .stage(Stage::Input)?,
            );
        }
        Ok(lex)
    }

    pub fn resources(&self) -> Resources<'_> {
        Resources {
            synsets: self.synsets.as_ref(),
            embeddings: self.embeddings.as_ref().map(|e| e as &dyn EmbeddingSource),
        }
    }
}

/// The transport for LLM requests: a transcript replay when
/// `paths.transcript` is set, otherwise the configured endpoint.
pub fn transport(cfg: &RunConfig) -> Result<Box<dyn ChatTransport>, StageError> {
    if let Some(t) = &cfg.paths.transcript {
        let path = cfg.resolve(t);
        let replay = TranscriptTransport::load(&path).stage(Stage::Input)?;
        return Ok(Box::new(replay));
    }
    let live = HttpTransport::new(&cfg.llm_config()).stage(Stage::Config)?;
    match &cfg.paths.record_transcript {
        Some(r) => Ok(Box::new(RecordingTransport::new(live, &cfg.resolve(r)).stage(Stage::Output)?)),
        None => Ok(Box::new(live)),
    }
}

pub fn load_docs(cfg: &RunConfig) -> Result<Vec<Document>, StageError> {
    let path = required(cfg, &cfg.paths.documents, "documents")?;
    load_documents(&path).stage(Stage::Input)
}

fn checkpoint_path(cfg: &RunConfig, out_dir: &Path, what: &str, ext: &str) -> PathBuf {
    out_dir.join(format!("{what}.{}.checkpoint.{ext}", &cfg.hash()[..12]))
}

fn remove_checkpoint(path: &Path) {
    if let Err(e) = std::fs::remove_file(path) {
        if e.kind() != std::io::ErrorKind::NotFound {
            log::warn!("could not remove {}: {e}", path.display());
        }
    }
}

/// Collection topics, generated with the LLM and written to `out_dir` as
/// `topics.json` (refined) and `topics_raw.json`.
pub fn generate_topics(
    cfg: &RunConfig,
    transport: &dyn ChatTransport,
    docs: &[Document],
    out_dir: &Path,
    log: &RunLog,
) -> Result<TopicList, StageError> {
    let ck = checkpoint_path(cfg, out_dir, "topics", "json");
    let generation =
        generate_collection_topics(&cfg.llm_config(), transport, docs, log, Some(&ck)).stage(Stage::Topics)?;
    generation.raw.write(&out_dir.join("topics_raw.json")).stage(Stage::Output)?;
    generation.refined.write(&out_dir.join("topics.json")).stage(Stage::Output)?;
    remove_checkpoint(&ck);
    if generation.refined.is_empty() {
        return Err(StageError {
            stage: Stage::Topics,
            error: anyhow!(
                "every one of the {} generated topics fell below the frequency threshold; \
                 lower llm.min_topic_frequency",
                generation.raw.len()
            ),
        });
    }
    Ok(generation.refined)
}

/// Ask the LLM for keywords for every document and write `keywords.jsonl`
/// and `run_log.jsonl` to `out_dir`.
pub fn suggest_keywords(cfg: &RunConfig, docs: &[Document], out_dir: &Path) -> Result<Vec<KeywordSet>, StageError> {
    let transport = transport(cfg)?;
    let log = RunLog::new();
    let llm = cfg.llm_config();
    let ck = checkpoint_path(cfg, out_dir, "keywords", "jsonl");
    let result = if cfg.topic_aware {
        let topics = match &cfg.paths.topics {
            Some(p) => TopicList::load(&cfg.resolve(p)).stage(Stage::Input)?,
            None => generate_topics(cfg, transport.as_ref(), docs, out_dir, &log)?,
        };
        query_topic_aware_batch(&llm, transport.as_ref(), docs, &topics, &log, Some(&ck))
    } else {
        query_keywords_batch(&llm, transport.as_ref(), docs, &log, Some(&ck))
    };
    log.write(&out_dir.join("run_log.jsonl")).stage(Stage::Output)?;
    let sets =
        result.with_context(|| format!("partial results are kept in {}", ck.display())).stage(Stage::Keywords)?;
    write_keywords(&sets, &out_dir.join("keywords.jsonl")).stage(Stage::Output)?;
    remove_checkpoint(&ck);
    Ok(sets)
}

/// Keywords from `paths.keywords` when set, otherwise from the LLM.
pub fn acquire_keywords(cfg: &RunConfig, out_dir: &Path) -> Result<(Vec<KeywordSet>, String), StageError> {
    match &cfg.paths.keywords {
        Some(p) => {
            let path = cfg.resolve(p);
            let sets = load_keywords(&path).stage(Stage::Input)?;
            Ok((sets, "file".into()))
        }
        None => {
            let docs = load_docs(cfg)?;
            let sets = suggest_keywords(cfg, &docs, out_dir)?;
            let source = if cfg.topic_aware { "llm_topic_aware" } else { "llm_plain" };
            Ok((sets, source.into()))
        }
    }
}

/// Score `keywords` against `topical` and attach provenance.
pub fn score(
    cfg: &RunConfig,
    topical: &BTreeMap<String, WeightedWordSet>,
    keywords: &[KeywordSet],
    lexicon: &Lexicon,
    keyword_source: &str,
) -> Result<ScoreReport, StageError> {
    let metrics = cfg.metrics().stage(Stage::Config)?;
    let by_id: BTreeMap<String, KeywordSet> = keywords.iter().map(|k| (k.doc_id.clone(), k.clone())).collect();
    let mut report = score_all(topical, &by_id, &metrics, &lexicon.resources(), par(cfg)).stage(Stage::Score)?;
    report.meta.extend(provenance(cfg));
    report.meta.insert("keywords".into(), keyword_source.to_string());
    report.meta.insert("n_topical".into(), cfg.n_topical.to_string());
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicBaseline {
    pub topic: usize,
    pub words: Vec<String>,
    /// `None` when no word pair of the topic occurs in the reference corpus.
    pub npmi: Option<f64>,
}

/// Topic diversity and NPMI coherence of the model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub meta: BTreeMap<String, String>,
    pub td: f64,
    pub npmi: f64,
    pub topics: Vec<TopicBaseline>,
}

pub fn baseline(cfg: &RunConfig, artifact: &ModelArtifact) -> Result<BaselineSummary, StageError> {
    let corpus_path = required(cfg, &cfg.paths.reference_corpus, "reference_corpus")?;
    let td_words = topic_top_words(artifact, cfg.td_top_words).stage(Stage::Baseline)?;
    let td = topic_diversity_n(&td_words, cfg.td_top_words).stage(Stage::Baseline)?;
    let tops = topic_top_words(artifact, cfg.npmi_top_words).stage(Stage::Baseline)?;
    let reference = load_documents(&corpus_path).stage(Stage::Input)?;
    let wanted: HashSet<String> = tops.iter().flatten().map(|w| w.to_lowercase()).collect();
    let index = build_cooccurrence_for(&reference, cfg.npmi_window, &wanted, par(cfg)).stage(Stage::Baseline)?;
    let mut topics = Vec::new();
    let mut values = Vec::new();
    for (t, words) in tops.into_iter().enumerate() {
        let npmi = match npmi_topic(&words, &index, DEFAULT_EPSILON) {
            Ok(r) => {
                values.push(r.value);
                Some(r.value)
            }
            Err(e) => {
                log::warn!("topic {t}: {e}");
                None
            }
        };
        topics.push(TopicBaseline { topic: t, words, npmi });
    }
    let npmi = npmi_aggregate(&values).context("no topic has an NPMI value").stage(Stage::Baseline)?;
    Ok(BaselineSummary { meta: provenance(cfg), td, npmi, topics })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<GapRow>,
}

pub fn gap(llm: &ScoreReport, human: &ScoreReport, meta: BTreeMap<String, String>) -> Result<GapReport, StageError> {
    let rows = gap_table(llm, human);
    if rows.is_empty() {
        return Err(StageError { stage: Stage::Report, error: anyhow!("the two reports share no metric") });
    }
    for r in &rows {
        if let Err(e) = eval_gap(r.llm, r.human) {
            log::warn!("{}: {e}", r.metric);
        }
    }
    Ok(GapReport { meta, rows })
}

/// Every file of a run with its SHA-256, plus the configuration hash.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub prompt_version: String,
    pub tool_version: String,
    pub files: BTreeMap<String, String>,
}

pub fn write_manifest(cfg: &RunConfig, out_dir: &Path, files: &[PathBuf]) -> Result<Manifest, StageError> {
    let mut hashes = BTreeMap::new();
    for f in files {
        let name = f.strip_prefix(out_dir).unwrap_or(f).to_string_lossy().into_owned();
        hashes.insert(name, sha256_file(f).stage(Stage::Output)?);
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        prompt_version: PROMPT_VERSION.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        files: hashes,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// What [`run_pipeline`] produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: ScoreReport,
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// Extract topical words, obtain keywords, score, and write everything to
/// the output directory:
///
/// * `topical.jsonl`, `report.json` and `manifest.json` always,
/// * `keywords.jsonl` and `run_log.jsonl` when keywords come from the LLM,
///   plus `topics.json` and `topics_raw.json` for generated topics,
/// * `baseline.json` when `paths.reference_corpus` is set; its TD and NPMI
///   also appear in the report's `corpus` section,
/// * `human_report.json` and `gap.json` when `paths.human_keywords` is set.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome, StageError> {
    cfg.check().stage(Stage::Config)?;
    let metrics = cfg.metrics().stage(Stage::Config)?;
    let out_dir = cfg.output_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .stage(Stage::Output)?;
    let mut files = Vec::new();

    let artifact = load_artifact(cfg)?;
    let topical = extract(cfg, &artifact)?;
    let topical_path = out_dir.join("topical.jsonl");
    write_topical_words(&topical, &topical_path).stage(Stage::Output)?;
    files.push(topical_path);

    let (keywords, source) = acquire_keywords(cfg, &out_dir)?;
    for name in ["keywords.jsonl", "run_log.jsonl", "topics.json", "topics_raw.json"] {
        let p = out_dir.join(name);
        if source != "file" && p.exists() {
            files.push(p);
        }
    }

    let lexicon = Lexicon::load(cfg, &metrics)?;
    let mut report = score(cfg, &topical, &keywords, &lexicon, &source)?;

    if cfg.paths.reference_corpus.is_some() {
        let b = baseline(cfg, &artifact)?;
        report.corpus.insert("td".into(), b.td);
        report.corpus.insert("npmi".into(), b.npmi);
        let p = out_dir.join("baseline.json");
        write_json(&p, &b)?;
        files.push(p);
    }

    let report_path = out_dir.join("report.json");
    report.write(&report_path).stage(Stage::Output)?;
    files.push(report_path);

    if let Some(h) = &cfg.paths.human_keywords {
        let human = load_keywords(&cfg.resolve(h)).stage(Stage::Input)?;
        let human_report = score(cfg, &topical, &human, &lexicon, "human")?;
        let p = out_dir.join("human_report.json");
        human_report.write(&p).stage(Stage::Output)?;
        files.push(p);
        let g = gap(&report, &human_report, provenance(cfg))?;
        let p = out_dir.join("gap.json");
        write_json(&p, &g)?;
        files.push(p);
    }

    let manifest = write_manifest(cfg, &out_dir, &files)?;
    Ok(RunOutcome { report, output_dir: out_dir, manifest })
}
