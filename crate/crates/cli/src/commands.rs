//! One function per subcommand, each returning the files it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use topiceval::baseline::{correlation_matrix, metric_series, per_doc_series, CorrelationMatrix};
use topiceval::corpus::load_keywords;
use topiceval::llm::RunLog;
use topiceval::topical::{load_topical_words, write_topical_words};
use topiceval::ScoreReport;

use crate::config::RunConfig;
use crate::pipeline::{
    self, baseline, extract, gap, load_artifact, load_docs, write_json, Lexicon, Stage, StageError, StageExt,
};

fn out_path(cfg: &RunConfig, out: Option<&Path>, default: &str) -> Result<PathBuf, StageError> {
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir().join(default),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).stage(Stage::Output)?;
    }
    Ok(path)
}

/// Topical words of every document, as JSONL.
pub fn extract_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf, StageError> {
    cfg.check().stage(Stage::Config)?;
    let artifact = load_artifact(cfg)?;
    let topical = extract(cfg, &artifact)?;
    let path = out_path(cfg, out, "topical.jsonl")?;
    write_topical_words(&topical, &path).stage(Stage::Output)?;
    Ok(path)
}

/// LLM keywords (plain or topic-aware) for every document, written with the
/// run log into the output directory.
pub fn keywords_cmd(cfg: &RunConfig) -> Result<PathBuf, StageError> {
    cfg.check().stage(Stage::Config)?;
    let docs = load_docs(cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).stage(Stage::Output)?;
    pipeline::suggest_keywords(cfg, &docs, &dir)?;
    Ok(dir.join("keywords.jsonl"))
}

/// Collection topics, written as `topics.json` and `topics_raw.json`.
pub fn topics_cmd(cfg: &RunConfig) -> Result<PathBuf, StageError> {
    cfg.check().stage(Stage::Config)?;
    let docs = load_docs(cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).stage(Stage::Output)?;
    let transport = pipeline::transport(cfg)?;
    let log = RunLog::new();
    let result = pipeline::generate_topics(cfg, transport.as_ref(), &docs, &dir, &log);
    log.write(&dir.join("topics_run_log.jsonl")).stage(Stage::Output)?;
    result?;
    Ok(dir.join("topics.json"))
}

/// Score a keyword file against topical words, read from `topical` or
/// extracted from the model artifact.
pub fn score_cmd(
    cfg: &RunConfig,
    topical: Option<&Path>,
    keywords: &Path,
    out: Option<&Path>,
) -> Result<PathBuf, StageError> {
    cfg.check().stage(Stage::Config)?;
    let words = match topical {
        Some(p) => load_topical_words(p).stage(Stage::Input)?,
        None => extract(cfg, &load_artifact(cfg)?)?,
    };
    let sets = load_keywords(keywords).stage(Stage::Input)?;
    let lexicon = Lexicon::load(cfg, &cfg.metrics().stage(Stage::Config)?)?;
    let label = format!("file:{}", keywords.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
    let report = pipeline::score(cfg, &words, &sets, &lexicon, &label)?;
    let path = out_path(cfg, out, "report.json")?;
    report.write(&path).stage(Stage::Output)?;
    Ok(path)
}

/// Topic diversity and NPMI of the model artifact.
pub fn baseline_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf, StageError> {
    cfg.check().stage(Stage::Config)?;
    let artifact = load_artifact(cfg)?;
    let summary = baseline(cfg, &artifact)?;
    let path = out_path(cfg, out, "baseline.json")?;
    write_json(&path, &summary)?;
    Ok(path)
}

#[derive(Serialize)]
struct CorrelationOutput {
    /// `per_doc` correlates metrics across the documents of one report;
    /// `reports` correlates corpus-level values across reports.
    mode: &'static str,
    reports: Vec<String>,
    matrix: CorrelationMatrix,
}

fn read_reports(paths: &[PathBuf]) -> Result<Vec<ScoreReport>, StageError> {
    paths.iter().map(|p| ScoreReport::read(p).stage(Stage::Input)).collect()
}

/// Pearson correlation matrix, as JSON, plus CSV when `csv` is given.
pub fn correlate_cmd(
    reports: &[PathBuf],
    per_doc: bool,
    out: &Path,
    csv: Option<&Path>,
) -> Result<CorrelationMatrix, StageError> {
    let loaded = read_reports(reports)?;
    let series: BTreeMap<String, Vec<f64>> = if per_doc {
        match loaded.as_slice() {
            [one] => per_doc_series(one),
            _ => return Err(anyhow!("--per-doc takes exactly one report")).stage(Stage::Config),
        }
    } else {
        if loaded.len() < 3 {
            return Err(anyhow!("correlating across reports needs at least three reports")).stage(Stage::Config);
        }
        metric_series(&loaded)
    };
    let matrix = correlation_matrix(&series).stage(Stage::Report)?;
    let output = CorrelationOutput {
        mode: if per_doc { "per_doc" } else { "reports" },
        reports: reports.iter().map(|p| p.display().to_string()).collect(),
        matrix: matrix.clone(),
    };
    write_json(out, &output)?;
    if let Some(c) = csv {
        std::fs::write(c, matrix.to_csv()).with_context(|| format!("writing {}", c.display())).stage(Stage::Output)?;
    }
    Ok(matrix)
}

/// Gap between a report computed with LLM keywords and one with human keywords.
pub fn gap_cmd(llm: &Path, human: &Path, out: &Path) -> Result<PathBuf, StageError> {
    let loaded = read_reports(&[llm.to_path_buf(), human.to_path_buf()])?;
    let mut meta = BTreeMap::new();
    for (key, r) in [("llm_config_hash", &loaded[0]), ("human_config_hash", &loaded[1])] {
        if let Some(h) = r.meta.get("config_hash") {
            meta.insert(key.to_string(), h.clone());
        }
    }
    let g = gap(&loaded[0], &loaded[1], meta)?;
    write_json(out, &g)?;
    Ok(out.to_path_buf())
}
