//! The four agreement scores between topical words and reference keywords.

mod assignment;
mod transport;

pub use assignment::{solve_assignment, AssignmentResult};
pub use transport::{solve_ot, TransportPlan, MASS_TOLERANCE};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{CorpusError, KeywordSet, ScoreReport, SkippedDoc};
use crate::lexres::{cost_matrix, root, EmbeddingSource, LexError, OovReport, SynsetIndex};
use crate::par::{map_ordered, Parallelism};
use crate::topical::WeightedWordSet;

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("empty word set")]
    EmptyInput,
    #[error("empty cost matrix")]
    EmptyMatrix,
    #[error("cost matrix has a non-finite entry")]
    NonFinite,
    #[error("infeasible marginals: {0}")]
    Marginals(String),
    #[error("transport simplex did not converge in {0} pivots")]
    NoConvergence(usize),
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("metric {metric} needs {resource}, which was not provided")]
    MissingResource { metric: Metric, resource: &'static str },
    #[error("no document has both topical words and keywords")]
    NoCommonDocuments,
    #[error(transparent)]
    Report(#[from] CorpusError),
}

/// One of the four scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Overlap,
    Synset,
    Oa,
    Ot,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Overlap, Metric::Synset, Metric::Oa, Metric::Ot];

    /// Key used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Metric::Overlap => "s_overlap",
            Metric::Synset => "s_synset",
            Metric::Oa => "s_oa",
            Metric::Ot => "s_ot",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, Metric::Oa | Metric::Ot)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("s_").unwrap_or(&s);
        Ok(match s {
            "overlap" => Metric::Overlap,
            "synset" => Metric::Synset,
            "oa" => Metric::Oa,
            "ot" => Metric::Ot,
            _ => return Err(format!("unknown metric {s:?} (expected overlap, synset, oa or ot)")),
        })
    }
}

fn check_nonempty(n: usize, m: usize) -> Result<(), ScoreError> {
    if n == 0 || m == 0 {
        Err(ScoreError::EmptyInput)
    } else {
        Ok(())
    }
}

/// Number of distinct stems shared by the two sets, divided by `N + M`
/// (the word counts before stemming).
pub fn s_overlap<S: AsRef<str>, T: AsRef<str>>(w: &[S], k: &[T]) -> Result<f64, ScoreError> {
    check_nonempty(w.len(), k.len())?;
    let ws: HashSet<String> = w.iter().map(|x| root(x.as_ref())).collect();
    let ks: HashSet<String> = k.iter().map(|x| root(x.as_ref())).collect();
    Ok(ws.intersection(&ks).count() as f64 / (w.len() + k.len()) as f64)
}

/// Number of `(w_i, k_j)` pairs whose synset sets intersect, divided by `N + M`.
pub fn s_synset<S: AsRef<str>, T: AsRef<str>>(w: &[S], k: &[T], index: &SynsetIndex) -> Result<f64, ScoreError> {
    check_nonempty(w.len(), k.len())?;
    let ws: Vec<BTreeSet<_>> = w.iter().map(|x| index.synsets(x.as_ref())).collect();
    let ks: Vec<BTreeSet<_>> = k.iter().map(|x| index.synsets(x.as_ref())).collect();
    let hits = ws.iter().map(|a| ks.iter().filter(|b| !a.is_disjoint(b)).count()).sum::<usize>();
    Ok(hits as f64 / (w.len() + k.len()) as f64)
}

/// Optimal one-to-one assignment cost over cosine distances. Word weights
/// play no part; out-of-vocabulary words are dropped.
pub fn s_oa<S: AsRef<str>, T: AsRef<str>, E: EmbeddingSource + ?Sized>(
    w: &[S],
    k: &[T],
    table: &E,
) -> Result<f64, ScoreError> {
    s_oa_detail(w, k, table).map(|(v, _)| v)
}

/// [`s_oa`] together with the words dropped for lack of an embedding.
pub fn s_oa_detail<S: AsRef<str>, T: AsRef<str>, E: EmbeddingSource + ?Sized>(
    w: &[S],
    k: &[T],
    table: &E,
) -> Result<(f64, OovReport), ScoreError> {
    check_nonempty(w.len(), k.len())?;
    let c = cost_matrix(w, k, table)?;
    Ok((solve_assignment(c.matrix.view())?.cost, c.oov))
}

/// Optimal transport cost from the weighted topical words to a uniform
/// distribution over the keywords.
///
/// Out-of-vocabulary words are dropped; the surviving topical weights are
/// renormalized and the target is uniform over the surviving keywords.
pub fn s_ot<T: AsRef<str>, E: EmbeddingSource + ?Sized>(
    w: &WeightedWordSet,
    k: &[T],
    table: &E,
) -> Result<f64, ScoreError> {
    s_ot_detail(w, k, table).map(|(v, _)| v)
}

/// [`s_ot`] together with the words dropped for lack of an embedding.
pub fn s_ot_detail<T: AsRef<str>, E: EmbeddingSource + ?Sized>(
    w: &WeightedWordSet,
    k: &[T],
    table: &E,
) -> Result<(f64, OovReport), ScoreError> {
    check_nonempty(w.len(), k.len())?;
    let c = cost_matrix(&w.words, k, table)?;
    let kept: Vec<f64> = c.rows.iter().map(|&i| w.weights[i]).collect();
    let total: f64 = kept.iter().sum();
    let source: Vec<f64> =
        if total > 0.0 { kept.iter().map(|x| x / total).collect() } else { vec![1.0 / kept.len() as f64; kept.len()] };
    let target = vec![1.0 / c.cols.len() as f64; c.cols.len()];
    Ok((solve_ot(c.matrix.view(), &source, &target)?.cost, c.oov))
}

/// Lexical resources used by [`score_all`]. Each is only needed by the
/// metrics that use it.
#[derive(Clone, Copy, Default)]
pub struct Resources<'a> {
    pub synsets: Option<&'a SynsetIndex>,
    pub embeddings: Option<&'a dyn EmbeddingSource>,
}

/// Scores of one document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DocScores {
    pub values: BTreeMap<String, f64>,
    pub failures: Vec<(Metric, String)>,
    pub oov: OovReport,
}

/// Compute the selected metrics for one document. A metric that fails is
/// recorded in `failures` rather than aborting the others.
pub fn score_document(w: &WeightedWordSet, k: &KeywordSet, metrics: &[Metric], resources: &Resources) -> DocScores {
    let mut out = DocScores::default();
    for &metric in metrics {
        let result = match metric {
            Metric::Overlap => s_overlap(&w.words, &k.words),
            Metric::Synset => match resources.synsets {
                Some(ix) => s_synset(&w.words, &k.words, ix),
                None => Err(ScoreError::MissingResource { metric, resource: "a WordNet index" }),
            },
            Metric::Oa | Metric::Ot => match resources.embeddings {
                Some(table) => {
                    let r = if metric == Metric::Oa {
                        s_oa_detail(&w.words, &k.words, table)
                    } else {
                        s_ot_detail(w, &k.words, table)
                    };
                    r.map(|(v, oov)| {
                        out.oov = oov;
                        v
                    })
                }
                None => Err(ScoreError::MissingResource { metric, resource: "an embedding table" }),
            },
        };
        match result {
            Ok(v) => {
                out.values.insert(metric.name().to_string(), v);
            }
            Err(e) => out.failures.push((metric, e.to_string())),
        }
    }
    out
}

/// Score every document present in both maps.
///
/// Documents missing from either side, and individual metrics that cannot
/// be computed, are listed in the report's `skipped` section. Words without
/// embeddings are listed in `meta["oov_words"]`. The report is identical for
/// every degree of parallelism.
pub fn score_all(
    topical: &BTreeMap<String, WeightedWordSet>,
    keywords: &BTreeMap<String, KeywordSet>,
    metrics: &[Metric],
    resources: &Resources,
    par: Parallelism,
) -> Result<ScoreReport, ScoreError> {
    for &metric in metrics {
        if metric == Metric::Synset && resources.synsets.is_none() {
            return Err(ScoreError::MissingResource { metric, resource: "a WordNet index" });
        }
        if metric.needs_embeddings() && resources.embeddings.is_none() {
            return Err(ScoreError::MissingResource { metric, resource: "an embedding table" });
        }
    }
    let metrics: Vec<Metric> = metrics.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let common: Vec<(&String, &WeightedWordSet, &KeywordSet)> =
        topical.iter().filter_map(|(id, w)| keywords.get(id).map(|k| (id, w, k))).collect();
    if common.is_empty() {
        return Err(ScoreError::NoCommonDocuments);
    }
    let mut skipped: Vec<SkippedDoc> = Vec::new();
    for id in topical.keys().filter(|id| !keywords.contains_key(*id)) {
        skipped.push(SkippedDoc { doc_id: id.clone(), metric: None, reason: "no keywords".into() });
    }
    for id in keywords.keys().filter(|id| !topical.contains_key(*id)) {
        skipped.push(SkippedDoc { doc_id: id.clone(), metric: None, reason: "no topical words".into() });
    }

    let scored = map_ordered(&common, par, |(_, w, k)| score_document(w, k, &metrics, resources));
    let mut per_doc = BTreeMap::new();
    let mut oov_words = BTreeSet::new();
    for ((id, _, _), doc) in common.iter().zip(scored) {
        for (metric, reason) in doc.failures {
            skipped.push(SkippedDoc { doc_id: (*id).clone(), metric: Some(metric.name().into()), reason });
        }
        oov_words.extend(doc.oov.w.into_iter().chain(doc.oov.k));
        per_doc.insert((*id).clone(), doc.values);
    }
    skipped.sort_by(|a, b| (&a.doc_id, &a.metric).cmp(&(&b.doc_id, &b.metric)));
    let names: Vec<&str> = metrics.iter().map(|m| m.name()).collect();
    let mut report = ScoreReport::from_per_doc(&names, per_doc, skipped)?;
    if !oov_words.is_empty() {
        report.meta.insert("oov_words".into(), oov_words.into_iter().collect::<Vec<_>>().join(", "));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::KeywordSource;
    use crate::lexres::{EmbeddingTable, Pos, SynsetId};

    fn kw(id: &str, words: &[&str]) -> KeywordSet {
        KeywordSet::new(id, words.iter().copied(), KeywordSource::Human).unwrap()
    }

    fn ww(words: &[&str]) -> WeightedWordSet {
        WeightedWordSet::uniform(words.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_pairs(
            3,
            [
                ("alpha", vec![1.0, 0.0, 0.0]),
                ("beta", vec![0.0, 1.0, 0.0]),
                ("gamma", vec![0.0, 0.0, 1.0]),
                ("delta", vec![1.0, 1.0, 0.0]),
                ("epsilon", vec![0.0, 1.0, 1.0]),
            ],
        )
        .unwrap()
    }

    const FIVE: [&str; 5] = ["alpha", "beta", "gamma", "delta", "epsilon"];

    #[test]
    fn overlap_examples() {
        assert_eq!(s_overlap(&FIVE, &FIVE).unwrap(), 0.5);
        assert_eq!(s_overlap(&["cat"], &["dog"]).unwrap(), 0.0);
        assert_eq!(s_overlap(&["drive", "drives"], &["drive"]).unwrap(), 1.0 / 3.0);
        assert!(matches!(s_overlap::<&str, &str>(&[], &["a"]), Err(ScoreError::EmptyInput)));
    }

    #[test]
    fn synset_examples() {
        let ix = SynsetIndex::from_entries(
            FIVE.iter().enumerate().map(|(n, w)| (*w, vec![SynsetId { offset: n as u32 + 1, pos: Pos::Noun }])),
        );
        assert_eq!(s_synset(&FIVE, &FIVE, &ix).unwrap(), 0.5);
        assert_eq!(s_synset(&["zzq", "yyq"], &["xxq"], &ix).unwrap(), 0.0);
    }

    #[test]
    fn oa_and_ot_examples() {
        let t = table();
        assert_eq!(s_oa(&FIVE, &FIVE, &t).unwrap(), 0.0);
        assert_eq!(s_oa(&["alpha"], &["beta"], &t).unwrap(), 1.0);
        assert!(s_ot(&ww(&FIVE), &FIVE, &t).unwrap().abs() < 1e-15);
        let w = WeightedWordSet::new(vec!["alpha".into(), "delta".into()], vec![0.75, 0.25]).unwrap();
        let expect = 0.75 * 1.0 + 0.25 * (1.0 - 1.0 / 2f64.sqrt());
        assert!((s_ot(&w, &["beta"], &t).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn ot_renormalizes_after_oov_drop() {
        let t = table();
        let w = WeightedWordSet::new(vec!["alpha".into(), "unknown".into()], vec![0.6, 0.4]).unwrap();
        let (v, oov) = s_ot_detail(&w, &["beta", "alsounknown"], &t).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(oov.w, vec!["unknown".to_string()]);
        assert_eq!(oov.k, vec!["alsounknown".to_string()]);
    }

    #[test]
    fn score_all_single_identical_doc() {
        let topical = BTreeMap::from([("d1".to_string(), ww(&FIVE))]);
        let keywords = BTreeMap::from([("d1".to_string(), kw("d1", &FIVE))]);
        let t = table();
        let res = Resources { synsets: None, embeddings: Some(&t) };
        let r =
            score_all(&topical, &keywords, &[Metric::Overlap, Metric::Oa, Metric::Ot], &res, Parallelism::Sequential)
                .unwrap();
        let d = &r.per_doc["d1"];
        assert_eq!(d["s_overlap"], 0.5);
        assert_eq!(d["s_oa"], 0.0);
        assert!(d["s_ot"].abs() < 1e-15);
        assert!(r.skipped.is_empty());
    }

    #[test]
    fn score_all_skips_missing_docs() {
        let topical = BTreeMap::from([("d1".to_string(), ww(&FIVE)), ("d2".to_string(), ww(&FIVE))]);
        let keywords = BTreeMap::from([("d1".to_string(), kw("d1", &FIVE))]);
        let r = score_all(&topical, &keywords, &[Metric::Overlap], &Resources::default(), Parallelism::Auto).unwrap();
        assert_eq!(r.per_doc.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].doc_id, "d2");
    }

    #[test]
    fn score_all_errors() {
        let topical = BTreeMap::from([("d1".to_string(), ww(&FIVE))]);
        let keywords = BTreeMap::from([("d2".to_string(), kw("d2", &FIVE))]);
        let none = Resources::default();
        assert!(matches!(
            score_all(&topical, &keywords, &[Metric::Overlap], &none, Parallelism::Auto),
            Err(ScoreError::NoCommonDocuments)
        ));
        assert!(matches!(
            score_all(&topical, &keywords, &[Metric::Oa], &none, Parallelism::Auto),
            Err(ScoreError::MissingResource { .. })
        ));
    }

    #[test]
    fn per_metric_failures_are_skipped_not_fatal() {
        let topical = BTreeMap::from([("d1".to_string(), ww(&["nope"]))]);
        let keywords = BTreeMap::from([("d1".to_string(), kw("d1", &["alpha"]))]);
        let t = table();
        let res = Resources { synsets: None, embeddings: Some(&t) };
        let r = score_all(&topical, &keywords, &[Metric::Overlap, Metric::Oa], &res, Parallelism::Auto).unwrap();
        assert_eq!(r.per_doc["d1"].len(), 1);
        assert_eq!(r.skipped[0].metric.as_deref(), Some("s_oa"));
        assert_eq!(r.aggregates["s_oa"].count, 0);
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("OT".parse::<Metric>().unwrap(), Metric::Ot);
        assert!("bleu".parse::<Metric>().is_err());
    }
}
