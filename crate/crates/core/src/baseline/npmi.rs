//! Boolean sliding-window co-occurrence counts and NPMI coherence.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::BaselineError;
use crate::corpus::Document;
use crate::par::{map_ordered, Parallelism};

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Window counts over a reference corpus.
///
/// Each document of `L` tokens contributes `max(1, L - window + 1)` windows:
/// the window slides one token at a time, and a document shorter than the
/// window is a single window. A word (or pair) is counted at most once per
/// window. Empty documents contribute nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CooccurrenceIndex {
    pub window: usize,
    pub doc_freq: HashMap<String, u64>,
    pub pair_freq: HashMap<(String, String), u64>,
    pub total_windows: u64,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl CooccurrenceIndex {
    pub fn word_count(&self, w: &str) -> u64 {
        self.doc_freq.get(w).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.word_count(a);
        }
        self.pair_freq.get(&pair_key(a, b)).copied().unwrap_or(0)
    }

    fn merge(&mut self, other: CooccurrenceIndex) {
        self.total_windows += other.total_windows;
        for (w, c) in other.doc_freq {
            *self.doc_freq.entry(w).or_default() += c;
        }
        for (p, c) in other.pair_freq {
            *self.pair_freq.entry(p).or_default() += c;
        }
    }

    fn count_document(tokens: &[String], window: usize, keep: Option<&HashSet<String>>) -> Self {
        let mut out = CooccurrenceIndex { window, ..Default::default() };
        if tokens.is_empty() {
            return out;
        }
        let positions = tokens.len().saturating_sub(window) + 1;
        for start in 0..positions {
            let end = (start + window).min(tokens.len());
            let present: BTreeSet<&str> =
                tokens[start..end].iter().map(String::as_str).filter(|t| keep.is_none_or(|k| k.contains(*t))).collect();
            out.total_windows += 1;
            let present: Vec<&str> = present.into_iter().collect();
            for (i, a) in present.iter().enumerate() {
                *out.doc_freq.entry(a.to_string()).or_default() += 1;
                for b in &present[i + 1..] {
                    *out.pair_freq.entry(pair_key(a, b)).or_default() += 1;
                }
            }
        }
        out
    }
}

/// Count every word and word pair of the corpus.
pub fn build_cooccurrence(docs: &[Document], window: usize) -> Result<CooccurrenceIndex, BaselineError> {
    build(docs, window, None, Parallelism::Sequential)
}

/// Count only words in `vocabulary` (and pairs of them). Window totals
/// are the same as for [`build_cooccurrence`], so probabilities agree.
pub fn build_cooccurrence_for(
    docs: &[Document],
    window: usize,
    vocabulary: &HashSet<String>,
    par: Parallelism,
) -> Result<CooccurrenceIndex, BaselineError> {
    build(docs, window, Some(vocabulary), par)
}

fn build(
    docs: &[Document],
    window: usize,
    keep: Option<&HashSet<String>>,
    par: Parallelism,
) -> Result<CooccurrenceIndex, BaselineError> {
    if window == 0 {
        return Err(BaselineError::Invalid("window must be at least 1".into()));
    }
    if docs.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    let parts = map_ordered(docs, par, |d| CooccurrenceIndex::count_document(&tokenize(&d.text), window, keep));
    let mut index = CooccurrenceIndex { window, ..Default::default() };
    for p in parts {
        index.merge(p);
    }
    if index.total_windows == 0 {
        return Err(BaselineError::EmptyCorpus);
    }
    Ok(index)
}

/// NPMI of one topic with the pairs that could not be scored.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicNpmi {
    pub value: f64,
    pub pairs: usize,
    pub skipped: Vec<(String, String)>,
}

/// NPMI of a single word pair, clamped to `[-1, 1]`. `None` when either
/// word never occurs.
pub fn npmi_pair(a: &str, b: &str, index: &CooccurrenceIndex, epsilon: f64) -> Option<f64> {
    let (ca, cb) = (index.word_count(a), index.word_count(b));
    if ca == 0 || cb == 0 {
        return None;
    }
    let t = index.total_windows as f64;
    let joint = match index.pair_count(a, b) {
        0 => epsilon,
        c => c as f64,
    };
    let (pa, pb, pab) = (ca as f64 / t, cb as f64 / t, joint / t);
    let denom = -pab.ln();
    if denom <= 0.0 {
        return Some(1.0);
    }
    Some(((pab / (pa * pb)).ln() / denom).clamp(-1.0, 1.0))
}

/// Mean NPMI over all unordered pairs of distinct words.
pub fn npmi_topic<S: AsRef<str>>(
    words: &[S],
    index: &CooccurrenceIndex,
    epsilon: f64,
) -> Result<TopicNpmi, BaselineError> {
    let words: Vec<String> = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
    let mut sum = 0.0;
    let mut pairs = 0;
    let mut skipped = Vec::new();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            match npmi_pair(&words[i], &words[j], index, epsilon) {
                Some(v) => {
                    sum += v;
                    pairs += 1;
                }
                None => skipped.push(pair_key(&words[i], &words[j])),
            }
        }
    }
    if pairs == 0 {
        return Err(BaselineError::Undefined("no word pair of the topic occurs in the reference corpus".into()));
    }
    skipped.sort();
    Ok(TopicNpmi { value: sum / pairs as f64, pairs, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), *t)).collect()
    }

    #[test]
    fn short_document_is_one_window() {
        let ix = build_cooccurrence(&docs(&["a b"]), 10).unwrap();
        assert_eq!(ix.total_windows, 1);
        assert_eq!(ix.pair_count("a", "b"), 1);
        assert_eq!(ix.word_count("zzz"), 0);
    }

    #[test]
    fn window_positions() {
        // windows: [a b a] [b a c] -> a:2 b:2 c:1 ab:2 ac:1 bc:1
        let ix = build_cooccurrence(&docs(&["a b a c"]), 3).unwrap();
        assert_eq!(ix.total_windows, 2);
        assert_eq!((ix.word_count("a"), ix.word_count("b"), ix.word_count("c")), (2, 2, 1));
        assert_eq!((ix.pair_count("a", "b"), ix.pair_count("a", "c"), ix.pair_count("b", "c")), (2, 1, 1));
    }

    #[test]
    fn duplicated_corpus_doubles_counts() {
        let one = build_cooccurrence(&docs(&["x y z x w", "y w"]), 2).unwrap();
        let two = build_cooccurrence(&docs(&["x y z x w", "y w", "x y z x w", "y w"]), 2).unwrap();
        assert_eq!(two.total_windows, 2 * one.total_windows);
        for (w, c) in &one.doc_freq {
            assert_eq!(two.doc_freq[w], 2 * c);
        }
        for (p, c) in &one.pair_freq {
            assert_eq!(two.pair_freq[p], 2 * c);
        }
    }

    #[test]
    fn restricted_index_agrees_with_full() {
        let d = docs(&["the cat sat on the mat", "a cat and a dog", "dog days"]);
        let full = build_cooccurrence(&d, 3).unwrap();
        let keep: HashSet<String> = ["cat", "dog", "mat"].iter().map(|s| s.to_string()).collect();
        let part = build_cooccurrence_for(&d, 3, &keep, Parallelism::Auto).unwrap();
        assert_eq!(part.total_windows, full.total_windows);
        for a in &keep {
            assert_eq!(part.word_count(a), full.word_count(a));
            for b in &keep {
                assert_eq!(part.pair_count(a, b), full.pair_count(a, b));
            }
        }
    }

    #[test]
    fn limits() {
        let ix = build_cooccurrence(&docs(&["a b", "a b"]), 10).unwrap();
        assert_eq!(npmi_pair("a", "b", &ix, DEFAULT_EPSILON), Some(1.0));
        // P(a)=P(b)=1/2, P(ab)=1/4.
        let ix = build_cooccurrence(&docs(&["a b", "a", "b", "c"]), 10).unwrap();
        assert!(npmi_pair("a", "b", &ix, DEFAULT_EPSILON).unwrap().abs() < 1e-15);
        assert_eq!(npmi_pair("a", "zz", &ix, DEFAULT_EPSILON), None);
    }

    #[test]
    fn skipped_pairs_are_reported() {
        let ix = build_cooccurrence(&docs(&["a b", "a", "b", "c"]), 10).unwrap();
        let t = npmi_topic(&["a", "b", "zz"], &ix, DEFAULT_EPSILON).unwrap();
        assert_eq!(t.pairs, 1);
        assert_eq!(t.skipped.len(), 2);
        assert!(npmi_topic(&["zz", "yy"], &ix, DEFAULT_EPSILON).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(build_cooccurrence(&[], 10), Err(BaselineError::EmptyCorpus)));
        assert!(build_cooccurrence(&docs(&["a"]), 0).is_err());
    }
}
