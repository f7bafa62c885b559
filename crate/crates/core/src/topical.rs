//! Per-document word distributions and their top-weighted "topical" words.

use std::collections::{BTreeMap, HashSet};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::corpus::{ModelArtifact, Vocabulary, ROW_SUM_TOLERANCE};
use crate::par::{map_ordered, Parallelism};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicalError {
    #[error("theta row has {theta} topics but phi has {phi}")]
    Dimension { theta: usize, phi: usize },
    #[error("{what} is not a probability vector (sum {sum})")]
    NotOnSimplex { what: String, sum: f64 },
    #[error("requested {n} top words but the vocabulary has {v}")]
    BadCount { n: usize, v: usize },
    #[error("invalid weighted word set: {0}")]
    Invalid(String),
}

/// Topical words of a document with their masses, heaviest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedWordSet {
    pub words: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub normalized: bool,
}

impl WeightedWordSet {
    /// Validate and renormalize a weighted list. The sum must be within
    /// [`ROW_SUM_TOLERANCE`] of one unless `renormalize_any` is set.
    pub fn new(words: Vec<String>, weights: Vec<f64>) -> Result<Self, TopicalError> {
        Self::build(words, weights, false)
    }

    fn build(words: Vec<String>, mut weights: Vec<f64>, renormalize_any: bool) -> Result<Self, TopicalError> {
        if words.is_empty() || words.len() != weights.len() {
            return Err(TopicalError::Invalid(format!("{} words with {} weights", words.len(), weights.len())));
        }
        let mut seen = HashSet::new();
        if let Some(w) = words.iter().find(|w| !seen.insert(w.as_str())) {
            return Err(TopicalError::Invalid(format!("duplicate word {w:?}")));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TopicalError::Invalid("weights must be finite and non-negative".into()));
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return Err(TopicalError::Invalid("weights must be non-increasing".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 || (!renormalize_any && (sum - 1.0).abs() > ROW_SUM_TOLERANCE) {
            return Err(TopicalError::NotOnSimplex { what: "topical word weights".into(), sum });
        }
        // already-normalized input is kept bit-for-bit so files round-trip
        if (sum - 1.0).abs() > 1e-12 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self { words, weights, normalized: true })
    }

    /// Equal weights over `words`.
    pub fn uniform(words: Vec<String>) -> Result<Self, TopicalError> {
        let n = words.len();
        Self::build(words, vec![1.0; n], true)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn check_simplex(v: ArrayView1<f64>, what: impl Fn() -> String) -> Result<(), TopicalError> {
    let sum = v.sum();
    if v.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(TopicalError::NotOnSimplex { what: what(), sum });
    }
    Ok(())
}

/// Mixture of topic-word distributions weighted by the document's topic
/// proportions: `w[v] = sum_k theta[k] * phi[k][v]`.
pub fn compose_word_distribution(theta_row: ArrayView1<f64>, phi: &Array2<f64>) -> Result<Vec<f64>, TopicalError> {
    if theta_row.len() != phi.nrows() {
        return Err(TopicalError::Dimension { theta: theta_row.len(), phi: phi.nrows() });
    }
    check_simplex(theta_row, || "theta row".into())?;
    for (k, row) in phi.rows().into_iter().enumerate() {
        check_simplex(row, || format!("phi row {k}"))?;
    }
    Ok(theta_row.dot(phi).to_vec())
}

/// The `n` heaviest words of `w`, ties broken by ascending vocabulary index,
/// with weights renormalized over the selection.
pub fn top_words(w: &[f64], vocab: &Vocabulary, n: usize) -> Result<WeightedWordSet, TopicalError> {
    let v = vocab.len();
    if n == 0 || n > v || w.len() != v {
        return Err(TopicalError::BadCount { n, v });
    }
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    order.truncate(n);
    let words = order.iter().map(|&i| vocab.words()[i].clone()).collect();
    let weights = order.iter().map(|&i| w[i]).collect();
    WeightedWordSet::build(words, weights, true)
}

/// Topical words for every document of the artifact, keyed by doc id.
pub fn extract_topical_words(
    artifact: &ModelArtifact,
    n: usize,
) -> Result<BTreeMap<String, WeightedWordSet>, TopicalError> {
    extract_topical_words_with(artifact, n, Parallelism::Auto)
}

pub fn extract_topical_words_with(
    artifact: &ModelArtifact,
    n: usize,
    par: Parallelism,
) -> Result<BTreeMap<String, WeightedWordSet>, TopicalError> {
    let v = artifact.vocabulary.len();
    if n == 0 || n > v {
        return Err(TopicalError::BadCount { n, v });
    }
    let rows: Vec<usize> = (0..artifact.num_docs()).collect();
    let sets = map_ordered(&rows, par, |&d| {
        let w = compose_word_distribution(artifact.theta.row(d), &artifact.phi)?;
        top_words(&w, &artifact.vocabulary, n)
    });
    artifact.doc_ids.iter().cloned().zip(sets).map(|(id, s)| s.map(|s| (id, s))).collect()
}

#[derive(Serialize, Deserialize)]
struct TopicalRecord {
    doc_id: String,
    words: Vec<String>,
    weights: Vec<f64>,
}

/// Write topical words as JSONL `{"doc_id", "words", "weights"}`, in key order.
pub fn write_topical_words(
    sets: &BTreeMap<String, WeightedWordSet>,
    path: &std::path::Path,
) -> Result<(), crate::corpus::CorpusError> {
    let rows: Vec<TopicalRecord> = sets
        .iter()
        .map(|(id, s)| TopicalRecord { doc_id: id.clone(), words: s.words.clone(), weights: s.weights.clone() })
        .collect();
    crate::corpus::write_jsonl(path, &rows)
}

/// Read topical words written by [`write_topical_words`] (or any exporter
/// following the same format).
pub fn load_topical_words(
    path: &std::path::Path,
) -> Result<BTreeMap<String, WeightedWordSet>, crate::corpus::CorpusError> {
    use crate::corpus::CorpusError;
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |msg: String| CorpusError::Malformed { path: path.to_path_buf(), line: n + 1, msg };
        let rec: TopicalRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let set = WeightedWordSet::new(rec.words, rec.weights).map_err(|e| malformed(e.to_string()))?;
        if out.insert(rec.doc_id.clone(), set).is_some() {
            return Err(CorpusError::Duplicate { kind: "topical doc_id", id: rec.doc_id });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn topical_jsonl_round_trip() {
        let mut sets = BTreeMap::new();
        sets.insert("b".to_string(), top_words(&[0.1, 0.6, 0.3], &vocab(&["x", "y", "z"]), 2).unwrap());
        sets.insert("a".to_string(), WeightedWordSet::uniform(vec!["q".into()]).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        write_topical_words(&sets, &p).unwrap();
        assert_eq!(load_topical_words(&p).unwrap(), sets);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("{\"doc_id\":\"a\""));
    }
    use proptest::prelude::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::new(words.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn one_hot_theta_selects_phi_row() {
        let phi = array![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]];
        assert_eq!(compose_word_distribution(array![0.0, 1.0].view(), &phi).unwrap(), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn single_topic_ignores_theta() {
        let phi = array![[0.2, 0.3, 0.5]];
        assert_eq!(compose_word_distribution(array![1.0].view(), &phi).unwrap(), vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn mixture_matches_hand_product() {
        let phi = array![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]];
        let w = compose_word_distribution(array![0.3, 0.7].view(), &phi).unwrap();
        for (got, want) in w.iter().zip([0.15, 0.5, 0.35]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let phi = array![[0.5, 0.5]];
        assert_eq!(
            compose_word_distribution(array![0.5, 0.5].view(), &phi),
            Err(TopicalError::Dimension { theta: 2, phi: 1 })
        );
    }

    #[test]
    fn top_words_renormalizes() {
        let s = top_words(&[0.7, 0.2, 0.1], &vocab(&["a", "b", "c"]), 2).unwrap();
        assert_eq!(s.words, vec!["a", "b"]);
        assert!((s.weights[0] - 0.7 / 0.9).abs() < 1e-15);
        assert!((s.weights[1] - 0.2 / 0.9).abs() < 1e-15);
        assert!(s.normalized);
    }

    #[test]
    fn ties_break_by_index() {
        let s = top_words(&[0.2; 5], &vocab(&["e", "d", "c", "b", "a"]), 3).unwrap();
        assert_eq!(s.words, vec!["e", "d", "c"]);
    }

    #[test]
    fn n_equal_v_returns_all_sorted() {
        let s = top_words(&[0.1, 0.6, 0.3], &vocab(&["a", "b", "c"]), 3).unwrap();
        assert_eq!(s.words, vec!["b", "c", "a"]);
        assert_eq!(s.weights, vec![0.6, 0.3, 0.1]);
    }

    #[test]
    fn bad_counts() {
        let v = vocab(&["a", "b"]);
        assert!(matches!(top_words(&[0.5, 0.5], &v, 0), Err(TopicalError::BadCount { .. })));
        assert!(matches!(top_words(&[0.5, 0.5], &v, 3), Err(TopicalError::BadCount { .. })));
    }

    #[test]
    fn identical_theta_rows_give_identical_sets() {
        let art = ModelArtifact::new(
            vocab(&["a", "b", "c"]),
            array![[0.6, 0.3, 0.1], [0.1, 0.1, 0.8]],
            array![[0.4, 0.6], [0.4, 0.6], [0.4, 0.6]],
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        let out = extract_topical_words(&art, 2).unwrap();
        assert_eq!(out["x"], out["y"]);
        assert_eq!(out["y"], out["z"]);
    }

    #[test]
    fn weighted_set_validation() {
        assert!(WeightedWordSet::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(WeightedWordSet::new(vec!["a".into(), "b".into()], vec![0.4, 0.6]).is_err());
        assert!(WeightedWordSet::new(vec!["a".into()], vec![0.5]).is_err());
        let u = WeightedWordSet::uniform(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(u.weights, vec![0.5, 0.5]);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_map(|mut v| {
            v[0] += 1e-3;
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
    }

    proptest! {
        #[test]
        fn weights_sum_to_one_and_growing_n_keeps_words(w in simplex(12), n in 1usize..12) {
            let names: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
            let v = Vocabulary::new(names).unwrap();
            let a = top_words(&w, &v, n).unwrap();
            let b = top_words(&w, &v, n + 1).unwrap();
            prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(a.words.iter().all(|x| b.words.contains(x)));
        }

        #[test]
        fn vocabulary_permutation_preserves_pairs(w in simplex(8), seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..8).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let names: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
            // distinct masses so the tie-break cannot reorder the selection
            let mut w = w;
            for (i, x) in w.iter_mut().enumerate() { *x += i as f64 * 1e-6; }
            let v1 = Vocabulary::new(names.clone()).unwrap();
            let v2 = Vocabulary::new(perm.iter().map(|&i| names[i].clone()).collect()).unwrap();
            let w2: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
            let a = top_words(&w, &v1, 5).unwrap();
            let b = top_words(&w2, &v2, 5).unwrap();
            let mut pa: Vec<_> = a.words.iter().zip(&a.weights).map(|(x, y)| (x.clone(), y.to_bits())).collect();
            let mut pb: Vec<_> = b.words.iter().zip(&b.weights).map(|(x, y)| (x.clone(), y.to_bits())).collect();
            pa.sort();
            pb.sort();
            prop_assert_eq!(pa, pb);
        }
    }
}
