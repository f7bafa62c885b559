//! Topic model evaluation by word agreement.
//!
//! A trained topic model is exported as a vocabulary, a topic-word matrix and
//! a document-topic matrix. Composing the two gives each document a word
//! distribution whose top-weighted words summarize the document from the
//! model's point of view. Those topical words are then compared with
//! reference keywords (from an LLM or a human annotator) using four scores:
//!
//! * word overlap after stemming ([`scores::s_overlap`]),
//! * WordNet synset overlap ([`scores::s_synset`]),
//! * optimal assignment over embedding cosine distances ([`scores::s_oa`]),
//! * optimal transport over the same costs, honoring word weights ([`scores::s_ot`]).
//!
//! Baseline metrics (topic diversity, NPMI coherence), Pearson correlation
//! between metric series and the LLM-vs-human gap live in [`baseline`].
//! Keyword acquisition from OpenAI-compatible endpoints lives in [`llm`].

pub mod baseline;
pub mod corpus;
pub mod lexres;
pub mod llm;
pub mod par;
pub mod scores;
pub mod topical;

pub use corpus::{Document, KeywordSet, KeywordSource, ModelArtifact, ScoreReport, Vocabulary};
pub use par::Parallelism;
pub use topical::WeightedWordSet;
