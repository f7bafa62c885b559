use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use topiceval::corpus::{Document, KeywordSource};
use topiceval::llm::{
    generate_collection_topics, keyword_prompt, query_keywords, query_topic_aware_batch, query_topic_aware_keywords,
    topic_keyword_prompt, topic_selection_prompt, ChatRequest, ChatTransport, LlmConfig, LogEvent, RunLog, Topic,
    TopicList, TranscriptEntry, TranscriptTransport, TransportError,
};

const DISC: &str = "It's my understanding that, when you format a magneto-optical disc, (1) the formatting software \
installs a driver on the disc, (2) if you insert the disc in a different drive, then this driver is loaded into the \
computer's memory and then controls the drive, and (3) if this driver is incompatible with the drive, then the disc \
can not be mounted and/or properly read/written. Is that correct?";

const WRONG_WORLD: &str = "Wrong World. Wrong World is a 1985 Australian film directed by Ian Pringle. It was filmed \
in Nhill and Melbourne in Victoria Australia.";

fn cfg() -> LlmConfig {
    LlmConfig { model_name: "fixture".into(), retries: 0, backoff_ms: 0, ..LlmConfig::default() }
}

fn topics(labels: &[&str]) -> TopicList {
    TopicList { topics: labels.iter().map(|l| Topic { label: l.to_string(), frequency: 2 }).collect() }
}

/// Answers by looking at the prompt text.
struct Scripted<F> {
    answer: F,
    prompts: Mutex<Vec<String>>,
}

impl<F: Fn(&str) -> Option<String> + Send + Sync> Scripted<F> {
    fn new(answer: F) -> Self {
        Scripted { answer, prompts: Mutex::new(Vec::new()) }
    }
}

impl<F: Fn(&str) -> Option<String> + Send + Sync> ChatTransport for Scripted<F> {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let prompt = request.prompt().to_string();
        self.prompts.lock().unwrap().push(prompt.clone());
        (self.answer)(&prompt).ok_or_else(|| TransportError::fatal("scripted failure"))
    }
}

#[test]
fn plain_keywords_from_fixture_response() {
    let c = cfg();
    let t = TranscriptTransport::from_entries([
        TranscriptEntry::for_request(
            &c.request(keyword_prompt(DISC, 5)),
            "formatting, magneto-optical, driver, disc, incompatible",
        ),
        TranscriptEntry::for_request(
            &c.request(keyword_prompt(WRONG_WORLD, 5)),
            "world, film, australian, directed, victoria",
        ),
    ]);
    let log = RunLog::new();
    let a = query_keywords(&c, &t, &Document::new("disc", DISC), &log).unwrap();
    assert_eq!(a.words, ["formatting", "magneto-optical", "driver", "disc", "incompatible"]);
    let b = query_keywords(&c, &t, &Document::new("ww", WRONG_WORLD), &log).unwrap();
    assert_eq!(b.words, ["world", "film", "australian", "directed", "victoria"]);
    assert!(log.is_empty());
}

#[test]
fn rerun_is_identical() {
    let c = cfg();
    let t = TranscriptTransport::from_entries([TranscriptEntry::for_request(
        &c.request(keyword_prompt(DISC, 5)),
        "1. Formatting\n2. Driver\n3. driver\n4. Disc",
    )]);
    let doc = Document::new("disc", DISC);
    let first = query_keywords(&c, &t, &doc, &RunLog::new()).unwrap();
    let second = query_keywords(&c, &t, &doc, &RunLog::new()).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.words, ["formatting", "driver", "disc"]);
}

#[test]
fn topic_aware_from_scripted_transcript() {
    let c = cfg();
    let list = topics(&["Sports", "Film industry", "Politics"]);
    let t = TranscriptTransport::from_entries([
        TranscriptEntry::for_request(&c.request(topic_selection_prompt(WRONG_WORLD, &list.topics)), "Film industry"),
        TranscriptEntry::for_request(
            &c.request(topic_keyword_prompt(WRONG_WORLD, "Film industry", 5)),
            "film, industry, production, cinema, entertainment",
        ),
    ]);
    let log = RunLog::new();
    let ks = query_topic_aware_keywords(&c, &t, &Document::new("ww", WRONG_WORLD), &list, &log).unwrap();
    assert_eq!(ks.words, ["film", "industry", "production", "cinema", "entertainment"]);
    assert_eq!(ks.source, KeywordSource::LlmTopicAware);
    assert!(log.is_empty());
}

#[test]
fn overlapping_topics_are_unioned() {
    let c = cfg();
    let t = Scripted::new(|p: &str| {
        Some(if p.starts_with("Topics of the collection") {
            "1. Film industry\n2. australia".into()
        } else if p.contains("\"Film industry\"") {
            "film, director, australian".into()
        } else {
            "australian, melbourne, film, victoria".into()
        })
    });
    let list = topics(&["Film industry", "Australia"]);
    let ks = query_topic_aware_keywords(&c, &t, &Document::new("ww", WRONG_WORLD), &list, &RunLog::new()).unwrap();
    assert_eq!(ks.words, ["film", "director", "australian", "melbourne", "victoria"]);
    assert_eq!(t.prompts.lock().unwrap().len(), 3);
}

#[test]
fn empty_or_unknown_selection_falls_back_to_plain() {
    let c = cfg();
    let list = topics(&["Film industry"]);
    for selection in ["none", "Gardening", ""] {
        let t = Scripted::new(|p: &str| {
            Some(if p.starts_with("Topics of the collection") {
                selection.to_string()
            } else if p.starts_with("Suggest exactly") {
                "world, film, australian, directed, victoria".into()
            } else {
                return None;
            })
        });
        let log = RunLog::new();
        let ks = query_topic_aware_keywords(&c, &t, &Document::new("ww", WRONG_WORLD), &list, &log).unwrap();
        assert_eq!(ks.words, ["world", "film", "australian", "directed", "victoria"]);
        assert_eq!(ks.source, KeywordSource::LlmPlain);
        let entries = log.entries();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].doc_id, "ww");
        assert!(matches!(&entries[0].event, LogEvent::TopicAwareFallback { selection: s } if s == selection));
    }
}

#[test]
fn topic_aware_batch_keeps_document_order() {
    let c = LlmConfig { parallelism: 3, ..cfg() };
    let docs: Vec<Document> = (0..8).map(|i| Document::new(format!("d{i}"), format!("document number {i}"))).collect();
    let t = Scripted::new(|p: &str| {
        let n = p.chars().rfind(char::is_ascii_digit).unwrap();
        Some(if p.starts_with("Topics of the collection") { "Alpha".into() } else { format!("w{n}, common") })
    });
    let out = query_topic_aware_batch(&c, &t, &docs, &topics(&["Alpha"]), &RunLog::new(), None).unwrap();
    let ids: Vec<&str> = out.iter().map(|k| k.doc_id.as_str()).collect();
    assert_eq!(ids, ["d0", "d1", "d2", "d3", "d4", "d5", "d6", "d7"]);
    assert_eq!(out[5].words, ["w5", "common"]);
}

#[test]
fn one_document_proposing_film() {
    let c = cfg();
    let t = Scripted::new(|_: &str| Some("film".into()));
    let g = generate_collection_topics(&c, &t, &[Document::new("d", WRONG_WORLD)], &RunLog::new(), None).unwrap();
    assert_eq!(g.raw.topics, [Topic { label: "film".into(), frequency: 1 }]);
    assert!(g.refined.is_empty());
}

#[test]
fn same_label_in_two_cases_is_merged() {
    let c = cfg();
    let t = Scripted::new(|p: &str| Some(if p.contains("first") { "Film".into() } else { "film".into() }));
    let docs = [Document::new("a", "the first text"), Document::new("b", "the second text")];
    let g = generate_collection_topics(&c, &t, &docs, &RunLog::new(), None).unwrap();
    assert_eq!(g.raw.topics, [Topic { label: "Film".into(), frequency: 2 }]);
    assert_eq!(g.refined, g.raw);
}

fn twenty_doc_script(p: &str) -> Option<String> {
    let marker = p.split("document-").nth(1)?;
    let i: usize = marker[..2].parse().ok()?;
    let answers = [
        "Film industry",
        "Sports\nFilm industry",
        "Politics",
        "film industry",
        "Music",
        "Sport",
        "Politics, Economy",
        "Music",
        "Films",
        "Sports",
        "Economy",
        "Film industry",
        "Weather",
        "Politics",
        "Sports",
        "Music\nFilm industry",
        "Economics",
        "Politics",
        "Film",
        "Space",
    ];
    Some(answers[i].to_string())
}

fn twenty_docs() -> Vec<Document> {
    (0..20).map(|i| Document::new(format!("d{i:02}"), format!("text of document-{i:02}"))).collect()
}

fn t(label: &str, frequency: usize) -> Topic {
    Topic { label: label.into(), frequency }
}

#[test]
fn twenty_document_walkthrough() {
    // Worked by hand from the script above, one document at a time.
    // Raw counts in order of first appearance:
    //   Film industry 5 (d00 d01 d03 d11 d15), Sports 3 (d01 d09 d14),
    //   Politics 4 (d02 d06 d13 d17), Music 3 (d04 d07 d15), Sport 1 (d05),
    //   Economy 2 (d06 d10), Films 1 (d08), Weather 1, Economics 1, Film 1, Space 1.
    // Stems: Sport/Sports -> sport, Film/Films -> film, Economy -> economi but
    // Economics -> econom, so those two stay apart.
    // Threshold max(2, ceil(20/100)) = 2 removes Weather, Economics, Space.
    let c = cfg();
    let s = Scripted::new(twenty_doc_script);
    let g = generate_collection_topics(&c, &s, &twenty_docs(), &RunLog::new(), None).unwrap();
    assert_eq!(
        g.raw.topics,
        [
            t("Film industry", 5),
            t("Sports", 3),
            t("Politics", 4),
            t("Music", 3),
            t("Sport", 1),
            t("Economy", 2),
            t("Films", 1),
            t("Weather", 1),
            t("Economics", 1),
            t("Film", 1),
            t("Space", 1),
        ]
    );
    assert_eq!(
        g.refined.topics,
        [t("Film industry", 5), t("Sports", 4), t("Politics", 4), t("Music", 3), t("Economy", 2), t("Films", 2)]
    );

    // Each prompt shows the labels known before that document.
    let prompts = s.prompts.lock().unwrap();
    assert!(prompts[0].contains("(none yet)"));
    assert!(prompts[1].contains("- Film industry\n") && !prompts[1].contains("- Sports"));
    assert_eq!(prompts[19].matches("\n- ").count(), 10);
}

#[test]
fn topic_generation_resumes_from_checkpoint() {
    let c = cfg();
    let docs = twenty_docs();
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("topics.ck.json");

    let calls = AtomicUsize::new(0);
    let flaky = Scripted::new(|p: &str| {
        calls.fetch_add(1, Ordering::SeqCst);
        if p.contains("document-12") {
            None
        } else {
            twenty_doc_script(p)
        }
    });
    assert!(generate_collection_topics(&c, &flaky, &docs, &RunLog::new(), Some(&ck)).is_err());
    assert_eq!(calls.load(Ordering::SeqCst), 13);

    let s = Scripted::new(twenty_doc_script);
    let resumed = generate_collection_topics(&c, &s, &docs, &RunLog::new(), Some(&ck)).unwrap();
    assert_eq!(s.prompts.lock().unwrap().len(), 8);
    let fresh = generate_collection_topics(&c, &Scripted::new(twenty_doc_script), &docs, &RunLog::new(), None).unwrap();
    assert_eq!(resumed, fresh);

    let other: Vec<Document> = docs[..5].to_vec();
    assert!(generate_collection_topics(&c, &s, &other, &RunLog::new(), Some(&ck)).is_err());
}
