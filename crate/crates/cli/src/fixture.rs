//! Seeded generator for the bundled 20-document fixture corpus.
//!
//! The documents, keyword answers and human keywords are fixed text. The
//! topic model (phi, theta) and the word embeddings are drawn from a seeded
//! RNG; the embeddings place words of one theme around a shared centroid so
//! that cosine distances are meaningful. The LLM transcript is recorded by
//! running the real keyword, topic and topic-aware code against a scripted
//! responder, so it always matches the current prompt templates.
//!
//! The WordNet slice is not generated; it is an excerpt of the real
//! database and ships with the fixture.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use topiceval::corpus::{write_documents, write_keywords, Document, KeywordSet, KeywordSource, Vocabulary};
use topiceval::llm::{
    generate_collection_topics, query_keywords_batch, query_topic_aware_batch, ChatRequest, ChatTransport,
    RecordingTransport, RunLog, TransportError,
};
use topiceval::ModelArtifact;

use crate::config::RunConfig;

pub const THEMES: [&str; 4] = ["hardware", "space", "hockey", "film"];

pub const THEME_WORDS: [[&str; 15]; 4] = [
    [
        "drive",
        "disk",
        "scsi",
        "controller",
        "card",
        "memory",
        "driver",
        "floppy",
        "ide",
        "bios",
        "system",
        "computer",
        "board",
        "cable",
        "boot",
    ],
    [
        "space",
        "nasa",
        "orbit",
        "launch",
        "shuttle",
        "moon",
        "mission",
        "satellite",
        "rocket",
        "earth",
        "station",
        "solar",
        "planet",
        "lunar",
        "probe",
    ],
    [
        "game", "team", "season", "player", "hockey", "goal", "league", "playoff", "coach", "win", "score", "fan",
        "ice", "period", "goalie",
    ],
    [
        "film",
        "movie",
        "director",
        "actor",
        "festival",
        "cinema",
        "drama",
        "scene",
        "studio",
        "award",
        "release",
        "story",
        "role",
        "camera",
        "australian",
    ],
];

pub const GENERAL_WORDS: [&str; 10] =
    ["time", "year", "work", "good", "make", "new", "people", "problem", "question", "data"];

/// Keyword words deliberately left without an embedding.
pub const OOV_WORDS: [&str; 3] = ["jumpers", "biopic", "nhill"];

pub const EMBEDDING_DIM: usize = 12;

/// One fixture document and every scripted answer about it.
pub struct FixtureDoc {
    pub text: &'static str,
    pub keywords_answer: &'static str,
    pub human: &'static [&'static str],
    pub topics_answer: &'static str,
    pub selection_answer: &'static str,
    pub topic_keywords: &'static [(&'static str, &'static str)],
}

/// Document `i` belongs to theme `i % 4`.
pub const DOCS: [FixtureDoc; 20] = [
    FixtureDoc {
        text: "My new SCSI controller card will not boot the system. The BIOS finds the hard drive but the driver \
               for the card hangs on startup. Is the cable or the controller to blame?",
        keywords_answer: "scsi, controller, bios, driver, boot",
        human: &["scsi", "controller", "card", "boot", "bios"],
        topics_answer: "Computer hardware",
        selection_answer: "Computer hardware",
        topic_keywords: &[("Computer hardware", "scsi controller, bios, driver, hard drive, cable")],
    },
    FixtureDoc {
        text: "NASA plans to launch a new satellite into polar orbit next year. The mission will study solar wind \
               near the Earth before the satellite moves to a higher station orbit.",
        keywords_answer: "1. NASA\n2. satellite\n3. orbit\n4. launch\n5. solar wind",
        human: &["nasa", "satellite", "orbit", "solar", "mission"],
        topics_answer: "Space exploration",
        selection_answer: "Space exploration",
        topic_keywords: &[("Space exploration", "satellite, orbit, nasa, launch, mission")],
    },
    FixtureDoc {
        text: "The team won the game in overtime after the coach pulled the goalie. Their top player scored twice \
               in the third period and the fans went wild.",
        keywords_answer: "Keywords: hockey, overtime, coach, goalie, period",
        human: &["hockey", "game", "team", "coach", "goal"],
        topics_answer: "Sports",
        selection_answer: "Sports",
        topic_keywords: &[("Sports", "hockey, overtime, goalie, team, fans")],
    },
    FixtureDoc {
        text: "The director's new film opened the festival to a standing ovation. Critics praised the lead actor \
               and the camera work in the final scene.",
        keywords_answer: "film, director, festival, actor, camera",
        human: &["film", "festival", "director", "actor", "critic"],
        topics_answer: "Film industry",
        selection_answer: "Film industry",
        topic_keywords: &[("Film industry", "film, festival, premiere, director, cinema")],
    },
    FixtureDoc {
        text: "Installing a second IDE drive made the floppy disappear from the BIOS. I swapped the cable and \
               jumpers on the board but the system still sees only one disk.",
        keywords_answer: "Here are the keywords:\n- IDE\n- floppy\n- BIOS\n- jumpers\n- cable",
        human: &["ide", "drive", "floppy", "bios", "jumper"],
        topics_answer: "computer hardware",
        selection_answer: "Computer hardware",
        topic_keywords: &[("Computer hardware", "ide drive, floppy, jumpers, bios, motherboard")],
    },
    FixtureDoc {
        text: "The shuttle crew docked with the space station and began repairs. The rocket that will carry the \
               lunar lander is still being tested at the launch site.",
        keywords_answer: "shuttle; space station; rocket; lunar lander; launch",
        human: &["shuttle", "station", "rocket", "lunar", "crew"],
        topics_answer: "Space exploration\nEngineering",
        selection_answer: "Space exploration",
        topic_keywords: &[("Space exploration", "shuttle, space station, rocket, lunar lander, crew")],
    },
    FixtureDoc {
        text: "The league suspended the player for a high hit during the playoff game. His coach said the team \
               will appeal before the next season starts.",
        keywords_answer: "league, suspension, playoff, hit, appeal",
        human: &["league", "player", "suspension", "playoff", "coach"],
        topics_answer: "Sports\nLaw",
        selection_answer: "Sports",
        topic_keywords: &[("Sports", "suspension, league, playoff, appeal, player")],
    },
    FixtureDoc {
        text: "The studio delayed the release of the drama after the story was rewritten. Several actors left the \
               movie and the director may leave as well.",
        keywords_answer: "\"studio\", \"release\", \"drama\", \"rewrite\", \"actors\"",
        human: &["studio", "movie", "release", "drama", "director"],
        topics_answer: "Film industry",
        selection_answer: "none",
        topic_keywords: &[],
    },
    FixtureDoc {
        text: "How much memory does this board take? The manual says four SIMM slots but the computer only counts \
               half of the memory at boot.",
        keywords_answer: "memory, simm, board, boot, manual",
        human: &["memory", "simm", "motherboard", "ram", "boot"],
        topics_answer: "Computer hardware",
        selection_answer: "Computer hardware",
        topic_keywords: &[("Computer hardware", "memory, simm, motherboard, ram, boot")],
    },
    FixtureDoc {
        text: "Astronomers think the planet has a thin atmosphere. A flight to the moon and a longer mission past \
               Earth orbit would need a heavier rocket.",
        keywords_answer: "I cannot help with that.",
        human: &["planet", "atmosphere", "moon", "mission", "rocket"],
        topics_answer: "Space exploration",
        selection_answer: "Space exploration",
        topic_keywords: &[("Space exploration", "planet, atmosphere, moon, flight, rocket")],
    },
    FixtureDoc {
        text: "Our goalie stopped forty shots on the ice last night. The puck dropped late and the score stayed \
               tied until the final period.",
        keywords_answer: "goalie, shots, puck, ice, tie",
        human: &["goalie", "puck", "ice", "score", "period"],
        topics_answer: "sports",
        selection_answer: "Sports",
        topic_keywords: &[("Sports", "goalie, puck, saves, ice, period")],
    },
    FixtureDoc {
        text: "The actor won an award for a role in a small film about a fishing town. The movie was shot with one \
               camera in twelve days.",
        keywords_answer: "actor, award, role, fishing town, low budget",
        human: &["actor", "award", "role", "movie", "camera"],
        topics_answer: "Film industry\nAwards",
        selection_answer: "Film industry",
        topic_keywords: &[("Film industry", "actor, award, independent film, role, camera")],
    },
    FixtureDoc {
        text: "The driver for my video card crashes the system when I open a second window. Is there a newer \
               driver, or is the card failing?",
        keywords_answer: "video card, driver, crash, window, system",
        human: &["driver", "video", "card", "crash", "window"],
        topics_answer: "Computer hardware\nSoftware",
        selection_answer: "Computer hardware\nSoftware",
        topic_keywords: &[
            ("Computer hardware", "video card, driver, crash, graphics, system"),
            ("Software", "driver update, crash, window, system, software"),
        ],
    },
    FixtureDoc {
        text: "Solar panels on the satellite failed after launch. Engineers at NASA hope a software update can \
               recover the mission.",
        keywords_answer: "solar panels, satellite, nasa, failure, software update",
        human: &["satellite", "solar", "nasa", "mission", "launch"],
        topics_answer: "Space exploration\nsoftware",
        selection_answer: "Space exploration\nSoftware",
        topic_keywords: &[
            ("Space exploration", "satellite, solar panel, nasa, mission, recovery"),
            ("Software", "software update, recovery, mission"),
        ],
    },
    FixtureDoc {
        text: "The season ended for the team after a playoff loss. Fans blamed the coach, while the players said \
               the league schedule was too long.",
        keywords_answer: "season, playoff, loss, coach, fans",
        human: &["season", "team", "playoff", "coach", "fan"],
        topics_answer: "Sports",
        selection_answer: "Sports",
        topic_keywords: &[("Sports", "season, playoff, loss, coach, fans")],
    },
    FixtureDoc {
        text: "Wrong World. Wrong World is a 1985 Australian film directed by Ian Pringle. It was filmed in Nhill \
               and Melbourne in Victoria Australia.",
        keywords_answer: "world, film, australian, directed, victoria",
        human: &["film", "movie", "directed", "director", "australian", "melbourne", "victoria"],
        topics_answer: "Film industry",
        selection_answer: "Film industry",
        topic_keywords: &[("Film industry", "film, industry, production, cinema, entertainment")],
    },
    FixtureDoc {
        text: "My hard disk makes a clicking noise and data is lost. Should I replace the drive or try a new \
               controller first?",
        keywords_answer: "hard disk, clicking, data loss, drive, controller",
        human: &["disk", "drive", "data", "controller", "noise"],
        topics_answer: "Computer hardware",
        selection_answer: "Computer hardware",
        topic_keywords: &[("Computer hardware", "hard disk, data loss, drive, controller, clicking")],
    },
    FixtureDoc {
        text: "The probe will orbit the moon for a year. Its camera can map the lunar surface, and the data \
               returns to Earth each day.",
        keywords_answer: "probe, lunar orbit, moon, camera, mapping",
        human: &["probe", "moon", "lunar", "orbit", "camera"],
        topics_answer: "Space exploration",
        selection_answer: "Space exploration",
        topic_keywords: &[("Space exploration", "probe, lunar orbit, mapping, moon, camera")],
    },
    FixtureDoc {
        text: "The new coach wants the team to win more games at home. The player who scored the winning goal was \
               traded a week later.",
        keywords_answer: "coach, team, home games, goal, trade",
        human: &["coach", "team", "win", "goal", "trade"],
        topics_answer: "Sports",
        selection_answer: "Sports",
        topic_keywords: &[("Sports", "coach, trade, goal, home games, team")],
    },
    FixtureDoc {
        text: "Audience numbers at the cinema fell this year. The studio hopes a story about a famous director \
               will bring viewers back.",
        keywords_answer: "audience, cinema, studio, box office, director",
        human: &["audience", "cinema", "studio", "director", "viewers"],
        topics_answer: "Film industry",
        selection_answer: "Film industry",
        topic_keywords: &[("Film industry", "cinema, audience, studio, box office, biopic")],
    },
];

pub fn doc_id(i: usize) -> String {
    format!("d{i:02}")
}

pub fn documents() -> Vec<Document> {
    DOCS.iter().enumerate().map(|(i, d)| Document::new(doc_id(i), d.text)).collect()
}

pub const CONFIG: &str = r#"# Bundled fixture: 20 documents, 4 topics, replayed LLM answers.
n_topical = 10
num_keywords = 5
metrics = ["s_overlap", "s_synset", "s_oa", "s_ot"]
output_dir = "out"
td_top_words = 25
npmi_top_words = 10

[paths]
model = "model"
documents = "documents.jsonl"
human_keywords = "human_keywords.jsonl"
embeddings = "embeddings.txt"
wordnet = "wordnet"
reference_corpus = "documents.jsonl"
transcript = "transcript.jsonl"

[llm]
model_name = "fixture-model"
"#;

/// Answers LLM prompts about fixture documents.
pub struct ScriptedResponder;

impl ScriptedResponder {
    fn answer(prompt: &str) -> Option<String> {
        let doc = DOCS.iter().find(|d| prompt.contains(d.text))?;
        if prompt.starts_with("Suggest exactly") {
            return Some(doc.keywords_answer.into());
        }
        if prompt.starts_with("You are building") {
            return Some(doc.topics_answer.into());
        }
        if prompt.starts_with("Topics of the collection") {
            return Some(doc.selection_answer.into());
        }
        let topic = prompt.strip_prefix("The document below belongs to the topic \"")?.split('"').next()?;
        doc.topic_keywords.iter().find(|(t, _)| *t == topic).map(|(_, a)| a.to_string())
    }
}

impl ChatTransport for ScriptedResponder {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        Self::answer(request.prompt()).ok_or_else(|| TransportError::fatal("no scripted answer for this prompt"))
    }
}

fn vocabulary() -> Vec<String> {
    THEME_WORDS.iter().flatten().chain(GENERAL_WORDS.iter()).map(|w| w.to_string()).collect()
}

fn artifact(rng: &mut ChaCha8Rng) -> Result<ModelArtifact> {
    let vocab = vocabulary();
    let v = vocab.len();
    let k = THEMES.len();
    let mut phi = Array2::<f64>::zeros((k, v));
    for t in 0..k {
        for (j, w) in vocab.iter().enumerate() {
            let own = THEME_WORDS[t].contains(&w.as_str());
            phi[[t, j]] = if own { 1.0 + 4.0 * rng.gen::<f64>() } else { 0.01 + 0.05 * rng.gen::<f64>() };
        }
        let s = phi.row(t).sum();
        phi.row_mut(t).mapv_inplace(|x| x / s);
    }
    let mut theta = Array2::<f64>::zeros((DOCS.len(), k));
    for d in 0..DOCS.len() {
        let main = d % k;
        for t in 0..k {
            theta[[d, t]] = if t == main { 3.0 + 3.0 * rng.gen::<f64>() } else { rng.gen::<f64>() };
        }
        let s = theta.row(d).sum();
        theta.row_mut(d).mapv_inplace(|x| x / s);
    }
    let ids = (0..DOCS.len()).map(doc_id).collect();
    Ok(ModelArtifact::new(Vocabulary::new(vocab)?, phi, theta, ids)?)
}

/// Theme of every single-token word that needs an embedding.
fn embedding_words() -> BTreeMap<String, Option<usize>> {
    let mut words: BTreeMap<String, Option<usize>> = BTreeMap::new();
    for (t, list) in THEME_WORDS.iter().enumerate() {
        for w in list {
            words.insert(w.to_string(), Some(t));
        }
    }
    for w in GENERAL_WORDS {
        words.insert(w.to_string(), None);
    }
    let split = |s: &str| -> Vec<String> { s.split([',', ';', '\n']).map(|x| x.to_string()).collect() };
    for (i, d) in DOCS.iter().enumerate() {
        let theme = i % THEMES.len();
        let mut items: Vec<String> = d.human.iter().map(|w| w.to_string()).collect();
        items.extend(split(d.keywords_answer));
        for (_, a) in d.topic_keywords {
            items.extend(split(a));
        }
        for item in items {
            let w: String =
                item.trim().trim_start_matches(|c: char| !c.is_alphabetic()).trim_matches('"').to_lowercase();
            if w.is_empty() || w.contains(' ') || !w.chars().all(|c| c.is_ascii_alphabetic()) {
                continue;
            }
            words.entry(w).or_insert(Some(theme));
        }
    }
    for w in OOV_WORDS {
        words.remove(w);
    }
    words
}

fn write_embeddings(path: &Path, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let centroids: Vec<Vec<f64>> = (0..THEMES.len()).map(|_| (0..EMBEDDING_DIM).map(|_| normal()).collect()).collect();
    let mut out = String::new();
    for (word, theme) in embedding_words() {
        let v: Vec<String> = (0..EMBEDDING_DIM)
            .map(|i| {
                let x = match theme {
                    Some(t) => centroids[t][i] + 0.6 * normal(),
                    None => normal(),
                };
                format!("{x:.6}")
            })
            .collect();
        out.push_str(&word);
        out.push(' ');
        out.push_str(&v.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn human_keywords() -> Result<Vec<KeywordSet>> {
    DOCS.iter()
        .enumerate()
        .map(|(i, d)| Ok(KeywordSet::new(doc_id(i), d.human.iter(), KeywordSource::Human)?))
        .collect()
}

/// Record every exchange the plain and topic-aware pipelines make for
/// the fixture documents.
fn record_transcript(cfg: &RunConfig, path: &Path) -> Result<()> {
    if path.exists() {
        std::fs::remove_file(path)?;
    }
    let llm = topiceval::llm::LlmConfig { parallelism: 1, ..cfg.llm_config() };
    let docs = documents();
    let rec = RecordingTransport::new(ScriptedResponder, path)?;
    let log = RunLog::new();
    query_keywords_batch(&llm, &rec, &docs, &log, None)?;
    let topics = generate_collection_topics(&llm, &rec, &docs, &log, None)?;
    query_topic_aware_batch(&llm, &rec, &docs, &topics.refined, &log, None)?;
    Ok(())
}

/// Write the fixture corpus (everything except the WordNet slice) to `dir`.
pub fn write_corpus20(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    artifact(&mut rng)?.write_dir(&dir.join("model"))?;
    write_embeddings(&dir.join("embeddings.txt"), &mut rng)?;
    write_documents(&documents(), &dir.join("documents.jsonl"))?;
    write_keywords(&human_keywords()?, &dir.join("human_keywords.jsonl"))?;
    let config = CONFIG.replacen("n_topical = 10\n", &format!("n_topical = 10\nseed = {seed}\n"), 1);
    let mut f = std::fs::File::create(dir.join("config.toml"))?;
    f.write_all(config.as_bytes())?;
    let cfg = RunConfig::load(Some(&dir.join("config.toml")), &[])?;
    record_transcript(&cfg, &dir.join("transcript.jsonl"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_prompt_kind_is_answered() {
        let cfg = RunConfig::load(None, &["llm.model_name=\"fixture-model\"".into()]).unwrap();
        let llm = cfg.llm_config();
        let d = &DOCS[15];
        let ask = |p: String| ScriptedResponder.complete(&llm.request(p));
        assert_eq!(ask(topiceval::llm::keyword_prompt(d.text, 5)).unwrap(), d.keywords_answer);
        assert_eq!(
            ask(topiceval::llm::topic_keyword_prompt(d.text, "Film industry", 5)).unwrap(),
            "film, industry, production, cinema, entertainment"
        );
        assert!(ask(topiceval::llm::topic_keyword_prompt(d.text, "Sports", 5)).is_err());
        assert!(ask("unrelated".into()).is_err());
    }

    #[test]
    fn oov_words_really_lack_embeddings() {
        let words = embedding_words();
        for w in OOV_WORDS {
            assert!(!words.contains_key(w));
        }
        assert!(words.contains_key("victoria"));
        assert_eq!(words["drive"], Some(0));
    }
}
