//! WordNet `index.{noun,verb,adj,adv}` parsing and synset lookup.
//!
//! Index line layout (see `wndb(5WN)`):
//!
//! ```text
//! lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt synset_offset [synset_offset...]
//! ```
//!
//! Lines starting with a space are the license header.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use super::LexError;
use crate::corpus::normalize_word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    AdjSatellite,
}

impl Pos {
    pub fn tag(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adj => 'a',
            Pos::Adv => 'r',
            Pos::AdjSatellite => 's',
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        Some(match s {
            "n" => Pos::Noun,
            "v" => Pos::Verb,
            "a" => Pos::Adj,
            "r" => Pos::Adv,
            "s" => Pos::AdjSatellite,
            _ => return None,
        })
    }

    /// Morphological detachment rules used to reduce inflected forms.
    fn substitutions(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Pos::Noun => &[
                ("s", ""),
                ("ses", "s"),
                ("xes", "x"),
                ("zes", "z"),
                ("ches", "ch"),
                ("shes", "sh"),
                ("men", "man"),
                ("ies", "y"),
            ],
            Pos::Verb => {
                &[("s", ""), ("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"), ("ed", ""), ("ing", "e"), ("ing", "")]
            }
            Pos::Adj | Pos::AdjSatellite => &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
            Pos::Adv => &[],
        }
    }
}

/// A synset identifier: byte offset into the data file plus part of speech.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId {
    pub offset: u32,
    pub pos: Pos,
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}.{}", self.offset, self.pos.tag())
    }
}

impl FromStr for SynsetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (off, pos) = s.split_once('.').ok_or_else(|| format!("no '.' in synset id {s:?}"))?;
        Ok(SynsetId {
            offset: off.parse().map_err(|_| format!("bad offset in {s:?}"))?,
            pos: Pos::from_tag(pos).ok_or_else(|| format!("bad pos in {s:?}"))?,
        })
    }
}

const INDEX_FILES: [(&str, &str, Pos); 4] = [
    ("index.noun", "noun.exc", Pos::Noun),
    ("index.verb", "verb.exc", Pos::Verb),
    ("index.adj", "adj.exc", Pos::Adj),
    ("index.adv", "adv.exc", Pos::Adv),
];

/// Lemma to synset lookup merged over all parts of speech.
#[derive(Clone, Debug, Default)]
pub struct SynsetIndex {
    entries: HashMap<String, BTreeSet<SynsetId>>,
    exceptions: HashMap<(Pos, String), Vec<String>>,
}

fn empty() -> &'static BTreeSet<SynsetId> {
    static EMPTY: OnceLock<BTreeSet<SynsetId>> = OnceLock::new();
    EMPTY.get_or_init(BTreeSet::new)
}

impl SynsetIndex {
    /// Build an index from explicit `(lemma, synsets)` pairs.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<SynsetId>)>,
        S: AsRef<str>,
    {
        let mut index = SynsetIndex::default();
        for (lemma, ids) in entries {
            index.insert(lemma.as_ref(), ids);
        }
        index
    }

    fn insert(&mut self, lemma: &str, ids: Vec<SynsetId>) {
        let key = lemma.to_lowercase();
        if key.contains('_') {
            self.entries.entry(key.replace('_', " ")).or_default().extend(ids.iter().copied());
        }
        self.entries.entry(key).or_default().extend(ids);
    }

    /// Parse one index file's contents, tagging entries with `pos`.
    pub fn parse_index(&mut self, text: &str, file: &str) -> Result<(), LexError> {
        for (n, line) in text.lines().enumerate() {
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let (lemma, ids) =
                parse_index_line(line).map_err(|msg| LexError::Malformed { path: file.into(), line: n + 1, msg })?;
            self.insert(lemma, ids);
        }
        Ok(())
    }

    fn parse_exceptions(&mut self, text: &str, pos: Pos) {
        for line in text.lines() {
            let mut fields = line.split_whitespace();
            if let Some(inflected) = fields.next() {
                let bases: Vec<String> = fields.map(str::to_string).collect();
                if !bases.is_empty() {
                    self.exceptions.insert((pos, inflected.to_string()), bases);
                }
            }
        }
    }

    /// Exact lemma lookup. Unknown words give the empty set.
    pub fn lookup(&self, word: &str) -> &BTreeSet<SynsetId> {
        self.entries.get(&normalize_word(word)).unwrap_or_else(|| empty())
    }

    /// Synsets of a word and of its base forms, for every part of speech.
    ///
    /// For each part of speech the word itself and the forms produced by one
    /// round of detachment rules (or the exception list, when loaded) are
    /// looked up; if none exists the rules are reapplied until a form is found.
    pub fn synsets(&self, word: &str) -> BTreeSet<SynsetId> {
        let word = normalize_word(word);
        let mut out = BTreeSet::new();
        for pos in [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv] {
            for base in self.morph(&word, pos) {
                out.extend(self.entries[&base].iter().filter(|id| id.pos == pos));
            }
        }
        out
    }

    fn has(&self, form: &str, pos: Pos) -> bool {
        self.entries.get(form).is_some_and(|ids| ids.iter().any(|id| id.pos == pos))
    }

    fn morph(&self, form: &str, pos: Pos) -> Vec<String> {
        let filter = |forms: Vec<String>| {
            let mut seen = BTreeSet::new();
            forms.into_iter().filter(|f| self.has(f, pos) && seen.insert(f.clone())).collect::<Vec<_>>()
        };
        if let Some(bases) = self.exceptions.get(&(pos, form.to_string())) {
            let mut forms = vec![form.to_string()];
            forms.extend(bases.iter().cloned());
            return filter(forms);
        }
        let apply = |forms: &[String]| -> Vec<String> {
            forms
                .iter()
                .flat_map(|f| {
                    pos.substitutions()
                        .iter()
                        .filter(move |(old, _)| f.len() > old.len() && f.ends_with(old))
                        .map(move |(old, new)| format!("{}{}", &f[..f.len() - old.len()], new))
                })
                .collect()
        };
        let mut forms = apply(&[form.to_string()]);
        let mut first = vec![form.to_string()];
        first.extend(forms.iter().cloned());
        let found = filter(first);
        if !found.is_empty() {
            return found;
        }
        while !forms.is_empty() {
            forms = apply(&forms);
            let found = filter(forms.clone());
            if !found.is_empty() {
                return found;
            }
        }
        Vec::new()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn parse_index_line(line: &str) -> Result<(&str, Vec<SynsetId>), String> {
    let mut f = line.split_whitespace();
    let mut next = |what: &str| f.next().ok_or_else(|| format!("missing {what}"));
    let lemma = next("lemma")?;
    let pos_tag = next("pos")?;
    let pos = Pos::from_tag(pos_tag).ok_or_else(|| format!("unknown pos {pos_tag:?}"))?;
    let count = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} {s:?}"));
    let synset_cnt = count(next("synset_cnt")?, "synset_cnt")?;
    let p_cnt = count(next("p_cnt")?, "p_cnt")?;
    for _ in 0..p_cnt {
        next("pointer symbol")?;
    }
    count(next("sense_cnt")?, "sense_cnt")?;
    count(next("tagsense_cnt")?, "tagsense_cnt")?;
    let mut ids = Vec::with_capacity(synset_cnt);
    for _ in 0..synset_cnt {
        let off = next("synset offset")?;
        if off.len() != 8 {
            return Err(format!("synset offset {off:?} is not 8 digits"));
        }
        let offset = off.parse().map_err(|_| format!("bad synset offset {off:?}"))?;
        ids.push(SynsetId { offset, pos });
    }
    if let Some(extra) = f.next() {
        return Err(format!("unexpected trailing field {extra:?}"));
    }
    Ok((lemma, ids))
}

/// Load the four WordNet index files from `dir`. Exception lists
/// (`noun.exc`, ...) are used when present.
pub fn load_synset_index(dir: &Path) -> Result<SynsetIndex, LexError> {
    let mut index = SynsetIndex::default();
    for (file, exc, pos) in INDEX_FILES {
        let path = dir.join(file);
        if !path.is_file() {
            return Err(LexError::MissingFile(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| LexError::io(&path, e))?;
        index.parse_index(&text, &path.display().to_string())?;
        let exc_path = dir.join(exc);
        if exc_path.is_file() {
            let text = std::fs::read_to_string(&exc_path).map_err(|e| LexError::io(&exc_path, e))?;
            index.parse_exceptions(&text, pos);
        }
    }
    Ok(index)
}
