//! Turning free-form model answers into word lists.
//!
//! Grammar: the answer is split into lines, and a line containing commas or
//! semicolons is further split into items. A leading label such as
//! `Keywords:` is removed, lines that end in `:` are treated as preamble and
//! dropped, and each item loses list numbering (`1.`, `2)`, `(3)`, `[4]`),
//! bullets (`-`, `*`, `•`), emphasis markers, surrounding quotes and a
//! trailing period. Items longer than four words are sentences, not
//! keywords, and are dropped.

use std::collections::HashSet;

use crate::corpus::normalize_word;

const MAX_ITEM_WORDS: usize = 4;
const LABELS: [&str; 6] = ["keywords", "keyword", "topics", "topic", "labels", "answer"];

fn strip_label(line: &str) -> &str {
    let lower = line.to_lowercase();
    for label in LABELS {
        if lower.starts_with(label) {
            let rest = line[label.len()..].trim_start();
            if let Some(rest) = rest.strip_prefix(':').or_else(|| rest.strip_prefix(" -")) {
                return rest.trim_start();
            }
        }
    }
    line
}

fn strip_marker(item: &str) -> &str {
    let mut s = item.trim();
    loop {
        let before = s;
        s = s.trim_start_matches(['-', '*', '•', '·', '+']).trim_start();
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let rest = &s[digits..];
            if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
                if r.is_empty() || r.starts_with(char::is_whitespace) {
                    s = r.trim_start();
                }
            }
        }
        for (open, close) in [('(', ')'), ('[', ']')] {
            if let Some(r) = s.strip_prefix(open) {
                let d = r.len() - r.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                if d > 0 {
                    if let Some(r2) = r[d..].strip_prefix(close) {
                        s = r2.trim_start();
                    }
                }
            }
        }
        if s == before {
            return s;
        }
    }
}

fn clean_item(item: &str) -> String {
    let mut s = strip_marker(item).trim();
    loop {
        let before = s;
        s = s.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*' | '_' | '“' | '”' | '‘' | '’')).trim();
        s = s.strip_suffix('.').unwrap_or(s).trim();
        if s == before {
            break;
        }
    }
    normalize_word(s)
}

fn items(response: &str) -> (Vec<String>, usize, bool) {
    let mut out = Vec::new();
    let mut lines = 0;
    let mut separated = false;
    for raw in response.lines() {
        let line = strip_label(strip_marker(raw.trim()));
        if line.is_empty() || line.ends_with(':') {
            continue;
        }
        lines += 1;
        let parts: Vec<&str> = line.split([',', ';']).collect();
        separated |= parts.len() > 1;
        out.extend(parts.into_iter().map(clean_item));
    }
    out.retain(|w| !w.is_empty() && w.split(' ').count() <= MAX_ITEM_WORDS);
    (out, lines, separated)
}

fn dedup(words: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    words.into_iter().filter(|w| seen.insert(w.clone())).collect()
}

/// Parse a keyword answer. `expected` is the number of keywords asked for;
/// at most that many are returned. `None` when no keyword list is found.
pub fn parse_keywords(response: &str, expected: usize) -> Option<Vec<String>> {
    let (words, lines, separated) = items(response);
    if expected > 1 && lines == 1 && !separated {
        return None;
    }
    let mut words = dedup(words);
    words.truncate(expected);
    (!words.is_empty()).then_some(words)
}

/// Parse an answer listing labels (one per line or comma-separated),
/// keeping the original capitalization. Descriptions after a colon are
/// dropped.
pub fn parse_labels(response: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for raw in response.lines() {
        let line = strip_label(strip_marker(raw.trim()));
        if line.is_empty() || line.ends_with(':') {
            continue;
        }
        let line = line.split_once(':').map_or(line, |(head, _)| head);
        for part in line.split([',', ';']) {
            let mut s = strip_marker(part).trim();
            loop {
                let before = s;
                s = s.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*' | '“' | '”')).trim();
                s = s.strip_suffix('.').unwrap_or(s).trim();
                if s == before {
                    break;
                }
            }
            let label = s.split_whitespace().collect::<Vec<_>>().join(" ");
            if !label.is_empty() && seen.insert(normalize_word(&label)) {
                out.push(label);
            }
        }
    }
    out
}
