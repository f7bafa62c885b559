//! Prompt templates. Any change to their wording must bump [`PROMPT_VERSION`],
//! which is recorded in every output file.

use super::Topic;

pub const PROMPT_VERSION: &str = "1";

/// Wrap `text` in a backtick fence longer than any backtick run inside it,
/// so the document cannot close the fence or pose as instructions.
pub fn fence(text: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in text.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let f = "`".repeat((longest + 1).max(3));
    format!("{f}\n{text}\n{f}")
}

/// Keep at most `max_words` whitespace-separated words, cutting at a word
/// boundary. Returns the kept text and the original word count when
/// truncation happened.
pub fn truncate_words(text: &str, max_words: usize) -> (&str, Option<usize>) {
    let mut count = 0;
    let mut end = text.len();
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_word = false;
        } else if !in_word {
            in_word = true;
            count += 1;
            if count == max_words + 1 {
                end = i;
            }
        }
    }
    if count > max_words {
        (text[..end].trim_end(), Some(count))
    } else {
        (text, None)
    }
}

pub fn keyword_prompt(document: &str, n: usize) -> String {
    format!(
        "Suggest exactly {n} keywords that summarize the document below. \
         A keyword may be a single word or a short phrase.\n\
         Answer with one line containing the {n} keywords separated by commas, and nothing else.\n\n\
         Document:\n{}\n",
        fence(document)
    )
}

pub fn topic_generation_prompt(document: &str, topics: &[Topic]) -> String {
    let listed = if topics.is_empty() {
        "(none yet)".to_string()
    } else {
        topics.iter().map(|t| format!("- {}", t.label)).collect::<Vec<_>>().join("\n")
    };
    format!(
        "You are building a list of general topics for a collection of documents.\n\
         Topics found so far:\n{listed}\n\n\
         Name the topics of the document below. Reuse a label from the list when it fits; \
         otherwise propose a new short, general label.\n\
         Answer with one topic label per line, and nothing else.\n\n\
         Document:\n{}\n",
        fence(document)
    )
}

pub fn topic_selection_prompt(document: &str, topics: &[Topic]) -> String {
    let listed = topics.iter().map(|t| format!("- {}", t.label)).collect::<Vec<_>>().join("\n");
    format!(
        "Topics of the collection:\n{listed}\n\n\
         Select the topics from this list that are relevant to the document below.\n\
         Answer with one selected topic label per line, copied exactly from the list, and nothing else. \
         Answer \"none\" if no topic applies.\n\n\
         Document:\n{}\n",
        fence(document)
    )
}

pub fn topic_keyword_prompt(document: &str, topic: &str, n: usize) -> String {
    format!(
        "The document below belongs to the topic \"{topic}\".\n\
         Suggest up to {n} indexing words for the document with respect to this topic. \
         An indexing word may be a single word or a short phrase.\n\
         Answer with one line containing the words separated by commas, and nothing else.\n\n\
         Document:\n{}\n",
        fence(document)
    )
}
